use std::f64::consts::TAU;

use g2forge::algebra::{contract_psi, decompose_3form, diamond, hodge_dual, standard_phi, transport, MetricData};
use g2forge::field::{FieldSpec, G2Field};
use g2forge::flow::{gauge_relation_residual, integrate, scaling_ode_check, FlowConfig, FlowVariant};
use g2forge::grid::Grid;
use g2forge::io::{read_field, write_field};
use g2forge::jet::Geometry;
use g2forge::operators::{nabla_field, v_of, PointOps};
use g2forge::spectral::{l_star_spectral, split_deformation};
use g2forge::symbols::{kernel_basis, kernel_dim, symbol_l, unpack};
use g2forge::variation::{first_variation_all, k_pairing, Deformation};
use g2forge::Tensor;
use nalgebra as na;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n: usize, seed: u64) -> G2Field {
    G2Field::random(&FieldSpec::new(vec![0], vec![n], vec![TAU], 0.1, seed)).unwrap()
}

fn flat(n: usize, period: f64) -> G2Field {
    G2Field::constant(Grid::new(vec![0], vec![n], vec![period]).unwrap(), &standard_phi()).unwrap()
}

fn grid_max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// Residuals at 16, 32 and 64 points must fall like `h²` or faster.
fn assert_converges(what: &str, residual: impl Fn(usize) -> f64) {
    let r: Vec<f64> = [16, 32, 64].iter().map(|&n| residual(n)).collect();
    assert!(r[2] < r[1] && r[1] < r[0], "{what}: residuals {r:?}");
    let worst = (r[0] / r[1]).min(r[1] / r[2]);
    assert!(worst > 3.6, "{what}: ratios too small, residuals {r:?}");
}

/// Band-limited contravariant vector field on a one-axis grid.
fn vector_field(grid: &Grid, seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<[f64; 4]> = (0..7).map(|_| std::array::from_fn(|_| rng.gen_range(-0.5..0.5))).collect();
    (0..grid.len())
        .map(|p| {
            let x = TAU * grid.coords(p)[0] / grid.periods[0];
            Tensor::from_fn(1, |i| {
                let c = &coef[i[0]];
                c[0] * x.cos() + c[1] * x.sin() + c[2] * (2.0 * x).cos() + c[3] * (2.0 * x).sin()
            })
        })
        .collect()
}

fn lie_decomposition_residual(n: usize) -> f64 {
    let field = random_field(n, 11);
    let geo = Geometry::new(&field).unwrap();
    let v = vector_field(&field.grid, 12);
    let lie = geo.lie_derivative_phi(&v);
    let lowered: Vec<Tensor> = v.iter().zip(&geo.metrics).map(|(v, m)| m.g.apply(v)).collect();
    let nv = nabla_field(&geo, &geo.to_frame_field(&lowered));
    let id = MetricData::identity();
    grid_max((0..field.len()).map(|p| {
        let f = &geo.frames[p];
        let phi = f.to_frame(&field.phi_samples[p]);
        let psi = f.to_frame(&geo.psis[p]);
        let t = f.to_frame(&geo.torsions[p]);
        let vf = f.to_frame(&lowered[p]);
        let lie_g = &nv[p] + &nv[p].transpose();
        let mut x = &v_of(&nv[p], &phi) * -0.5;
        x.axpy(1.0, &t.apply_left(&vf));
        let mut w = diamond(&(&lie_g * 0.5), &phi, &id);
        w += &contract_psi(&x, &psi, &id);
        (&f.to_coord(&w) - &lie[p]).max_abs()
    }))
}

#[test]
fn lie_derivative_decomposes_through_torsion() {
    assert_converges("Lie derivative", lie_decomposition_residual);
}

#[test]
fn differential_torsion_identities_converge() {
    let checks = |n: usize| {
        let field = random_field(n, 5);
        let geo = Geometry::new(&field).unwrap();
        geo.map_jets(|j| {
            let c = PointOps::new(j).curvature_checks();
            (c.div_tt_residual, c.nabla_t_psi_residual)
        })
    };
    assert_converges("div T^t", |n| grid_max(checks(n).into_iter().map(|c| c.0)));
    assert_converges("<nabla T, psi>", |n| grid_max(checks(n).into_iter().map(|c| c.1)));
}

#[test]
fn p1_split_converges_on_fields() {
    assert_converges("P1 split", |n| {
        let field = random_field(n, 6);
        let geo = Geometry::new(&field).unwrap();
        grid_max(geo.map_jets(|j| PointOps::new(j).trace_checks().p1_decomposition))
    });
}

#[test]
fn gauge_relation_converges() {
    assert_converges("HatP vs HatP2", |n| gauge_relation_residual(&random_field(n, 7)).unwrap());
}

#[test]
fn hilbert_integral_matches_traces() {
    let field = random_field(64, 8).with_fd_order(8);
    let geo = Geometry::new(&field).unwrap();
    let rows: Vec<[f64; 4]> = geo.map_jets(|j| {
        let o = PointOps::new(j);
        let vd = j.metric.vol_density;
        [
            o.densities().hilbert * vd,
            o.hat_p1().trace() * vd,
            o.tilde_p1().trace() * vd,
            o.p1().trace() * vd,
        ]
    });
    let int = |k: usize| field.grid.integrate(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
    let f = int(0);
    for (k, c) in [(1, -0.5), (2, -3.0 / 20.0), (3, 0.2)] {
        let rel = (c * int(k) - f).abs() / f.abs();
        assert!(rel < 1e-8, "trace {k}: relative error {rel:e}");
    }
}

fn lie_direction(field: &G2Field, y: &[Tensor]) -> Deformation {
    let geo = Geometry::new(field).unwrap();
    let m = MetricData::identity();
    let psi = hodge_dual(&standard_phi(), &m);
    let (h, x) = geo
        .lie_derivative_phi(y)
        .iter()
        .map(|w| decompose_3form(w, &field.phi_samples[0], &psi, &m).unwrap())
        .unzip();
    Deformation { h, x }
}

#[test]
fn flat_first_variation_vanishes_along_diffeomorphisms() {
    let field = flat(32, TAU);
    let d = lie_direction(&field, &vector_field(&field.grid, 21));
    for v in first_variation_all(&field, &d).unwrap() {
        assert!(v.fd_value.abs() < 1e-6, "{:?}: {:e}", v.fid, v.fd_value);
    }
}

/// The decomposed Lie derivative at the flat structure is `−𝖫*(Y)`; the
/// spectral form is exact, so the gap is fourth-order stencil error.
#[test]
fn lie_direction_matches_spectral_l_star() {
    let gap = |n: usize| {
        let field = flat(n, TAU);
        let y = vector_field(&field.grid, 21);
        let d = lie_direction(&field, &y);
        let mut sum = l_star_spectral(&field.grid, &y);
        sum.axpy(1.0, &d);
        sum.max_abs() / d.max_abs()
    };
    let (a, b) = (gap(32), gap(64));
    assert!(b < 1e-4 && a / b > 12.0, "gaps {a:e} {b:e}");
}

fn single_mode(grid: &Grid, k: f64, seed: u64) -> Deformation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = Tensor::from_fn(2, |_| rng.gen_range(-1.0..1.0)).sym();
    let b = Tensor::from_fn(1, |_| rng.gen_range(-1.0..1.0));
    let (h, x) = (0..grid.len())
        .map(|p| {
            let c = (TAU * k * grid.coords(p)[0]).cos();
            (&s * c, &b * c)
        })
        .unzip();
    Deformation { h, x }
}

#[test]
fn flat_structure_is_a_saddle() {
    let field = flat(64, 1.0);
    let g = &field.grid;
    for k in 1..=4 {
        let [_, _, tt] = split_deformation(&field, &single_mode(g, k as f64, k)).unwrap();
        assert!(tt.max_abs() > 1e-3);
        let v = k_pairing(&field, &tt, &tt).unwrap();
        assert!(v < 0.0, "TT mode {k}: {v}");
        let f: Vec<f64> = (0..g.len()).map(|p| (TAU * k as f64 * g.coords(p)[0]).cos()).collect();
        let c = k_pairing(&field, &Deformation::conformal(&f), &Deformation::conformal(&f)).unwrap();
        assert!(c > 0.0, "conformal mode {k}: {c}");
    }
    let ones = vec![1.0; g.len()];
    let c0 = k_pairing(&field, &Deformation::conformal(&ones), &Deformation::conformal(&ones)).unwrap();
    assert!(c0.abs() < 1e-12, "constant conformal mode: {c0:e}");
}

/// Symbol of the linearized torsion at `T = 0`: `(h, X) ↦ curl h + ξ⊗X`.
fn torsion_symbol(xi: &Tensor, h: &Tensor, x: &Tensor) -> Tensor {
    let phi = standard_phi();
    Tensor::from_fn(2, |ij| {
        let (i, j) = (ij[0], ij[1]);
        let mut s = xi[i] * x[j];
        for a in 0..7 {
            for b in 0..7 {
                s += xi[a] * h[(b, i)] * phi[(a, b, j)];
            }
        }
        s
    })
}

/// On trace-free pairs in the kernel of the `𝖫` symbol, a nonzero mode is
/// neither static nor torsion free, so both conditions pick out `ξ = 0`.
#[test]
fn static_modes_are_torsion_free_modes() {
    for k in 0..=4 {
        let xi = Tensor::from_fn(1, |i| if i[0] == 0 { TAU * k as f64 } else { 0.0 });
        // Gauge rows: tr h and the 𝖫 symbol.
        let gauge = na::DMatrix::from_fn(8, 35, |r, c| {
            let e = na::DVector::from_fn(35, |i, _| if i == c { 1.0 } else { 0.0 });
            let (h, x) = unpack(&e);
            if r == 0 {
                h.trace()
            } else {
                symbol_l(&xi, &h, &x)[r - 1]
            }
        });
        let kernel = kernel_basis(&gauge, 1e-9);
        let basis: Vec<na::DVector<f64>> = kernel.column_iter().map(|c| c.into_owned()).collect();
        let torsion = na::DMatrix::from_fn(49, basis.len(), |r, c| {
            let (h, x) = unpack(&basis[c]);
            torsion_symbol(&xi, &h, &x).data()[r]
        });
        let static_dim = if k == 0 { basis.len() } else { 0 };
        assert_eq!(kernel_dim(&torsion, 1e-9), static_dim, "mode {k}");
    }
}

#[test]
fn constant_fields_are_torsion_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let m = na::SMatrix::<f64, 7, 7>::from_fn(|_, _| rng.gen_range(-0.3..0.3)).exp();
        let phi = transport(&standard_phi(), &Tensor::from_fn(2, |i| m[(i[0], i[1])])).unwrap();
        let field = G2Field::constant(Grid::new(vec![0, 3], vec![8, 6], vec![1.0, 2.0]).unwrap(), &phi).unwrap();
        let geo = Geometry::new(&field).unwrap();
        assert!(geo.torsions.iter().all(|t| t.max_abs() == 0.0));
    }
}

#[test]
fn monitor_streams_are_bit_identical_across_thread_counts() {
    let field = random_field(32, 9);
    let h = TAU / 32.0;
    let cfg = FlowConfig {
        variant: FlowVariant::HatP,
        t_end: 4.0 * 0.1 * h * h,
        dt: 0.1 * h * h,
        monitor_every: 1,
        sigma: 0.1,
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| integrate(&field, &cfg).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.states.len(), b.states.len());
    for (s, t) in a.states.iter().zip(&b.states) {
        assert_eq!(format!("{:?}", s.monitors), format!("{:?}", t.monitors));
        assert_eq!(s.field.phi_samples, t.field.phi_samples);
    }
}

#[test]
fn field_container_round_trips_through_a_file() {
    let field = random_field(16, 10);
    let mut file = tempfile::tempfile().unwrap();
    write_field(&mut file, &field).unwrap();
    use std::io::{Seek, SeekFrom};
    file.seek(SeekFrom::Start(0)).unwrap();
    let back = read_field(&mut file).unwrap();
    assert_eq!(back.grid, field.grid);
    for (a, b) in back.phi_samples.iter().zip(&field.phi_samples) {
        assert_eq!(
            g2forge::algebra::three_form_components(a),
            g2forge::algebra::three_form_components(b)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_solutions_keep_the_critical_value(c0 in 0.1f64..1.5, tildep in any::<bool>()) {
        let v = if tildep { FlowVariant::TildeP } else { FlowVariant::HatP };
        let r = scaling_ode_check(c0, v, 0.5, 1e-3).unwrap();
        prop_assert!(r.energy_residual < 1e-12);
        prop_assert!(r.max_rel_err_exact < 1e-8);
    }
}
