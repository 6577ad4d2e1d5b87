use g2forge::algebra::standard_phi;
use g2forge::field::G2Field;
use g2forge::grid::Grid;
use g2forge::spectral::split_deformation;
use g2forge::symbols::{
    b_xi_matrix, kernel_basis, kernel_dim, rank, residual, spanning_vectors, special_rl_matrix, symbol_k, symbol_l,
    uniqueness_system_solve, Q,
};
use g2forge::variation::Deformation;
use g2forge::{G2Error, Tensor};
use nalgebra as na;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{guarded, max};
use crate::config::RunConfig;
use crate::report::Check;

pub const COVECTORS: usize = 50;

fn random_covector(rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(1, |_| StandardNormal.sample(&mut *rng))
}

/// `σ(𝖫)∘σ(𝖪 or 𝖫*)` as a 7×7 matrix, composed from the first-order symbols.
fn composed(xi: &Tensor, adjoint: bool) -> na::SMatrix<f64, 7, 7> {
    na::SMatrix::from_fn(|i, j| {
        let mut y = Tensor::zeros(1);
        y[j] = 1.0;
        let (mut h, x) = symbol_k(xi, &y);
        if adjoint {
            h.axpy(-xi[j] / 7.0, &Tensor::identity());
        }
        symbol_l(xi, &h, &x)[i]
    })
}

/// Largest deviation of the sorted spectrum from `{c_par|ξ|², c_perp|ξ|² ×6}`, relative to `|ξ|²`.
fn spectrum_defect(m: na::SMatrix<f64, 7, 7>, xi2: f64, c_par: f64, c_perp: f64) -> f64 {
    let mut ev: Vec<f64> = na::SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    let mut expect = vec![c_perp * xi2; 6];
    expect.push(c_par * xi2);
    expect.sort_by(f64::total_cmp);
    max(ev.iter().zip(&expect).map(|(a, b)| (a - b).abs() / xi2))
}

fn uniqueness() -> Vec<Check> {
    let s = uniqueness_system_solve();
    let zero = [Q::from_integer(0); 2];
    let spans = spanning_vectors();
    let worst = spans.iter().filter(|v| residual(v) != zero).count();
    vec![
        Check::exact("uniqueness_a", "-1/3", s.a),
        Check::exact("uniqueness_beta", "1/6", s.beta),
        Check::exact("uniqueness_nullspace_dim", 4, s.nullspace.len()),
        Check::exact("spanning_vectors_solve_system", 0, worst)
            .note("count of spanning vectors with a nonzero exact residual"),
        Check::exact("spanning_vectors_rank", 4, rank(&spans)),
    ]
}

fn symbol_checks(cfg: &RunConfig) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let xis: Vec<Tensor> = (0..COVECTORS).map(|_| random_covector(&mut rng)).collect();
    let mut checks = Vec::new();
    for (label, a) in [("-1/3", -1.0 / 3.0), ("0", 0.0), ("1", 1.0)] {
        let mut dims: Vec<usize> = xis.iter().map(|xi| kernel_dim(&special_rl_matrix(a, xi), 1e-8)).collect();
        dims.sort();
        dims.dedup();
        let shown = dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        checks.push(Check::exact(&format!("special_rl_kernel_dim_a={label}"), 7, shown));
        let action = max(xis.iter().map(|xi| {
            let xi2 = xi.norm2();
            let k = kernel_basis(&b_xi_matrix(a, xi), 1e-10);
            let r = &special_rl_matrix(a, xi) * &k - &k * xi2;
            r.norm() / (xi2 * k.norm())
        }));
        checks.push(Check::at_most(&format!("special_rl_identity_on_ker_b_a={label}"), action, 1e-9));
    }
    let llstar = max(xis.iter().map(|xi| spectrum_defect(composed(xi, true), xi.norm2(), -1.0, -0.75)));
    let lk = max(xis.iter().map(|xi| spectrum_defect(composed(xi, false), xi.norm2(), -6.0 / 7.0, -0.75)));
    checks.push(Check::at_most("l_lstar_eigenvalues", llstar, 1e-10));
    checks.push(Check::at_most("l_k_eigenvalues", lk, 1e-10));
    checks
}

fn slice(cfg: &RunConfig) -> Result<Vec<Check>, G2Error> {
    let n = cfg.grid.points;
    let grid = Grid::new(vec![0, 3], vec![n, n / 2], vec![cfg.grid.period, cfg.grid.period])?;
    let field = G2Field::constant(grid, &standard_phi())?;
    let d = Deformation::random(&field.grid, cfg.seed.wrapping_add(2), 3, 1.0);
    let parts = split_deformation(&field, &d)?;
    let g = &field.grid;
    let norms: Vec<f64> = parts.iter().map(|p| p.inner(p, g).sqrt()).collect();
    let mut ortho = 0.0f64;
    for i in 0..3 {
        for j in i + 1..3 {
            ortho = max([ortho, parts[i].inner(&parts[j], g).abs() / (norms[i] * norms[j])]);
        }
    }
    let mut sum = parts[0].clone();
    sum.axpy(1.0, &parts[1]);
    sum.axpy(1.0, &parts[2]);
    sum.axpy(-1.0, &d);
    Ok(vec![
        Check::at_most("slice_orthogonality", ortho, 1e-8).detail(serde_json::json!({ "part_norms": norms })),
        Check::at_most("slice_reconstruction", sum.max_abs(), 1e-10),
    ])
}

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    let mut checks = uniqueness();
    checks.extend(symbol_checks(cfg));
    checks.extend(guarded("slice", || slice(cfg)));
    checks
}
