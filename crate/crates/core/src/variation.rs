//! Functional evaluation by quadrature and finite-difference checks of the
//! first and second variation formulas.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{contract_psi, diamond, hodge_dual, metric_from_phi, MetricData};
use crate::error::G2Error;
use crate::field::{active_coords, G2Field, MatrixField};
use crate::grid::Grid;
use crate::jet::Geometry;
use crate::operators::{v_of, BasicFunctional, PointOps};
use crate::tensor::{Tensor, N};

/// An infinitesimal deformation `h⋄φ + X⌟ψ`, in coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct Deformation {
    pub h: Vec<Tensor>,
    pub x: Vec<Tensor>,
}

impl Deformation {
    pub fn zeros(len: usize) -> Self {
        Deformation {
            h: vec![Tensor::zeros(2); len],
            x: vec![Tensor::zeros(1); len],
        }
    }

    /// Seeded band-limited deformation with modes up to `max_mode`.
    pub fn random(grid: &Grid, seed: u64, max_mode: i32, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mh = MatrixField::random(grid.dims(), &grid.periods, max_mode, &mut rng);
        let mx = MatrixField::random(grid.dims(), &grid.periods, max_mode, &mut rng);
        let (h, x) = (0..grid.len())
            .map(|p| {
                let c = active_coords(grid, p);
                let a = mh.eval(&c);
                let b = mx.eval(&c);
                let h = Tensor::from_fn(2, |i| 0.5 * amplitude * (a[(i[0], i[1])] + a[(i[1], i[0])]));
                let x = Tensor::from_fn(1, |i| amplitude * b[(i[0], 0)]);
                (h, x)
            })
            .unzip();
        Deformation { h, x }
    }

    /// `(f·g, 0)` for the identity metric.
    pub fn conformal(f: &[f64]) -> Self {
        Deformation {
            h: f.iter().map(|&v| Tensor::identity() * v).collect(),
            x: vec![Tensor::zeros(1); f.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// The 3-form `h⋄φ + X⌟ψ` at every point of `field`.
    pub fn omega(&self, field: &G2Field) -> Result<Vec<Tensor>, G2Error> {
        let metrics = field.metrics()?;
        Ok((0..field.len())
            .into_par_iter()
            .map(|p| {
                let m = &metrics[p];
                let phi = &field.phi_samples[p];
                let psi = hodge_dual(phi, m);
                let mut w = diamond(&self.h[p], phi, m);
                w += &contract_psi(&self.x[p], &psi, m);
                w
            })
            .collect())
    }

    /// `∫⟨h,w⟩ + ⟨X,Y⟩` with the identity metric.
    pub fn inner(&self, other: &Deformation, grid: &Grid) -> f64 {
        let v: Vec<f64> = (0..self.len())
            .map(|p| self.h[p].dot(&other.h[p]) + self.x[p].dot(&other.x[p]))
            .collect();
        grid.integrate(&v)
    }

    pub fn axpy(&mut self, s: f64, other: &Deformation) {
        for (a, b) in self.h.iter_mut().zip(&other.h) {
            a.axpy(s, b);
        }
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            a.axpy(s, b);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.h
            .iter()
            .chain(&self.x)
            .map(Tensor::max_abs)
            .fold(0.0, f64::max)
    }

    /// Largest asymmetry of `h` over the grid.
    pub fn symmetry_defect(&self) -> f64 {
        self.h
            .iter()
            .map(|h| (h - &h.transpose()).max_abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FunctionalId {
    Scal,
    TrT2,
    T2,
    TTt,
    TPT,
    VT2,
    Hilbert,
    NormalizedHilbert,
}

impl FunctionalId {
    pub const ALL: [FunctionalId; 8] = [
        FunctionalId::Scal,
        FunctionalId::TrT2,
        FunctionalId::T2,
        FunctionalId::TTt,
        FunctionalId::TPT,
        FunctionalId::VT2,
        FunctionalId::Hilbert,
        FunctionalId::NormalizedHilbert,
    ];

    pub fn basic(self) -> Option<BasicFunctional> {
        Some(match self {
            FunctionalId::Scal => BasicFunctional::Scal,
            FunctionalId::TrT2 => BasicFunctional::TrT2,
            FunctionalId::T2 => BasicFunctional::T2,
            FunctionalId::TTt => BasicFunctional::TTt,
            FunctionalId::TPT => BasicFunctional::TPT,
            FunctionalId::VT2 => BasicFunctional::VT2,
            FunctionalId::Hilbert => BasicFunctional::Hilbert,
            FunctionalId::NormalizedHilbert => return None,
        })
    }
}

/// All functional values of a field, sharing one geometry pass.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Functionals {
    pub vol: f64,
    pub values: [f64; 8],
}

impl Functionals {
    pub fn get(&self, fid: FunctionalId) -> f64 {
        self.values[FunctionalId::ALL.iter().position(|&f| f == fid).unwrap()]
    }
}

pub fn evaluate_all(field: &G2Field) -> Result<Functionals, G2Error> {
    let geo = Geometry::new(field)?;
    let grid = &field.grid;
    let dens = geo.map_jets(|j| PointOps::new(j).densities());
    let vd: Vec<f64> = geo.metrics.iter().map(|m| m.vol_density).collect();
    let vol = grid.integrate(&vd);
    let mut values = [0.0; 8];
    for (k, f) in BasicFunctional::ALL.iter().enumerate() {
        let w: Vec<f64> = dens.iter().zip(&vd).map(|(d, v)| d.get(*f) * v).collect();
        values[k] = grid.integrate(&w);
    }
    values[7] = values[6] / vol.powf(5.0 / 7.0);
    Ok(Functionals { vol, values })
}

pub fn evaluate(field: &G2Field, fid: FunctionalId) -> Result<f64, G2Error> {
    Ok(evaluate_all(field)?.get(fid))
}

/// `∫⟨h,Q₁⟩ + ⟨X,Q₂⟩ dμ` for every functional, with the normalized
/// functional's gradient `Vol^{-5/7}(P₁ − (5/7)Vol⁻¹𝓕 g, P₂)`.
pub fn pairings(field: &G2Field, d: &Deformation) -> Result<[f64; 8], G2Error> {
    let geo = Geometry::new(field)?;
    let grid = &field.grid;
    let rows: Vec<[f64; 10]> = geo.map_jets(|j| {
        let p = j.point;
        let o = PointOps::new(j);
        let h = j.frame.to_frame(&d.h[p]);
        let x = j.frame.to_frame(&d.x[p]);
        let vd = j.metric.vol_density;
        let mut r = [0.0; 10];
        for (k, f) in BasicFunctional::ALL.iter().enumerate() {
            let q = o.gradient(*f);
            r[k] = (h.dot(&q.q1) + x.dot(&q.q2)) * vd;
        }
        r[7] = o.densities().hilbert * vd;
        r[8] = h.trace() * vd;
        r[9] = vd;
        r
    });
    let col = |k: usize| grid.integrate(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
    let mut out = [0.0; 8];
    for (k, o) in out.iter_mut().enumerate().take(7) {
        *o = col(k);
    }
    let (f, tr, vol) = (col(7), col(8), col(9));
    out[7] = vol.powf(-5.0 / 7.0) * (out[6] - 5.0 / 7.0 * f / vol * tr);
    Ok(out)
}

const ETA_MAX: f64 = 1e-2;
const ETA_MIN: f64 = 1e-7;
const RICHARDSON_TOL: f64 = 1e-7;

/// Richardson-extrapolated derivative at 0 of every component of `f`.
/// Steps halve from `eta_max` until consecutive extrapolations agree to
/// `RICHARDSON_TOL` relative, or within the roundoff floor of the values
/// taken at no less than unit magnitude.
fn richardson<F>(eta_max: f64, eta_min: f64, order2: bool, f: F) -> Result<Vec<f64>, G2Error>
where
    F: Fn(f64) -> Result<(Vec<f64>, f64), G2Error>,
{
    // `f(η)` returns the difference quotient at step η and the magnitude of
    // the values it was formed from.
    let mut quotients: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut eta = eta_max;
    while quotients.len() < 2 {
        let (q, m) = f(eta)?;
        quotients.push((eta, q, m));
        eta /= 2.0;
    }
    let extrapolate = |a: &Vec<f64>, b: &Vec<f64>| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (4.0 * y - x) / 3.0).collect()
    };
    let mut prev = extrapolate(&quotients[0].1, &quotients[1].1);
    let n = prev.len();
    let mut accepted: Vec<Option<f64>> = vec![None; n];
    while eta >= eta_min {
        let (q, m) = f(eta)?;
        quotients.push((eta, q, m));
        let k = quotients.len();
        let cur = extrapolate(&quotients[k - 2].1, &quotients[k - 1].1);
        // At least unit scale, so derivatives that vanish identically are
        // accepted once they sit at roundoff.
        let mag = quotients[k - 3..].iter().map(|e| e.2).fold(1.0, f64::max);
        let floor = if order2 {
            1e3 * f64::EPSILON * mag / (eta * eta)
        } else {
            1e3 * f64::EPSILON * mag / eta
        };
        for c in 0..n {
            if accepted[c].is_none() && (cur[c] - prev[c]).abs() <= RICHARDSON_TOL * cur[c].abs() + floor {
                accepted[c] = Some(cur[c]);
            }
        }
        if accepted.iter().all(Option::is_some) {
            return Ok(accepted.into_iter().map(Option::unwrap).collect());
        }
        prev = cur;
        eta /= 2.0;
    }
    Err(G2Error::StepUnderflow {
        min: eta_min,
        max: eta_max,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// First derivative at `t = 0` of every component of `g(t)` by central
/// differences with Richardson extrapolation.
pub fn derivative_fd<F>(g: F) -> Result<Vec<f64>, G2Error>
where
    F: Fn(f64) -> Result<Vec<f64>, G2Error> + Sync,
{
    richardson(ETA_MAX, ETA_MIN, false, |eta| {
        let (a, b) = rayon::join(|| g(eta), || g(-eta));
        let (a, b) = (a?, b?);
        let q = a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * eta)).collect();
        Ok((q, max_abs(&a).max(max_abs(&b))))
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FirstVariation {
    pub fid: FunctionalId,
    pub fd_value: f64,
    pub pairing_value: f64,
    pub rel_err: f64,
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// First variation of all eight functionals along `d`, by finite differences
/// and by the gradient pairing.
pub fn first_variation_all(field: &G2Field, d: &Deformation) -> Result<Vec<FirstVariation>, G2Error> {
    let omega = d.omega(field)?;
    let fd = derivative_fd(|t| Ok(evaluate_all(&field.perturbed(&omega, t))?.values.to_vec()))?;
    let pairing = pairings(field, d)?;
    Ok(FunctionalId::ALL
        .iter()
        .enumerate()
        .map(|(k, &fid)| FirstVariation {
            fid,
            fd_value: fd[k],
            pairing_value: pairing[k],
            rel_err: rel_err(fd[k], pairing[k]),
        })
        .collect())
}

pub fn first_variation_fd(field: &G2Field, d: &Deformation, fid: FunctionalId) -> Result<FirstVariation, G2Error> {
    let all = first_variation_all(field, d)?;
    Ok(all.into_iter().find(|v| v.fid == fid).unwrap())
}

/// Grid maximum of `∂_t𝖥 − (⟨h,P̂₁⟩ + ⟨X,P₂⟩ + div A)` for the pointwise
/// Hilbert density `𝖥`.
pub fn lagrangian_variation_residual(field: &G2Field, d: &Deformation) -> Result<f64, G2Error> {
    let omega = d.omega(field)?;
    let fd = derivative_fd(|t| {
        let f = field.perturbed(&omega, t);
        let geo = Geometry::new(&f)?;
        Ok(geo.map_jets(|j| PointOps::new(j).densities().hilbert))
    })?;
    let geo = Geometry::new(field)?;
    let h = geo.to_frame_field(&d.h);
    let x = geo.to_frame_field(&d.x);
    let nh = crate::operators::nabla_field(&geo, &h);
    let parts: Vec<(f64, Tensor)> = geo.map_jets(|j| {
        let p = j.point;
        let o = PointOps::new(j);
        let (hh, xx) = (&h[p], &x[p]);
        let pair = hh.dot(&o.hat_p1()) + xx.dot(&o.p2());
        // A = −⅓∇tr h + ⅓div h − ⅔T_pq h_bp φ_abq − ⅔T(X) − ⅓tr T·X.
        let mut a = Tensor::zeros(1);
        for i in 0..N {
            let mut grad_tr = 0.0;
            let mut div = 0.0;
            for b in 0..N {
                grad_tr += nh[p][(i, b, b)];
                div += nh[p][(b, b, i)];
            }
            let mut thp = 0.0;
            for pp in 0..N {
                for q in 0..N {
                    for b in 0..N {
                        thp += o.t[(pp, q)] * hh[(b, pp)] * o.phi[(i, b, q)];
                    }
                }
            }
            a[i] = -grad_tr / 3.0 + div / 3.0 - 2.0 / 3.0 * thp;
        }
        a.axpy(-2.0 / 3.0, &o.t.apply(xx));
        a.axpy(-o.tr_t / 3.0, xx);
        (pair, a)
    });
    let a: Vec<Tensor> = parts.iter().map(|p| p.1.clone()).collect();
    let na = crate::operators::nabla_field(&geo, &a);
    Ok((0..geo.len())
        .map(|p| (fd[p] - (parts[p].0 + na[p].trace())).abs())
        .fold(0.0, f64::max))
}

/// Flat-carrier data: a constant field whose metric is the identity.
struct Flat {
    phi: Tensor,
}

fn flat_carrier(field: &G2Field) -> Result<Flat, G2Error> {
    if !field.is_constant() {
        return Err(G2Error::NonFlatCarrier);
    }
    let m = metric_from_phi(&field.phi_samples[0])?;
    if (&m.g - &Tensor::identity()).max_abs() > 1e-12 {
        return Err(G2Error::NonFlatCarrier);
    }
    Ok(Flat {
        phi: field.phi_samples[0].clone(),
    })
}

fn scalars(v: &[f64]) -> Vec<Tensor> {
    v.iter().map(|&s| Tensor::scalar(s)).collect()
}

fn trace_each(v: &[Tensor]) -> Vec<f64> {
    v.iter().map(Tensor::trace).collect()
}

/// Derivatives of a deformation on a flat carrier.
struct FlatDerivs {
    div_h: Vec<Tensor>,
    grad_tr_h: Vec<Tensor>,
    curl_x: Vec<Tensor>,
    lap_h: Vec<Tensor>,
    lap_x: Vec<Tensor>,
    lap_tr_h: Vec<f64>,
    div_div_h: Vec<f64>,
    nabla_h: Vec<Tensor>,
    nabla_x: Vec<Tensor>,
}

fn laplacian(grid: &Grid, f: &[Tensor]) -> Vec<Tensor> {
    let nn = grid.nabla_flat(&grid.nabla_flat(f));
    nn.iter()
        .map(|t| {
            let stride = t.data().len() / (N * N);
            let mut out = vec![0.0; stride];
            for a in 0..N {
                let off = (a * N + a) * stride;
                for (o, v) in out.iter_mut().zip(&t.data()[off..off + stride]) {
                    *o += v;
                }
            }
            Tensor::from_vec(f[0].rank(), out)
        })
        .collect()
}

fn div_of(nabla: &[Tensor]) -> Vec<Tensor> {
    nabla
        .iter()
        .map(|t| Tensor::from_fn(t.rank() - 2, |i| {
            (0..N)
                .map(|a| {
                    let mut idx = vec![a, a];
                    idx.extend_from_slice(i);
                    t.get(&idx)
                })
                .sum()
        }))
        .collect()
}

fn flat_derivs(grid: &Grid, flat: &Flat, d: &Deformation) -> FlatDerivs {
    let nabla_h = grid.nabla_flat(&d.h);
    let nabla_x = grid.nabla_flat(&d.x);
    let div_h = div_of(&nabla_h);
    let tr_h = scalars(&trace_each(&d.h));
    let grad_tr_h = grid.nabla_flat(&tr_h);
    let curl_x = nabla_x.iter().map(|n| v_of(n, &flat.phi)).collect();
    let lap_h = laplacian(grid, &d.h);
    let lap_x = laplacian(grid, &d.x);
    let lap_tr_h = laplacian(grid, &tr_h).iter().map(Tensor::value).collect();
    let div_div_h = grid.nabla_flat(&div_h).iter().map(Tensor::trace).collect();
    FlatDerivs {
        div_h,
        grad_tr_h,
        curl_x,
        lap_h,
        lap_x,
        lap_tr_h,
        div_div_h,
        nabla_h,
        nabla_x,
    }
}

fn lie_g(grid: &Grid, v: &[Tensor]) -> Vec<Tensor> {
    grid.nabla_flat(v).iter().map(|n| n + &n.transpose()).collect()
}

/// `(K₁, K₂)` of the second variation at a flat carrier:
/// `K₁ = Δh − ⅔𝓛_{B̃}g + ⅓(−Δtr h + div div h)g`, `K₂ = ΔX + ⅔curl B̃`.
pub fn k_operator(field: &G2Field, d: &Deformation) -> Result<(Vec<Tensor>, Vec<Tensor>), G2Error> {
    let flat = flat_carrier(field)?;
    let grid = &field.grid;
    let fd = flat_derivs(grid, &flat, d);
    let b: Vec<Tensor> = (0..grid.len())
        .map(|p| {
            let mut b = fd.div_h[p].clone();
            b.axpy(-0.25, &fd.grad_tr_h[p]);
            b.axpy(0.5, &fd.curl_x[p]);
            b
        })
        .collect();
    let nb = grid.nabla_flat(&b);
    let k1 = (0..grid.len())
        .map(|p| {
            let mut k = fd.lap_h[p].clone();
            k.axpy(-2.0 / 3.0, &(&nb[p] + &nb[p].transpose()));
            k.axpy((-fd.lap_tr_h[p] + fd.div_div_h[p]) / 3.0, &Tensor::identity());
            k
        })
        .collect();
    let k2 = (0..grid.len())
        .map(|p| {
            let mut k = fd.lap_x[p].clone();
            k.axpy(2.0 / 3.0, &v_of(&nb[p], &flat.phi));
            k
        })
        .collect();
    Ok((k1, k2))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondVariation {
    pub fd_hessian: f64,
    pub k_pairing: f64,
    pub rel_err: f64,
}

/// `∫⟨K₁(d₁), w⟩ + ⟨K₂(d₁), Y⟩` for `d₂ = (w, Y)` on a flat carrier.
pub fn k_pairing(field: &G2Field, d1: &Deformation, d2: &Deformation) -> Result<f64, G2Error> {
    let (k1, k2) = k_operator(field, d1)?;
    Ok(Deformation { h: k1, x: k2 }.inner(d2, &field.grid))
}

/// Mixed second derivative of the normalized Hilbert functional at a flat
/// carrier along `φ + t·ω₁ + s·ω₂`, against the `K` pairing.
pub fn second_variation_fd(field: &G2Field, d1: &Deformation, d2: &Deformation) -> Result<SecondVariation, G2Error> {
    flat_carrier(field)?;
    let w1 = d1.omega(field)?;
    let w2 = d2.omega(field)?;
    let eval = |t: f64, s: f64| -> Result<f64, G2Error> {
        let mut f = field.perturbed(&w1, t);
        f = f.perturbed(&w2, s);
        Ok(evaluate_all(&f)?.get(FunctionalId::NormalizedHilbert))
    };
    let fd = richardson(ETA_MAX, 1e-5, true, |eta| {
        let vals: Vec<Result<f64, G2Error>> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .par_iter()
            .map(|&(a, b)| eval(a * eta, b * eta))
            .collect();
        let v: Vec<f64> = vals.into_iter().collect::<Result<_, _>>()?;
        let q = (v[0] - v[1] - v[2] + v[3]) / (4.0 * eta * eta);
        Ok((vec![q], max_abs(&v)))
    })?[0];
    let kp = k_pairing(field, d1, d2)?;
    Ok(SecondVariation {
        fd_hessian: fd,
        k_pairing: kp,
        rel_err: rel_err(fd, kp),
    })
}

/// `∫((12/25)|∇v|² + (1/5)tr P₁·v²) dμ`, the Hilbert functional of `v^{6/5}φ`.
pub fn conformal_energy(field: &G2Field, v: &[f64]) -> Result<f64, G2Error> {
    check_positive(v)?;
    let geo = Geometry::new(field)?;
    let grad = field.grid.gradient(v);
    let dens = geo.map_jets(|j| {
        let p = j.point;
        let gv = j.frame.to_frame(&grad[p]);
        let tr_p1 = PointOps::new(j).p1().trace();
        (12.0 / 25.0 * gv.norm2() + tr_p1 * v[p] * v[p] / 5.0) * j.metric.vol_density
    });
    Ok(field.grid.integrate(&dens))
}

fn check_positive(v: &[f64]) -> Result<(), G2Error> {
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(G2Error::NonPositiveConformalFactor { min });
    }
    Ok(())
}

/// `e^{3f}φ` with `e^{2f} = v^{4/5}`.
pub fn conformal_rescale(field: &G2Field, v: &[f64]) -> Result<G2Field, G2Error> {
    check_positive(v)?;
    let samples = field
        .phi_samples
        .iter()
        .zip(v)
        .map(|(phi, &vv)| phi * vv.powf(1.2))
        .collect();
    Ok(G2Field {
        grid: field.grid.clone(),
        phi_samples: samples,
        amplitude: field.amplitude,
    })
}

/// Grid maximum of `T̃_pq − e^f(T_pq + ∇^m f φ_mpq)` in coordinates, with
/// `T̃` the numerically computed torsion of `e^{3f}φ`.
pub fn conformal_torsion_residual(field: &G2Field, f: &[f64]) -> Result<f64, G2Error> {
    let scaled = G2Field {
        grid: field.grid.clone(),
        phi_samples: field
            .phi_samples
            .iter()
            .zip(f)
            .map(|(phi, &ff)| phi * (3.0 * ff).exp())
            .collect(),
        amplitude: field.amplitude,
    };
    let geo = Geometry::new(field)?;
    let geo_s = Geometry::new(&scaled)?;
    let grad = field.grid.gradient(f);
    Ok((0..field.len())
        .map(|p| {
            let m: &MetricData = &geo.metrics[p];
            let up = m.g_inv.apply(&grad[p]);
            let phi = &field.phi_samples[p];
            let mut expect = geo.torsions[p].clone();
            for a in 0..N {
                for b in 0..N {
                    expect[(a, b)] += (0..N).map(|k| up[k] * phi[(k, a, b)]).sum::<f64>();
                }
            }
            let expect = expect * f[p].exp();
            (&geo_s.torsions[p] - &expect).max_abs()
        })
        .fold(0.0, f64::max))
}

/// Quantities whose linearization at a flat carrier is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Quantity {
    Scal,
    Ric,
    LieVTg,
    DivT,
    GradTrT,
    VT,
    Torsion,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Scal,
        Quantity::Ric,
        Quantity::LieVTg,
        Quantity::DivT,
        Quantity::GradTrT,
        Quantity::VT,
        Quantity::Torsion,
    ];

    fn of(self, o: &PointOps) -> Tensor {
        match self {
            Quantity::Scal => Tensor::scalar(o.scal),
            Quantity::Ric => o.ric.clone(),
            Quantity::LieVTg => o.lie_vt_g.clone(),
            Quantity::DivT => o.div_t.clone(),
            Quantity::GradTrT => o.grad_tr_t.clone(),
            Quantity::VT => o.vt.clone(),
            Quantity::Torsion => o.t.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Linearization {
    pub fd_field: Vec<Tensor>,
    pub formula_field: Vec<Tensor>,
    pub max_err: f64,
}

/// Linearization of `q` along `d` at a flat carrier, by finite differences
/// and by its closed form.
pub fn linearize_quantity(field: &G2Field, d: &Deformation, q: Quantity) -> Result<Linearization, G2Error> {
    let flat = flat_carrier(field)?;
    let grid = &field.grid;
    let omega = d.omega(field)?;
    let fd = derivative_fd(|t| {
        let f = field.perturbed(&omega, t);
        let geo = Geometry::new(&f)?;
        // Coordinate components; they agree with frame components to first order.
        let vals = geo.map_jets(|j| j.frame.to_coord(&q.of(&PointOps::new(j))));
        Ok(vals.into_iter().flat_map(Tensor::into_data).collect())
    })?;
    let fdd = flat_derivs(grid, &flat, d);
    let vt_dot: Vec<Tensor> = (0..grid.len())
        .map(|p| {
            let mut v = fdd.grad_tr_h[p].clone();
            v.axpy(-1.0, &fdd.div_h[p]);
            v += &fdd.curl_x[p];
            v
        })
        .collect();
    let formula: Vec<Tensor> = match q {
        Quantity::Scal => (0..grid.len())
            .map(|p| Tensor::scalar(2.0 * (-fdd.lap_tr_h[p] + fdd.div_div_h[p])))
            .collect(),
        Quantity::Ric => {
            let w: Vec<Tensor> = (0..grid.len())
                .map(|p| {
                    let mut w = fdd.div_h[p].clone();
                    w.axpy(-0.5, &fdd.grad_tr_h[p]);
                    w
                })
                .collect();
            let l = lie_g(grid, &w);
            (0..grid.len()).map(|p| &l[p] - &fdd.lap_h[p]).collect()
        }
        Quantity::LieVTg => lie_g(grid, &vt_dot),
        Quantity::DivT => {
            let n = grid.nabla_flat(&fdd.div_h);
            (0..grid.len())
                .map(|p| &fdd.lap_x[p] + &v_of(&n[p], &flat.phi))
                .collect()
        }
        Quantity::GradTrT => {
            let div_x = scalars(&trace_each(&fdd.nabla_x));
            grid.nabla_flat(&div_x)
        }
        Quantity::VT => vt_dot,
        Quantity::Torsion => (0..grid.len())
            .map(|p| {
                let nh = &fdd.nabla_h[p];
                let mut t = fdd.nabla_x[p].clone();
                for i in 0..N {
                    for j in 0..N {
                        let mut acc = 0.0;
                        for a in 0..N {
                            for b in 0..N {
                                acc += nh[(a, b, i)] * flat.phi[(a, b, j)];
                            }
                        }
                        t[(i, j)] += acc;
                    }
                }
                t
            })
            .collect(),
    };
    let stride = formula[0].data().len();
    let rank = formula[0].rank();
    let fd_field: Vec<Tensor> = fd
        .chunks(stride)
        .map(|c| Tensor::from_vec(rank, c.to_vec()))
        .collect();
    let max_err = fd_field
        .iter()
        .zip(&formula)
        .map(|(a, b)| (a - b).max_abs())
        .fold(0.0, f64::max);
    Ok(Linearization {
        fd_field,
        formula_field: formula,
        max_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::standard_phi;
    use crate::field::FieldSpec;
    use std::f64::consts::TAU;

    fn flat(n: usize, period: f64) -> G2Field {
        G2Field::constant(Grid::new(vec![0], vec![n], vec![period]).unwrap(), &standard_phi()).unwrap()
    }

    #[test]
    fn hilbert_vanishes_on_flat_and_scaled_fields() {
        let f = flat(16, 1.0);
        let v = evaluate_all(&f).unwrap();
        assert!(v.get(FunctionalId::Hilbert).abs() < 1e-14);
        assert!((v.vol - 1.0).abs() < 1e-14);
        let scaled = G2Field::constant(f.grid.clone(), &(standard_phi() * 8.0)).unwrap();
        let v = evaluate_all(&scaled).unwrap();
        assert!((v.vol - 2f64.powi(7)).abs() < 1e-9);
        assert!(v.get(FunctionalId::Hilbert).abs() < 1e-12);
    }

    #[test]
    fn first_variation_at_critical_point_is_zero() {
        let f = flat(32, TAU);
        let d = Deformation::random(&f.grid, 5, 2, 0.5);
        for v in first_variation_all(&f, &d).unwrap() {
            if v.fid == FunctionalId::Hilbert || v.fid == FunctionalId::NormalizedHilbert {
                assert!(v.fd_value.abs() < 1e-8 && v.pairing_value.abs() < 1e-12, "{v:?}");
            }
        }
    }

    #[test]
    fn first_variation_random_field() {
        let spec = FieldSpec::new(vec![0], vec![48], vec![TAU], 0.05, 11);
        let f = G2Field::random(&spec).unwrap().with_fd_order(8);
        let d = Deformation::random(&f.grid, 12, 2, 0.5);
        for v in first_variation_all(&f, &d).unwrap() {
            assert!(v.rel_err < 1e-6, "{v:?}");
        }
    }

    #[test]
    fn conformal_energy_flat_constant_is_zero() {
        let f = flat(32, TAU);
        assert_eq!(conformal_energy(&f, &vec![1.0; 32]).unwrap(), 0.0);
        assert!(conformal_energy(&f, &vec![-1.0; 32]).is_err());
    }

    #[test]
    fn non_flat_carrier_rejected() {
        let spec = FieldSpec::new(vec![0], vec![16], vec![TAU], 0.05, 1);
        let f = G2Field::random(&spec).unwrap();
        let d = Deformation::zeros(16);
        assert_eq!(k_operator(&f, &d).unwrap_err(), G2Error::NonFlatCarrier);
    }
}
