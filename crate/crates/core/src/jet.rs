//! Differential data of a sampled G₂-structure.
//!
//! [`Geometry`] precomputes, for every grid point, the induced metric, an
//! orthonormal frame, the Christoffel symbols and the torsion. A [`G2Jet`]
//! then assembles `∇T` and the Riemann tensor at one point by differencing
//! those stored fields, and expresses everything in the orthonormal frame so
//! that downstream operators contract indices with the identity.
//!
//! Curvature convention: `R_ijkl = g_lm R^m_ijk` with
//! `R^m_ijk = ∂_iΓ^m_jk − ∂_jΓ^m_ik + Γ^m_ip Γ^p_jk − Γ^m_jp Γ^p_ik`, so that
//! `Ric_jk = R_ajka` is positive on round spheres and
//! `R_ijkl = −K(g_ik g_jl − g_il g_jk)` for constant sectional curvature `K`.

use rayon::prelude::*;

use crate::algebra::{hodge_dual, raise_slots, standard_phi, Frame, MetricData};
use crate::error::G2Error;
use crate::field::G2Field;
use crate::grid::Grid;
use crate::tensor::{Tensor, N};

/// One point's differential data; tensors are in orthonormal-frame components.
#[derive(Clone, Debug)]
pub struct G2Jet {
    pub point: usize,
    pub phi: Tensor,
    pub psi: Tensor,
    /// Torsion `T_pq` with `∇_pφ_ijk = T_pl ψ_lijk`.
    pub t: Tensor,
    /// `∇_iT_jk`.
    pub nabla_t: Tensor,
    /// `R_ijkl`.
    pub rm: Tensor,
    /// Coordinate metric at the point.
    pub metric: MetricData,
    pub frame: Frame,
    /// Coordinate Christoffel symbols `Γ^k_ij` stored at `(k, i, j)`.
    pub gamma: Tensor,
}

impl G2Jet {
    /// The jet of a nearly-G₂ structure with `T = c·g`, `∇T = 0` and constant
    /// curvature `c²`, built algebraically at `φ₀`.
    pub fn synthetic_nearly_g2(c: f64) -> Self {
        let phi = standard_phi();
        let metric = MetricData::identity();
        let psi = hodge_dual(&phi, &metric);
        let g = Tensor::identity();
        let rm = Tensor::from_fn(4, |i| {
            let (a, b, k, l) = (i[0], i[1], i[2], i[3]);
            -c * c * (g[(a, k)] * g[(b, l)] - g[(a, l)] * g[(b, k)])
        });
        G2Jet {
            point: 0,
            phi,
            psi,
            t: g * c,
            nabla_t: Tensor::zeros(3),
            rm,
            metric,
            frame: Frame::identity(),
            gamma: Tensor::zeros(3),
        }
    }

    /// Metric data for contractions in the frame (identity, with the jet's orientation).
    pub fn frame_metric(&self) -> MetricData {
        MetricData {
            orientation: self.metric.orientation,
            ..MetricData::identity()
        }
    }
}

/// Per-point precomputed geometry of a field.
pub struct Geometry<'a> {
    pub field: &'a G2Field,
    pub metrics: Vec<MetricData>,
    pub frames: Vec<Frame>,
    /// Coordinate psi.
    pub psis: Vec<Tensor>,
    /// `Γ^k_ij` at `(k, i, j)`.
    pub gammas: Vec<Tensor>,
    /// Coordinate torsion `T_pq`.
    pub torsions: Vec<Tensor>,
}

impl<'a> Geometry<'a> {
    pub fn new(field: &'a G2Field) -> Result<Self, G2Error> {
        let grid = &field.grid;
        let metrics = field.metrics()?;
        let gs: Vec<Tensor> = metrics.iter().map(|m| m.g.clone()).collect();
        let stage: Vec<(Frame, Tensor, Tensor, Tensor)> = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let m = &metrics[p];
                let frame = Frame::from_metric(m);
                let psi = hodge_dual(&field.phi_samples[p], m);
                let gamma = christoffel(grid, &gs, m, p);
                let nphi = covariant_derivative(grid, &field.phi_samples, &gamma, p);
                let psi_up = raise_slots(&psi, &[1, 2, 3], m);
                let t = torsion_from_nabla_phi(&nphi, &psi_up);
                (frame, psi, gamma, t)
            })
            .collect();
        let mut frames = Vec::with_capacity(stage.len());
        let mut psis = Vec::with_capacity(stage.len());
        let mut gammas = Vec::with_capacity(stage.len());
        let mut torsions = Vec::with_capacity(stage.len());
        for (f, s, g, t) in stage {
            frames.push(f);
            psis.push(s);
            gammas.push(g);
            torsions.push(t);
        }
        Ok(Geometry {
            field,
            metrics,
            frames,
            psis,
            gammas,
            torsions,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.field.grid
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    /// Full jet at point `p`.
    pub fn jet(&self, p: usize) -> G2Jet {
        let grid = self.grid();
        let m = &self.metrics[p];
        let frame = &self.frames[p];
        let gamma = &self.gammas[p];
        let nabla_t = self.covariant(&self.torsions, p);
        let rm = riemann(grid, &self.gammas, m, p);
        G2Jet {
            point: p,
            phi: frame.to_frame(&self.field.phi_samples[p]),
            psi: frame.to_frame(&self.psis[p]),
            t: frame.to_frame(&self.torsions[p]),
            nabla_t: frame.to_frame(&nabla_t),
            rm: frame.to_frame(&rm),
            metric: m.clone(),
            frame: frame.clone(),
            gamma: gamma.clone(),
        }
    }

    /// All jets, evaluated in parallel.
    pub fn jets(&self) -> Vec<G2Jet> {
        (0..self.len()).into_par_iter().map(|p| self.jet(p)).collect()
    }

    /// Maps `f` over all jets in parallel without keeping them.
    pub fn map_jets<R: Send>(&self, f: impl Fn(&G2Jet) -> R + Sync) -> Vec<R> {
        (0..self.len())
            .into_par_iter()
            .map(|p| f(&self.jet(p)))
            .collect()
    }

    /// Coordinate covariant derivative of a covariant tensor field of rank
    /// 0–3 at `p`, derivative index first.
    pub fn covariant(&self, field: &[Tensor], p: usize) -> Tensor {
        covariant_derivative(self.grid(), field, &self.gammas[p], p)
    }

    /// Covariant derivative of a coordinate field, expressed in the frame at `p`.
    pub fn covariant_frame(&self, field: &[Tensor], p: usize) -> Tensor {
        self.frames[p].to_frame(&self.covariant(field, p))
    }

    /// Converts a field of frame tensors to coordinate components.
    pub fn to_coord_field(&self, frame_field: &[Tensor]) -> Vec<Tensor> {
        frame_field
            .par_iter()
            .zip(&self.frames)
            .map(|(t, f)| f.to_coord(t))
            .collect()
    }

    /// Converts a field of coordinate tensors to frame components.
    pub fn to_frame_field(&self, coord_field: &[Tensor]) -> Vec<Tensor> {
        coord_field
            .par_iter()
            .zip(&self.frames)
            .map(|(t, f)| f.to_frame(t))
            .collect()
    }

    /// `∇_mφ_ijk` in coordinates at `p`.
    pub fn nabla_phi(&self, p: usize) -> Tensor {
        covariant_derivative(self.grid(), &self.field.phi_samples, &self.gammas[p], p)
    }

    /// Max-norm of `∇_mφ_ijk − T_m^l ψ_lijk` in the frame at `p`.
    pub fn nabla_phi_residual(&self, p: usize) -> f64 {
        let f = &self.frames[p];
        let nphi = f.to_frame(&self.nabla_phi(p));
        let t = f.to_frame(&self.torsions[p]);
        let psi = f.to_frame(&self.psis[p]);
        let mut worst: f64 = 0.0;
        for mm in 0..N {
            for i in 0..N {
                for j in 0..N {
                    for k in 0..N {
                        let tp: f64 = (0..N).map(|l| t[(mm, l)] * psi[(l, i, j, k)]).sum();
                        worst = worst.max((nphi[(mm, i, j, k)] - tp).abs());
                    }
                }
            }
        }
        worst
    }

    /// Max-norm over all directions of
    /// `∇_pψ_ijkl + T_pi φ_jkl − T_pj φ_ikl + T_pk φ_ijl − T_pl φ_ijk` in the frame at `p`.
    pub fn nabla_psi_residual(&self, p: usize) -> f64 {
        let grid = self.grid();
        let f = &self.frames[p];
        let gamma = &self.gammas[p];
        let psi = &self.psis[p];
        let phi_hat = f.to_frame(&self.field.phi_samples[p]);
        let t_hat = f.to_frame(&self.torsions[p]);
        // Frame directions are combinations of coordinate directions: ∇_{e_a} = F_qa ∇_q.
        let mut coord_derivs = Vec::with_capacity(N);
        for q in 0..N {
            let mut d = grid.partial(&self.psis, p, q);
            for s in 0..4 {
                for idx in 0..N.pow(4) {
                    let mut ix = [idx / 343, (idx / 49) % 7, (idx / 7) % 7, idx % 7];
                    let mut acc = 0.0;
                    let orig = ix[s];
                    for r in 0..N {
                        ix[s] = r;
                        acc += gamma[(r, q, orig)] * psi[(ix[0], ix[1], ix[2], ix[3])];
                    }
                    d.data_mut()[idx] -= acc;
                }
            }
            coord_derivs.push(f.to_frame(&d));
        }
        let mut worst: f64 = 0.0;
        for a in 0..N {
            let mut d = Tensor::zeros(4);
            for q in 0..N {
                d.axpy(f.f[(q, a)], &coord_derivs[q]);
            }
            for i in 0..N {
                for j in 0..N {
                    for k in 0..N {
                        for l in 0..N {
                            let rhs = -t_hat[(a, i)] * phi_hat[(j, k, l)]
                                + t_hat[(a, j)] * phi_hat[(i, k, l)]
                                - t_hat[(a, k)] * phi_hat[(i, j, l)]
                                + t_hat[(a, l)] * phi_hat[(i, j, k)];
                            worst = worst.max((d[(i, j, k, l)] - rhs).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Lie derivative `𝓛_Vφ` in coordinates, for a vector field with
    /// contravariant components `v[p][m] = V^m`.
    pub fn lie_derivative_phi(&self, v: &[Tensor]) -> Vec<Tensor> {
        let grid = self.grid();
        let phis = &self.field.phi_samples;
        (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let phi = &phis[p];
                let mut out = Tensor::zeros(3);
                for a in 0..N {
                    let va = v[p][a];
                    if va != 0.0 {
                        out.axpy(va, &grid.partial(phis, p, a));
                    }
                }
                // φ_mjk ∂_iV^m + φ_imk ∂_jV^m + φ_ijm ∂_kV^m
                let mut dv = Tensor::zeros(2); // dv[(i, m)] = ∂_i V^m
                for &a in &grid.active_axes {
                    let d = grid.partial(v, p, a);
                    for mm in 0..N {
                        dv[(a, mm)] = d[mm];
                    }
                }
                let dvt = dv.transpose();
                out += &crate::algebra::contract_slot(phi, 0, &dvt);
                out += &crate::algebra::contract_slot(phi, 1, &dvt);
                out += &crate::algebra::contract_slot(phi, 2, &dvt);
                out
            })
            .collect()
    }
}

/// Christoffel symbols `Γ^k_ij` at `p` from differenced metric samples.
fn christoffel(grid: &Grid, gs: &[Tensor], m: &MetricData, p: usize) -> Tensor {
    let mut dg: Vec<Tensor> = vec![Tensor::zeros(2); N];
    for &a in &grid.active_axes {
        dg[a] = grid.partial(gs, p, a);
    }
    let mut lower = Tensor::zeros(3); // Γ_lij
    for l in 0..N {
        for i in 0..N {
            for j in 0..N {
                lower[(l, i, j)] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
            }
        }
    }
    crate::algebra::contract_slot(&lower, 0, &m.g_inv)
}

/// Coordinate covariant derivative of a covariant tensor field at `p`,
/// derivative slot first; inputs of rank 0–3.
pub fn covariant_derivative(grid: &Grid, field: &[Tensor], gamma: &Tensor, p: usize) -> Tensor {
    let t = &field[p];
    let r = t.rank();
    assert!(r <= 3, "covariant derivative supports rank ≤ 3");
    let inner = N.pow(r as u32);
    let mut out = Tensor::zeros(r + 1);
    for q in 0..N {
        if grid.slot_of(q).is_some() {
            let d = grid.partial(field, p, q);
            out.data_mut()[q * inner..(q + 1) * inner].copy_from_slice(d.data());
        }
    }
    if r == 0 {
        return out;
    }
    let td = t.data();
    for q in 0..N {
        for idx in 0..inner {
            let mut digits = [0usize; 3];
            let mut rem = idx;
            for s in (0..r).rev() {
                digits[s] = rem % N;
                rem /= N;
            }
            let mut acc = 0.0;
            for s in 0..r {
                let orig = digits[s];
                let stride = N.pow((r - 1 - s) as u32);
                let base = idx - orig * stride;
                for b in 0..N {
                    let gm = gamma[(b, q, orig)];
                    if gm != 0.0 {
                        acc += gm * td[base + b * stride];
                    }
                }
            }
            out.data_mut()[q * inner + idx] -= acc;
        }
    }
    out
}

/// `T_pq = (1/24) ∇_pφ_ijk ψ_q^{ijk}`, the inverse of `∇_pφ_ijk = T_pl ψ_lijk`.
fn torsion_from_nabla_phi(nphi: &Tensor, psi_up: &Tensor) -> Tensor {
    let mut t = Tensor::zeros(2);
    let nd = nphi.data();
    let sd = psi_up.data();
    for pp in 0..N {
        for q in 0..N {
            let mut acc = 0.0;
            for ijk in 0..343 {
                acc += nd[pp * 343 + ijk] * sd[q * 343 + ijk];
            }
            t[(pp, q)] = acc / 24.0;
        }
    }
    t
}

/// Covariant Riemann tensor `R_ijkl` at `p` from differenced Christoffels.
fn riemann(grid: &Grid, gammas: &[Tensor], m: &MetricData, p: usize) -> Tensor {
    let gamma = &gammas[p];
    let mut dgam: Vec<Option<Tensor>> = vec![None; N];
    for &a in &grid.active_axes {
        dgam[a] = Some(grid.partial(gammas, p, a));
    }
    let mut r_up = Tensor::zeros(4); // R^m_ijk at (m, i, j, k)
    for mm in 0..N {
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    let mut v = 0.0;
                    if let Some(d) = &dgam[i] {
                        v += d[(mm, j, k)];
                    }
                    if let Some(d) = &dgam[j] {
                        v -= d[(mm, i, k)];
                    }
                    for q in 0..N {
                        v += gamma[(mm, i, q)] * gamma[(q, j, k)] - gamma[(mm, j, q)] * gamma[(q, i, k)];
                    }
                    r_up[(mm, i, j, k)] = v;
                }
            }
        }
    }
    let mut rm = Tensor::zeros(4);
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                for l in 0..N {
                    rm[(i, j, k, l)] = (0..N).map(|mm| m.g[(l, mm)] * r_up[(mm, i, j, k)]).sum();
                }
            }
        }
    }
    rm
}

/// Max-norm of `∇_iT_jk − ∇_jT_ik − (T_ia T_jb + ½R_ijab) φ_abk`.
pub fn g2_bianchi_residual(j: &G2Jet) -> f64 {
    let (t, nt, rm, phi) = (&j.t, &j.nabla_t, &j.rm, &j.phi);
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for jj in 0..N {
            let mut s = [[0.0; N]; N];
            for a in 0..N {
                for b in 0..N {
                    s[a][b] = t[(i, a)] * t[(jj, b)] + 0.5 * rm[(i, jj, a, b)];
                }
            }
            for k in 0..N {
                let mut rhs = 0.0;
                for a in 0..N {
                    for b in 0..N {
                        rhs += s[a][b] * phi[(a, b, k)];
                    }
                }
                let lhs = nt[(i, jj, k)] - nt[(jj, i, k)];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// Largest violation of the algebraic Riemann symmetries.
pub fn riemann_symmetry_defect(rm: &Tensor) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                for l in 0..N {
                    let v = rm[(i, j, k, l)];
                    worst = worst
                        .max((v + rm[(j, i, k, l)]).abs())
                        .max((v + rm[(i, j, l, k)]).abs())
                        .max((v - rm[(k, l, i, j)]).abs())
                        .max((v + rm[(j, k, i, l)] + rm[(k, i, j, l)]).abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use std::f64::consts::TAU;

    #[test]
    fn constant_field_has_no_torsion_or_curvature() {
        let grid = Grid::new(vec![0], vec![16], vec![TAU]).unwrap();
        let f = G2Field::constant(grid, &(standard_phi() * 8.0)).unwrap();
        let geo = Geometry::new(&f).unwrap();
        for j in geo.jets() {
            assert_eq!(j.t.max_abs(), 0.0);
            assert_eq!(j.rm.max_abs(), 0.0);
            assert_eq!(g2_bianchi_residual(&j), 0.0);
        }
    }

    #[test]
    fn synthetic_jet_satisfies_bianchi() {
        for c in [1.0, 0.3] {
            let j = G2Jet::synthetic_nearly_g2(c);
            assert!(g2_bianchi_residual(&j) < 1e-12);
            assert!(riemann_symmetry_defect(&j.rm) < 1e-15);
        }
    }

    #[test]
    fn random_field_jet_is_consistent() {
        let spec = FieldSpec::new(vec![0], vec![64], vec![TAU], 0.05, 7);
        let f = G2Field::random(&spec).unwrap();
        let geo = Geometry::new(&f).unwrap();
        let tmax = geo.torsions.iter().map(|t| t.max_abs()).fold(0.0, f64::max);
        assert!(tmax > 1e-3);
        let p = 5;
        assert!(geo.nabla_phi_residual(p) < 1e-5 * tmax.max(1.0));
        assert!(geo.nabla_psi_residual(p) < 1e-5);
        let j = geo.jet(p);
        assert!(riemann_symmetry_defect(&j.rm) < 1e-5);
        assert!(g2_bianchi_residual(&j) < 1e-5);
    }
}
