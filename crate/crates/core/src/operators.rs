//! Pointwise curvature and torsion operators, the gradient operators of the
//! G₂-Hilbert functional, and the first-order Bianchi-type operators.
//!
//! Pointwise quantities are computed from a [`G2Jet`] in its orthonormal
//! frame, so every contraction is a plain sum. Whole-field operators take a
//! [`Geometry`] and fields of frame tensors, and return frame tensors.

use rayon::prelude::*;
use serde::Serialize;

use crate::jet::{G2Jet, Geometry};
use crate::tensor::{Tensor, N};

/// Torsion-derived quantities at one point, all in frame components.
#[derive(Clone, Debug)]
pub struct PointOps {
    pub phi: Tensor,
    pub psi: Tensor,
    pub t: Tensor,
    pub nabla_t: Tensor,
    pub rm: Tensor,
    pub tr_t: f64,
    pub vt: Tensor,
    /// `𝖯(T)_ij = T_ab ψ_abij`.
    pub pt: Tensor,
    /// `(T²)_ij = T_ia T_aj`.
    pub t_sq: Tensor,
    /// `∇_j(𝖵T)_k` at `(j, k)`.
    pub nabla_vt: Tensor,
    pub lie_vt_g: Tensor,
    pub div_vt: f64,
    pub div_t: Tensor,
    pub div_tt: Tensor,
    pub grad_tr_t: Tensor,
    pub ric: Tensor,
    pub scal: f64,
}

impl PointOps {
    pub fn new(j: &G2Jet) -> Self {
        let (t, nt, phi, psi) = (&j.t, &j.nabla_t, &j.phi, &j.psi);
        let tr_t = t.trace();
        let vt = v_of(t, phi);
        let pt = p_of(t, psi);
        let t_sq = t.compose(t);
        let mut nabla_vt = Tensor::zeros(2);
        for jj in 0..N {
            for k in 0..N {
                let mut acc = 0.0;
                for a in 0..N {
                    for b in 0..N {
                        let p = phi[(a, b, k)];
                        if p != 0.0 {
                            acc += nt[(jj, a, b)] * p;
                        }
                        let tab = t[(a, b)];
                        if tab != 0.0 {
                            for m in 0..N {
                                acc += tab * t[(jj, m)] * psi[(m, a, b, k)];
                            }
                        }
                    }
                }
                nabla_vt[(jj, k)] = acc;
            }
        }
        let lie_vt_g = &nabla_vt + &nabla_vt.transpose();
        let div_vt = nabla_vt.trace();
        let mut div_t = Tensor::zeros(1);
        let mut div_tt = Tensor::zeros(1);
        let mut grad_tr_t = Tensor::zeros(1);
        for k in 0..N {
            for a in 0..N {
                div_t[k] += nt[(a, a, k)];
                div_tt[k] += nt[(a, k, a)];
                grad_tr_t[k] += nt[(k, a, a)];
            }
        }
        let ric = ricci(&j.rm);
        let scal = ric.trace();
        PointOps {
            phi: phi.clone(),
            psi: psi.clone(),
            t: t.clone(),
            nabla_t: nt.clone(),
            rm: j.rm.clone(),
            tr_t,
            vt,
            pt,
            t_sq,
            nabla_vt,
            lie_vt_g,
            div_vt,
            div_t,
            div_tt,
            grad_tr_t,
            ric,
            scal,
        }
    }

    pub fn t2(&self) -> f64 {
        self.t.norm2()
    }

    pub fn vt2(&self) -> f64 {
        self.vt.norm2()
    }

    /// `⟨T, Tᵗ⟩`.
    pub fn ttt(&self) -> f64 {
        self.t.dot(&self.t.transpose())
    }

    /// `⟨T, 𝖯(T)⟩`.
    pub fn tpt(&self) -> f64 {
        self.t.dot(&self.pt)
    }

    /// `(T∘(𝖵T⌟φ))_ij = T_ip 𝖵T_m φ_mpj`.
    pub fn t_vt_phi(&self) -> Tensor {
        let mut vphi = Tensor::zeros(2);
        for p in 0..N {
            for jj in 0..N {
                vphi[(p, jj)] = (0..N).map(|m| self.vt[m] * self.phi[(m, p, jj)]).sum();
            }
        }
        self.t.compose(&vphi)
    }

    /// `F_jk = R_abcd φ_abj φ_cdk`.
    pub fn f_tensor(&self) -> Tensor {
        let mut rphi = Tensor::zeros(3); // R_abcd φ_cdk at (a, b, k)
        for a in 0..N {
            for b in 0..N {
                for k in 0..N {
                    let mut acc = 0.0;
                    for c in 0..N {
                        for d in 0..N {
                            acc += self.rm[(a, b, c, d)] * self.phi[(c, d, k)];
                        }
                    }
                    rphi[(a, b, k)] = acc;
                }
            }
        }
        Tensor::from_fn(2, |i| {
            let mut acc = 0.0;
            for a in 0..N {
                for b in 0..N {
                    acc += self.phi[(a, b, i[0])] * rphi[(a, b, i[1])];
                }
            }
            acc
        })
    }

    /// `(K₂)_ab = ∇_pT_aq φ_pbq`.
    pub fn k2(&self) -> Tensor {
        Tensor::from_fn(2, |i| {
            let (a, b) = (i[0], i[1]);
            let mut acc = 0.0;
            for p in 0..N {
                for q in 0..N {
                    acc += self.nabla_t[(p, a, q)] * self.phi[(p, b, q)];
                }
            }
            acc
        })
    }

    /// `(K₃)_ab = ∇_pT_qa φ_pqb`.
    pub fn k3(&self) -> Tensor {
        Tensor::from_fn(2, |i| {
            let (a, b) = (i[0], i[1]);
            let mut acc = 0.0;
            for p in 0..N {
                for q in 0..N {
                    acc += self.nabla_t[(p, q, a)] * self.phi[(p, q, b)];
                }
            }
            acc
        })
    }

    /// `(T⊚T)_pq = T_im T_jn φ_ijp φ_mnq`.
    pub fn t_circle_t(&self) -> Tensor {
        // (Tφ)_{m j p} = T_im φ_ijp, then contract with T_jn φ_mnq.
        let mut a = Tensor::zeros(3);
        for m in 0..N {
            for jj in 0..N {
                for p in 0..N {
                    a[(m, jj, p)] = (0..N).map(|i| self.t[(i, m)] * self.phi[(i, jj, p)]).sum();
                }
            }
        }
        let mut b = Tensor::zeros(3); // T_jn φ_mnq at (m, j, q)
        for m in 0..N {
            for jj in 0..N {
                for q in 0..N {
                    b[(m, jj, q)] = (0..N).map(|n| self.t[(jj, n)] * self.phi[(m, n, q)]).sum();
                }
            }
        }
        Tensor::from_fn(2, |i| {
            let mut acc = 0.0;
            for m in 0..N {
                for jj in 0..N {
                    acc += a[(m, jj, i[0])] * b[(m, jj, i[1])];
                }
            }
            acc
        })
    }

    /// `⟨∇T, ψ⟩_l = ∇_iT_jk ψ_ijkl`.
    pub fn nabla_t_psi(&self) -> Tensor {
        let mut out = Tensor::zeros(1);
        let nd = self.nabla_t.data();
        let pd = self.psi.data();
        for (ijk, &v) in nd.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for l in 0..N {
                out[l] += v * pd[ijk * N + l];
            }
        }
        out
    }

    pub fn densities(&self) -> DensityVector {
        let t2 = self.t2();
        let trt2 = self.tr_t * self.tr_t;
        let vt2 = self.vt2();
        let hilbert = self.scal / 6.0 - t2 / 3.0 - trt2 / 6.0;
        let hilbert_alt = -self.div_vt / 3.0 - t2 / 2.0 + vt2 / 6.0;
        DensityVector {
            scal: self.scal,
            t2,
            trt2,
            ttt: self.ttt(),
            tpt: self.tpt(),
            vt2,
            hilbert,
            hilbert_alt,
        }
    }

    /// `P̂₁ = −Ric − ⅓𝓛_{𝖵T}g − ⅔(T∘(𝖵T⌟φ))_sym + trT·T_sym`.
    pub fn hat_p1(&self) -> Tensor {
        let mut p = -&self.ric;
        p.axpy(-1.0 / 3.0, &self.lie_vt_g);
        p.axpy(-2.0 / 3.0, &self.t_vt_phi().sym());
        p.axpy(self.tr_t, &self.t.sym());
        p.sym()
    }

    /// `P̃₁ = P̂₁ + ⅓(|T|² − ⅓|𝖵T|²)g`.
    pub fn tilde_p1(&self) -> Tensor {
        let mut p = self.hat_p1();
        p.axpy((self.t2() - self.vt2() / 3.0) / 3.0, &Tensor::identity());
        p
    }

    /// `P₁ = P̂₁ + 𝖥·g`.
    pub fn p1(&self) -> Tensor {
        let mut p = self.hat_p1();
        p.axpy(self.densities().hilbert, &Tensor::identity());
        p
    }

    /// `P₂ = ⅔div T + ⅓∇tr T + ⅓tr T·𝖵T`.
    pub fn p2(&self) -> Tensor {
        let mut p = &self.div_t * (2.0 / 3.0);
        p.axpy(1.0 / 3.0, &self.grad_tr_t);
        p.axpy(self.tr_t / 3.0, &self.vt);
        p
    }

    /// `(Q₁, Q₂)` of one of the six basic functionals or the Hilbert functional.
    /// The normalized functional needs global data; see the variation module.
    pub fn gradient(&self, fid: BasicFunctional) -> GradientPair {
        let g = Tensor::identity();
        let t_sym = self.t.sym();
        let tv = self.t_vt_phi().sym();
        let (q1, q2) = match fid {
            BasicFunctional::Scal => {
                let mut q1 = &g * self.scal;
                q1.axpy(-2.0, &self.ric);
                (q1, Tensor::zeros(1))
            }
            BasicFunctional::TrT2 => {
                let mut q1 = &g * (self.tr_t * self.tr_t);
                q1.axpy(-2.0 * self.tr_t, &t_sym);
                let mut q2 = &self.grad_tr_t * -2.0;
                q2.axpy(-2.0 * self.tr_t, &self.vt);
                (q1, q2)
            }
            BasicFunctional::T2 => {
                let mut q1 = &self.ric * 2.0;
                q1 += &self.lie_vt_g;
                q1.axpy(self.t2(), &g);
                q1.axpy(-2.0 * self.tr_t, &t_sym);
                q1.axpy(2.0, &tv);
                (q1, &self.div_t * -2.0)
            }
            BasicFunctional::TTt => {
                let mut q1 = &self.f_tensor() * 0.5;
                q1.axpy(self.ttt(), &g);
                q1 += &self.t_circle_t().sym();
                q1.axpy(-2.0, &self.t_sq.sym());
                q1.axpy(2.0, &self.pt.compose(&self.t).sym());
                let mut q2 = &self.div_tt * -2.0;
                q2.axpy(-2.0, &v_of(&self.t_sq, &self.phi));
                (q1, q2)
            }
            BasicFunctional::TPT => {
                let mut q1 = &self.ric * 2.0;
                q1.axpy(-0.5, &self.f_tensor());
                q1.axpy(-self.scal + self.tr_t * self.tr_t - self.ttt(), &g);
                q1.axpy(-1.0, &self.t_circle_t().sym());
                q1.axpy(-2.0 * self.tr_t, &t_sym);
                q1.axpy(2.0, &self.t_sq.sym());
                q1.axpy(-2.0, &self.pt.compose(&self.t).sym());
                let mut q2 = &self.vt * (-2.0 * self.tr_t);
                q2.axpy(2.0, &v_of(&self.t_sq, &self.phi));
                q2.axpy(2.0, &self.t.apply(&self.vt));
                (q1, q2)
            }
            BasicFunctional::VT2 => {
                let mut q1 = &g * (self.scal - self.tr_t * self.tr_t + self.t2());
                q1 += &self.lie_vt_g;
                q1.axpy(2.0, &tv);
                let mut q2 = &self.div_t * -2.0;
                q2.axpy(2.0, &self.grad_tr_t);
                q2.axpy(2.0 * self.tr_t, &self.vt);
                (q1, q2)
            }
            BasicFunctional::Hilbert => (self.p1(), self.p2()),
        };
        GradientPair { q1: q1.sym(), q2 }
    }

    /// Residuals of the contracted G₂-Bianchi identities against curvature from `Rm`.
    pub fn curvature_checks(&self) -> CurvatureChecks {
        let d = self.densities();
        let scal_formula = -2.0 * self.div_vt + d.trt2 - d.ttt - d.tpt;
        let scal_torsion = -2.0 * self.div_vt + d.trt2 + d.vt2 - d.t2;
        let mut ric_formula = -&self.k2().sym();
        ric_formula.axpy(-0.5, &self.lie_vt_g);
        ric_formula.axpy(self.tr_t, &self.t.sym());
        ric_formula.axpy(-1.0, &self.t_sq.sym());
        let mut f_formula = &self.k3().sym() * 4.0;
        f_formula.axpy(-2.0, &self.t_circle_t().sym());
        let div_tt_formula = &self.grad_tr_t + &self.t.apply(&self.vt);
        let mut ntpsi_formula = &self.vt * self.tr_t;
        ntpsi_formula.axpy(-1.0, &v_of(&self.t_sq, &self.phi));
        ntpsi_formula.axpy(-1.0, &self.t.apply_left(&self.vt));
        CurvatureChecks {
            scal: self.scal,
            scal_formula,
            ric: self.ric.clone(),
            ric_formula: ric_formula.clone(),
            f: self.f_tensor(),
            f_formula: f_formula.clone(),
            scal_residual: (self.scal - scal_formula).abs(),
            scal_torsion_residual: (self.scal - scal_torsion).abs(),
            ric_residual: (&self.ric - &ric_formula).max_abs(),
            f_residual: (&self.f_tensor() - &f_formula).max_abs(),
            div_tt_residual: (&self.div_tt - &div_tt_formula).max_abs(),
            nabla_t_psi_residual: (&self.nabla_t_psi() - &ntpsi_formula).max_abs(),
        }
    }

    /// Residuals of the trace relations between `P₁`, `P̂₁`, `P̃₁` and the densities.
    pub fn trace_checks(&self) -> TraceChecks {
        let d = self.densities();
        let p1 = self.p1();
        let hat = self.hat_p1();
        let tilde = self.tilde_p1();
        let tr_p1 = p1.trace();
        let mut decomposed = tilde.clone();
        decomposed.axpy(-tilde.trace() / 4.0, &Tensor::identity());
        TraceChecks {
            tr_p1: (tr_p1 - (0.5 * d.scal - 0.5 * d.trt2 + d.vt2 / 3.0 - 2.0 * d.t2)).abs(),
            tr_p1_equiv: (tr_p1 - (-self.div_vt + 5.0 / 6.0 * d.vt2 - 2.5 * d.t2)).abs(),
            tr_hat_p1: (hat.trace() - (2.0 / 3.0 * self.div_vt - 2.0 * d.hilbert)).abs(),
            tr_tilde_p1: (tilde.trace()
                - (4.0 / 3.0 * self.div_vt - 20.0 / 3.0 * (-0.5 * d.t2 + d.vt2 / 6.0)))
                .abs(),
            p1_decomposition: (&p1 - &decomposed).max_abs(),
        }
    }
}

/// `𝖵(A)_k = A_ab φ_abk` in the frame.
pub fn v_of(a: &Tensor, phi: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(1);
    for i in 0..N {
        for j in 0..N {
            let v = a[(i, j)];
            if v == 0.0 {
                continue;
            }
            for k in 0..N {
                out[k] += v * phi[(i, j, k)];
            }
        }
    }
    out
}

/// `𝖯(A)_ij = A_ab ψ_abij` in the frame.
pub fn p_of(a: &Tensor, psi: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(2);
    for x in 0..N {
        for y in 0..N {
            let v = a[(x, y)];
            if v == 0.0 {
                continue;
            }
            for i in 0..N {
                for j in 0..N {
                    out[(i, j)] += v * psi[(x, y, i, j)];
                }
            }
        }
    }
    out
}

/// `Ric_jk = R_ajka`.
pub fn ricci(rm: &Tensor) -> Tensor {
    Tensor::from_fn(2, |i| (0..N).map(|a| rm[(a, i[0], i[1], a)]).sum())
}

/// The integrands of the basic functionals at one point.
#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct DensityVector {
    pub scal: f64,
    pub t2: f64,
    pub trt2: f64,
    pub ttt: f64,
    pub tpt: f64,
    pub vt2: f64,
    pub hilbert: f64,
    /// `−⅓div𝖵T − ½|T|² + ⅙|𝖵T|²`, equal to `hilbert` pointwise.
    pub hilbert_alt: f64,
}

impl DensityVector {
    pub fn two_forms_residual(&self) -> f64 {
        (self.hilbert - self.hilbert_alt).abs()
    }

    /// `|T|² − ⟨T,Tᵗ⟩ − ⟨T,𝖯T⟩ − |𝖵T|²`.
    pub fn id2_residual(&self) -> f64 {
        (self.t2 - self.ttt - self.tpt - self.vt2).abs()
    }

    pub fn get(&self, f: BasicFunctional) -> f64 {
        match f {
            BasicFunctional::Scal => self.scal,
            BasicFunctional::TrT2 => self.trt2,
            BasicFunctional::T2 => self.t2,
            BasicFunctional::TTt => self.ttt,
            BasicFunctional::TPT => self.tpt,
            BasicFunctional::VT2 => self.vt2,
            BasicFunctional::Hilbert => self.hilbert,
        }
    }
}

/// Functionals with a pointwise density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BasicFunctional {
    Scal,
    TrT2,
    T2,
    TTt,
    TPT,
    VT2,
    Hilbert,
}

impl BasicFunctional {
    pub const ALL: [BasicFunctional; 7] = [
        BasicFunctional::Scal,
        BasicFunctional::TrT2,
        BasicFunctional::T2,
        BasicFunctional::TTt,
        BasicFunctional::TPT,
        BasicFunctional::VT2,
        BasicFunctional::Hilbert,
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientPair {
    pub q1: Tensor,
    pub q2: Tensor,
}

#[derive(Clone, Debug)]
pub struct CurvatureChecks {
    pub scal: f64,
    pub scal_formula: f64,
    pub ric: Tensor,
    pub ric_formula: Tensor,
    pub f: Tensor,
    pub f_formula: Tensor,
    pub scal_residual: f64,
    pub scal_torsion_residual: f64,
    pub ric_residual: f64,
    pub f_residual: f64,
    pub div_tt_residual: f64,
    pub nabla_t_psi_residual: f64,
}

impl CurvatureChecks {
    pub fn max_residual(&self) -> f64 {
        [
            self.scal_residual,
            self.scal_torsion_residual,
            self.ric_residual,
            self.f_residual,
            self.div_tt_residual,
            self.nabla_t_psi_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct TraceChecks {
    pub tr_p1: f64,
    pub tr_p1_equiv: f64,
    pub tr_hat_p1: f64,
    pub tr_tilde_p1: f64,
    pub p1_decomposition: f64,
}

impl TraceChecks {
    pub fn max(&self) -> f64 {
        [
            self.tr_p1,
            self.tr_p1_equiv,
            self.tr_hat_p1,
            self.tr_tilde_p1,
            self.p1_decomposition,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn densities(j: &G2Jet) -> DensityVector {
    PointOps::new(j).densities()
}

pub fn curvature_from_torsion(j: &G2Jet) -> CurvatureChecks {
    PointOps::new(j).curvature_checks()
}

pub fn p1(j: &G2Jet) -> Tensor {
    PointOps::new(j).p1()
}

pub fn p2(j: &G2Jet) -> Tensor {
    PointOps::new(j).p2()
}

pub fn hat_p1(j: &G2Jet) -> Tensor {
    PointOps::new(j).hat_p1()
}

pub fn tilde_p1(j: &G2Jet) -> Tensor {
    PointOps::new(j).tilde_p1()
}

// Whole-field operators. Inputs and outputs are frame tensors per grid point.

/// Frame covariant derivative of a field of frame tensors, derivative slot first.
pub fn nabla_field(geo: &Geometry, field: &[Tensor]) -> Vec<Tensor> {
    let coord = geo.to_coord_field(field);
    (0..geo.len())
        .into_par_iter()
        .map(|p| geo.covariant_frame(&coord, p))
        .collect()
}

fn frame_t_psi(geo: &Geometry, p: usize) -> (Tensor, Tensor, Tensor) {
    let f = &geo.frames[p];
    (
        f.to_frame(&geo.torsions[p]),
        f.to_frame(&geo.field.phi_samples[p]),
        f.to_frame(&geo.psis[p]),
    )
}

/// `div h` from `∇h` at `(a, b, k)`: `Σ_a ∇_a h_ak`.
fn div_of(nh: &Tensor) -> Tensor {
    Tensor::from_fn(1, |i| (0..N).map(|a| nh[(a, a, i[0])]).sum())
}

/// `curl X_k = ∇_aX_b φ_abk`.
fn curl_of(nx: &Tensor, phi: &Tensor) -> Tensor {
    v_of(nx, phi)
}

/// `𝖫(h, X) = div h + ½curl X − ½X⌟𝖯(T) − T(X)`.
pub fn l_op(geo: &Geometry, h: &[Tensor], x: &[Tensor]) -> Vec<Tensor> {
    let nh = nabla_field(geo, h);
    let nx = nabla_field(geo, x);
    (0..geo.len())
        .into_par_iter()
        .map(|p| {
            let (t, phi, psi) = frame_t_psi(geo, p);
            let mut out = div_of(&nh[p]);
            out.axpy(0.5, &curl_of(&nx[p], &phi));
            out.axpy(-0.5, &p_of(&t, &psi).apply_left(&x[p]));
            out.axpy(-1.0, &t.apply(&x[p]));
            out
        })
        .collect()
}

/// `B̃(h, X) = 𝖫(h − ¼tr h·g, X)`.
pub fn tilde_b(geo: &Geometry, h: &[Tensor], x: &[Tensor]) -> Vec<Tensor> {
    let shifted: Vec<Tensor> = h
        .iter()
        .map(|hh| {
            let mut s = hh.clone();
            s.axpy(-hh.trace() / 4.0, &Tensor::identity());
            s
        })
        .collect();
    l_op(geo, &shifted, x)
}

/// `𝖫*(Y) = (−½𝓛_Yg, ½curl Y − Y⌟T)`.
pub fn l_star(geo: &Geometry, y: &[Tensor]) -> (Vec<Tensor>, Vec<Tensor>) {
    let ny = nabla_field(geo, y);
    (0..geo.len())
        .into_par_iter()
        .map(|p| {
            let (t, phi, _) = frame_t_psi(geo, p);
            let lie = &ny[p] + &ny[p].transpose();
            let h = &lie * -0.5;
            let mut x = &curl_of(&ny[p], &phi) * 0.5;
            x.axpy(-1.0, &t.apply_left(&y[p]));
            (h, x)
        })
        .unzip()
}

/// `𝖪(Y) = 𝖫*(Y) + ((1/7)div Y·g, 0)`.
pub fn k_op(geo: &Geometry, y: &[Tensor]) -> (Vec<Tensor>, Vec<Tensor>) {
    let ny = nabla_field(geo, y);
    let (mut h, x) = l_star(geo, y);
    for (hh, n) in h.iter_mut().zip(&ny) {
        hh.axpy(n.trace() / 7.0, &Tensor::identity());
    }
    (h, x)
}

/// Grid maxima of `𝖫(P₁,P₂)` and `B̃(P̃₁,P₂)`, which vanish identically.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BianchiResiduals {
    pub l_of_p: f64,
    pub tilde_b_of_tilde_p: f64,
}

pub fn bianchi_residuals(geo: &Geometry) -> BianchiResiduals {
    let ops: Vec<(Tensor, Tensor, Tensor)> = geo.map_jets(|j| {
        let o = PointOps::new(j);
        (o.p1(), o.p2(), o.tilde_p1())
    });
    let p1: Vec<Tensor> = ops.iter().map(|o| o.0.clone()).collect();
    let p2: Vec<Tensor> = ops.iter().map(|o| o.1.clone()).collect();
    let tp1: Vec<Tensor> = ops.iter().map(|o| o.2.clone()).collect();
    let max = |v: Vec<Tensor>| v.iter().map(Tensor::max_abs).fold(0.0, f64::max);
    BianchiResiduals {
        l_of_p: max(l_op(geo, &p1, &p2)),
        tilde_b_of_tilde_p: max(tilde_b(geo, &tp1, &p2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::standard_phi;
    use crate::field::{FieldSpec, G2Field};
    use crate::grid::Grid;
    use std::f64::consts::TAU;

    #[test]
    fn nearly_g2_values() {
        let o = PointOps::new(&G2Jet::synthetic_nearly_g2(1.0));
        let g = Tensor::identity();
        assert!((o.scal - 42.0).abs() < 1e-12);
        assert!((&o.ric - &(&g * 6.0)).max_abs() < 1e-12);
        assert!((&o.p1() - &(&g * -2.5)).max_abs() < 1e-12);
        assert!(o.p2().max_abs() < 1e-12);
        assert!((o.densities().hilbert + 3.5).abs() < 1e-12);
        assert!((&o.hat_p1() - &g).max_abs() < 1e-12);
        assert!(o.curvature_checks().max_residual() < 1e-12);
        assert!(o.trace_checks().max() < 1e-12);
    }

    #[test]
    fn constant_field_is_torsion_free() {
        let grid = Grid::new(vec![0], vec![16], vec![TAU]).unwrap();
        let f = G2Field::constant(grid, &standard_phi()).unwrap();
        let geo = Geometry::new(&f).unwrap();
        let b = bianchi_residuals(&geo);
        assert_eq!(b.l_of_p, 0.0);
        assert_eq!(b.tilde_b_of_tilde_p, 0.0);
    }

    #[test]
    fn random_field_identities_hold_to_discretization() {
        let spec = FieldSpec::new(vec![0], vec![64], vec![TAU], 0.05, 3);
        let f = G2Field::random(&spec).unwrap();
        let geo = Geometry::new(&f).unwrap();
        let worst = geo
            .map_jets(|j| {
                let o = PointOps::new(j);
                let d = o.densities();
                o.curvature_checks()
                    .max_residual()
                    .max(o.trace_checks().max())
                    .max(d.two_forms_residual())
                    .max(d.id2_residual())
            })
            .into_iter()
            .fold(0.0, f64::max);
        assert!(worst < 2e-4, "worst {worst}");
        let b = bianchi_residuals(&geo);
        assert!(b.l_of_p < 3e-4 && b.tilde_b_of_tilde_p < 3e-4, "{b:?}");
    }
}
