//! Pointwise algebra of a G₂-structure on a 7-dimensional space.
//!
//! Conventions used throughout the crate:
//!
//! * Forms are stored as fully antisymmetric tensors; the inner product is
//!   the full contraction `⟨α,β⟩ = α_{i…}β^{i…}` with no `1/k!` factor.
//! * The reference form is
//!   `φ₀ = e¹²³ + e¹⁴⁵ + e¹⁶⁷ + e²⁴⁶ − e²⁵⁷ − e³⁴⁷ − e³⁵⁶` (one-based labels).
//! * The metric and orientation are fixed by
//!   `(V⌟φ)∧(W⌟φ)∧φ = −6 g(V,W) dμ`, and `ψ = *φ`. For `φ₀` this makes the
//!   volume form `dμ = −e¹²³⁴⁵⁶⁷` and gives the contraction identity
//!   `φ_ijp φ_klp = g_ik g_jl − g_il g_jk − ψ_ijkl`.

use std::sync::OnceLock;

use nalgebra as na;

use crate::error::G2Error;
use crate::tensor::{Symmetry, Tensor, N};

type Mat7 = na::SMatrix<f64, 7, 7>;

/// The signed one-based triples of the reference form.
const PHI0_TERMS: [([usize; 3], f64); 7] = [
    ([1, 2, 3], 1.0),
    ([1, 4, 5], 1.0),
    ([1, 6, 7], 1.0),
    ([2, 4, 6], 1.0),
    ([2, 5, 7], -1.0),
    ([3, 4, 7], -1.0),
    ([3, 5, 6], -1.0),
];

/// Relative eigenvalue floor below which a candidate metric is rejected.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// All permutations of `0..7` with their signs.
pub fn permutations7() -> &'static [([u8; 7], f64)] {
    static PERMS: OnceLock<Vec<([u8; 7], f64)>> = OnceLock::new();
    PERMS.get_or_init(|| {
        let mut out = Vec::with_capacity(5040);
        let mut p = [0u8, 1, 2, 3, 4, 5, 6];
        heap_permute(&mut p, 7, &mut out);
        out
    })
}

fn heap_permute(p: &mut [u8; 7], k: usize, out: &mut Vec<([u8; 7], f64)>) {
    if k == 1 {
        out.push((*p, sign_of(p)));
        return;
    }
    for i in 0..k {
        heap_permute(p, k - 1, out);
        if i + 1 < k {
            if k % 2 == 0 {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
        }
    }
}

fn sign_of(p: &[u8; 7]) -> f64 {
    let mut inv = 0;
    for i in 0..7 {
        for j in i + 1..7 {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Increasing index triples `i < j < k`, the 35 independent 3-form slots.
pub fn triples() -> &'static [[usize; 3]] {
    static T: OnceLock<Vec<[usize; 3]>> = OnceLock::new();
    T.get_or_init(|| {
        let mut v = Vec::with_capacity(35);
        for i in 0..N {
            for j in i + 1..N {
                for k in j + 1..N {
                    v.push([i, j, k]);
                }
            }
        }
        v
    })
}

/// Increasing index pairs `p ≤ q`, the 28 independent symmetric slots.
pub fn sym_pairs() -> &'static [[usize; 2]] {
    static P: OnceLock<Vec<[usize; 2]>> = OnceLock::new();
    P.get_or_init(|| {
        let mut v = Vec::with_capacity(28);
        for p in 0..N {
            for q in p..N {
                v.push([p, q]);
            }
        }
        v
    })
}

/// Writes `v` into all six index orderings of `(i, j, k)` with signs.
pub fn set_antisym3(t: &mut Tensor, i: usize, j: usize, k: usize, v: f64) {
    t[(i, j, k)] = v;
    t[(j, k, i)] = v;
    t[(k, i, j)] = v;
    t[(j, i, k)] = -v;
    t[(i, k, j)] = -v;
    t[(k, j, i)] = -v;
}

/// Full antisymmetric 3-form from its 35 independent components.
pub fn three_form_from_components(c: &[f64]) -> Tensor {
    assert_eq!(c.len(), 35);
    let mut t = Tensor::zeros(3);
    for (n, &[i, j, k]) in triples().iter().enumerate() {
        set_antisym3(&mut t, i, j, k, c[n]);
    }
    t.with_symmetry(Symmetry::Antisymmetric)
}

/// The 35 independent components of a 3-form in `triples()` order.
pub fn three_form_components(t: &Tensor) -> [f64; 35] {
    let mut c = [0.0; 35];
    for (n, &[i, j, k]) in triples().iter().enumerate() {
        c[n] = t[(i, j, k)];
    }
    c
}

/// The reference 3-form `φ₀`.
pub fn standard_phi() -> Tensor {
    let mut t = Tensor::zeros(3);
    for ([a, b, c], s) in PHI0_TERMS {
        set_antisym3(&mut t, a - 1, b - 1, c - 1, s);
    }
    t.with_symmetry(Symmetry::Antisymmetric)
}

/// Metric, inverse metric, volume density and orientation induced by `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricData {
    pub g: Tensor,
    pub g_inv: Tensor,
    /// `√det g` relative to the coordinate volume.
    pub vol_density: f64,
    /// Sign of `dμ` against `dx⁰∧…∧dx⁶`.
    pub orientation: f64,
}

impl MetricData {
    /// The Euclidean metric carried by the reference form.
    pub fn identity() -> Self {
        MetricData {
            g: Tensor::identity(),
            g_inv: Tensor::identity(),
            vol_density: 1.0,
            orientation: -1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        (&self.g - &Tensor::identity()).max_abs() == 0.0
    }
}

pub(crate) fn to_mat7(t: &Tensor) -> Mat7 {
    Mat7::from_fn(|i, j| t[(i, j)])
}

pub(crate) fn from_mat7(m: &Mat7) -> Tensor {
    Tensor::from_fn(2, |i| m[(i[0], i[1])])
}

/// The matrix `b_ij`, coefficient of `(e_i⌟φ)∧(e_j⌟φ)∧φ` on `dx⁰∧…∧dx⁶`.
pub fn b_form(phi: &Tensor) -> Tensor {
    // ζ^{a1..a4} = (1/6) ε^{a1..a7} φ_{a5a6a7}
    let mut zeta = Tensor::zeros(4);
    for (p, s) in permutations7() {
        let p = p.map(|x| x as usize);
        zeta[(p[0], p[1], p[2], p[3])] += s * phi[(p[4], p[5], p[6])] / 6.0;
    }
    // u_i^{cd} = φ_{iab} ζ^{abcd}
    let mut u = Tensor::zeros(3);
    for i in 0..N {
        for a in 0..N {
            for b in 0..N {
                let f = phi[(i, a, b)];
                if f == 0.0 {
                    continue;
                }
                for c in 0..N {
                    for d in 0..N {
                        u[(i, c, d)] += f * zeta[(a, b, c, d)];
                    }
                }
            }
        }
    }
    let mut b = Tensor::zeros(2);
    for i in 0..N {
        for j in 0..N {
            let mut s = 0.0;
            for c in 0..N {
                for d in 0..N {
                    s += u[(i, c, d)] * phi[(j, c, d)];
                }
            }
            b[(i, j)] = 0.25 * s;
        }
    }
    b.sym()
}

/// Induced metric data of a positive 3-form.
pub fn metric_from_phi(phi: &Tensor) -> Result<MetricData, G2Error> {
    let b = to_mat7(&b_form(phi));
    let det_b = b.determinant();
    if !det_b.is_finite() || det_b == 0.0 {
        return Err(G2Error::NotAG2Structure(format!(
            "degenerate B-form, det b = {det_b:e}"
        )));
    }
    // b = −6·orientation·vol·g, and b has odd size, so sign(det b) = −orientation.
    let orientation = -det_b.signum();
    let c = b * (-1.0 / (6.0 * orientation));
    let eig = na::SymmetricEigen::new(c);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= POSITIVITY_TOL * max {
        return Err(G2Error::NotAG2Structure(format!(
            "B-form is not definite (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    // det c = vol⁷ det g = vol⁹
    let vol = c.determinant().powf(1.0 / 9.0);
    let g = c / vol;
    let g_inv = g
        .try_inverse()
        .ok_or_else(|| G2Error::NotAG2Structure("singular metric".into()))?;
    Ok(MetricData {
        g: from_mat7(&g).sym(),
        g_inv: from_mat7(&g_inv).sym(),
        vol_density: vol,
        orientation,
    })
}

/// Contracts slot `slot` of `t` with the matrix `m`: `out[..a..] = Σ_i t[..i..] m_ia`.
pub fn contract_slot(t: &Tensor, slot: usize, m: &Tensor) -> Tensor {
    let rank = t.rank();
    assert!(slot < rank);
    let post = 7usize.pow((rank - 1 - slot) as u32);
    let pre = 7usize.pow(slot as u32);
    let src = t.data();
    let mut out = Tensor::zeros(rank);
    let dst = out.data_mut();
    let md = m.data();
    for p in 0..pre {
        for i in 0..N {
            let base_i = (p * N + i) * post;
            for a in 0..N {
                let w = md[i * N + a];
                if w == 0.0 {
                    continue;
                }
                let base_a = (p * N + a) * post;
                for q in 0..post {
                    dst[base_a + q] += w * src[base_i + q];
                }
            }
        }
    }
    out
}

/// Raises every index with `g⁻¹`.
pub fn raise_all(t: &Tensor, m: &MetricData) -> Tensor {
    if m.is_identity() {
        return t.clone();
    }
    let mut out = t.clone();
    for s in 0..t.rank() {
        out = contract_slot(&out, s, &m.g_inv);
    }
    out
}

/// Raises the listed slots with `g⁻¹`.
pub fn raise_slots(t: &Tensor, slots: &[usize], m: &MetricData) -> Tensor {
    if m.is_identity() {
        return t.clone();
    }
    let mut out = t.clone();
    for &s in slots {
        out = contract_slot(&out, s, &m.g_inv);
    }
    out
}

/// Inner product of two tensors of equal rank with indices raised by `m`.
pub fn inner(a: &Tensor, b: &Tensor, m: &MetricData) -> f64 {
    if a.rank() == 0 {
        return a.value() * b.value();
    }
    raise_all(a, m).dot(b)
}

/// Inner product on pairs `(h, X)`: `⟨h,w⟩ + ⟨X,Y⟩`.
pub fn pair_inner(h: &Tensor, x: &Tensor, w: &Tensor, y: &Tensor, m: &MetricData) -> f64 {
    inner(h, w, m) + inner(x, y, m)
}

/// Hodge star of a 3- or 4-form.
pub fn hodge_dual(form: &Tensor, m: &MetricData) -> Tensor {
    let k = form.rank();
    assert!(k == 3 || k == 4, "hodge_dual supports 3- and 4-forms");
    let up = raise_all(form, m);
    let fact = if k == 3 { 6.0 } else { 24.0 };
    let scale = m.orientation * m.vol_density / fact;
    let mut out = Tensor::zeros(7 - k);
    for (p, s) in permutations7() {
        let p = p.map(|x| x as usize);
        if k == 3 {
            let v = up[(p[0], p[1], p[2])];
            if v != 0.0 {
                out[(p[3], p[4], p[5], p[6])] += s * scale * v;
            }
        } else {
            let v = up[(p[0], p[1], p[2], p[3])];
            if v != 0.0 {
                out[(p[4], p[5], p[6])] += s * scale * v;
            }
        }
    }
    out.with_symmetry(Symmetry::Antisymmetric)
}

/// Coefficient of `α∧β` on `dx⁰∧…∧dx⁶` for a 3-form `α` and a 4-form `β`.
pub fn wedge_top_3_4(alpha: &Tensor, beta: &Tensor) -> f64 {
    let mut s = 0.0;
    for (p, sg) in permutations7() {
        let p = p.map(|x| x as usize);
        s += sg * alpha[(p[0], p[1], p[2])] * beta[(p[3], p[4], p[5], p[6])];
    }
    s / (6.0 * 24.0)
}

/// `(h⋄φ)_ijk = h_i^p φ_pjk + h_j^p φ_ipk + h_k^p φ_ijp`.
pub fn diamond(h: &Tensor, phi: &Tensor, m: &MetricData) -> Tensor {
    // contract_slot sums t[..p..]·M_p,i, so pass (h·g⁻¹)ᵀ = g⁻¹·h.
    let hm = if m.is_identity() {
        h.transpose()
    } else {
        m.g_inv.compose(h)
    };
    let mut out = contract_slot(phi, 0, &hm);
    out += &contract_slot(phi, 1, &hm);
    out += &contract_slot(phi, 2, &hm);
    out.with_symmetry(Symmetry::Antisymmetric)
}

/// `(X⌟ψ)_ijk = X^m ψ_mijk`; also contracts `X` into any form's first slot.
pub fn contract_psi(x: &Tensor, psi: &Tensor, m: &MetricData) -> Tensor {
    let xu = raise_all(x, m);
    let rank = psi.rank();
    let inner_len = psi.data().len() / N;
    let mut out = Tensor::zeros(rank - 1);
    let d = out.data_mut();
    for a in 0..N {
        let w = xu[a];
        if w == 0.0 {
            continue;
        }
        let src = &psi.data()[a * inner_len..(a + 1) * inner_len];
        for (o, s) in d.iter_mut().zip(src) {
            *o += w * s;
        }
    }
    out.with_symmetry(Symmetry::Antisymmetric)
}

/// `(X⌟φ)_ij = X^m φ_mij`.
pub fn contract_phi(x: &Tensor, phi: &Tensor, m: &MetricData) -> Tensor {
    contract_psi(x, phi, m)
}

/// `h⋄φ + X⌟ψ`.
pub fn compose_3form(h: &Tensor, x: &Tensor, phi: &Tensor, psi: &Tensor, m: &MetricData) -> Tensor {
    let mut w = diamond(h, phi, m);
    w += &contract_psi(x, psi, m);
    w
}

/// Symmetric 2-tensor basis element for slot `n` of `sym_pairs()`.
pub fn sym_basis(n: usize) -> Tensor {
    let [p, q] = sym_pairs()[n];
    let mut h = Tensor::zeros(2);
    h[(p, q)] = 1.0;
    h[(q, p)] = 1.0;
    h.with_symmetry(Symmetry::Symmetric)
}

/// Matrix of `(h, X) ↦ h⋄φ + X⌟ψ` from (28 symmetric slots ⊕ 7) to 35 triples.
pub fn decomposition_matrix(phi: &Tensor, psi: &Tensor, m: &MetricData) -> na::DMatrix<f64> {
    let mut a = na::DMatrix::<f64>::zeros(35, 35);
    for n in 0..28 {
        let c = three_form_components(&diamond(&sym_basis(n), phi, m));
        for r in 0..35 {
            a[(r, n)] = c[r];
        }
    }
    for k in 0..N {
        let mut e = Tensor::zeros(1);
        e[k] = 1.0;
        let c = three_form_components(&contract_psi(&e, psi, m));
        for r in 0..35 {
            a[(r, 28 + k)] = c[r];
        }
    }
    a
}

/// Splits a 3-form as `h⋄φ + X⌟ψ` by a dense linear solve.
pub fn decompose_3form(
    omega: &Tensor,
    phi: &Tensor,
    psi: &Tensor,
    m: &MetricData,
) -> Result<(Tensor, Tensor), G2Error> {
    let a = decomposition_matrix(phi, psi, m);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(G2Error::SingularDecomposition {
            ratio: smin / smax,
        });
    }
    let rhs = na::DVector::from_row_slice(&three_form_components(omega));
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| G2Error::SingularDecomposition { ratio: smin / smax })?;
    let mut h = Tensor::zeros(2);
    for (n, &[p, q]) in sym_pairs().iter().enumerate() {
        h[(p, q)] = sol[n];
        h[(q, p)] = sol[n];
    }
    let mut x = Tensor::zeros(1);
    for k in 0..N {
        x[k] = sol[28 + k];
    }
    Ok((h.with_symmetry(Symmetry::Symmetric), x))
}

/// `𝖵(α)_k = α^{ij} φ_ijk`.
pub fn v_op(alpha: &Tensor, phi: &Tensor, m: &MetricData) -> Tensor {
    let au = raise_all(alpha, m);
    let mut out = Tensor::zeros(1);
    for i in 0..N {
        for j in 0..N {
            let a = au[(i, j)];
            if a == 0.0 {
                continue;
            }
            for k in 0..N {
                out[k] += a * phi[(i, j, k)];
            }
        }
    }
    out
}

/// `𝖯(η)_ij = η^{ab} ψ_abij`.
pub fn p_op(eta: &Tensor, psi: &Tensor, m: &MetricData) -> Tensor {
    let eu = raise_all(eta, m);
    let mut out = Tensor::zeros(2);
    for a in 0..N {
        for b in 0..N {
            let e = eu[(a, b)];
            if e == 0.0 {
                continue;
            }
            for i in 0..N {
                for j in 0..N {
                    out[(i, j)] += e * psi[(a, b, i, j)];
                }
            }
        }
    }
    out
}

/// Projections of a 2-form onto its 7- and 14-dimensional parts.
pub fn proj_2form(alpha: &Tensor, psi: &Tensor, m: &MetricData) -> (Tensor, Tensor) {
    let pa = p_op(alpha, psi, m);
    let a7 = (&(alpha * 2.0) - &pa) * (1.0 / 6.0);
    let a14 = (&pa + &(alpha * 4.0)) * (1.0 / 6.0);
    (a7, a14)
}

/// `curl(A)_{i₁…i_k} = ∇^a A^b_{i₁…i_{k−1}} φ_{ab i_k}` from `nabla_a[a, b, i₁, …]`.
pub fn curl(nabla_a: &Tensor, phi: &Tensor, m: &MetricData) -> Tensor {
    let r = nabla_a.rank();
    assert!(r == 2 || r == 3, "curl is implemented for 1-forms and 2-tensors");
    let up = raise_slots(nabla_a, &[0, 1], m);
    if r == 2 {
        let mut out = Tensor::zeros(1);
        for a in 0..N {
            for b in 0..N {
                let v = up[(a, b)];
                if v == 0.0 {
                    continue;
                }
                for k in 0..N {
                    out[k] += v * phi[(a, b, k)];
                }
            }
        }
        out
    } else {
        let mut out = Tensor::zeros(2);
        for a in 0..N {
            for b in 0..N {
                for i in 0..N {
                    let v = up[(a, b, i)];
                    if v == 0.0 {
                        continue;
                    }
                    for j in 0..N {
                        out[(i, j)] += v * phi[(a, b, j)];
                    }
                }
            }
        }
        out
    }
}

/// Orthonormal coframe at a point: `Fᵀ g F = I`, `E = F⁻¹`.
#[derive(Clone, Debug)]
pub struct Frame {
    /// Columns are orthonormal vectors in coordinate components.
    pub f: Tensor,
    /// Inverse of `f`; rows are the dual coframe.
    pub e: Tensor,
}

impl Frame {
    pub fn identity() -> Self {
        Frame {
            f: Tensor::identity(),
            e: Tensor::identity(),
        }
    }

    pub fn from_metric(m: &MetricData) -> Self {
        let chol = na::Cholesky::new(to_mat7(&m.g)).expect("metric is positive definite");
        let l = chol.l();
        let e = l.transpose();
        let f = e.try_inverse().expect("triangular factor is invertible");
        Frame {
            f: from_mat7(&f),
            e: from_mat7(&e),
        }
    }

    /// Covariant coordinate components to orthonormal-frame components.
    pub fn to_frame(&self, t: &Tensor) -> Tensor {
        let mut out = t.clone();
        for s in 0..t.rank() {
            out = contract_slot(&out, s, &self.f);
        }
        out
    }

    /// Orthonormal-frame components back to covariant coordinate components.
    pub fn to_coord(&self, t: &Tensor) -> Tensor {
        let mut out = t.clone();
        for s in 0..t.rank() {
            out = contract_slot(&out, s, &self.e);
        }
        out
    }
}

/// Largest absolute residual of each contraction identity, scaled by the
/// size of its right-hand side.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct IdentityResiduals {
    pub phi_phi_one: f64,
    pub phi_phi_two: f64,
    pub phi_phi_full: f64,
    pub psi_psi_two: f64,
    pub psi_psi_three: f64,
    pub psi_psi_full: f64,
    pub phi_psi_one: f64,
    pub phi_psi_two: f64,
    pub phi_psi_three: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.phi_phi_one,
            self.phi_phi_two,
            self.phi_phi_full,
            self.psi_psi_two,
            self.psi_psi_three,
            self.psi_psi_full,
            self.phi_psi_one,
            self.phi_psi_two,
            self.phi_psi_three,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1e-300)
}

/// Checks every contraction identity between `φ` and `ψ`, raising indices with `m`.
pub fn identity_residuals(phi: &Tensor, psi: &Tensor, m: &MetricData) -> IdentityResiduals {
    let g = &m.g;
    let phi_up = raise_all(phi, m);
    let psi_up = raise_all(psi, m);
    let phi_last = raise_slots(phi, &[2], m);
    let psi_last2 = raise_slots(psi, &[2, 3], m);
    let mut r = IdentityResiduals::default();

    // φ_ijp φ_kl^p = g_ik g_jl − g_il g_jk − ψ_ijkl
    let mut d = 0.0f64;
    let mut s = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                for l in 0..N {
                    let lhs: f64 = (0..N).map(|p| phi[(i, j, p)] * phi_last[(k, l, p)]).sum();
                    let rhs = g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)] - psi[(i, j, k, l)];
                    d = d.max((lhs - rhs).abs());
                    s = s.max(rhs.abs());
                }
            }
        }
    }
    r.phi_phi_one = rel(d, s);

    // φ_ipq φ_j^{pq} = 6 g_ij
    let phi_last2 = raise_slots(phi, &[1, 2], m);
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for i in 0..N {
        for j in 0..N {
            let mut lhs = 0.0;
            for p in 0..N {
                for q in 0..N {
                    lhs += phi[(i, p, q)] * phi_last2[(j, p, q)];
                }
            }
            let rhs = 6.0 * g[(i, j)];
            d = d.max((lhs - rhs).abs());
            s = s.max(rhs.abs());
        }
    }
    r.phi_phi_two = rel(d, s);
    r.phi_phi_full = (phi.dot(&phi_up) - 42.0).abs() / 42.0;

    // ψ_ijkl ψ_pq^{kl} = 4 g_ip g_jq − 4 g_iq g_jp − 2 ψ_ijpq
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for i in 0..N {
        for j in 0..N {
            for p in 0..N {
                for q in 0..N {
                    let mut lhs = 0.0;
                    for k in 0..N {
                        for l in 0..N {
                            lhs += psi[(i, j, k, l)] * psi_last2[(p, q, k, l)];
                        }
                    }
                    let rhs = 4.0 * g[(i, p)] * g[(j, q)] - 4.0 * g[(i, q)] * g[(j, p)]
                        - 2.0 * psi[(i, j, p, q)];
                    d = d.max((lhs - rhs).abs());
                    s = s.max(rhs.abs());
                }
            }
        }
    }
    r.psi_psi_two = rel(d, s);

    // ψ_ijkl ψ_a^{jkl} = 24 g_ia
    let psi_last3 = raise_slots(psi, &[1, 2, 3], m);
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for i in 0..N {
        for a in 0..N {
            let mut lhs = 0.0;
            for j in 0..N {
                for k in 0..N {
                    for l in 0..N {
                        lhs += psi[(i, j, k, l)] * psi_last3[(a, j, k, l)];
                    }
                }
            }
            let rhs = 24.0 * g[(i, a)];
            d = d.max((lhs - rhs).abs());
            s = s.max(rhs.abs());
        }
    }
    r.psi_psi_three = rel(d, s);
    r.psi_psi_full = (psi.dot(&psi_up) - 168.0).abs() / 168.0;

    // φ_ijk ψ_abc^k = g_ia φ_jbc + g_ib φ_ajc + g_ic φ_abj − g_ja φ_ibc − g_jb φ_aic − g_jc φ_abi
    let psi_last = raise_slots(psi, &[3], m);
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for i in 0..N {
        for j in 0..N {
            for a in 0..N {
                for b in 0..N {
                    for c in 0..N {
                        let lhs: f64 = (0..N).map(|k| phi[(i, j, k)] * psi_last[(a, b, c, k)]).sum();
                        let rhs = g[(i, a)] * phi[(j, b, c)]
                            + g[(i, b)] * phi[(a, j, c)]
                            + g[(i, c)] * phi[(a, b, j)]
                            - g[(j, a)] * phi[(i, b, c)]
                            - g[(j, b)] * phi[(a, i, c)]
                            - g[(j, c)] * phi[(a, b, i)];
                        d = d.max((lhs - rhs).abs());
                        s = s.max(rhs.abs());
                    }
                }
            }
        }
    }
    r.phi_psi_one = rel(d, s);

    // φ_ijk ψ_ab^{jk} = −4 φ_iab
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for i in 0..N {
        for a in 0..N {
            for b in 0..N {
                let mut lhs = 0.0;
                for j in 0..N {
                    for k in 0..N {
                        lhs += phi[(i, j, k)] * psi_last2[(a, b, j, k)];
                    }
                }
                let rhs = -4.0 * phi[(i, a, b)];
                d = d.max((lhs - rhs).abs());
                s = s.max(rhs.abs());
            }
        }
    }
    r.phi_psi_two = rel(d, s);

    // φ_ijk ψ_a^{ijk} = 0, scaled by |φ||ψ|
    let mut d = 0.0f64;
    for a in 0..N {
        let mut lhs = 0.0;
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    lhs += phi_up[(i, j, k)] * psi[(a, i, j, k)];
                }
            }
        }
        d = d.max(lhs.abs());
    }
    let scale = (phi.dot(&phi_up) * psi.dot(&psi_up)).sqrt();
    r.phi_psi_three = d / scale.max(1e-300);
    r
}

/// Pulls `φ₀` back by `A⁻¹`: `(A·φ)_ijk = φ_abc (A⁻¹)_ai (A⁻¹)_bj (A⁻¹)_ck`.
pub fn transport(phi: &Tensor, a: &Tensor) -> Option<Tensor> {
    let inv = to_mat7(a).try_inverse()?;
    let inv = from_mat7(&inv);
    let mut out = phi.clone();
    for s in 0..3 {
        out = contract_slot(&out, s, &inv);
    }
    Some(out.with_symmetry(Symmetry::Antisymmetric))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_table_is_complete_and_signed() {
        let p = permutations7();
        assert_eq!(p.len(), 5040);
        let even = p.iter().filter(|(_, s)| *s > 0.0).count();
        assert_eq!(even, 2520);
        let mut seen: Vec<[u8; 7]> = p.iter().map(|(q, _)| *q).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 5040);
    }

    #[test]
    fn reference_form_shape() {
        let phi = standard_phi();
        assert_eq!(phi[(0, 1, 2)], 1.0);
        assert_eq!(phi.antisymmetry_defect(), 0.0);
        let nonzero = triples()
            .iter()
            .filter(|&&[i, j, k]| phi[(i, j, k)] != 0.0)
            .count();
        assert_eq!(nonzero, 7);
        assert_eq!(phi.norm2(), 42.0);
    }

    #[test]
    fn b_form_of_reference_is_six_identity() {
        let b = b_form(&standard_phi());
        assert!((&b - &(Tensor::identity() * 6.0)).max_abs() < 1e-13);
    }

    #[test]
    fn reference_metric_is_euclidean() {
        let m = metric_from_phi(&standard_phi()).unwrap();
        assert!((&m.g - &Tensor::identity()).max_abs() < 1e-14);
        assert!((m.vol_density - 1.0).abs() < 1e-14);
        assert_eq!(m.orientation, -1.0);
    }

    #[test]
    fn scaled_reference_metric() {
        let m = metric_from_phi(&(standard_phi() * 8.0)).unwrap();
        assert!((&m.g - &(Tensor::identity() * 4.0)).max_abs() < 1e-12);
        assert!((m.vol_density - 128.0).abs() < 1e-10);
    }

    #[test]
    fn zero_form_is_rejected() {
        assert!(matches!(
            metric_from_phi(&Tensor::zeros(3)),
            Err(G2Error::NotAG2Structure(_))
        ));
    }

    #[test]
    fn identities_hold_exactly_at_reference() {
        let phi = standard_phi();
        let m = MetricData::identity();
        let psi = hodge_dual(&phi, &m);
        let r = identity_residuals(&phi, &psi, &m);
        assert!(r.max() < 1e-12, "{r:?}");
        assert!((psi.norm2() - 168.0).abs() < 1e-12);
    }

    #[test]
    fn volume_from_wedge() {
        let phi = standard_phi();
        let m = metric_from_phi(&phi).unwrap();
        let psi = hodge_dual(&phi, &m);
        let top = wedge_top_3_4(&phi, &psi) / 7.0;
        assert!((top - m.orientation * m.vol_density).abs() < 1e-13);
    }

    #[test]
    fn hodge_is_an_involution() {
        let phi = standard_phi();
        let m = MetricData::identity();
        let back = hodge_dual(&hodge_dual(&phi, &m), &m);
        assert!((&back - &phi).max_abs() < 1e-13);
    }

    #[test]
    fn decompose_reference_form() {
        let phi = standard_phi();
        let m = MetricData::identity();
        let psi = hodge_dual(&phi, &m);
        let (h, x) = decompose_3form(&phi, &phi, &psi, &m).unwrap();
        assert!((&h - &(Tensor::identity() * (1.0 / 3.0))).max_abs() < 1e-13);
        assert!(x.max_abs() < 1e-13);
    }

    #[test]
    fn v_of_metric_vanishes() {
        let phi = standard_phi();
        assert_eq!(v_op(&Tensor::identity(), &phi, &MetricData::identity()).max_abs(), 0.0);
    }
}
