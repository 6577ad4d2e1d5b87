//! Principal symbols at `φ₀` and the rational uniqueness system.
//!
//! Symbols use the convention `σ(∇_a) = ξ_a`, so `σ(Δ) = |ξ|²`. Pairs `(h, X)`
//! are flattened to 35-vectors: the 28 upper-triangular entries of `h` in
//! [`sym_pairs`](crate::algebra::sym_pairs) order, then `X`.

use nalgebra as na;
use num_rational::Ratio;

use crate::algebra::{standard_phi, sym_basis, sym_pairs};
use crate::operators::v_of;
use crate::tensor::{Tensor, N};

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.dot(b)
}

/// `B_ξ(h, X) = (1+a)h(ξ) − (a+½)ξ tr h − a𝖵(ξ⊗X)`.
pub fn symbol_b_xi(a: f64, xi: &Tensor, h: &Tensor, x: &Tensor) -> Tensor {
    let phi = standard_phi();
    let mut b = &h.apply(xi) * (1.0 + a);
    b.axpy(-(a + 0.5) * h.trace(), xi);
    b.axpy(-a, &v_of(&Tensor::outer(xi, x), &phi));
    b
}

/// Principal symbol of the linearized special Ricci-like operator with
/// parameter `a`, as a map on `(h, X)`:
/// `(|ξ|²h − 2(ξ⊗B)_sym, |ξ|²X + 𝖵(ξ⊗B))` with `B = B_ξ(h, X)`.
pub fn symbol_special_rl(a: f64, xi: &Tensor, h: &Tensor, x: &Tensor) -> (Tensor, Tensor) {
    let phi = standard_phi();
    let b = symbol_b_xi(a, xi, h, x);
    let xi2 = dot(xi, xi);
    let mut h_out = h * xi2;
    h_out.axpy(-2.0, &Tensor::outer(xi, &b).sym());
    let mut x_out = x * xi2;
    x_out += &v_of(&Tensor::outer(xi, &b), &phi);
    (h_out, x_out)
}

pub fn pack(h: &Tensor, x: &Tensor) -> na::DVector<f64> {
    let mut v = na::DVector::zeros(35);
    for (n, [p, q]) in sym_pairs().iter().enumerate() {
        v[n] = h[(*p, *q)];
    }
    for k in 0..N {
        v[28 + k] = x[k];
    }
    v
}

pub fn unpack(v: &na::DVector<f64>) -> (Tensor, Tensor) {
    let mut h = Tensor::zeros(2);
    for (n, [p, q]) in sym_pairs().iter().enumerate() {
        h[(*p, *q)] = v[n];
        h[(*q, *p)] = v[n];
    }
    let x = Tensor::from_fn(1, |i| v[28 + i[0]]);
    (h, x)
}

fn basis_input(n: usize) -> (Tensor, Tensor) {
    if n < 28 {
        (sym_basis(n), Tensor::zeros(1))
    } else {
        let mut x = Tensor::zeros(1);
        x[n - 28] = 1.0;
        (Tensor::zeros(2), x)
    }
}

/// The 35×35 matrix of [`symbol_special_rl`].
pub fn special_rl_matrix(a: f64, xi: &Tensor) -> na::DMatrix<f64> {
    let mut m = na::DMatrix::zeros(35, 35);
    for n in 0..35 {
        let (h, x) = basis_input(n);
        let (ho, xo) = symbol_special_rl(a, xi, &h, &x);
        m.set_column(n, &pack(&ho, &xo));
    }
    m
}

/// The 7×35 matrix of [`symbol_b_xi`].
pub fn b_xi_matrix(a: f64, xi: &Tensor) -> na::DMatrix<f64> {
    let mut m = na::DMatrix::zeros(N, 35);
    for n in 0..35 {
        let (h, x) = basis_input(n);
        let b = symbol_b_xi(a, xi, &h, &x);
        for k in 0..N {
            m[(k, n)] = b[k];
        }
    }
    m
}

/// Orthonormal basis (columns) of the kernel, by SVD with a threshold
/// relative to the largest singular value.
pub fn kernel_basis(m: &na::DMatrix<f64>, rel_tol: f64) -> na::DMatrix<f64> {
    let n = m.ncols();
    // Work with the square Gram matrix so that the full right-singular basis is available.
    let gram = m.transpose() * m;
    let eig = na::SymmetricEigen::new(gram);
    let smax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).sqrt();
    let cols: Vec<na::DVector<f64>> = (0..n)
        .filter(|&i| eig.eigenvalues[i].max(0.0).sqrt() <= rel_tol * smax)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return na::DMatrix::zeros(n, 0);
    }
    na::DMatrix::from_columns(&cols)
}

/// Numerical kernel dimension: singular values below `rel_tol·σ_max`.
pub fn kernel_dim(m: &na::DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s <= rel_tol * smax).count()
        + m.ncols().saturating_sub(m.nrows())
}

fn xi_matrix(xi: &Tensor, c_perp: f64, c_par: f64) -> na::SMatrix<f64, 7, 7> {
    let xi2 = dot(xi, xi);
    na::SMatrix::from_fn(|i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        c_perp * xi2 * d + c_par * xi[i] * xi[j]
    })
}

/// Symbol of `𝖫∘𝖫*`: `Y ↦ −¾|ξ|²Y − ¼ξ⟨ξ,Y⟩`.
pub fn symbol_llstar(xi: &Tensor) -> na::SMatrix<f64, 7, 7> {
    xi_matrix(xi, -0.75, -0.25)
}

/// Symbol of `𝖫∘𝖪`: `Y ↦ −¾|ξ|²Y − (3/28)ξ⟨ξ,Y⟩`.
pub fn symbol_lk(xi: &Tensor) -> na::SMatrix<f64, 7, 7> {
    xi_matrix(xi, -0.75, -3.0 / 28.0)
}

/// Symbol of `𝖫` at `T = 0`: `(h, X) ↦ h(ξ) + ½𝖵(ξ⊗X)`.
pub fn symbol_l(xi: &Tensor, h: &Tensor, x: &Tensor) -> Tensor {
    let mut out = h.apply(xi);
    out.axpy(0.5, &v_of(&Tensor::outer(xi, x), &standard_phi()));
    out
}

/// Symbol of `𝖪` at `T = 0`:
/// `Y ↦ (−½(ξ⊗Y + Y⊗ξ) + (1/7)⟨ξ,Y⟩g, ½𝖵(ξ⊗Y))`.
pub fn symbol_k(xi: &Tensor, y: &Tensor) -> (Tensor, Tensor) {
    let mut h = &Tensor::outer(xi, y).sym() * -1.0;
    h.axpy(dot(xi, y) / 7.0, &Tensor::identity());
    let x = &v_of(&Tensor::outer(xi, y), &standard_phi()) * 0.5;
    (h, x)
}

pub type Q = Ratio<i64>;

/// Coefficients of the system over `(α, β, γ, δ, ε, ζ)`:
/// `α/2 + β − γ/2 + δ/4 = 0` and `γ + δ/2 = 0`.
pub fn uniqueness_system() -> [[Q; 6]; 2] {
    let q = |n, d| Q::new(n, d);
    [
        [q(1, 2), q(1, 1), q(-1, 2), q(1, 4), q(0, 1), q(0, 1)],
        [q(0, 1), q(0, 1), q(1, 1), q(1, 2), q(0, 1), q(0, 1)],
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessSolution {
    pub a: Q,
    pub beta: Q,
    /// Basis of the solution space of the unconstrained system.
    pub nullspace: Vec<[Q; 6]>,
}

/// Reduced row echelon form in place; returns pivot columns.
fn rref(rows: &mut [Vec<Q>]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != Q::from_integer(0)) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Q::from_integer(1) / rows[r][c];
        for v in rows[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != Q::from_integer(0) {
                let f = rows[i][c];
                for k in 0..ncols {
                    let sub = f * rows[r][k];
                    rows[i][k] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Solves the system exactly. The constrained solve substitutes
/// `α = −1, γ = a, δ = 1 + a, ε = −a, ζ = 0` and solves for `(a, β)`.
pub fn uniqueness_system_solve() -> UniquenessSolution {
    let sys = uniqueness_system();
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);

    let mut rows: Vec<Vec<Q>> = sys.iter().map(|r| r.to_vec()).collect();
    let pivots = rref(&mut rows);
    let mut nullspace = Vec::new();
    for free in (0..6).filter(|c| !pivots.contains(c)) {
        let mut v = [zero; 6];
        v[free] = one;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[r][free];
        }
        nullspace.push(v);
    }

    // Each unknown as an affine function c0 + ca·a + cb·β.
    let affine: [[Q; 3]; 6] = [
        [-one, zero, zero],
        [zero, zero, one],
        [zero, one, zero],
        [one, one, zero],
        [zero, -one, zero],
        [zero, zero, zero],
    ];
    let mut reduced: Vec<Vec<Q>> = sys
        .iter()
        .map(|eq| {
            let mut row = vec![zero; 3];
            for (c, coef) in eq.iter().enumerate() {
                row[0] += *coef * affine[c][1];
                row[1] += *coef * affine[c][2];
                row[2] -= *coef * affine[c][0];
            }
            row
        })
        .collect();
    rref(&mut reduced);
    UniquenessSolution {
        a: reduced[0][2],
        beta: reduced[1][2],
        nullspace,
    }
}

/// The spanning vectors of the solution family, one per basic functional
/// combination, in `(α, β, γ, δ, ε, ζ)` order.
pub fn spanning_vectors() -> [[Q; 6]; 4] {
    let z = Q::from_integer(0);
    let i = Q::from_integer;
    [
        [i(-2), i(1), z, z, z, z],
        [i(-1), z, Q::new(-1, 2), i(1), z, z],
        [z, z, z, z, i(1), z],
        [z, z, z, z, z, i(1)],
    ]
}

/// Exact rank of a set of 6-vectors.
pub fn rank(vectors: &[[Q; 6]]) -> usize {
    let mut rows: Vec<Vec<Q>> = vectors.iter().map(|v| v.to_vec()).collect();
    rref(&mut rows).len()
}

pub fn residual(v: &[Q; 6]) -> [Q; 2] {
    let sys = uniqueness_system();
    let mut out = [Q::from_integer(0); 2];
    for (r, eq) in sys.iter().enumerate() {
        for c in 0..6 {
            out[r] += eq[c] * v[c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(1, |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn uniqueness_constants() {
        let s = uniqueness_system_solve();
        assert_eq!(s.a, Q::new(-1, 3));
        assert_eq!(s.beta, Q::new(1, 6));
        assert_eq!(s.nullspace.len(), 4);
        for v in spanning_vectors() {
            assert_eq!(residual(&v), [Q::from_integer(0); 2]);
        }
        assert_eq!(rank(&spanning_vectors()), 4);
    }

    #[test]
    fn special_rl_kernel_is_seven_dimensional() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for a in [-1.0 / 3.0, 0.0, 1.0] {
            for _ in 0..5 {
                let xi = random_vec(&mut rng);
                assert_eq!(kernel_dim(&special_rl_matrix(a, &xi), 1e-8), 7);
            }
        }
    }

    #[test]
    fn symbol_of_k_matches_lk_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xi = random_vec(&mut rng);
        let y = random_vec(&mut rng);
        let (h, x) = symbol_k(&xi, &y);
        let lk = symbol_l(&xi, &h, &x);
        let yv = na::SVector::<f64, 7>::from_fn(|i, _| y[i]);
        let expect = symbol_lk(&xi) * yv;
        // σ(𝖫)σ(𝖪) with real symbols equals the displayed 𝖫∘𝖪 symbol.
        for i in 0..N {
            assert!((lk[i] - expect[i]).abs() < 1e-12);
        }
        assert!(h.trace().abs() < 1e-12);
    }
}
