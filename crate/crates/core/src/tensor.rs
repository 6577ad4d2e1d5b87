//! Dense tensors over a 7-dimensional real vector space.
//!
//! Components are stored row-major, so index `(i, j, k)` of a rank-3 tensor
//! lives at `(i * 7 + j) * 7 + k`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Dimension of the underlying space.
pub const N: usize = 7;

/// Advisory symmetry tag, used only by validation helpers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    None,
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rank: usize,
    data: Vec<f64>,
    symmetry: Symmetry,
}

const fn pow7(rank: usize) -> usize {
    let mut n = 1;
    let mut r = 0;
    while r < rank {
        n *= N;
        r += 1;
    }
    n
}

impl Tensor {
    pub fn zeros(rank: usize) -> Self {
        assert!(rank <= 4, "rank {rank} not supported");
        Tensor {
            rank,
            data: vec![0.0; pow7(rank)],
            symmetry: Symmetry::None,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            rank: 0,
            data: vec![v],
            symmetry: Symmetry::None,
        }
    }

    pub fn from_vec(rank: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), pow7(rank), "component count does not match rank");
        Tensor {
            rank,
            data,
            symmetry: Symmetry::None,
        }
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(rank);
        let mut idx = vec![0usize; rank];
        for flat in 0..t.data.len() {
            let mut r = flat;
            for slot in (0..rank).rev() {
                idx[slot] = r % N;
                r /= N;
            }
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn identity() -> Self {
        let mut t = Tensor::zeros(2);
        for i in 0..N {
            t[(i, i)] = 1.0;
        }
        t.symmetry = Symmetry::Symmetric;
        t
    }

    pub fn vector(v: [f64; N]) -> Self {
        Tensor::from_vec(1, v.to_vec())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetry = s;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let f = self.flat(idx);
        self.data[f] = v;
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * N + i)
    }

    pub fn value(&self) -> f64 {
        debug_assert_eq!(self.rank, 0);
        self.data[0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|v| *v *= s);
        t
    }

    /// Adds `s * other` in place.
    pub fn axpy(&mut self, s: f64, other: &Tensor) {
        assert_eq!(self.rank, other.rank);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Full Euclidean contraction of all indices.
    pub fn dot(&self, other: &Tensor) -> f64 {
        assert_eq!(self.rank, other.rank);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rank, 2);
        (0..N).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        assert_eq!(self.rank, 2);
        let mut t = Tensor::zeros(2);
        for i in 0..N {
            for j in 0..N {
                t[(i, j)] = self[(j, i)];
            }
        }
        t.symmetry = self.symmetry;
        t
    }

    pub fn sym(&self) -> Self {
        assert_eq!(self.rank, 2);
        let mut t = Tensor::zeros(2);
        for i in 0..N {
            for j in 0..N {
                t[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        t.symmetry = Symmetry::Symmetric;
        t
    }

    pub fn antisym(&self) -> Self {
        assert_eq!(self.rank, 2);
        let mut t = Tensor::zeros(2);
        for i in 0..N {
            for j in 0..N {
                t[(i, j)] = 0.5 * (self[(i, j)] - self[(j, i)]);
            }
        }
        t.symmetry = Symmetry::Antisymmetric;
        t
    }

    /// Trace-free part of a rank-2 tensor with respect to the identity.
    pub fn trace_free(&self) -> Self {
        let mut t = self.clone();
        let tr = self.trace() / N as f64;
        for i in 0..N {
            t[(i, i)] -= tr;
        }
        t
    }

    /// Matrix product `(A∘B)_ij = A_ip B_pj`.
    pub fn compose(&self, other: &Tensor) -> Self {
        assert!(self.rank == 2 && other.rank == 2);
        let mut t = Tensor::zeros(2);
        for i in 0..N {
            for p in 0..N {
                let a = self[(i, p)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..N {
                    t[(i, j)] += a * other[(p, j)];
                }
            }
        }
        t
    }

    /// Matrix acting on a vector, `T(X)_a = T_ab X_b`.
    pub fn apply(&self, x: &Tensor) -> Self {
        assert!(self.rank == 2 && x.rank == 1);
        let mut t = Tensor::zeros(1);
        for a in 0..N {
            t[a] = (0..N).map(|b| self[(a, b)] * x[b]).sum();
        }
        t
    }

    /// Vector contracted into the first slot, `(X⌟T)_l = X_m T_ml`.
    pub fn apply_left(&self, x: &Tensor) -> Self {
        assert!(self.rank == 2 && x.rank == 1);
        let mut t = Tensor::zeros(1);
        for l in 0..N {
            t[l] = (0..N).map(|m| x[m] * self[(m, l)]).sum();
        }
        t
    }

    /// Outer product of two vectors.
    pub fn outer(a: &Tensor, b: &Tensor) -> Self {
        assert!(a.rank == 1 && b.rank == 1);
        let mut t = Tensor::zeros(2);
        for i in 0..N {
            for j in 0..N {
                t[(i, j)] = a[i] * b[j];
            }
        }
        t
    }

    /// Largest deviation from full antisymmetry over adjacent transpositions.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        if self.rank < 2 {
            return 0.0;
        }
        let mut idx = vec![0usize; self.rank];
        for flat in 0..self.data.len() {
            let mut r = flat;
            for slot in (0..self.rank).rev() {
                idx[slot] = r % N;
                r /= N;
            }
            for s in 0..self.rank - 1 {
                let mut sw = idx.clone();
                sw.swap(s, s + 1);
                worst = worst.max((self.data[flat] + self.get(&sw)).abs());
            }
        }
        worst
    }

    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.rank, 2);
        let mut worst: f64 = 0.0;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<usize> for Tensor {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert_eq!(self.rank, 1);
        &self.data[i]
    }
}

impl IndexMut<usize> for Tensor {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        debug_assert_eq!(self.rank, 1);
        &mut self.data[i]
    }
}

impl Index<(usize, usize)> for Tensor {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert_eq!(self.rank, 2);
        &self.data[i * N + j]
    }
}

impl IndexMut<(usize, usize)> for Tensor {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert_eq!(self.rank, 2);
        &mut self.data[i * N + j]
    }
}

impl Index<(usize, usize, usize)> for Tensor {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        debug_assert_eq!(self.rank, 3);
        &self.data[(i * N + j) * N + k]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        debug_assert_eq!(self.rank, 3);
        &mut self.data[(i * N + j) * N + k]
    }
}

impl Index<(usize, usize, usize, usize)> for Tensor {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        debug_assert_eq!(self.rank, 4);
        &self.data[((i * N + j) * N + k) * N + l]
    }
}

impl IndexMut<(usize, usize, usize, usize)> for Tensor {
    #[inline]
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        debug_assert_eq!(self.rank, 4);
        &mut self.data[((i * N + j) * N + k) * N + l]
    }
}

impl Add<&Tensor> for &Tensor {
    type Output = Tensor;
    fn add(self, rhs: &Tensor) -> Tensor {
        let mut t = self.clone();
        t += rhs;
        t
    }
}

impl Sub<&Tensor> for &Tensor {
    type Output = Tensor;
    fn sub(self, rhs: &Tensor) -> Tensor {
        let mut t = self.clone();
        t -= rhs;
        t
    }
}

impl Add for Tensor {
    type Output = Tensor;
    fn add(mut self, rhs: Tensor) -> Tensor {
        self += &rhs;
        self
    }
}

impl Sub for Tensor {
    type Output = Tensor;
    fn sub(mut self, rhs: Tensor) -> Tensor {
        self -= &rhs;
        self
    }
}

impl AddAssign<&Tensor> for Tensor {
    fn add_assign(&mut self, rhs: &Tensor) {
        assert_eq!(self.rank, rhs.rank);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Tensor> for Tensor {
    fn sub_assign(&mut self, rhs: &Tensor) {
        assert_eq!(self.rank, rhs.rank);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul<f64> for Tensor {
    type Output = Tensor;
    fn mul(mut self, s: f64) -> Tensor {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }
}

impl Mul<f64> for &Tensor {
    type Output = Tensor;
    fn mul(self, s: f64) -> Tensor {
        self.scale(s)
    }
}

impl Neg for Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self * -1.0
    }
}

impl Neg for &Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale(-1.0)
    }
}

/// Pairwise (tree) summation; the result depends only on the order of `v`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
