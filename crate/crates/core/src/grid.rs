//! Periodic grids over at most two of the seven coordinate axes, and
//! central finite differences on them.

use rayon::prelude::*;

use crate::error::G2Error;
use crate::tensor::{pairwise_sum, Tensor, N};

/// Order of the default central-difference stencil.
pub const DEFAULT_FD_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub active_axes: Vec<usize>,
    pub shape: Vec<usize>,
    pub periods: Vec<f64>,
    /// Half-weights `w_k` of the first-derivative stencil, `k = 1..=order/2`.
    weights: Vec<f64>,
}

/// Weights of the order-`2p` central first derivative:
/// `f'(x) ≈ Σ_k w_k (f(x+kh) − f(x−kh)) / h`.
pub fn central_weights(order: usize) -> Vec<f64> {
    assert!(order >= 2 && order % 2 == 0, "stencil order must be even");
    let p = order / 2;
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    (1..=p)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * fact(p) * fact(p) / (k as f64 * fact(p - k) * fact(p + k))
        })
        .collect()
}

impl Grid {
    pub fn new(active_axes: Vec<usize>, shape: Vec<usize>, periods: Vec<f64>) -> Result<Self, G2Error> {
        Self::with_order(active_axes, shape, periods, DEFAULT_FD_ORDER)
    }

    pub fn with_order(
        active_axes: Vec<usize>,
        shape: Vec<usize>,
        periods: Vec<f64>,
        order: usize,
    ) -> Result<Self, G2Error> {
        if active_axes.len() > 2 {
            return Err(G2Error::InvalidGrid("at most two active axes".into()));
        }
        if active_axes.len() != shape.len() || shape.len() != periods.len() {
            return Err(G2Error::InvalidGrid(
                "axes, shape and periods must have equal length".into(),
            ));
        }
        if active_axes.iter().any(|&a| a >= N) {
            return Err(G2Error::InvalidGrid("axis index out of range".into()));
        }
        if active_axes.len() == 2 && active_axes[0] == active_axes[1] {
            return Err(G2Error::InvalidGrid("repeated axis".into()));
        }
        if periods.iter().any(|&p| !(p > 0.0)) {
            return Err(G2Error::InvalidGrid("periods must be positive".into()));
        }
        if shape.iter().any(|&n| n < order + 1) {
            return Err(G2Error::InvalidGrid(format!(
                "each axis needs at least {} points for an order-{order} stencil",
                order + 1
            )));
        }
        Ok(Grid {
            active_axes,
            shape,
            periods,
            weights: central_weights(order),
        })
    }

    /// Same grid with a different stencil order.
    pub fn reorder(&self, order: usize) -> Self {
        Grid {
            weights: central_weights(order),
            ..self.clone()
        }
    }

    pub fn fd_order(&self) -> usize {
        2 * self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.active_axes.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, slot: usize) -> f64 {
        self.periods[slot] / self.shape[slot] as f64
    }

    /// Volume of one grid cell; inactive axes contribute unit length.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|s| self.spacing(s)).product()
    }

    pub fn total_volume(&self) -> f64 {
        self.periods.iter().product()
    }

    /// Multi-index of a flat point index (row-major over active axes).
    pub fn multi_index(&self, p: usize) -> Vec<usize> {
        match self.dims() {
            0 => vec![],
            1 => vec![p],
            _ => vec![p / self.shape[1], p % self.shape[1]],
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        match self.dims() {
            0 => 0,
            1 => idx[0],
            _ => idx[0] * self.shape[1] + idx[1],
        }
    }

    /// Coordinates of a point in all seven axes (inactive axes at 0).
    pub fn coords(&self, p: usize) -> [f64; N] {
        let mut x = [0.0; N];
        for (s, &i) in self.multi_index(p).iter().enumerate() {
            x[self.active_axes[s]] = i as f64 * self.spacing(s);
        }
        x
    }

    /// Flat index of the point shifted by `offset` along active slot `slot`.
    pub fn shifted(&self, p: usize, slot: usize, offset: isize) -> usize {
        let mut idx = self.multi_index(p);
        let n = self.shape[slot] as isize;
        idx[slot] = (((idx[slot] as isize + offset) % n + n) % n) as usize;
        self.flat_index(&idx)
    }

    /// Active slot of a coordinate axis, if it is active.
    pub fn slot_of(&self, axis: usize) -> Option<usize> {
        self.active_axes.iter().position(|&a| a == axis)
    }

    /// First derivative along active slot `slot` at point `p` of a sampled
    /// quantity, given as an accessor returning a flat component slice.
    pub fn diff_at<'a, F>(&self, p: usize, slot: usize, len: usize, get: F) -> Vec<f64>
    where
        F: Fn(usize) -> &'a [f64],
    {
        let h = self.spacing(slot);
        let mut out = vec![0.0; len];
        for (k, &w) in self.weights.iter().enumerate() {
            let k = k as isize + 1;
            let fp = get(self.shifted(p, slot, k));
            let fm = get(self.shifted(p, slot, -k));
            for c in 0..len {
                out[c] += w * (fp[c] - fm[c]);
            }
        }
        for v in out.iter_mut() {
            *v /= h;
        }
        out
    }

    /// Partial derivative `∂_axis` of a tensor field at `p`; zero along inactive axes.
    pub fn partial(&self, field: &[Tensor], p: usize, axis: usize) -> Tensor {
        let rank = field[p].rank();
        match self.slot_of(axis) {
            None => Tensor::zeros(rank),
            Some(s) => {
                let len = field[p].data().len();
                Tensor::from_vec(rank, self.diff_at(p, s, len, |q| field[q].data()))
            }
        }
    }

    /// Partial derivative of a scalar field at `p`.
    pub fn partial_scalar(&self, field: &[f64], p: usize, axis: usize) -> f64 {
        match self.slot_of(axis) {
            None => 0.0,
            Some(s) => {
                let h = self.spacing(s);
                let mut acc = 0.0;
                for (k, &w) in self.weights.iter().enumerate() {
                    let k = k as isize + 1;
                    acc += w * (field[self.shifted(p, s, k)] - field[self.shifted(p, s, -k)]);
                }
                acc / h
            }
        }
    }

    /// Gradient of a scalar field at every point, as 1-forms.
    pub fn gradient(&self, f: &[f64]) -> Vec<Tensor> {
        (0..self.len())
            .into_par_iter()
            .map(|p| {
                let mut g = Tensor::zeros(1);
                for &a in &self.active_axes {
                    g[a] = self.partial_scalar(f, p, a);
                }
                g
            })
            .collect()
    }

    /// Coordinate gradient `∂_a t` of a tensor field at every point, with the
    /// derivative slot first. Equals the covariant derivative for constant metrics.
    pub fn nabla_flat(&self, field: &[Tensor]) -> Vec<Tensor> {
        (0..self.len())
            .into_par_iter()
            .map(|p| {
                let rank = field[p].rank();
                let stride = N.pow(rank as u32);
                let mut out = vec![0.0; stride * N];
                for &a in &self.active_axes {
                    let d = self.partial(field, p, a);
                    out[a * stride..(a + 1) * stride].copy_from_slice(d.data());
                }
                Tensor::from_vec(rank + 1, out)
            })
            .collect()
    }

    /// Quadrature `Σ f·cell` with a fixed pairwise summation order.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        pairwise_sum(f) * self.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_weights() {
        let w = central_weights(4);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] + 1.0 / 12.0).abs() < 1e-15);
        let w2 = central_weights(2);
        assert!((w2[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_sine_converges_at_fourth_order() {
        let err = |n: usize| {
            let g = Grid::new(vec![0], vec![n], vec![std::f64::consts::TAU]).unwrap();
            let f: Vec<f64> = (0..n).map(|p| g.coords(p)[0].sin()).collect();
            (0..n)
                .map(|p| (g.partial_scalar(&f, p, 0) - g.coords(p)[0].cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 15.0 && ratio < 17.0, "ratio {ratio}");
    }

    #[test]
    fn constants_differentiate_to_exact_zero() {
        let g = Grid::new(vec![2, 5], vec![8, 16], vec![1.0, 3.0]).unwrap();
        let f = vec![0.37; g.len()];
        for p in 0..g.len() {
            assert_eq!(g.partial_scalar(&f, p, 2), 0.0);
            assert_eq!(g.partial_scalar(&f, p, 5), 0.0);
            assert_eq!(g.partial_scalar(&f, p, 0), 0.0);
        }
    }

    #[test]
    fn periodic_wrap() {
        let g = Grid::new(vec![0, 1], vec![8, 8], vec![1.0, 1.0]).unwrap();
        let p = g.flat_index(&[0, 7]);
        assert_eq!(g.multi_index(g.shifted(p, 1, 1)), vec![0, 0]);
        assert_eq!(g.multi_index(g.shifted(p, 0, -1)), vec![7, 7]);
    }

    #[test]
    fn rejects_three_axes() {
        assert!(Grid::new(vec![0, 1, 2], vec![8, 8, 8], vec![1.0; 3]).is_err());
    }
}
