//! G₂-structures sampled on periodic grids.

use nalgebra as na;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::algebra::{metric_from_phi, standard_phi, transport, MetricData};
use crate::error::G2Error;
use crate::grid::Grid;
use crate::tensor::{Tensor, N};

/// A 3-form field varying along at most two coordinate axes.
#[derive(Clone, Debug, PartialEq)]
pub struct G2Field {
    pub grid: Grid,
    pub phi_samples: Vec<Tensor>,
    /// Construction amplitude `ε`; informational only.
    pub amplitude: f64,
}

/// Parameters of a seeded random field.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    pub active_axes: Vec<usize>,
    pub grid_shape: Vec<usize>,
    pub periods: Vec<f64>,
    pub amplitude: f64,
    pub seed: u64,
    /// Largest Fourier mode per active axis.
    pub max_mode: i32,
}

impl FieldSpec {
    pub fn new(active_axes: Vec<usize>, grid_shape: Vec<usize>, periods: Vec<f64>, amplitude: f64, seed: u64) -> Self {
        FieldSpec {
            active_axes,
            grid_shape,
            periods,
            amplitude,
            seed,
            max_mode: 2,
        }
    }

    pub fn max_mode(mut self, m: i32) -> Self {
        self.max_mode = m;
        self
    }
}

/// Nonzero integer wave vectors with every component in `-m..=m`, one from
/// each `±n` pair.
pub fn half_modes(dims: usize, m: i32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    match dims {
        0 => {}
        1 => {
            for a in 1..=m {
                out.push(vec![a]);
            }
        }
        _ => {
            for a in 0..=m {
                for b in -m..=m {
                    if a == 0 && b <= 0 {
                        continue;
                    }
                    out.push(vec![a, b]);
                }
            }
        }
    }
    out
}

/// Seeded band-limited periodic field of 7×7 matrices.
pub struct MatrixField {
    modes: Vec<(Vec<i32>, na::SMatrix<f64, 7, 7>, na::SMatrix<f64, 7, 7>)>,
    periods: Vec<f64>,
}

impl MatrixField {
    pub fn random(dims: usize, periods: &[f64], max_mode: i32, rng: &mut ChaCha8Rng) -> Self {
        let modes = half_modes(dims, max_mode)
            .into_iter()
            .map(|n| {
                let n2: i32 = n.iter().map(|v| v * v).sum();
                let w = 1.0 / n2 as f64;
                let mut draw = || na::SMatrix::<f64, 7, 7>::from_fn(|_, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    w * z
                });
                let c = draw();
                let s = draw();
                (n, c, s)
            })
            .collect();
        MatrixField {
            modes,
            periods: periods.to_vec(),
        }
    }

    /// Value at active-axis coordinates `x`.
    pub fn eval(&self, x: &[f64]) -> na::SMatrix<f64, 7, 7> {
        let mut m = na::SMatrix::<f64, 7, 7>::zeros();
        for (n, c, s) in &self.modes {
            let theta: f64 = n
                .iter()
                .zip(x)
                .zip(&self.periods)
                .map(|((&k, &xi), &l)| std::f64::consts::TAU * k as f64 * xi / l)
                .sum();
            m += c * theta.cos() + s * theta.sin();
        }
        m
    }
}

impl G2Field {
    /// Field `φ(x) = exp(ε M(x))·φ₀` for a seeded random band-limited `M`.
    pub fn random(spec: &FieldSpec) -> Result<Self, G2Error> {
        let grid = Grid::new(
            spec.active_axes.clone(),
            spec.grid_shape.clone(),
            spec.periods.clone(),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mfield = MatrixField::random(grid.dims(), &grid.periods, spec.max_mode, &mut rng);
        let phi0 = standard_phi();
        let eps = spec.amplitude;
        let samples: Result<Vec<Tensor>, G2Error> = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let x = active_coords(&grid, p);
                let a = (mfield.eval(&x) * eps).exp();
                let at = Tensor::from_fn(2, |i| a[(i[0], i[1])]);
                transport(&phi0, &at)
                    .ok_or_else(|| G2Error::NotAG2Structure("singular transport".into()))
            })
            .collect();
        let field = G2Field {
            grid,
            phi_samples: samples?,
            amplitude: eps,
        };
        field.validate()?;
        Ok(field)
    }

    /// Field whose sample at each point is `f(x)` for the full coordinate vector `x`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; N]) -> Tensor + Sync) -> Result<Self, G2Error> {
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|p| f(&grid.coords(p)))
            .collect();
        let field = G2Field {
            grid,
            phi_samples: samples,
            amplitude: 0.0,
        };
        field.validate()?;
        Ok(field)
    }

    /// Spatially constant field.
    pub fn constant(grid: Grid, phi: &Tensor) -> Result<Self, G2Error> {
        Self::from_fn(grid, |_| phi.clone())
    }

    /// Checks every sample against the positivity cone.
    pub fn validate(&self) -> Result<(), G2Error> {
        self.phi_samples
            .par_iter()
            .try_for_each(|phi| metric_from_phi(phi).map(|_| ()))
    }

    pub fn len(&self) -> usize {
        self.phi_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_samples.is_empty()
    }

    /// Whether all samples coincide exactly.
    pub fn is_constant(&self) -> bool {
        self.phi_samples.iter().all(|p| p == &self.phi_samples[0])
    }

    /// `φ + t·ω` sample by sample, without a positivity check.
    pub fn perturbed(&self, omega: &[Tensor], t: f64) -> Self {
        let samples = self
            .phi_samples
            .par_iter()
            .zip(omega)
            .map(|(p, w)| {
                let mut q = p.clone();
                q.axpy(t, w);
                q
            })
            .collect();
        G2Field {
            grid: self.grid.clone(),
            phi_samples: samples,
            amplitude: self.amplitude,
        }
    }

    pub fn metrics(&self) -> Result<Vec<MetricData>, G2Error> {
        self.phi_samples.par_iter().map(metric_from_phi).collect()
    }

    /// Same samples with a different stencil order.
    pub fn with_fd_order(&self, order: usize) -> Self {
        G2Field {
            grid: self.grid.reorder(order),
            ..self.clone()
        }
    }
}

pub(crate) fn active_coords(grid: &Grid, p: usize) -> Vec<f64> {
    let x = grid.coords(p);
    grid.active_axes.iter().map(|&a| x[a]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn zero_amplitude_gives_reference_form() {
        let f = G2Field::random(&FieldSpec::new(vec![0], vec![16], vec![TAU], 0.0, 3)).unwrap();
        assert!(f.is_constant());
        assert_eq!(f.phi_samples[0], standard_phi());
    }

    #[test]
    fn equal_seeds_give_identical_samples() {
        let spec = FieldSpec::new(vec![1, 4], vec![16, 16], vec![TAU, 2.0], 0.05, 11);
        let a = G2Field::random(&spec).unwrap();
        let b = G2Field::random(&spec).unwrap();
        assert_eq!(a.phi_samples, b.phi_samples);
    }

    #[test]
    fn mode_enumeration() {
        assert_eq!(half_modes(1, 2).len(), 2);
        assert_eq!(half_modes(2, 2).len(), 12);
        assert_eq!(half_modes(2, 1).len(), 4);
    }
}
