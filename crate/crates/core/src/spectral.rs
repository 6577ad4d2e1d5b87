//! Fourier-space splitting of deformations of the flat structure into
//! conformal, diffeomorphism and transverse-traceless parts.

use nalgebra as na;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::algebra::metric_from_phi;
use crate::error::G2Error;
use crate::field::G2Field;
use crate::grid::Grid;
use crate::symbols::{pack, symbol_k, symbol_l, symbol_lk, unpack};
use crate::tensor::{Tensor, N};
use crate::variation::Deformation;

type C = Complex<f64>;

/// In-place multidimensional FFT over the grid's active axes.
fn fft_grid(grid: &Grid, data: &mut [C], inverse: bool) {
    let mut planner = FftPlanner::new();
    match grid.dims() {
        0 => {}
        1 => {
            let f = if inverse {
                planner.plan_fft_inverse(grid.shape[0])
            } else {
                planner.plan_fft_forward(grid.shape[0])
            };
            f.process(data);
        }
        _ => {
            let (n0, n1) = (grid.shape[0], grid.shape[1]);
            let f1 = if inverse {
                planner.plan_fft_inverse(n1)
            } else {
                planner.plan_fft_forward(n1)
            };
            for row in data.chunks_mut(n1) {
                f1.process(row);
            }
            let f0 = if inverse {
                planner.plan_fft_inverse(n0)
            } else {
                planner.plan_fft_forward(n0)
            };
            let mut col = vec![C::new(0.0, 0.0); n0];
            for j in 0..n1 {
                for i in 0..n0 {
                    col[i] = data[i * n1 + j];
                }
                f0.process(&mut col);
                for i in 0..n0 {
                    data[i * n1 + j] = col[i];
                }
            }
        }
    }
}

/// Wave covector of the mode at flat index `p`; Nyquist components are set
/// to zero so that the projection commutes with complex conjugation.
pub fn wave_vector(grid: &Grid, p: usize) -> Tensor {
    let mut xi = Tensor::zeros(1);
    for (s, &k) in grid.multi_index(p).iter().enumerate() {
        let n = grid.shape[s];
        let m = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        xi[grid.active_axes[s]] = std::f64::consts::TAU * m / grid.periods[s];
    }
    xi
}

/// Split of a real 35-vector `(h, X)` at covector `ξ` into
/// (conformal, diffeomorphism, transverse-traceless) parts.
fn split_mode(xi: &Tensor, v: &na::DVector<f64>) -> [na::DVector<f64>; 3] {
    let (h, x) = unpack(v);
    let conf_h = Tensor::identity() * (h.trace() / 7.0);
    let h0 = &h - &conf_h;
    let conf = pack(&conf_h, &Tensor::zeros(1));
    if xi.norm2() == 0.0 {
        let tt = pack(&h0, &x);
        return [conf, na::DVector::zeros(35), tt];
    }
    // The diffeomorphism part is 𝖪(V) with 𝖫𝖪(V) = 𝖫(h₀, X); the factors of
    // i from the two first-order symbols cancel against the inverse.
    let rhs = symbol_l(xi, &h0, &x);
    let m = symbol_lk(xi);
    let r = na::SVector::<f64, 7>::from_fn(|i, _| rhs[i]);
    let sol = m.lu().solve(&r).expect("symbol of LK is invertible for nonzero xi");
    let y = Tensor::from_fn(1, |i| sol[i[0]]);
    let (dh, dx) = symbol_k(xi, &y);
    let diffeo = pack(&dh, &dx);
    let tt = pack(&h0, &x) - &diffeo;
    [conf, diffeo, tt]
}

/// Three mutually L²-orthogonal parts of `d` summing to `d`:
/// `(f·g, 0)`, the image of `𝖪`, and `ker 𝖫 ∩ ker tr`.
pub fn split_deformation(field: &G2Field, d: &Deformation) -> Result<[Deformation; 3], G2Error> {
    if !field.is_constant() {
        return Err(G2Error::NonFlatCarrier);
    }
    let m = metric_from_phi(&field.phi_samples[0])?;
    if (&m.g - &Tensor::identity()).max_abs() > 1e-12 {
        return Err(G2Error::NonFlatCarrier);
    }
    let grid = &field.grid;
    let len = grid.len();
    let packed: Vec<na::DVector<f64>> = (0..len).map(|p| pack(&d.h[p], &d.x[p])).collect();
    let mut spec: Vec<Vec<C>> = (0..35)
        .map(|c| {
            let mut col: Vec<C> = packed.iter().map(|v| C::new(v[c], 0.0)).collect();
            fft_grid(grid, &mut col, false);
            col
        })
        .collect();
    let mut parts: [Vec<Vec<C>>; 3] = [
        vec![vec![C::new(0.0, 0.0); len]; 35],
        vec![vec![C::new(0.0, 0.0); len]; 35],
        vec![vec![C::new(0.0, 0.0); len]; 35],
    ];
    for p in 0..len {
        let xi = wave_vector(grid, p);
        let re = na::DVector::from_fn(35, |c, _| spec[c][p].re);
        let im = na::DVector::from_fn(35, |c, _| spec[c][p].im);
        let sr = split_mode(&xi, &re);
        let si = split_mode(&xi, &im);
        for k in 0..3 {
            for c in 0..35 {
                parts[k][c][p] = C::new(sr[k][c], si[k][c]);
            }
        }
    }
    spec.clear();
    let scale = 1.0 / len as f64;
    let out = parts.map(|mut comps| {
        for col in comps.iter_mut() {
            fft_grid(grid, col, true);
        }
        let (h, x) = (0..len)
            .map(|p| {
                let v = na::DVector::from_fn(35, |c, _| comps[c][p].re * scale);
                unpack(&v)
            })
            .unzip();
        Deformation { h, x }
    });
    Ok(out)
}

/// `𝖫*(Y)` at the flat structure computed spectrally, for a real vector
/// field `Y`; used to build exact diffeomorphism directions.
pub fn l_star_spectral(grid: &Grid, y: &[Tensor]) -> Deformation {
    let len = grid.len();
    let mut cols: Vec<Vec<C>> = (0..N)
        .map(|k| {
            let mut c: Vec<C> = y.iter().map(|v| C::new(v[k], 0.0)).collect();
            fft_grid(grid, &mut c, false);
            c
        })
        .collect();
    let mut out: Vec<Vec<C>> = vec![vec![C::new(0.0, 0.0); len]; 35];
    for p in 0..len {
        let xi = wave_vector(grid, p);
        // 𝖫*(Y) = 𝖪(Y) − ((1/7)div Y·g, 0); symbols carry one factor of i.
        for part in 0..2 {
            let yv = Tensor::from_fn(1, |i| {
                let c = cols[i[0]][p];
                if part == 0 {
                    c.re
                } else {
                    c.im
                }
            });
            let (mut h, x) = symbol_k(&xi, &yv);
            h.axpy(-xi.dot(&yv) / 7.0, &Tensor::identity());
            let v = pack(&h, &x);
            for c in 0..35 {
                // i·(a + ib) applied to the real and imaginary inputs.
                if part == 0 {
                    out[c][p].im += v[c];
                } else {
                    out[c][p].re -= v[c];
                }
            }
        }
    }
    cols.clear();
    for col in out.iter_mut() {
        fft_grid(grid, col, true);
    }
    let scale = 1.0 / len as f64;
    let (h, x) = (0..len)
        .map(|p| unpack(&na::DVector::from_fn(35, |c, _| out[c][p].re * scale)))
        .unzip();
    Deformation { h, x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::standard_phi;
    use std::f64::consts::TAU;

    fn flat2() -> G2Field {
        let grid = Grid::new(vec![0, 3], vec![16, 12], vec![TAU, 2.0]).unwrap();
        G2Field::constant(grid, &standard_phi()).unwrap()
    }

    #[test]
    fn split_is_orthogonal_and_complete() {
        let f = flat2();
        let d = Deformation::random(&f.grid, 3, 3, 1.0);
        let [c, k, t] = split_deformation(&f, &d).unwrap();
        let n = d.inner(&d, &f.grid);
        assert!(c.inner(&k, &f.grid).abs() < 1e-10 * n);
        assert!(c.inner(&t, &f.grid).abs() < 1e-10 * n);
        assert!(k.inner(&t, &f.grid).abs() < 1e-10 * n);
        let mut sum = c.clone();
        sum.axpy(1.0, &k);
        sum.axpy(1.0, &t);
        sum.axpy(-1.0, &d);
        assert!(sum.max_abs() < 1e-12);
    }

    #[test]
    fn lie_derivative_directions_are_diffeo() {
        let f = flat2();
        let y: Vec<Tensor> = Deformation::random(&f.grid, 9, 2, 1.0).x;
        let d = l_star_spectral(&f.grid, &y);
        let [_, _, t] = split_deformation(&f, &d).unwrap();
        assert!(t.max_abs() < 1e-12);
    }

    #[test]
    fn conformal_input_stays_conformal() {
        let f = flat2();
        let g: Vec<f64> = (0..f.len()).map(|p| f.grid.coords(p)[0].sin() + 0.3).collect();
        let d = Deformation::conformal(&g);
        let [c, k, t] = split_deformation(&f, &d).unwrap();
        assert!(k.max_abs() < 1e-12 && t.max_abs() < 1e-12);
        let mut r = c;
        r.axpy(-1.0, &d);
        assert!(r.max_abs() < 1e-12);
    }
}
