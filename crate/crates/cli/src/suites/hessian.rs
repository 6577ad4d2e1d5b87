use g2forge::algebra::standard_phi;
use g2forge::field::G2Field;
use g2forge::grid::Grid;
use g2forge::spectral::split_deformation;
use g2forge::variation::{k_pairing, second_variation_fd, Deformation};
use g2forge::G2Error;

use super::{guarded, max};
use crate::config::RunConfig;
use crate::report::Check;

pub const PAIRS: usize = 10;
pub const TT_MODES: usize = 5;

/// Flat structure on the unit circle; the Hessian scales like `|ξ|²`, so a
/// unit period keeps the values of order one hundred.
fn carrier(points: usize) -> Result<G2Field, G2Error> {
    G2Field::constant(Grid::new(vec![0], vec![points], vec![1.0])?, &standard_phi())
}

fn hessian(cfg: &RunConfig) -> Result<Vec<Check>, G2Error> {
    let flat = carrier(cfg.grid.points)?;
    let g = &flat.grid;
    let base = cfg.seed.wrapping_mul(7919);
    let (mut worst, mut asym) = (0.0f64, 0.0f64);
    let mut values = Vec::with_capacity(PAIRS);
    for k in 0..PAIRS as u64 {
        let d1 = Deformation::random(g, base.wrapping_add(2 * k), 1, 0.5);
        let d2 = Deformation::random(g, base.wrapping_add(2 * k + 1), 1, 0.5);
        let s = second_variation_fd(&flat, &d1, &d2)?;
        let swapped = k_pairing(&flat, &d2, &d1)?;
        worst = max([worst, s.rel_err]);
        asym = max([asym, (s.k_pairing - swapped).abs() / s.k_pairing.abs().max(swapped.abs())]);
        values.push([s.fd_hessian, s.k_pairing]);
    }

    let f: Vec<f64> = (0..g.len())
        .map(|p| (std::f64::consts::TAU * g.coords(p)[0]).cos())
        .collect();
    let conf = k_pairing(&flat, &Deformation::conformal(&f), &Deformation::conformal(&f))?;
    let norm: f64 = g.integrate(&f.iter().map(|x| x * x).collect::<Vec<_>>());
    let expect = 6.0 * std::f64::consts::TAU.powi(2) * norm;

    let mut tt_max = f64::NEG_INFINITY;
    for k in 0..TT_MODES as u64 {
        let d = Deformation::random(g, base.wrapping_add(1000 + k), 1, 0.5);
        let [_, _, tt] = split_deformation(&flat, &d)?;
        tt_max = tt_max.max(k_pairing(&flat, &tt, &tt)?);
    }

    Ok(vec![
        Check::at_most("second_variation_vs_k_pairing", worst, 1e-4)
            .note(format!("{PAIRS} deformation pairs at the flat structure"))
            .detail(values),
        Check::at_most("hessian_swap_symmetry", asym, 1e-8),
        Check::at_most("conformal_mode_value", (conf - expect).abs() / expect, 1e-4)
            .note("expected 6|xi|^2 ||f||^2 for f = cos(2 pi x)")
            .detail([conf, expect]),
        Check::at_most("tt_modes_nonpositive", tt_max, 0.0).note(format!("largest of {TT_MODES} TT values")),
    ])
}

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    guarded("hessian", || hessian(cfg))
}
