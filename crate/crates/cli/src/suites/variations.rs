use g2forge::algebra::standard_phi;
use g2forge::field::G2Field;
use g2forge::grid::Grid;
use g2forge::variation::{
    conformal_energy, conformal_rescale, evaluate, first_variation_all, linearize_quantity, Deformation, FunctionalId,
    Quantity,
};
use g2forge::G2Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{guarded, max, random_field};
use crate::config::RunConfig;
use crate::report::Check;

pub const DEFORMATIONS: usize = 20;
pub const CONFORMAL_FACTORS: usize = 20;
/// Stencil order for the first-variation comparison; at order 4 the
/// truncation error on a 64-point grid is already about 1e-5.
pub const FIRST_VARIATION_ORDER: usize = 8;

fn first_variation(cfg: &RunConfig) -> Result<Vec<Check>, G2Error> {
    let field = random_field(cfg, cfg.grid.points, cfg.grid.amplitude)?.with_fd_order(FIRST_VARIATION_ORDER);
    let mut worst = [0.0f64; 8];
    for k in 0..DEFORMATIONS {
        let d = Deformation::random(&field.grid, cfg.seed.wrapping_mul(1000).wrapping_add(k as u64), 2, 0.5);
        for (i, v) in first_variation_all(&field, &d)?.iter().enumerate() {
            worst[i] = max([worst[i], v.rel_err]);
        }
    }
    Ok(FunctionalId::ALL
        .iter()
        .zip(worst)
        .map(|(fid, w)| {
            Check::at_most(&format!("first_variation_{fid:?}"), w, 1e-5)
                .note(format!("{DEFORMATIONS} deformations, order-{FIRST_VARIATION_ORDER} stencil"))
        })
        .collect())
}

/// Positive band-limited factor `1 + Σ aₖcos(kx + θₖ)` with `Σ|aₖ| ≤ 0.3`.
fn random_factor(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let terms: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(-0.1..0.1), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    (0..grid.len())
        .map(|p| {
            let x = std::f64::consts::TAU * grid.coords(p)[0] / grid.periods[0];
            1.0 + terms
                .iter()
                .enumerate()
                .map(|(k, (a, th))| a * ((k + 1) as f64 * x + th).cos())
                .sum::<f64>()
        })
        .collect()
}

fn conformal(cfg: &RunConfig) -> Result<Vec<Check>, G2Error> {
    let grid = Grid::new(vec![0], vec![4 * cfg.grid.points], vec![cfg.grid.period])?;
    let flat = G2Field::constant(grid, &standard_phi())?;
    let ones = vec![1.0; flat.len()];
    let e1 = conformal_energy(&flat, &ones)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(3));
    let mut min_e = f64::INFINITY;
    let mut worst = 0.0f64;
    for _ in 0..CONFORMAL_FACTORS {
        let v = random_factor(&flat.grid, &mut rng);
        let e = conformal_energy(&flat, &v)?;
        let h = evaluate(&conformal_rescale(&flat, &v)?, FunctionalId::Hilbert)?;
        min_e = min_e.min(e);
        worst = max([worst, (e - h).abs() / h.abs()]);
    }
    Ok(vec![
        Check::at_most("conformal_energy_constant", e1.abs(), 1e-12),
        Check::at_least("conformal_energy_min_nonconstant", min_e, f64::MIN_POSITIVE),
        Check::at_most("conformal_energy_vs_hilbert", worst, 1e-6)
            .note("relative difference from the Hilbert functional of the rescaled structure"),
    ])
}

fn linearizations(cfg: &RunConfig) -> Result<Vec<Check>, G2Error> {
    let grid = Grid::new(vec![0], vec![cfg.grid.points], vec![cfg.grid.period])?;
    let flat = G2Field::constant(grid, &standard_phi())?;
    let d = Deformation::random(&flat.grid, cfg.seed.wrapping_add(4), 2, 0.5);
    Quantity::ALL
        .iter()
        .map(|&q| {
            let l = linearize_quantity(&flat, &d, q)?;
            let scale = max(l.formula_field.iter().map(|t| t.max_abs()));
            Ok(Check::at_most(&format!("linearization_{q:?}"), l.max_err / scale, 1e-6))
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    let mut checks = guarded("first_variation", || first_variation(cfg));
    checks.extend(guarded("conformal_energy", || conformal(cfg)));
    checks.extend(guarded("linearization", || linearizations(cfg)));
    checks
}
