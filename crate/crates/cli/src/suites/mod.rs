//! The verification suites. Each returns named checks; module errors and
//! panics become failed checks rather than aborting the run.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use g2forge::field::{FieldSpec, G2Field};
use g2forge::G2Error;
use serde::Serialize;

use crate::config::{RunConfig, Suite};
use crate::report::{Check, SuiteReport};

mod curvature;
mod flow;
mod gradients;
mod hessian;
mod identities;
mod symbols;
mod variations;

/// Smallest acceptable error reduction per grid doubling.
pub const MIN_RATIO: f64 = 3.6;

pub fn run_suite(suite: Suite, cfg: &RunConfig, out: Option<&Path>) -> SuiteReport {
    let body = || -> Vec<Check> {
        match suite {
            Suite::Identities => identities::run(cfg),
            Suite::Curvature => curvature::run(cfg),
            Suite::Gradients => gradients::run(cfg),
            Suite::Symbols => symbols::run(cfg),
            Suite::Variations => variations::run(cfg),
            Suite::Hessian => hessian::run(cfg),
            Suite::Flow => flow::run(cfg, out),
            Suite::All => unreachable!("expanded by the caller"),
        }
    };
    let mut checks = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(c) => c,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            vec![Check::error("suite", format!("panicked: {msg}"))]
        }
    };
    if let Some(&tol) = cfg.tolerances.get(&suite) {
        for c in &mut checks {
            c.retolerate(tol);
        }
    }
    SuiteReport::new(suite.name(), checks)
}

/// Runs `f`, turning an error into a single failed check named `name`.
pub(crate) fn guarded(name: &str, f: impl FnOnce() -> Result<Vec<Check>, G2Error>) -> Vec<Check> {
    f().unwrap_or_else(|e| vec![Check::error(name, e)])
}

/// The seeded random 1-axis field used by the grid-based suites.
pub(crate) fn random_field(cfg: &RunConfig, points: usize, amplitude: f64) -> Result<G2Field, G2Error> {
    G2Field::random(&FieldSpec::new(
        vec![0],
        vec![points],
        vec![cfg.grid.period],
        amplitude,
        cfg.seed,
    ))
}

#[derive(Serialize)]
struct Study {
    points: Vec<usize>,
    residuals: Vec<f64>,
    ratios: Vec<f64>,
}

/// Residual at half, one and two times the configured resolution; the
/// check's value is the smaller of the two reduction ratios.
pub(crate) fn convergence(
    name: &str,
    cfg: &RunConfig,
    residual: impl Fn(usize) -> Result<f64, G2Error>,
) -> Check {
    let n = cfg.grid.points;
    let points = vec![n / 2, n, 2 * n];
    let residuals = match points.iter().map(|&p| residual(p)).collect::<Result<Vec<_>, _>>() {
        Ok(r) => r,
        Err(e) => return Check::error(name, e),
    };
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    let worst = if ratios.iter().all(|r| r.is_finite()) {
        ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    Check::at_least(name, worst, MIN_RATIO).detail(Study {
        points,
        residuals,
        ratios,
    })
}

/// Maximum that propagates NaN instead of skipping it.
pub(crate) fn max(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter()
        .fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}
