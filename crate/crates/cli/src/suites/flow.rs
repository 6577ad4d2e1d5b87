use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use g2forge::algebra::standard_phi;
use g2forge::field::G2Field;
use g2forge::flow::{
    gauge_relation_residual, integrate, scaling_ode_check, step_change, write_csv, FlowConfig, FlowRun, FlowVariant,
};
use g2forge::grid::Grid;
use g2forge::io::write_field;
use g2forge::G2Error;

use super::{convergence, guarded, random_field};
use crate::config::RunConfig;
use crate::report::Check;

/// Amplitude of the perturbed initial data for the short-horizon runs.
pub const SMOKE_AMPLITUDE: f64 = 0.02;
/// Allowed growth of `max|T|²` over the smoke horizon.
pub const MAX_T2_GROWTH: f64 = 1.05;
/// Allowed growth of the Bianchi residuals over the smoke horizon.
pub const BIANCHI_GROWTH: f64 = 2.0;
/// Allowed difference of the metric-level monitors between the `HatP` and
/// `HatP2` runs, relative to their size.
pub const GAUGE_MONITOR_TOL: f64 = 1e-3;

fn scaling() -> Result<Vec<Check>, G2Error> {
    let mut checks = Vec::new();
    for (v, printed, exact) in [
        (FlowVariant::HatP, "(t+1)^3", "(1+2t)^(3/2)"),
        (FlowVariant::TildeP, "((10/3)t+1)^3", "(1+(20/3)t)^(3/2)"),
    ] {
        let r = scaling_ode_check(1.0, v, 1.0, 1e-3)?;
        let tag = format!("{v:?}").to_lowercase();
        checks.push(
            Check::at_most(&format!("scaling_{tag}_closed_form"), r.max_rel_err_printed, 1e-8).note(format!(
                "expected {printed}; the scaling ODE has solution {exact}, final value {:.6}",
                r.final_value
            )),
        );
        checks.push(
            Check::at_most(&format!("scaling_{tag}_ode_solution"), r.max_rel_err_exact, 1e-8)
                .note(format!("against {exact}")),
        );
        checks.push(Check::at_most(&format!("scaling_{tag}_energy_identity"), r.energy_residual, 1e-12));
    }
    let r = scaling_ode_check(0.0, FlowVariant::HatP, 1.0, 1e-3)?;
    checks.push(Check::within("scaling_torsion_free_constant", 1.0, r.final_value, 0.0));
    Ok(checks)
}

fn stationary(cfg: &RunConfig) -> Result<Vec<Check>, G2Error> {
    let grid = Grid::new(vec![0], vec![cfg.grid.points], vec![cfg.grid.period])?;
    let flat = G2Field::constant(grid, &standard_phi())?;
    let h = cfg.grid.period / cfg.grid.points as f64;
    FlowVariant::ALL
        .iter()
        .map(|&v| {
            let c = step_change(&flat, v, cfg.flow.sigma * h * h)?;
            Ok(Check::at_most(&format!("flat_stationary_{v:?}"), c, 1e-12))
        })
        .collect()
}

fn write_outputs(dir: &Path, tag: &str, run: &FlowRun) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(BufWriter::new(File::create(dir.join(format!("flow_{tag}.csv")))?), &run.states)?;
    for s in [run.states.first(), run.states.last()].into_iter().flatten() {
        let path = dir.join(format!("flow_{tag}_step{:05}.g2f", s.step));
        write_field(BufWriter::new(File::create(path)?), &s.field)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))?;
    }
    Ok(())
}

fn short_runs(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<Check>, G2Error> {
    let field = random_field(cfg, cfg.grid.points, SMOKE_AMPLITUDE)?;
    let h = cfg.grid.period / cfg.grid.points as f64;
    let dt = cfg.flow.sigma * h * h;
    let run = |variant| {
        integrate(
            &field,
            &FlowConfig {
                variant,
                t_end: cfg.flow.steps as f64 * dt,
                dt,
                monitor_every: 1,
                sigma: cfg.flow.sigma,
            },
        )
    };
    let hat = run(FlowVariant::HatP)?;
    let hat2 = run(FlowVariant::HatP2)?;
    let mut checks = Vec::new();
    if let Some(dir) = out {
        for (tag, r) in [("hatp", &hat), ("hatp2", &hat2)] {
            if let Err(e) = write_outputs(dir, tag, r) {
                checks.push(Check::error("flow_outputs", e));
            }
        }
    }
    let halted = [&hat, &hat2].iter().filter_map(|r| r.halted.clone()).map(|e| e.to_string()).collect::<Vec<_>>();
    let halted = if halted.is_empty() { "none".to_string() } else { halted.join("; ") };
    checks.push(Check::exact("flow_halted", "none", halted));
    let (a, b) = (&hat.states[0].monitors, &hat.states.last().unwrap().monitors);
    checks.push(Check::at_most("flow_max_t2_growth", b.max_t2 / a.max_t2, MAX_T2_GROWTH).note(format!(
        "{} steps of dt = {dt:.3e}",
        cfg.flow.steps
    )));
    let growth = (b.bianchi_l / a.bianchi_l).max(b.bianchi_tb / a.bianchi_tb);
    checks.push(Check::at_most("flow_bianchi_growth", growth, BIANCHI_GROWTH));
    let c = &hat2.states.last().unwrap().monitors;
    let scal = a.scal_max.abs().max(a.scal_min.abs());
    let diff = ((b.vol - c.vol).abs() / b.vol)
        .max((b.scal_min - c.scal_min).abs() / scal)
        .max((b.scal_max - c.scal_max).abs() / scal);
    checks.push(
        Check::at_most("gauge_equivalent_monitors", diff, GAUGE_MONITOR_TOL)
            .note("HatP and HatP2 runs: vol and scalar curvature extrema"),
    );
    Ok(checks)
}

pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Vec<Check> {
    let mut checks = guarded("scaling", scaling);
    checks.extend(guarded("flat_stationary", || stationary(cfg)));
    checks.push(convergence("gauge_relation_convergence", cfg, |n| {
        gauge_relation_residual(&random_field(cfg, n, cfg.grid.amplitude)?)
    }));
    checks.extend(guarded("short_runs", || short_runs(cfg, out)));
    checks
}
