//! Flows of G₂-structures driven by the gradient operators, their exact
//! scaling solutions, and method-of-lines integration on 1-axis fields.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{contract_psi, diamond, metric_from_phi, MetricData};
use crate::error::G2Error;
use crate::field::G2Field;
use crate::jet::{G2Jet, Geometry};
use crate::operators::{bianchi_residuals, PointOps};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowVariant {
    HatP,
    TildeP,
    HatP2,
    TildeP2,
}

impl FlowVariant {
    pub const ALL: [FlowVariant; 4] = [
        FlowVariant::HatP,
        FlowVariant::TildeP,
        FlowVariant::HatP2,
        FlowVariant::TildeP2,
    ];
}

/// The 2-tensor and 1-form parts of a variant's velocity, in the jet's frame.
pub fn flow_parts(o: &PointOps, variant: FlowVariant) -> (Tensor, Tensor) {
    let correction = (o.t2() - o.vt2() / 3.0) / 3.0;
    match variant {
        FlowVariant::HatP => (o.hat_p1(), o.p2()),
        FlowVariant::TildeP => (o.tilde_p1(), o.p2()),
        FlowVariant::HatP2 | FlowVariant::TildeP2 => {
            let mut h = -&o.ric;
            h.axpy(-2.0 / 3.0, &o.t_vt_phi().sym());
            h.axpy(o.tr_t, &o.t.sym());
            if variant == FlowVariant::TildeP2 {
                h.axpy(correction, &Tensor::identity());
            }
            let mut x = o.div_t.clone();
            x.axpy(o.tr_t / 3.0, &o.vt);
            x.axpy(1.0 / 3.0, &o.t.apply_left(&o.vt));
            (h.sym(), x)
        }
    }
}

/// The variant's velocity `h⋄φ + X⌟ψ`, in the jet's frame.
pub fn flow_rhs(j: &G2Jet, variant: FlowVariant) -> Tensor {
    let o = PointOps::new(j);
    let (h, x) = flow_parts(&o, variant);
    let m = j.frame_metric();
    let mut w = diamond(&h, &j.phi, &m);
    w += &contract_psi(&x, &j.psi, &m);
    w
}

/// Coordinate velocity of the whole field.
pub fn field_rhs(geo: &Geometry, variant: FlowVariant) -> Vec<Tensor> {
    geo.map_jets(|j| j.frame.to_coord(&flow_rhs(j, variant)))
}

/// `λ³` along the scaling ansatz `φ(t) = λ(t)³φ₀` for a nearly-G₂ `φ₀` with
/// torsion constant `c₀`, against two closed forms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingCheck {
    pub variant: FlowVariant,
    pub c0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub final_value: f64,
    /// Against `(c₀²t+1)³` for `HatP` and `((10/3)c₀²t+1)³` for `TildeP`.
    pub max_rel_err_printed: f64,
    /// Against `(1+2c₀²t)^{3/2}` and `(1+(20/3)c₀²t)^{3/2}`, the solutions of
    /// `Λ' = κc₀²Λ^{1/3}` with `κ = 3, 10`.
    pub max_rel_err_exact: f64,
    /// Largest deviation of `𝖥/vol` from `−(7/2)c(t)²`.
    pub energy_residual: f64,
}

/// Growth rate `κ` with `rhs = κ·φ` for the synthetic jet of torsion `c`.
fn scaling_rate(c: f64, variant: FlowVariant) -> f64 {
    let j = G2Jet::synthetic_nearly_g2(c);
    let rhs = flow_rhs(&j, variant);
    rhs.dot(&j.phi) / j.phi.norm2()
}

pub fn scaling_ode_check(c0: f64, variant: FlowVariant, t_end: f64, dt: f64) -> Result<ScalingCheck, G2Error> {
    let (printed_rate, exact_rate) = match variant {
        FlowVariant::HatP => (1.0, 3.0),
        FlowVariant::TildeP => (10.0 / 3.0, 10.0),
        _ => {
            return Err(G2Error::StepRejected {
                t: 0.0,
                reason: "scaling solutions are defined for HatP and TildeP".into(),
            })
        }
    };
    // Λ = λ³ and the scaled structure has torsion c₀/λ in its own metric.
    let f = |lam3: f64| -> f64 {
        let lam = lam3.cbrt();
        scaling_rate(c0 / lam, variant) * lam3
    };
    let printed = |t: f64| (printed_rate * c0 * c0 * t + 1.0).powi(3);
    let exact = |t: f64| (1.0 + 2.0 / 3.0 * exact_rate * c0 * c0 * t).powf(1.5);
    let steps = (t_end / dt).round() as usize;
    let mut y = 1.0;
    let (mut err_p, mut err_e, mut energy): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 0..steps {
        let t = n as f64 * dt;
        let k1 = f(y);
        let k2 = f(y + 0.5 * dt * k1);
        let k3 = f(y + 0.5 * dt * k2);
        let k4 = f(y + dt * k3);
        let next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(next.is_finite() && next > 0.0) || (c0 != 0.0 && next < y) {
            return Err(G2Error::StepRejected {
                t,
                reason: "scale factor lost positivity or monotonicity".into(),
            });
        }
        y = next;
        let tn = t + dt;
        err_p = err_p.max((y - printed(tn)).abs() / printed(tn));
        err_e = err_e.max((y - exact(tn)).abs() / exact(tn));
        let c = c0 / y.cbrt();
        let d = PointOps::new(&G2Jet::synthetic_nearly_g2(c)).densities();
        energy = energy.max((d.hilbert + 3.5 * c * c).abs());
    }
    Ok(ScalingCheck {
        variant,
        c0,
        t_end,
        dt,
        final_value: y,
        max_rel_err_printed: err_p,
        max_rel_err_exact: err_e,
        energy_residual: energy,
    })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Monitors {
    pub vol: f64,
    pub hilbert: f64,
    pub max_t2: f64,
    pub scal_min: f64,
    pub scal_max: f64,
    pub bianchi_l: f64,
    pub bianchi_tb: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub step: usize,
    pub t: f64,
    pub field: G2Field,
    pub monitors: Monitors,
}

pub fn monitors(field: &G2Field) -> Result<Monitors, G2Error> {
    let geo = Geometry::new(field)?;
    let rows = geo.map_jets(|j| {
        let o = PointOps::new(j);
        let d = o.densities();
        (d.hilbert * j.metric.vol_density, d.t2, d.scal, j.metric.vol_density)
    });
    let grid = &field.grid;
    let b = bianchi_residuals(&geo);
    Ok(Monitors {
        vol: grid.integrate(&rows.iter().map(|r| r.3).collect::<Vec<_>>()),
        hilbert: grid.integrate(&rows.iter().map(|r| r.0).collect::<Vec<_>>()),
        max_t2: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        scal_min: rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        scal_max: rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
        bianchi_l: b.l_of_p,
        bianchi_tb: b.tilde_b_of_tilde_p,
    })
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub variant: FlowVariant,
    pub t_end: f64,
    pub dt: f64,
    pub monitor_every: usize,
    /// Stability constant `σ` in `dt ≤ σ·h²`.
    pub sigma: f64,
}

/// States recorded by [`integrate`]; `halted` holds the error that stopped
/// the run early, in which case the last state is the last good one.
#[derive(Clone, Debug)]
pub struct FlowRun {
    pub states: Vec<FlowState>,
    pub halted: Option<G2Error>,
}

fn rhs_of(field: &G2Field, variant: FlowVariant, step: usize) -> Result<Vec<Tensor>, G2Error> {
    let geo = Geometry::new(field).map_err(|_| G2Error::PositivityLost { step })?;
    Ok(field_rhs(&geo, variant))
}

fn combine(base: &G2Field, ks: &[(&Vec<Tensor>, f64)]) -> G2Field {
    let samples = (0..base.len())
        .into_par_iter()
        .map(|p| {
            let mut q = base.phi_samples[p].clone();
            for (k, s) in ks {
                q.axpy(*s, &k[p]);
            }
            q
        })
        .collect();
    G2Field {
        grid: base.grid.clone(),
        phi_samples: samples,
        amplitude: base.amplitude,
    }
}

/// One classical RK4 step.
pub fn rk4_step(field: &G2Field, variant: FlowVariant, dt: f64, step: usize) -> Result<G2Field, G2Error> {
    let k1 = rhs_of(field, variant, step)?;
    let k2 = rhs_of(&combine(field, &[(&k1, 0.5 * dt)]), variant, step)?;
    let k3 = rhs_of(&combine(field, &[(&k2, 0.5 * dt)]), variant, step)?;
    let k4 = rhs_of(&combine(field, &[(&k3, dt)]), variant, step)?;
    let next = combine(
        field,
        &[(&k1, dt / 6.0), (&k2, dt / 3.0), (&k3, dt / 3.0), (&k4, dt / 6.0)],
    );
    let ok: Result<Vec<MetricData>, G2Error> = next.phi_samples.par_iter().map(metric_from_phi).collect();
    ok.map_err(|_| G2Error::PositivityLost { step })?;
    Ok(next)
}

pub fn stability_bound(field: &G2Field, sigma: f64) -> f64 {
    let h = field.grid.spacing(0);
    sigma * h * h
}

/// Method-of-lines integration with RK4 on a 1-axis field.
pub fn integrate(field: &G2Field, cfg: &FlowConfig) -> Result<FlowRun, G2Error> {
    if field.grid.dims() != 1 {
        return Err(G2Error::InvalidGrid("flows run on 1-axis fields".into()));
    }
    let bound = stability_bound(field, cfg.sigma);
    if cfg.dt > bound {
        return Err(G2Error::StabilityBoundViolated { dt: cfg.dt, bound });
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let every = cfg.monitor_every.max(1);
    let mut states = vec![FlowState {
        step: 0,
        t: 0.0,
        field: field.clone(),
        monitors: monitors(field)?,
    }];
    let mut cur = field.clone();
    for n in 1..=steps {
        match rk4_step(&cur, cfg.variant, cfg.dt, n) {
            Ok(next) => cur = next,
            Err(e) => {
                return Ok(FlowRun {
                    states,
                    halted: Some(e),
                })
            }
        }
        if n % every == 0 || n == steps {
            let m = match monitors(&cur) {
                Ok(m) => m,
                Err(_) => {
                    return Ok(FlowRun {
                        states,
                        halted: Some(G2Error::PositivityLost { step: n }),
                    })
                }
            };
            states.push(FlowState {
                step: n,
                t: n as f64 * cfg.dt,
                field: cur.clone(),
                monitors: m,
            });
        }
    }
    Ok(FlowRun { states, halted: None })
}

pub const CSV_HEADER: &str = "step,t,vol,hilbert,maxT2,scal_min,scal_max,bianchi_L,bianchi_tB";

pub fn write_csv<W: Write>(mut w: W, states: &[FlowState]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in states {
        let m = &s.monitors;
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            s.step, s.t, m.vol, m.hilbert, m.max_t2, m.scal_min, m.scal_max, m.bianchi_l, m.bianchi_tb
        )?;
    }
    Ok(())
}

/// Grid maximum of `(HatP − HatP2) + (2/3)𝓛_{𝖵T}φ` in coordinates.
pub fn gauge_relation_residual(field: &G2Field) -> Result<f64, G2Error> {
    let geo = Geometry::new(field)?;
    let hat = field_rhs(&geo, FlowVariant::HatP);
    let hat2 = field_rhs(&geo, FlowVariant::HatP2);
    let v: Vec<Tensor> = geo.map_jets(|j| {
        let vt = j.frame.to_coord(&PointOps::new(j).vt);
        j.metric.g_inv.apply(&vt)
    });
    let lie = geo.lie_derivative_phi(&v);
    let worst: Vec<f64> = (0..field.len())
        .map(|p| {
            let mut r = &hat[p] - &hat2[p];
            r.axpy(2.0 / 3.0, &lie[p]);
            r.max_abs()
        })
        .collect();
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Largest change of any sample over one RK4 step.
pub fn step_change(field: &G2Field, variant: FlowVariant, dt: f64) -> Result<f64, G2Error> {
    let next = rk4_step(field, variant, dt, 1)?;
    let d: Vec<f64> = field
        .phi_samples
        .iter()
        .zip(&next.phi_samples)
        .map(|(a, b)| (a - b).max_abs())
        .collect();
    Ok(d.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::standard_phi;
    use crate::field::FieldSpec;
    use crate::grid::Grid;
    use std::f64::consts::TAU;

    #[test]
    fn synthetic_rates() {
        assert!((scaling_rate(1.0, FlowVariant::HatP) - 3.0).abs() < 1e-12);
        assert!((scaling_rate(1.0, FlowVariant::TildeP) - 10.0).abs() < 1e-12);
        assert!((scaling_rate(0.5, FlowVariant::HatP) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scaling_matches_exact_solution() {
        for v in [FlowVariant::HatP, FlowVariant::TildeP] {
            let r = scaling_ode_check(1.0, v, 1.0, 1e-3).unwrap();
            assert!(r.max_rel_err_exact < 1e-8, "{r:?}");
            assert!(r.energy_residual < 1e-12);
        }
        let r = scaling_ode_check(0.0, FlowVariant::HatP, 1.0, 1e-2).unwrap();
        assert_eq!(r.final_value, 1.0);
    }

    #[test]
    fn flat_field_is_stationary() {
        let grid = Grid::new(vec![0], vec![16], vec![TAU]).unwrap();
        let f = G2Field::constant(grid, &standard_phi()).unwrap();
        for v in FlowVariant::ALL {
            assert_eq!(step_change(&f, v, 1e-3).unwrap(), 0.0);
        }
    }

    #[test]
    fn stability_bound_is_enforced() {
        let spec = FieldSpec::new(vec![0], vec![16], vec![TAU], 0.02, 1);
        let f = G2Field::random(&spec).unwrap();
        let cfg = FlowConfig {
            variant: FlowVariant::HatP,
            t_end: 1.0,
            dt: 1.0,
            monitor_every: 1,
            sigma: 0.1,
        };
        assert!(matches!(integrate(&f, &cfg), Err(G2Error::StabilityBoundViolated { .. })));
    }
}
