use g2forge::jet::{g2_bianchi_residual, riemann_symmetry_defect, G2Jet, Geometry};
use g2forge::operators::PointOps;
use g2forge::Tensor;

use super::{convergence, guarded, max, random_field};
use crate::config::RunConfig;
use crate::report::Check;

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    let mut checks = guarded("nearly_g2", || {
        let j = G2Jet::synthetic_nearly_g2(1.0);
        let o = PointOps::new(&j);
        let g = Tensor::identity();
        let d = o.densities();
        Ok(vec![
            Check::within("nearly_g2_scal", 42.0, o.scal, 1e-12),
            Check::at_most("nearly_g2_ric_minus_6g", (&o.ric - &(&g * 6.0)).max_abs(), 1e-12),
            Check::at_most("nearly_g2_p1_plus_2.5g", (&o.p1() + &(&g * 2.5)).max_abs(), 1e-12),
            Check::at_most("nearly_g2_p2", o.p2().max_abs(), 1e-12),
            Check::within("nearly_g2_hilbert_density", -3.5, d.hilbert, 1e-12),
            Check::at_most("nearly_g2_bianchi", g2_bianchi_residual(&j), 1e-12),
            Check::at_most("nearly_g2_riemann_symmetries", riemann_symmetry_defect(&j.rm), 1e-12),
        ])
    });
    checks.push(convergence("g2_bianchi_convergence", cfg, |n| {
        let f = random_field(cfg, n, cfg.grid.amplitude)?;
        let geo = Geometry::new(&f)?;
        Ok(max(geo.map_jets(g2_bianchi_residual)))
    }));
    checks.push(convergence("curvature_from_torsion_convergence", cfg, |n| {
        let f = random_field(cfg, n, cfg.grid.amplitude)?;
        let geo = Geometry::new(&f)?;
        Ok(max(geo.map_jets(|j| PointOps::new(j).curvature_checks().max_residual())))
    }));
    checks
}
