use g2forge::jet::Geometry;
use g2forge::operators::{bianchi_residuals, PointOps};
use g2forge::variation::{lagrangian_variation_residual, Deformation};

use super::{convergence, max, random_field};
use crate::config::RunConfig;
use crate::report::Check;

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    let amp = cfg.grid.amplitude;
    vec![
        convergence("bianchi_l_convergence", cfg, |n| {
            let f = random_field(cfg, n, amp)?;
            Ok(bianchi_residuals(&Geometry::new(&f)?).l_of_p)
        }),
        convergence("bianchi_tilde_b_convergence", cfg, |n| {
            let f = random_field(cfg, n, amp)?;
            Ok(bianchi_residuals(&Geometry::new(&f)?).tilde_b_of_tilde_p)
        }),
        convergence("lagrangian_variation_convergence", cfg, |n| {
            let f = random_field(cfg, n, amp)?;
            let d = Deformation::random(&f.grid, cfg.seed.wrapping_add(1), 2, 0.5);
            lagrangian_variation_residual(&f, &d)
        }),
        convergence("trace_relations_convergence", cfg, |n| {
            let f = random_field(cfg, n, amp)?;
            let geo = Geometry::new(&f)?;
            Ok(max(geo.map_jets(|j| PointOps::new(j).trace_checks().max())))
        }),
    ]
}
