use g2forge::algebra::{compose_3form, hodge_dual, identity_residuals, inner, metric_from_phi, standard_phi, transport, MetricData};
use g2forge::{G2Error, Tensor};
use nalgebra as na;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{guarded, max};
use crate::config::RunConfig;
use crate::report::Check;

pub const SAMPLES: usize = 100;

/// `A·φ₀` for `A = R·exp(M/2)` with Gaussian `M`; `R` is a reflection half the time.
pub fn random_structure(rng: &mut ChaCha8Rng) -> Tensor {
    loop {
        let m = na::SMatrix::<f64, 7, 7>::from_fn(|_, _| {
            let z: f64 = StandardNormal.sample(&mut *rng);
            0.5 * z
        });
        let mut a = m.exp();
        if rng.gen_bool(0.5) {
            a.row_mut(0).neg_mut();
        }
        let at = Tensor::from_fn(2, |i| a[(i[0], i[1])]);
        if let Some(phi) = transport(&standard_phi(), &at) {
            return phi;
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rank: usize) -> Tensor {
    Tensor::from_fn(rank, |_| StandardNormal.sample(&mut *rng))
}

/// Relative defect of `⟨h⋄φ+X⌟ψ, w⋄φ+Y⌟ψ⟩ = (54/7)tr h tr w + 12⟨h₀,w₀⟩ + 24⟨X,Y⟩`.
pub fn inner_product_defect(phi: &Tensor, rng: &mut ChaCha8Rng) -> Result<f64, G2Error> {
    let m: MetricData = metric_from_phi(phi)?;
    let psi = hodge_dual(phi, &m);
    let (h, w) = (gaussian(rng, 2).sym(), gaussian(rng, 2).sym());
    let (x, y) = (gaussian(rng, 1), gaussian(rng, 1));
    let a = compose_3form(&h, &x, phi, &psi, &m);
    let b = compose_3form(&w, &y, phi, &psi, &m);
    let lhs = inner(&a, &b, &m);
    let trace = |t: &Tensor| inner(t, &m.g, &m);
    let (th, tw) = (trace(&h), trace(&w));
    let mut h0 = h.clone();
    h0.axpy(-th / 7.0, &m.g);
    let mut w0 = w.clone();
    w0.axpy(-tw / 7.0, &m.g);
    let rhs = 54.0 / 7.0 * th * tw + 12.0 * inner(&h0, &w0, &m) + 24.0 * inner(&x, &y, &m);
    let scale = (inner(&a, &a, &m) * inner(&b, &b, &m)).sqrt();
    Ok((lhs - rhs).abs() / scale)
}

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    guarded("identities", || {
        let phi0 = standard_phi();
        let m0 = metric_from_phi(&phi0)?;
        let r0 = identity_residuals(&phi0, &hodge_dual(&phi0, &m0), &m0);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst = 0.0f64;
        let mut ip = Vec::with_capacity(SAMPLES);
        for _ in 0..SAMPLES {
            let phi = random_structure(&mut rng);
            let m = metric_from_phi(&phi)?;
            worst = max([worst, identity_residuals(&phi, &hodge_dual(&phi, &m), &m).max()]);
            ip.push(inner_product_defect(&phi, &mut rng)?);
        }
        let ip0 = max((0..SAMPLES).map(|_| inner_product_defect(&phi0, &mut rng)).collect::<Result<Vec<_>, _>>()?);
        Ok(vec![
            Check::at_most("contraction_identities_reference", r0.max(), 1e-12).detail(&r0),
            Check::at_most("contraction_identities_random", worst, 1e-9)
                .note(format!("{SAMPLES} transported structures, half orientation-reversed")),
            Check::at_most("inner_product_reference", ip0, 1e-10),
            Check::at_most("inner_product_random", max(ip), 1e-10),
        ])
    })
}
