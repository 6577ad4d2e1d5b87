use g2forge::algebra::{
    compose_3form, decompose_3form, hodge_dual, identity_residuals, metric_from_phi, p_op, proj_2form, standard_phi,
    transport, v_op, MetricData,
};
use g2forge::jet::G2Jet;
use g2forge::operators::PointOps;
use g2forge::symbols::{symbol_b_xi, symbol_k, symbol_l};
use g2forge::Tensor;
use nalgebra as na;
use proptest::prelude::*;

fn matrix(entries: &[f64], reflect: bool) -> Tensor {
    let m = na::SMatrix::<f64, 7, 7>::from_row_slice(entries).exp();
    let mut a = Tensor::from_fn(2, |i| m[(i[0], i[1])]);
    if reflect {
        for j in 0..7 {
            a[(0, j)] = -a[(0, j)];
        }
    }
    a
}

fn structure() -> impl Strategy<Value = (Tensor, Tensor)> {
    (prop::collection::vec(-0.3f64..0.3, 49), any::<bool>()).prop_map(|(e, r)| {
        let a = matrix(&e, r);
        (transport(&standard_phi(), &a).unwrap(), a)
    })
}

fn vector() -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-1.0f64..1.0, 7).prop_map(|v| Tensor::from_vec(1, v))
}

fn square() -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-1.0f64..1.0, 49).prop_map(|v| Tensor::from_vec(2, v))
}

fn inv(a: &Tensor) -> Tensor {
    let m = na::SMatrix::<f64, 7, 7>::from_fn(|i, j| a[(i, j)]).try_inverse().unwrap();
    Tensor::from_fn(2, |i| m[(i[0], i[1])])
}

fn rel(a: &Tensor, b: &Tensor) -> f64 {
    (a - b).max_abs() / a.max_abs().max(b.max_abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contraction_identities_on_the_orbit((phi, _) in structure()) {
        let m = metric_from_phi(&phi).unwrap();
        let psi = hodge_dual(&phi, &m);
        prop_assert!(identity_residuals(&phi, &psi, &m).max() < 1e-9);
    }

    #[test]
    fn decomposition_inverts_composition((phi, _) in structure(), hs in square(), x in vector()) {
        let m = metric_from_phi(&phi).unwrap();
        let psi = hodge_dual(&phi, &m);
        let h = hs.sym();
        let w = compose_3form(&h, &x, &phi, &psi, &m);
        let (h2, x2) = decompose_3form(&w, &phi, &psi, &m).unwrap();
        let scale = h.max_abs().max(x.max_abs());
        prop_assert!((&h2 - &h).max_abs() / scale < 1e-9);
        prop_assert!((&x2 - &x).max_abs() / scale < 1e-9);
    }

    #[test]
    fn two_form_projections((phi, _) in structure(), s in square()) {
        let m = metric_from_phi(&phi).unwrap();
        let psi = hodge_dual(&phi, &m);
        let alpha = s.antisym();
        let (a7, a14) = proj_2form(&alpha, &psi, &m);
        prop_assert!((&(&a7 + &a14) - &alpha).max_abs() < 1e-10);
        let (a77, a714) = proj_2form(&a7, &psi, &m);
        let (a147, a1414) = proj_2form(&a14, &psi, &m);
        prop_assert!((&a77 - &a7).max_abs() < 1e-10);
        prop_assert!((&a1414 - &a14).max_abs() < 1e-10);
        prop_assert!(a714.max_abs() < 1e-10);
        prop_assert!(a147.max_abs() < 1e-10);
    }

    #[test]
    fn metric_is_equivariant((phi, _) in structure(), (_, a) in structure()) {
        let g = metric_from_phi(&phi).unwrap().g;
        let moved = metric_from_phi(&transport(&phi, &a).unwrap()).unwrap().g;
        let ai = inv(&a);
        prop_assert!(rel(&moved, &ai.transpose().compose(&g).compose(&ai)) < 1e-9);
    }

    #[test]
    fn torsion_square_identities(t in square()) {
        let phi = standard_phi();
        let m = MetricData::identity();
        let psi = hodge_dual(&phi, &m);
        let vt = v_op(&t, &phi, &m);
        let pt = p_op(&t, &psi, &m);
        let vphi = Tensor::from_fn(2, |i| (0..7).map(|l| vt[l] * phi[(l, i[0], i[1])]).sum());
        let lhs = &(&t.compose(&t) - &t.compose(&t.transpose())) - &t.compose(&pt);
        prop_assert!((&lhs - &t.compose(&vphi)).max_abs() < 1e-10);
        let scalar = t.norm2() - t.dot(&t.transpose()) - t.dot(&pt);
        prop_assert!((scalar - vt.norm2()).abs() < 1e-10);
        prop_assert!((vt.norm2() + t.compose(&vphi).trace()).abs() < 1e-10);
    }

    #[test]
    fn tilde_b_symbol_is_rescaled_b(xi in vector(), hs in square(), x in vector()) {
        let h = hs.sym();
        let phi = standard_phi();
        let mut expect = h.apply(&xi);
        expect.axpy(-0.25 * h.trace(), &xi);
        let vx = v_op(&Tensor::outer(&xi, &x), &phi, &MetricData::identity());
        expect.axpy(0.5, &vx);
        let b = &symbol_b_xi(-1.0 / 3.0, &xi, &h, &x) * 1.5;
        prop_assert!((&b - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn symbols_are_homogeneous(xi in vector(), y in vector(), hs in square(), x in vector(), s in -3.0f64..3.0) {
        let h = hs.sym();
        let sxi = &xi * s;
        let l = symbol_l(&sxi, &h, &x);
        prop_assert!((&l - &(&symbol_l(&xi, &h, &x) * s)).max_abs() < 1e-12);
        let (kh, kx) = symbol_k(&sxi, &y);
        let (kh1, kx1) = symbol_k(&xi, &y);
        prop_assert!((&kh - &(&kh1 * s)).max_abs() < 1e-12);
        prop_assert!((&kx - &(&kx1 * s)).max_abs() < 1e-12);
        prop_assert!(kh.trace().abs() < 1e-12);
        let b = symbol_b_xi(0.3, &sxi, &h, &x);
        prop_assert!((&b - &(&symbol_b_xi(0.3, &xi, &h, &x) * s)).max_abs() < 1e-12);
    }

    /// `|curl h|² = |ξ|²|h|²` for trace-free `h` with `h(ξ) = 0`, the Fourier
    /// form of the curl identity on a flat background.
    #[test]
    fn curl_symbol_norm(xi in vector(), hs in square()) {
        prop_assume!(xi.norm() > 0.1);
        let n = &xi * (1.0 / xi.norm());
        // Project onto ξ⊥ on both sides, then remove the trace.
        let p = &Tensor::identity() - &Tensor::outer(&n, &n);
        let mut h = p.compose(&hs.sym()).compose(&p);
        h.axpy(-h.trace() / 6.0, &p);
        let phi = standard_phi();
        let curl = Tensor::from_fn(2, |ij| {
            let (i, j) = (ij[0], ij[1]);
            let mut s = 0.0;
            for a in 0..7 {
                for b in 0..7 {
                    s += xi[a] * h[(b, i)] * phi[(a, b, j)];
                }
            }
            s
        });
        prop_assert!(h.apply(&xi).max_abs() < 1e-12 && h.trace().abs() < 1e-12);
        let expect = xi.norm2() * h.norm2();
        prop_assert!((curl.norm2() - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn p1_splits_through_tilde_p1(c in -2.0f64..2.0) {
        let o = PointOps::new(&G2Jet::synthetic_nearly_g2(c));
        prop_assert!(o.trace_checks().p1_decomposition < 1e-12);
        prop_assert!(o.trace_checks().max() < 1e-12);
    }
}
