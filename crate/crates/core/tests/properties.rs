use complete_curves::convex::{dee, dee_formula, refine_pair, ConvexBody};
use complete_curves::desing::BivariatePolynomial;
use complete_curves::geometry::{hopf_point, sphere_s3_samples, PointC2};
use complete_curves::net::{hopf_skeleton, TangentNet};
use complete_curves::pipeline::{eps_schedule, schedule_ok};
use num_complex::Complex64;
use proptest::prelude::*;

fn ellipsoid(axes: [f64; 4]) -> ConvexBody {
    ConvexBody::axis_ellipsoid(PointC2::ZERO, axes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dee_exceeds_dist_for_balls(r in 0.2f64..5.0, gap in 1e-4f64..5.0) {
        let m = dee(&ConvexBody::centered_ball(r).unwrap(), &ConvexBody::centered_ball(r + gap).unwrap()).unwrap();
        prop_assert!((m.dist - gap).abs() < 1e-9 * (1.0 + gap));
        prop_assert!(m.dee > m.dist);
        prop_assert!(m.dee.is_finite());
    }

    #[test]
    fn dee_formula_exceeds_dist(dist in 1e-8f64..50.0, kappa in 1e-3f64..50.0) {
        let v = dee_formula(dist, kappa);
        prop_assert!(v > dist && v.is_finite());
    }

    #[test]
    fn dee_exceeds_dist_for_parallel_ellipsoids(
        a in 0.6f64..2.0, b in 0.6f64..2.0, c in 0.6f64..2.0, e in 0.6f64..2.0, t in 0.05f64..2.0,
    ) {
        let inner = ellipsoid([a, b, c, e]);
        let outer = inner.parallel_body(t).unwrap();
        let m = dee(&inner, &outer).unwrap();
        prop_assert!((m.dist - t).abs() < 1e-6, "dist {} vs {}", m.dist, t);
        prop_assert!(m.dee > m.dist);
    }

    #[test]
    fn parallel_curvature_identity(a in 0.6f64..2.0, b in 0.6f64..2.0, c in 0.6f64..2.0, e in 0.6f64..2.0, t in 0.0f64..3.0) {
        let body = ellipsoid([a, b, c, e]);
        let k = body.kappa_max().unwrap();
        let kt = body.parallel_body(t).unwrap().kappa_max().unwrap();
        prop_assert!((kt - k / (1.0 + t * k)).abs() < 1e-6);
    }

    #[test]
    fn refined_chain_sums_past_one(r in 0.5f64..3.0, gap in 0.05f64..3.0) {
        let chain = refine_pair(&ConvexBody::centered_ball(r).unwrap(), &ConvexBody::centered_ball(r + gap).unwrap()).unwrap();
        let sum: f64 = complete_curves::convex::chain_metrics(&chain).iter().map(|m| m.dee).sum();
        prop_assert!(sum >= 1.0);
    }

    #[test]
    fn skeleton_points_lie_on_the_boundary(r in 0.3f64..4.0, eta in 0.05f64..1.5, k in 1usize..8) {
        let body = ConvexBody::centered_ball(r).unwrap();
        let phases: Vec<(f64, f64)> = (0..k).map(|j| (j as f64 * 0.7, -(j as f64) * 0.3)).collect();
        for p in hopf_skeleton(&body, eta, &phases).unwrap() {
            prop_assert!((body.gauge(p) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn net_misses_inner_parallel_body(
        a in 0.8f64..1.6, b in 0.8f64..1.6, c in 0.8f64..1.6, e in 0.8f64..1.6,
        frac in 0.05f64..0.95, n in 1usize..24,
    ) {
        let body = ellipsoid([a, b, c, e]);
        let eps = frac / body.kappa_max().unwrap();
        let skel: Vec<PointC2> = sphere_s3_samples(n).into_iter().map(|u| body.boundary_point(u).unwrap()).collect();
        let net = TangentNet::new(&body, skel, eps).unwrap();
        let inner = body.parallel_body(-eps).unwrap();
        for u in sphere_s3_samples(400) {
            for s in [0.0, 0.5, 0.999] {
                prop_assert!(!net.contains(u * (inner.radial(u) * s)));
            }
        }
    }

    #[test]
    fn membership_matches_slab_offsets(eta in 0.0f64..1.5, al in 0.0f64..6.28, be in 0.0f64..6.28, eps in 0.01f64..0.5, x in prop::array::uniform4(-2.0f64..2.0)) {
        let body = ConvexBody::centered_ball(1.0).unwrap();
        let net = TangentNet::new(&body, vec![hopf_point(eta, al, be)], eps).unwrap();
        let q = PointC2::from_reals(x);
        prop_assert_eq!(net.contains(q), net.slab(0).offset(q).abs() < eps);
    }

    #[test]
    fn schedule_halves(eps0 in 1e-4f64..1.0, ratio in 0.01f64..0.49, depth in 0usize..12) {
        let s = eps_schedule(eps0, ratio, depth);
        prop_assert_eq!(s.len(), depth);
        prop_assert!(schedule_ok(&s));
        prop_assert!(s.iter().sum::<f64>() < 2.0 * eps0 || depth == 0);
    }

    #[test]
    fn slow_ratio_is_rejected(eps0 in 1e-4f64..1.0, ratio in 0.5f64..1.0) {
        prop_assert!(!schedule_ok(&eps_schedule(eps0, ratio, 3)));
    }

    #[test]
    fn polynomial_eval_matches_terms(c in prop::array::uniform3(-2.0f64..2.0), z in prop::array::uniform4(-1.5f64..1.5)) {
        let p = BivariatePolynomial::from_terms(&[
            (1, 1, Complex64::new(c[0], 0.0)),
            (2, 0, Complex64::new(c[1], 0.0)),
            (0, 3, Complex64::new(0.0, c[2])),
        ]).unwrap();
        let q = PointC2::from_reals(z);
        let want = Complex64::new(c[0], 0.0) * q.z1 * q.z2 + Complex64::new(c[1], 0.0) * q.z1 * q.z1
            + Complex64::new(0.0, c[2]) * q.z2 * q.z2 * q.z2;
        prop_assert!((p.eval(q) - want).norm() < 1e-12);
    }
}
