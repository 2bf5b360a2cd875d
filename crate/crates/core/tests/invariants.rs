use conclab::audit::{concavity_value, concave_approximation_1d, harmonic_combination, FnEvaluator, Tuple5};
use conclab::bounds::{alpha_exponent, alpha_window, ExponentVariant};
use conclab::domain::{DiscretizedDomain, DomainSpec};
use conclab::operators::{apply_neg_laplacian, dot, Time};
use conclab::problem::Profile;
use proptest::prelude::*;

fn domains() -> impl Strategy<Value = DomainSpec> {
    prop_oneof![
        Just(DomainSpec::UnitSquare),
        (0.3..2.0f64, 0.3..2.0f64).prop_map(|(width, height)| DomainSpec::Rectangle { width, height }),
        (0.3..2.0f64).prop_map(|radius| DomainSpec::Disk { radius }),
        (0.3..2.0f64, 0.3..2.0f64).prop_map(|(a, b)| DomainSpec::Ellipse { a, b }),
        (3usize..9, 0.5..2.0f64, 0.0..1.0f64).prop_map(|(n, r, phase)| {
            let vertices = (0..n)
                .map(|i| {
                    let th = phase + std::f64::consts::TAU * i as f64 / n as f64;
                    [r * th.cos(), r * th.sin()]
                })
                .collect();
            DomainSpec::ConvexPolygon { vertices }
        }),
    ]
}

fn unit_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn discretization_respects_the_boundary(spec in domains()) {
        prop_assert_eq!(spec.strongly_convex(), matches!(spec, DomainSpec::Disk { .. } | DomainSpec::Ellipse { .. }));
        let dom = DiscretizedDomain::build(spec.clone(), spec.inradius() / 6.0).unwrap();
        prop_assert!(dom.n_unknowns() > 0);
        for k in 0..dom.n_unknowns() {
            prop_assert!(dom.node_distance(k) > 0.0);
            prop_assert!(spec.signed_distance(dom.node(k)) > 0.0);
        }
    }

    #[test]
    fn neg_laplacian_is_symmetric_positive(spec in domains(), seed in 0u64..1000) {
        let dom = DiscretizedDomain::build(spec.clone(), spec.inradius() / 5.0).unwrap();
        let n = dom.n_unknowns();
        let u: Vec<f64> = (0..n).map(|k| ((k as u64 * 7919 + seed) % 101) as f64 / 50.0 - 1.0).collect();
        let v: Vec<f64> = (0..n).map(|k| ((k as u64 * 104729 + 3 * seed) % 97) as f64 / 48.0 - 1.0).collect();
        let (mut au, mut av) = (vec![0.0; n], vec![0.0; n]);
        apply_neg_laplacian(&dom, &u, &mut au);
        apply_neg_laplacian(&dom, &v, &mut av);
        let scale = dot(&au, &au).sqrt() * dot(&v, &v).sqrt();
        prop_assert!((dot(&au, &v) - dot(&u, &av)).abs() <= 1e-10 * scale.max(1.0));
        if u.iter().any(|&x| x != 0.0) {
            prop_assert!(dot(&au, &u) > 0.0);
        }
    }

    #[test]
    fn affine_fields_have_zero_defect(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
                                      x1 in unit_point(), x3 in unit_point(), t1 in 0.1..2.0f64, t3 in 0.1..2.0f64, lambda in 0.0..=1.0f64) {
        let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, 0.1, move |x, t| a * x[0] + b * x[1] + c * t);
        let tup = Tuple5 { x1, x3, t1: Time::Finite(t1), t3: Time::Finite(t3), lambda };
        prop_assert!(concavity_value(&ev, &tup).unwrap().abs() < 1e-12);
    }

    #[test]
    fn concave_fields_have_nonnegative_defect(x1 in unit_point(), x3 in unit_point(), lambda in 0.0..=1.0f64) {
        let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, 0.1, |x, _| -(x[0] - 0.3).powi(2) - 2.0 * x[1] * x[1]);
        let tup = Tuple5::spatial(x1, x3, Time::Finite(1.0), lambda);
        prop_assert!(concavity_value(&ev, &tup).unwrap() >= -1e-14);
    }

    #[test]
    fn harmonic_defect_dominates(g1 in -2.0..2.0f64, g2 in -2.0..2.0f64, g3 in -2.0..2.0f64, lambda in 0.0..=1.0f64) {
        if let Some(hc) = harmonic_combination(g1, g2, g3, lambda) {
            prop_assert!(hc >= g2 - lambda * g3 - (1.0 - lambda) * g1 - 1e-12);
        }
    }

    #[test]
    fn exponents_stay_in_the_window(q in 0.0..0.99f64, gamma in 0.0..1.0f64, beta in 1.0..=2.0f64) {
        prop_assume!(beta * gamma < 1.0);
        let cap = alpha_window(q, gamma, beta);
        let a = alpha_exponent(q, gamma, beta, f64::INFINITY, ExponentVariant::ConstantWeight).unwrap();
        prop_assert!(a > 0.0 && a <= cap + 1e-15);
        let theta = 1.0 / (1.0 - beta * gamma) + 1.0;
        let finite = alpha_exponent(q, gamma, beta, theta, ExponentVariant::LaneEmden).unwrap();
        prop_assert!(finite <= a);
    }

    #[test]
    fn one_dimensional_envelope_is_certified(fs in prop::collection::vec(-1.0..1.0f64, 3..40)) {
        let xs: Vec<f64> = (0..fs.len()).map(|i| i as f64 / (fs.len() - 1) as f64).collect();
        let e = concave_approximation_1d(&xs, &fs).unwrap();
        prop_assert!(e.certificate.satisfied, "{:?}", e.certificate);
        for (g, f) in e.g.iter().zip(&fs) {
            prop_assert!((g - f).abs() <= e.distance + 1e-12);
        }
        for w in e.hull.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            prop_assert!(s2 <= s1 + 1e-12);
        }
    }

    #[test]
    fn ramp_bump_stays_in_its_band(eps in 0.0..0.5f64, x in unit_point()) {
        let p = Profile::RampBump { epsilon: eps, center: [0.5, 0.5], width: 0.15 };
        let a = p.eval(&DomainSpec::UnitSquare, x);
        prop_assert!((1.0..=1.0 + eps).contains(&a));
    }
}
