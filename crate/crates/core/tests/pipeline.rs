use conclab::audit::{min_defect, power_transform, FnEvaluator, Mode, SamplerConfig};
use conclab::domain::{DiscretizedDomain, DomainSpec};
use conclab::io::to_json;
use conclab::operators::principal_eigenpair;
use conclab::parabolic::{solve_trajectory, RunOptions, TimeGrid};
use conclab::problem::{Problem, Source, Weight};
use conclab::scenarios::{run_scenario, run_suite, scenario, AuditSpec, Verdict};

const H: f64 = 1.0 / 32.0;

#[test]
fn smaller_exponents_inherit_concavity() {
    let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, H).unwrap();
    let eig = principal_eigenpair(&dom).unwrap();
    let mut p = Problem::new(DomainSpec::UnitSquare, Weight::constant(1.0), Source::One, 2.0);
    p.beta = 2.0;
    let tr = solve_trajectory(&p, &dom, &TimeGrid::standard(H, 2.0), Some(&eig), &RunOptions { stationary_slice: true, seed_scale: 1.0 }).unwrap();
    assert!(tr.fields.iter().flatten().all(|&u| u >= -1e-12));
    let cfg = SamplerConfig::default();
    let half = min_defect(&power_transform(&dom, &tr, 0.5, 2.0, 2.0 * H).unwrap(), Mode::Spacetime, &cfg).unwrap();
    assert!(half.min >= 0.0, "{}", half.min);
    let quarter = min_defect(&power_transform(&dom, &tr, 0.25, 2.0, 2.0 * H).unwrap(), Mode::Spacetime, &cfg).unwrap();
    assert!(quarter.min >= -quarter.tau_audit);
}

#[test]
fn gradients_coincide_at_an_interior_argmin() {
    let h = 1.0 / 64.0;
    let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, h, |x, _| {
        let b = |c: f64| (-((x[0] - c).powi(2) + (x[1] - 0.5).powi(2)) / 0.02).exp();
        b(0.3) + b(0.7)
    })
    .with_margin(2.0 * h);
    let d = min_defect(&ev, Mode::Space, &SamplerConfig::default()).unwrap();
    assert!(d.min < -0.1, "{}", d.min);
    assert!(d.gradient_mismatch <= 20.0 * h, "{:?}", d);
    assert!(!d.consistent_with_concavity());
}

#[test]
fn exponent_outside_the_window_is_not_applicable() {
    let mut s = scenario("torsion-square", 1.0 / 16.0).unwrap();
    s.audit = AuditSpec::Spacetime { alpha: 0.9, beta: 2.0 };
    s.check_monotone = false;
    s.check_hopf = false;
    s.check_barrier = false;
    let r = run_scenario(&s).unwrap();
    assert_eq!(r.verdict, Verdict::NotApplicable);
    assert!(r.assertion("concavity").unwrap().note.as_ref().unwrap().contains("window"));
}

#[test]
fn reports_are_reproducible() {
    let s = scenario("lane-emden", 1.0 / 16.0).unwrap();
    let a = to_json(&run_scenario(&s).unwrap()).unwrap();
    let b = to_json(&run_scenario(&s).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(!a.contains("runtime"));
}

#[test]
fn suite_exit_codes() {
    let good = scenario("one-minus-s", 1.0 / 16.0).unwrap();
    let (_, ok) = run_suite(std::slice::from_ref(&good));
    assert_eq!(ok.exit_code, 0);
    let mut broken = good.clone();
    broken.grid.h = -1.0;
    let (res, bad) = run_suite(&[good, broken]);
    assert!(res[1].is_err());
    assert_eq!(bad.exit_code, 2);
    assert_eq!(bad.entries[0].verdict, Some(Verdict::Pass));
}

#[test]
fn logarithmic_source_has_no_stationary_slice() {
    let s = scenario("log", H).unwrap();
    assert_eq!(s.audit, AuditSpec::PerTimeLog);
    let r = run_scenario(&s).unwrap();
    assert!(r.diagnostics.stationary_residual.is_none());
    assert!(r.defects.iter().all(|d| d.argmin.t1 == d.argmin.t3));
    assert_eq!(r.verdict, Verdict::Pass);
}
