use hybrid_core::model::{ForceLaw, InitialDatum, Scenario, Source};
use hybrid_core::picard::{picard_on_grid, uniform_times, AgentPath, GradientMode, SolverOptions};
use hybrid_core::verify::{
    check_holder, check_prop1, field_samples, gronwall_oracle, holder_pairs, residual_check,
};
use hybrid_core::{Backend, Error, FieldProbe, QuadratureSpec};

fn probe(s: &Scenario<f64>, path: &AgentPath<f64>) -> FieldProbe<f64> {
    FieldProbe::new(s, path, Backend::ClosedFormKernel, &QuadratureSpec::default()).unwrap()
}

#[test]
fn prop1_holds_for_rough_initial_datum() {
    let mut s = Scenario::<f64>::heat(1, vec![0.0], vec![0.0], 1.0);
    s.phi = InitialDatum::AbsSqrt;
    s.refresh_growth();
    let path = AgentPath::constant(1, 1, vec![0.0, 1.0], &s.x0, &s.v0);
    let p = probe(&s, &path);
    let samples = field_samples(1, 3.0, 0.01, 1.0, 1000, 7);
    let reps = check_prop1(&s, &p, &samples, 1.0, 0.01).unwrap();
    assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    // the gradient bound has about a factor 10.5 of headroom here (sup ratio
    // near 0.095), so K / 10 still holds and K / 20 is the sensitivity control
    let g = reps[0].worst_ratio;
    assert!(g > 0.09 && g < 0.1, "{g}");
    let tenth = check_prop1(&s, &p, &samples, 0.1, 0.01).unwrap();
    assert!(tenth[0].pass && tenth[0].worst_ratio > 0.9);
    let twentieth = check_prop1(&s, &p, &samples, 0.05, 0.01).unwrap();
    assert!(twentieth.iter().all(|r| !r.pass), "{twentieth:?}");
}

#[test]
fn prop1_holds_with_agent_source() {
    let mut s = Scenario::<f64>::heat(2, vec![0.3, -0.2], vec![0.0; 2], 1.0);
    s.phi = InitialDatum::Gaussian;
    s.source = Source::AgentSecretion;
    s.refresh_growth();
    let times = uniform_times(0.0, 1.0, 20);
    let x: Vec<f64> = times.iter().flat_map(|&t| [0.3 + 0.2 * t, -0.2]).collect();
    let v: Vec<f64> = times.iter().flat_map(|_| [0.2, 0.0]).collect();
    let path = AgentPath::new(2, 1, times, x, v).unwrap();
    let p = probe(&s, &path);
    let samples = field_samples(2, 2.0, 0.02, 1.0, 120, 3);
    let reps = check_prop1(&s, &p, &samples, 1.0, 0.01).unwrap();
    assert!(reps.iter().all(|r| r.pass), "{reps:?}");
}

#[test]
fn prop1_trivial_and_missing_constant() {
    let s = Scenario::<f64>::heat(1, vec![0.0], vec![0.0], 1.0);
    let path = AgentPath::constant(1, 1, vec![0.0, 1.0], &s.x0, &s.v0);
    let reps = check_prop1(&s, &probe(&s, &path), &field_samples(1, 2.0, 0.1, 1.0, 20, 1), 1.0, 0.01)
        .unwrap();
    assert!(reps.iter().all(|r| r.pass && r.worst_ratio == 0.0));
    let mut lin = s.clone();
    lin.phi = InitialDatum::Linear;
    lin.refresh_growth();
    let r = check_prop1(&lin, &probe(&lin, &path), &field_samples(1, 2.0, 0.1, 1.0, 5, 1), 1.0, 0.01);
    assert!(matches!(r, Err(Error::MissingConstant(_))));
}

#[test]
fn secretion_source_is_holder_with_catalog_constant() {
    for agents in [1usize, 3] {
        let src = Source::<f64>::AgentSecretion;
        let hr = src.holder_constant(agents);
        let pairs = holder_pairs(2, agents, 2.0, 10_000, 42);
        let rep = check_holder(|x, a| src.eval(x, a), 0.5, 0.0, hr, &pairs, 0.01).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.samples, 10_000);
        let bad = check_holder(|x, a| src.eval(x, a), 0.5, 0.0, hr / 4.0, &pairs, 0.01).unwrap();
        assert!(!bad.pass);
    }
}

#[test]
fn constant_datum_is_holder_with_zero_constant() {
    let phi = InitialDatum::Constant(2.5);
    let pairs = holder_pairs::<f64>(1, 0, 3.0, 200, 1);
    let rep = check_holder(|x, _| phi.eval(x), 0.5, 0.0, 0.0, &pairs, 0.01).unwrap();
    assert!(rep.pass);
    assert!(check_holder(|x, _| phi.eval(x), 1.5, 0.0, 0.0, &pairs, 0.01).is_err());
}

#[test]
fn gronwall_canonical_cases() {
    let grid = uniform_times(0.0, 1.0, 1000);
    let flat = gronwall_oracle(2.0, |_| 0.0, |_, _| 0.0, &grid, 1e-3).unwrap();
    assert!(flat.pass && (flat.worst_ratio - 1.0).abs() < 1e-15);

    let classical = gronwall_oracle(1.0, |_| 0.7, |_, _| 0.0, &grid, 1e-3).unwrap();
    assert!(classical.pass && classical.worst_ratio <= 1.0);

    let double = gronwall_oracle(1.0, |_| 0.0, |_, _| 1.0, &grid, 1e-3).unwrap();
    assert!(double.pass, "{double:?}");
    // the exponent of the bound is t^2 / 2
    assert!(double.worst_ratio > 0.99);
}

#[test]
fn gronwall_rejects_negative_weights() {
    let grid = uniform_times(0.0, 1.0, 10);
    assert!(gronwall_oracle(1.0, |_| -1.0, |_, _| 0.0, &grid, 1e-3).is_err());
    assert!(gronwall_oracle(1.0, |_| 0.0, |_, _| 0.0, &grid[..1], 1e-3).is_err());
}

fn damped_solution(chi: f64) -> (Scenario<f64>, AgentPath<f64>) {
    let mut s = Scenario::<f64>::heat(1, vec![0.2], vec![0.6], 1.0);
    s.phi = InitialDatum::Gaussian;
    s.force = ForceLaw::DampedChemotaxis { kappa_v: 1.0, chi };
    s.radius = 2.0;
    s.refresh_growth();
    let sol = picard_on_grid(&s, None, uniform_times(0.0, 1.0, 100), &SolverOptions::default()).unwrap();
    (s, sol.path)
}

#[test]
fn residual_small_on_solutions_and_large_when_perturbed() {
    for chi in [0.0, 0.3] {
        let (s, path) = damped_solution(chi);
        let p = probe(&s, &path);
        let rep = residual_check(&path, &s, &p, GradientMode::Pointwise, 1e-3).unwrap();
        assert!(rep.pass, "{rep:?}");

        let mut bumped = path.clone();
        for k in 0..bumped.len() {
            bumped.v_node_mut(k)[0] += 0.1;
        }
        let bad = residual_check(&bumped, &s, &p, GradientMode::Pointwise, 1e-3).unwrap();
        assert!(bad.constants["max_residual"] >= 0.09, "{bad:?}");
        assert!(!bad.pass);
    }
}

#[test]
fn residual_of_free_flight_is_roundoff() {
    let s = Scenario::<f64>::heat(1, vec![0.0], vec![1.0], 1.0);
    let times = uniform_times(0.0, 1.0, 10);
    let x = times.clone();
    let path = AgentPath::new(1, 1, times.clone(), x, vec![1.0; times.len()]).unwrap();
    let rep = residual_check(&path, &s, &probe(&s, &path), GradientMode::Pointwise, 1e-12).unwrap();
    assert!(rep.pass, "{rep:?}");
    let short = path.prefix(1);
    assert!(matches!(
        residual_check(&short, &s, &probe(&s, &path), GradientMode::Pointwise, 1.0),
        Err(Error::PathTooCoarse(2))
    ));
}

#[test]
fn reports_are_deterministic() {
    let mut s = Scenario::<f64>::heat(1, vec![0.0], vec![0.0], 1.0);
    s.phi = InitialDatum::AbsSqrt;
    s.refresh_growth();
    let path = AgentPath::constant(1, 1, vec![0.0, 1.0], &s.x0, &s.v0);
    let p = probe(&s, &path);
    let samples = field_samples(1, 3.0, 0.01, 1.0, 50, 9);
    let a = check_prop1(&s, &p, &samples, 1.0, 0.01).unwrap();
    let b = check_prop1(&s, &p, &field_samples(1, 3.0, 0.01, 1.0, 50, 9), 1.0, 0.01).unwrap();
    assert_eq!(a, b);
}
