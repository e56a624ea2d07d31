#![allow(clippy::needless_range_loop)]

use hybrid_core::field::{solve_field_fd, Backend, FieldProbe, QuadratureSpec};
use hybrid_core::model::{
    build_scenario, InitialDatum, OperatorCoefficients, Scenario, ScenarioConfig, Source,
};
use hybrid_core::picard::{uniform_times, AgentPath};
use hybrid_core::Error;

fn gaussian(dim: usize) -> Scenario<f64> {
    let mut s = Scenario::heat(dim, vec![0.0; dim], vec![0.0; dim], 1.0);
    s.phi = InitialDatum::Gaussian;
    s.refresh_growth();
    s
}

fn still(dim: usize, agents: usize, horizon: f64) -> AgentPath<f64> {
    AgentPath::constant(dim, agents, vec![0.0, horizon], &vec![0.3; dim * agents], &vec![0.0; dim * agents])
}

/// Agent moving on a circle-ish curve, so that the source really varies in time.
fn moving(dim: usize, horizon: f64) -> AgentPath<f64> {
    let times = uniform_times(0.0, horizon, 50);
    let mut x = Vec::new();
    let mut v = Vec::new();
    for &t in &times {
        for d in 0..dim {
            let phase = t * 2.0 + d as f64;
            x.push(0.5 * phase.sin());
            v.push(phase.cos());
        }
    }
    AgentPath::new(dim, 1, times, x, v).unwrap()
}

fn closed(s: &Scenario<f64>, p: &AgentPath<f64>) -> FieldProbe<f64> {
    FieldProbe::new(s, p, Backend::ClosedFormKernel, &QuadratureSpec::default()).unwrap()
}

fn oracle(x: &[f64], t: f64) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let q = 1.0 + 4.0 * t;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let f = q.powf(-(n as f64) / 2.0) * (-r2 / q).exp();
    let g = x.iter().map(|&xi| -2.0 * xi / q * f).collect();
    let h = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    (4.0 * x[i] * x[j] / (q * q) - 2.0 * delta / q) * f
                })
                .collect()
        })
        .collect();
    (f, g, h)
}

#[test]
fn closed_form_matches_heat_flow_of_gaussian() {
    for dim in [1usize, 2] {
        let s = gaussian(dim);
        let p = closed(&s, &still(dim, 1, 1.0));
        let mut worst: f64 = 0.0;
        for &t in &[0.05, 0.2, 0.5, 1.0] {
            for k in 0..9 {
                let r = -2.0 + 0.5 * k as f64;
                let x: Vec<f64> = if dim == 1 { vec![r] } else { vec![r, 0.6 * r] };
                if x.iter().map(|v| v * v).sum::<f64>() > 4.0 {
                    continue;
                }
                let (f, g, h) = oracle(&x, t);
                let (fv, gv, hv) = p.jet_f(&x, t).unwrap();
                worst = worst.max((fv - f).abs() / f.abs().max(1e-6));
                for i in 0..dim {
                    worst = worst.max((gv[i] - g[i]).abs() / g[i].abs().max(1e-6));
                    for j in 0..dim {
                        worst = worst.max((hv.get(i, j) - h[i][j]).abs() / h[i][j].abs().max(1e-6));
                    }
                }
            }
        }
        assert!(worst < 1e-4, "dim {dim}: worst relative error {worst}");
    }
}

#[test]
fn gradient_matches_differences_of_value() {
    let mut s = gaussian(2);
    s.source = Source::AgentSecretion;
    let p = closed(&s, &moving(2, 1.0));
    let h = 1e-4;
    for &(x0, x1, t) in &[(0.2, -0.4, 0.3), (1.0, 0.5, 0.8), (-0.7, 0.1, 1.0)] {
        let g = p.grad_f(&[x0, x1], t).unwrap();
        let d0 = (p.eval_f(&[x0 + h, x1], t).unwrap() - p.eval_f(&[x0 - h, x1], t).unwrap()) / (2.0 * h);
        let d1 = (p.eval_f(&[x0, x1 + h], t).unwrap() - p.eval_f(&[x0, x1 - h], t).unwrap()) / (2.0 * h);
        assert!((g[0] - d0).abs() < 1e-5 && (g[1] - d1).abs() < 1e-5, "{g:?} vs {d0} {d1}");
        let hs = p.hessian_f(&[x0, x1], t).unwrap();
        assert_eq!(hs.get(0, 1), hs.get(1, 0));
    }
}

#[test]
fn source_superposes_with_datum() {
    let path = moving(1, 1.0);
    let mut both = gaussian(1);
    both.source = Source::AgentSecretion;
    let datum_only = gaussian(1);
    let mut source_only = Scenario::heat(1, vec![0.0], vec![0.0], 1.0);
    source_only.source = Source::AgentSecretion;
    let (a, b, c) = (closed(&both, &path), closed(&datum_only, &path), closed(&source_only, &path));
    for &(x, t) in &[(0.0, 0.5), (1.3, 0.9), (-0.4, 0.1)] {
        let lhs = a.eval_f(&[x], t).unwrap();
        let rhs = b.eval_f(&[x], t).unwrap() + c.eval_f(&[x], t).unwrap();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }
}

#[test]
fn secreted_field_is_positive_and_bounded_by_time() {
    // -g <= 1, so 0 <= f <= t for the pure secretion field
    let mut s = Scenario::heat(1, vec![0.0], vec![0.0], 1.0);
    s.source = Source::AgentSecretion;
    let p = closed(&s, &moving(1, 1.0));
    for &(x, t) in &[(0.0, 0.5), (0.4, 1.0), (3.0, 0.2)] {
        let f = p.eval_f(&[x], t).unwrap();
        assert!(f > 0.0 && f <= t, "{f}");
    }
}

#[test]
fn ball_average_converges_at_second_order() {
    let s = gaussian(2);
    let p = closed(&s, &still(2, 1, 1.0));
    let x = [0.4, -0.3];
    let g = p.grad_f(&x, 0.25).unwrap();
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&d| {
            let a = p.ball_avg_grad(&x, 0.25, d).unwrap();
            ((a[0] - g[0]).powi(2) + (a[1] - g[1]).powi(2)).sqrt()
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "observed order {order} from {errs:?}");
    }
    assert!(matches!(p.ball_avg_grad(&x, 0.25, 0.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn linear_field_ball_average_equals_gradient() {
    let mut s = Scenario::heat(2, vec![0.0; 2], vec![0.0; 2], 1.0);
    s.phi = InitialDatum::Linear;
    let p = closed(&s, &still(2, 1, 1.0));
    let a = p.ball_avg_grad(&[0.3, 0.2], 0.5, 0.3).unwrap();
    assert!((a[0] - 1.0).abs() < 1e-12 && a[1].abs() < 1e-12, "{a:?}");
}

#[test]
fn fd_constant_source_decreases_linearly() {
    let mut s = Scenario::heat(2, vec![0.0; 2], vec![0.0; 2], 1.0);
    s.source = Source::Constant(2.0);
    let grid = solve_field_fd(&s, &still(2, 1, 0.5), &Default::default()).unwrap();
    let p = FieldProbe::new(&s, &still(2, 1, 0.5), Backend::FiniteDifference, &Default::default()).unwrap();
    assert!(grid.snapshot_count() >= 51);
    // the zero boundary value leaks in slowly from the box edge
    for &(x0, x1, tol) in &[(0.0, 0.0, 1e-9), (1.5, -2.0, 1e-4)] {
        let f = p.eval_f(&[x0, x1], 0.5).unwrap();
        assert!((f + 1.0).abs() < tol, "{f}");
    }
}

#[test]
fn fd_variable_coefficients_obey_maximum_principle() {
    let mut s = gaussian(1);
    s.coeffs = OperatorCoefficients::variable_sine(1, 0.5);
    s.mu1 = 1.5;
    let grid = solve_field_fd(&s, &still(1, 1, 1.0), &Default::default()).unwrap();
    for k in 0..grid.snapshot_count() {
        for &v in grid.snapshot(k) {
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
    }
}

#[test]
fn fd_box_doubling_changes_little() {
    let s = gaussian(1);
    let path = still(1, 1, 0.5);
    let mut small = QuadratureSpec::default();
    small.fd.box_half_width = Some(5.0);
    let mut big = small.clone();
    big.fd.box_half_width = Some(10.0);
    let a = FieldProbe::new(&s, &path, Backend::FiniteDifference, &small).unwrap();
    let b = FieldProbe::new(&s, &path, Backend::FiniteDifference, &big).unwrap();
    for &x in &[0.0, 1.0, 2.0] {
        assert!((a.eval_f(&[x], 0.5).unwrap() - b.eval_f(&[x], 0.5).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn fd_rejects_bad_boxes_and_steps() {
    let s = gaussian(1);
    let path = still(1, 1, 0.5);
    let mut spec = QuadratureSpec::default();
    spec.fd.box_half_width = Some(2.0);
    assert!(matches!(
        FieldProbe::new(&s, &path, Backend::FiniteDifference, &spec),
        Err(Error::BoxTooSmall { .. })
    ));
    let mut spec = QuadratureSpec::default();
    spec.fd.dt = Some(0.01);
    assert!(matches!(
        FieldProbe::new(&s, &path, Backend::FiniteDifference, &spec),
        Err(Error::Stability { .. })
    ));
}

#[test]
fn backends_agree_on_constant_coefficient_presets() {
    for preset in ["heat", "anisotropic", "drifted"] {
        for dim in [1usize, 2] {
            let mut cfg = ScenarioConfig::minimal(dim, vec![vec![0.2; dim]], vec![vec![0.0; dim]], 0.5);
            cfg.coefficients.preset = preset.into();
            cfg.data.phi = "gaussian".into();
            cfg.data.source = "agent-secretion".into();
            let s: Scenario<f64> = build_scenario(&cfg).unwrap();
            let path = moving(dim, 0.5);
            let spec = QuadratureSpec::default();
            let a = FieldProbe::new(&s, &path, Backend::ClosedFormKernel, &spec).unwrap();
            let b = FieldProbe::new(&s, &path, Backend::FiniteDifference, &spec).unwrap();
            let mut num: f64 = 0.0;
            let mut den: f64 = 0.0;
            for k in 0..7 {
                let r = -1.5 + 0.5 * k as f64;
                let x: Vec<f64> = if dim == 1 { vec![r] } else { vec![r, -0.5 * r] };
                for &t in &[0.1, 0.3, 0.5] {
                    let fa = a.eval_f(&x, t).unwrap();
                    let fb = b.eval_f(&x, t).unwrap();
                    num = num.max((fa - fb).abs());
                    den = den.max(fa.abs());
                }
            }
            assert!(num / den < 5e-3, "{preset} dim {dim}: {}", num / den);
        }
    }
}

#[test]
fn single_precision_field_tracks_double() {
    let s64 = gaussian(1);
    let mut s32: Scenario<f32> = Scenario::heat(1, vec![0.0], vec![0.0], 1.0);
    s32.phi = InitialDatum::Gaussian;
    let p32 = AgentPath::constant(1, 1, vec![0.0f32, 1.0], &[0.3], &[0.0]);
    let a = FieldProbe::new(&s32, &p32, Backend::ClosedFormKernel, &Default::default()).unwrap();
    let b = closed(&s64, &still(1, 1, 1.0));
    let fa = a.eval_f(&[0.5f32], 0.5).unwrap() as f64;
    let fb = b.eval_f(&[0.5], 0.5).unwrap();
    assert!((fa - fb).abs() < 1e-5, "{fa} vs {fb}");
}
