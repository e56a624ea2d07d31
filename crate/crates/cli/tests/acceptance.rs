//! End-to-end acceptance run. Prints one `pass`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use hybrid_cli::cli::{BackendArg, GridArgs, SolveArgs};
use hybrid_cli::commands::{cmd_simulate, field_file_name, MANIFEST_FILE, TRAJECTORY_FILE};
use hybrid_cli::manifest::RunManifest;
use hybrid_core::kernel::{gamma_estimate_c_gamma, gaussian_i0, gaussian_i1, lambda0_bound};
use hybrid_core::linalg::Mat;
use hybrid_core::model::{build_scenario, Scenario, ScenarioConfig};
use hybrid_core::picard::{
    gronwall_bound_B, horizon_certificate, picard_on_grid, solve_global, solve_local,
    uniform_times, AgentPath, GradientMode, SolverOptions,
};
use hybrid_core::quadrature::trapezoid;
use hybrid_core::verify::{
    check_gamma_estimates, check_kernel_mass, check_prop1, field_samples, gronwall_oracle,
    kernel_samples, residual_check,
};
use hybrid_core::{Backend, FieldProbe, Kernel, QuadratureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;
type Criterion = fn() -> Outcome;
type Solved = (Scenario<f64>, SolverOptions<f64>, AgentPath<f64>);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn config(dim: usize, coeffs: &str, phi: &str, source: &str) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::minimal(dim, vec![vec![0.2; dim]], vec![vec![0.0; dim]], 1.0);
    cfg.coefficients.preset = coeffs.into();
    cfg.data.phi = phi.into();
    cfg.data.source = source.into();
    cfg
}

fn scenario(cfg: &ScenarioConfig) -> Result<Scenario<f64>, String> {
    build_scenario(cfg).map_err(err)
}

fn kernel_of(s: &Scenario<f64>) -> Result<Kernel<f64>, String> {
    let (a, b, c) = s.coeffs.constant_parts().ok_or("variable coefficients")?;
    Kernel::new(a, b, c).map_err(err)
}

/// 1D damped chemotaxis from x0 = 0.3, v0 = 0.5 in a Gaussian field.
fn damped_config(chi: f64, source: &str, horizon: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::minimal(1, vec![vec![0.3]], vec![vec![0.5]], horizon);
    cfg.radius = 2.0;
    cfg.data.phi = "gaussian".into();
    cfg.data.source = source.into();
    cfg.force.preset = "damped-chemotaxis".into();
    cfg.force.chi = chi;
    cfg.force.kappa_v = 1.0;
    cfg
}

/// One config per force law, all on the same 1D Gaussian setup.
fn force_presets() -> Vec<(&'static str, ScenarioConfig)> {
    let mut out = Vec::new();
    for (name, chi, kappa) in [
        ("zero", 0.0, 0.0),
        ("constant", 0.0, 0.0),
        ("pure-chemotaxis", 0.1, 0.0),
        ("damped-chemotaxis", 0.1, 1.0),
        ("saturating-chemotaxis", 0.1, 0.0),
    ] {
        let mut cfg = damped_config(chi, "zero", 1.0);
        cfg.force.preset = name.into();
        cfg.force.kappa_v = kappa;
        if name == "constant" {
            cfg.force.vector = Some(vec![0.2]);
        }
        out.push((name, cfg));
    }
    let mut secreting = damped_config(0.1, "agent-secretion", 1.0);
    secreting.data.source = "agent-secretion".into();
    out.push(("damped-chemotaxis+secretion", secreting));
    out
}

fn c1_kernel_mass() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for preset in ["heat", "anisotropic"] {
        for dim in [1usize, 2, 3] {
            let k = kernel_of(&scenario(&config(dim, preset, "zero", "zero"))?)?;
            let r = check_kernel_mass(&k, &kernel_samples(dim, 1.0, 3.0, 20, 11), 1e-6).map_err(err)?;
            pass &= r.pass;
            worst = worst.max(r.worst_ratio);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        pass && secs < 10.0,
        format!("worst |mass - 1| / 1e-6 = {worst:.3e}, {secs:.2}s (limit 10s)"),
    ))
}

fn c2_gamma_estimates() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut halved_fail = true;
    for (preset, dim) in [("heat", 1usize), ("heat", 2), ("anisotropic", 2)] {
        let s = scenario(&config(dim, preset, "zero", "zero"))?;
        let k = kernel_of(&s)?;
        let mut c = [0.0; 3];
        for (order, slot) in c.iter_mut().enumerate() {
            *slot = gamma_estimate_c_gamma(&k, s.lambda0, s.lambda0_star, order, 1.0).map_err(err)?;
        }
        let samples = kernel_samples(dim, 1.0, 8.0, 1000, 3);
        for r in check_gamma_estimates(&k, s.lambda0_star, c, &samples, 0.01).map_err(err)? {
            pass &= r.pass;
            worst = worst.max(r.worst_ratio);
        }
        let half = c.map(|v| v / 2.0);
        halved_fail &= check_gamma_estimates(&k, s.lambda0_star, half, &samples, 0.01)
            .map_err(err)?
            .iter()
            .all(|r| !r.pass);
    }
    Ok((
        pass && halved_fail,
        format!("worst ratio {worst:.4} (limit 1.01), halved C_Gamma fails on every order: {halved_fail}"),
    ))
}

fn heat_jet(x: &[f64], t: f64) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
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

fn c3_field_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for dim in [1usize, 2] {
        let s = scenario(&config(dim, "heat", "gaussian", "zero"))?;
        let path = AgentPath::constant(dim, 1, vec![0.0, 1.0], &s.x0, &s.v0);
        let p = FieldProbe::new(&s, &path, Backend::ClosedFormKernel, &QuadratureSpec::default())
            .map_err(err)?;
        for &t in &[0.05, 0.2, 0.5, 1.0] {
            for k in 0..9 {
                let r = -2.0 + 0.5 * k as f64;
                let x: Vec<f64> = if dim == 1 { vec![r] } else { vec![r, 0.6 * r] };
                if x.iter().map(|v| v * v).sum::<f64>() > 4.0 {
                    continue;
                }
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-6);
                let (f, g, h) = heat_jet(&x, t);
                let (fv, gv, hv) = p.jet_f(&x, t).map_err(err)?;
                worst = worst.max(rel(fv, f));
                for i in 0..dim {
                    worst = worst.max(rel(gv[i], g[i]));
                    for j in 0..dim {
                        worst = worst.max(rel(hv.get(i, j), h[i][j]));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-4 && secs < 60.0,
        format!("worst relative error {worst:.3e} (limit 1e-4), {secs:.2}s (limit 60s)"),
    ))
}

fn moving_path(dim: usize, horizon: f64) -> AgentPath<f64> {
    let times = uniform_times(0.0, horizon, 50);
    let (mut x, mut v) = (Vec::new(), Vec::new());
    for &t in &times {
        for d in 0..dim {
            let phase = 2.0 * t + d as f64;
            x.push(0.5 * phase.sin());
            v.push(phase.cos());
        }
    }
    AgentPath::new(dim, 1, times, x, v).expect("valid path")
}

fn c4_backend_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    for preset in ["heat", "anisotropic", "drifted"] {
        for dim in [1usize, 2] {
            let mut cfg = config(dim, preset, "gaussian", "agent-secretion");
            cfg.horizon = 0.5;
            let s = scenario(&cfg)?;
            let path = moving_path(dim, 0.5);
            let spec = QuadratureSpec::default();
            let a = FieldProbe::new(&s, &path, Backend::ClosedFormKernel, &spec).map_err(err)?;
            let b = FieldProbe::new(&s, &path, Backend::FiniteDifference, &spec).map_err(err)?;
            let (mut num, mut den): (f64, f64) = (0.0, 0.0);
            for k in 0..7 {
                let r = -1.5 + 0.5 * k as f64;
                let x: Vec<f64> = if dim == 1 { vec![r] } else { vec![r, -0.5 * r] };
                for &t in &[0.1, 0.3, 0.5] {
                    let fa = a.eval_f(&x, t).map_err(err)?;
                    num = num.max((fa - b.eval_f(&x, t).map_err(err)?).abs());
                    den = den.max(fa.abs());
                }
            }
            worst = worst.max(num / den);
        }
    }
    Ok((worst <= 5e-3, format!("worst max|diff| / max|f| = {worst:.3e} (limit 5e-3)")))
}

fn c5_prop1() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let rough = scenario(&config(1, "heat", "abs-sqrt", "zero"))?;
    let still = AgentPath::constant(1, 1, vec![0.0, 1.0], &rough.x0, &rough.v0);
    let secreting = scenario(&config(1, "heat", "gaussian", "agent-secretion"))?;
    let moving = moving_path(1, 1.0);
    for (name, s, path) in [("abs-sqrt", &rough, &still), ("agent-secretion", &secreting, &moving)] {
        let probe = FieldProbe::new(s, path, Backend::ClosedFormKernel, &QuadratureSpec::default())
            .map_err(err)?;
        let samples = field_samples(1, 3.0, 0.01, 1.0, 1000, 7);
        let [g, h] = check_prop1(s, &probe, &samples, 1.0, 0.01).map_err(err)?;
        pass &= g.pass && h.pass;
        lines.push(format!("{name} ratios {:.4}/{:.4}", g.worst_ratio, h.worst_ratio));
    }
    Ok((pass, format!("{} (limit 1.01, 1000 samples each)", lines.join(", "))))
}

fn c6_contraction() -> Outcome {
    let s = scenario(&damped_config(0.1, "zero", 2.0))?;
    let opts = SolverOptions { tol: 1e-8, max_iters: 30, ..SolverOptions::for_scenario(&s) };
    let cert = horizon_certificate(&s, s.radius, opts.mode).map_err(err)?;
    let local = solve_local(&s, &cert, &opts).map_err(err)?;
    // ratios of differences already at roundoff level carry no information
    let worst = local
        .diffs
        .windows(2)
        .filter(|w| w[0] > 1e-13)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    Ok((
        worst <= cert.s_value + 0.05 && local.iterations <= 30,
        format!(
            "T_bar {:.4e}, S {:.4}, worst ratio {worst:.4} (limit S + 0.05), {} iterations (limit 30)",
            cert.t_bar, cert.s_value, local.iterations
        ),
    ))
}

fn solve_preset(cfg: &ScenarioConfig) -> Result<Solved, String> {
    let s = scenario(cfg)?;
    let opts = SolverOptions::for_scenario(&s);
    let sol = solve_global(&s, s.horizon(), &opts).map_err(err)?;
    Ok((s, opts, sol.path))
}

fn c7_residuals() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (_, cfg) in force_presets() {
        let (s, opts, path) = solve_preset(&cfg)?;
        let probe = FieldProbe::new(&s, &path, opts.backend, &opts.quadrature).map_err(err)?;
        let r = residual_check(&path, &s, &probe, opts.mode, 1e-3).map_err(err)?;
        pass &= r.pass;
        worst = worst.max(r.constants["max_residual"]);
    }
    Ok((
        pass,
        format!("worst residual {worst:.3e} over {} presets (limit 1e-3)", force_presets().len()),
    ))
}

/// RK4 for x' = v, v' = -v with 5000 steps on [0, horizon].
fn damped_rk4(x0: f64, v0: f64, horizon: f64) -> Vec<(f64, f64, f64)> {
    let steps = 5000;
    let h = horizon / steps as f64;
    let rhs = |_x: f64, v: f64| (v, -v);
    let (mut x, mut v) = (x0, v0);
    let mut out = vec![(0.0, x, v)];
    for k in 0..steps {
        let (a1, b1) = rhs(x, v);
        let (a2, b2) = rhs(x + h / 2.0 * a1, v + h / 2.0 * b1);
        let (a3, b3) = rhs(x + h / 2.0 * a2, v + h / 2.0 * b2);
        let (a4, b4) = rhs(x + h * a3, v + h * b3);
        x += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push(((k + 1) as f64 * h, x, v));
    }
    out
}

fn c8_global() -> Outcome {
    let (_, _, path) = solve_preset(&damped_config(0.0, "zero", 2.0))?;
    let (mut x, mut v) = ([0.0], [0.0]);
    let mut gap: f64 = 0.0;
    for (t, xo, vo) in damped_rk4(0.3, 0.5, 2.0) {
        path.positions_at(t, &mut x);
        path.velocities_at(t, &mut v);
        gap = gap.max((x[0] - xo).abs()).max((v[0] - vo).abs());
    }
    let mut within = true;
    let mut tightest: f64 = 0.0;
    for (_, cfg) in force_presets() {
        let (s, _, path) = solve_preset(&cfg)?;
        let b = gronwall_bound_B(&s, s.horizon()).map_err(err)?;
        let dev = path.sup_deviation(&s.x0, &s.v0);
        within &= dev <= b;
        if b > 0.0 {
            tightest = tightest.max(dev / b);
        }
    }
    Ok((
        gap <= 1e-3 && within,
        format!("sup gap to RK4 on [0, 2] {gap:.3e} (limit 1e-3), max deviation / B {tightest:.3e} (limit 1)"),
    ))
}

fn c9_nonlocal() -> Outcome {
    let s = scenario(&config(2, "heat", "gaussian", "zero"))?;
    let still = AgentPath::constant(2, 1, vec![0.0, 1.0], &s.x0, &s.v0);
    let p = FieldProbe::new(&s, &still, Backend::ClosedFormKernel, &QuadratureSpec::default())
        .map_err(err)?;
    let (x, t) = ([0.4, -0.3], 0.25);
    let g = p.grad_f(&x, t).map_err(err)?;
    let mut errs = Vec::new();
    for d in [0.2, 0.1, 0.05] {
        let a = p.ball_avg_grad(&x, t, d).map_err(err)?;
        errs.push(((a[0] - g[0]).powi(2) + (a[1] - g[1]).powi(2)).sqrt());
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    let s = scenario(&damped_config(0.5, "zero", 0.5))?;
    let times = uniform_times(0.0, 0.5, 50);
    let solve = |mode| {
        let opts = SolverOptions { mode, ..SolverOptions::for_scenario(&s) };
        picard_on_grid(&s, None, times.clone(), &opts).map(|r| r.path).map_err(err)
    };
    let base = solve(GradientMode::Pointwise)?;
    let mut gaps = Vec::new();
    for d in [0.2, 0.1, 0.05] {
        gaps.push(solve(GradientMode::Nonlocal(d))?.sup_distance(&base).map_err(err)?);
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok((
        orders.iter().all(|&o| o >= 1.8) && monotone,
        format!(
            "ball-average orders {} (limit 1.8), nonlocal gaps {} shrinking: {monotone}",
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join("/"),
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join("/"),
        ),
    ))
}

fn c10_gronwall() -> Outcome {
    let grid = uniform_times(0.0, 1.0, 1000);
    let cases = [
        ("constant", gronwall_oracle(2.0, |_| 0.0, |_, _| 0.0, &grid, 1e-3)),
        ("classical", gronwall_oracle(1.0, |_| 0.7, |_, _| 0.0, &grid, 1e-3)),
        ("double-integral", gronwall_oracle(1.0, |_| 0.0, |_, _| 1.0, &grid, 1e-3)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in cases {
        let r = r.map_err(err)?;
        pass &= r.pass;
        parts.push(format!("{name} {:.4}", r.worst_ratio));
    }
    Ok((pass, format!("ratios {} (grid 1e-3, margin 1e-3)", parts.join(", "))))
}

fn radial_moment(gamma: f64, n: usize, power: i32) -> f64 {
    let area = match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let rule = trapezoid(0.0, (60.0 / gamma).sqrt(), 200_001);
    area * rule.integrate(|r| r.powi(n as i32 - 1 + power) * (-gamma * r * r).exp())
}

fn c11_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        for gamma in [0.1, 0.37, 1.0, 2.5, 10.0] {
            let i0 = gaussian_i0(gamma, n).map_err(err)?;
            let i1 = gaussian_i1(gamma, n).map_err(err)?;
            let (q0, q1) = (radial_moment(gamma, n, 0), radial_moment(gamma, n, 1));
            worst = worst.max((i0 - q0).abs() / q0).max((i1 - q1).abs() / q1);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| m[i][k] * m[j][k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 })
                    .collect()
            })
            .collect();
        let a = Mat::from_rows(&rows).map_err(err)?;
        let ev = a.symmetric_eigenvalues();
        let bound = lambda0_bound(ev[0], ev[n - 1]).map_err(err)?;
        let inv = a.inverse().map_err(err)?;
        for _ in 0..200 {
            let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nn: f64 = eta.iter().map(|v| v * v).sum();
            if nn > 1e-12 && inv.quad_form(&eta) / nn < bound * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    Ok((
        worst <= 1e-6 && violations == 0,
        format!("worst I0/I1 relative error {worst:.3e} (limit 1e-6), lambda0 bound violations {violations}/20000"),
    ))
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().map_err(err)?;
    let cfg_path = tmp.path().join("scenario.toml");
    let cfg = damped_config(0.1, "agent-secretion", 0.3);
    std::fs::write(&cfg_path, toml::to_string(&cfg).map_err(err)?).map_err(err)?;
    let grid = GridArgs { field_times: vec![0.1, 0.3], half_width: Some(2.0), h: Some(0.25) };
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let args = SolveArgs {
            config: cfg_path.clone(),
            out: Some(out.clone()),
            mode: None,
            delta: None,
            tol: 1e-8,
            horizon: None,
            dt: 0.01,
            max_iters: 50,
            backend: BackendArg::Auto,
            threads: 0,
        };
        cmd_simulate(&args, &grid).map(|_| out).map_err(err)
    };
    let (a, b) = (run("a")?, run("b")?);
    let mut same = true;
    let mut files = vec![TRAJECTORY_FILE.to_string()];
    files.extend(grid.field_times.iter().map(|&t| field_file_name(t)));
    for f in &files {
        same &= std::fs::read(a.join(f)).map_err(err)? == std::fs::read(b.join(f)).map_err(err)?;
    }
    let manifest = |dir: &std::path::Path| -> Result<RunManifest, String> {
        serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(err)?).map_err(err)
    };
    let manifests = manifest(&a)?.without_timing() == manifest(&b)?.without_timing();
    Ok((
        same && manifests,
        format!("{} output files byte-identical: {same}, manifests equal outside timing: {manifests}", files.len()),
    ))
}

fn main() {
    let criteria: [(&str, Criterion); 12] = [
        ("kernel mass", c1_kernel_mass),
        ("kernel estimates", c2_gamma_estimates),
        ("field oracle", c3_field_oracle),
        ("backend agreement", c4_backend_agreement),
        ("field derivative certificates", c5_prop1),
        ("contraction", c6_contraction),
        ("fixed-point residual", c7_residuals),
        ("global continuation", c8_global),
        ("nonlocal consistency", c9_nonlocal),
        ("gronwall", c10_gronwall),
        ("gaussian moments and lambda0", c11_closed_forms),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let (pass, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if pass { "pass" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
