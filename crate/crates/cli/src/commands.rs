use std::path::{Path, PathBuf};
use std::time::Instant;

use hybrid_core::field::FieldProbe;
use hybrid_core::kernel::{gamma_estimate_c_gamma, Kernel};
use hybrid_core::model::ScenarioConfig;
use hybrid_core::picard::{
    contraction_s, gronwall_bound_B, horizon_certificate, solve_global, uniform_times,
    GlobalSolution,
};
use hybrid_core::verify::{
    check_gamma_estimates, check_holder, check_kernel_mass, check_prop1, field_samples,
    gronwall_oracle, holder_pairs, kernel_samples, residual_check,
};
use hybrid_core::{AgentPath, Backend, EstimateReport, GradientMode, Scenario, SolverOptions};
use serde::Serialize;

use crate::cli::{BoundsArgs, GridArgs, ModeArg, SolveArgs, Suite, VerifyArgs, OUT_DIR_ENV};
use crate::config::{digest, load_config, scenario};
use crate::error::{CliError, CliResult};
use crate::formats::{write_field_grid, write_key_values, write_trajectory, FieldGrid};
use crate::manifest::{RunManifest, SegmentRecord, Timing, MANIFEST_FORMAT};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "verify-report.json";
pub const BOUNDS_FILE: &str = "bounds.txt";

/// Scale applied to `K` by the prop1 falsification control. The
/// bounds leave roughly a factor ten of headroom on the catalog data, so the
/// control has to understate `K` by more than that.
pub const PROP1_FALSIFY_SCALE: f64 = 0.05;

pub fn out_dir(explicit: &Option<PathBuf>) -> PathBuf {
    explicit
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hybrid-out"))
}

fn write(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(CliError::io(path))
}

pub fn field_file_name(t: f64) -> String {
    format!("field_t{t:.4}.txt")
}

fn mode_for(args: &SolveArgs, cfg: &ScenarioConfig) -> CliResult<GradientMode<f64>> {
    let mode = args.mode.unwrap_or(if cfg.nonlocal_delta.is_some() {
        ModeArg::Nonlocal
    } else {
        ModeArg::Pointwise
    });
    match mode {
        ModeArg::Pointwise => {
            if args.delta.is_some() {
                return Err(CliError::Usage("--delta needs --mode nonlocal".into()));
            }
            Ok(GradientMode::Pointwise)
        }
        ModeArg::Nonlocal => {
            let d = args.delta.or(cfg.nonlocal_delta).ok_or_else(|| {
                CliError::Usage("nonlocal mode needs --delta or nonlocal_delta in the config".into())
            })?;
            if !(d > 0.0) {
                return Err(CliError::Usage(format!("--delta must be positive, got {d}")));
            }
            Ok(GradientMode::Nonlocal(d))
        }
    }
}

struct Solved {
    cfg: ScenarioConfig,
    scenario: Scenario<f64>,
    opts: SolverOptions<f64>,
    horizon: f64,
    solution: GlobalSolution<f64>,
    solve_seconds: f64,
}

fn solve(args: &SolveArgs) -> CliResult<Solved> {
    let cfg = load_config(&args.config)?;
    let mut scenario = scenario(&cfg)?;
    let mode = mode_for(args, &cfg)?;
    if let GradientMode::Nonlocal(d) = mode {
        scenario.nonlocal_delta = Some(d);
    }
    let horizon = args.horizon.unwrap_or(cfg.horizon);
    if !(horizon > 0.0) {
        return Err(CliError::Usage(format!("horizon must be positive, got {horizon}")));
    }
    if !(args.tol > 0.0 && args.dt > 0.0) {
        return Err(CliError::Usage("--tol and --dt must be positive".into()));
    }
    let opts = SolverOptions {
        backend: args.backend.into(),
        mode,
        tol: args.tol,
        max_iters: args.max_iters,
        dt: args.dt,
        threads: args.threads,
        ..SolverOptions::for_scenario(&scenario)
    };
    let clock = Instant::now();
    let solution = solve_global(&scenario, horizon, &opts)?;
    Ok(Solved {
        cfg,
        scenario,
        opts,
        horizon,
        solution,
        solve_seconds: clock.elapsed().as_secs_f64(),
    })
}

fn grid_snapshots(
    scenario: &Scenario<f64>,
    path: &AgentPath<f64>,
    opts: &SolverOptions<f64>,
    grid: &GridArgs,
) -> CliResult<Vec<FieldGrid>> {
    if grid.field_times.is_empty() {
        return Ok(Vec::new());
    }
    let (default_w, default_h) = opts.quadrature.fd.resolved(scenario.dim);
    let half_width = grid.half_width.unwrap_or(default_w);
    let h = grid.h.unwrap_or(default_h);
    if !(half_width > 0.0 && h > 0.0 && h <= half_width) {
        return Err(CliError::Usage(format!("bad grid: box {half_width}, h {h}")));
    }
    let per_axis = (2.0 * half_width / h).round() as usize + 1;
    let probe = FieldProbe::new(scenario, path, opts.backend, &opts.quadrature)?;
    let mut out = Vec::new();
    for &t in &grid.field_times {
        let mut g = FieldGrid {
            dim: scenario.dim,
            half_width,
            h,
            t,
            per_axis,
            values: Vec::with_capacity(per_axis.pow(scenario.dim as u32)),
        };
        for flat in 0..per_axis.pow(scenario.dim as u32) {
            g.values.push(probe.eval_f(&g.node(flat), t)?);
        }
        out.push(g);
    }
    Ok(out)
}

fn manifest(command: &str, s: &Solved, outputs: Vec<String>, timing: Timing) -> RunManifest {
    let (mode, delta) = match s.opts.mode {
        GradientMode::Pointwise => ("pointwise", None),
        GradientMode::Nonlocal(d) => ("nonlocal", Some(d)),
    };
    let segments = s
        .solution
        .segments
        .iter()
        .map(|seg| SegmentRecord {
            start: seg.start,
            end: seg.end,
            t1: seg.certificate.t1,
            t2: seg.certificate.t2.is_finite().then_some(seg.certificate.t2),
            t_bar: seg.certificate.t_bar,
            s_value: seg.certificate.s_value,
            iterations: seg.iterations,
            diffs: seg.diffs.clone(),
        })
        .collect();
    RunManifest {
        format: MANIFEST_FORMAT.into(),
        command: command.into(),
        config_digest: digest(&s.cfg),
        mode: mode.into(),
        delta,
        backend: format!("{:?}", s.opts.backend),
        tol: s.opts.tol,
        dt: s.opts.dt,
        horizon: s.horizon,
        bound_b: gronwall_bound_B(&s.scenario, s.horizon).ok(),
        segments,
        outputs,
        timing,
    }
}

/// Files written by a run, relative to the output directory.
#[derive(Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

fn run_solve(command: &str, args: &SolveArgs, grid: &GridArgs, trajectory: bool) -> CliResult<RunOutput> {
    let clock = Instant::now();
    let solved = solve(args)?;
    let dir = out_dir(&args.out);
    let mut outputs = Vec::new();
    if trajectory {
        write(&dir, TRAJECTORY_FILE, &write_trajectory(&solved.solution.path))?;
        outputs.push(TRAJECTORY_FILE.to_string());
    }
    let field_clock = Instant::now();
    let grids = grid_snapshots(&solved.scenario, &solved.solution.path, &solved.opts, grid)?;
    for g in &grids {
        let name = field_file_name(g.t);
        write(&dir, &name, &write_field_grid(g))?;
        outputs.push(name);
    }
    let field_seconds = field_clock.elapsed().as_secs_f64();
    outputs.push(MANIFEST_FILE.to_string());
    let timing = Timing {
        solve_seconds: solved.solve_seconds,
        field_seconds,
        total_seconds: clock.elapsed().as_secs_f64(),
    };
    let m = manifest(command, &solved, outputs, timing);
    write(&dir, MANIFEST_FILE, &m.to_json())?;
    Ok(RunOutput { dir, manifest: m })
}

pub fn cmd_simulate(args: &SolveArgs, grid: &GridArgs) -> CliResult<RunOutput> {
    run_solve("simulate", args, grid, true)
}

pub fn cmd_field_export(args: &SolveArgs, grid: &GridArgs) -> CliResult<RunOutput> {
    if grid.field_times.is_empty() {
        return Err(CliError::Usage("field-export needs --field-times".into()));
    }
    run_solve("field-export", args, grid, false)
}

/// The flat certificate document for a config.
pub fn bounds_entries(args: &BoundsArgs) -> CliResult<Vec<(String, f64)>> {
    let cfg = load_config(&args.config)?;
    let s = scenario(&cfg)?;
    let mode = GradientMode::for_scenario(&s);
    let r = args.radius.unwrap_or(s.radius);
    let c = horizon_certificate(&s, r, mode)?;
    let b = gronwall_bound_B(&s, s.horizon())?;
    let p = &c.params;
    let mut e: Vec<(String, f64)> = vec![
        ("T1", c.t1),
        ("T2", c.t2),
        ("T_bar", c.t_bar),
        ("S_value", c.s_value),
        ("gamma_bar", c.gamma_bar),
        ("K", p.k),
        ("kappa", p.kappa),
        ("C_Gamma", p.c_gamma),
        ("lambda0", p.lambda0),
        ("lambda0_star", p.lambda0_star),
        ("B", b),
        ("R", r),
        ("exponent", c.exponent),
        ("T1_small_exponent", c.t1_small_exponent),
        ("S_value_small_exponent", c.s_value_small_exponent),
        ("full_modulus", c.full_modulus),
        ("H", c.h),
        ("H_X", c.h_x),
        ("L_F", c.l_f),
        ("L_F_R", c.l_f_r),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    if let GradientMode::Nonlocal(d) = mode {
        e.push(("delta".into(), d));
    }
    Ok(e)
}

pub fn cmd_bounds(args: &BoundsArgs) -> CliResult<String> {
    let text = write_key_values(&bounds_entries(args)?);
    if let Some(path) = &args.out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        std::fs::write(path, &text).map_err(CliError::io(path))?;
    }
    Ok(text)
}

/// Recompute `S` at the `T_bar` of a bounds document.
pub fn recompute_s(cfg_path: &Path, radius: f64, t_bar: f64) -> CliResult<f64> {
    let s = scenario(&load_config(cfg_path)?)?;
    Ok(contraction_s(&s, radius, t_bar, GradientMode::for_scenario(&s))?)
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    /// What was checked within the suite, e.g. which function for `holder`.
    pub target: String,
    pub report: EstimateReport,
}

#[derive(Debug, Serialize)]
pub struct VerifyDocument {
    pub format: String,
    pub config_digest: String,
    pub seed: u64,
    pub falsify: bool,
    pub reports: Vec<SuiteReport>,
}

impl VerifyDocument {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.report.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.reports
            .iter()
            .filter(|r| !r.report.pass)
            .map(|r| format!("{}/{}", r.suite, r.target))
            .collect()
    }
}

fn constant_kernel(s: &Scenario<f64>) -> CliResult<Kernel<f64>> {
    let (a, b, c) = s
        .coeffs
        .constant_parts()
        .ok_or(hybrid_core::Error::NonConstantCoefficients)?;
    Ok(Kernel::new(a, b, c)?)
}

fn run_suite(
    suite: Suite,
    s: &Scenario<f64>,
    args: &VerifyArgs,
    out: &mut Vec<SuiteReport>,
) -> CliResult<()> {
    let n = |default: usize| args.samples.unwrap_or(default);
    let tol = args.tolerance;
    let mut push = |target: &str, report: EstimateReport| {
        out.push(SuiteReport {
            suite: suite.name().into(),
            target: target.into(),
            report,
        })
    };
    let no_control = || {
        Err(CliError::Usage(format!(
            "suite {} has no falsification control",
            suite.name()
        )))
    };
    match suite {
        Suite::KernelMass => {
            if args.falsify {
                return no_control();
            }
            let k = constant_kernel(s)?;
            let samples = kernel_samples(s.dim, s.horizon(), 3.0, n(20), args.seed);
            push("kernel", check_kernel_mass(&k, &samples, 1e-6)?);
        }
        Suite::Gamma => {
            let k = constant_kernel(s)?;
            let scale = if args.falsify { 0.5 } else { 1.0 };
            let mut c = [0.0; 3];
            for (order, slot) in c.iter_mut().enumerate() {
                *slot = scale
                    * gamma_estimate_c_gamma(&k, s.lambda0, s.lambda0_star, order, s.horizon())?;
            }
            let samples = kernel_samples(s.dim, s.horizon(), 8.0, n(1000), args.seed);
            for (order, r) in check_gamma_estimates(&k, s.lambda0_star, c, &samples, tol)?
                .into_iter()
                .enumerate()
            {
                push(&format!("order-{order}"), r);
            }
        }
        Suite::Prop1 => {
            let path = AgentPath::constant(s.dim, s.agents, vec![0.0, s.horizon()], &s.x0, &s.v0);
            let probe = FieldProbe::new(s, &path, Backend::Auto, &Default::default())?;
            let samples = field_samples(s.dim, 3.0, 0.01, s.horizon(), n(1000), args.seed);
            let scale = if args.falsify { PROP1_FALSIFY_SCALE } else { 1.0 };
            let [g, h] = check_prop1(s, &probe, &samples, scale, tol)?;
            push("gradient", g);
            push("hessian", h);
        }
        Suite::Holder => {
            let scale = if args.falsify { 0.25 } else { 1.0 };
            let radius = 2.0;
            let h = s
                .growth
                .h
                .ok_or(hybrid_core::Error::MissingConstant("Holder constant H of phi"))?;
            let pairs = holder_pairs(s.dim, 0, radius, n(10_000), args.seed);
            let phi = &s.phi;
            push(
                "phi",
                check_holder(|x, _| phi.eval(x), s.alpha(), s.growth.c, scale * h, &pairs, tol)?,
            );
            if s.source.depends_on_agents() {
                let pairs = holder_pairs(s.dim, s.agents, radius, n(10_000), args.seed);
                let src = &s.source;
                let hr = s.growth.hr.at(radius);
                push(
                    "source",
                    check_holder(|x, a| src.eval(x, a), s.alpha(), 0.0, scale * hr, &pairs, tol)?,
                );
            }
        }
        Suite::Gronwall => {
            if args.falsify {
                return no_control();
            }
            let grid = uniform_times(0.0, 1.0, 1000);
            let margin = 1e-3;
            push("constant", gronwall_oracle(1.0, |_| 0.0, |_, _| 0.0, &grid, margin)?);
            push("classical", gronwall_oracle(1.0, |_| 1.0, |_, _| 0.0, &grid, margin)?);
            push("double-integral", gronwall_oracle(1.0, |_| 0.0, |_, _| 1.0, &grid, margin)?);
        }
        Suite::Residual => {
            let opts = SolverOptions::for_scenario(s);
            let sol = solve_global(s, s.horizon(), &opts)?;
            let mut path = sol.path;
            if args.falsify {
                for k in 0..path.len() {
                    path.v_node_mut(k).iter_mut().for_each(|v| *v += 0.1);
                }
            }
            let probe = FieldProbe::new(s, &path, opts.backend, &opts.quadrature)?;
            push("path", residual_check(&path, s, &probe, opts.mode, 1e-3)?);
        }
    }
    Ok(())
}

pub fn verify_document(args: &VerifyArgs) -> CliResult<VerifyDocument> {
    let cfg = load_config(&args.config)?;
    let s = scenario(&cfg)?;
    let suites = if args.suite.is_empty() {
        vec![
            Suite::KernelMass,
            Suite::Gamma,
            Suite::Prop1,
            Suite::Holder,
            Suite::Gronwall,
            Suite::Residual,
        ]
    } else {
        args.suite.clone()
    };
    let mut reports = Vec::new();
    for suite in suites {
        run_suite(suite, &s, args, &mut reports)?;
    }
    Ok(VerifyDocument {
        format: "hybrid-verify/1".into(),
        config_digest: digest(&cfg),
        seed: args.seed,
        falsify: args.falsify,
        reports,
    })
}

pub fn write_report(args: &VerifyArgs, doc: &VerifyDocument) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("report serializes");
    text.push('\n');
    write(&out_dir(&args.out), REPORT_FILE, &text)
}

/// Runs the checks, writes the report and fails when any check failed.
pub fn cmd_verify(args: &VerifyArgs) -> CliResult<VerifyDocument> {
    let doc = verify_document(args)?;
    write_report(args, &doc)?;
    if doc.all_pass() {
        Ok(doc)
    } else {
        Err(CliError::VerificationFailed(doc.failures()))
    }
}
