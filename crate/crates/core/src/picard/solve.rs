use serde::Serialize;

use super::horizon::{certificate_with, HorizonCertificate};
use super::path::{uniform_times, AgentPath};
use crate::error::{Error, Result};
use crate::field::{Backend, FieldProbe, QuadratureSpec};
use crate::kernel::EstimateParams;
use crate::model::Scenario;
use crate::real::Real;

/// How an agent senses the field gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GradientMode<T> {
    Pointwise,
    /// Average of the gradient over a ball of radius `delta`.
    Nonlocal(T),
}

impl<T: Real> GradientMode<T> {
    pub fn for_scenario(s: &Scenario<T>) -> Self {
        match s.nonlocal_delta {
            Some(d) => GradientMode::Nonlocal(d),
            None => GradientMode::Pointwise,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions<T> {
    pub backend: Backend,
    pub quadrature: QuadratureSpec,
    pub mode: GradientMode<T>,
    /// Stop once successive iterates are closer than this in sup norm.
    pub tol: T,
    pub max_iters: usize,
    /// Step of the path time grid.
    pub dt: T,
    /// Fraction of `min(T1, T2)` actually used.
    pub safety: T,
    /// `T2` solves `S(T2) = 1 - margin`.
    pub margin: T,
    /// Continuation fails when a certified segment is shorter than this.
    pub min_step: T,
    /// Radius of `E_R`; the scenario radius when `None`.
    pub radius: Option<T>,
    /// Worker threads for field evaluations; 0 means all available.
    pub threads: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            backend: Backend::Auto,
            quadrature: QuadratureSpec::default(),
            mode: GradientMode::Pointwise,
            tol: T::lit(1e-8),
            max_iters: 50,
            dt: T::lit(0.01),
            safety: T::lit(0.9),
            margin: T::lit(0.1),
            min_step: T::lit(1e-6),
            radius: None,
            threads: 0,
        }
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn for_scenario(s: &Scenario<T>) -> Self {
        SolverOptions {
            mode: GradientMode::for_scenario(s),
            ..Default::default()
        }
    }

    fn worker_count(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

/// Result of one Picard solve on a single segment.
#[derive(Clone, Debug)]
pub struct LocalSolution<T> {
    pub path: AgentPath<T>,
    /// `|Y_(k+1) - Y_k|` in sup norm, one entry per application of `Psi`.
    pub diffs: Vec<T>,
    /// `diffs[k] / diffs[k-1]` for `k >= 1` (skipped when the divisor is 0).
    pub ratios: Vec<T>,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentReport<T> {
    pub start: T,
    pub end: T,
    pub iterations: usize,
    pub diffs: Vec<T>,
    pub certificate: HorizonCertificate<T>,
}

#[derive(Clone, Debug)]
pub struct GlobalSolution<T> {
    pub path: AgentPath<T>,
    pub segments: Vec<SegmentReport<T>>,
}

/// Sensed gradient at every node and agent of `path`, evaluated on the
/// field generated by `full`.
fn sensed_gradients<T: Real>(
    probe: &FieldProbe<T>,
    path: &AgentPath<T>,
    mode: GradientMode<T>,
    workers: usize,
) -> Result<Vec<T>> {
    let dim = path.dim();
    let stride = path.stride();
    let m = path.len();
    let mut out = vec![T::zero(); m * stride];
    let eval_node = |k: usize, dst: &mut [T]| -> Result<()> {
        let t = path.times()[k];
        let xs = path.x_node(k);
        for j in 0..path.agents() {
            let x = &xs[j * dim..(j + 1) * dim];
            let w = match mode {
                GradientMode::Pointwise => probe.grad_f(x, t)?,
                GradientMode::Nonlocal(delta) => probe.ball_avg_grad(x, t, delta)?,
            };
            dst[j * dim..(j + 1) * dim].copy_from_slice(&w);
        }
        Ok(())
    };
    let workers = workers.clamp(1, m.max(1));
    if workers == 1 {
        for (k, dst) in out.chunks_mut(stride).enumerate() {
            eval_node(k, dst)?;
        }
        return Ok(out);
    }
    let per = m.div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = out
            .chunks_mut(per * stride)
            .enumerate()
            .map(|(c, block)| {
                let eval_node = &eval_node;
                scope.spawn(move || -> Result<()> {
                    for (i, dst) in block.chunks_mut(stride).enumerate() {
                        eval_node(c * per + i, dst)?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("field worker panicked"))
            .collect::<Result<Vec<()>>>()
    })?;
    Ok(out)
}

/// One application of `Psi` to `path`, whose field is generated by
/// `history` followed by `path`. The segment's initial state is the
/// scenario's `(x0, v0)`.
pub fn apply_psi_after<T: Real>(
    scenario: &Scenario<T>,
    history: Option<&AgentPath<T>>,
    path: &AgentPath<T>,
    opts: &SolverOptions<T>,
) -> Result<AgentPath<T>> {
    let r = opts.radius.unwrap_or(scenario.radius);
    if let Some((node, distance)) = path.first_exit(&scenario.x0, &scenario.v0, r) {
        return Err(Error::LeftBall {
            node,
            time: path.times()[node].to_f64_lossy(),
            distance: distance.to_f64_lossy(),
            radius: r.to_f64_lossy(),
        });
    }
    let full = match history {
        Some(h) => h.concat(path)?,
        None => path.clone(),
    };
    let dim = path.dim();
    let stride = path.stride();
    let m = path.len();
    let w = if scenario.force.lipschitz_w() == T::zero() {
        vec![T::zero(); m * stride]
    } else {
        let probe = FieldProbe::new(scenario, &full, opts.backend, &opts.quadrature)?;
        sensed_gradients(&probe, path, opts.mode, opts.worker_count())?
    };

    let mut force = vec![T::zero(); m * stride];
    for k in 0..m {
        let t = path.times()[k];
        for j in 0..path.agents() {
            scenario.force.eval(
                t,
                j,
                path.x_node(k),
                path.v_node(k),
                &w[k * stride + j * dim..k * stride + (j + 1) * dim],
                &mut force[k * stride + j * dim..k * stride + (j + 1) * dim],
            );
        }
    }

    let mut out = path.clone();
    out.x_node_mut(0).copy_from_slice(&scenario.x0);
    out.v_node_mut(0).copy_from_slice(&scenario.v0);
    let half = T::lit(0.5);
    for k in 1..m {
        let h = path.times()[k] - path.times()[k - 1];
        for c in 0..stride {
            let dx = half * h * (path.v_node(k - 1)[c] + path.v_node(k)[c]);
            let dv = half * h * (force[(k - 1) * stride + c] + force[k * stride + c]);
            let xp = out.x_node(k - 1)[c];
            let vp = out.v_node(k - 1)[c];
            out.x_node_mut(k)[c] = xp + dx;
            out.v_node_mut(k)[c] = vp + dv;
        }
    }
    Ok(out)
}

/// `Psi(path)` for a path starting at time 0.
pub fn apply_psi<T: Real>(
    scenario: &Scenario<T>,
    path: &AgentPath<T>,
    opts: &SolverOptions<T>,
) -> Result<AgentPath<T>> {
    apply_psi_after(scenario, None, path, opts)
}

/// Picard iteration from the constant path on the given time grid.
pub fn picard_on_grid<T: Real>(
    scenario: &Scenario<T>,
    history: Option<&AgentPath<T>>,
    times: Vec<T>,
    opts: &SolverOptions<T>,
) -> Result<LocalSolution<T>> {
    let mut y = AgentPath::constant(scenario.dim, scenario.agents, times, &scenario.x0, &scenario.v0);
    let mut diffs: Vec<T> = Vec::new();
    let mut ratios = Vec::new();
    for it in 1..=opts.max_iters {
        let next = apply_psi_after(scenario, history, &y, opts)?;
        let d = next.sup_distance(&y)?;
        if !d.is_finite() {
            return Err(Error::Divergence(format!("iterate {it} is not finite")));
        }
        if let Some(&prev) = diffs.last() {
            if prev > T::zero() {
                ratios.push(d / prev);
            }
        }
        diffs.push(d);
        y = next;
        if d < opts.tol {
            return Ok(LocalSolution {
                path: y,
                diffs,
                ratios,
                iterations: it,
            });
        }
    }
    Err(Error::MaxIterations {
        iterations: opts.max_iters,
        last_ratio: ratios.last().map_or(f64::NAN, |r| r.to_f64_lossy()),
    })
}

/// Grid of `[start, start + t_bar]` with step at most `opts.dt`.
fn segment_times<T: Real>(start: T, len: T, dt: T) -> Vec<T> {
    let steps = (len / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
    uniform_times(start, start + len, steps)
}

/// Picard solve on `[0, T_bar]` of the certificate.
pub fn solve_local<T: Real>(
    scenario: &Scenario<T>,
    cert: &HorizonCertificate<T>,
    opts: &SolverOptions<T>,
) -> Result<LocalSolution<T>> {
    if !(cert.s_value < T::one() && cert.t_bar > T::zero()) {
        return Err(Error::Precondition(format!(
            "certificate with S = {} and T_bar = {} does not certify a contraction",
            cert.s_value, cert.t_bar
        )));
    }
    let times = segment_times(cert.start, cert.t_bar, opts.dt);
    picard_on_grid(scenario, None, times, opts)
}

/// Solve on `[0, horizon]` by restarting the local solve at the end of each
/// certified segment. Segment lengths are rounded down to a multiple of
/// `opts.dt` when they exceed it, so that the usual case keeps one uniform
/// grid.
pub fn solve_global<T: Real>(
    scenario: &Scenario<T>,
    horizon: T,
    opts: &SolverOptions<T>,
) -> Result<GlobalSolution<T>> {
    if !(horizon > T::zero()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let mut base = scenario.clone();
    base.growth.horizon = horizon;
    let params = EstimateParams::for_scenario(&base)?;
    let r = opts.radius.unwrap_or(scenario.radius);
    let close = T::lit(1e-9) * (T::one() + horizon);

    let mut start = T::zero();
    let mut path: Option<AgentPath<T>> = None;
    let mut segments = Vec::new();
    while horizon - start > close {
        let seg_scenario = match &path {
            Some(p) => base.restarted(p.x_node(p.len() - 1).to_vec(), p.v_node(p.len() - 1).to_vec()),
            None => base.clone(),
        };
        let cert = certificate_with(
            &seg_scenario,
            r,
            opts.mode,
            params,
            start,
            horizon,
            opts.safety,
            opts.margin,
        )?;
        if cert.t_bar < opts.min_step {
            return Err(Error::HorizonUnderflow {
                t_bar: cert.t_bar.to_f64_lossy(),
                min_step: opts.min_step.to_f64_lossy(),
            });
        }
        let remaining = horizon - start;
        // the modulus is increasing, so a remainder shorter than min(T1, T2)
        // is certified as well and taken whole instead of leaving a sliver
        let len = if cert.t1.min(cert.t2) >= remaining || cert.t_bar >= remaining {
            remaining
        } else if cert.t_bar >= opts.dt {
            (cert.t_bar / opts.dt * (T::one() + T::lit(1e-12))).floor() * opts.dt
        } else {
            cert.t_bar
        };
        let end = if len == remaining { horizon } else { start + len };
        let steps = ((end - start) / opts.dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
        let times = uniform_times(start, end, steps);
        let sol = picard_on_grid(&seg_scenario, path.as_ref(), times, opts)?;
        segments.push(SegmentReport {
            start,
            end,
            iterations: sol.iterations,
            diffs: sol.diffs,
            certificate: cert,
        });
        path = Some(match path {
            Some(p) => p.concat(&sol.path)?,
            None => sol.path,
        });
        start = end;
    }
    Ok(GlobalSolution {
        path: path.expect("at least one segment"),
        segments,
    })
}
