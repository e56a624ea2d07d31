//! The chemical field `f(x, t; X)` driven by a given agent path.

mod closed_form;
mod fd;

pub use closed_form::ClosedForm;
pub use fd::{solve_field_fd, FdGrid};

use closed_form::Order;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::Scenario;
use crate::picard::AgentPath;
use crate::quadrature::BallRule;
use crate::real::Real;

/// Finite-difference grid settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSpec {
    /// Half width of the box `[-w, w]^N`; `None` picks a per-dimension default.
    pub box_half_width: Option<f64>,
    /// Spatial step; `None` picks a per-dimension default.
    pub h: Option<f64>,
    /// Time step. `None` uses 90% of the explicit stability limit.
    pub dt: Option<f64>,
    pub snapshot_dt: f64,
    /// Largest `|phi|` tolerated on the box boundary.
    pub tail_tolerance: f64,
}

impl Default for FdSpec {
    fn default() -> Self {
        FdSpec {
            box_half_width: None,
            h: None,
            dt: None,
            snapshot_dt: 0.01,
            tail_tolerance: 1e-6,
        }
    }
}

impl FdSpec {
    /// `(box half width, h)` for dimension `dim`.
    pub fn resolved(&self, dim: usize) -> (f64, f64) {
        let (w, h) = match dim {
            1 => (8.0, 0.05),
            2 => (6.0, 0.1),
            _ => (5.0, 0.2),
        };
        (self.box_half_width.unwrap_or(w), self.h.unwrap_or(h))
    }
}

/// Quadrature and discretization parameters of the field evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Truncation radius in the whitened variable `u`.
    pub u_max: f64,
    /// Trapezoid step in `u`.
    pub u_step: f64,
    /// Spatial nodes whose Gaussian weight falls below this are dropped.
    pub weight_cutoff: f64,
    /// Integrate the source term in `sigma = sqrt(t - tau)`.
    pub time_substitution: bool,
    /// Gauss-Legendre nodes per time panel.
    pub time_nodes: usize,
    pub max_panel_width: f64,
    /// Path nodes closer than this (in panel variable) to an existing
    /// breakpoint are not used as breakpoints.
    pub min_panel_gap: f64,
    pub ball_radial: usize,
    pub ball_angular: usize,
    /// Step of the central differences of `phi` used at `t = 0`.
    pub t0_fd_step: f64,
    pub fd: FdSpec,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            u_max: 8.0,
            u_step: 0.25,
            weight_cutoff: 1e-18,
            time_substitution: true,
            time_nodes: 4,
            max_panel_width: 0.125,
            min_panel_gap: 0.01,
            ball_radial: 6,
            ball_angular: 12,
            t0_fd_step: 1e-4,
            fd: FdSpec::default(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_max >= 6.0) {
            return Err(Error::InvalidArgument(format!(
                "u_max = {} must be at least 6",
                self.u_max
            )));
        }
        if !(self.u_step > 0.0 && self.u_step <= 1.0) {
            return Err(Error::InvalidArgument("u_step must lie in (0, 1]".into()));
        }
        if self.time_nodes == 0 || self.ball_radial == 0 || self.ball_angular < 3 {
            return Err(Error::InvalidArgument("empty quadrature rule requested".into()));
        }
        if !(self.max_panel_width > 0.0) || !(self.min_panel_gap >= 0.0) {
            return Err(Error::InvalidArgument("invalid time panel widths".into()));
        }
        if !(self.t0_fd_step > 0.0) {
            return Err(Error::InvalidArgument("t0_fd_step must be positive".into()));
        }
        if !(self.fd.snapshot_dt > 0.0) || !(self.fd.tail_tolerance > 0.0) {
            return Err(Error::InvalidArgument("invalid finite-difference settings".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    ClosedFormKernel,
    FiniteDifference,
    /// Closed form when the coefficients are constant, otherwise FD.
    Auto,
}

#[derive(Clone, Debug)]
enum Engine<T> {
    Closed(ClosedForm<T>),
    Fd(FdGrid<T>),
}

/// Field of a scenario along a fixed agent path. Immutable once built.
#[derive(Clone, Debug)]
pub struct FieldProbe<T> {
    scenario: Scenario<T>,
    path: AgentPath<T>,
    spec: QuadratureSpec,
    ball: BallRule<T>,
    engine: Engine<T>,
}

impl<T: Real> FieldProbe<T> {
    pub fn new(
        scenario: &Scenario<T>,
        path: &AgentPath<T>,
        backend: Backend,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        spec.validate()?;
        if path.dim() != scenario.dim || path.agents() != scenario.agents {
            return Err(Error::DimensionMismatch(format!(
                "path has {} agents in dimension {}, scenario expects {} in {}",
                path.agents(),
                path.dim(),
                scenario.agents,
                scenario.dim
            )));
        }
        let constant = scenario.coeffs.is_constant();
        let engine = match backend {
            Backend::ClosedFormKernel if !constant => return Err(Error::BackendMismatch),
            Backend::ClosedFormKernel => Engine::Closed(ClosedForm::new(scenario, spec)?),
            Backend::Auto if constant => Engine::Closed(ClosedForm::new(scenario, spec)?),
            Backend::FiniteDifference | Backend::Auto => {
                Engine::Fd(solve_field_fd(scenario, path, &spec.fd)?)
            }
        };
        Ok(FieldProbe {
            scenario: scenario.clone(),
            path: path.clone(),
            spec: spec.clone(),
            ball: BallRule::new(scenario.dim, spec.ball_radial, spec.ball_angular),
            engine,
        })
    }

    pub fn backend(&self) -> Backend {
        match self.engine {
            Engine::Closed(_) => Backend::ClosedFormKernel,
            Engine::Fd(_) => Backend::FiniteDifference,
        }
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn path(&self) -> &AgentPath<T> {
        &self.path
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// The finite-difference grid, when that backend is in use.
    pub fn grid(&self) -> Option<&FdGrid<T>> {
        match &self.engine {
            Engine::Fd(g) => Some(g),
            Engine::Closed(_) => None,
        }
    }

    fn check(&self, x: &[T], t: T) -> Result<()> {
        let n = self.scenario.dim;
        if x.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "point has {} components, expected {n}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite probe point".into()));
        }
        let h = self.path.horizon();
        let slack = T::lit(1e-12) * (T::one() + h.abs());
        if !t.is_finite() || t < T::zero() || t > h + slack {
            return Err(Error::InvalidTime(t.to_f64_lossy()));
        }
        Ok(())
    }

    fn jet(&self, x: &[T], t: T, order: Order) -> Result<(T, [T; 3], Mat<T>)> {
        self.check(x, t)?;
        if t == T::zero() {
            return Ok(self.initial_jet(x, order));
        }
        match &self.engine {
            Engine::Closed(cf) => {
                let j = cf.evaluate(&self.scenario, &self.path, x, t, order);
                Ok((j.value, j.grad, j.hess))
            }
            Engine::Fd(g) => g.sample(x, t),
        }
    }

    /// `phi` and its central-difference derivatives.
    fn initial_jet(&self, x: &[T], order: Order) -> (T, [T; 3], Mat<T>) {
        let n = self.scenario.dim;
        let phi = &self.scenario.phi;
        let h = T::lit(self.spec.t0_fd_step);
        let two = T::lit(2.0);
        let f0 = phi.eval(x);
        let mut g = [T::zero(); 3];
        let mut hess = Mat::zeros(n);
        if order == Order::Value {
            return (f0, g, hess);
        }
        let mut p = [T::zero(); 3];
        p[..n].copy_from_slice(x);
        let at = |p: &mut [T; 3], moves: &[(usize, T)]| {
            for &(d, s) in moves {
                p[d] += s;
            }
            let v = phi.eval(&p[..n]);
            for &(d, s) in moves {
                p[d] -= s;
            }
            v
        };
        for d in 0..n {
            let fp = at(&mut p, &[(d, h)]);
            let fm = at(&mut p, &[(d, -h)]);
            g[d] = (fp - fm) / (two * h);
            hess.set(d, d, (fp - two * f0 + fm) / (h * h));
        }
        for d in 0..n {
            for e in d + 1..n {
                let v = (at(&mut p, &[(d, h), (e, h)]) - at(&mut p, &[(d, h), (e, -h)])
                    - at(&mut p, &[(d, -h), (e, h)])
                    + at(&mut p, &[(d, -h), (e, -h)]))
                    / (T::lit(4.0) * h * h);
                hess.set(d, e, v);
                hess.set(e, d, v);
            }
        }
        (f0, g, hess)
    }

    pub fn eval_f(&self, x: &[T], t: T) -> Result<T> {
        Ok(self.jet(x, t, Order::Value)?.0)
    }

    pub fn grad_f(&self, x: &[T], t: T) -> Result<Vec<T>> {
        let g = self.jet(x, t, Order::Gradient)?.1;
        Ok(g[..self.scenario.dim].to_vec())
    }

    pub fn hessian_f(&self, x: &[T], t: T) -> Result<Mat<T>> {
        Ok(self.jet(x, t, Order::Hessian)?.2)
    }

    /// Value, gradient and Hessian from one pass.
    pub fn jet_f(&self, x: &[T], t: T) -> Result<(T, Vec<T>, Mat<T>)> {
        let (v, g, h) = self.jet(x, t, Order::Hessian)?;
        Ok((v, g[..self.scenario.dim].to_vec(), h))
    }

    /// Average of `grad f(., t)` over `B_delta(x)`.
    pub fn ball_avg_grad(&self, x: &[T], t: T, delta: T) -> Result<Vec<T>> {
        if !(delta > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {delta}"
            )));
        }
        self.check(x, t)?;
        self.ball.average(x, delta, |p| self.grad_f(p, t))
    }
}

/// Ball average of an arbitrary vector field with the product rule used by
/// [`FieldProbe::ball_avg_grad`].
pub fn ball_average<T: Real, F>(
    dim: usize,
    center: &[T],
    delta: T,
    spec: &QuadratureSpec,
    mut f: F,
) -> Result<Vec<T>>
where
    F: FnMut(&[T]) -> Vec<T>,
{
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive, got {delta}"
        )));
    }
    BallRule::new(dim, spec.ball_radial, spec.ball_angular).average(center, delta, |p| Ok(f(p)))
}
