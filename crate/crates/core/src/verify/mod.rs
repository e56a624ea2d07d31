//! Numerical checks of the analytic estimates: kernel mass and derivative
//! bounds, field derivative bounds, Hölder hypotheses, the Gronwall-type
//! inequality and fixed-point residuals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldProbe;
use crate::kernel::{EstimateParams, Kernel};
use crate::model::Scenario;
use crate::picard::{AgentPath, GradientMode};
use crate::quadrature::{trapezoid, LowDiscrepancy, TensorRule};
use crate::real::{dist, norm_sq, Real};

/// Default relative slack on bound ratios.
pub const DEFAULT_TOLERANCE: f64 = 0.01;

/// Outcome of one check: the worst observed ratio of measured quantity to
/// claimed bound over the sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub claim: String,
    pub constants: BTreeMap<String, f64>,
    pub samples: usize,
    pub worst_ratio: f64,
    pub worst_location: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl EstimateReport {
    fn new(claim: &str, tolerance: f64) -> Self {
        EstimateReport {
            claim: claim.to_string(),
            constants: BTreeMap::new(),
            samples: 0,
            worst_ratio: 0.0,
            worst_location: Vec::new(),
            tolerance,
            pass: true,
        }
    }

    fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    fn record(&mut self, ratio: f64, location: impl FnOnce() -> Vec<f64>) {
        self.samples += 1;
        // NaN ratios count as failures
        if !(ratio <= self.worst_ratio) {
            self.worst_ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
            self.worst_location = location();
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.worst_ratio <= 1.0 + self.tolerance;
        self
    }
}

fn ratio(observed: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        observed / bound
    } else if observed <= 1e-13 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// One evaluation point of the kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSample<T> {
    pub x: Vec<T>,
    pub xi: Vec<T>,
    pub t: T,
    pub tau: T,
}

/// Low-discrepancy kernel samples: `x` in `[-2, 2]^N`, `t - tau` in
/// `(0, horizon]`, `tau` in `[0, horizon / 2]` and `(x - xi) / sqrt(t - tau)`
/// in `[-y_max, y_max]^N`.
pub fn kernel_samples<T: Real>(
    dim: usize,
    horizon: T,
    y_max: T,
    count: usize,
    seed: u64,
) -> Vec<KernelSample<T>> {
    let mut seq = LowDiscrepancy::new(2 * dim + 2, seed);
    (0..count)
        .map(|_| {
            let u: Vec<T> = seq.next_point().into_iter().map(T::lit).collect();
            let s = horizon * (T::lit(1e-3) + (T::one() - T::lit(1e-3)) * u[2 * dim]);
            let tau = horizon * T::lit(0.5) * u[2 * dim + 1];
            let x: Vec<T> = (0..dim).map(|d| T::lit(4.0) * u[d] - T::lit(2.0)).collect();
            let xi: Vec<T> = (0..dim)
                .map(|d| x[d] - s.sqrt() * y_max * (T::lit(2.0) * u[dim + d] - T::one()))
                .collect();
            KernelSample {
                x,
                xi,
                t: tau + s,
                tau,
            }
        })
        .collect()
}

/// `|int Gamma(x, t, xi, tau) dxi - 1|` by a tensor trapezoid rule in `xi`,
/// reported against the absolute tolerance `mass_tol`.
pub fn check_kernel_mass<T: Real>(
    kernel: &Kernel<T>,
    samples: &[KernelSample<T>],
    mass_tol: f64,
) -> Result<EstimateReport> {
    if kernel.reaction() != T::zero() {
        return Err(Error::Precondition(
            "kernel mass is one only without reaction term".into(),
        ));
    }
    let n = kernel.dim();
    let mu_max = *kernel.a().symmetric_eigenvalues().last().unwrap();
    let per_axis = match n {
        1 => 401,
        2 => 161,
        _ => 61,
    };
    let mut rep = EstimateReport::new("kernel-mass", 0.0).constant("mass_tolerance", mass_tol);
    let mut worst_dev: f64 = 0.0;
    for smp in samples {
        let s = smp.t - smp.tau;
        // standard deviation of the Gaussian along the widest axis
        let sd = (T::lit(2.0) * mu_max * s).sqrt();
        let half = T::lit(12.0) * sd;
        let rule = TensorRule::new(&trapezoid(-half, half, per_axis), n);
        let centre: Vec<T> = (0..n)
            .map(|d| smp.x[d] + T::lit(crate::kernel::DRIFT_SIGN) * kernel.drift()[d] * s)
            .collect();
        let mut xi = vec![T::zero(); n];
        let mass = rule.integrate(|p| {
            for d in 0..n {
                xi[d] = centre[d] + p[d];
            }
            kernel.eval(&smp.x, smp.t, &xi, smp.tau).unwrap_or(T::nan())
        });
        let dev = (mass - T::one()).abs().to_f64_lossy();
        worst_dev = worst_dev.max(dev);
        rep.record(dev / mass_tol, || {
            let mut v = to_f64(&smp.x);
            v.push(smp.t.to_f64_lossy());
            v.push(smp.tau.to_f64_lossy());
            v
        });
    }
    Ok(rep.constant("max_deviation", worst_dev).finish())
}

/// `max_(i,j) |d^k Gamma|` at one sample.
fn kernel_derivative<T: Real>(kernel: &Kernel<T>, s: &KernelSample<T>, order: usize) -> Result<T> {
    Ok(match order {
        0 => kernel.eval(&s.x, s.t, &s.xi, s.tau)?.abs(),
        1 => kernel
            .grad_x(&s.x, s.t, &s.xi, s.tau)?
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs())),
        _ => {
            let h = kernel.hess_x(&s.x, s.t, &s.xi, s.tau)?;
            let mut m = T::zero();
            for i in 0..kernel.dim() {
                for j in 0..kernel.dim() {
                    m = m.max(h.get(i, j).abs());
                }
            }
            m
        }
    })
}

/// `|d^k Gamma| <= C_Gamma (t - tau)^(-(N + k)/2) exp(-lambda0* |x - xi|^2 / (4 (t - tau)))`
/// with derivatives measured componentwise.
pub fn check_gamma_estimate<T: Real>(
    kernel: &Kernel<T>,
    lambda0_star: T,
    c_gamma: T,
    order: usize,
    samples: &[KernelSample<T>],
    tolerance: f64,
) -> Result<EstimateReport> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("order {order} not in 0..=2")));
    }
    let n = kernel.dim();
    let mut rep = EstimateReport::new(&format!("gamma-order-{order}"), tolerance)
        .constant("c_gamma", c_gamma.to_f64_lossy())
        .constant("lambda0_star", lambda0_star.to_f64_lossy());
    for smp in samples {
        let s = smp.t - smp.tau;
        let d2 = norm_sq(
            &smp.x
                .iter()
                .zip(&smp.xi)
                .map(|(a, b)| *a - *b)
                .collect::<Vec<_>>(),
        );
        let bound = c_gamma
            * s.powf(-T::from_usize_lossy(n + order) / T::lit(2.0))
            * (-lambda0_star * d2 / (T::lit(4.0) * s)).exp();
        let obs = kernel_derivative(kernel, smp, order)?;
        rep.record(ratio(obs.to_f64_lossy(), bound.to_f64_lossy()), || {
            let mut v = to_f64(&smp.x);
            v.extend(to_f64(&smp.xi));
            v.push(s.to_f64_lossy());
            v
        });
    }
    Ok(rep.finish())
}

/// Order 0, 1 and 2 checks with one `C_Gamma` per order.
pub fn check_gamma_estimates<T: Real>(
    kernel: &Kernel<T>,
    lambda0_star: T,
    c_gammas: [T; 3],
    samples: &[KernelSample<T>],
    tolerance: f64,
) -> Result<Vec<EstimateReport>> {
    (0..3)
        .map(|k| check_gamma_estimate(kernel, lambda0_star, c_gammas[k], k, samples, tolerance))
        .collect()
}

/// `(x, t)` samples with `|x_i| <= x_max` and `t` in `[t_min, t_max]`.
pub fn field_samples<T: Real>(
    dim: usize,
    x_max: T,
    t_min: T,
    t_max: T,
    count: usize,
    seed: u64,
) -> Vec<(Vec<T>, T)> {
    let mut seq = LowDiscrepancy::new(dim + 1, seed);
    (0..count)
        .map(|_| {
            let u: Vec<T> = seq.next_point().into_iter().map(T::lit).collect();
            let x = (0..dim).map(|d| x_max * (T::lit(2.0) * u[d] - T::one())).collect();
            (x, t_min + (t_max - t_min) * u[dim])
        })
        .collect()
}

/// Componentwise first and second derivative bounds of the field:
/// `|d_i f| <= K e^(kappa |x|^2) (H t^(-(1-alpha)/2) + 2/(alpha+1) t^((alpha+1)/2) H_X)` and
/// `|d_ij f| <= K e^(kappa |x|^2) (H t^(alpha/2 - 1) + 2/alpha t^(alpha/2) H_X)`,
/// with `H_X` taken at the sup norm of the probe's path. `k_scale` multiplies
/// `K` (a value below one is a falsification control).
pub fn check_prop1<T: Real>(
    scenario: &Scenario<T>,
    probe: &FieldProbe<T>,
    samples: &[(Vec<T>, T)],
    k_scale: T,
    tolerance: f64,
) -> Result<[EstimateReport; 2]> {
    let p = EstimateParams::for_scenario(scenario)?;
    let h = scenario
        .growth
        .h
        .ok_or(Error::MissingConstant("Holder constant H of phi"))?;
    let h_x = scenario.growth.hr.at(probe.path().sup_position_norm());
    let k = p.k * k_scale;
    let a = scenario.alpha();
    let one = T::one();
    let two = T::lit(2.0);
    let mk = |claim: &str| {
        EstimateReport::new(claim, tolerance)
            .constant("k", k.to_f64_lossy())
            .constant("kappa", p.kappa.to_f64_lossy())
            .constant("h", h.to_f64_lossy())
            .constant("h_x", h_x.to_f64_lossy())
            .constant("alpha", a.to_f64_lossy())
    };
    let mut r1 = mk("field-gradient-bound");
    let mut r2 = mk("field-hessian-bound");
    for (x, t) in samples {
        let t = *t;
        if !(t > T::zero()) {
            return Err(Error::InvalidTime(t.to_f64_lossy()));
        }
        let (_, g, hess) = probe.jet_f(x, t)?;
        let w = k * (p.kappa * norm_sq(x)).exp();
        let b1 = w * (h * t.powf(-(one - a) / two) + two / (a + one) * t.powf((a + one) / two) * h_x);
        let b2 = w * (h * t.powf(a / two - one) + two / a * t.powf(a / two) * h_x);
        let o1 = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut o2 = T::zero();
        for i in 0..scenario.dim {
            for j in 0..scenario.dim {
                o2 = o2.max(hess.get(i, j).abs());
            }
        }
        let loc = || {
            let mut v = to_f64(x);
            v.push(t.to_f64_lossy());
            v
        };
        r1.record(ratio(o1.to_f64_lossy(), b1.to_f64_lossy()), loc);
        r2.record(ratio(o2.to_f64_lossy(), b2.to_f64_lossy()), loc);
    }
    Ok([r1.finish(), r2.finish()])
}

/// Two points and two agent configurations for a Hölder check. The agent
/// slices are empty for functions of `x` only.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderPair<T> {
    pub x: Vec<T>,
    pub x_hat: Vec<T>,
    pub agents: Vec<T>,
    pub agents_hat: Vec<T>,
}

/// Pairs with every point and agent in the ball of radius `radius`.
pub fn holder_pairs<T: Real>(
    dim: usize,
    agents: usize,
    radius: T,
    count: usize,
    seed: u64,
) -> Vec<HolderPair<T>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let in_ball = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<T> {
        loop {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                return p.into_iter().map(|v| radius * T::lit(v)).collect();
            }
        }
    };
    (0..count)
        .map(|i| {
            let x = in_ball(&mut rng);
            // every fourth pair is close, to probe the small-distance regime
            let x_hat = if i % 4 == 0 {
                let e = T::lit(10f64.powf(-rng.gen_range(1.0..6.0)));
                let d = in_ball(&mut rng);
                x.iter().zip(&d).map(|(a, b)| *a + e * *b / radius).collect()
            } else {
                in_ball(&mut rng)
            };
            let agents_v: Vec<T> = (0..agents).flat_map(|_| in_ball(&mut rng)).collect();
            let agents_hat = (0..agents).flat_map(|_| in_ball(&mut rng)).collect();
            HolderPair {
                x,
                x_hat,
                agents: agents_v,
                agents_hat,
            }
        })
        .collect()
}

/// `|f(x, X) - f(x^, X^)| <= H exp(C max(|x|^2, |x^|^2)) (|x - x^|^alpha + |X - X^|)`.
pub fn check_holder<T: Real, F: Fn(&[T], &[T]) -> T>(
    f: F,
    alpha: T,
    growth_c: T,
    claimed_h: T,
    pairs: &[HolderPair<T>],
    tolerance: f64,
) -> Result<EstimateReport> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} not in (0, 1]")));
    }
    let mut rep = EstimateReport::new("holder", tolerance)
        .constant("alpha", alpha.to_f64_lossy())
        .constant("c", growth_c.to_f64_lossy())
        .constant("h", claimed_h.to_f64_lossy());
    for p in pairs {
        let obs = (f(&p.x, &p.agents) - f(&p.x_hat, &p.agents_hat)).abs();
        let w = (growth_c * norm_sq(&p.x).max(norm_sq(&p.x_hat))).exp();
        let agent_gap = if p.agents.is_empty() {
            T::zero()
        } else {
            dist(&p.agents, &p.agents_hat)
        };
        let bound = claimed_h * w * (dist(&p.x, &p.x_hat).powf(alpha) + agent_gap);
        rep.record(ratio(obs.to_f64_lossy(), bound.to_f64_lossy()), || {
            let mut v = to_f64(&p.x);
            v.extend(to_f64(&p.x_hat));
            v
        });
    }
    Ok(rep.finish())
}

/// Extremal function of the Gronwall-type inequality
/// `h(t) <= alpha_g + int_0^t w h + int_0^t int_0^tau v(s, tau) h(s) ds dtau`,
/// compared with `alpha_g exp(int_0^t (w(tau) + int_0^tau v(s, tau) ds) dtau)`.
///
/// The discrete extremal is the fixed point of the right-hand side with
/// left-endpoint sums. That operator is strictly lower triangular on the
/// grid, so its fixed point is reached by one forward sweep; stationarity is
/// then confirmed by applying the operator once more. The bound's exponent
/// uses the trapezoid rule.
pub fn gronwall_oracle<T: Real, W: Fn(T) -> T, V: Fn(T, T) -> T>(
    alpha_g: T,
    w: W,
    v: V,
    grid: &[T],
    margin: f64,
) -> Result<EstimateReport> {
    let m = grid.len();
    if m < 2 || grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidArgument(
            "Gronwall grid needs two or more increasing nodes".into(),
        ));
    }
    let wv: Vec<T> = grid.iter().map(|&t| w(t)).collect();
    // vm[j][i] = v(t_i, t_j), i < j
    let vm: Vec<Vec<T>> = (0..m)
        .map(|j| (0..j).map(|i| v(grid[i], grid[j])).collect())
        .collect();
    if wv.iter().any(|x| *x < T::zero() || !x.is_finite())
        || vm.iter().flatten().any(|x| *x < T::zero() || !x.is_finite())
    {
        return Err(Error::InvalidArgument(
            "Gronwall weights must be finite and nonnegative".into(),
        ));
    }
    let dt: Vec<T> = grid.windows(2).map(|p| p[1] - p[0]).collect();

    let apply = |h: &[T]| -> Vec<T> {
        let mut out = vec![alpha_g; m];
        let mut acc = T::zero();
        for k in 1..m {
            let j = k - 1;
            let inner: T = (0..j).map(|i| vm[j][i] * h[i] * dt[i]).sum();
            acc += (wv[j] * h[j] + inner) * dt[j];
            out[k] = alpha_g + acc;
        }
        out
    };

    let mut h = vec![alpha_g; m];
    let mut acc = T::zero();
    for k in 1..m {
        let j = k - 1;
        let inner: T = (0..j).map(|i| vm[j][i] * h[i] * dt[i]).sum();
        acc += (wv[j] * h[j] + inner) * dt[j];
        h[k] = alpha_g + acc;
        if !h[k].is_finite() {
            return Err(Error::Divergence(format!("extremal blew up at t = {}", grid[k])));
        }
    }
    let again = apply(&h);
    let scale = h.iter().fold(T::one(), |a, b| a.max(b.abs()));
    let drift = h
        .iter()
        .zip(&again)
        .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()));
    if drift > T::lit(1e-10) * scale {
        return Err(Error::Divergence(format!("fixed point not stationary: {drift}")));
    }

    // exponent: trapezoid in tau of w(tau) + int_0^tau v(s, tau) ds
    let integrand: Vec<T> = (0..m)
        .map(|j| {
            let inner: T = (1..=j)
                .map(|i| {
                    let vi = if i == j { v(grid[j], grid[j]) } else { vm[j][i] };
                    T::lit(0.5) * (vm[j][i - 1] + vi) * dt[i - 1]
                })
                .sum();
            wv[j] + inner
        })
        .collect();
    let mut rep = EstimateReport::new("gronwall", margin).constant("alpha_g", alpha_g.to_f64_lossy());
    let mut expo = T::zero();
    for k in 0..m {
        if k > 0 {
            expo += T::lit(0.5) * (integrand[k - 1] + integrand[k]) * dt[k - 1];
        }
        let bound = alpha_g * expo.exp();
        rep.record(ratio(h[k].to_f64_lossy(), bound.to_f64_lossy()), || {
            vec![grid[k].to_f64_lossy()]
        });
    }
    Ok(rep.finish())
}

/// Centered-difference residuals of `X' = V`, `V' = F(t, X, V, w)` at the
/// interior nodes of `path`, reported against `threshold`.
pub fn residual_check<T: Real>(
    path: &AgentPath<T>,
    scenario: &Scenario<T>,
    probe: &FieldProbe<T>,
    mode: GradientMode<T>,
    threshold: f64,
) -> Result<EstimateReport> {
    let m = path.len();
    if m < 3 {
        return Err(Error::PathTooCoarse(m));
    }
    let dim = path.dim();
    let mut rep = EstimateReport::new("residual", 0.0).constant("threshold", threshold);
    let mut worst: f64 = 0.0;
    let mut w = vec![T::zero(); dim];
    let mut f = vec![T::zero(); dim];
    for k in 1..m - 1 {
        let t = path.times()[k];
        let span = path.times()[k + 1] - path.times()[k - 1];
        let (xk, vk) = (path.x_node(k), path.v_node(k));
        let mut res = T::zero();
        for j in 0..path.agents() {
            let x = &xk[j * dim..(j + 1) * dim];
            if scenario.force.lipschitz_w() != T::zero() {
                let g = match mode {
                    GradientMode::Pointwise => probe.grad_f(x, t)?,
                    GradientMode::Nonlocal(delta) => probe.ball_avg_grad(x, t, delta)?,
                };
                w.copy_from_slice(&g);
            }
            scenario.force.eval(t, j, xk, vk, &w, &mut f);
            for d in 0..dim {
                let c = j * dim + d;
                let xdot = (path.x_node(k + 1)[c] - path.x_node(k - 1)[c]) / span;
                let vdot = (path.v_node(k + 1)[c] - path.v_node(k - 1)[c]) / span;
                res = res.max((xdot - vk[c]).abs()).max((vdot - f[d]).abs());
            }
        }
        let r = res.to_f64_lossy();
        worst = worst.max(r);
        rep.record(r / threshold, || vec![t.to_f64_lossy()]);
    }
    Ok(rep.constant("max_residual", worst).finish())
}
