use serde::Serialize;

use super::{ell, Kernel, DRIFT_SIGN};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{GrowthSpec, OperatorCoefficients, Scenario};
use crate::real::Real;

/// Constants of the derivative estimates for one scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateParams<T> {
    pub lambda0: T,
    pub lambda0_star: T,
    pub nu0: T,
    pub c_gamma: T,
    pub k: T,
    pub kappa: T,
}

impl<T: Real> EstimateParams<T> {
    /// `C_Gamma` is the maximum over derivative orders 0..=2, or the scenario
    /// override when one is given.
    pub fn for_scenario(s: &Scenario<T>) -> Result<Self> {
        let lambda0 = s.lambda0;
        let lambda0_star = s.lambda0_star;
        if !(lambda0_star > T::zero() && lambda0_star < lambda0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < lambda0* < lambda0, got {lambda0_star} and {lambda0}"
            )));
        }
        let nu0 = (lambda0 - lambda0_star) / T::lit(4.0);
        let c_gamma = match s.c_gamma {
            Some(c) => c,
            None => c_gamma_for(&s.coeffs, lambda0, lambda0_star, s.horizon())?,
        };
        let (k, kappa) =
            derivative_bound_constants(lambda0, nu0, c_gamma, s.dim, s.alpha(), &s.growth)?;
        Ok(EstimateParams {
            lambda0,
            lambda0_star,
            nu0,
            c_gamma,
            k,
            kappa,
        })
    }
}

/// `K` and `kappa` of the first and second derivative bounds.
pub fn derivative_bound_constants<T: Real>(
    lambda0: T,
    nu0: T,
    c_gamma: T,
    dim: usize,
    alpha: T,
    growth: &GrowthSpec<T>,
) -> Result<(T, T)> {
    let c = growth.c;
    let t = growth.horizon;
    let d1 = lambda0 / T::lit(2.0) - T::lit(2.0) * c * t;
    let d2 = lambda0 / T::lit(4.0) - c * t;
    if !(d1 > T::zero() && d2 > T::zero()) {
        return Err(Error::GrowthCondition {
            c: c.to_f64_lossy(),
            limit: (lambda0 / (T::lit(4.0) * t)).to_f64_lossy(),
        });
    }
    if !(nu0 > T::zero() && nu0 < d2) {
        return Err(Error::InvalidArgument(format!(
            "nu0 = {nu0} must lie in (0, lambda0/4 - C T = {d2})"
        )));
    }
    let half_n = T::from_usize_lossy(dim) * T::lit(0.5);
    let k = T::PI().powf(half_n) * c_gamma * ell(alpha * T::lit(0.5), nu0)? / d1.powf(half_n);
    let kappa = c * c * t / d2 + T::lit(2.0) * c;
    Ok((k, kappa))
}

/// Double-precision view of the scaled derivative ratio
/// `|d^k Gamma| s^((N+k)/2) exp(lambda0* |x - xi|^2 / (4 s))` as a function of
/// `y = (x - xi)/sqrt(s)` and `rho = sqrt(s)`.
struct ScaledRatio<'a> {
    k: &'a Kernel<f64>,
    lambda0_star: f64,
    order: usize,
}

impl ScaledRatio<'_> {
    fn eval(&self, y: &[f64], rho: f64) -> f64 {
        let n = self.k.dim();
        let mut u = [0.0; 3];
        for d in 0..n {
            u[d] = y[d] + DRIFT_SIGN * self.k.b[d] * rho;
        }
        let mut au = [0.0; 3];
        self.k.a_inv.mul_vec_into(&u, &mut au);
        let q: f64 = (0..n).map(|d| u[d] * au[d]).sum();
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let base = self.k.norm * (-q / 4.0 + self.k.c * rho * rho + self.lambda0_star * y2 / 4.0).exp();
        match self.order {
            0 => base,
            1 => base * (0..n).map(|d| au[d].abs()).fold(0.0, f64::max) / 2.0,
            _ => {
                let mut m: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        m = m.max((au[i] * au[j] / 4.0 - self.k.a_inv.get(i, j) / 2.0).abs());
                    }
                }
                base * m
            }
        }
    }
}

/// Compass search from `start`, keeping `rho` inside `[0, rho_max]`.
fn refine(f: &ScaledRatio, start: (Vec<f64>, f64), step0: f64, rho_max: f64, free_rho: bool) -> f64 {
    let (mut y, mut rho) = start;
    let mut best = f.eval(&y, rho);
    let mut step = step0;
    let n = y.len();
    while step > 1e-11 {
        let mut improved = false;
        for d in 0..=n {
            if d == n && !free_rho {
                continue;
            }
            for sgn in [-1.0, 1.0] {
                let (mut yc, mut rc) = (y.clone(), rho);
                if d < n {
                    yc[d] += sgn * step;
                } else {
                    rc = (rc + sgn * step).clamp(0.0, rho_max);
                }
                let v = f.eval(&yc, rc);
                if v > best {
                    best = v;
                    y = yc;
                    rho = rc;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Smallest `C_Gamma` for which the order-`order` derivative estimate holds,
/// found by maximizing the scaled ratio over the similarity variable and, when
/// the kernel has drift or reaction, over `sqrt(t - tau)` in `[0, sqrt(horizon)]`.
pub fn gamma_estimate_c_gamma<T: Real>(
    kernel: &Kernel<T>,
    lambda0: T,
    lambda0_star: T,
    order: usize,
    horizon: T,
) -> Result<T> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("order {order} not in 0..=2")));
    }
    if !(lambda0_star < lambda0) || !(lambda0_star > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "lambda0* = {lambda0_star} must lie in (0, lambda0 = {lambda0})"
        )));
    }
    let k = kernel.to_f64();
    let ls = lambda0_star.to_f64_lossy();
    let mu1 = *k.a.symmetric_eigenvalues().last().unwrap();
    let eps = (1.0 / mu1 - ls) / 4.0;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda0* = {ls} not below 1/mu1 = {}; supremum is infinite",
            1.0 / mu1
        )));
    }
    let f = ScaledRatio {
        k: &k,
        lambda0_star: ls,
        order,
    };
    let n = k.dim();
    let free_rho = k.has_drift_or_reaction();
    let rho_max = horizon.to_f64_lossy().sqrt();
    let rhos: Vec<f64> = if free_rho {
        (0..9).map(|i| rho_max * i as f64 / 8.0).collect()
    } else {
        vec![0.0]
    };
    let bnorm: f64 = k.b[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    let half = (60.0 / eps).sqrt() + bnorm * rho_max;
    let per_axis: usize = match n {
        1 => 401,
        2 => 81,
        _ => 31,
    };
    let h = 2.0 * half / (per_axis - 1) as f64;
    let total = per_axis.pow(n as u32);
    let mut cands: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for &rho in &rhos {
        for idx in 0..total {
            let mut r = idx;
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let v = -half + h * (r % per_axis) as f64;
                    r /= per_axis;
                    v
                })
                .collect();
            let v = f.eval(&y, rho);
            cands.push((v, y, rho));
        }
    }
    cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut best: f64 = 0.0;
    for (_, y, rho) in cands.into_iter().take(6) {
        best = best.max(refine(&f, (y, rho), h, rho_max, free_rho));
    }
    Ok(T::lit(best))
}

/// `C_Gamma` of an operator, maximized over orders 0..=2. Variable coefficients
/// use the largest constant among kernels with frozen coefficients sampled
/// over the probe region.
pub fn c_gamma_for<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    lambda0: T,
    lambda0_star: T,
    horizon: T,
) -> Result<T> {
    let frozen: Vec<Kernel<T>> = if coeffs.is_constant() {
        vec![super::make_kernel(coeffs)?]
    } else {
        let mut mats: Vec<(Mat<T>, [T; 3], T)> = Vec::new();
        let n = coeffs.dim;
        let mut push = |x: &[T], t: T| {
            let a = coeffs.a(x, t);
            let b = coeffs.b(x, t);
            let c = coeffs.c(x, t);
            let dup = mats.iter().any(|(m, bb, cc)| {
                (0..n).all(|i| (0..n).all(|j| (m.get(i, j) - a.get(i, j)).abs() < T::lit(1e-9)))
                    && (0..n).all(|i| (bb[i] - b[i]).abs() < T::lit(1e-9))
                    && (*cc - c).abs() < T::lit(1e-9)
            });
            if !dup {
                mats.push((a, b, c));
            }
        };
        // sweep each axis over a full period, and a coarse grid at three times
        for axis in 0..n {
            for k in 0..64 {
                let mut x = vec![T::zero(); n];
                x[axis] = T::lit(-std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / 64.0);
                push(&x, T::zero());
            }
        }
        for t in [T::zero(), horizon * T::lit(0.5), horizon] {
            let total = 5usize.pow(n as u32);
            for idx in 0..total {
                let mut r = idx;
                let x: Vec<T> = (0..n)
                    .map(|_| {
                        let v = T::lit(-2.0 + (r % 5) as f64);
                        r /= 5;
                        v
                    })
                    .collect();
                push(&x, t);
            }
        }
        mats.into_iter()
            .map(|(a, b, c)| Kernel::new(a, b, c))
            .collect::<Result<_>>()?
    };
    let mut best = T::zero();
    for k in &frozen {
        for order in 0..=2 {
            best = best.max(gamma_estimate_c_gamma(k, lambda0, lambda0_star, order, horizon)?);
        }
    }
    Ok(best)
}
