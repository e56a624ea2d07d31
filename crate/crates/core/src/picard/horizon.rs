use serde::Serialize;

use super::GradientMode;
use crate::error::{Error, Result};
use crate::kernel::EstimateParams;
use crate::model::Scenario;
use crate::real::Real;

/// Contraction horizon of one local solve, with the constants it used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonCertificate<T> {
    /// Time at which the certified segment starts.
    pub start: T,
    pub radius: T,
    pub t1: T,
    /// Infinite when the modulus never reaches `1 - margin`.
    pub t2: T,
    pub t_bar: T,
    pub s_value: T,
    pub gamma_bar: T,
    /// Weight exponent used, `2 (|X0|^2 + R^2)` (plus `delta^2` nonlocally).
    pub exponent: T,
    /// `T1` and `S(T_bar)` with the smaller exponent `|X0|^2 + R^2`.
    pub t1_small_exponent: T,
    pub s_value_small_exponent: T,
    /// `sqrt(2n) [max(2 L_F^R, 1) T_bar + S]`, the modulus in the product norm.
    pub full_modulus: T,
    pub h: T,
    pub h_x: T,
    pub l_f: T,
    pub l_f_r: T,
    pub params: EstimateParams<T>,
}

/// Ingredients shared by `T1` and `S`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HorizonInputs<T> {
    n: T,
    dim: T,
    alpha: T,
    r: T,
    v0: T,
    growth_c: T,
    x0_sq_r_sq: T,
    delta_sq: T,
    h: Option<T>,
    h_x: T,
    l_f: T,
    l_f_r: T,
    p: EstimateParams<T>,
}

impl<T: Real> HorizonInputs<T> {
    pub(crate) fn new(
        s: &Scenario<T>,
        r: T,
        mode: GradientMode<T>,
        p: EstimateParams<T>,
    ) -> Result<Self> {
        if !(r > T::zero()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        let x0 = s.x0_norm();
        let delta = match mode {
            GradientMode::Pointwise => T::zero(),
            GradientMode::Nonlocal(d) => d,
        };
        // any path in E_R (widened by the sensing radius) stays within |X0| + R + delta
        let h_x = s.growth.hr.at(x0 + r + delta);
        Ok(HorizonInputs {
            n: T::from_usize_lossy(s.agents),
            dim: T::from_usize_lossy(s.dim),
            alpha: s.alpha(),
            r,
            v0: s.v0_norm(),
            growth_c: s.growth.c,
            x0_sq_r_sq: x0 * x0 + r * r,
            delta_sq: delta * delta,
            h: s.growth.h,
            h_x,
            l_f: s.force.lipschitz_w(),
            l_f_r: s.force.lipschitz_xv(r),
            p,
        })
    }

    fn weight(&self, doubled: bool) -> T {
        let e = if doubled {
            T::lit(2.0) * self.x0_sq_r_sq
        } else {
            self.x0_sq_r_sq
        };
        (self.p.kappa * (e + self.delta_sq)).exp()
    }

    pub(crate) fn t1(&self, cap: T, doubled: bool) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        let first = self.r / (self.n * (self.r + self.v0));
        let denom = two * self.n * self.dim.sqrt() * self.l_f * self.p.k * self.weight(doubled)
            / (self.alpha + one)
            * (one + two * self.h_x / (self.alpha + T::lit(3.0)));
        let second = if denom > T::zero() {
            (self.r / denom).powf(two / (self.alpha + one))
        } else {
            T::infinity()
        };
        first.min(second).min(cap)
    }

    pub(crate) fn gamma_bar(&self, t_bar: T) -> T {
        self.p.lambda0_star / T::lit(4.0) - T::lit(2.0) * self.growth_c * t_bar
    }

    /// Largest admissible `T_bar` before `gamma_bar` vanishes, with a
    /// relative margin so that `gamma_bar` stays strictly positive.
    pub(crate) fn gamma_cap(&self) -> T {
        if self.growth_c > T::zero() {
            self.p.lambda0_star / (T::lit(8.0) * self.growth_c) * (T::one() - T::lit(1e-9))
        } else {
            T::infinity()
        }
    }

    pub(crate) fn s(&self, t_bar: T, doubled: bool) -> Result<T> {
        if !(t_bar > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "contraction modulus needs T_bar > 0, got {t_bar}"
            )));
        }
        let gamma_bar = self.gamma_bar(t_bar);
        if !(gamma_bar > T::zero()) {
            return Err(Error::DegenerateHorizon(format!(
                "gamma_bar = {gamma_bar} is not positive at T_bar = {t_bar}"
            )));
        }
        if self.l_f == T::zero() {
            return Ok(T::lit(2.0) * self.l_f_r * t_bar);
        }
        let h = self.h.ok_or(Error::MissingConstant("Holder constant H of phi"))?;
        let two = T::lit(2.0);
        let e = if doubled {
            two * self.x0_sq_r_sq
        } else {
            self.x0_sq_r_sq
        };
        let a = self.alpha;
        let term1 = two * self.l_f_r * t_bar;
        let term2 = self.l_f * self.dim * self.dim * self.p.k * self.weight(doubled)
            * t_bar.powf(a / two)
            * (two / a)
            * (h + self.h_x * t_bar);
        let term3 = self.l_f
            * self.p.c_gamma
            * self.h_x
            * (two * self.growth_c * e).exp()
            * (T::PI() / gamma_bar).powf(self.dim / two)
            * t_bar.powf(T::lit(1.5));
        Ok(term1 + term2 + term3)
    }
}

/// `T1` for radius `r`, capped at the scenario horizon.
pub fn horizon_t1<T: Real>(s: &Scenario<T>, r: T, mode: GradientMode<T>) -> Result<T> {
    let p = EstimateParams::for_scenario(s)?;
    Ok(HorizonInputs::new(s, r, mode, p)?.t1(s.horizon(), true))
}

/// Contraction modulus `S(T_bar)` for radius `r`.
pub fn contraction_s<T: Real>(s: &Scenario<T>, r: T, t_bar: T, mode: GradientMode<T>) -> Result<T> {
    let p = EstimateParams::for_scenario(s)?;
    HorizonInputs::new(s, r, mode, p)?.s(t_bar, true)
}

pub fn horizon_certificate<T: Real>(
    s: &Scenario<T>,
    r: T,
    mode: GradientMode<T>,
) -> Result<HorizonCertificate<T>> {
    let p = EstimateParams::for_scenario(s)?;
    certificate_with(s, r, mode, p, T::zero(), s.horizon(), T::lit(0.9), T::lit(0.1))
}

/// Certificate for a segment starting at `start` with at most `cap` time
/// left, reusing precomputed kernel constants.
#[allow(clippy::too_many_arguments)]
pub(crate) fn certificate_with<T: Real>(
    s: &Scenario<T>,
    r: T,
    mode: GradientMode<T>,
    p: EstimateParams<T>,
    start: T,
    cap: T,
    safety: T,
    margin: T,
) -> Result<HorizonCertificate<T>> {
    let inp = HorizonInputs::new(s, r, mode, p)?;
    let t1 = inp.t1(cap, true);
    let target = T::one() - margin;
    let hi_cap = inp.gamma_cap();
    let t2 = bisect_t2(&inp, target, hi_cap, cap)?;
    let t_bar = safety * t1.min(t2);
    if !(t_bar > T::zero() && t_bar.is_finite()) {
        return Err(Error::DegenerateHorizon(format!(
            "T1 = {t1}, T2 = {t2} give T_bar = {t_bar}"
        )));
    }
    let s_value = inp.s(t_bar, true)?;
    let s_small = inp.s(t_bar, false)?;
    let n = T::from_usize_lossy(s.agents);
    let full = (T::lit(2.0) * n).sqrt()
        * ((T::lit(2.0) * inp.l_f_r).max(T::one()) * t_bar + s_value);
    Ok(HorizonCertificate {
        start,
        radius: r,
        t1,
        t2,
        t_bar,
        s_value,
        gamma_bar: inp.gamma_bar(t_bar),
        exponent: T::lit(2.0) * inp.x0_sq_r_sq + inp.delta_sq,
        t1_small_exponent: inp.t1(cap, false),
        s_value_small_exponent: s_small,
        full_modulus: full,
        h: inp.h.unwrap_or(T::nan()),
        h_x: inp.h_x,
        l_f: inp.l_f,
        l_f_r: inp.l_f_r,
        params: p,
    })
}

/// Solve `S(T2) = target` on `(0, min(hi_cap, ...))`. The modulus is
/// increasing, so `T2` is infinite when the target is never reached before
/// the `gamma_bar` cap, in which case the cap itself is returned.
fn bisect_t2<T: Real>(inp: &HorizonInputs<T>, target: T, hi_cap: T, horizon: T) -> Result<T> {
    // S is only needed up to the horizon, so search a bounded bracket
    let mut hi = hi_cap.min(horizon * T::lit(4.0)).min(T::lit(1e6));
    if inp.s(hi, true)? < target {
        return Ok(if hi_cap.is_finite() { hi_cap } else { T::infinity() });
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if inp.s(mid, true)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    Ok(lo)
}
