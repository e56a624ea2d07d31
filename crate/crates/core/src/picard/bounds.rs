use serde::Serialize;

use super::path::AgentPath;
use crate::error::{Error, Result};
use crate::kernel::{sphere_area, EstimateParams};
use crate::model::Scenario;
use crate::quadrature::gauss_legendre;
use crate::real::{norm, Real};

/// Constants entering the global bound on `sup |Y(t) - Y0|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GronwallConstants<T> {
    pub k1: T,
    pub k2: T,
    /// `max_i |F_i(t, X0, V0, 0)|`.
    pub c0: T,
    pub l_f: T,
    pub alpha_g: T,
    pub b: T,
}

/// `K1 = C_Gamma M 2^N pi^(N/2) / lambda0*^(N/2)`.
pub fn k1<T: Real>(s: &Scenario<T>, p: &EstimateParams<T>) -> T {
    let nh = T::from_usize_lossy(s.dim) * T::lit(0.5);
    p.c_gamma * s.growth.m * T::lit(2.0).powi(s.dim as i32) * T::PI().powf(nh)
        / p.lambda0_star.powf(nh)
}

/// `K2 = K2~ (1 + T)` with `K2~ = (2 / sqrt(lambda0*)) omega_N pi / omega_(N+1)`.
pub fn k2<T: Real>(s: &Scenario<T>, p: &EstimateParams<T>, horizon: T) -> Result<T> {
    let ratio = sphere_area::<T>(s.dim)? * T::PI() / sphere_area::<T>(s.dim + 1)?;
    Ok(T::lit(2.0) / p.lambda0_star.sqrt() * ratio * (T::one() + horizon))
}

fn c0<T: Real>(s: &Scenario<T>) -> T {
    let dim = s.dim;
    let zero = vec![T::zero(); dim];
    let mut out = vec![T::zero(); dim];
    let mut best = T::zero();
    for i in 0..s.agents {
        s.force.eval(T::zero(), i, &s.x0, &s.v0, &zero, &mut out);
        best = best.max(norm(&out));
    }
    best
}

pub fn gronwall_constants<T: Real>(s: &Scenario<T>, horizon: T) -> Result<GronwallConstants<T>> {
    let mut sc = s.clone();
    sc.growth.horizon = horizon;
    let p = EstimateParams::for_scenario(&sc)?;
    gronwall_constants_with(&sc, &p, horizon)
}

pub(crate) fn gronwall_constants_with<T: Real>(
    s: &Scenario<T>,
    p: &EstimateParams<T>,
    horizon: T,
) -> Result<GronwallConstants<T>> {
    let t = horizon;
    let n = T::from_usize_lossy(s.agents);
    let l_f = s.force.global_lipschitz();
    let k1 = k1(s, p);
    let k2 = k2(s, p, t)?;
    let c0 = c0(s);
    let x0 = s.x0_norm();
    let v0 = s.v0_norm();
    let two = T::lit(2.0);
    let rt = t.sqrt();
    let t32 = t * rt;
    let nlk = n * l_f * k1;
    let alpha_g = v0 * t
        + n * t * c0
        + nlk * (T::one() + x0) * two * rt
        + nlk * (T::one() + two * x0) * T::lit(4.0 / 3.0) * t32
        + nlk * k2 * t;
    let expo = (T::one() + n * l_f * two.sqrt()) * t + two * rt * nlk + T::lit(2.0 / 3.0) * nlk * t32;
    Ok(GronwallConstants {
        k1,
        k2,
        c0,
        l_f,
        alpha_g,
        b: alpha_g * expo.exp(),
    })
}

/// Bound `B` on `sup_[0,T] |Y(t) - Y0|` for globally Lipschitz forces.
#[allow(non_snake_case)]
pub fn gronwall_bound_B<T: Real>(s: &Scenario<T>, horizon: T) -> Result<T> {
    Ok(gronwall_constants(s, horizon)?.b)
}

/// `K1 ((1 + |x|)/sqrt(t) + K2 + int_0^t (1 + |x| + |X(tau)|) / sqrt(t - tau) dtau)`.
pub fn apriori_grad_bound<T: Real>(s: &Scenario<T>, x: &[T], t: T, path: &AgentPath<T>) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidTime(t.to_f64_lossy()));
    }
    let mut sc = s.clone();
    sc.growth.horizon = sc.growth.horizon.max(t);
    let p = EstimateParams::for_scenario(&sc)?;
    let k1 = k1(&sc, &p);
    let k2 = k2(&sc, &p, sc.growth.horizon)?;
    let xn = norm(x);
    Ok(k1 * ((T::one() + xn) / t.sqrt() + k2 + singular_integral(path, xn, t)))
}

/// `int_0^t (1 + |x| + |X(tau)|) / sqrt(t - tau) dtau` in `sigma = sqrt(t - tau)`,
/// with panel breaks at the path nodes.
pub(crate) fn singular_integral<T: Real>(path: &AgentPath<T>, xn: T, t: T) -> T {
    let gl = gauss_legendre::<T>(8);
    let top = t.sqrt();
    let mut br: Vec<T> = path
        .times()
        .iter()
        .filter(|&&tk| tk > T::zero() && tk < t)
        .map(|&tk| (t - tk).sqrt())
        .collect();
    br.push(T::zero());
    br.push(top);
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup();
    let mut pos = vec![T::zero(); path.stride()];
    let mut acc = T::zero();
    for w in br.windows(2) {
        let rule = gl.mapped(w[0], w[1]);
        for (&sg, &wq) in rule.nodes.iter().zip(&rule.weights) {
            path.positions_at(t - sg * sg, &mut pos);
            acc += wq * T::lit(2.0) * (T::one() + xn + norm(&pos));
        }
    }
    acc
}
