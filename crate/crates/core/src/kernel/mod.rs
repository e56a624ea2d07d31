//! Fundamental solution of the constant-coefficient operator and the scalar
//! helpers used by the a-priori estimates.

mod estimates;

pub use estimates::{
    c_gamma_for, derivative_bound_constants, gamma_estimate_c_gamma, EstimateParams,
};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::OperatorCoefficients;
use crate::real::Real;

/// Sign in `d = x - xi + DRIFT_SIGN * b (t - tau)`. With `L f = 0` written as
/// `f_t = a : D^2 f + b . Df + c f`, pure transport gives `f(x, t) = phi(x + b t)`,
/// so the kernel is centred at `xi = x + b (t - tau)`.
pub const DRIFT_SIGN: f64 = 1.0;

/// `l(theta, nu) = e^-theta (theta / nu)^theta`, the maximum of `y^theta e^(-nu y)` on `y >= 0`.
pub fn ell<T: Real>(theta: T, nu: T) -> Result<T> {
    if !(theta > T::zero() && nu > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "ell needs positive arguments, got theta = {theta}, nu = {nu}"
        )));
    }
    Ok((-theta).exp() * (theta / nu).powf(theta))
}

/// Surface area `omega_N` of the unit sphere in `R^N`.
pub fn sphere_area<T: Real>(n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidArgument("sphere_area needs N >= 1".into()));
    }
    let two_pi = T::lit(2.0) * T::PI();
    // omega_N = 2 pi omega_(N-2) / (N - 2)
    let mut w = if n % 2 == 1 { T::lit(2.0) } else { two_pi };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        k += 2;
        w = two_pi * w / T::from_usize_lossy(k - 2);
    }
    Ok(w)
}

/// Volume of the ball of radius `delta` in `R^N`.
pub fn ball_volume<T: Real>(n: usize, delta: T) -> Result<T> {
    Ok(sphere_area::<T>(n)? / T::from_usize_lossy(n) * delta.powi(n as i32))
}

/// `int_{R^N} e^(-gamma |y|^2) dy = (pi / gamma)^(N/2)`.
pub fn gaussian_i0<T: Real>(gamma: T, n: usize) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "gaussian_i0 needs gamma > 0, got {gamma}"
        )));
    }
    Ok((T::PI() / gamma).powf(T::from_usize_lossy(n) * T::lit(0.5)))
}

/// `int_{R^N} e^(-gamma |y|^2) |y| dy`.
pub fn gaussian_i1<T: Real>(gamma: T, n: usize) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "gaussian_i1 needs gamma > 0, got {gamma}"
        )));
    }
    let np1 = T::from_usize_lossy(n + 1) * T::lit(0.5);
    let wn = sphere_area::<T>(n)?;
    let wn1 = sphere_area::<T>(n + 1)?;
    Ok(gamma.powf(-np1) * (wn * T::lit(0.5)) * (T::lit(2.0) * T::PI().powf(np1) / wn1))
}

/// Admissible upper bound `mu0 / mu1^2` for the decay constant `lambda0`.
pub fn lambda0_bound<T: Real>(mu0: T, mu1: T) -> Result<T> {
    if !(mu0 > T::zero() && mu0 <= mu1) {
        return Err(Error::InvalidArgument(format!(
            "lambda0_bound needs 0 < mu0 <= mu1, got mu0 = {mu0}, mu1 = {mu1}"
        )));
    }
    Ok(mu0 / (mu1 * mu1))
}

/// Gaussian fundamental solution of a constant-coefficient operator.
#[derive(Clone, Debug)]
pub struct Kernel<T> {
    dim: usize,
    a: Mat<T>,
    a_inv: Mat<T>,
    chol: Mat<T>,
    b: [T; 3],
    c: T,
    /// `(4 pi)^(-N/2) det(a)^(-1/2)`
    norm: T,
}

pub fn make_kernel<T: Real>(coeffs: &OperatorCoefficients<T>) -> Result<Kernel<T>> {
    let (a, b, c) = coeffs
        .constant_parts()
        .ok_or(Error::NonConstantCoefficients)?;
    Kernel::new(a, b, c)
}

impl<T: Real> Kernel<T> {
    pub fn new(a: Mat<T>, b: [T; 3], c: T) -> Result<Self> {
        if !a.is_symmetric(T::lit(1e-12)) {
            return Err(Error::SingularDiffusion);
        }
        let chol = a.cholesky()?;
        let a_inv = a.inverse()?;
        let n = a.dim();
        let det = a.det();
        let norm = (T::lit(4.0) * T::PI()).powf(-T::from_usize_lossy(n) * T::lit(0.5)) / det.sqrt();
        Ok(Kernel {
            dim: n,
            a,
            a_inv,
            chol,
            b,
            c,
            norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }

    pub fn a_inv(&self) -> &Mat<T> {
        &self.a_inv
    }

    /// Lower Cholesky factor of `a`.
    pub fn cholesky(&self) -> &Mat<T> {
        &self.chol
    }

    pub fn drift(&self) -> &[T] {
        &self.b[..self.dim]
    }

    pub fn reaction(&self) -> T {
        self.c
    }

    pub fn has_drift_or_reaction(&self) -> bool {
        self.c != T::zero() || self.b.iter().any(|&v| v != T::zero())
    }

    fn elapsed(t: T, tau: T) -> Result<T> {
        let s = t - tau;
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::InvalidTime(s.to_f64_lossy()));
        }
        Ok(s)
    }

    /// `d = x - xi + sigma b s` and `a^-1 d`.
    fn offsets(&self, x: &[T], xi: &[T], s: T) -> ([T; 3], [T; 3]) {
        let sigma = T::lit(DRIFT_SIGN);
        let mut d = [T::zero(); 3];
        for k in 0..self.dim {
            d[k] = x[k] - xi[k] + sigma * self.b[k] * s;
        }
        let mut ad = [T::zero(); 3];
        self.a_inv.mul_vec_into(&d, &mut ad);
        (d, ad)
    }

    fn value_at(&self, d: &[T; 3], ad: &[T; 3], s: T) -> T {
        let q: T = (0..self.dim).map(|k| d[k] * ad[k]).sum();
        let n = T::from_usize_lossy(self.dim);
        self.norm * s.powf(-n * T::lit(0.5)) * (-q / (T::lit(4.0) * s) + self.c * s).exp()
    }

    pub fn eval(&self, x: &[T], t: T, xi: &[T], tau: T) -> Result<T> {
        let s = Self::elapsed(t, tau)?;
        let (d, ad) = self.offsets(x, xi, s);
        Ok(self.value_at(&d, &ad, s))
    }

    pub fn grad_x(&self, x: &[T], t: T, xi: &[T], tau: T) -> Result<Vec<T>> {
        let s = Self::elapsed(t, tau)?;
        let (d, ad) = self.offsets(x, xi, s);
        let g = self.value_at(&d, &ad, s);
        let f = -g / (T::lit(2.0) * s);
        Ok((0..self.dim).map(|k| f * ad[k]).collect())
    }

    pub fn hess_x(&self, x: &[T], t: T, xi: &[T], tau: T) -> Result<Mat<T>> {
        let s = Self::elapsed(t, tau)?;
        let (d, ad) = self.offsets(x, xi, s);
        let g = self.value_at(&d, &ad, s);
        let mut h = Mat::zeros(self.dim);
        let four_s2 = T::lit(4.0) * s * s;
        let two_s = T::lit(2.0) * s;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = ad[i] * ad[j] / four_s2 - self.a_inv.get(i, j) / two_s;
                h.set(i, j, v * g);
            }
        }
        Ok(h)
    }

    /// Same kernel in double precision.
    pub fn to_f64(&self) -> Kernel<f64> {
        let n = self.dim;
        let mut a = Mat::<f64>::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, self.a.get(i, j).to_f64_lossy());
            }
        }
        let mut b = [0.0; 3];
        for k in 0..n {
            b[k] = self.b[k].to_f64_lossy();
        }
        Kernel::new(a, b, self.c.to_f64_lossy()).expect("kernel already validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_known_values() {
        assert!((ell(1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((ell(2.0, 1.0).unwrap() - 4.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(ell(0.0, 1.0).is_err());
        assert!(ell(1.0, -1.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert_eq!(sphere_area::<f64>(1).unwrap(), 2.0);
        assert!((sphere_area::<f64>(2).unwrap() - 2.0 * pi).abs() < 1e-15);
        assert!((sphere_area::<f64>(3).unwrap() - 4.0 * pi).abs() < 1e-14);
        assert!((sphere_area::<f64>(4).unwrap() - 2.0 * pi * pi).abs() < 1e-13);
        assert!(sphere_area::<f64>(0).is_err());
    }

    #[test]
    fn gaussian_integrals_known_values() {
        let pi = std::f64::consts::PI;
        assert!((gaussian_i0(pi, 2).unwrap() - 1.0f64).abs() < 1e-15);
        assert!((gaussian_i0(1.0f64, 1).unwrap() - pi.sqrt()).abs() < 1e-15);
        assert!((gaussian_i1(1.0f64, 1).unwrap() - 1.0).abs() < 1e-14);
        assert!((gaussian_i1(1.0f64, 2).unwrap() - pi.powf(1.5) / 2.0).abs() < 1e-13);
        assert!(gaussian_i1(0.0f64, 2).is_err());
    }

    #[test]
    fn lambda0_bound_values() {
        assert_eq!(lambda0_bound(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(lambda0_bound(0.5, 2.0).unwrap(), 0.125);
        assert!(lambda0_bound(2.0, 1.0).is_err());
        assert!(lambda0_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn heat_peak_value() {
        let k = make_kernel(&OperatorCoefficients::<f64>::heat(1, 0.5)).unwrap();
        let v = k.eval(&[0.3], 1.0, &[0.3], 0.0).unwrap();
        assert!((v - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-15);
        assert!(k.eval(&[0.0], 0.0, &[0.0], 0.0).is_err());
    }

    #[test]
    fn non_constant_rejected() {
        let c = OperatorCoefficients::<f64>::variable_sine(1, 0.5);
        assert!(matches!(make_kernel(&c), Err(Error::NonConstantCoefficients)));
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let a = Mat::<f64>::from_rows(&[vec![1.2, 0.3], vec![0.3, 0.7]]).unwrap();
        let k = Kernel::new(a, [0.4, -0.2, 0.0], 0.1).unwrap();
        let (x, xi, t, tau): ([f64; 2], [f64; 2], f64, f64) = ([0.2, -0.1], [-0.3, 0.25], 0.8, 0.1);
        let h = 1e-5;
        let g = k.grad_x(&x, t, &xi, tau).unwrap();
        let hs = k.hess_x(&x, t, &xi, tau).unwrap();
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (k.eval(&xp, t, &xi, tau).unwrap() - k.eval(&xm, t, &xi, tau).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "grad {i}");
            let gp = k.grad_x(&xp, t, &xi, tau).unwrap();
            let gm = k.grad_x(&xm, t, &xi, tau).unwrap();
            for j in 0..2 {
                let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fd2 - hs.get(i, j)).abs() < 1e-7, "hess {i}{j}");
            }
        }
    }
}
