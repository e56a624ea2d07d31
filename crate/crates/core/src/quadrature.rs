//! Quadrature rules and deterministic sample sequences.
//!
//! Nodes are computed in `f64` and converted once, so every rule is available
//! for any [`Real`] scalar.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;

/// A one-dimensional rule: nodes and weights.
#[derive(Clone, Debug)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over the interval the rule was built for.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Affinely map a rule on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> Rule<T> {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        Rule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> Rule<T> {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = if n == 1 { 2.0 } else { 2.0 / ((1.0 - z * z) * dp * dp) };
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule {
        nodes: nodes.into_iter().map(T::lit).collect(),
        weights: weights.into_iter().map(T::lit).collect(),
    }
}

/// Composite trapezoid rule with `n` equispaced nodes on `[a, b]`.
pub fn trapezoid<T: Real>(a: T, b: T, n: usize) -> Rule<T> {
    assert!(n >= 2, "trapezoid rule needs two nodes");
    let h = (b - a) / T::from_usize_lossy(n - 1);
    let nodes = (0..n).map(|k| a + h * T::from_usize_lossy(k)).collect();
    let weights = (0..n)
        .map(|k| if k == 0 || k == n - 1 { h * T::lit(0.5) } else { h })
        .collect();
    Rule { nodes, weights }
}

/// Tensor-product nodes of a 1-D rule in `dim` dimensions.
#[derive(Clone, Debug)]
pub struct TensorRule<T> {
    pub dim: usize,
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> TensorRule<T> {
    pub fn new(rule: &Rule<T>, dim: usize) -> Self {
        assert!((1..=3).contains(&dim));
        let k = rule.len();
        let total = k.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for idx in 0..total {
            let mut p = [T::zero(); 3];
            let mut w = T::one();
            let mut r = idx;
            for slot in p.iter_mut().take(dim) {
                let i = r % k;
                r /= k;
                *slot = rule.nodes[i];
                w *= rule.weights[i];
            }
            points.push(p);
            weights.push(w);
        }
        TensorRule {
            dim,
            points,
            weights,
        }
    }

    pub fn integrate<F: FnMut(&[T]) -> T>(&self, mut f: F) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * f(&p[..self.dim]))
            .sum()
    }
}

/// Normalized rule for averages over the unit ball in 1..=3 dimensions:
/// radial Gauss-Legendre times a sphere rule. Weights sum to one.
#[derive(Clone, Debug)]
pub struct BallRule<T> {
    pub dim: usize,
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> BallRule<T> {
    pub fn new(dim: usize, radial: usize, angular: usize) -> Self {
        assert!((1..=3).contains(&dim));
        let gl = gauss_legendre::<f64>(radial);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let two_pi = 2.0 * std::f64::consts::PI;
        match dim {
            1 => {
                for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                    points.push([x, 0.0, 0.0]);
                    weights.push(w / 2.0);
                }
            }
            2 => {
                for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                    let r = 0.5 * (x + 1.0);
                    // int_0^1 r dr = 1/2
                    let wr = (w / 2.0) * r * 2.0;
                    for k in 0..angular {
                        let th = two_pi * (k as f64 + 0.5) / angular as f64;
                        points.push([r * th.cos(), r * th.sin(), 0.0]);
                        weights.push(wr / angular as f64);
                    }
                }
            }
            _ => {
                let polar = gauss_legendre::<f64>(angular.div_ceil(2).max(2));
                for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                    let r = 0.5 * (x + 1.0);
                    // int_0^1 r^2 dr = 1/3
                    let wr = (w / 2.0) * r * r * 3.0;
                    for (&mu, &wm) in polar.nodes.iter().zip(&polar.weights) {
                        let sin_t = (1.0 - mu * mu).sqrt();
                        for k in 0..angular {
                            let ph = two_pi * (k as f64 + 0.5) / angular as f64;
                            points.push([r * sin_t * ph.cos(), r * sin_t * ph.sin(), r * mu]);
                            weights.push(wr * (wm / 2.0) / angular as f64);
                        }
                    }
                }
            }
        }
        BallRule {
            dim,
            points: points
                .into_iter()
                .map(|p| [T::lit(p[0]), T::lit(p[1]), T::lit(p[2])])
                .collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    /// Average of the vector field `f` over the ball `B_delta(center)`.
    pub fn average<E, F>(&self, center: &[T], delta: T, mut f: F) -> Result<Vec<T>, E>
    where
        F: FnMut(&[T]) -> Result<Vec<T>, E>,
    {
        let n = self.dim;
        let mut acc: Vec<T> = Vec::new();
        let mut x = [T::zero(); 3];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            for d in 0..n {
                x[d] = center[d] + delta * p[d];
            }
            let v = f(&x[..n])?;
            if acc.is_empty() {
                acc = vec![T::zero(); v.len()];
            }
            for (a, b) in acc.iter_mut().zip(&v) {
                *a += w * *b;
            }
        }
        Ok(acc)
    }
}

/// Halton sequence with a seeded Cranley-Patterson rotation: deterministic,
/// low-discrepancy points in `[0, 1)^dim`.
#[derive(Clone, Debug)]
pub struct LowDiscrepancy {
    shift: Vec<f64>,
    index: u64,
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

impl LowDiscrepancy {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LowDiscrepancy {
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
            index: 1,
        }
    }

    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let b = base as f64;
        while i > 0 {
            f /= b;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(&s, p)| (Self::radical_inverse(i, p) + s).fract())
            .collect()
    }

    pub fn take(&mut self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.next_point()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let r = gauss_legendre::<f64>(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                let q = r.integrate(|x| x.powi(deg as i32));
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn ball_rule_weights_sum_to_one_and_second_moment() {
        for dim in 1..=3 {
            let b = BallRule::<f64>::new(dim, 6, 12);
            let s: f64 = b.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
            // average of x_1^2 over the unit ball is 1/(N+2)
            let m2: f64 = b
                .points
                .iter()
                .zip(&b.weights)
                .map(|(p, w)| w * p[0] * p[0])
                .sum();
            assert!((m2 - 1.0 / (dim as f64 + 2.0)).abs() < 1e-13, "dim {dim}: {m2}");
        }
    }

    #[test]
    fn low_discrepancy_is_deterministic_and_in_unit_cube() {
        let a = LowDiscrepancy::new(3, 7).take(100);
        let b = LowDiscrepancy::new(3, 7).take(100);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&u| (0.0..1.0).contains(&u)));
        let c = LowDiscrepancy::new(3, 8).take(100);
        assert_ne!(a, c);
    }
}
