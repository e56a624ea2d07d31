//! Representation-formula quadrature for constant coefficients.
//!
//! With `a = L L^T` and the change of variables `xi = x + b s + 2 sqrt(s) L u`
//! the kernel measure becomes `pi^(-N/2) e^(-|u|^2) e^(c s) du`, and
//! `D_x Gamma = (L^-T u / sqrt(s)) Gamma`,
//! `D_x^2 Gamma = ((L^-T u)(L^-T u)^T - a^-1 / 2) Gamma / s`.
//! Both derivative weights have zero mean under the Gaussian, so the datum
//! value at the kernel centre is subtracted before summing.

use super::QuadratureSpec;
use crate::error::Result;
use crate::kernel::{make_kernel, Kernel, DRIFT_SIGN};
use crate::linalg::Mat;
use crate::model::Scenario;
use crate::picard::AgentPath;
use crate::quadrature::{gauss_legendre, Rule};
use crate::real::Real;

/// Requested derivative order of an evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Order {
    Value,
    Gradient,
    Hessian,
}

#[derive(Clone, Debug)]
pub(crate) struct Jet<T> {
    pub value: T,
    pub grad: [T; 3],
    pub hess: Mat<T>,
}

struct Moments<T> {
    val: T,
    /// sum of centre-subtracted weighted values
    qsum: T,
    g: [T; 3],
    /// upper triangle of the second moment
    hm: [T; 6],
}

#[derive(Clone, Debug)]
struct Node<T> {
    weight: T,
    /// `2 L u`
    shift: [T; 3],
    /// `L^-T u`
    w: [T; 3],
}

#[derive(Clone, Debug)]
pub struct ClosedForm<T> {
    dim: usize,
    kernel: Kernel<T>,
    nodes: Vec<Node<T>>,
    gl: Rule<T>,
    max_panel: T,
    min_gap: T,
    substitute: bool,
}

impl<T: Real> ClosedForm<T> {
    pub fn new(scenario: &Scenario<T>, spec: &QuadratureSpec) -> Result<Self> {
        let kernel = make_kernel(&scenario.coeffs)?;
        let n = scenario.dim;
        let l = *kernel.cholesky();
        let l_inv_t = l.inverse()?.transpose();
        let h = spec.u_step;
        let per_axis = (2.0 * spec.u_max / h).round() as usize + 1;
        let norm = std::f64::consts::PI.powf(-(n as f64) / 2.0) * h.powi(n as i32);
        let mut nodes = Vec::new();
        let total = per_axis.pow(n as u32);
        for idx in 0..total {
            let mut r = idx;
            let mut u = [0.0f64; 3];
            for slot in u.iter_mut().take(n) {
                *slot = -spec.u_max + h * (r % per_axis) as f64;
                r /= per_axis;
            }
            let u2: f64 = u.iter().map(|v| v * v).sum();
            // trapezoid end weights are irrelevant: exp(-u_max^2) is below the cut
            let weight = norm * (-u2).exp();
            if weight < spec.weight_cutoff {
                continue;
            }
            let ut = [T::lit(u[0]), T::lit(u[1]), T::lit(u[2])];
            let mut lu = [T::zero(); 3];
            l.mul_vec_into(&ut, &mut lu);
            let mut w = [T::zero(); 3];
            l_inv_t.mul_vec_into(&ut, &mut w);
            for v in lu.iter_mut() {
                *v *= T::lit(2.0);
            }
            nodes.push(Node {
                weight: T::lit(weight),
                shift: lu,
                w,
            });
        }
        Ok(ClosedForm {
            dim: n,
            kernel,
            nodes,
            gl: gauss_legendre(spec.time_nodes),
            max_panel: T::lit(spec.max_panel_width),
            min_gap: T::lit(spec.min_panel_gap),
            substitute: spec.time_substitution,
        })
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn spatial_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Gaussian average of `datum` around `centre` at elapsed time `s`,
    /// together with the derivative moments required by `order`.
    fn moments<F: FnMut(&[T]) -> T>(
        &self,
        centre: &[T; 3],
        s: T,
        order: Order,
        mut datum: F,
    ) -> Moments<T> {
        let n = self.dim;
        let rs = s.sqrt();
        let base = datum(&centre[..n]);
        let mut val = T::zero();
        let mut g = [T::zero(); 3];
        let mut hm = [T::zero(); 6];
        let mut qsum = T::zero();
        let mut xi = [T::zero(); 3];
        for node in &self.nodes {
            for d in 0..n {
                xi[d] = centre[d] + rs * node.shift[d];
            }
            let p = datum(&xi[..n]);
            val += node.weight * p;
            if order >= Order::Gradient {
                let q = node.weight * (p - base);
                for d in 0..n {
                    g[d] += q * node.w[d];
                }
                if order == Order::Hessian {
                    qsum += q;
                    let mut k = 0;
                    for i in 0..n {
                        for j in i..n {
                            hm[k] += q * node.w[i] * node.w[j];
                            k += 1;
                        }
                    }
                }
            }
        }
        Moments { val, qsum, g, hm }
    }

    /// Fold raw moments into `(value, gradient, hessian)` contributions with
    /// the `1/sqrt(s)` and `1/s` factors removed.
    fn add_scaled(&self, jet: &mut Jet<T>, m: &Moments<T>, wv: T, wg: T, wh: T, order: Order) {
        let n = self.dim;
        jet.value += wv * m.val;
        if order >= Order::Gradient {
            for d in 0..n {
                jet.grad[d] += wg * m.g[d];
            }
        }
        if order == Order::Hessian {
            let a_inv = self.kernel.a_inv();
            let half = T::lit(0.5);
            let mut k = 0;
            for i in 0..n {
                for j in i..n {
                    let v = wh * (m.hm[k] - half * a_inv.get(i, j) * m.qsum);
                    let old = jet.hess.get(i, j);
                    jet.hess.set(i, j, old + v);
                    if i != j {
                        jet.hess.set(j, i, old + v);
                    }
                    k += 1;
                }
            }
        }
    }

    fn centre(&self, x: &[T], s: T) -> [T; 3] {
        let b = self.kernel.drift();
        let mut c = [T::zero(); 3];
        for d in 0..self.dim {
            c[d] = x[d] + T::lit(DRIFT_SIGN) * b[d] * s;
        }
        c
    }

    /// Panels in the substituted variable `sigma = sqrt(t - tau)`.
    fn sigma_panels(&self, t: T, kinks: &[T]) -> Vec<(T, T)> {
        let top = t.sqrt();
        let mut br: Vec<T> = vec![T::zero()];
        let mut inner: Vec<T> = kinks
            .iter()
            .filter(|&&tk| tk > T::zero() && tk < t)
            .map(|&tk| (t - tk).sqrt())
            .collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for s in inner {
            if s - *br.last().unwrap() >= self.min_gap && top - s >= self.min_gap {
                br.push(s);
            }
        }
        br.push(top);
        let mut panels = Vec::new();
        for w in br.windows(2) {
            let (a, b) = (w[0], w[1]);
            let pieces = ((b - a) / self.max_panel).ceil().to_usize().unwrap_or(1).max(1);
            let h = (b - a) / T::from_usize_lossy(pieces);
            for k in 0..pieces {
                let lo = a + h * T::from_usize_lossy(k);
                let hi = if k + 1 == pieces { b } else { lo + h };
                panels.push((lo, hi));
            }
        }
        panels
    }

    pub(crate) fn evaluate(
        &self,
        scenario: &Scenario<T>,
        path: &AgentPath<T>,
        x: &[T],
        t: T,
        order: Order,
    ) -> Jet<T> {
        let n = self.dim;
        let c = self.kernel.reaction();
        let mut jet = Jet {
            value: T::zero(),
            grad: [T::zero(); 3],
            hess: Mat::zeros(n),
        };

        // initial datum
        let centre = self.centre(x, t);
        let m = self.moments(&centre, t, order, |xi| scenario.phi.eval(xi));
        let e = (c * t).exp();
        self.add_scaled(&mut jet, &m, e, e / t.sqrt(), e / t, order);

        if scenario.source.is_zero() {
            return jet;
        }

        let mut agents = vec![T::zero(); path.stride()];
        let kinks: &[T] = if scenario.source.depends_on_agents() {
            path.times()
        } else {
            &[]
        };
        let two = T::lit(2.0);
        if self.substitute {
            for (lo, hi) in self.sigma_panels(t, kinks) {
                let rule = self.gl.mapped(lo, hi);
                for (&sigma, &wq) in rule.nodes.iter().zip(&rule.weights) {
                    let s = sigma * sigma;
                    let tau = t - s;
                    path.positions_at(tau, &mut agents);
                    let centre = self.centre(x, s);
                    let m = self.moments(&centre, s, order, |xi| scenario.source.eval(xi, &agents));
                    // d tau = 2 sigma d sigma; minus sign of the source term
                    let base = -wq * two * (c * s).exp();
                    self.add_scaled(&mut jet, &m, base * sigma, base, base / sigma, order);
                }
            }
        } else {
            let mut br: Vec<T> = vec![T::zero()];
            br.extend(kinks.iter().copied().filter(|&k| k > T::zero() && k < t));
            br.push(t);
            for w in br.windows(2) {
                let rule = self.gl.mapped(w[0], w[1]);
                for (&tau, &wq) in rule.nodes.iter().zip(&rule.weights) {
                    let s = t - tau;
                    path.positions_at(tau, &mut agents);
                    let centre = self.centre(x, s);
                    let m = self.moments(&centre, s, order, |xi| scenario.source.eval(xi, &agents));
                    let base = -wq * (c * s).exp();
                    self.add_scaled(&mut jet, &m, base, base / s.sqrt(), base / s, order);
                }
            }
        }
        jet
    }
}
