//! Explicit finite-difference solver for `f_t = a : D^2 f + b . Df + c f - g_X`
//! on a truncated box with Dirichlet data taken from `phi`.

use super::FdSpec;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::Scenario;
use crate::picard::AgentPath;
use crate::real::Real;

/// Grid snapshots of the field at multiples of `snapshot_dt`.
#[derive(Clone, Debug)]
pub struct FdGrid<T> {
    dim: usize,
    per_axis: usize,
    lo: T,
    h: T,
    snapshot_dt: T,
    step_dt: T,
    snapshots: Vec<Vec<T>>,
}

struct Coeffs<T> {
    a: Vec<[T; 6]>,
    b: Vec<[T; 3]>,
    c: Vec<T>,
}

fn strides(dim: usize, per_axis: usize) -> [usize; 3] {
    let mut s = [0usize; 3];
    let mut acc = 1;
    for d in 0..dim {
        s[d] = acc;
        acc *= per_axis;
    }
    s
}

impl<T: Real> FdGrid<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn half_width(&self) -> T {
        -self.lo
    }

    pub fn step_dt(&self) -> T {
        self.step_dt
    }

    pub fn snapshot_dt(&self) -> T {
        self.snapshot_dt
    }

    pub fn end_time(&self) -> T {
        self.snapshot_dt * T::from_usize_lossy(self.snapshots.len() - 1)
    }

    pub fn snapshot(&self, k: usize) -> &[T] {
        &self.snapshots[k]
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots.len()
    }

    pub fn point(&self, idx: usize) -> [T; 3] {
        let mut p = [T::zero(); 3];
        let mut r = idx;
        for slot in p.iter_mut().take(self.dim) {
            *slot = self.lo + self.h * T::from_usize_lossy(r % self.per_axis);
            r /= self.per_axis;
        }
        p
    }

    fn is_boundary(&self, idx: usize) -> bool {
        let mut r = idx;
        for _ in 0..self.dim {
            let i = r % self.per_axis;
            if i == 0 || i + 1 == self.per_axis {
                return true;
            }
            r /= self.per_axis;
        }
        false
    }

    /// Grid derivatives at node `idx` of snapshot `k`: value, gradient and
    /// the upper triangle of the Hessian. Nodes on the boundary use the
    /// nearest interior stencil.
    fn node_jet(&self, k: usize, idx: usize) -> (T, [T; 3], [T; 6]) {
        let f = &self.snapshots[k];
        let st = strides(self.dim, self.per_axis);
        let n = self.dim;
        let mut coord = [0usize; 3];
        let mut r = idx;
        for c in coord.iter_mut().take(n) {
            *c = r % self.per_axis;
            r /= self.per_axis;
        }
        // stencil centre moved inside by one node where needed
        let mut ctr = idx;
        for d in 0..n {
            if coord[d] == 0 {
                ctr += st[d];
            } else if coord[d] + 1 == self.per_axis {
                ctr -= st[d];
            }
        }
        let two = T::lit(2.0);
        let h = self.h;
        let mut g = [T::zero(); 3];
        let mut hs = [T::zero(); 6];
        let mut m = 0;
        for d in 0..n {
            g[d] = (f[ctr + st[d]] - f[ctr - st[d]]) / (two * h);
            for e in d..n {
                hs[m] = if d == e {
                    (f[ctr + st[d]] - two * f[ctr] + f[ctr - st[d]]) / (h * h)
                } else {
                    (f[ctr + st[d] + st[e]] - f[ctr + st[d] - st[e]] - f[ctr - st[d] + st[e]]
                        + f[ctr - st[d] - st[e]])
                        / (T::lit(4.0) * h * h)
                };
                m += 1;
            }
        }
        (f[idx], g, hs)
    }

    /// Multilinear-in-space, linear-in-time interpolation of the value,
    /// gradient and Hessian.
    pub(crate) fn sample(&self, x: &[T], t: T) -> Result<(T, [T; 3], Mat<T>)> {
        let n = self.dim;
        let hi = -self.lo;
        for d in 0..n {
            if !(x[d] >= self.lo && x[d] <= hi) {
                return Err(Error::InvalidArgument(format!(
                    "probe point {:?} outside the finite-difference box [-{hi}, {hi}]^{n}",
                    &x[..n]
                )));
            }
        }
        if t < T::zero() || t > self.end_time() * (T::one() + T::lit(1e-12)) + T::lit(1e-14) {
            return Err(Error::InvalidTime(t.to_f64_lossy()));
        }
        let last = self.snapshots.len() - 1;
        let pos = t / self.snapshot_dt;
        let k0 = pos.floor().to_usize().unwrap_or(0).min(last.saturating_sub(1));
        let wt = if last == 0 {
            T::zero()
        } else {
            (pos - T::from_usize_lossy(k0)).max(T::zero()).min(T::one())
        };
        let st = strides(n, self.per_axis);
        let mut base = 0;
        let mut frac = [T::zero(); 3];
        for d in 0..n {
            let p = (x[d] - self.lo) / self.h;
            let i = p.floor().to_usize().unwrap_or(0).min(self.per_axis - 2);
            frac[d] = p - T::from_usize_lossy(i);
            base += i * st[d];
        }
        let mut val = T::zero();
        let mut g = [T::zero(); 3];
        let mut hs = [T::zero(); 6];
        for (kk, wk) in [(k0, T::one() - wt), (k0 + 1, wt)] {
            if wk == T::zero() || kk > last {
                continue;
            }
            for corner in 0..(1usize << n) {
                let mut idx = base;
                let mut w = wk;
                for d in 0..n {
                    if corner >> d & 1 == 1 {
                        idx += st[d];
                        w *= frac[d];
                    } else {
                        w *= T::one() - frac[d];
                    }
                }
                if w == T::zero() {
                    continue;
                }
                let (v, gg, hh) = self.node_jet(kk, idx);
                val += w * v;
                for d in 0..n {
                    g[d] += w * gg[d];
                }
                for m in 0..6 {
                    hs[m] += w * hh[m];
                }
            }
        }
        let mut hess = Mat::zeros(n);
        let mut m = 0;
        for i in 0..n {
            for j in i..n {
                hess.set(i, j, hs[m]);
                hess.set(j, i, hs[m]);
                m += 1;
            }
        }
        Ok((val, g, hess))
    }
}

/// Solve on `[0, t_end]`, where `t_end` is the path horizon rounded up to a
/// snapshot time. The source sees the agents through `path`.
pub fn solve_field_fd<T: Real>(
    scenario: &Scenario<T>,
    path: &AgentPath<T>,
    spec: &FdSpec,
) -> Result<FdGrid<T>> {
    solve_until(scenario, path, spec, path.horizon())
}

pub(crate) fn solve_until<T: Real>(
    scenario: &Scenario<T>,
    path: &AgentPath<T>,
    spec: &FdSpec,
    until: T,
) -> Result<FdGrid<T>> {
    let n = scenario.dim;
    let (half, h) = spec.resolved(n);
    let per_axis = (2.0 * half / h).round() as usize + 1;
    if per_axis < 3 {
        return Err(Error::InvalidArgument("finite-difference grid needs 3 nodes per axis".into()));
    }
    let h_t = T::lit(2.0 * half / (per_axis - 1) as f64);
    let limit = h_t * h_t / (T::lit(2.0 * n as f64) * scenario.mu1);
    let snapshot_dt = T::lit(spec.snapshot_dt);
    let steps_per_snapshot = match spec.dt {
        Some(dt) => {
            let dt_t = T::lit(dt);
            if dt_t > limit {
                return Err(Error::Stability {
                    dt,
                    limit: limit.to_f64_lossy(),
                });
            }
            (snapshot_dt / dt_t).ceil().to_usize().unwrap_or(1).max(1)
        }
        None => (snapshot_dt / (limit * T::lit(0.9)))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1),
    };
    let dt = snapshot_dt / T::from_usize_lossy(steps_per_snapshot);
    let snapshots_needed = (until / snapshot_dt - T::lit(1e-9))
        .ceil()
        .to_usize()
        .unwrap_or(0)
        .max(1);

    let mut grid = FdGrid {
        dim: n,
        per_axis,
        lo: T::lit(-half),
        h: h_t,
        snapshot_dt,
        step_dt: dt,
        snapshots: Vec::with_capacity(snapshots_needed + 1),
    };
    let total = per_axis.pow(n as u32);

    let mut f: Vec<T> = (0..total)
        .map(|i| scenario.phi.eval(&grid.point(i)[..n]))
        .collect();
    let tail = (0..total)
        .filter(|&i| grid.is_boundary(i))
        .map(|i| f[i].abs())
        .fold(T::zero(), T::max);
    if tail > T::lit(spec.tail_tolerance) {
        return Err(Error::BoxTooSmall {
            value: tail.to_f64_lossy(),
            tolerance: spec.tail_tolerance,
        });
    }

    let interior: Vec<usize> = (0..total).filter(|&i| !grid.is_boundary(i)).collect();
    // all catalog coefficients are time independent, so they are tabulated once
    let coeffs = {
        let mut a = Vec::with_capacity(interior.len());
        let mut b = Vec::with_capacity(interior.len());
        let mut c = Vec::with_capacity(interior.len());
        for &i in &interior {
            let p = grid.point(i);
            let am = scenario.coeffs.a(&p[..n], T::zero());
            let mut packed = [T::zero(); 6];
            let mut m = 0;
            for r in 0..n {
                for s in r..n {
                    packed[m] = am.get(r, s);
                    m += 1;
                }
            }
            a.push(packed);
            b.push(scenario.coeffs.b(&p[..n], T::zero()));
            c.push(scenario.coeffs.c(&p[..n], T::zero()));
        }
        Coeffs { a, b, c }
    };
    let points: Vec<[T; 3]> = interior.iter().map(|&i| grid.point(i)).collect();
    let st = strides(n, per_axis);
    let two = T::lit(2.0);
    let inv_h2 = T::one() / (h_t * h_t);
    let inv_2h = T::one() / (two * h_t);
    let inv_4h2 = T::one() / (T::lit(4.0) * h_t * h_t);

    let uses_agents = scenario.source.depends_on_agents();
    let source_zero = scenario.source.is_zero();
    let mut agents = vec![T::zero(); path.stride()];
    let mut src = vec![T::zero(); interior.len()];
    if !source_zero && !uses_agents {
        for (k, p) in points.iter().enumerate() {
            src[k] = scenario.source.eval(&p[..n], &agents);
        }
    }

    grid.snapshots.push(f.clone());
    let mut next = f.clone();
    for snap in 0..snapshots_needed {
        for step in 0..steps_per_snapshot {
            let t = snapshot_dt * T::from_usize_lossy(snap)
                + dt * T::from_usize_lossy(step);
            if uses_agents {
                path.positions_at(t, &mut agents);
                for (k, p) in points.iter().enumerate() {
                    src[k] = scenario.source.eval(&p[..n], &agents);
                }
            }
            for (k, &i) in interior.iter().enumerate() {
                let a = &coeffs.a[k];
                let b = &coeffs.b[k];
                let mut lf = coeffs.c[k] * f[i];
                let mut m = 0;
                for d in 0..n {
                    let sd = st[d];
                    lf += b[d] * (f[i + sd] - f[i - sd]) * inv_2h;
                    for e in d..n {
                        if d == e {
                            lf += a[m] * (f[i + sd] - two * f[i] + f[i - sd]) * inv_h2;
                        } else {
                            let se = st[e];
                            let mixed = (f[i + sd + se] - f[i + sd - se] - f[i - sd + se]
                                + f[i - sd - se])
                                * inv_4h2;
                            lf += two * a[m] * mixed;
                        }
                        m += 1;
                    }
                }
                if !source_zero {
                    lf -= src[k];
                }
                next[i] = f[i] + dt * lf;
            }
            std::mem::swap(&mut f, &mut next);
        }
        grid.snapshots.push(f.clone());
    }
    Ok(grid)
}
