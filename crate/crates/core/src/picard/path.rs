use crate::error::{Error, Result};
use crate::real::Real;

/// Time-sampled agent trajectories with piecewise-linear interpolation.
///
/// Node `k` stores all positions (then all velocities) agent-major, so agent
/// `i` component `d` lives at offset `i * dim + d`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPath<T> {
    dim: usize,
    agents: usize,
    times: Vec<T>,
    x: Vec<T>,
    v: Vec<T>,
}

/// Equispaced nodes `t0, t0 + dt, ..., t1` with `steps` intervals.
pub fn uniform_times<T: Real>(t0: T, t1: T, steps: usize) -> Vec<T> {
    let h = (t1 - t0) / T::from_usize_lossy(steps);
    (0..=steps)
        .map(|k| {
            if k == steps {
                t1
            } else {
                t0 + h * T::from_usize_lossy(k)
            }
        })
        .collect()
}

impl<T: Real> AgentPath<T> {
    pub fn new(dim: usize, agents: usize, times: Vec<T>, x: Vec<T>, v: Vec<T>) -> Result<Self> {
        let stride = dim * agents;
        if times.is_empty() || x.len() != times.len() * stride || v.len() != times.len() * stride {
            return Err(Error::DimensionMismatch(format!(
                "{} nodes need {} position and velocity entries, got {} and {}",
                times.len(),
                times.len() * stride,
                x.len(),
                v.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "path time grid must be strictly increasing".into(),
            ));
        }
        Ok(AgentPath {
            dim,
            agents,
            times,
            x,
            v,
        })
    }

    /// Path that stays at `(x0, v0)` on every node.
    pub fn constant(dim: usize, agents: usize, times: Vec<T>, x0: &[T], v0: &[T]) -> Self {
        let m = times.len();
        let x = x0.iter().copied().cycle().take(m * x0.len()).collect();
        let v = v0.iter().copied().cycle().take(m * v0.len()).collect();
        AgentPath {
            dim,
            agents,
            times,
            x,
            v,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn stride(&self) -> usize {
        self.dim * self.agents
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn horizon(&self) -> T {
        *self.times.last().unwrap()
    }

    pub fn x_node(&self, k: usize) -> &[T] {
        let s = self.stride();
        &self.x[k * s..(k + 1) * s]
    }

    pub fn v_node(&self, k: usize) -> &[T] {
        let s = self.stride();
        &self.v[k * s..(k + 1) * s]
    }

    pub fn x_node_mut(&mut self, k: usize) -> &mut [T] {
        let s = self.stride();
        &mut self.x[k * s..(k + 1) * s]
    }

    pub fn v_node_mut(&mut self, k: usize) -> &mut [T] {
        let s = self.stride();
        &mut self.v[k * s..(k + 1) * s]
    }

    /// Index `k` with `times[k] <= t < times[k+1]` and the local weight.
    fn locate(&self, t: T) -> (usize, T) {
        let m = self.times.len();
        if m == 1 || t <= self.times[0] {
            return (0, T::zero());
        }
        if t >= self.times[m - 1] {
            return (m - 2, T::one());
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, w)
    }

    fn interp(&self, data: &[T], t: T, out: &mut [T]) {
        let s = self.stride();
        if self.times.len() == 1 {
            out[..s].copy_from_slice(&data[..s]);
            return;
        }
        let (k, w) = self.locate(t);
        let a = &data[k * s..(k + 1) * s];
        let b = &data[(k + 1) * s..(k + 2) * s];
        for j in 0..s {
            out[j] = a[j] + w * (b[j] - a[j]);
        }
    }

    /// Positions at time `t`; constant extrapolation outside the grid.
    pub fn positions_at(&self, t: T, out: &mut [T]) {
        self.interp(&self.x, t, out)
    }

    pub fn velocities_at(&self, t: T, out: &mut [T]) {
        self.interp(&self.v, t, out)
    }

    /// `max_k |Y_k - Yhat_k|` over the shared grid, `Y = (X, V)`.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        if self.times.len() != other.times.len() || self.stride() != other.stride() {
            return Err(Error::DimensionMismatch(
                "paths live on different grids".into(),
            ));
        }
        let s = self.stride();
        let mut best = T::zero();
        for k in 0..self.times.len() {
            let mut acc = T::zero();
            for j in k * s..(k + 1) * s {
                let dx = self.x[j] - other.x[j];
                let dv = self.v[j] - other.v[j];
                acc += dx * dx + dv * dv;
            }
            best = best.max(acc.sqrt());
        }
        Ok(best)
    }

    /// `sup_t |Y(t) - (x0, v0)|`.
    pub fn sup_deviation(&self, x0: &[T], v0: &[T]) -> T {
        let s = self.stride();
        let mut best = T::zero();
        for k in 0..self.times.len() {
            let mut acc = T::zero();
            for j in 0..s {
                let dx = self.x[k * s + j] - x0[j];
                let dv = self.v[k * s + j] - v0[j];
                acc += dx * dx + dv * dv;
            }
            best = best.max(acc.sqrt());
        }
        best
    }

    /// `sup_t |X(t)|`.
    pub fn sup_position_norm(&self) -> T {
        self.x
            .chunks_exact(self.stride())
            .map(|c| c.iter().map(|&a| a * a).sum::<T>().sqrt())
            .fold(T::zero(), T::max)
    }

    /// First node where `|X - x0| > r` or `|V - v0| > r`, with the distance.
    pub fn first_exit(&self, x0: &[T], v0: &[T], r: T) -> Option<(usize, T)> {
        let s = self.stride();
        for k in 0..self.times.len() {
            let dx: T = (0..s).map(|j| (self.x[k * s + j] - x0[j]).powi(2)).sum::<T>().sqrt();
            let dv: T = (0..s).map(|j| (self.v[k * s + j] - v0[j]).powi(2)).sum::<T>().sqrt();
            let d = dx.max(dv);
            if d > r {
                return Some((k, d));
            }
        }
        None
    }

    /// Append `other`, whose first node must coincide with this path's last.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.stride() != other.stride() {
            return Err(Error::DimensionMismatch("paths of different shape".into()));
        }
        let tol = T::epsilon() * T::lit(64.0) * (T::one() + self.horizon().abs());
        if (other.start() - self.horizon()).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "cannot join path ending at {} with one starting at {}",
                self.horizon(),
                other.start()
            )));
        }
        let s = self.stride();
        let mut out = self.clone();
        out.times.extend_from_slice(&other.times[1..]);
        out.x.extend_from_slice(&other.x[s..]);
        out.v.extend_from_slice(&other.v[s..]);
        Ok(out)
    }

    /// Nodes `0..=last`.
    pub fn prefix(&self, last: usize) -> Self {
        let s = self.stride();
        AgentPath {
            dim: self.dim,
            agents: self.agents,
            times: self.times[..=last].to_vec(),
            x: self.x[..(last + 1) * s].to_vec(),
            v: self.v[..(last + 1) * s].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let p = AgentPath::new(1, 1, vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0], vec![1.0, 1.0, 1.0])
            .unwrap();
        let mut out = [0.0];
        p.positions_at(0.5, &mut out);
        assert_eq!(out[0], 1.0);
        p.positions_at(2.0, &mut out);
        assert_eq!(out[0], 1.0);
        p.positions_at(5.0, &mut out);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn non_increasing_grid_rejected() {
        assert!(AgentPath::new(1, 1, vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn concat_drops_shared_node() {
        let a = AgentPath::constant(2, 1, vec![0.0, 0.5], &[1.0, 2.0], &[0.0, 0.0]);
        let b = AgentPath::constant(2, 1, vec![0.5, 1.0], &[1.0, 2.0], &[0.0, 0.0]);
        let c = a.concat(&b).unwrap();
        assert_eq!(c.times(), &[0.0, 0.5, 1.0]);
        assert_eq!(c.x_node(2), &[1.0, 2.0]);
    }

    #[test]
    fn uniform_grid_ends_exactly() {
        let t = uniform_times(0.2f64, 1.3, 7);
        assert_eq!(t.len(), 8);
        assert_eq!(t[7], 1.3);
    }
}
