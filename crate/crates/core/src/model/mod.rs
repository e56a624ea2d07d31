//! Scenario data: operator coefficients, initial datum, source, force law and
//! the growth constants that feed the a-priori estimates.

mod config;
mod presets;

pub use config::{
    build_scenario, AgentsConfig, CoefficientsConfig, DataConfig, EstimatesConfig, ForceConfig,
    ScenarioConfig, SCENARIO_FORMAT,
};
pub use presets::{preset_catalog, PresetInfo};

use crate::linalg::Mat;
use crate::real::{dist, norm, norm_sq, Real};

/// Coefficients of `L f = sum a_ij d_ij f + sum b_i d_i f + c f - d_t f`.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients<T> {
    Constant { a: Mat<T>, b: [T; 3], c: T },
    /// `a(x, t) = (1 + 0.5 sin x_1) I`, `b = 0`, `c = 0`.
    VariableSine,
}

/// Hölder constants of the coefficient maps, exponent alpha in `x` and
/// alpha/2 in `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderConstants<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorCoefficients<T> {
    pub dim: usize,
    pub kind: Coefficients<T>,
    pub alpha: T,
    pub holder: HolderConstants<T>,
}

impl<T: Real> OperatorCoefficients<T> {
    pub fn constant(a: Mat<T>, b: &[T], c: T, alpha: T) -> Self {
        let mut bb = [T::zero(); 3];
        bb[..b.len()].copy_from_slice(b);
        OperatorCoefficients {
            dim: a.dim(),
            kind: Coefficients::Constant { a, b: bb, c },
            alpha,
            holder: HolderConstants {
                a: T::zero(),
                b: T::zero(),
                c: T::zero(),
            },
        }
    }

    pub fn heat(dim: usize, alpha: T) -> Self {
        Self::constant(Mat::identity(dim), &[T::zero(); 3][..dim], T::zero(), alpha)
    }

    pub fn variable_sine(dim: usize, alpha: T) -> Self {
        OperatorCoefficients {
            dim,
            kind: Coefficients::VariableSine,
            alpha,
            holder: HolderConstants {
                a: T::one(),
                b: T::zero(),
                c: T::zero(),
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Coefficients::Constant { .. })
    }

    /// `(a, b, c)` when the coefficients do not depend on `(x, t)`.
    pub fn constant_parts(&self) -> Option<(Mat<T>, [T; 3], T)> {
        match &self.kind {
            Coefficients::Constant { a, b, c } => Some((*a, *b, *c)),
            Coefficients::VariableSine => None,
        }
    }

    pub fn a(&self, x: &[T], _t: T) -> Mat<T> {
        match &self.kind {
            Coefficients::Constant { a, .. } => *a,
            Coefficients::VariableSine => {
                Mat::scaled_identity(self.dim, T::one() + T::lit(0.5) * x[0].sin())
            }
        }
    }

    pub fn b(&self, _x: &[T], _t: T) -> [T; 3] {
        match &self.kind {
            Coefficients::Constant { b, .. } => *b,
            Coefficients::VariableSine => [T::zero(); 3],
        }
    }

    pub fn c(&self, _x: &[T], _t: T) -> T {
        match &self.kind {
            Coefficients::Constant { c, .. } => *c,
            Coefficients::VariableSine => T::zero(),
        }
    }

    /// Upper bound of `|c|` used by the maximum-principle style checks.
    pub fn reaction_bound(&self) -> T {
        match &self.kind {
            Coefficients::Constant { c, .. } => c.abs(),
            Coefficients::VariableSine => T::zero(),
        }
    }
}

/// Initial datum `phi`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialDatum<T> {
    Zero,
    Constant(T),
    /// `exp(-|x|^2)`
    Gaussian,
    /// `|x|^(1/2)`
    AbsSqrt,
    /// `x_1`
    Linear,
}

impl<T: Real> InitialDatum<T> {
    pub fn eval(&self, x: &[T]) -> T {
        match self {
            InitialDatum::Zero => T::zero(),
            InitialDatum::Constant(k) => *k,
            InitialDatum::Gaussian => (-norm_sq(x)).exp(),
            InitialDatum::AbsSqrt => norm(x).sqrt(),
            InitialDatum::Linear => x[0],
        }
    }

    /// Hölder constant `H` for exponent `alpha` and Gaussian weight `C`, when
    /// one is known in closed form.
    pub fn holder_constant(&self, alpha: T, growth_c: T) -> Option<T> {
        match self {
            InitialDatum::Zero | InitialDatum::Constant(_) => Some(T::zero()),
            // each of min(1, sqrt(2/e) d) <= d^alpha
            InitialDatum::Gaussian => Some(T::one()),
            InitialDatum::AbsSqrt => {
                if (alpha - T::lit(0.5)).abs() <= T::epsilon() * T::lit(4.0) {
                    Some(T::one())
                } else {
                    None
                }
            }
            InitialDatum::Linear => {
                if growth_c > T::zero() {
                    let theta = (T::one() - alpha) * T::lit(0.5);
                    Some(crate::kernel::ell(theta, growth_c / T::lit(4.0)).ok()?)
                } else {
                    None
                }
            }
        }
    }

    /// Constant `M` with `|phi(x)| <= M (1 + |x|)`.
    pub fn linear_growth(&self) -> T {
        match self {
            InitialDatum::Zero => T::zero(),
            InitialDatum::Constant(k) => k.abs(),
            _ => T::one(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialDatum::Zero => "zero",
            InitialDatum::Constant(_) => "constant",
            InitialDatum::Gaussian => "gaussian",
            InitialDatum::AbsSqrt => "abs-sqrt",
            InitialDatum::Linear => "linear",
        }
    }

    /// Decays at infinity, so an FD box with Dirichlet data makes sense.
    pub fn decays(&self) -> bool {
        matches!(self, InitialDatum::Zero | InitialDatum::Gaussian)
    }
}

/// Source term `g(x, X)`; positive values deplete the field.
#[derive(Clone, Debug, PartialEq)]
pub enum Source<T> {
    Zero,
    Constant(T),
    /// `-sum_j exp(-|x - x_j|^2)`
    AgentSecretion,
}

impl<T: Real> Source<T> {
    /// `agents` holds positions agent-major, `dim` entries per agent.
    pub fn eval(&self, x: &[T], agents: &[T]) -> T {
        match self {
            Source::Zero => T::zero(),
            Source::Constant(k) => *k,
            Source::AgentSecretion => {
                let dim = x.len();
                -agents
                    .chunks_exact(dim)
                    .map(|xj| {
                        let d = dist(x, xj);
                        (-d * d).exp()
                    })
                    .sum::<T>()
            }
        }
    }

    pub fn depends_on_agents(&self) -> bool {
        matches!(self, Source::AgentSecretion)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Source::Zero => true,
            Source::Constant(k) => *k == T::zero(),
            Source::AgentSecretion => false,
        }
    }

    /// `H_R`, independent of `R` for the catalog sources.
    pub fn holder_constant(&self, agents: usize) -> T {
        match self {
            Source::Zero | Source::Constant(_) => T::zero(),
            // per agent: min(1, sqrt(2/e) d) <= d^alpha and sqrt(2/e) sqrt(n) <= n
            Source::AgentSecretion => T::from_usize_lossy(agents),
        }
    }

    /// `M` with `|g(x, X)| <= M (1 + |x| + |X|)`.
    pub fn linear_growth(&self, agents: usize) -> T {
        match self {
            Source::Zero => T::zero(),
            Source::Constant(k) => k.abs(),
            Source::AgentSecretion => T::from_usize_lossy(agents),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Source::Zero => "zero",
            Source::Constant(_) => "constant",
            Source::AgentSecretion => "agent-secretion",
        }
    }
}

/// Force law `F_i(t, X, V, w)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ForceLaw<T> {
    Zero,
    /// Same vector for every agent, ignoring all arguments.
    Constant([T; 3]),
    /// `chi w`
    PureChemotaxis { chi: T },
    /// `-kappa_v v_i + chi w`
    DampedChemotaxis { kappa_v: T, chi: T },
    /// `chi w / (1 + |w|)`
    SaturatingChemotaxis { chi: T },
}

impl<T: Real> ForceLaw<T> {
    /// Force on agent `i`; `x`, `v` are agent-major, `w` is the sensed gradient.
    pub fn eval(&self, _t: T, i: usize, _x: &[T], v: &[T], w: &[T], out: &mut [T]) {
        let dim = w.len();
        match self {
            ForceLaw::Zero => out[..dim].iter_mut().for_each(|o| *o = T::zero()),
            ForceLaw::Constant(f) => out[..dim].copy_from_slice(&f[..dim]),
            ForceLaw::PureChemotaxis { chi } => {
                for d in 0..dim {
                    out[d] = *chi * w[d];
                }
            }
            ForceLaw::DampedChemotaxis { kappa_v, chi } => {
                let vi = &v[i * dim..(i + 1) * dim];
                for d in 0..dim {
                    out[d] = -*kappa_v * vi[d] + *chi * w[d];
                }
            }
            ForceLaw::SaturatingChemotaxis { chi } => {
                let s = *chi / (T::one() + norm(w));
                for d in 0..dim {
                    out[d] = s * w[d];
                }
            }
        }
    }

    /// `L_F`, Lipschitz constant in `w`.
    pub fn lipschitz_w(&self) -> T {
        match self {
            ForceLaw::Zero | ForceLaw::Constant(_) => T::zero(),
            ForceLaw::PureChemotaxis { chi }
            | ForceLaw::DampedChemotaxis { chi, .. }
            | ForceLaw::SaturatingChemotaxis { chi } => chi.abs(),
        }
    }

    /// `L_F^K` on a compact of radius `r`; the catalog laws are globally
    /// Lipschitz, so the radius is unused.
    pub fn lipschitz_xv(&self, _r: T) -> T {
        match self {
            ForceLaw::DampedChemotaxis { kappa_v, .. } => kappa_v.abs(),
            _ => T::zero(),
        }
    }

    /// Global Lipschitz constant in all arguments jointly.
    pub fn global_lipschitz(&self) -> T {
        self.lipschitz_w().max(self.lipschitz_xv(T::zero()))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForceLaw::Zero => true,
            ForceLaw::Constant(f) => f.iter().all(|&c| c == T::zero()),
            _ => false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ForceLaw::Zero => "zero",
            ForceLaw::Constant(_) => "constant",
            ForceLaw::PureChemotaxis { .. } => "pure-chemotaxis",
            ForceLaw::DampedChemotaxis { .. } => "damped-chemotaxis",
            ForceLaw::SaturatingChemotaxis { .. } => "saturating-chemotaxis",
        }
    }
}

/// `H_R = base + slope R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderRadiusLaw<T> {
    pub base: T,
    pub slope: T,
}

impl<T: Real> HolderRadiusLaw<T> {
    pub fn at(&self, r: T) -> T {
        self.base + self.slope * r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthSpec<T> {
    /// Gaussian growth constant `C`.
    pub c: T,
    /// Hölder constant of `phi`; `None` when not available.
    pub h: Option<T>,
    pub hr: HolderRadiusLaw<T>,
    /// Linear growth constant of `phi` and `g`.
    pub m: T,
    pub horizon: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub dim: usize,
    pub agents: usize,
    pub coeffs: OperatorCoefficients<T>,
    pub phi: InitialDatum<T>,
    pub source: Source<T>,
    pub force: ForceLaw<T>,
    /// Initial positions, agent-major.
    pub x0: Vec<T>,
    pub v0: Vec<T>,
    pub growth: GrowthSpec<T>,
    pub nonlocal_delta: Option<T>,
    /// Radius `R` of the ball `E_R` around the initial state.
    pub radius: T,
    pub mu0: T,
    pub mu1: T,
    pub lambda0: T,
    pub lambda0_star: T,
    /// Overrides the computed `C_Gamma` (variable coefficients).
    pub c_gamma: Option<T>,
}

impl<T: Real> Scenario<T> {
    /// Minimal scenario for the heat operator with everything else zero.
    pub fn heat(dim: usize, x0: Vec<T>, v0: Vec<T>, horizon: T) -> Self {
        let agents = x0.len() / dim;
        Scenario {
            dim,
            agents,
            coeffs: OperatorCoefficients::heat(dim, T::lit(0.5)),
            phi: InitialDatum::Zero,
            source: Source::Zero,
            force: ForceLaw::Zero,
            x0,
            v0,
            growth: GrowthSpec {
                c: T::zero(),
                h: Some(T::zero()),
                hr: HolderRadiusLaw {
                    base: T::zero(),
                    slope: T::zero(),
                },
                m: T::zero(),
                horizon,
            },
            nonlocal_delta: None,
            radius: T::one(),
            mu0: T::one(),
            mu1: T::one(),
            lambda0: T::one(),
            lambda0_star: T::lit(0.9),
            c_gamma: None,
        }
    }

    pub fn alpha(&self) -> T {
        self.coeffs.alpha
    }

    pub fn horizon(&self) -> T {
        self.growth.horizon
    }

    pub fn x0_norm(&self) -> T {
        norm(&self.x0)
    }

    pub fn v0_norm(&self) -> T {
        norm(&self.v0)
    }

    /// Recompute the catalog-derived growth constants after changing data.
    pub fn refresh_growth(&mut self) {
        self.growth.h = self.phi.holder_constant(self.alpha(), self.growth.c);
        self.growth.hr = HolderRadiusLaw {
            base: self.source.holder_constant(self.agents),
            slope: T::zero(),
        };
        self.growth.m = self
            .phi
            .linear_growth()
            .max(self.source.linear_growth(self.agents));
    }

    /// Same scenario restarted from a new state, used between continuation
    /// segments.
    pub fn restarted(&self, x0: Vec<T>, v0: Vec<T>) -> Self {
        let mut s = self.clone();
        s.x0 = x0;
        s.v0 = v0;
        s
    }
}
