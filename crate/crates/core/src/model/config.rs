use serde::{Deserialize, Serialize};

use super::{
    ForceLaw, GrowthSpec, HolderRadiusLaw, InitialDatum, OperatorCoefficients,
    Scenario, Source,
};
use crate::error::{Error, Result};
use crate::kernel::lambda0_bound;
use crate::linalg::Mat;
use crate::real::Real;

pub const SCENARIO_FORMAT: &str = "hybrid-scenario/1";

fn default_format() -> String {
    SCENARIO_FORMAT.to_string()
}
fn default_alpha() -> f64 {
    0.5
}
fn default_radius() -> f64 {
    1.0
}
fn default_heat() -> String {
    "heat".into()
}
fn default_zero() -> String {
    "zero".into()
}
fn default_star_ratio() -> f64 {
    0.9
}

/// Parsed scenario description. Field names follow the on-disk format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_format")]
    pub format: String,
    pub dim: usize,
    pub horizon: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlocal_delta: Option<f64>,
    #[serde(default)]
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub force: ForceConfig,
    pub agents: AgentsConfig,
    #[serde(default)]
    pub estimates: EstimatesConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    #[serde(default = "default_heat")]
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default)]
    pub reaction: f64,
}

impl Default for CoefficientsConfig {
    fn default() -> Self {
        CoefficientsConfig {
            preset: default_heat(),
            diffusion: None,
            drift: None,
            reaction: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_zero")]
    pub phi: String,
    #[serde(default)]
    pub phi_value: f64,
    #[serde(default = "default_zero")]
    pub source: String,
    #[serde(default)]
    pub source_value: f64,
    /// Gaussian growth constant `C`.
    #[serde(default)]
    pub growth_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_hr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_m: Option<f64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            phi: default_zero(),
            phi_value: 0.0,
            source: default_zero(),
            source_value: 0.0,
            growth_c: 0.0,
            holder_h: None,
            holder_hr: None,
            linear_m: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceConfig {
    #[serde(default = "default_zero")]
    pub preset: String,
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub kappa_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
}

impl Default for ForceConfig {
    fn default() -> Self {
        ForceConfig {
            preset: default_zero(),
            chi: 0.0,
            kappa_v: 0.0,
            vector: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    /// One row per agent.
    pub x0: Vec<Vec<f64>>,
    pub v0: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    /// `lambda0* = ratio * lambda0`.
    #[serde(default = "default_star_ratio")]
    pub lambda0_star_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_gamma: Option<f64>,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        EstimatesConfig {
            lambda0: None,
            lambda0_star_ratio: default_star_ratio(),
            c_gamma: None,
        }
    }
}

impl ScenarioConfig {
    /// Small config skeleton: heat operator, zero data and force.
    pub fn minimal(dim: usize, x0: Vec<Vec<f64>>, v0: Vec<Vec<f64>>, horizon: f64) -> Self {
        ScenarioConfig {
            format: default_format(),
            dim,
            horizon,
            alpha: default_alpha(),
            radius: default_radius(),
            nonlocal_delta: None,
            coefficients: CoefficientsConfig::default(),
            data: DataConfig::default(),
            force: ForceConfig::default(),
            agents: AgentsConfig { x0, v0 },
            estimates: EstimatesConfig::default(),
        }
    }
}

fn lit_vec<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}

fn coefficients<T: Real>(cfg: &ScenarioConfig) -> Result<OperatorCoefficients<T>> {
    let n = cfg.dim;
    let alpha = T::lit(cfg.alpha);
    let c = &cfg.coefficients;
    let zero_b = vec![T::zero(); n];
    let inline_only = |what: &str| -> Result<()> {
        if c.preset != "inline" && (c.diffusion.is_some() || c.drift.is_some() || c.reaction != 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "{what} given with coefficient preset '{}'; use preset = \"inline\"",
                c.preset
            )));
        }
        Ok(())
    };
    inline_only("diffusion/drift/reaction")?;
    Ok(match c.preset.as_str() {
        "heat" => OperatorCoefficients::heat(n, alpha),
        "anisotropic" => {
            let d: Vec<T> = [0.5, 2.0, 1.0][..n].iter().map(|&x| T::lit(x)).collect();
            OperatorCoefficients::constant(Mat::diag(&d), &zero_b, T::zero(), alpha)
        }
        "variable-sine" => OperatorCoefficients::variable_sine(n, alpha),
        "drifted" => OperatorCoefficients::constant(
            Mat::identity(n),
            &vec![T::lit(0.5); n],
            T::zero(),
            alpha,
        ),
        "inline" => {
            let rows = c
                .diffusion
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("inline coefficients need diffusion".into()))?;
            let rows: Vec<Vec<T>> = rows.iter().map(|r| lit_vec(r)).collect();
            let a = Mat::from_rows(&rows)?;
            if a.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "diffusion is {0}x{0} but dim = {n}",
                    a.dim()
                )));
            }
            let b = match &c.drift {
                Some(b) if b.len() != n => {
                    return Err(Error::DimensionMismatch(format!(
                        "drift has {} entries but dim = {n}",
                        b.len()
                    )))
                }
                Some(b) => lit_vec(b),
                None => zero_b,
            };
            check_finite("reaction", c.reaction)?;
            OperatorCoefficients::constant(a, &b, T::lit(c.reaction), alpha)
        }
        other => {
            return Err(Error::UnknownPreset {
                kind: "coefficients",
                name: other.into(),
            })
        }
    })
}

fn datum<T: Real>(cfg: &DataConfig) -> Result<InitialDatum<T>> {
    Ok(match cfg.phi.as_str() {
        "zero" => InitialDatum::Zero,
        "constant" => InitialDatum::Constant(T::lit(cfg.phi_value)),
        "gaussian" => InitialDatum::Gaussian,
        "abs-sqrt" => InitialDatum::AbsSqrt,
        "linear" => InitialDatum::Linear,
        other => {
            return Err(Error::UnknownPreset {
                kind: "phi",
                name: other.into(),
            })
        }
    })
}

fn source<T: Real>(cfg: &DataConfig) -> Result<Source<T>> {
    Ok(match cfg.source.as_str() {
        "zero" => Source::Zero,
        "constant" => Source::Constant(T::lit(cfg.source_value)),
        "agent-secretion" => Source::AgentSecretion,
        other => {
            return Err(Error::UnknownPreset {
                kind: "source",
                name: other.into(),
            })
        }
    })
}

fn force<T: Real>(cfg: &ForceConfig, dim: usize) -> Result<ForceLaw<T>> {
    let chi = T::lit(cfg.chi);
    Ok(match cfg.preset.as_str() {
        "zero" => ForceLaw::Zero,
        "constant" => {
            let v = cfg
                .vector
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("constant force needs vector".into()))?;
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "force vector has {} entries but dim = {dim}",
                    v.len()
                )));
            }
            let mut f = [T::zero(); 3];
            for (d, &x) in v.iter().enumerate() {
                f[d] = T::lit(x);
            }
            ForceLaw::Constant(f)
        }
        "pure-chemotaxis" => ForceLaw::PureChemotaxis { chi },
        "damped-chemotaxis" => ForceLaw::DampedChemotaxis {
            kappa_v: T::lit(cfg.kappa_v),
            chi,
        },
        "saturating-chemotaxis" => ForceLaw::SaturatingChemotaxis { chi },
        other => {
            return Err(Error::UnknownPreset {
                kind: "force",
                name: other.into(),
            })
        }
    })
}

fn flatten_agents(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * dim);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{what}[{i}] has {} entries but dim = {dim}",
                r.len()
            )));
        }
        for &x in r {
            check_finite(what, x)?;
            out.push(x);
        }
    }
    Ok(out)
}

/// Probe points for the sampled ellipticity bounds: a 7-point grid per axis on
/// `[-3, 3]^N` at three times.
fn probe_grid(dim: usize, horizon: f64) -> Vec<(Vec<f64>, f64)> {
    let axis: Vec<f64> = (0..7).map(|k| -3.0 + k as f64).collect();
    let total = 7usize.pow(dim as u32);
    let mut out = Vec::new();
    for &t in &[0.0, 0.5 * horizon, horizon] {
        for idx in 0..total {
            let mut r = idx;
            let x: Vec<f64> = (0..dim)
                .map(|_| {
                    let v = axis[r % 7];
                    r /= 7;
                    v
                })
                .collect();
            out.push((x, t));
        }
    }
    out
}

/// Sampled parabolicity bounds `(mu0, mu1)` of the diffusion matrix.
pub(crate) fn sampled_parabolicity<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    horizon: f64,
) -> Result<(T, T)> {
    let mut mu0 = T::infinity();
    let mut mu1 = T::neg_infinity();
    for (x, t) in probe_grid(coeffs.dim, horizon) {
        let x: Vec<T> = lit_vec(&x);
        let t = T::lit(t);
        let a = coeffs.a(&x, t);
        if !a.is_symmetric(T::lit(1e-12)) {
            return Err(Error::Parabolicity(format!(
                "diffusion matrix not symmetric at x = {x:?}"
            )));
        }
        let b = coeffs.b(&x, t);
        let c = coeffs.c(&x, t);
        if b.iter().chain(std::iter::once(&c)).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "unbounded coefficient at x = {x:?}"
            )));
        }
        let ev = a.symmetric_eigenvalues();
        if !(ev[0] > T::zero()) || !ev[ev.len() - 1].is_finite() {
            return Err(Error::Parabolicity(format!(
                "eigenvalue {} of a at x = {x:?}",
                ev[0]
            )));
        }
        mu0 = mu0.min(ev[0]);
        mu1 = mu1.max(ev[ev.len() - 1]);
    }
    Ok((mu0, mu1))
}

/// Validate a parsed config and assemble the scenario.
pub fn build_scenario<T: Real>(cfg: &ScenarioConfig) -> Result<Scenario<T>> {
    if cfg.format != SCENARIO_FORMAT {
        return Err(Error::InvalidArgument(format!(
            "unsupported scenario format '{}', expected '{SCENARIO_FORMAT}'",
            cfg.format
        )));
    }
    let dim = cfg.dim;
    if !(1..=3).contains(&dim) {
        return Err(Error::DimensionMismatch(format!(
            "dim must be 1, 2 or 3, got {dim}"
        )));
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {}",
            cfg.horizon
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {}",
            cfg.alpha
        )));
    }
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {}",
            cfg.radius
        )));
    }
    if let Some(d) = cfg.nonlocal_delta {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "nonlocal_delta must be positive, got {d}"
            )));
        }
    }
    let agents = cfg.agents.x0.len();
    if agents == 0 {
        return Err(Error::InvalidArgument("at least one agent is required".into()));
    }
    if cfg.agents.v0.len() != agents {
        return Err(Error::DimensionMismatch(format!(
            "{} initial positions but {} initial velocities",
            agents,
            cfg.agents.v0.len()
        )));
    }
    let x0 = flatten_agents(&cfg.agents.x0, dim, "x0")?;
    let v0 = flatten_agents(&cfg.agents.v0, dim, "v0")?;

    let coeffs = coefficients::<T>(cfg)?;
    let phi = datum::<T>(&cfg.data)?;
    let src = source::<T>(&cfg.data)?;
    let force = force::<T>(&cfg.force, dim)?;

    let (mu0, mu1) = sampled_parabolicity(&coeffs, cfg.horizon)?;
    let bound = lambda0_bound(mu0, mu1)?;
    let lambda0 = match cfg.estimates.lambda0 {
        Some(l) => {
            let l = T::lit(l);
            if !(l > T::zero() && l <= bound * (T::one() + T::lit(1e-12))) {
                return Err(Error::InvalidArgument(format!(
                    "lambda0 = {l} must lie in (0, mu0/mu1^2 = {bound}]"
                )));
            }
            l
        }
        None => bound,
    };
    let ratio = cfg.estimates.lambda0_star_ratio;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda0_star_ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let horizon = T::lit(cfg.horizon);
    let c = T::lit(cfg.data.growth_c);
    if !(c >= T::zero()) {
        return Err(Error::InvalidArgument("growth_c must be nonnegative".into()));
    }
    let limit = lambda0 / (T::lit(4.0) * horizon);
    if c >= limit {
        return Err(Error::GrowthCondition {
            c: c.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    if let Some(cg) = cfg.estimates.c_gamma {
        if !(cg > 0.0 && cg.is_finite()) {
            return Err(Error::InvalidArgument("c_gamma must be positive".into()));
        }
    }

    let alpha = T::lit(cfg.alpha);
    let h = match cfg.data.holder_h {
        Some(h) => Some(T::lit(h)),
        None => phi.holder_constant(alpha, c),
    };
    let hr_base = match cfg.data.holder_hr {
        Some(h) => T::lit(h),
        None => src.holder_constant(agents),
    };
    let m = match cfg.data.linear_m {
        Some(m) => T::lit(m),
        None => phi.linear_growth().max(src.linear_growth(agents)),
    };
    let growth = GrowthSpec {
        c,
        h,
        hr: HolderRadiusLaw {
            base: hr_base,
            slope: T::zero(),
        },
        m,
        horizon,
    };
    Ok(Scenario {
        dim,
        agents,
        coeffs,
        phi,
        source: src,
        force,
        x0: lit_vec(&x0),
        v0: lit_vec(&v0),
        growth,
        nonlocal_delta: cfg.nonlocal_delta.map(T::lit),
        radius: T::lit(cfg.radius),
        mu0,
        mu1,
        lambda0,
        lambda0_star: lambda0 * T::lit(ratio),
        c_gamma: cfg.estimates.c_gamma.map(T::lit),
    })
}
