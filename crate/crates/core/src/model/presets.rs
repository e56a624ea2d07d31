use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PresetInfo {
    pub kind: &'static str,
    pub name: &'static str,
    pub description: &'static str,
}

const fn p(kind: &'static str, name: &'static str, description: &'static str) -> PresetInfo {
    PresetInfo {
        kind,
        name,
        description,
    }
}

/// Every named preset accepted by [`super::build_scenario`].
pub fn preset_catalog() -> Vec<PresetInfo> {
    vec![
        p("coefficients", "heat", "a = I, b = 0, c = 0"),
        p("coefficients", "anisotropic", "a = diag(0.5, 2, 1) truncated to N, b = 0, c = 0"),
        p("coefficients", "variable-sine", "a = (1 + 0.5 sin x1) I, b = 0, c = 0"),
        p("coefficients", "drifted", "a = I, b = (0.5, ..., 0.5), c = 0"),
        p("coefficients", "inline", "constant a, b, c given in the config"),
        p("phi", "zero", "phi = 0"),
        p("phi", "constant", "phi = value"),
        p("phi", "gaussian", "phi = exp(-|x|^2)"),
        p("phi", "abs-sqrt", "phi = |x|^(1/2), needs alpha = 1/2"),
        p("phi", "linear", "phi = x1, needs growth constant C > 0 for H"),
        p("source", "zero", "g = 0"),
        p("source", "constant", "g = value"),
        p("source", "agent-secretion", "g = -sum_j exp(-|x - x_j|^2)"),
        p("force", "zero", "F = 0"),
        p("force", "constant", "F = vector, ignoring all arguments"),
        p("force", "pure-chemotaxis", "F_i = chi w"),
        p("force", "damped-chemotaxis", "F_i = -kappa_v v_i + chi w"),
        p("force", "saturating-chemotaxis", "F_i = chi w / (1 + |w|)"),
    ]
}
