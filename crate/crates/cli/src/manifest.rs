use serde::{Deserialize, Serialize};

pub const MANIFEST_FORMAT: &str = "hybrid-manifest/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub start: f64,
    pub end: f64,
    pub t1: f64,
    /// `None` when the modulus never reaches its target.
    pub t2: Option<f64>,
    pub t_bar: f64,
    pub s_value: f64,
    pub iterations: usize,
    pub diffs: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub solve_seconds: f64,
    pub field_seconds: f64,
    pub total_seconds: f64,
}

/// Record of one run. Everything except `timing` is a function of the
/// inputs, so two runs of the same config agree outside that block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    pub config_digest: String,
    pub mode: String,
    pub delta: Option<f64>,
    pub backend: String,
    pub tol: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Global bound on `sup |Y - Y0|`, absent when its constants are not
    /// available for the scenario.
    pub bound_b: Option<f64>,
    pub segments: Vec<SegmentRecord>,
    pub outputs: Vec<String>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// The manifest with wall-clock data zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        RunManifest {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}
