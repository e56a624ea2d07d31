//! Plain-text output formats. Every file starts with a `# <tag>` line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hybrid_core::AgentPath;

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_FORMAT: &str = "hybrid-trajectory/1";
pub const FIELD_FORMAT: &str = "hybrid-field/1";
pub const BOUNDS_FORMAT: &str = "hybrid-bounds/1";

fn bad(kind: &'static str, msg: impl Into<String>) -> CliError {
    CliError::Format {
        kind,
        msg: msg.into(),
    }
}

/// 17 significant digits: enough to read back the exact double.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory table: one row per time node, `t` followed by the positions and
/// then the velocities of each agent in turn.
pub fn write_trajectory(path: &AgentPath<f64>) -> String {
    let (dim, agents) = (path.dim(), path.agents());
    let mut out = format!("# {TRAJECTORY_FORMAT} dim={dim} agents={agents}\n");
    let mut cols = vec!["t".to_string()];
    for i in 0..agents {
        cols.extend((0..dim).map(|d| format!("x{i}_{d}")));
        cols.extend((0..dim).map(|d| format!("v{i}_{d}")));
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for k in 0..path.len() {
        let (x, v) = (path.x_node(k), path.v_node(k));
        let mut row = vec![num(path.times()[k])];
        for i in 0..agents {
            row.extend(x[i * dim..(i + 1) * dim].iter().map(|&a| num(a)));
            row.extend(v[i * dim..(i + 1) * dim].iter().map(|&a| num(a)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn header_fields<'a>(line: &'a str, tag: &str, kind: &'static str) -> CliResult<BTreeMap<&'a str, &'a str>> {
    let rest = line
        .strip_prefix("# ")
        .and_then(|l| l.strip_prefix(tag))
        .ok_or_else(|| bad(kind, format!("expected header '# {tag} ...', got '{line}'")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| bad(kind, format!("header entry '{kv}' is not key=value")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(h: &BTreeMap<&str, &str>, key: &str, kind: &'static str) -> CliResult<T> {
    h.get(key)
        .ok_or_else(|| bad(kind, format!("header lacks '{key}'")))?
        .parse()
        .map_err(|_| bad(kind, format!("header '{key}' is not a number")))
}

pub fn parse_trajectory(text: &str) -> CliResult<AgentPath<f64>> {
    const KIND: &str = "trajectory";
    let mut lines = text.lines();
    let h = header_fields(lines.next().unwrap_or(""), TRAJECTORY_FORMAT, KIND)?;
    let dim: usize = field(&h, "dim", KIND)?;
    let agents: usize = field(&h, "agents", KIND)?;
    let cols = lines.next().ok_or_else(|| bad(KIND, "missing column line"))?;
    let width = 1 + 2 * dim * agents;
    if cols.split(',').count() != width {
        return Err(bad(KIND, format!("column line has {} entries, expected {width}", cols.split(',').count())));
    }
    let (mut times, mut x, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(KIND, format!("row {n}: {e}")))?;
        if row.len() != width {
            return Err(bad(KIND, format!("row {n} has {} entries, expected {width}", row.len())));
        }
        times.push(row[0]);
        for i in 0..agents {
            let base = 1 + 2 * dim * i;
            x.extend_from_slice(&row[base..base + dim]);
            v.extend_from_slice(&row[base + dim..base + 2 * dim]);
        }
    }
    AgentPath::new(dim, agents, times, x, v).map_err(|e| bad(KIND, e.to_string()))
}

/// Regular grid of field values at one time: `per_axis` nodes on
/// `[-half_width, half_width]` in each dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub dim: usize,
    pub half_width: f64,
    pub h: f64,
    pub t: f64,
    pub per_axis: usize,
    /// Row-major, last axis fastest.
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut idx = flat;
        let mut p = vec![0.0; self.dim];
        for d in (0..self.dim).rev() {
            p[d] = -self.half_width + self.h * (idx % self.per_axis) as f64;
            idx /= self.per_axis;
        }
        p
    }
}

/// One line per row of the last axis.
pub fn write_field_grid(g: &FieldGrid) -> String {
    let mut out = format!(
        "# {FIELD_FORMAT} N={} box={} h={} t={} nodes={}\n",
        g.dim, g.half_width, g.h, g.t, g.per_axis
    );
    for row in g.values.chunks(g.per_axis) {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn parse_field_grid(text: &str) -> CliResult<FieldGrid> {
    const KIND: &str = "field grid";
    let mut lines = text.lines();
    let h = header_fields(lines.next().unwrap_or(""), FIELD_FORMAT, KIND)?;
    let dim: usize = field(&h, "N", KIND)?;
    let per_axis: usize = field(&h, "nodes", KIND)?;
    let mut values = Vec::new();
    for line in lines {
        for s in line.split_whitespace() {
            values.push(s.parse::<f64>().map_err(|e| bad(KIND, e.to_string()))?);
        }
    }
    if values.len() != per_axis.pow(dim as u32) {
        return Err(bad(KIND, format!("{} values for {per_axis}^{dim} nodes", values.len())));
    }
    Ok(FieldGrid {
        dim,
        half_width: field(&h, "box", KIND)?,
        h: field(&h, "h", KIND)?,
        t: field(&h, "t", KIND)?,
        per_axis,
        values,
    })
}

/// Flat `key=value` document.
pub fn write_key_values(entries: &[(String, f64)]) -> String {
    let mut out = format!("# {BOUNDS_FORMAT}\n");
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={}", num(*v));
    }
    out
}

pub fn parse_key_values(text: &str) -> CliResult<BTreeMap<String, f64>> {
    const KIND: &str = "bounds";
    let mut lines = text.lines();
    if lines.next() != Some(&format!("# {BOUNDS_FORMAT}")) {
        return Err(bad(KIND, format!("missing '# {BOUNDS_FORMAT}' header")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').ok_or_else(|| bad(KIND, format!("'{l}' is not key=value")))?;
            let v = v.parse::<f64>().map_err(|e| bad(KIND, format!("{k}: {e}")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}
