use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::diagrams::DiagramKind;
use crate::error::{PermlabError, Result};

/// Largest number of points a `--time-grid` may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    HeatKernel,
    GroupWalk,
    Sample,
    Extend,
    RestrictCheck,
    Diagrams,
    Catalan,
    Genfun,
    Rho,
    Eq51,
    Permanent,
    Conjecture1Report,
}

impl Task {
    pub const ALL: [Task; 12] = [
        Task::HeatKernel,
        Task::GroupWalk,
        Task::Sample,
        Task::Extend,
        Task::RestrictCheck,
        Task::Diagrams,
        Task::Catalan,
        Task::Genfun,
        Task::Rho,
        Task::Eq51,
        Task::Permanent,
        Task::Conjecture1Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::HeatKernel => "heat-kernel",
            Task::GroupWalk => "group-walk",
            Task::Sample => "sample",
            Task::Extend => "extend",
            Task::RestrictCheck => "restrict-check",
            Task::Diagrams => "diagrams",
            Task::Catalan => "catalan",
            Task::Genfun => "genfun",
            Task::Rho => "rho",
            Task::Eq51 => "eq51",
            Task::Permanent => "permanent",
            Task::Conjecture1Report => "conjecture1-report",
        }
    }
}

impl FromStr for Task {
    type Err = PermlabError;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| PermlabError::InvalidConfig(format!("unknown task `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One experiment. Keys mirror the command line flags; unknown keys are
/// rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_edge")]
    pub edge: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// `"a:b:step"`, both ends included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<String>,
    #[serde(default)]
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_states: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_group: Option<u64>,
    /// Monte Carlo sample count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Particle count for the diagram tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<DiagramKind>,
    /// Lattice edges for a diagram limit scan, or vertex counts for `eq51`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<u64>>,
    /// `t = scale · L²` in a limit scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Exact rational, `"3/10"` or `"0.3"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_index: Option<usize>,
    /// Record wall-clock runtime in the envelope.
    #[serde(default)]
    pub timing: bool,
}

fn default_dim() -> usize {
    1
}

fn default_edge() -> usize {
    3
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            task,
            dim: default_dim(),
            edge: default_edge(),
            time: None,
            time_grid: None,
            r: 0.0,
            order: None,
            seed: 0,
            step: None,
            out: None,
            format: Format::Json,
            threads: None,
            cap_states: None,
            cap_group: None,
            samples: None,
            n: None,
            kind: None,
            sizes: None,
            scale: None,
            z: None,
            rho: None,
            max_index: None,
            timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| PermlabError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks what can be checked without running the task.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PermlabError::InvalidConfig(m.to_string()));
        if self.time.is_some() && self.time_grid.is_some() {
            return bad("give either time or time-grid, not both");
        }
        if let Some(t) = self.time {
            if !t.is_finite() {
                return bad("time must be finite");
            }
        }
        if let Some(g) = &self.time_grid {
            parse_time_grid(g)?;
        }
        if !self.r.is_finite() {
            return bad("r must be finite");
        }
        if let Some(s) = self.step {
            if !s.is_finite() {
                return bad("step must be finite");
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be ≥ 1");
        }
        if self.samples == Some(0) {
            return bad("samples must be ≥ 1");
        }
        if let Some(r) = &self.rho {
            parse_rational(r)?;
        }
        if let Some(z) = self.z {
            if !z.is_finite() {
                return bad("z must be finite");
            }
        }
        Ok(())
    }

    /// Times from `time-grid` or `time`, else `default`.
    pub fn times(&self, default: &[f64]) -> Result<Vec<f64>> {
        match (&self.time_grid, self.time) {
            (Some(g), _) => parse_time_grid(g),
            (None, Some(t)) => Ok(vec![t]),
            (None, None) => Ok(default.to_vec()),
        }
    }
}

/// Expands `"a:b:step"` to `a, a + step, .., b`.
pub fn parse_time_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || PermlabError::InvalidConfig(format!("time grid `{spec}` is not of the form a:b:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(a.is_finite() && b.is_finite() && step.is_finite()) || !(step > 0.0) || b < a {
        return Err(PermlabError::InvalidConfig(format!(
            "time grid `{spec}` needs finite a ≤ b and step > 0"
        )));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > MAX_GRID_POINTS {
        return Err(PermlabError::InvalidConfig(format!(
            "time grid `{spec}` has more than {MAX_GRID_POINTS} points"
        )));
    }
    Ok((0..count).map(|k| a + k as f64 * step).collect())
}

/// Parses `"p/q"`, an integer, or a plain decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || PermlabError::InvalidConfig(format!("`{s}` is not a rational number"));
    let s = s.trim();
    if s.contains('/') {
        let r = BigRational::from_str(s).map_err(|_| bad())?;
        return Ok(r);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let denom = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(numer, denom);
    Ok(if neg { -r } else { r })
}
