//! TOML run configuration: network parameters, harvester model, experiment
//! selection, sweep axis and queue options.
//!
//! ```toml
//! [network]
//! p_t = "10 dB"        # or "10 W", or a bare number in watts
//! radius_r = 60.0
//!
//! [harvester]
//! model = "non_linear"
//! pr_min = 0.05
//!
//! [experiment]
//! name = "jsp-vs-power"
//! trials = 100000
//! seed = 1
//!
//! [experiment.sweep]
//! start = 0
//! stop = 20
//! step = 2
//! unit = "dB"
//! ```
//!
//! Every key is optional; missing keys take the defaults of
//! [`NetworkConfig::default`] and [`ExperimentSpec::default`].

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::model::{db_to_watts, HarvesterModel, NetworkConfig, DEFAULT_PR_MAX, DEFAULT_PR_MIN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: `{key}` {reason}")]
    Range { key: String, line: usize, reason: String },
    #[error("unknown experiment `{name}`; valid names: {}", ExperimentName::ALL.map(|e| e.as_str()).join(", "))]
    UnknownExperiment { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    JspVsPower,
    JspVsRadius,
    JspVsXi,
    PaoiVsXi,
    XistarVsPower,
    XistarVsRadius,
    QueuePath,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::JspVsPower,
        ExperimentName::JspVsRadius,
        ExperimentName::JspVsXi,
        ExperimentName::PaoiVsXi,
        ExperimentName::XistarVsPower,
        ExperimentName::XistarVsRadius,
        ExperimentName::QueuePath,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::JspVsPower => "jsp-vs-power",
            ExperimentName::JspVsRadius => "jsp-vs-radius",
            ExperimentName::JspVsXi => "jsp-vs-xi",
            ExperimentName::PaoiVsXi => "paoi-vs-xi",
            ExperimentName::XistarVsPower => "xistar-vs-power",
            ExperimentName::XistarVsRadius => "xistar-vs-radius",
            ExperimentName::QueuePath => "queue-path",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentName::JspVsPower => "JSP (Monte Carlo, lower, upper; linear and non-linear) against transmit power",
            ExperimentName::JspVsRadius => "JSP (Monte Carlo, lower, upper; linear and non-linear) against disc radius",
            ExperimentName::JspVsXi => "JSP (Monte Carlo, lower, upper) against the slot partitioning factor",
            ExperimentName::PaoiVsXi => "peak AoI closed forms and simulations against the slot partitioning factor",
            ExperimentName::XistarVsPower => "optimal slot partitioning factor against transmit power",
            ExperimentName::XistarVsRadius => "optimal slot partitioning factor against disc radius",
            ExperimentName::QueuePath => "slot-level AoI sample paths for both disciplines",
        }
    }

    /// Default sweep axis, `None` for experiments without one.
    pub fn default_sweep(&self) -> Option<Sweep> {
        let sweep = |start, stop, step, unit| Some(Sweep { start, stop, step, unit });
        match self {
            ExperimentName::JspVsPower | ExperimentName::XistarVsPower => sweep(0.0, 20.0, 2.0, SweepUnit::Db),
            ExperimentName::JspVsRadius => sweep(20.0, 200.0, 10.0, SweepUnit::Metre),
            ExperimentName::XistarVsRadius => sweep(20.0, 200.0, 20.0, SweepUnit::Metre),
            ExperimentName::JspVsXi | ExperimentName::PaoiVsXi => sweep(0.05, 0.95, 0.05, SweepUnit::None),
            ExperimentName::QueuePath => None,
        }
    }

    fn allowed_units(&self) -> &'static [SweepUnit] {
        match self {
            ExperimentName::JspVsPower | ExperimentName::XistarVsPower => &[SweepUnit::Db, SweepUnit::Watt],
            ExperimentName::JspVsRadius | ExperimentName::XistarVsRadius => &[SweepUnit::Metre],
            ExperimentName::JspVsXi | ExperimentName::PaoiVsXi => &[SweepUnit::None],
            ExperimentName::QueuePath => &[],
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment { name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepUnit {
    Db,
    Watt,
    Metre,
    None,
}

impl SweepUnit {
    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "dB" | "db" => Some(SweepUnit::Db),
            "W" | "w" => Some(SweepUnit::Watt),
            "m" => Some(SweepUnit::Metre),
            "" => Some(SweepUnit::None),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SweepUnit::Db => "dB",
            SweepUnit::Watt => "W",
            SweepUnit::Metre => "m",
            SweepUnit::None => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub unit: SweepUnit,
}

impl Sweep {
    /// Axis values `start, start + step, ...` up to `stop` inclusive, in the
    /// sweep's own unit.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    /// Converts an axis value to SI.
    pub fn to_si(&self, v: f64) -> f64 {
        match self.unit {
            SweepUnit::Db => db_to_watts(v),
            _ => v,
        }
    }
}

/// Resolved experiment section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub sweep: Option<Sweep>,
    pub trials: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Coarse grid spacing of the xi search.
    pub grid_step: f64,
    pub refine_tol: f64,
    /// Also write an SVG line chart next to the CSV.
    pub plot: bool,
    pub queue: QueueOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueOptions {
    pub n_slots: u64,
    /// Per-slot success probability; `None` uses the JSP lower bound.
    pub mu: Option<f64>,
}

impl Default for QueueOptions {
    fn default() -> Self {
        QueueOptions { n_slots: 100_000, mu: None }
    }
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let name = ExperimentName::JspVsPower;
        ExperimentSpec {
            name,
            sweep: name.default_sweep(),
            trials: 100_000,
            seed: 1,
            output_dir: PathBuf::from("out"),
            grid_step: 0.05,
            refine_tol: 1e-3,
            plot: false,
            queue: QueueOptions::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw file layout
// ---------------------------------------------------------------------------

type Num = Option<Spanned<f64>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    harvester: RawHarvester,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    queue: RawQueue,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    lambda: Num,
    radius_r: Num,
    alpha: Num,
    p_t: Option<Spanned<toml::Value>>,
    eta: Num,
    xi: Num,
    tau: Num,
    sigma_bits: Num,
    bandwidth_b: Num,
    e_th: Num,
    p_a: Num,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHarvester {
    model: Option<Spanned<String>>,
    pr_min: Num,
    pr_max: Num,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: Option<Spanned<String>>,
    trials: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
    output_dir: Option<String>,
    grid_step: Num,
    refine_tol: Num,
    plot: Option<bool>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start: Spanned<f64>,
    stop: Spanned<f64>,
    step: Spanned<f64>,
    unit: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQueue {
    n_slots: Option<Spanned<i64>>,
    mu: Num,
}

struct Lines<'a> {
    text: &'a str,
}

impl Lines<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn range(&self, key: &str, span: Range<usize>, reason: impl Into<String>) -> ConfigError {
        ConfigError::Range {
            key: key.to_string(),
            line: self.line(span),
            reason: reason.into(),
        }
    }
}

/// Parses a power given as `"<x> dB"`, `"<x> W"` or a bare number of watts.
pub fn parse_power(value: &toml::Value) -> Result<f64, String> {
    match value {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => {
            let s = s.trim();
            let (num, unit) = match s.find(|c: char| c.is_ascii_alphabetic()) {
                Some(i) => (&s[..i], s[i..].trim()),
                None => (s, "W"),
            };
            let x: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("expected a number with unit \"dB\" or \"W\", got {s:?}"))?;
            match unit {
                "dB" | "db" | "dBW" => Ok(db_to_watts(x)),
                "W" | "w" => Ok(x),
                other => Err(format!("unknown power unit {other:?}; use \"dB\" or \"W\"")),
            }
        }
        other => Err(format!("expected a number or a string like \"10 dB\", got {other}")),
    }
}

fn non_negative_int(lines: &Lines, key: &str, v: &Spanned<i64>, min: i64) -> Result<u64, ConfigError> {
    let x = *v.get_ref();
    if x < min {
        return Err(lines.range(key, v.span(), format!("must be >= {min}, got {x}")));
    }
    Ok(x as u64)
}

/// Parses a configuration document.
pub fn parse_config_str(text: &str) -> Result<(NetworkConfig, ExperimentSpec), ConfigError> {
    let lines = Lines { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| lines.line(s)).unwrap_or(0),
        message: e.message().trim().to_string(),
    })?;
    let mut cfg = NetworkConfig::default();
    let n = &raw.network;
    let mut spans: Vec<(&'static str, Range<usize>)> = Vec::new();
    macro_rules! set {
        ($raw:expr, $field:ident) => {
            if let Some(v) = &$raw.$field {
                cfg.$field = *v.get_ref();
                spans.push((stringify!($field), v.span()));
            }
        };
    }
    set!(n, lambda);
    set!(n, radius_r);
    set!(n, alpha);
    set!(n, eta);
    set!(n, xi);
    set!(n, tau);
    set!(n, sigma_bits);
    set!(n, bandwidth_b);
    set!(n, e_th);
    set!(n, p_a);
    if let Some(v) = &n.p_t {
        cfg.p_t = parse_power(v.get_ref()).map_err(|r| lines.range("p_t", v.span(), r))?;
        spans.push(("p_t", v.span()));
    }

    let h = &raw.harvester;
    let model_span = h.model.as_ref().map(|m| m.span()).unwrap_or(0..0);
    let model = h.model.as_ref().map(|m| m.get_ref().as_str()).unwrap_or("linear");
    match model {
        "linear" => {
            if let Some(v) = h.pr_min.as_ref().or(h.pr_max.as_ref()) {
                return Err(lines.range(
                    "harvester.model",
                    v.span(),
                    "is \"linear\", which takes no pr_min/pr_max",
                ));
            }
        }
        "non_linear" => {
            let pr_min = h.pr_min.as_ref().map(|v| *v.get_ref()).unwrap_or(DEFAULT_PR_MIN);
            let pr_max = h.pr_max.as_ref().map(|v| *v.get_ref()).unwrap_or(DEFAULT_PR_MAX);
            cfg.eh_model = HarvesterModel::NonLinear { pr_min, pr_max };
            spans.push(("pr_min", h.pr_min.as_ref().map(|v| v.span()).unwrap_or(model_span.clone())));
            spans.push(("pr_max", h.pr_max.as_ref().map(|v| v.span()).unwrap_or(model_span.clone())));
        }
        other => {
            return Err(lines.range(
                "harvester.model",
                model_span,
                format!("must be \"linear\" or \"non_linear\", got {other:?}"),
            ))
        }
    }

    if let Err(crate::error::Error::InvalidConfig { field, reason }) = cfg.validate() {
        let span = spans
            .iter()
            .find(|(k, _)| *k == field)
            .map(|(_, s)| s.clone())
            .unwrap_or(0..0);
        return Err(lines.range(field, span, reason));
    }

    let e = &raw.experiment;
    let mut spec = ExperimentSpec::default();
    if let Some(name) = &e.name {
        spec.name = name.get_ref().parse()?;
        spec.sweep = spec.name.default_sweep();
    }
    if let Some(v) = &e.trials {
        spec.trials = non_negative_int(&lines, "trials", v, 1)?;
    }
    if let Some(v) = &e.seed {
        spec.seed = non_negative_int(&lines, "seed", v, 0)?;
    }
    if let Some(dir) = &e.output_dir {
        spec.output_dir = PathBuf::from(dir);
    }
    if let Some(v) = &e.grid_step {
        let x = *v.get_ref();
        if !(x > 0.0 && x <= 0.1) {
            return Err(lines.range("grid_step", v.span(), format!("must lie in (0, 0.1], got {x}")));
        }
        spec.grid_step = x;
    }
    if let Some(v) = &e.refine_tol {
        let x = *v.get_ref();
        if !(x > 0.0) {
            return Err(lines.range("refine_tol", v.span(), format!("must be > 0, got {x}")));
        }
        spec.refine_tol = x;
    }
    if let Some(p) = e.plot {
        spec.plot = p;
    }
    if let Some(s) = &e.sweep {
        let default_unit = spec.name.default_sweep().map(|s| s.unit);
        let unit = match &s.unit {
            Some(u) => SweepUnit::parse(u.get_ref())
                .ok_or_else(|| lines.range("sweep.unit", u.span(), format!("unknown unit {:?}", u.get_ref())))?,
            None => default_unit.unwrap_or(SweepUnit::None),
        };
        let allowed = spec.name.allowed_units();
        if !allowed.contains(&unit) {
            let span = s.unit.as_ref().map(|u| u.span()).unwrap_or(s.start.span());
            let names: Vec<_> = allowed.iter().map(|u| format!("{:?}", u.label())).collect();
            return Err(lines.range(
                "sweep.unit",
                span,
                format!("must be one of [{}] for {}", names.join(", "), spec.name),
            ));
        }
        let step = *s.step.get_ref();
        if !(step > 0.0 && step.is_finite()) {
            return Err(lines.range("sweep.step", s.step.span(), format!("must be > 0, got {step}")));
        }
        let (start, stop) = (*s.start.get_ref(), *s.stop.get_ref());
        if !(stop >= start) {
            return Err(lines.range("sweep.stop", s.stop.span(), format!("must be >= start ({start}), got {stop}")));
        }
        let sweep = Sweep { start, stop, step, unit };
        let check = |v: f64| -> Result<(), String> {
            let si = sweep.to_si(v);
            match spec.name {
                ExperimentName::JspVsXi | ExperimentName::PaoiVsXi if !(si > 0.0 && si < 1.0) => {
                    Err(format!("xi values must lie in (0, 1), got {v}"))
                }
                _ if !(si > 0.0 && si.is_finite()) => Err(format!("axis values must be positive, got {v}")),
                _ => Ok(()),
            }
        };
        for v in sweep.values() {
            check(v).map_err(|r| lines.range("sweep", s.start.span(), r))?;
        }
        spec.sweep = Some(sweep);
    }
    if let Some(v) = &raw.queue.n_slots {
        spec.queue.n_slots = non_negative_int(&lines, "n_slots", v, 1)?;
    }
    if let Some(v) = &raw.queue.mu {
        let x = *v.get_ref();
        if !(x > 0.0 && x <= 1.0) {
            return Err(lines.range("mu", v.span(), format!("must lie in (0, 1], got {x}")));
        }
        spec.queue.mu = Some(x);
    }
    Ok((cfg, spec))
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<(NetworkConfig, ExperimentSpec), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text)
}
