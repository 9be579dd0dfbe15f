//! Scenario files and machine-readable report output.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "resource": 500,
//!   "groups": [
//!     {"name": "A", "distribution": {"kind": "poisson", "lambda": 200}},
//!     {"name": "B", "distribution": {"kind": "binomial", "n": 1000, "p": 0.4}}
//!   ],
//!   "defaults": {"epsilon": 0.1, "alpha": 0.25, "seed": 42, "samples": 1000000}
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. Reports carry a [`ReportMeta`] with
//! the tool version, the SHA-256 of the scenario text and the resolved
//! settings. CSV floats are written with 17 significant digits.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{DemandDistribution, DemandLaw};
use crate::error::{Error, Result};
use crate::metrics::{availability, EvaluationReport, Group, Scenario};

pub const TOOL_NAME: &str = "fairalloc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub distribution: DemandLaw,
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub resource: f64,
    pub groups: Vec<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defaults: Option<Defaults>,
}

impl ScenarioFile {
    pub fn from_scenario(scenario: &Scenario, defaults: Option<Defaults>) -> Self {
        ScenarioFile {
            resource: scenario.resource(),
            groups: scenario
                .groups()
                .iter()
                .map(|g| GroupSpec {
                    name: g.name.clone(),
                    distribution: g.distribution.law().clone(),
                })
                .collect(),
            defaults,
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let groups = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                DemandDistribution::new(g.distribution.clone())
                    .map(|d| Group::new(g.name.clone(), d))
                    .map_err(|e| match e {
                        Error::InvalidDistribution(msg) => {
                            Error::InvalidDistribution(format!("groups[{i}] ({:?}): {msg}", g.name))
                        }
                        other => other,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(self.resource, groups)
    }
}

/// A parsed scenario together with its file-level defaults and digest.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub defaults: Defaults,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn parse_file(text: &str) -> Result<ScenarioFile> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        Error::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| Error::Parse {
        path: ".".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(file)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_file(text)?.to_scenario()
}

pub fn load_scenario(text: &str) -> Result<LoadedScenario> {
    let file = parse_file(text)?;
    Ok(LoadedScenario {
        scenario: file.to_scenario()?,
        defaults: file.defaults.clone().unwrap_or_default(),
        digest: sha256_hex(text.as_bytes()),
    })
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario, None))
        .expect("scenario serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub v: f64,
    pub availability: f64,
    pub expected_min: f64,
}

/// Availability and expected minimum on a uniform grid over `[0, v_max]`.
pub fn emit_availability_curve(
    dist: &DemandDistribution,
    v_max: f64,
    steps: usize,
) -> Result<Vec<CurvePoint>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "a curve needs at least 2 steps, got {steps}"
        )));
    }
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "v_max must be finite and > 0, got {v_max}"
        )));
    }
    (0..steps)
        .map(|j| {
            let v = if j == steps - 1 {
                v_max
            } else {
                v_max * j as f64 / (steps - 1) as f64
            };
            Ok(CurvePoint {
                v,
                availability: availability(dist, v)?,
                expected_min: dist.expected_min(v)?,
            })
        })
        .collect()
}

/// Provenance attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input_sha256: String,
    pub settings: serde_json::Value,
}

impl ReportMeta {
    pub fn new(command: &str, input_sha256: &str, settings: serde_json::Value) -> Self {
        ReportMeta {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            input_sha256: input_sha256.into(),
            settings,
        }
    }
}

/// 17 significant digits, `.` decimal separator, no locale.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A flat table of preformatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with `#`-prefixed metadata lines ahead of the header.
    pub fn to_csv(&self, meta: &ReportMeta) -> String {
        let mut out = format!(
            "# tool={} version={} command={}\n# input_sha256={}\n# settings={}\n",
            meta.tool, meta.version, meta.command, meta.input_sha256, meta.settings
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }
}

pub fn curve_table(points: &[(String, Vec<CurvePoint>)]) -> Table {
    let mut t = Table::new(["group", "v", "availability", "expected_min"]);
    for (name, curve) in points {
        for p in curve {
            t.push(vec![
                name.clone(),
                format_float(p.v),
                format_float(p.availability),
                format_float(p.expected_min),
            ]);
        }
    }
    t
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

/// One row per group; scenario-level values repeat on every row. Bound
/// columns appear only when the report carries bounds, and the PoF columns
/// only when those bounds were computed for an α.
pub fn evaluation_table(report: &EvaluationReport) -> Table {
    let b = report.bounds.as_ref();
    let with_pof = b.is_some_and(|b| b.bounds.alpha.is_some());
    let mut columns = vec![
        "group",
        "mean",
        "v",
        "expected_min",
        "q",
        "q_se",
        "U",
        "U_se",
        "Q",
    ];
    if b.is_some() {
        columns.extend([
            "epsilon",
            "delta",
            "fairness_bound",
            "fairness_ok",
            "fairness_bound_low_resource",
            "fairness_low_resource_ok",
            "utilization_bound",
            "utilization_ok",
            "utilization_bound_low_resource",
            "utilization_low_resource_ok",
        ]);
    }
    if with_pof {
        columns.extend(["alpha", "pof_bound", "pof_bound_small"]);
    }
    let mut t = Table::new(columns);
    for g in &report.groups {
        let mut row = vec![
            g.name.clone(),
            format_float(g.mean),
            format_float(g.allocation),
            format_float(g.expected_min),
            format_float(g.availability),
            opt_float(g.availability_se),
            format_float(report.utilization),
            opt_float(report.utilization_se),
            format_float(report.fairness),
        ];
        if let Some(b) = b {
            row.extend([
                format_float(b.bounds.epsilon),
                format_float(b.bounds.delta),
                format_float(b.bounds.fairness_bound),
                b.fairness_satisfied.to_string(),
                opt_float(b.bounds.fairness_bound_low_resource),
                opt_bool(b.fairness_low_resource_satisfied),
                format_float(b.bounds.utilization_bound),
                b.utilization_satisfied.to_string(),
                opt_float(b.bounds.utilization_bound_low_resource),
                opt_bool(b.utilization_low_resource_satisfied),
            ]);
            if with_pof {
                row.extend([
                    opt_float(b.bounds.alpha),
                    opt_float(b.bounds.pof_bound),
                    opt_float(b.bounds.pof_bound_small),
                ]);
            }
        }
        t.push(row);
    }
    t
}
