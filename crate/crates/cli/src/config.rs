//! Run configuration: a single JSON document `{command, payload, output?}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Determinant,
    Eta,
    #[value(alias = "spectral_flow")]
    SpectralFlow,
    Lefschetz,
    #[value(alias = "mapping_torus")]
    MappingTorus,
    #[value(alias = "witten_sum")]
    WittenSum,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Determinant => "determinant",
            Command::Eta => "eta",
            Command::SpectralFlow => "spectral_flow",
            Command::Lefschetz => "lefschetz",
            Command::MappingTorus => "mapping_torus",
            Command::WittenSum => "witten_sum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    #[serde(default = "stdout_path")]
    pub path: String,
}

fn stdout_path() -> String {
    "-".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            format: Format::Json,
            path: stdout_path(),
        }
    }
}

/// Per-run overrides of the numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "d_symp")]
    pub symp: f64,
    #[serde(default = "d_eig")]
    pub eig: f64,
    #[serde(default = "d_decomp")]
    pub decomp: f64,
    #[serde(default = "d_kernel")]
    pub kernel: f64,
    #[serde(default = "d_trace")]
    pub trace: f64,
    #[serde(default = "d_matching")]
    pub matching: f64,
}

fn d_symp() -> f64 {
    1e-10
}
fn d_eig() -> f64 {
    1e-9
}
fn d_decomp() -> f64 {
    1e-8
}
fn d_kernel() -> f64 {
    1e-12
}
fn d_trace() -> f64 {
    1e-9
}
fn d_matching() -> f64 {
    1e-6
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            symp: d_symp(),
            eig: d_eig(),
            decomp: d_decomp(),
            kernel: d_kernel(),
            trace: d_trace(),
            matching: d_matching(),
        }
    }
}

impl ToleranceConfig {
    pub fn to_core(self) -> semiclassic_core::Tolerances {
        semiclassic_core::Tolerances {
            symp: self.symp,
            eig: self.eig,
            decomp: self.decomp,
            kernel: self.kernel,
            trace: self.trace,
            matching: self.matching,
        }
    }
}

pub type Matrix = Vec<Vec<f64>>;

fn d_oracle_m_max() -> u64 {
    100_000
}
fn d_m_range() -> u64 {
    2000
}
fn d_steps() -> usize {
    400
}
fn d_det_rel_tol() -> f64 {
    5e-3
}
fn d_eta_tol() -> f64 {
    2e-2
}
fn d_exact_tol() -> f64 {
    1e-9
}
fn d_plot_modes() -> Vec<i64> {
    vec![-1, 0, 1]
}
fn d_true() -> bool {
    true
}
fn d_omega_scale() -> f64 {
    4.0 * PI
}
fn d_group_n() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyPayload {
    pub matrix: Matrix,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterminantPayload {
    pub matrix: Matrix,
    #[serde(default = "d_oracle_m_max")]
    pub oracle_m_max: u64,
    /// Relative tolerance of the oracle comparison.
    #[serde(default = "d_det_rel_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaPayload {
    pub matrix: Matrix,
    #[serde(default = "d_m_range")]
    pub m_range: u64,
    #[serde(default)]
    pub s_values: Option<Vec<f64>>,
    #[serde(default = "d_eta_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralFlowPayload {
    /// Generator `E₀` at the start of the path.
    pub start: Matrix,
    /// Generator `E₁` at the end of the path.
    pub end: Matrix,
    /// Complex structure held fixed along the path; `J₀` when absent.
    #[serde(default)]
    pub complex_structure: Option<Matrix>,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_m_range")]
    pub m_range: u64,
    /// Compare the endpoint eta difference with twice the flow.
    #[serde(default = "d_true")]
    pub eta_check: bool,
    #[serde(default = "d_eta_tol")]
    pub oracle_tol: f64,
    #[serde(default = "d_plot_modes")]
    pub plot_modes: Vec<i64>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyModel {
    ProjectiveLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPayload {
    pub label: String,
    pub matrix: Matrix,
    /// Trace of the lift on the fiber, `[re, im]`.
    pub lift: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LefschetzPayload {
    #[serde(default)]
    pub model: Option<ToyModel>,
    #[serde(default)]
    pub level: Option<u32>,
    #[serde(default)]
    pub theta: Option<f64>,
    /// Explicit fixed points, used when no model is given.
    #[serde(default)]
    pub points: Option<Vec<PointPayload>>,
    #[serde(default = "d_exact_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingTorusPayload {
    pub beta: [[i64; 2]; 2],
    pub k: u64,
    #[serde(default = "d_omega_scale")]
    pub omega_scale: f64,
    #[serde(default = "d_m_range")]
    pub m_range: u64,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default)]
    pub mu_power: i64,
    #[serde(default = "d_exact_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionPayload {
    pub label: String,
    pub cs: f64,
    pub torsion_sqrt: f64,
    pub h0: u32,
    pub h1: u32,
    pub spectral_flow: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WittenSumPayload {
    pub k: u64,
    /// Rank of `SU(n)`.
    #[serde(default = "d_group_n")]
    pub group_n: u32,
    #[serde(default)]
    pub b1: u32,
    pub connections: Vec<ConnectionPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Classify(ClassifyPayload),
    Determinant(DeterminantPayload),
    Eta(EtaPayload),
    SpectralFlow(SpectralFlowPayload),
    Lefschetz(LefschetzPayload),
    MappingTorus(MappingTorusPayload),
    WittenSum(WittenSumPayload),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub payload: Payload,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Command,
    payload: Value,
    #[serde(default)]
    output: Option<OutputSpec>,
}

/// Field named by a serde error: the backticked name for missing/unknown
/// fields, otherwise the path.
fn schema_error(e: serde_path_to_error::Error<serde_json::Error>, prefix: &str) -> CliError {
    let msg = e.inner().to_string();
    let ticked = ["missing field `", "unknown field `"]
        .iter()
        .find_map(|p| msg.find(p).map(|i| &msg[i + p.len()..]))
        .and_then(|rest| rest.split('`').next())
        .map(str::to_owned);
    let path = e.path().to_string();
    let field = match ticked {
        Some(f) => f,
        None if path == "." => prefix.trim_end_matches('.').to_owned(),
        None => format!("{prefix}{path}"),
    };
    CliError::Schema {
        field: if field.is_empty() { "$".into() } else { field },
        message: msg,
    }
}

fn payload_as<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| schema_error(e, "payload."))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| schema_error(e, ""))?;
    let payload = match raw.command {
        Command::Classify => Payload::Classify(payload_as(raw.payload)?),
        Command::Determinant => Payload::Determinant(payload_as(raw.payload)?),
        Command::Eta => Payload::Eta(payload_as(raw.payload)?),
        Command::SpectralFlow => Payload::SpectralFlow(payload_as(raw.payload)?),
        Command::Lefschetz => Payload::Lefschetz(payload_as(raw.payload)?),
        Command::MappingTorus => Payload::MappingTorus(payload_as(raw.payload)?),
        Command::WittenSum => Payload::WittenSum(payload_as(raw.payload)?),
    };
    let cfg = RunConfig {
        command: raw.command,
        payload,
        output: raw.output,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn schema(field: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn check_matrix(field: &str, m: &Matrix) -> Result<(), CliError> {
    let n = m.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(schema(field, format!("expected an even, nonzero number of rows, got {n}")));
    }
    if m.iter().any(|r| r.len() != n) {
        return Err(schema(field, "matrix must be square"));
    }
    Ok(())
}

fn check_positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(schema(field, format!("must be positive, got {x}")))
    }
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    match &cfg.payload {
        Payload::Classify(p) => check_matrix("matrix", &p.matrix),
        Payload::Determinant(p) => {
            check_matrix("matrix", &p.matrix)?;
            if p.oracle_m_max == 0 {
                return Err(schema("oracle_m_max", "must be positive"));
            }
            check_positive("oracle_tol", p.oracle_tol)
        }
        Payload::Eta(p) => {
            check_matrix("matrix", &p.matrix)?;
            if let Some(s) = &p.s_values {
                if s.len() < 2 || s.iter().any(|x| x.is_nan() || *x <= 0.0) {
                    return Err(schema("s_values", "need at least two positive values"));
                }
            }
            check_positive("oracle_tol", p.oracle_tol)
        }
        Payload::SpectralFlow(p) => {
            check_matrix("start", &p.start)?;
            check_matrix("end", &p.end)?;
            if p.start.len() != p.end.len() {
                return Err(schema("end", "start and end have different dimensions"));
            }
            if let Some(j) = &p.complex_structure {
                check_matrix("complex_structure", j)?;
                if j.len() != p.start.len() {
                    return Err(schema("complex_structure", "dimension differs from the generators"));
                }
            }
            if p.steps == 0 {
                return Err(schema("steps", "must be positive"));
            }
            check_positive("oracle_tol", p.oracle_tol)
        }
        Payload::Lefschetz(p) => {
            match (&p.model, &p.points) {
                (Some(_), Some(_)) => return Err(schema("points", "give either model or points")),
                (None, None) => return Err(schema("model", "missing model or points")),
                (Some(ToyModel::ProjectiveLine), None) => {
                    if p.level.is_none() {
                        return Err(schema("level", "required by projective_line"));
                    }
                    if p.theta.is_none() {
                        return Err(schema("theta", "required by projective_line"));
                    }
                }
                (None, Some(pts)) => {
                    if pts.is_empty() {
                        return Err(schema("points", "empty point list"));
                    }
                    for q in pts {
                        check_matrix("points.matrix", &q.matrix)?;
                    }
                }
            }
            check_positive("oracle_tol", p.oracle_tol)
        }
        Payload::MappingTorus(p) => {
            if p.steps == 0 {
                return Err(schema("steps", "must be positive"));
            }
            check_positive("omega_scale", p.omega_scale)?;
            check_positive("oracle_tol", p.oracle_tol)
        }
        Payload::WittenSum(p) => {
            if p.connections.is_empty() {
                return Err(schema("connections", "need at least one flat connection"));
            }
            if p.group_n < 2 {
                return Err(schema("group_n", "rank must be at least 2"));
            }
            Ok(())
        }
    }
}
