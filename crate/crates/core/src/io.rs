//! Scenario files, CSV outputs and run summaries.
//!
//! Scenario files are strict JSON: unknown keys are rejected, every required
//! key must be present and `schema_version` must be [`SCHEMA_VERSION`].
//! Floating-point CSV fields use `{:.16e}` (17 significant digits) so values
//! read back bit-exactly. Files are written to a temporary sibling and then
//! renamed into place.

use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, Outcome, WorldState};
use crate::error::Error;
use crate::fields::{Goal, GoalLaw, InterRobotParams, Obstacle};
use crate::fpf::{DesignMapEntry, FpfParams};
use crate::scenario::{FormationCheck, FormationTolerance, RunResult, SafetySpec, Scenario, SeedingSpec};
use crate::vec2::Vec2;

pub const SCHEMA_VERSION: u32 = 1;

/// Obstacle as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Points { source_points: Vec<Vec2>, k_r: f64, sigma_o: f64 },
    /// Discretized into sources at most `spacing` apart.
    Polyline { vertices: Vec<Vec2>, spacing: f64, k_r: f64, sigma_o: f64 },
}

/// On-disk form of a [`Scenario`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub fpf: FpfParams,
    pub inter_robot: InterRobotParams,
    pub n_robots: usize,
    pub body_radius: f64,
    pub seeding: SeedingSpec,
    pub virtual_start: Vec2,
    pub goal: Goal,
    #[serde(default)]
    pub goal_law: GoalLaw,
    pub epsilon_goal: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assembly_integrator: Option<IntegratorConfig>,
    pub safety: SafetySpec,
    #[serde(default)]
    pub formation: FormationTolerance,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            note: s.note.clone(),
            fpf: s.fpf,
            inter_robot: s.inter_robot,
            n_robots: s.n_robots,
            body_radius: s.body_radius,
            seeding: s.seeding,
            virtual_start: s.virtual_start,
            goal: s.goal,
            goal_law: s.goal_law,
            epsilon_goal: s.epsilon_goal,
            obstacles: s
                .obstacles
                .iter()
                .map(|o| ObstacleSpec::Points { source_points: o.source_points.clone(), k_r: o.k_r, sigma_o: o.sigma_o })
                .collect(),
            integrator: s.integrator,
            assembly_integrator: s.assembly_integrator,
            safety: s.safety,
            formation: s.formation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    MissingKey,
    InvalidValue,
    InvariantViolation,
    UnsupportedSchema,
}

impl ConfigErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfigErrorKind::Syntax => "syntax",
            ConfigErrorKind::UnknownKey => "unknown_key",
            ConfigErrorKind::MissingKey => "missing_key",
            ConfigErrorKind::InvalidValue => "invalid_value",
            ConfigErrorKind::InvariantViolation => "invariant_violation",
            ConfigErrorKind::UnsupportedSchema => "unsupported_schema",
        }
    }
}

/// Why a scenario document was rejected.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    /// Dotted path of the offending key, when known.
    pub key: Option<String>,
    /// The violated rule, for invariant violations.
    pub rule: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.as_str())?;
        if let Some(k) = &self.key {
            write!(f, " at `{k}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn new(kind: ConfigErrorKind, key: Option<String>, message: impl Into<String>) -> Self {
        ConfigError { kind, key, rule: None, message: message.into() }
    }
}

/// Extract the quoted name from serde's "unknown field `x`" / "missing field `x`".
fn quoted(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

/// `path.leaf`, unless the path already ends at `leaf`.
fn join(path: &str, leaf: &str) -> String {
    if path.is_empty() || path == "." {
        leaf.to_string()
    } else if path == leaf || path.ends_with(&format!(".{leaf}")) {
        path.to_string()
    } else {
        format!("{path}.{leaf}")
    }
}

fn classify(err: serde_path_to_error::Error<serde_json::Error>) -> ConfigError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    let msg = inner.to_string();
    if msg.starts_with("unknown field") {
        let key = quoted(&msg).map(|k| join(&path, k));
        ConfigError::new(ConfigErrorKind::UnknownKey, key, msg)
    } else if msg.starts_with("missing field") {
        let key = quoted(&msg).map(|k| join(&path, k));
        ConfigError::new(ConfigErrorKind::MissingKey, key, msg)
    } else {
        let key = (path != ".").then_some(path);
        ConfigError::new(ConfigErrorKind::InvalidValue, key, msg)
    }
}

fn obstacle_from_spec(k: usize, spec: ObstacleSpec) -> Result<Obstacle, ConfigError> {
    match spec {
        ObstacleSpec::Points { source_points, k_r, sigma_o } => Ok(Obstacle::new(source_points, k_r, sigma_o)),
        ObstacleSpec::Polyline { vertices, spacing, k_r, sigma_o } => {
            let bad = |key: &str, rule: &str| ConfigError {
                kind: ConfigErrorKind::InvariantViolation,
                key: Some(format!("obstacles[{k}].{key}")),
                rule: Some(rule.into()),
                message: format!("violates {rule}"),
            };
            if !(spacing.is_finite() && spacing > 0.0) {
                return Err(bad("spacing", "spacing > 0"));
            }
            if vertices.is_empty() || vertices.iter().any(|v| !v.is_finite()) {
                return Err(bad("vertices", "at least one finite vertex"));
            }
            Ok(Obstacle::from_polyline(&vertices, spacing, k_r, sigma_o))
        }
    }
}

impl ScenarioFile {
    /// Convert and validate.
    pub fn into_scenario(self) -> Result<Scenario, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(unsupported(self.schema_version));
        }
        let obstacles =
            self.obstacles.into_iter().enumerate().map(|(k, o)| obstacle_from_spec(k, o)).collect::<Result<_, _>>()?;
        let s = Scenario {
            note: self.note,
            fpf: self.fpf,
            inter_robot: self.inter_robot,
            n_robots: self.n_robots,
            body_radius: self.body_radius,
            seeding: self.seeding,
            virtual_start: self.virtual_start,
            goal: self.goal,
            goal_law: self.goal_law,
            epsilon_goal: self.epsilon_goal,
            obstacles,
            integrator: self.integrator,
            assembly_integrator: self.assembly_integrator,
            safety: self.safety,
            formation: self.formation,
        };
        match s.validate() {
            Ok(()) => Ok(s),
            Err(Error::InvalidScenario { key, rule }) => Err(ConfigError {
                kind: ConfigErrorKind::InvariantViolation,
                message: format!("violates {rule}"),
                key: Some(key),
                rule: Some(rule),
            }),
            Err(other) => Err(ConfigError::new(ConfigErrorKind::InvalidValue, None, other.to_string())),
        }
    }
}

fn unsupported(v: impl fmt::Display) -> ConfigError {
    ConfigError::new(
        ConfigErrorKind::UnsupportedSchema,
        Some("schema_version".into()),
        format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})"),
    )
}

/// Parse and validate a scenario document.
pub fn parse_scenario(doc: &str) -> Result<Scenario, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_str(doc).map_err(|e| ConfigError::new(ConfigErrorKind::Syntax, None, e.to_string()))?;
    // Check the version first so a future schema reports as such rather
    // than as a pile of unknown keys.
    match value.get("schema_version") {
        Some(serde_json::Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) if value.is_object() => return Err(unsupported(v)),
        _ => {}
    }
    let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(classify)?;
    file.into_scenario()
}

pub fn serialize_scenario(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from(s)).expect("scenario files always serialize")
}

pub fn read_scenario(path: &Path) -> Result<Scenario, ReadError> {
    let doc = fs::read_to_string(path)?;
    Ok(parse_scenario(&doc)?)
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Config(#[from] ConfigError),
}

/// Write `contents` atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory as CSV text: time, agent position, then per robot position,
/// velocity and force.
pub fn trajectory_csv(result: &RunResult) -> String {
    let n = result.trajectory.first().map_or(0, |s| s.robots.len());
    let mut out = String::from("t,qv_x,qv_y");
    for i in 0..n {
        out.push_str(&format!(",r{i}_x,r{i}_y,r{i}_vx,r{i}_vy,r{i}_Fx,r{i}_Fy"));
    }
    out.push('\n');
    for (s, m) in result.trajectory.iter().zip(&result.metrics_series) {
        let q = s.virtual_agent.position;
        let mut row = vec![num(s.time), num(q.x), num(q.y)];
        for (r, f) in s.robots.iter().zip(&m.per_robot_force) {
            row.extend([r.position.x, r.position.y, r.velocity.x, r.velocity.y, f.x, f.y].map(num));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trajectory(result: &RunResult, path: &Path) -> io::Result<()> {
    if result.trajectory.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty trajectory"));
    }
    write_atomic(path, trajectory_csv(result).as_bytes())
}

/// A numeric CSV table as read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    /// `None` for `NA` cells.
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn parse_csv(text: &str) -> io::Result<CsvTable> {
    let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().ok_or_else(|| invalid("missing header".into()))?.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| match c {
                "NA" => Ok(None),
                _ => c.parse::<f64>().map(Some).map_err(|e| invalid(format!("row {}: {e}", k + 1))),
            })
            .collect::<io::Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(invalid(format!("row {} has {} columns, header has {}", k + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn read_csv(path: &Path) -> io::Result<CsvTable> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn design_map_csv(entries: &[DesignMapEntry]) -> String {
    let mut out = String::from("k_v,varsigma,scaled_radius\n");
    for e in entries {
        let r = e.scaled_radius.map_or_else(|| "NA".to_string(), num);
        out.push_str(&format!("{},{},{r}\n", num(e.k_v), num(e.varsigma)));
    }
    out
}

pub fn write_design_map(entries: &[DesignMapEntry], path: &Path) -> io::Result<()> {
    if entries.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no design-map entries"));
    }
    write_atomic(path, design_map_csv(entries).as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Assemble,
    Navigate,
}

/// Formation metrics of the final state. Distances are `null` when
/// undefined (one robot, no obstacles).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub formation_radius: f64,
    pub formation_rms_error: f64,
    pub max_radius_error_rel: Option<f64>,
    pub max_gap_error_deg: Option<f64>,
    pub within_tolerance: Option<bool>,
    pub min_inter_robot_distance: Option<f64>,
    pub min_obstacle_clearance: Option<f64>,
    pub virtual_agent: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub termination: Outcome,
    pub success: bool,
    pub steps: usize,
    pub simulated_time: f64,
    pub wall_clock_seconds: f64,
    pub final_metrics: FinalMetrics,
    pub collision_events: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub parameters: ScenarioFile,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl RunSummary {
    pub fn new(mode: Mode, scenario: &Scenario, result: &RunResult, wall_clock_seconds: f64) -> Self {
        let last: &WorldState = result.final_state();
        let m = result.final_metrics();
        let check: Option<FormationCheck> =
            crate::scenario::formation_check(last, result.formation_radius, &scenario.formation).ok();
        RunSummary {
            mode,
            termination: result.termination,
            success: result.termination.is_success() && result.is_collision_free(),
            steps: result.steps(),
            simulated_time: last.time,
            wall_clock_seconds,
            final_metrics: FinalMetrics {
                formation_radius: result.formation_radius,
                formation_rms_error: m.formation_rms_error,
                max_radius_error_rel: check.map(|c| c.max_radius_error_rel),
                max_gap_error_deg: check.map(|c| c.max_gap_error_deg),
                within_tolerance: check.map(|c| c.within_tolerance),
                min_inter_robot_distance: finite(m.min_inter_robot_distance),
                min_obstacle_clearance: finite(m.min_obstacle_clearance),
                virtual_agent: last.virtual_agent.position,
            },
            collision_events: result.collision_events.len(),
            note: scenario.note.clone(),
            parameters: ScenarioFile::from(scenario),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summaries always serialize")
    }
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> io::Result<()> {
    write_atomic(path, summary.to_json().as_bytes())
}
