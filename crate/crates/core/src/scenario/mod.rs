//! Declarative scenarios: TOML configs, the built-in library, batch execution
//! and file outputs.

mod io;
mod run;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::force::ForceField;
use crate::grid::{Axis, Grid2D};
use crate::propagators::EvolveSpec;
use crate::wavefunction::Packet;

pub use io::{read_snapshot, write_outputs, write_snapshot, SNAPSHOT_MAGIC};
pub use run::{
    check_scenario, execute, run_dispersion_comparison, run_emergence_comparison, run_scenario, CheckReport,
    ClassicalComparison, DispersionReport, EmergenceReport, EnergySummary, MixtureComparison, NormSummary, PhotonReport,
    FinalState, RunOutcome, RunReport, UncertaintySummary, basic_qm_slice,
};

/// Named failures of scenario handling, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario kind `{0}` (expected one of: config_space, photon, emergence, dispersion)")]
    UnknownKind(String),
    #[error("unknown built-in scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("wrap budget violated: {0}")]
    WrapViolation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("cannot read `{path}`: {source}")]
    Input { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl ScenarioError {
    /// 2 for configuration problems, 3 for numeric failures, 1 for file-system errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::UnknownKind(_)
            | Self::UnknownScenario(_)
            | Self::InvalidGrid(_)
            | Self::WrapViolation(_)
            | Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Input { .. } | Self::Output { .. } => 1,
        }
    }
}

impl From<Error> for ScenarioError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) => Self::WrapViolation(m),
            Error::Numeric(m) | Error::Data(m) => Self::Numeric(m),
            other => Self::Config(other.to_string()),
        }
    }
}

pub type ScenarioResult<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Evolution in the position-velocity space.
    ConfigSpace,
    /// Single-photon advection on the x axis.
    Photon,
    /// Position-velocity run beside the standard 1-D solver on the `p = m v` slice.
    Emergence,
    /// Spreading of a basic-QM packet against the shear of a narrow-velocity packet.
    Dispersion,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [Self::ConfigSpace, Self::Photon, Self::Emergence, Self::Dispersion];

    pub fn name(self) -> &'static str {
        match self {
            Self::ConfigSpace => "config_space",
            Self::Photon => "photon",
            Self::Emergence => "emergence",
            Self::Dispersion => "dispersion",
        }
    }

    pub fn parse(s: &str) -> ScenarioResult<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| ScenarioError::UnknownKind(s.to_string()))
    }

    fn allowed(self) -> &'static [Comparison] {
        match self {
            Self::ConfigSpace => &[Comparison::Classical, Comparison::Characteristics, Comparison::BasicQm],
            Self::Photon => &[Comparison::Photon],
            Self::Emergence | Self::Dispersion => &[Comparison::Classical, Comparison::BasicQm],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Packet centre against RK4 trajectories (weighted for mixtures).
    Classical,
    /// Final state against the characteristics oracle.
    Characteristics,
    /// Standard 1-D solver on the `p = m v` slice.
    BasicQm,
    /// Photon packet against its analytic shift.
    Photon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_v: Option<usize>,
}

impl GridConfig {
    pub fn x_axis(&self) -> ScenarioResult<Axis> {
        Axis::new(self.x_min, self.x_max, self.n_x).map_err(|e| grid_error("x", e))
    }

    pub fn grid(&self) -> ScenarioResult<Grid2D> {
        let x = self.x_axis()?;
        let (Some(v_min), Some(v_max), Some(n_v)) = (self.v_min, self.v_max, self.n_v) else {
            return Err(ScenarioError::InvalidGrid("grid.v_min, grid.v_max and grid.n_v are required".into()));
        };
        let v = Axis::new(v_min, v_max, n_v).map_err(|e| grid_error("v", e))?;
        Ok(Grid2D::new(x, v))
    }
}

fn grid_error(axis: &str, e: Error) -> ScenarioError {
    let msg = e.to_string();
    let field = if msg.contains("node count") { format!("grid.n_{axis}") } else { format!("grid.{axis}_min/{axis}_max") };
    ScenarioError::InvalidGrid(format!("{field}: {msg}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Series CSV file name, relative to the output directory. Defaults to `<name>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    /// Write a binary snapshot every this many records; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Dump the dense `H_dyn` spectrum on a coarse copy of the grid.
    #[serde(default)]
    pub spectrum: bool,
    /// Nodes per axis of that coarse grid.
    #[serde(default = "default_spectrum_nodes")]
    pub spectrum_nodes: usize,
    /// Write the JSON run report.
    #[serde(default = "yes")]
    pub report: bool,
}

fn default_spectrum_nodes() -> usize {
    32
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { series: None, snapshot_every: 0, spectrum: false, spectrum_nodes: default_spectrum_nodes(), report: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonConfig {
    /// Helicity sign `s`, +1 or -1.
    pub polarisation: i8,
    #[serde(default = "unit")]
    pub c: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: String,
    #[serde(default = "unit")]
    pub hbar: f64,
    pub grid: GridConfig,
    #[serde(default)]
    pub force: ForceField,
    pub initial: Vec<Packet>,
    pub evolve: EvolveSpec,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon: Option<PhotonConfig>,
}

impl ScenarioConfig {
    /// Parses TOML, applies `key=value` overrides (dotted keys) and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> ScenarioResult<Self> {
        let mut value: toml::Table = toml::from_str(text).map_err(|e| ScenarioError::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: Self =
            toml::Value::Table(value).try_into().map_err(|e: toml::de::Error| ScenarioError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> ScenarioResult<String> {
        toml::to_string(self).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn kind(&self) -> ScenarioResult<ScenarioKind> {
        ScenarioKind::parse(&self.kind)
    }

    pub fn series_file(&self) -> String {
        self.outputs.series.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn wants(&self, c: Comparison) -> bool {
        self.comparisons.contains(&c)
    }

    pub fn validate(&self) -> ScenarioResult<()> {
        let kind = self.kind()?;
        let config = |m: String| Err(ScenarioError::Config(m));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return config(format!("name `{}` must be non-empty and use only letters, digits, '-' and '_'", self.name));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return config(format!("hbar must be positive, got {}", self.hbar));
        }
        match kind {
            ScenarioKind::Photon => {
                self.grid.x_axis()?;
            }
            _ => {
                self.grid.grid()?;
            }
        }
        self.force.validate().map_err(|e| ScenarioError::Config(format!("force: {e}")))?;
        self.evolve.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        if self.initial.is_empty() {
            return config("initial must list at least one packet".into());
        }
        if kind != ScenarioKind::ConfigSpace && self.initial.len() != 1 {
            return config(format!("kind {kind} takes exactly one initial packet, got {}", self.initial.len()));
        }
        let total: f64 = self.initial.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > 1e-12 || self.initial.iter().any(|p| p.weight < 0.0) {
            return config(format!("initial packet weights must be non-negative and sum to 1, got {total}"));
        }
        for c in &self.comparisons {
            if !kind.allowed().contains(c) {
                return config(format!("comparison {c:?} is not available for kind {kind}"));
            }
        }
        match (kind, &self.photon) {
            (ScenarioKind::Photon, None) => return config("kind photon needs a [photon] table".into()),
            (ScenarioKind::Photon, Some(p)) => {
                if p.polarisation != 1 && p.polarisation != -1 {
                    return config(format!("photon.polarisation must be 1 or -1, got {}", p.polarisation));
                }
                if !(p.c.is_finite() && p.c > 0.0) {
                    return config(format!("photon.c must be positive, got {}", p.c));
                }
            }
            (_, Some(_)) => return config(format!("[photon] table is only valid for kind photon, not {kind}")),
            _ => {}
        }
        if self.outputs.spectrum {
            let n = self.outputs.spectrum_nodes;
            if kind == ScenarioKind::Photon {
                return config("outputs.spectrum needs a position-velocity grid".into());
            }
            if n < 8 || !n.is_multiple_of(2) || n * n > crate::spectra::MAX_DENSE_DIM {
                return config(format!("outputs.spectrum_nodes must be even, >= 8 and at most 64, got {n}"));
            }
        }
        if self.outputs.snapshot_every > 0 && kind == ScenarioKind::Photon {
            return config("snapshots are written for position-velocity runs only".into());
        }
        if let Some(s) = &self.outputs.series {
            if s.is_empty() || s.contains('/') || s.contains('\\') {
                return config(format!("outputs.series `{s}` must be a plain file name"));
            }
        }
        Ok(())
    }
}

/// Sets `key=value` in a TOML table. Dotted keys descend into tables; numeric
/// components index arrays (`initial.0.x0=1.5`). The value is parsed as TOML and
/// falls back to a plain string.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> ScenarioResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ScenarioError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed table has the key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ScenarioError::Config(format!("override key `{key}` has an empty component")));
    }
    let bad = |what: &str| ScenarioError::Config(format!("override `{key}`: {what}"));
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cursor: &mut toml::Value = root
        .entry(path.first().copied().unwrap_or(last).to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if path.is_empty() {
        *cursor = value;
        return Ok(());
    }
    for part in &path[1..] {
        cursor = step(cursor, part).ok_or_else(|| bad(&format!("cannot descend into `{part}`")))?;
    }
    match cursor {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| bad("array index expected"))?;
            let slot = a.get_mut(i).ok_or_else(|| bad(&format!("index {i} out of range")))?;
            *slot = value;
        }
        _ => return Err(bad("parent is not a table or array")),
    }
    Ok(())
}

fn step<'a>(v: &'a mut toml::Value, part: &str) -> Option<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => Some(t.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()))),
        toml::Value::Array(a) => a.get_mut(part.parse::<usize>().ok()?),
        _ => None,
    }
}

const BUILTINS: [(&str, &str); 7] = [
    ("free", include_str!("../../scenarios/free.toml")),
    ("free-fall", include_str!("../../scenarios/free-fall.toml")),
    ("harmonic", include_str!("../../scenarios/harmonic.toml")),
    ("photon", include_str!("../../scenarios/photon.toml")),
    ("emergence", include_str!("../../scenarios/emergence.toml")),
    ("mixture", include_str!("../../scenarios/mixture.toml")),
    ("dispersion-comparison", include_str!("../../scenarios/dispersion-comparison.toml")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// TOML source of a built-in scenario.
pub fn builtin_toml(name: &str) -> ScenarioResult<&'static str> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))
}

pub fn builtin(name: &str) -> ScenarioResult<ScenarioConfig> {
    ScenarioConfig::from_toml_str(builtin_toml(name)?, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip() {
        for name in builtin_names() {
            let c = builtin(name).unwrap();
            assert_eq!(c.name, name);
            let again = ScenarioConfig::from_toml_str(&c.to_toml_string().unwrap(), &[]).unwrap();
            assert_eq!(again, c, "{name}");
        }
    }

    #[test]
    fn odd_node_count_names_the_field() {
        let e = ScenarioConfig::from_toml_str(builtin_toml("free").unwrap(), &["grid.n_x=7".into()]).unwrap_err();
        assert!(matches!(e, ScenarioError::InvalidGrid(ref m) if m.contains("grid.n_x")), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_kind_and_scenario() {
        let e = ScenarioConfig::from_toml_str(builtin_toml("free").unwrap(), &["kind=\"wigner\"".into()]).unwrap_err();
        assert!(matches!(e, ScenarioError::UnknownKind(ref k) if k == "wigner"));
        assert!(matches!(builtin("nope"), Err(ScenarioError::UnknownScenario(_))));
    }

    #[test]
    fn overrides() {
        let mut t: toml::Table = toml::from_str(builtin_toml("mixture").unwrap()).unwrap();
        apply_override(&mut t, "evolve.n_steps = 32").unwrap();
        apply_override(&mut t, "initial.1.x0=-2.5").unwrap();
        apply_override(&mut t, "force.kind=uniform").unwrap();
        apply_override(&mut t, "name=renamed").unwrap();
        assert_eq!(t["evolve"]["n_steps"].as_integer(), Some(32));
        assert_eq!(t["initial"][1]["x0"].as_float(), Some(-2.5));
        assert_eq!(t["force"]["kind"].as_str(), Some("uniform"));
        assert_eq!(t["name"].as_str(), Some("renamed"));
        assert!(apply_override(&mut t, "initial.9.x0=1").is_err());
        assert!(apply_override(&mut t, "novalue").is_err());
        assert!(apply_override(&mut t, "a..b=1").is_err());
    }

    #[test]
    fn validation_errors_are_config_errors() {
        let free = builtin_toml("free").unwrap();
        for bad in ["initial.0.weight=0.5", "comparisons=[\"photon\"]", "evolve.record_every=7", "hbar=-1", "photon.c=1"] {
            let e = ScenarioConfig::from_toml_str(free, &[bad.to_string()]).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}: {e}");
        }
        let e = ScenarioConfig::from_toml_str(free, &["surprise=1".into()]).unwrap_err();
        assert!(matches!(e, ScenarioError::Config(_)));
    }
}
