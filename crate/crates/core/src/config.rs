//! Scenario configuration: strict TOML with dotted `key=value` overrides.
//!
//! ```toml
//! [resonator]
//! radius = 1.0
//! refractive_index = 3.446
//!
//! [emitter]
//! dipole_debye = 10.0
//! ```
//!
//! Every other key has a default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CouplingForm, LambConvention, ModeLabel, TuningPart};
use crate::error::{Error, Result};
use crate::field::{DelayConvention, ModeFilter};
use crate::mie::ResonatorSpec;
use crate::poles::PoleWindow;

pub const REQUIRED_KEYS: [&str; 3] = ["resonator.radius", "resonator.refractive_index", "emitter.dipole_debye"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Spectrum,
    Poles,
    Portraits,
    Dynamics,
    TwoMode,
    Fieldmap,
    OracleCompare,
    Acceptance,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Spectrum,
        Scenario::Poles,
        Scenario::Portraits,
        Scenario::Dynamics,
        Scenario::TwoMode,
        Scenario::Fieldmap,
        Scenario::OracleCompare,
        Scenario::Acceptance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Poles => "poles",
            Scenario::Portraits => "portraits",
            Scenario::Dynamics => "dynamics",
            Scenario::TwoMode => "two_mode",
            Scenario::Fieldmap => "fieldmap",
            Scenario::OracleCompare => "oracle_compare",
            Scenario::Acceptance => "acceptance",
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Scenario::Spectrum => "1/I_M per order and scattering cross-section on a real k grid",
            Scenario::Poles => "pole catalog (JSON and CSV) with residuals",
            Scenario::Portraits => "|v|^2 of selected pseudomodes on an (r, theta) grid",
            Scenario::Dynamics => "full pseudomode evolution, populations and per-pole metadata",
            Scenario::TwoMode => "reduced two-mode model against the full solution",
            Scenario::Fieldmap => "retarded field intensity on an (r, ct) grid",
            Scenario::OracleCompare => "pseudomode c0 against the finite-box continuum",
            Scenario::Acceptance => "full acceptance suite",
        }
    }

    pub fn parse(name: &str) -> Result<Scenario> {
        Scenario::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown scenario '{name}' (known: {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub dipole_debye: f64,
    /// Radial position; defaults to the sphere surface.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Bare transition frequency; when absent it is tuned so that the shifted
    /// frequency meets `tune_to`.
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default = "default_tune_to")]
    pub tune_to: ModeLabel,
    /// Skip tuning and use `Re z` of `tune_to` directly.
    #[serde(default)]
    pub bare: bool,
}

fn default_tune_to() -> ModeLabel {
    (8, 3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default)]
    pub lamb_convention: LambConvention,
    #[serde(default)]
    pub tuning_part: TuningPart,
    #[serde(default)]
    pub coupling_form: CouplingForm,
    /// Resonant modes left out of the Lamb shift and kept by the two-mode model.
    #[serde(default = "default_resonant")]
    pub resonant: Vec<ModeLabel>,
    /// End of the time grid; defaults to four nominal Rabi periods `4 * 4.63e5 * 10 / d`.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_n_log")]
    pub n_log: usize,
    #[serde(default = "default_n_lin")]
    pub n_lin: usize,
    #[serde(default = "default_t_first")]
    pub t_first: f64,
    #[serde(default = "default_t_switch")]
    pub t_switch: f64,
}

fn default_resonant() -> Vec<ModeLabel> {
    vec![(8, 3), (5, 4)]
}
fn default_n_log() -> usize {
    200
}
fn default_n_lin() -> usize {
    2000
}
fn default_t_first() -> f64 {
    1e-2
}
fn default_t_switch() -> f64 {
    100.0
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            lamb_convention: LambConvention::default(),
            tuning_part: TuningPart::default(),
            coupling_form: CouplingForm::default(),
            resonant: default_resonant(),
            t_max: None,
            n_log: default_n_log(),
            n_lin: default_n_lin(),
            t_first: default_t_first(),
            t_switch: default_t_switch(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_spectrum_k_min")]
    pub k_min: f64,
    #[serde(default = "default_spectrum_k_max")]
    pub k_max: f64,
    #[serde(default = "default_spectrum_points")]
    pub points: usize,
}

fn default_spectrum_k_min() -> f64 {
    0.5
}
fn default_spectrum_k_max() -> f64 {
    6.0
}
fn default_spectrum_points() -> usize {
    2000
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { k_min: default_spectrum_k_min(), k_max: default_spectrum_k_max(), points: default_spectrum_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitConfig {
    #[serde(default = "default_portrait_modes")]
    pub modes: Vec<ModeLabel>,
    #[serde(default = "default_portrait_r_max")]
    pub r_max: f64,
    #[serde(default = "default_portrait_points")]
    pub r_points: usize,
    #[serde(default = "default_portrait_points")]
    pub theta_points: usize,
}

fn default_portrait_modes() -> Vec<ModeLabel> {
    vec![(5, 4), (8, 3)]
}
fn default_portrait_r_max() -> f64 {
    1.5
}
fn default_portrait_points() -> usize {
    121
}

impl Default for PortraitConfig {
    fn default() -> Self {
        PortraitConfig {
            modes: default_portrait_modes(),
            r_max: default_portrait_r_max(),
            r_points: default_portrait_points(),
            theta_points: default_portrait_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default)]
    pub filter: ModeFilter,
    #[serde(default)]
    pub delay: DelayConvention,
    #[serde(default = "default_field_r_max")]
    pub r_max: f64,
    #[serde(default = "default_field_r_points")]
    pub r_points: usize,
    #[serde(default = "default_field_t_max")]
    pub t_max: f64,
    #[serde(default = "default_field_t_points")]
    pub t_points: usize,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub normalize: bool,
}

fn default_field_r_max() -> f64 {
    201.0
}
fn default_field_r_points() -> usize {
    201
}
fn default_field_t_max() -> f64 {
    200.0
}
fn default_field_t_points() -> usize {
    401
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            filter: ModeFilter::All,
            delay: DelayConvention::default(),
            r_max: default_field_r_max(),
            r_points: default_field_r_points(),
            t_max: default_field_t_max(),
            t_points: default_field_t_points(),
            theta: 0.0,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_r_box")]
    pub r_box: f64,
    #[serde(default = "default_oracle_k_max")]
    pub k_max: f64,
    #[serde(default = "default_oracle_times")]
    pub times: usize,
}

fn default_r_box() -> f64 {
    crate::oracle::DEFAULT_R_BOX
}
fn default_oracle_k_max() -> f64 {
    crate::oracle::DEFAULT_K_MAX
}
fn default_oracle_times() -> usize {
    320
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { r_box: default_r_box(), k_max: default_oracle_k_max(), times: default_oracle_times() }
    }
}

fn default_window() -> PoleWindow {
    PoleWindow::default()
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub resonator: ResonatorSpec,
    pub emitter: EmitterConfig,
    #[serde(default = "default_window")]
    pub window: PoleWindow,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub portraits: PortraitConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl ScenarioConfig {
    /// Parse TOML text, apply `key=value` overrides, check required keys and
    /// reject unknown ones.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| lookup(&table, k).is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
        }
        // without overrides the original text is parsed again so errors carry its line numbers
        let parsed = if overrides.is_empty() { toml::from_str(text) } else { toml::Value::Table(table).try_into() };
        let config: ScenarioConfig = parsed.map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ScenarioConfig::from_toml(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Defaults pinned to the silicon sphere with the given dipole.
    pub fn preset(dipole_debye: f64) -> ScenarioConfig {
        ScenarioConfig {
            scenario: None,
            output_dir: None,
            resonator: ResonatorSpec::silicon_microsphere(),
            emitter: EmitterConfig { dipole_debye, radius: None, omega0: None, tune_to: default_tune_to(), bare: false },
            window: PoleWindow::default(),
            dynamics: DynamicsConfig::default(),
            spectrum: SpectrumConfig::default(),
            portraits: PortraitConfig::default(),
            field: FieldConfig::default(),
            oracle: OracleConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.resonator.validate().map_err(|e| Error::Config(format!("resonator: {e}")))?;
        self.window.validate().map_err(|e| Error::Config(format!("window: {e}")))?;
        let e = &self.emitter;
        if !(e.dipole_debye >= 0.0 && e.dipole_debye.is_finite()) {
            return bad(format!("emitter.dipole_debye must be >= 0, got {}", e.dipole_debye));
        }
        if e.radius.is_some_and(|r| !(r > 0.0)) {
            return bad("emitter.radius must be positive".into());
        }
        if e.omega0.is_some_and(|w| !(w > 0.0)) {
            return bad("emitter.omega0 must be positive".into());
        }
        let d = &self.dynamics;
        if d.t_max.is_some_and(|t| !(t > 0.0)) || !(d.t_first > 0.0) || !(d.t_switch > d.t_first) || d.n_lin < 2 {
            return bad("dynamics: time grid parameters must be positive and ordered".into());
        }
        let s = &self.spectrum;
        if !(s.k_min > 0.0 && s.k_max > s.k_min) || s.points < 2 {
            return bad("spectrum: need 0 < k_min < k_max and points >= 2".into());
        }
        let p = &self.portraits;
        if !(p.r_max > 0.0) || p.r_points < 2 || p.theta_points < 2 {
            return bad("portraits: need r_max > 0 and at least 2 points per axis".into());
        }
        let f = &self.field;
        if !(f.r_max > self.resonator.radius) || !(f.t_max > 0.0) || f.r_points < 2 || f.t_points < 2 {
            return bad("field: need r_max > radius, t_max > 0 and at least 2 points per axis".into());
        }
        let o = &self.oracle;
        if !(o.r_box > 0.0 && o.k_max > 0.0) || o.times < 1 {
            return bad("oracle: r_box, k_max and times must be positive".into());
        }
        Ok(())
    }

    pub fn emitter_radius(&self) -> f64 {
        self.emitter.radius.unwrap_or(self.resonator.radius)
    }

    /// End of the dynamics time grid.
    pub fn t_max(&self) -> f64 {
        self.dynamics.t_max.unwrap_or_else(|| 4.0 * NOMINAL_RABI_PERIOD_10D * 10.0 / self.emitter.dipole_debye.max(1e-300))
    }
}

/// Reference vacuum Rabi period at 10 D (ct, µm).
pub const NOMINAL_RABI_PERIOD_10D: f64 = 4.63e5;

fn lookup<'a>(table: &'a toml::Table, key: &str) -> Option<&'a toml::Value> {
    let mut parts = key.split('.');
    let mut cur = table.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_table()?.get(p)?;
    }
    Some(cur)
}

/// `a.b.c=value`; the value is read as a TOML value, or as a string if it
/// does not parse as one.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override '{spec}' has an empty key")));
    }
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}
