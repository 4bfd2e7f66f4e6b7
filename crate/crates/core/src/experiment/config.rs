//! The JSON run configuration. Unknown keys are rejected and every numeric
//! precondition is re-checked at load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::scheme::{SchemeParams, WindowPolicy};
use crate::spectral::{random_divfree_field, taylor_green, taylor_green_shifted, Dealias, Grid, MollifierKind, VectorField};

/// Environment variables `CALORIC_MHD__SECTION__KEY=value` override config keys.
pub const ENV_PREFIX: &str = "CALORIC_MHD__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "default_box")]
    pub box_length: f64,
}

fn default_box() -> f64 {
    std::f64::consts::TAU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub window_policy: WindowPolicy,
    #[serde(default)]
    pub mollifier_kind: MollifierKind,
    #[serde(default)]
    pub dealias: Dealias,
}

fn default_picard_tol() -> f64 {
    SchemeParams::default().picard_tol
}

fn default_max_iters() -> usize {
    SchemeParams::default().max_picard_iters
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `v0` the Taylor-Green vortex, `h0` its phase-shifted copy
    TaylorGreen,
    /// `h0 = v0`, the Taylor-Green vortex
    ElsasserAligned,
    /// independent seeded solenoidal fields
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
    pub amplitude: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
}

fn default_decay() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditName {
    GlobalEnergy,
    LocalEnergy,
    Apriori,
    CaloricBounds,
    NonlinearNorms,
    Pressure,
    Oscillation,
}

impl AuditName {
    pub const ALL: [AuditName; 7] = [
        AuditName::GlobalEnergy,
        AuditName::LocalEnergy,
        AuditName::Apriori,
        AuditName::CaloricBounds,
        AuditName::NonlinearNorms,
        AuditName::Pressure,
        AuditName::Oscillation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuditName::GlobalEnergy => "global_energy",
            AuditName::LocalEnergy => "local_energy",
            AuditName::Apriori => "apriori",
            AuditName::CaloricBounds => "caloric_bounds",
            AuditName::NonlinearNorms => "nonlinear_norms",
            AuditName::Pressure => "pressure",
            AuditName::Oscillation => "oscillation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// relative `‖∇Π - Σ∇Πⁱ‖` in `L^{3/2}L^{9/8}`
    #[serde(default = "default_identity")]
    pub pressure_identity: f64,
    /// relative residual of `ΔΠ = -∂_i∂_j N_ij`
    #[serde(default = "default_poisson")]
    pub poisson: f64,
}

fn default_identity() -> f64 {
    1e-8
}

fn default_poisson() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { pressure_identity: default_identity(), poisson: default_poisson() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditsConfig {
    #[serde(default = "all_audits")]
    pub names: Vec<AuditName>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn all_audits() -> Vec<AuditName> {
    AuditName::ALL.to_vec()
}

impl Default for AuditsConfig {
    fn default() -> Self {
        Self { names: all_audits(), tolerances: Tolerances::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub scheme: SchemeConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub audits: AuditsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::with_dealias(self.grid.n, self.grid.box_length, self.scheme.dealias).map_err(config_err)
    }

    pub fn params(&self, execution: Execution) -> SchemeParams {
        let s = &self.scheme;
        SchemeParams {
            epsilon: s.epsilon,
            horizon: s.horizon,
            dt: s.dt,
            picard_tol: s.picard_tol,
            max_picard_iters: s.max_iters,
            window_policy: s.window_policy,
            mollifier: s.mollifier_kind,
            execution,
            ..SchemeParams::default()
        }
    }

    /// Re-checks the module preconditions; failures are config errors.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params(Execution::Sequential).validate().map_err(config_err)?;
        let i = &self.initial;
        if !(i.amplitude >= 0.0 && i.amplitude.is_finite()) {
            return Err(config_err(format!("initial.amplitude must be finite and nonnegative, got {}", i.amplitude)));
        }
        if !(i.decay > 0.0 && i.decay.is_finite()) {
            return Err(config_err(format!("initial.decay must be positive, got {}", i.decay)));
        }
        let t = &self.audits.tolerances;
        if !(t.pressure_identity > 0.0 && t.poisson > 0.0) {
            return Err(config_err("audit tolerances must be positive"));
        }
        Ok(())
    }

    /// Initial data of the configured preset on `grid`.
    pub fn initial_data(&self, grid: &Grid) -> Result<(VectorField, VectorField)> {
        let i = &self.initial;
        Ok(match i.preset {
            Preset::TaylorGreen => (taylor_green(grid, i.amplitude), taylor_green_shifted(grid, i.amplitude)),
            Preset::ElsasserAligned => {
                let v = taylor_green(grid, i.amplitude);
                (v.clone(), v)
            }
            Preset::Random => (
                random_divfree_field(grid, i.seed, i.amplitude, i.decay)?,
                random_divfree_field(grid, i.seed.wrapping_add(1), i.amplitude, i.decay)?,
            ),
        })
    }
}

/// Sets `CALORIC_MHD__A__B=x` as `value.a.b = x`; `x` is parsed as JSON and
/// kept as a string otherwise.
pub fn apply_env_overrides(value: &mut Value, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(config_err(format!("malformed override {key}")));
        }
        let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        let mut slot = &mut *value;
        for p in &path[..path.len() - 1] {
            let obj = slot.as_object_mut().ok_or_else(|| config_err(format!("override {key} descends into a non-object")))?;
            slot = obj.entry(p.clone()).or_insert_with(|| Value::Object(Default::default()));
        }
        let obj = slot.as_object_mut().ok_or_else(|| config_err(format!("override {key} descends into a non-object")))?;
        obj.insert(path[path.len() - 1].clone(), parsed);
    }
    Ok(())
}

pub fn parse_config(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<RunConfig> {
    let mut value: Value = serde_json::from_str(text).map_err(config_err)?;
    apply_env_overrides(&mut value, env)?;
    let config: RunConfig = serde_json::from_value(value).map_err(config_err)?;
    config.validate()?;
    Ok(config)
}

/// Reads, overrides and validates a config file.
pub fn load_config(path: &Path, env: impl IntoIterator<Item = (String, String)>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_config(&text, env).map_err(|e| match e {
        Error::Config(m) => config_err(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "grid": {"n": 8},
        "scheme": {"epsilon": 0.5, "dt": 0.03125, "horizon": 0.125},
        "initial": {"preset": "random", "seed": 3, "amplitude": 0.01}
    }"#;

    fn none() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse_config(BASE, none()).unwrap();
        assert_eq!(c.audits.names.len(), AuditName::ALL.len());
        assert_eq!(c.scheme.window_policy, WindowPolicy::Automatic);
        assert_eq!(c.grid.box_length, std::f64::consts::TAU);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = BASE.replace("\"n\": 8", "\"n\": 8, \"m\": 1");
        assert!(matches!(parse_config(&bad, none()), Err(Error::Config(_))));
        let bad = BASE.replace("\"random\"", "\"vortex\"");
        assert!(matches!(parse_config(&bad, none()), Err(Error::Config(_))));
    }

    #[test]
    fn preconditions_are_rechecked() {
        for (from, to) in [("\"dt\": 0.03125", "\"dt\": -1"), ("\"n\": 8", "\"n\": 2"), ("\"amplitude\": 0.01", "\"amplitude\": -1")] {
            assert!(matches!(parse_config(&BASE.replace(from, to), none()), Err(Error::Config(_))), "{to}");
        }
    }

    #[test]
    fn env_overrides_apply_and_fail_closed() {
        let env = vec![("CALORIC_MHD__SCHEME__DT".to_string(), "0.015625".to_string()), ("OTHER".into(), "x".into())];
        assert_eq!(parse_config(BASE, env).unwrap().scheme.dt, 0.015625);
        let env = vec![("CALORIC_MHD__INITIAL__PRESET".to_string(), "taylor_green".to_string())];
        assert_eq!(parse_config(BASE, env).unwrap().initial.preset, Preset::TaylorGreen);
        let env = vec![("CALORIC_MHD__SCHEME__NOPE".to_string(), "1".to_string())];
        assert!(matches!(parse_config(BASE, env), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_windows_parse() {
        let c = parse_config(&BASE.replace("\"horizon\": 0.125", "\"horizon\": 0.125, \"window_policy\": {\"fixed\": 0.0625}"), none()).unwrap();
        assert_eq!(c.scheme.window_policy, WindowPolicy::Fixed(0.0625));
    }
}
