//! JSON run configuration.
//!
//! Every section is optional except `model`, which must name at least `q`
//! and `j_coupling` whenever a file is supplied. Unknown keys anywhere are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tfdmagic_core::dynamics::CurveOptions;
use tfdmagic_core::fitkit::{FitModel, FitOptions};
use tfdmagic_core::sd::{SaddleOptions, ThermalOptions};
use tfdmagic_core::ModelParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ed,
    Saddle,
    Sff,
    PhaseDiagram,
    Verify,
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_n")]
    pub n_majorana: usize,
    pub q: usize,
    pub j_coupling: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    8
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_majorana: 8,
            q: 4,
            j_coupling: 1.0,
            seed: 0,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.n_majorana, self.q, self.j_coupling, self.seed)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSection {
    pub n_im: usize,
    pub n_re: usize,
}

impl Default for ContourSection {
    fn default() -> Self {
        Self { n_im: 200, n_re: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub betas: Vec<f64>,
    /// Explicit time grid; overrides `t_min`/`t_max`/`dt` when present.
    pub times: Option<Vec<f64>>,
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
    pub realizations: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            betas: vec![1.0],
            times: None,
            t_min: 0.0,
            t_max: 10.0,
            dt: 0.5,
            realizations: 10,
        }
    }
}

impl SweepSection {
    pub fn time_grid(&self) -> Vec<f64> {
        if let Some(t) = &self.times {
            return t.clone();
        }
        let n = ((self.t_max - self.t_min) / self.dt).round().max(0.0) as usize;
        (0..=n)
            .map(|k| self.t_min + (self.t_max - self.t_min) * k as f64 / n.max(1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub saddle: SaddleOptions,
    pub thermal: ThermalOptions,
    pub fit: FitOptions,
    /// Bisection resolution for transition times.
    pub resolution: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            saddle: SaddleOptions::default(),
            thermal: ThermalOptions::default(),
            fit: FitOptions::default(),
            resolution: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

/// Which branch of a saddle CSV a fit reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitColumn {
    M2Sym,
    M2Ssb,
    M2Dom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Saddle CSV (`t, m2_sym, …`) or boundary CSV (`beta_j, t_star_j, …`).
    pub input: PathBuf,
    pub model: FitModel,
    #[serde(default = "default_column")]
    pub column: FitColumn,
    #[serde(default)]
    pub t_min: f64,
    #[serde(default = "default_tmax")]
    pub t_max: f64,
}

fn default_column() -> FitColumn {
    FitColumn::M2Ssb
}

fn default_tmax() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    pub model: ModelSection,
    #[serde(default)]
    pub contour: ContourSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub io: IoSection,
    #[serde(default)]
    pub fit: Option<FitSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            model: ModelSection::default(),
            contour: ContourSection::default(),
            sweep: SweepSection::default(),
            solver: SolverSection::default(),
            io: IoSection::default(),
            fit: None,
        }
    }
}

const REQUIRED: &[&str] = &["model", "model.q", "model.j_coupling"];

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |cur, key| cur.get(key))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::validation("config_parse", format!("invalid JSON: {e}")))?;
        if !value.is_object() {
            return Err(CliError::validation("config_parse", "config must be a JSON object"));
        }
        for key in REQUIRED {
            if lookup(&value, key).is_none() {
                return Err(CliError::validation(
                    "missing_key",
                    format!("missing required key `{key}`"),
                ));
            }
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::validation("invalid_key", format!("at `{path}`: {}", e.inner()))
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation("config_read", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            q: self.model.q,
            j: self.model.j_coupling,
            n_im: self.contour.n_im,
            n_re: self.contour.n_re,
            saddle: self.solver.saddle,
            thermal: self.solver.thermal,
            ssb: true,
            resolution: self.solver.resolution,
        }
    }

    /// Checks everything a run could touch before any computation starts.
    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::validation("invalid_value", m));
        let m = &self.model;
        if m.q < 2 || m.q % 2 != 0 {
            return bad(format!("model.q must be even and >= 2, got {}", m.q));
        }
        if !m.j_coupling.is_finite() || m.j_coupling < 0.0 {
            return bad(format!("model.j_coupling must be finite and >= 0, got {}", m.j_coupling));
        }
        if mode == Mode::Ed {
            m.params()
                .validate()
                .map_err(|e| CliError::validation("invalid_value", format!("model: {e}")))?;
            if m.n_majorana > 10 {
                return bad(format!("model.n_majorana must be <= 10 for ED, got {}", m.n_majorana));
            }
            if self.sweep.realizations == 0 {
                return bad("sweep.realizations must be positive".into());
            }
        }
        if self.sweep.betas.is_empty() && !matches!(mode, Mode::Verify | Mode::Fit) {
            return bad("sweep.betas must not be empty".into());
        }
        if self.sweep.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("sweep.betas must be finite and >= 0".into());
        }
        let times = self.sweep.time_grid();
        if self.sweep.times.is_none() && !(self.sweep.dt > 0.0 && self.sweep.t_max >= self.sweep.t_min) {
            return bad("sweep needs dt > 0 and t_max >= t_min".into());
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sweep times must be non-negative and increasing".into());
        }
        if matches!(mode, Mode::Saddle | Mode::PhaseDiagram) {
            if self.contour.n_im < 2 || self.contour.n_re < 2 {
                return bad("contour.n_im and contour.n_re must be >= 2".into());
            }
            if self.sweep.betas.iter().any(|&b| b == 0.0) {
                return bad("saddle sweeps need beta > 0".into());
            }
            self.solver
                .saddle
                .validate()
                .map_err(|e| CliError::validation("invalid_value", format!("solver.saddle: {e}")))?;
            if !(self.solver.resolution > 0.0) {
                return bad("solver.resolution must be positive".into());
            }
        }
        if matches!(mode, Mode::Saddle | Mode::PhaseDiagram | Mode::Sff) {
            self.solver
                .thermal
                .validate()
                .map_err(|e| CliError::validation("invalid_value", format!("solver.thermal: {e}")))?;
        }
        if mode == Mode::Sff && self.sweep.betas.iter().any(|&b| b == 0.0) {
            return bad("sff sweeps need beta > 0".into());
        }
        if mode == Mode::Fit && self.fit.is_none() {
            return Err(CliError::validation("missing_key", "missing required key `fit`"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_q_is_named() {
        let err = RunConfig::from_json(r#"{"model": {"j_coupling": 1.0}}"#).unwrap_err();
        assert!(err.message.contains("model.q"), "{}", err.message);
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_json(r#"{"model": {"q": 4, "j_coupling": 1.0, "colour": 1}}"#).unwrap_err();
        assert!(err.message.contains("colour"), "{}", err.message);
        let err = RunConfig::from_json(r#"{"model": {"q": 4, "j_coupling": 1.0}, "extra": {}}"#).unwrap_err();
        assert!(err.message.contains("extra"), "{}", err.message);
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(r#"{"model": {"q": 4, "j_coupling": 1.0}}"#).unwrap();
        assert_eq!(c.contour.n_im, 200);
        assert_eq!(c.sweep.time_grid().len(), 21);
        assert!(c.validate(Mode::Saddle).is_ok());
    }

    #[test]
    fn nested_solver_keys() {
        let c = RunConfig::from_json(
            r#"{"model": {"q": 4, "j_coupling": 1.0},
                "solver": {"saddle": {"tol": 1e-9}, "thermal": {"n_freq": 1024}}}"#,
        )
        .unwrap();
        assert_eq!(c.solver.saddle.tol, 1e-9);
        assert_eq!(c.solver.saddle.damping, 0.5);
        assert_eq!(c.solver.thermal.n_freq, 1024);
    }
}
