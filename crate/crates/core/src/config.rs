//! JSON configuration for the command-line runs and the experiments. Every
//! parser rejects unknown fields and validates before returning.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{LimitConfig, ScalingConfig, TheoremAConfig, TheoremBConfig};
use crate::nonlinearity::{Nonlinearity, NonlinearityModel};
use crate::shooting::ProblemParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Parse(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub from: f64,
    pub to: f64,
    pub n: usize,
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            from: 1.5,
            to: 12.0,
            n: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindBlock {
    pub k: usize,
    pub bracket: [f64; 2],
    #[serde(default = "default_find_tol")]
    pub tol: f64,
}

fn default_find_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub out: Option<PathBuf>,
    pub phase: Option<PathBuf>,
    pub format: Format,
}

/// Settings shared by `solve`, `classify`, `scan` and `find`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: NonlinearityModel,
    pub params: ProblemParams,
    pub alpha: Option<f64>,
    pub scan: Option<ScanBlock>,
    pub find: Option<FindBlock>,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: NonlinearityModel::PowerDifference { p: 3.0 },
            params: ProblemParams::default(),
            alpha: None,
            scan: None,
            find: None,
            output: OutputBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        Nonlinearity::new(self.model.clone()).map_err(|e| invalid(&e))?;
        self.params.validate().map_err(|e| invalid(&e))?;
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "alpha = {a} must be finite and positive"
                )));
            }
        }
        if let Some(s) = &self.scan {
            if !(s.from > 0.0 && s.to > s.from && s.to.is_finite() && s.n >= 2) {
                return Err(ConfigError::Invalid(format!(
                    "scan needs 0 < from < to and n >= 2, got {s:?}"
                )));
            }
        }
        if let Some(f) = &self.find {
            let [a, b] = f.bracket;
            if f.k == 0 || !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && a != b) {
                return Err(ConfigError::Invalid(format!(
                    "find needs k >= 1 and two distinct positive endpoints, got {f:?}"
                )));
            }
            if !(f.tol > 0.0 && f.tol.is_finite()) {
                return Err(ConfigError::Invalid("find tol must be positive".into()));
            }
        }
        Ok(())
    }
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_theorem_a(text: &str) -> Result<TheoremAConfig, ConfigError> {
    let cfg: TheoremAConfig = serde_json::from_str(text)?;
    cfg.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_theorem_b(text: &str) -> Result<TheoremBConfig, ConfigError> {
    let cfg: TheoremBConfig = serde_json::from_str(text)?;
    cfg.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_limit_config(text: &str) -> Result<LimitConfig, ConfigError> {
    let cfg: LimitConfig = serde_json::from_str(text)?;
    cfg.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_scaling_config(text: &str) -> Result<ScalingConfig, ConfigError> {
    let cfg: ScalingConfig = serde_json::from_str(text)?;
    cfg.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default_run() {
        let cfg = parse_run_config("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(
            parse_run_config(r#"{"modle": {}}"#),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            parse_run_config(r#"{"params": {"N": 3, "rtol": 1}}"#),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn nested_model_and_params_parse() {
        let cfg = parse_run_config(
            r#"{"model": {"model": "pure-power", "p": 5}, "params": {"N": 3},
                "scan": {"from": 0.5, "to": 4, "n": 10}, "output": {"format": "json"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.model, NonlinearityModel::PurePower { p: 5.0 });
        assert_eq!(cfg.output.format, Format::Json);
        assert_eq!(cfg.scan.unwrap().n, 10);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            r#"{"params": {"N": 2}}"#,
            r#"{"alpha": -1}"#,
            r#"{"scan": {"from": 3, "to": 1, "n": 5}}"#,
            r#"{"find": {"k": 0, "bracket": [3, 8]}}"#,
            r#"{"model": {"model": "power-diff", "p": 0.5}}"#,
        ] {
            assert!(
                matches!(parse_run_config(bad), Err(ConfigError::Invalid(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn experiment_defaults_round_trip() {
        let a = serde_json::to_string(&TheoremAConfig::default()).unwrap();
        assert_eq!(parse_theorem_a(&a).unwrap(), TheoremAConfig::default());
        let b = serde_json::to_string(&TheoremBConfig::default()).unwrap();
        assert_eq!(parse_theorem_b(&b).unwrap(), TheoremBConfig::default());
        let l = serde_json::to_string(&LimitConfig::default()).unwrap();
        assert_eq!(parse_limit_config(&l).unwrap(), LimitConfig::default());
        let s = serde_json::to_string(&ScalingConfig::default()).unwrap();
        assert_eq!(parse_scaling_config(&s).unwrap(), ScalingConfig::default());
        assert!(parse_theorem_a("[1, 2]").is_err());
    }
}
