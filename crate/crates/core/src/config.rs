//! JSON experiment configuration.
//!
//! Unknown keys are rejected everywhere. Every error message carries the
//! config path and, when it can be located, the line of the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::EvaluationSpec;
use crate::mdp::{Domain, GenerativeModel};
use crate::optimize::{OptimizerConfig, SearchSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub evaluation: EvaluationSection,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_box: Option<ThetaBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub initial_states: usize,
    pub horizon: usize,
    pub budget: usize,
    #[serde(default)]
    pub train_seed: u64,
    /// Defaults to `train_seed + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_seed: Option<u64>,
}

/// Same bounds in every θ component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaBox {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ThetaBox {
    fn default() -> Self {
        ThetaBox { lower: -10.0, upper: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub budgets: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Write real timings into the wallclock columns instead of zeros.
    #[serde(default)]
    pub record_wallclock: bool,
}

/// A parsed config together with its source text, for error anchoring.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    source: String,
}

impl LoadedConfig {
    /// Config error pointing at the first line mentioning `key`.
    pub fn error_at(&self, key: &str, message: impl std::fmt::Display) -> Error {
        match line_of_key(&self.source, key) {
            Some(line) => Error::Config(format!("{}:{line}: {message}", self.path.display())),
            None => Error::Config(format!("{}: {message}", self.path.display())),
        }
    }

    /// Semantic checks beyond what the schema enforces.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.domain.validate().map_err(|e| self.error_at("domain", strip_config_prefix(e)))?;
        c.spec().validate().map_err(|e| self.error_at("evaluation", strip_config_prefix(e)))?;
        let space = c.theta_space().map_err(|e| self.error_at("theta_box", strip_config_prefix(e)))?;
        c.optimizer.validate(&space).map_err(|e| self.error_at("optimizer", strip_config_prefix(e)))?;
        if let Some(sweep) = &c.sweep {
            if sweep.budgets.is_empty() {
                return Err(self.error_at("budgets", "sweep.budgets must not be empty"));
            }
            if sweep.budgets[0] == 0 || sweep.budgets.windows(2).any(|w| w[0] >= w[1]) {
                return Err(self.error_at("budgets", "sweep.budgets must be positive and strictly ascending"));
            }
        }
        Ok(())
    }
}

fn strip_config_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

fn line_of_key(source: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    source.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn parse(source: &str, path: &Path) -> Result<LoadedConfig> {
        let config: ExperimentConfig = serde_json::from_str(source)
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), e.line())))?;
        Ok(LoadedConfig { config, path: path.to_path_buf(), source: source.to_string() })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        ExperimentConfig::parse(&source, path)
    }

    pub fn holdout_seed(&self) -> u64 {
        self.evaluation.holdout_seed.unwrap_or(self.evaluation.train_seed.wrapping_add(1))
    }

    pub fn spec(&self) -> EvaluationSpec {
        EvaluationSpec {
            domain: self.domain.clone(),
            initial_states: self.evaluation.initial_states,
            train_seed: self.evaluation.train_seed,
            holdout_seed: self.holdout_seed(),
            horizon: self.evaluation.horizon,
            budget: self.evaluation.budget,
        }
    }

    pub fn theta_space(&self) -> Result<SearchSpace> {
        let b = self.theta_box.unwrap_or_default();
        SearchSpace::cube(self.domain.feature_dimension(), b.lower, b.upper)
            .map_err(|_| Error::Config(format!("theta_box needs finite lower < upper, got [{}, {}]", b.lower, b.upper)))
    }

    pub fn record_wallclock(&self) -> bool {
        self.output.as_ref().is_some_and(|o| o.record_wallclock)
    }

    /// Hex SHA-256 over everything except the output section.
    pub fn hash(&self) -> String {
        let hashed = ExperimentConfig { output: None, ..self.clone() };
        let bytes = serde_json::to_vec(&hashed).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
  "domain": {"key": "chain_walk", "states": 5, "discount": 0.9},
  "evaluation": {"initial_states": 1, "horizon": 4, "budget": 5},
  "optimizer": {"kind": "cem", "iterations": 20},
  "seed": 0
}"#;

    fn parse(text: &str) -> Result<LoadedConfig> {
        ExperimentConfig::parse(text, Path::new("exp.json"))
    }

    #[test]
    fn parses_a_minimal_config() {
        let loaded = parse(CHAIN).unwrap();
        loaded.validate().unwrap();
        let spec = loaded.config.spec();
        assert_eq!(spec.holdout_seed, 1);
        assert_eq!(loaded.config.theta_space().unwrap().dimension(), 5);
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let text = CHAIN.replace("\"budget\"", "\"budgett\"");
        let msg = parse(&text).unwrap_err().to_string();
        assert!(msg.contains("budgett"), "{msg}");
        assert!(msg.contains("exp.json:3:"), "{msg}");
    }

    #[test]
    fn empty_sweep_is_invalid() {
        let text = CHAIN.replace("\"seed\": 0", "\"seed\": 0,\n  \"sweep\": {\"budgets\": []}");
        let loaded = parse(&text).unwrap();
        let msg = loaded.validate().unwrap_err().to_string();
        assert!(msg.contains("exp.json:6:"), "{msg}");
    }

    #[test]
    fn bad_elite_is_anchored_to_optimizer() {
        let text = CHAIN.replace("\"iterations\": 20", "\"elite\": 99");
        let msg = parse(&text).unwrap().validate().unwrap_err().to_string();
        assert!(msg.contains("exp.json:4:") && msg.contains("elite"), "{msg}");
    }

    #[test]
    fn hash_ignores_output_but_not_seed() {
        let a = parse(CHAIN).unwrap().config;
        let mut b = a.clone();
        b.output = Some(OutputSection { dir: Some("elsewhere".into()), record_wallclock: true });
        assert_eq!(a.hash(), b.hash());
        b.seed = 3;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let msg = parse("{\n  \"domain\": ,\n}").unwrap_err().to_string();
        assert!(msg.contains("exp.json:2:"), "{msg}");
    }
}
