use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::generation::{GeneratorConfig, LlmConfig};
use crate::orchestrator::{ChatChainConfig, SimulationConfig};

pub const DEFAULT_THRESHOLD: f64 = 0.30;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Simulated(SimulationConfig),
    ChatChain(ChatChainEnvironment),
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig::Simulated(SimulationConfig::default())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatChainEnvironment {
    #[serde(default)]
    pub chain: ChatChainConfig,
    /// Agent backend settings.
    #[serde(default)]
    pub llm: LlmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopSettings {
    pub tasks_per_iteration: usize,
    pub instances_per_task: usize,
}

impl Default for LoopSettings {
    fn default() -> Self {
        LoopSettings {
            tasks_per_iteration: 5,
            instances_per_task: 8,
        }
    }
}

/// Parameters of the four experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    pub temperatures: Vec<f64>,
    pub samples_per_temperature: usize,
    pub synthetic_pool_size: usize,
    /// Executions per synthetic entry before the strategies are compared.
    pub synthetic_initial_executions: u64,
    pub strategy_rounds: usize,
    pub filtering_instances: usize,
    pub noise_fraction: f64,
    pub noise_temperature: f64,
    pub filtering_replay_rounds: usize,
    pub tasks_per_arm: usize,
    pub warmup_instances_per_task: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            temperatures: vec![0.0, 0.2, 0.6, 1.0, 1.4],
            samples_per_temperature: 300,
            synthetic_pool_size: 100,
            synthetic_initial_executions: 1,
            strategy_rounds: 500,
            filtering_instances: 200,
            noise_fraction: 0.1,
            noise_temperature: 0.6,
            filtering_replay_rounds: 1000,
            tasks_per_arm: 5,
            warmup_instances_per_task: 8,
        }
    }
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_replay_rounds() -> usize {
    50
}
fn default_c() -> f64 {
    crate::pool::SelectionStrategy::DEFAULT_C
}
fn default_true() -> bool {
    true
}

/// Everything a campaign needs; every field has a default, so `{}` is a
/// valid configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// JSON list of `{category, task}`; the bundled list when absent.
    #[serde(default)]
    pub tasks_path: Option<PathBuf>,
    /// JSON list of `{name, explanation}`; the bundled phases when absent.
    #[serde(default)]
    pub vocabulary_path: Option<PathBuf>,
    #[serde(default)]
    pub pool_path: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub filter_threshold: f64,
    #[serde(default = "default_replay_rounds")]
    pub replay_rounds: usize,
    #[serde(default = "default_c")]
    pub uct_c: f64,
    #[serde(default = "default_true")]
    pub parallel: bool,
    #[serde(default)]
    pub generation: GeneratorConfig,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    #[serde(default, rename = "loop")]
    pub loop_settings: LoopSettings,
    #[serde(default)]
    pub experiments: ExperimentSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(0.0..=1.0).contains(&self.filter_threshold) {
            return Err(HarnessError::Config(format!(
                "filter_threshold {} is outside [0, 1]",
                self.filter_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.experiments.noise_fraction) {
            return Err(HarnessError::Config(
                "noise_fraction must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=crate::generation::MAX_TEMPERATURE).contains(&self.experiments.noise_temperature)
        {
            return Err(HarnessError::Config(
                "noise_temperature must be in [0, 1.5]".into(),
            ));
        }
        self.generation
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.filter_threshold, 0.30);
        assert_eq!(cfg.uct_c, 1.0);
        assert_eq!(cfg.generation.temperature, 0.6);
        assert_eq!(cfg.generation.experiential_count, 3);
        assert!(matches!(cfg.environment, EnvironmentConfig::Simulated(ref s) if s.p_true == 0.8));
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::default();
        let again: RunConfig = serde_json::from_value(cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_json(r#"{"filter_threshold": 1.5}"#).is_err());
        assert!(
            RunConfig::from_json(r#"{"generation": {"backend": "mock", "temperature": 3}}"#)
                .is_err()
        );
        let chat = RunConfig::from_json(
            r#"{"environment": {"mode": "chat_chain", "chain": {"compile_cmd": ["true"]}}}"#,
        )
        .unwrap();
        assert!(
            matches!(chat.environment, EnvironmentConfig::ChatChain(ref c) if c.chain.compile_cmd == ["true"])
        );
    }
}
