//! End-to-end campaigns: the generate, execute, replay, filter, mine and
//! describe loop, plus the four desk-scale experiments.

mod campaign;
mod config;
mod experiments;
mod report;
mod tasks;

use thiserror::Error;

pub use campaign::{
    mine_entries, run_loop, Campaign, Executor, IterationSummary, MinedModel, RunRecord,
};
pub use config::{
    ChatChainEnvironment, EnvironmentConfig, ExperimentSettings, LoopSettings, RunConfig,
    DEFAULT_SEED, DEFAULT_THRESHOLD,
};
pub use experiments::{
    experiment_enhancement, experiment_filtering, experiment_strategies, experiment_temperature,
    noisy_pool, spearman, synthetic_pool, STRATEGIES,
};
pub use report::{ratio, ExperimentReport};
pub use tasks::{builtin_tasks, in_category, load_tasks, Task, CATEGORIES};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("pool: {0}")]
    Pool(#[from] crate::pool::PoolError),
    #[error("{context}: {message}")]
    Step { context: String, message: String },
}

impl HarnessError {
    pub(crate) fn step(context: impl Into<String>, err: impl std::fmt::Display) -> Self {
        HarnessError::Step {
            context: context.into(),
            message: err.to_string(),
        }
    }
}
