//! Prompt assembly, parsing of generator output, and the two generator
//! backends (a seeded mock and an HTTP chat-completion client).

mod llm;
mod mock;
mod prompt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llm::{ChatMessage, LlmClient, LlmConfig};
pub use mock::{
    default_hallucinations, mock_generate, MockConfig, MutationWeights, HALLUCINATED_PHASES,
};
pub use prompt::{
    build_prompt, parse_generation, parse_generation_detailed, ParsedGeneration, PromptSpec,
    DEFAULT_OUTPUT_FORMAT,
};

use crate::instance::Instance;
use crate::mining::ProcessTree;
use crate::par::Parallelism;

pub const MAX_TEMPERATURE: f64 = 1.5;
pub const DEFAULT_TEMPERATURE: f64 = 0.6;
pub const DEFAULT_EXPERIENTIAL_COUNT: usize = 3;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GenerationError {
    #[error("temperature {0} is outside [0, 1.5]")]
    TemperatureOutOfRange(f64),
    #[error("the mock generator needs at least one seed instance")]
    NoSeeds,
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("request timed out")]
    Timeout,
    #[error("endpoint answered with HTTP status {0}")]
    HttpError(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    InvalidResponse(String),
    #[error("the response contained no parseable instance")]
    EmptyGeneration,
}

impl GenerationError {
    fn is_transient(&self) -> bool {
        match self {
            GenerationError::Timeout | GenerationError::Transport(_) => true,
            GenerationError::HttpError(code) => *code >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum BackendConfig {
    Mock {
        /// Defaults to the canonical instance when absent.
        #[serde(default)]
        seeds: Vec<Instance>,
        #[serde(default = "default_hallucinations")]
        hallucination_vocab: Vec<crate::instance::Phase>,
        #[serde(default)]
        weights: MutationWeights,
    },
    Llm(LlmConfig),
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_experiential() -> usize {
    DEFAULT_EXPERIENTIAL_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub backend: BackendConfig,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Example instances shown per prompt.
    #[serde(default = "default_experiential")]
    pub experiential_count: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            backend: BackendConfig::Mock {
                seeds: Vec::new(),
                hallucination_vocab: default_hallucinations(),
                weights: MutationWeights::default(),
            },
            temperature: DEFAULT_TEMPERATURE,
            experiential_count: DEFAULT_EXPERIENTIAL_COUNT,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if !(0.0..=MAX_TEMPERATURE).contains(&self.temperature) {
            return Err(GenerationError::TemperatureOutOfRange(self.temperature));
        }
        Ok(())
    }
}

/// A ready-to-use backend.
#[derive(Debug, Clone)]
pub enum Generator {
    Mock(MockConfig),
    Llm(LlmClient),
}

/// One generation call. The mock draws from the prompt's experiential
/// instances (or its own seeds when there are none) and honours the
/// constraint; the LLM reads the prompt text instead.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub spec: &'a PromptSpec,
    pub constraint: Option<&'a ProcessTree>,
    pub temperature: f64,
    pub count: usize,
    pub stream: u64,
}

impl Generator {
    /// Builds the backend; `fallback_seed` fills in an empty mock seed list.
    pub fn from_config(cfg: &GeneratorConfig, rng_seed: u64, fallback_seed: &Instance) -> Self {
        match &cfg.backend {
            BackendConfig::Mock {
                seeds,
                hallucination_vocab,
                weights,
            } => Generator::Mock(MockConfig {
                seeds: if seeds.is_empty() {
                    vec![fallback_seed.clone()]
                } else {
                    seeds.clone()
                },
                hallucination_vocab: hallucination_vocab.clone(),
                rng_seed,
                weights: *weights,
            }),
            BackendConfig::Llm(llm) => Generator::Llm(LlmClient::new(llm.clone())),
        }
    }

    pub fn generate(
        &self,
        req: &GenerationRequest<'_>,
        mode: Parallelism,
    ) -> Result<Vec<Instance>, GenerationError> {
        match self {
            Generator::Mock(cfg) => mock_generate(
                cfg,
                req.spec.experiential_instances(),
                req.temperature,
                req.count,
                req.stream,
                req.constraint,
                mode,
            ),
            Generator::Llm(client) => {
                if !(0.0..=MAX_TEMPERATURE).contains(&req.temperature) {
                    return Err(GenerationError::TemperatureOutOfRange(req.temperature));
                }
                let mut out = client.generate(&build_prompt(req.spec), req.temperature)?;
                out.truncate(req.count.max(1));
                Ok(out)
            }
        }
    }
}
