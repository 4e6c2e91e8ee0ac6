use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{parse_generation, GenerationError};
use crate::instance::Instance;

fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".to_string()
}
fn default_model() -> String {
    "gpt-3.5-turbo".to_string()
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}
fn default_timeout() -> u64 {
    60
}

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Extra attempts after a timeout, transport error or 5xx reply.
    #[serde(default)]
    pub retries: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: default_endpoint(),
            model: default_model(),
            api_key_env: default_key_env(),
            timeout_secs: default_timeout(),
            retries: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        ChatMessage {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// Blocking chat-completion client. Each call is independent.
#[derive(Debug, Clone)]
pub struct LlmClient {
    cfg: LlmConfig,
    agent: ureq::Agent,
}

impl LlmClient {
    pub fn new(cfg: LlmConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(cfg.timeout_secs.max(1)))
            .build();
        LlmClient { cfg, agent }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    fn api_key(&self) -> Result<String, GenerationError> {
        std::env::var(&self.cfg.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| GenerationError::MissingApiKey(self.cfg.api_key_env.clone()))
    }

    /// Sends the conversation and returns the first choice's text.
    pub fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
    ) -> Result<String, GenerationError> {
        let key = self.api_key()?;
        let body = json!({
            "model": self.cfg.model,
            "temperature": temperature,
            "messages": messages,
        })
        .to_string();
        let mut attempt = 0;
        loop {
            match self.post_once(&key, &body) {
                Err(e) if attempt < self.cfg.retries && e.is_transient() => attempt += 1,
                other => return other,
            }
        }
    }

    fn post_once(&self, key: &str, body: &str) -> Result<String, GenerationError> {
        let response = self
            .agent
            .post(&self.cfg.endpoint)
            .set("Content-Type", "application/json")
            .set("Authorization", &format!("Bearer {key}"))
            .send_string(body);
        let text = match response {
            Ok(r) => r.into_string().map_err(|e| {
                classify_io(&e).unwrap_or_else(|| GenerationError::Transport(e.to_string()))
            })?,
            Err(ureq::Error::Status(code, _)) => return Err(GenerationError::HttpError(code)),
            Err(ureq::Error::Transport(t)) => {
                let timed_out = std::error::Error::source(&t)
                    .and_then(|s| s.downcast_ref::<std::io::Error>())
                    .and_then(classify_io)
                    .is_some()
                    || t.to_string().contains("timed out");
                return Err(if timed_out {
                    GenerationError::Timeout
                } else {
                    GenerationError::Transport(t.to_string())
                });
            }
        };
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| GenerationError::InvalidResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                GenerationError::InvalidResponse("missing choices[0].message.content".into())
            })
    }

    /// One request with the prompt as the only user message; the reply is
    /// parsed leniently.
    pub fn generate(
        &self,
        prompt: &str,
        temperature: f64,
    ) -> Result<Vec<Instance>, GenerationError> {
        let text = self.complete(&[ChatMessage::new("user", prompt)], temperature)?;
        let instances = parse_generation(&text);
        if instances.is_empty() {
            return Err(GenerationError::EmptyGeneration);
        }
        Ok(instances)
    }
}

fn classify_io(e: &std::io::Error) -> Option<GenerationError> {
    matches!(
        e.kind(),
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
    )
    .then_some(GenerationError::Timeout)
}
