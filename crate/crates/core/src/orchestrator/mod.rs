//! Executes instances phase by phase, either against a simulated compiler or
//! through a two-agent chat chain, and reports success as feedback.

mod chat;
mod roles;
mod sim;

use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chat::{
    run_chat, terminal_content, AgentBackend, ChatConfig, ChatError, ChatRecord, LlmAgent,
    PhaseBrief, Turn, REFLECTION_MARKER, SOLUTION_CLOSE, SOLUTION_OPEN,
};
pub use roles::{Role, RoleMap, RolePair, FALLBACK_ROLES};
pub use sim::{
    default_hidden_model, is_alien, SimulatedEnvironment, SimulationConfig, DEFAULT_P_FALSE,
    DEFAULT_P_TRUE,
};

use crate::instance::{Instance, PhaseVocabulary};

#[derive(Debug, Error)]
pub enum ExecutionError {
    #[error("probabilities must satisfy 0 <= p_false < p_true <= 1 (got {p_true}, {p_false})")]
    InvalidProbabilities { p_true: f64, p_false: f64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("agent backend failed in phase {phase}: {message}")]
    Backend { phase: String, message: String },
    #[error("workspace: {0}")]
    Workspace(#[from] std::io::Error),
    #[error("could not start compile command {command:?}: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionResult {
    pub instance: Instance,
    pub success: bool,
    /// Empty for simulated executions.
    pub per_phase: Vec<ChatRecord>,
    pub notes: String,
}

/// Phases whose solution is written to the artifact file.
pub const CODE_PHASES: [&str; 2] = ["Coding", "CodeComplete"];

fn default_compile_cmd() -> Vec<String> {
    ["python3", "-m", "py_compile", "{file}"]
        .map(String::from)
        .to_vec()
}
fn default_artifact() -> String {
    "main.py".to_string()
}
fn default_chat_temperature() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatChainConfig {
    #[serde(default)]
    pub role_map: RoleMap,
    /// Program and arguments; `{file}` and `{dir}` are replaced by the
    /// artifact path and the workspace directory.
    #[serde(default = "default_compile_cmd")]
    pub compile_cmd: Vec<String>,
    #[serde(default = "default_artifact")]
    pub artifact: String,
    #[serde(default)]
    pub chat: ChatConfig,
    #[serde(default = "default_chat_temperature")]
    pub temperature: f64,
}

impl Default for ChatChainConfig {
    fn default() -> Self {
        ChatChainConfig {
            role_map: RoleMap::default(),
            compile_cmd: default_compile_cmd(),
            artifact: default_artifact(),
            chat: ChatConfig::default(),
            temperature: default_chat_temperature(),
        }
    }
}

pub fn execute_simulated(
    env: &SimulatedEnvironment,
    inst: &Instance,
    call_index: u64,
) -> ExecutionResult {
    let success = env.compile(inst, call_index);
    ExecutionResult {
        instance: inst.clone(),
        success,
        per_phase: Vec::new(),
        notes: if env.conforms(inst) {
            "conforming".into()
        } else {
            "non-conforming".into()
        },
    }
}

/// Code inside the first fenced block of a solution, or the whole solution.
pub fn extract_code(solution: &str) -> &str {
    let Some(start) = solution.find("```") else {
        return solution;
    };
    let after = &solution[start + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(end) => &body[..end],
        None => body,
    }
}

/// Runs every phase through the chat chain in a fresh workspace, then the
/// compile command. A phase without consensus ends the run as a failure.
pub fn execute_chat_chain(
    inst: &Instance,
    task: &str,
    vocab: &PhaseVocabulary,
    cfg: &ChatChainConfig,
    backend: &mut dyn AgentBackend,
) -> Result<ExecutionResult, ExecutionError> {
    let workspace = tempfile::tempdir()?;
    let artifact = workspace.path().join(&cfg.artifact);
    let mut memory: Vec<ChatRecord> = Vec::new();
    for phase in inst.phases() {
        let explanation = vocab
            .entries()
            .iter()
            .find(|e| &e.name == phase)
            .map(|e| e.explanation.as_str());
        let brief = PhaseBrief {
            task,
            phase,
            explanation,
        };
        let roles = cfg.role_map.roles_for(phase);
        match run_chat(&brief, roles, &memory, backend, &cfg.chat) {
            Ok(record) => {
                if CODE_PHASES.contains(&phase.as_str()) {
                    if let Some(solution) = record.solution() {
                        std::fs::write(&artifact, extract_code(solution))?;
                    }
                }
                memory.push(record);
            }
            Err(ChatError::NoConsensus(record)) => {
                let note = format!("no consensus in phase {phase}");
                memory.push(*record);
                return Ok(ExecutionResult {
                    instance: inst.clone(),
                    success: false,
                    per_phase: memory,
                    notes: note,
                });
            }
            Err(ChatError::Backend(message)) => {
                return Err(ExecutionError::Backend {
                    phase: phase.to_string(),
                    message,
                })
            }
        }
    }
    let (success, notes) = compile(&cfg.compile_cmd, workspace.path(), &artifact)?;
    Ok(ExecutionResult {
        instance: inst.clone(),
        success,
        per_phase: memory,
        notes,
    })
}

fn compile(cmd: &[String], dir: &Path, artifact: &Path) -> Result<(bool, String), ExecutionError> {
    let Some((program, args)) = cmd.split_first() else {
        return Err(ExecutionError::Config("compile command is empty".into()));
    };
    let substitute = |s: &String| {
        s.replace("{file}", &artifact.to_string_lossy())
            .replace("{dir}", &dir.to_string_lossy())
    };
    let output = Command::new(substitute(program))
        .args(args.iter().map(substitute))
        .current_dir(dir)
        .output()
        .map_err(|source| ExecutionError::Spawn {
            command: cmd.join(" "),
            source,
        })?;
    let status = output.status;
    let stderr = String::from_utf8_lossy(&output.stderr);
    let notes = match status.code() {
        Some(0) => "compiled".to_string(),
        Some(code) => format!("compile exited with {code}: {}", stderr.trim()),
        None => "compile terminated by a signal".to_string(),
    };
    Ok((status.success(), notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_extraction() {
        assert_eq!(extract_code("print(1)"), "print(1)");
        assert_eq!(
            extract_code("Here:\n```python\nprint(1)\n```\nbye"),
            "print(1)\n"
        );
        assert_eq!(extract_code("```\nx = 2\n"), "x = 2\n");
    }

    #[test]
    fn simulated_execution_notes() {
        let vocab = PhaseVocabulary::builtin();
        let env = SimulatedEnvironment::new(default_hidden_model(&vocab), 1.0, 0.0, 0).unwrap();
        let r = execute_simulated(&env, vocab.default_instance(), 0);
        assert!(r.success);
        assert!(r.per_phase.is_empty());
        assert_eq!(r.notes, "conforming");
    }

    #[test]
    fn compile_command_spawn_failure_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = compile(
            &["definitely-not-a-real-program-xyz".to_string()],
            dir.path(),
            &dir.path().join("main.py"),
        )
        .unwrap_err();
        assert!(matches!(err, ExecutionError::Spawn { .. }));
    }
}
