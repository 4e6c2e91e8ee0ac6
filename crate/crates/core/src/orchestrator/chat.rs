use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::roles::{Role, RolePair};
use crate::generation::{ChatMessage, LlmClient};
use crate::instance::Phase;

pub const SOLUTION_OPEN: &str = "<SOLUTION>";
pub const SOLUTION_CLOSE: &str = "</SOLUTION>";
/// Appears in every reflection request.
pub const REFLECTION_MARKER: &str = "REFLECTION";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub utterance: String,
}

/// Transcript of one phase's dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub phase: Phase,
    pub instructor: Role,
    pub assistant: Role,
    pub turns: Vec<Turn>,
    pub consensus: bool,
    pub reflected: bool,
}

impl ChatRecord {
    /// Content of the terminal message, if the dialogue reached one.
    pub fn solution(&self) -> Option<&str> {
        if !self.consensus {
            return None;
        }
        self.turns
            .last()
            .and_then(|t| terminal_content(&t.utterance))
    }
}

/// The body of an utterance of the form `<SOLUTION> … </SOLUTION>`.
pub fn terminal_content(utterance: &str) -> Option<&str> {
    utterance
        .trim()
        .strip_prefix(SOLUTION_OPEN)?
        .strip_suffix(SOLUTION_CLOSE)
        .map(str::trim)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChatError {
    #[error("no terminal message in phase {} after reflection", .0.phase)]
    NoConsensus(Box<ChatRecord>),
    #[error("agent backend failed: {0}")]
    Backend(String),
}

/// Produces the next utterance from a system prompt and the dialogue so far.
pub trait AgentBackend {
    fn respond(&mut self, system_prompt: &str, history: &[Turn]) -> Result<String, String>;
}

impl<F> AgentBackend for F
where
    F: FnMut(&str, &[Turn]) -> Result<String, String>,
{
    fn respond(&mut self, system_prompt: &str, history: &[Turn]) -> Result<String, String> {
        self(system_prompt, history)
    }
}

/// Chat-completion backend: the transcript is sent as one user message.
pub struct LlmAgent {
    pub client: LlmClient,
    pub temperature: f64,
}

impl AgentBackend for LlmAgent {
    fn respond(&mut self, system_prompt: &str, history: &[Turn]) -> Result<String, String> {
        let mut transcript = String::new();
        for t in history {
            let _ = writeln!(transcript, "{}: {}", t.role, t.utterance);
        }
        if transcript.is_empty() {
            transcript.push_str("Begin.");
        }
        self.client
            .complete(
                &[
                    ChatMessage::new("system", system_prompt),
                    ChatMessage::new("user", transcript),
                ],
                self.temperature,
            )
            .map_err(|e| e.to_string())
    }
}

fn default_turn_limit() -> usize {
    6
}
fn default_reflections() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatConfig {
    /// Backend calls before reflection starts.
    #[serde(default = "default_turn_limit")]
    pub turn_limit: usize,
    #[serde(default = "default_reflections")]
    pub max_reflections: usize,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            turn_limit: default_turn_limit(),
            max_reflections: default_reflections(),
        }
    }
}

/// What the agents are working on.
#[derive(Debug, Clone, Copy)]
pub struct PhaseBrief<'a> {
    pub task: &'a str,
    pub phase: &'a Phase,
    pub explanation: Option<&'a str>,
}

fn system_prompt(
    speaker: Role,
    partner: Role,
    instructs: bool,
    brief: &PhaseBrief<'_>,
    memory: &[ChatRecord],
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "You are the {speaker}; your job is to {}.",
        speaker.duty()
    );
    let _ = writeln!(s, "Task: {}", brief.task);
    let _ = write!(s, "Current phase: {}", brief.phase);
    match brief.explanation {
        Some(e) => {
            let _ = writeln!(s, " ({e})");
        }
        None => s.push('\n'),
    }
    if instructs {
        let _ = writeln!(s, "Give the {partner} clear instructions for this phase.");
    } else {
        let _ = writeln!(
            s,
            "Follow the {partner}'s instructions. When the phase is complete, reply with \
             exactly {SOLUTION_OPEN} your result {SOLUTION_CLOSE} and nothing else. Put any \
             code inside a fenced block within the solution."
        );
    }
    if !memory.is_empty() {
        s.push_str("Earlier phases:\n");
        for record in memory {
            for t in &record.turns {
                let _ = writeln!(s, "[{}] {}: {}", record.phase, t.role, t.utterance);
            }
        }
    }
    s
}

/// Runs one phase: instructor and assistant alternate, starting with the
/// instructor, until the assistant sends a terminal message or `turn_limit`
/// backend calls are spent. Then up to `max_reflections` reflection rounds
/// re-present the transcript to the assistant.
pub fn run_chat(
    brief: &PhaseBrief<'_>,
    roles: RolePair,
    memory: &[ChatRecord],
    backend: &mut dyn AgentBackend,
    cfg: &ChatConfig,
) -> Result<ChatRecord, ChatError> {
    let (instructor, assistant) = roles;
    let instructor_prompt = system_prompt(instructor, assistant, true, brief, memory);
    let assistant_prompt = system_prompt(assistant, instructor, false, brief, memory);
    let mut record = ChatRecord {
        phase: brief.phase.clone(),
        instructor,
        assistant,
        turns: Vec::new(),
        consensus: false,
        reflected: false,
    };
    for call in 0..cfg.turn_limit {
        let (role, prompt) = if call % 2 == 0 {
            (instructor, &instructor_prompt)
        } else {
            (assistant, &assistant_prompt)
        };
        let utterance = backend
            .respond(prompt, &record.turns)
            .map_err(ChatError::Backend)?;
        let terminal = role == assistant && terminal_content(&utterance).is_some();
        record.turns.push(Turn { role, utterance });
        if terminal {
            record.consensus = true;
            return Ok(record);
        }
    }
    for round in 1..=cfg.max_reflections {
        record.reflected = true;
        let request = format!(
            "{REFLECTION_MARKER} {round}: review the dialogue above and state the agreed result \
             as {SOLUTION_OPEN} ... {SOLUTION_CLOSE}."
        );
        record.turns.push(Turn {
            role: instructor,
            utterance: request,
        });
        let utterance = backend
            .respond(&assistant_prompt, &record.turns)
            .map_err(ChatError::Backend)?;
        let terminal = terminal_content(&utterance).is_some();
        record.turns.push(Turn {
            role: assistant,
            utterance,
        });
        if terminal {
            record.consensus = true;
            return Ok(record);
        }
    }
    Err(ChatError::NoConsensus(Box::new(record)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brief(phase: &Phase) -> PhaseBrief<'_> {
        PhaseBrief {
            task: "Develop a tetris game.",
            phase,
            explanation: Some("write the code"),
        }
    }

    #[test]
    fn terminal_format() {
        assert_eq!(terminal_content("<SOLUTION>x</SOLUTION>"), Some("x"));
        assert_eq!(terminal_content("  <SOLUTION> x </SOLUTION>\n"), Some("x"));
        assert_eq!(terminal_content("Here: <SOLUTION>x</SOLUTION>"), None);
    }

    #[test]
    fn instructor_terminal_message_does_not_end_the_chat() {
        let phase = Phase::new("Coding").unwrap();
        let mut calls = 0;
        let mut backend = |_: &str, _: &[Turn]| {
            calls += 1;
            Ok(if calls == 1 {
                "<SOLUTION>premature</SOLUTION>".to_string()
            } else {
                "<SOLUTION>done</SOLUTION>".to_string()
            })
        };
        let record = run_chat(
            &brief(&phase),
            (Role::Cto, Role::Programmer),
            &[],
            &mut backend,
            &ChatConfig::default(),
        )
        .unwrap();
        assert_eq!(record.turns.len(), 2);
        assert_eq!(record.solution(), Some("done"));
    }

    #[test]
    fn memory_reaches_the_system_prompt() {
        let phase = Phase::new("Coding").unwrap();
        let earlier = ChatRecord {
            phase: Phase::new("DemandAnalysis").unwrap(),
            instructor: Role::Ceo,
            assistant: Role::Cto,
            turns: vec![Turn {
                role: Role::Cto,
                utterance: "<SOLUTION>a web app</SOLUTION>".into(),
            }],
            consensus: true,
            reflected: false,
        };
        let mut seen = Vec::new();
        let mut backend = |system: &str, _: &[Turn]| {
            seen.push(system.to_string());
            Ok("<SOLUTION>ok</SOLUTION>".to_string())
        };
        run_chat(
            &brief(&phase),
            (Role::Cto, Role::Programmer),
            std::slice::from_ref(&earlier),
            &mut backend,
            &ChatConfig::default(),
        )
        .unwrap();
        assert!(seen
            .iter()
            .all(|s| s.contains("[DemandAnalysis] CTO: <SOLUTION>a web app")));
    }
}
