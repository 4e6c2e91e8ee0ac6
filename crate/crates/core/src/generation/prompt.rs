use std::fmt::Write as _;

use crate::describe::ProcessDescription;
use crate::instance::{parse_instance, serialize_instance, Instance, PhaseVocabulary, ARROW};

pub const DEFAULT_OUTPUT_FORMAT: &str = "Reply with one instance per line. Each instance lists \
phase names from the explanations above, joined by the symbol →, for example: \
DemandAnalysis → Coding → Manual. Do not add any other text.";

/// Everything that goes into an instance-generation prompt. The process
/// description is only present in enhanced mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub user_task: String,
    pub vocabulary: PhaseVocabulary,
    experiential_instances: Vec<Instance>,
    pub output_format_note: String,
    pub process_description: Option<ProcessDescription>,
}

impl PromptSpec {
    pub fn new(user_task: impl Into<String>, vocabulary: PhaseVocabulary) -> Self {
        PromptSpec {
            user_task: user_task.into(),
            vocabulary,
            experiential_instances: Vec::new(),
            output_format_note: DEFAULT_OUTPUT_FORMAT.to_string(),
            process_description: None,
        }
    }

    /// Sets the example instances, dropping repeats but keeping first-seen
    /// order.
    pub fn with_experience<I: IntoIterator<Item = Instance>>(mut self, instances: I) -> Self {
        self.experiential_instances.clear();
        for inst in instances {
            if !self.experiential_instances.contains(&inst) {
                self.experiential_instances.push(inst);
            }
        }
        self
    }

    pub fn with_description(mut self, description: ProcessDescription) -> Self {
        self.process_description = Some(description);
        self
    }

    pub fn experiential_instances(&self) -> &[Instance] {
        &self.experiential_instances
    }
}

/// Renders the prompt as `## `-headed sections: user task, phase
/// explanations, experiential instances, the optional process description,
/// and the output format.
pub fn build_prompt(spec: &PromptSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## User Task\n{}\n", spec.user_task.trim());
    out.push_str("## Phase Explanations\n");
    for e in spec.vocabulary.entries() {
        let _ = writeln!(out, "{}: {}", e.name, e.explanation);
    }
    out.push_str("\n## Experiential Instances\n");
    if spec.experiential_instances.is_empty() {
        out.push_str("(none yet)\n");
    }
    for inst in &spec.experiential_instances {
        let _ = writeln!(out, "{}", pretty(inst));
    }
    if let Some(d) = &spec.process_description {
        let _ = writeln!(out, "\n## Process Description\n{}", d.text);
    }
    let _ = writeln!(
        out,
        "\n## Output Format\n{}",
        spec.output_format_note.trim()
    );
    out
}

fn pretty(inst: &Instance) -> String {
    serialize_instance(inst).replace(" -> ", &format!(" {ARROW} "))
}

/// Instances found in raw generator output plus the lines that looked like
/// instances but failed to parse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedGeneration {
    pub instances: Vec<Instance>,
    pub skipped: Vec<(usize, String)>,
}

/// Keeps every line with an arrow, strips list markers and code ticks, and
/// parses the rest. Prose lines are ignored.
pub fn parse_generation(raw: &str) -> Vec<Instance> {
    parse_generation_detailed(raw).instances
}

pub fn parse_generation_detailed(raw: &str) -> ParsedGeneration {
    let mut parsed = ParsedGeneration::default();
    for (n, line) in raw.lines().enumerate() {
        if !line.contains(ARROW) && !line.contains("->") {
            continue;
        }
        let cleaned = strip_decoration(line);
        match parse_instance(cleaned) {
            Ok(inst) => parsed.instances.push(inst),
            Err(e) => parsed.skipped.push((n + 1, e.to_string())),
        }
    }
    parsed
}

fn strip_decoration(line: &str) -> &str {
    let mut s = line.trim().trim_matches('`').trim();
    for marker in ["- ", "* ", "• "] {
        if let Some(rest) = s.strip_prefix(marker) {
            s = rest;
        }
    }
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = s[digits..]
            .strip_prefix(". ")
            .or(s[digits..].strip_prefix(") "))
        {
            s = rest;
        }
    }
    s.trim()
        .trim_start_matches('`')
        .trim_end_matches(['`', '.'])
        .trim()
}
