//! Phases, instances, the phase vocabulary and the diversity metric.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unicode arrow accepted when parsing instances.
pub const ARROW: &str = "→";
/// ASCII arrow used when serializing instances.
pub const ASCII_ARROW: &str = "->";

const DEFAULT_VOCABULARY_JSON: &str = include_str!("../data/phases.json");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("empty phase segment between arrows")]
    EmptySegment,
    #[error("no phases in input")]
    NoPhases,
    #[error("invalid phase name {name:?}: {reason}")]
    InvalidPhase { name: String, reason: &'static str },
    #[error("an instance needs at least one phase")]
    EmptyInstance,
    #[error("vocabulary: {0}")]
    Vocabulary(String),
}

/// A named unit of development work, e.g. `Coding`.
///
/// Names are case-sensitive and never contain whitespace, commas or arrows.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Phase(Arc<str>);

impl Phase {
    pub fn new(name: impl AsRef<str>) -> Result<Self, InstanceError> {
        let name = name.as_ref();
        let invalid = |reason| InstanceError::InvalidPhase {
            name: name.to_string(),
            reason,
        };
        if name.is_empty() {
            return Err(invalid("empty"));
        }
        if name.chars().any(char::is_whitespace) {
            return Err(invalid("contains whitespace"));
        }
        if name.contains(',') {
            return Err(invalid("contains a comma"));
        }
        if name.contains(ARROW) || name.contains(ASCII_ARROW) {
            return Err(invalid("contains an arrow"));
        }
        Ok(Phase(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Phase {
    type Error = InstanceError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Phase::new(value)
    }
}

impl From<Phase> for String {
    fn from(p: Phase) -> Self {
        p.0.to_string()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered, non-empty sequence of phases: one candidate development process.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Instance(Vec<Phase>);

impl Instance {
    pub fn new(phases: Vec<Phase>) -> Result<Self, InstanceError> {
        if phases.is_empty() {
            return Err(InstanceError::EmptyInstance);
        }
        Ok(Instance(phases))
    }

    /// Builds an instance from names, validating each one.
    pub fn from_names<I, S>(names: I) -> Result<Self, InstanceError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let phases = names
            .into_iter()
            .map(Phase::new)
            .collect::<Result<Vec<_>, _>>()?;
        Instance::new(phases)
    }

    pub fn phases(&self) -> &[Phase] {
        &self.0
    }

    pub fn into_phases(self) -> Vec<Phase> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn phase_set(&self) -> BTreeSet<&Phase> {
        self.0.iter().collect()
    }

    /// Adjacent ordered pairs, deduplicated.
    pub fn order_set(&self) -> BTreeSet<(&Phase, &Phase)> {
        self.0.windows(2).map(|w| (&w[0], &w[1])).collect()
    }
}

impl TryFrom<String> for Instance {
    type Error = InstanceError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_instance(&value)
    }
}

impl From<Instance> for String {
    fn from(i: Instance) -> Self {
        serialize_instance(&i)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_instance(self))
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Instance({})", serialize_instance(self))
    }
}

/// Parses `A → B -> C` into an instance. Both arrow forms are accepted and
/// whitespace around each segment is trimmed. Unknown phases are kept.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    if text.trim().is_empty() {
        return Err(InstanceError::NoPhases);
    }
    let normalized = text.replace(ARROW, ASCII_ARROW);
    let mut phases = Vec::new();
    for segment in normalized.split(ASCII_ARROW) {
        let segment = segment.trim();
        if segment.is_empty() {
            return Err(InstanceError::EmptySegment);
        }
        phases.push(Phase::new(segment)?);
    }
    Instance::new(phases)
}

/// Joins phase names with ` -> `.
pub fn serialize_instance(inst: &Instance) -> String {
    inst.0
        .iter()
        .map(Phase::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyEntry {
    pub name: Phase,
    pub explanation: String,
}

/// The canonical phases and their explanations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseVocabulary {
    entries: Vec<VocabularyEntry>,
    default_instance: Instance,
}

impl PhaseVocabulary {
    /// The 14-phase vocabulary that ships with the crate.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_VOCABULARY_JSON).expect("embedded vocabulary is valid")
    }

    /// Loads `[{"name": ..., "explanation": ...}, ...]`. The default instance
    /// is the entries in file order.
    pub fn from_json(json: &str) -> Result<Self, InstanceError> {
        let entries: Vec<VocabularyEntry> =
            serde_json::from_str(json).map_err(|e| InstanceError::Vocabulary(e.to_string()))?;
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<VocabularyEntry>) -> Result<Self, InstanceError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.clone()) {
                return Err(InstanceError::Vocabulary(format!(
                    "duplicate phase {}",
                    e.name
                )));
            }
        }
        let default_instance = Instance::new(entries.iter().map(|e| e.name.clone()).collect())
            .map_err(|_| InstanceError::Vocabulary("vocabulary is empty".into()))?;
        Ok(PhaseVocabulary {
            entries,
            default_instance,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("vocabulary serializes")
    }

    /// Returns a copy with extra phases appended (explanations left empty).
    pub fn extended<I, S>(&self, names: I) -> Result<Self, InstanceError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = self.entries.clone();
        for n in names {
            let name = Phase::new(n)?;
            if !self.contains(&name) {
                entries.push(VocabularyEntry {
                    name,
                    explanation: String::new(),
                });
            }
        }
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[VocabularyEntry] {
        &self.entries
    }

    pub fn default_instance(&self) -> &Instance {
        &self.default_instance
    }

    pub fn contains(&self, phase: &Phase) -> bool {
        self.entries.iter().any(|e| &e.name == phase)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for PhaseVocabulary {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Phases of `inst` missing from `vocab`, first occurrence order, no duplicates.
pub fn unknown_phases(inst: &Instance, vocab: &PhaseVocabulary) -> Vec<Phase> {
    let mut seen = HashSet::new();
    inst.phases()
        .iter()
        .filter(|p| !vocab.contains(p) && seen.insert((*p).clone()))
        .cloned()
        .collect()
}

fn symmetric_change<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    let diff = a.symmetric_difference(b).count();
    diff as f64 / union as f64
}

/// Share of phases not common to both instances (sets, duplicates ignored).
pub fn change_phases(candidate: &Instance, default: &Instance) -> f64 {
    symmetric_change(&default.phase_set(), &candidate.phase_set())
}

/// Share of adjacent phase pairs not common to both instances. Two
/// single-phase instances have no pairs and count as unchanged.
pub fn change_orders(candidate: &Instance, default: &Instance) -> f64 {
    symmetric_change(&default.order_set(), &candidate.order_set())
}

/// Mean of [`change_phases`] and [`change_orders`].
pub fn diversity(candidate: &Instance, default: &Instance) -> f64 {
    (change_phases(candidate, default) + change_orders(candidate, default)) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(s: &str) -> Instance {
        parse_instance(s).unwrap()
    }

    #[test]
    fn parses_both_arrow_forms() {
        let i = inst("Designing → Coding → Testing");
        assert_eq!(serialize_instance(&i), "Designing -> Coding -> Testing");
        assert_eq!(inst("Designing->Coding -> Testing"), i);
        assert_eq!(inst("Coding").phases(), &[Phase::new("Coding").unwrap()]);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_instance("Designing -> -> Testing"),
            Err(InstanceError::EmptySegment)
        );
        assert_eq!(
            parse_instance("-> Coding"),
            Err(InstanceError::EmptySegment)
        );
        assert_eq!(parse_instance("Coding →"), Err(InstanceError::EmptySegment));
        assert_eq!(parse_instance("   \n"), Err(InstanceError::NoPhases));
        assert!(matches!(
            parse_instance("Code Review -> Testing"),
            Err(InstanceError::InvalidPhase { .. })
        ));
    }

    #[test]
    fn serializes() {
        assert_eq!(serialize_instance(&inst("D → C → T")), "D -> C -> T");
        assert_eq!(serialize_instance(&inst("Coding")), "Coding");
    }

    #[test]
    fn builtin_vocabulary() {
        let v = PhaseVocabulary::builtin();
        assert_eq!(v.len(), 14);
        let names: Vec<&str> = v
            .default_instance()
            .phases()
            .iter()
            .map(Phase::as_str)
            .collect();
        assert_eq!(
            names,
            [
                "DemandAnalysis",
                "LanguageChoose",
                "DesignReview",
                "Coding",
                "CodeComplete",
                "Annotation",
                "CodeConclusion",
                "CodeReviewComment",
                "CommentJudgement",
                "CodeReviewModification",
                "TestErrorSummary",
                "TestModification",
                "EnvironmentDoc",
                "Manual"
            ]
        );
        assert!(unknown_phases(v.default_instance(), &v).is_empty());
        assert!(PhaseVocabulary::from_json(&v.to_json()).unwrap() == v);
    }

    #[test]
    fn rejects_duplicate_vocabulary() {
        let json = r#"[{"name":"A","explanation":""},{"name":"A","explanation":""}]"#;
        assert!(PhaseVocabulary::from_json(json).is_err());
    }

    #[test]
    fn unknown_phase_detection() {
        let v = PhaseVocabulary::builtin()
            .extended(["Designing", "Coding", "Testing"])
            .unwrap();
        let got = unknown_phases(&inst("Designing → Coding → UsernameSet → Testing"), &v);
        assert_eq!(got, vec![Phase::new("UsernameSet").unwrap()]);

        let got = unknown_phases(&inst("EmailSet -> EmploymentDoc -> EmailSet"), &v);
        assert_eq!(
            got,
            vec![
                Phase::new("EmailSet").unwrap(),
                Phase::new("EmploymentDoc").unwrap()
            ]
        );
    }

    #[test]
    fn diversity_of_annotation_deletion() {
        let v = PhaseVocabulary::builtin();
        let default = v.default_instance().clone();
        let without: Vec<Phase> = default
            .phases()
            .iter()
            .filter(|p| p.as_str() != "Annotation")
            .cloned()
            .collect();
        let without = Instance::new(without).unwrap();
        // 1 phase missing out of a 14-phase union.
        assert!((change_phases(&without, &default) - 1.0 / 14.0).abs() < 1e-12);
        // 2 pairs lost, 1 bridging pair gained, union 13 + 1.
        assert!((change_orders(&without, &default) - 3.0 / 14.0).abs() < 1e-12);
        assert!((diversity(&without, &default) - 0.142857).abs() < 1e-4);
        assert_eq!(diversity(&default, &default), 0.0);
    }

    #[test]
    fn diversity_edges() {
        assert_eq!(diversity(&inst("A -> B"), &inst("C -> D")), 1.0);
        assert_eq!(change_orders(&inst("B -> A"), &inst("A -> B")), 1.0);
        assert_eq!(change_orders(&inst("A"), &inst("A")), 0.0);
        assert_eq!(change_orders(&inst("A"), &inst("A -> B")), 1.0);
        assert_eq!(diversity(&inst("A"), &inst("A")), 0.0);
    }

    #[test]
    fn serde_uses_ascii_form() {
        let i = inst("A → B");
        assert_eq!(serde_json::to_string(&i).unwrap(), "\"A -> B\"");
        let back: Instance = serde_json::from_str("\"A → B\"").unwrap();
        assert_eq!(back, i);
    }
}
