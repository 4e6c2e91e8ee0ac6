//! Event logs, directly-follows graphs and inductive discovery of process
//! trees.

mod cut;
mod dfg;
mod miner;
mod tree;

use std::collections::{BTreeMap, BTreeSet};

pub use cut::{find_cut, split_log, Cut};
pub use dfg::{build_dfg, Dfg, DfgNode};
pub use miner::{mine_tree, MiningError};
pub use tree::{Operator, ProcessTree, Trace, TreeError, DEFAULT_NODE_BUDGET, MAX_ENUMERATION_LEN};

use crate::instance::{parse_instance, serialize_instance, Instance, Phase};

/// Multiset of traces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    traces: BTreeMap<Trace, usize>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_traces<I: IntoIterator<Item = Trace>>(traces: I) -> Self {
        let mut log = Self::new();
        for t in traces {
            log.add(t, 1);
        }
        log
    }

    /// One trace per instance, repeated `weight` times. Zero weights are
    /// skipped.
    pub fn from_weighted_instances<'a, I>(items: I) -> Self
    where
        I: IntoIterator<Item = (&'a Instance, usize)>,
    {
        let mut log = Self::new();
        for (inst, weight) in items {
            log.add(inst.phases().to_vec(), weight);
        }
        log
    }

    pub fn add(&mut self, trace: Trace, count: usize) {
        if count > 0 {
            *self.traces.entry(trace).or_insert(0) += count;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Trace, usize)> {
        self.traces.iter().map(|(t, &c)| (t, c))
    }

    pub fn distinct(&self) -> usize {
        self.traces.len()
    }

    pub fn total(&self) -> usize {
        self.traces.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn count(&self, trace: &[Phase]) -> usize {
        self.traces.get(trace).copied().unwrap_or(0)
    }

    pub fn contains_empty_trace(&self) -> bool {
        self.traces.contains_key(&Vec::new())
    }

    pub fn alphabet(&self) -> BTreeSet<Phase> {
        self.traces.keys().flatten().cloned().collect()
    }

    /// Keeps only events whose label is in `keep`.
    pub fn project(&self, keep: &BTreeSet<Phase>) -> EventLog {
        let mut out = EventLog::new();
        for (t, c) in self.iter() {
            out.add(t.iter().filter(|p| keep.contains(*p)).cloned().collect(), c);
        }
        out
    }

    /// Reads one instance per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, MiningError> {
        let mut log = EventLog::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let inst = parse_instance(line).map_err(|e| MiningError::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
            log.add(inst.into_phases(), 1);
        }
        Ok(log)
    }

    /// Inverse of [`EventLog::parse`]; repeated traces are written once per
    /// occurrence.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (trace, count) in self.iter() {
            let Ok(inst) = Instance::new(trace.clone()) else {
                continue;
            };
            for _ in 0..count {
                out.push_str(&serialize_instance(&inst));
                out.push('\n');
            }
        }
        out
    }

    /// Removes every empty trace.
    pub fn without_empty(&self) -> EventLog {
        EventLog {
            traces: self
                .traces
                .iter()
                .filter(|(t, _)| !t.is_empty())
                .map(|(t, &c)| (t.clone(), c))
                .collect(),
        }
    }
}
