use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{EventLog, MiningError};
use crate::instance::Phase;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DfgNode {
    Start,
    Activity(Phase),
    End,
}

impl DfgNode {
    fn dot_name(&self) -> String {
        match self {
            DfgNode::Start => "__start__".to_string(),
            DfgNode::Activity(p) => p.to_string(),
            DfgNode::End => "__end__".to_string(),
        }
    }
}

/// Directly-follows graph with a virtual start and end node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dfg {
    activities: BTreeSet<Phase>,
    edges: BTreeMap<(DfgNode, DfgNode), usize>,
}

/// Builds the graph of a log whose traces are all non-empty.
pub fn build_dfg(log: &EventLog) -> Result<Dfg, MiningError> {
    if log.contains_empty_trace() {
        return Err(MiningError::EmptyTrace);
    }
    Ok(Dfg::from_log(log))
}

impl Dfg {
    /// Empty traces contribute nothing.
    pub(crate) fn from_log(log: &EventLog) -> Dfg {
        let mut dfg = Dfg::default();
        for (trace, count) in log.iter() {
            if trace.is_empty() {
                continue;
            }
            dfg.activities.extend(trace.iter().cloned());
            let nodes = std::iter::once(DfgNode::Start)
                .chain(trace.iter().cloned().map(DfgNode::Activity))
                .chain(std::iter::once(DfgNode::End));
            let nodes: Vec<DfgNode> = nodes.collect();
            for w in nodes.windows(2) {
                *dfg.edges.entry((w[0].clone(), w[1].clone())).or_insert(0) += count;
            }
        }
        dfg
    }

    pub fn activities(&self) -> &BTreeSet<Phase> {
        &self.activities
    }

    pub fn edges(&self) -> impl Iterator<Item = (&DfgNode, &DfgNode, usize)> {
        self.edges.iter().map(|((a, b), &c)| (a, b, c))
    }

    pub fn edge_count(&self, from: &DfgNode, to: &DfgNode) -> usize {
        self.edges
            .get(&(from.clone(), to.clone()))
            .copied()
            .unwrap_or(0)
    }

    /// True if `b` directly follows `a` somewhere in the log.
    pub fn follows(&self, a: &Phase, b: &Phase) -> bool {
        self.edge_count(&DfgNode::Activity(a.clone()), &DfgNode::Activity(b.clone())) > 0
    }

    pub fn start_activities(&self) -> BTreeSet<Phase> {
        self.edges
            .keys()
            .filter_map(|(a, b)| match (a, b) {
                (DfgNode::Start, DfgNode::Activity(p)) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn end_activities(&self) -> BTreeSet<Phase> {
        self.edges
            .keys()
            .filter_map(|(a, b)| match (a, b) {
                (DfgNode::Activity(p), DfgNode::End) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    /// Successor lists over activities only.
    pub(crate) fn successors(&self) -> BTreeMap<Phase, BTreeSet<Phase>> {
        let mut out: BTreeMap<Phase, BTreeSet<Phase>> = self
            .activities
            .iter()
            .map(|a| (a.clone(), BTreeSet::new()))
            .collect();
        for (a, b) in self.edges.keys() {
            if let (DfgNode::Activity(a), DfgNode::Activity(b)) = (a, b) {
                out.get_mut(a).expect("known activity").insert(b.clone());
            }
        }
        out
    }

    /// Graphviz rendering with edge counts as labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfg {\n  rankdir=LR;\n");
        let _ = writeln!(out, "  \"__start__\" [shape=circle, label=\"\"];");
        let _ = writeln!(out, "  \"__end__\" [shape=doublecircle, label=\"\"];");
        for a in &self.activities {
            let _ = writeln!(out, "  \"{a}\" [shape=box];");
        }
        for ((a, b), c) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{c}\"];",
                a.dot_name(),
                b.dot_name()
            );
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<Phase> {
        s.split_whitespace()
            .map(|p| Phase::new(p).unwrap())
            .collect()
    }
    fn a(s: &str) -> DfgNode {
        DfgNode::Activity(Phase::new(s).unwrap())
    }

    #[test]
    fn example_log_edges() {
        let log = EventLog::from_traces([t("D C T"), t("D R C T")]);
        let dfg = build_dfg(&log).unwrap();
        let got: Vec<(DfgNode, DfgNode, usize)> = dfg
            .edges()
            .map(|(x, y, c)| (x.clone(), y.clone(), c))
            .collect();
        let mut expected = vec![
            (DfgNode::Start, a("D"), 2),
            (a("D"), a("C"), 1),
            (a("D"), a("R"), 1),
            (a("R"), a("C"), 1),
            (a("C"), a("T"), 2),
            (a("T"), DfgNode::End, 2),
        ];
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn single_and_repeated() {
        let dfg = build_dfg(&EventLog::from_traces([t("A")])).unwrap();
        assert_eq!(dfg.edges().count(), 2);
        assert_eq!(dfg.edge_count(&DfgNode::Start, &a("A")), 1);
        assert_eq!(dfg.edge_count(&a("A"), &DfgNode::End), 1);
        let dfg = build_dfg(&EventLog::from_traces([t("A B"), t("A B")])).unwrap();
        assert_eq!(dfg.edge_count(&a("A"), &a("B")), 2);
    }

    #[test]
    fn empty_trace_rejected() {
        let log = EventLog::from_traces([t("")]);
        assert_eq!(build_dfg(&log), Err(MiningError::EmptyTrace));
    }

    #[test]
    fn dot_uses_virtual_names() {
        let dfg = build_dfg(&EventLog::from_traces([t("A B")])).unwrap();
        let dot = dfg.to_dot();
        assert!(dot.contains("\"__start__\" -> \"A\" [label=\"1\"]"));
        assert!(dot.contains("\"B\" -> \"__end__\" [label=\"1\"]"));
        assert_eq!(dot, dfg.to_dot());
    }
}
