//! BPMN models built from process trees, with element counts and DOT/XML
//! export.

mod dot;
mod xml;

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

pub use dot::export_dot;
pub use xml::{export_xml, parse_xml};

use crate::instance::Phase;
use crate::mining::{Operator, ProcessTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BpmnError {
    #[error("xml: {0}")]
    Xml(String),
    #[error("unsupported element <{0}>")]
    UnknownElement(String),
    #[error("<{element}> lacks attribute {attribute}")]
    MissingAttribute { element: String, attribute: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("flow {flow} references unknown node {node}")]
    DanglingFlow { flow: String, node: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BpmnElement {
    StartEvent,
    EndEvent,
    Task(Phase),
    ExclusiveGateway,
    ParallelGateway,
}

impl BpmnElement {
    pub fn is_gateway(&self) -> bool {
        matches!(
            self,
            BpmnElement::ExclusiveGateway | BpmnElement::ParallelGateway
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpmnNode {
    pub id: String,
    pub element: BpmnElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
}

/// Nodes and flows in construction order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BpmnModel {
    pub nodes: Vec<BpmnNode>,
    pub flows: Vec<SequenceFlow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct ElementCounts {
    pub tasks: usize,
    pub parallel_gateways: usize,
    pub exclusive_gateways: usize,
}

impl BpmnModel {
    pub fn node(&self, id: &str) -> Option<&BpmnNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn start(&self) -> Option<&BpmnNode> {
        self.nodes
            .iter()
            .find(|n| n.element == BpmnElement::StartEvent)
    }

    /// Target ids of the outgoing flows of `id`, in flow order.
    pub fn successors(&self, id: &str) -> Vec<&str> {
        self.flows
            .iter()
            .filter(|f| f.source == id)
            .map(|f| f.target.as_str())
            .collect()
    }

    pub fn predecessors(&self, id: &str) -> Vec<&str> {
        self.flows
            .iter()
            .filter(|f| f.target == id)
            .map(|f| f.source.as_str())
            .collect()
    }

    /// Checks the structural invariants of a well-formed model.
    pub fn validate(&self) -> Result<(), BpmnError> {
        let mut seen = BTreeMap::new();
        for n in &self.nodes {
            if seen.insert(n.id.as_str(), n).is_some() {
                return Err(BpmnError::DuplicateId(n.id.clone()));
            }
        }
        for f in &self.flows {
            for end in [&f.source, &f.target] {
                if !seen.contains_key(end.as_str()) {
                    return Err(BpmnError::DanglingFlow {
                        flow: f.id.clone(),
                        node: end.clone(),
                    });
                }
            }
        }
        let starts: Vec<_> = self
            .nodes
            .iter()
            .filter(|n| n.element == BpmnElement::StartEvent)
            .collect();
        let ends: Vec<_> = self
            .nodes
            .iter()
            .filter(|n| n.element == BpmnElement::EndEvent)
            .collect();
        if starts.len() != 1 || ends.len() != 1 {
            return Err(BpmnError::Invalid(
                "exactly one start and one end event required".into(),
            ));
        }
        for n in &self.nodes {
            let (ins, outs) = (self.predecessors(&n.id).len(), self.successors(&n.id).len());
            let ok = match n.element {
                BpmnElement::StartEvent => ins == 0 && outs == 1,
                BpmnElement::EndEvent => ins == 1 && outs == 0,
                BpmnElement::Task(_) => ins == 1 && outs == 1,
                _ => ins >= 1 && outs >= 1,
            };
            if !ok {
                return Err(BpmnError::Invalid(format!(
                    "node {} has {ins} incoming and {outs} outgoing flows",
                    n.id
                )));
            }
        }
        let forward = self.reachable(&starts[0].id, |m, id| m.successors(id));
        let backward = self.reachable(&ends[0].id, |m, id| m.predecessors(id));
        if let Some(n) = self
            .nodes
            .iter()
            .find(|n| !forward.contains(&n.id.as_str()) || !backward.contains(&n.id.as_str()))
        {
            return Err(BpmnError::Invalid(format!(
                "node {} is not on a path from start to end",
                n.id
            )));
        }
        Ok(())
    }

    fn reachable<'a, F>(&'a self, from: &'a str, next: F) -> Vec<&'a str>
    where
        F: Fn(&'a Self, &str) -> Vec<&'a str>,
    {
        let mut seen = vec![from];
        let mut queue = VecDeque::from([from]);
        while let Some(id) = queue.pop_front() {
            for m in next(self, id) {
                if !seen.contains(&m) {
                    seen.push(m);
                    queue.push_back(m);
                }
            }
        }
        seen
    }
}

pub fn count_elements(model: &BpmnModel) -> ElementCounts {
    let mut c = ElementCounts::default();
    for n in &model.nodes {
        match n.element {
            BpmnElement::Task(_) => c.tasks += 1,
            BpmnElement::ParallelGateway => c.parallel_gateways += 1,
            BpmnElement::ExclusiveGateway => c.exclusive_gateways += 1,
            _ => {}
        }
    }
    c
}

/// Structured translation: each operator becomes a split/join gateway pair,
/// loops become an exclusive entry join and exit split with redo paths
/// flowing back to the entry, and τ becomes a bare flow.
pub fn tree_to_bpmn(tree: &ProcessTree) -> BpmnModel {
    let mut b = Builder::default();
    let start = b.node(BpmnElement::StartEvent);
    let last = b.build(tree, start);
    let end = b.node(BpmnElement::EndEvent);
    b.flow(last, end);
    b.model
}

#[derive(Default)]
struct Builder {
    model: BpmnModel,
}

impl Builder {
    fn node(&mut self, element: BpmnElement) -> usize {
        let idx = self.model.nodes.len();
        self.model.nodes.push(BpmnNode {
            id: format!("n{idx}"),
            element,
        });
        idx
    }

    fn flow(&mut self, from: usize, to: usize) {
        let id = format!("f{}", self.model.flows.len());
        let source = self.model.nodes[from].id.clone();
        let target = self.model.nodes[to].id.clone();
        self.model.flows.push(SequenceFlow { id, source, target });
    }

    /// Appends `tree` after node `from` and returns the node it ends in.
    fn build(&mut self, tree: &ProcessTree, from: usize) -> usize {
        match tree {
            ProcessTree::Tau => from,
            ProcessTree::Leaf(p) => {
                let task = self.node(BpmnElement::Task(p.clone()));
                self.flow(from, task);
                task
            }
            ProcessTree::Node(Operator::Sequence, ch) => {
                ch.iter().fold(from, |at, c| self.build(c, at))
            }
            ProcessTree::Node(op @ (Operator::Exclusive | Operator::Parallel), ch) => {
                let kind = if *op == Operator::Exclusive {
                    BpmnElement::ExclusiveGateway
                } else {
                    BpmnElement::ParallelGateway
                };
                let split = self.node(kind.clone());
                self.flow(from, split);
                let exits: Vec<usize> = ch.iter().map(|c| self.build(c, split)).collect();
                let join = self.node(kind);
                for e in exits {
                    self.flow(e, join);
                }
                join
            }
            ProcessTree::Node(Operator::Loop, ch) => {
                let entry = self.node(BpmnElement::ExclusiveGateway);
                self.flow(from, entry);
                let body_end = self.build(&ch[0], entry);
                let exit = self.node(BpmnElement::ExclusiveGateway);
                self.flow(body_end, exit);
                for redo in &ch[1..] {
                    let redo_end = self.build(redo, exit);
                    self.flow(redo_end, entry);
                }
                exit
            }
        }
    }
}
