use std::fmt::Write as _;

use super::{BpmnElement, BpmnModel};

fn numeric_key(id: &str) -> (usize, &str) {
    let digits = id.trim_start_matches(|c: char| !c.is_ascii_digit());
    (digits.parse().unwrap_or(usize::MAX), id)
}

/// Graphviz rendering with nodes and flows sorted by id.
pub fn export_dot(model: &BpmnModel) -> String {
    let mut nodes: Vec<_> = model.nodes.iter().collect();
    nodes.sort_by(|a, b| numeric_key(&a.id).cmp(&numeric_key(&b.id)));
    let mut flows: Vec<_> = model.flows.iter().collect();
    flows.sort_by(|a, b| numeric_key(&a.id).cmp(&numeric_key(&b.id)));

    let mut out = String::from("digraph bpmn {\n  rankdir=LR;\n");
    for n in nodes {
        let attrs = match &n.element {
            BpmnElement::StartEvent => "shape=circle, label=\"start\"".to_string(),
            BpmnElement::EndEvent => "shape=doublecircle, label=\"end\"".to_string(),
            BpmnElement::Task(p) => format!("shape=box, label=\"{p}\""),
            BpmnElement::ExclusiveGateway => "shape=diamond, label=\"X\"".to_string(),
            BpmnElement::ParallelGateway => "shape=diamond, label=\"+\"".to_string(),
        };
        let _ = writeln!(out, "  {} [{attrs}];", n.id);
    }
    for f in flows {
        let _ = writeln!(out, "  {} -> {};", f.source, f.target);
    }
    out.push_str("}\n");
    out
}
