use std::fmt::Write as _;

use super::{BpmnElement, BpmnError, BpmnModel, BpmnNode, SequenceFlow};
use crate::instance::Phase;

const NAMESPACE: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Minimal BPMN 2.0 XML: one process with events, tasks, gateways and
/// sequence flows.
pub fn export_xml(model: &BpmnModel) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<definitions xmlns=\"{NAMESPACE}\" id=\"definitions\" targetNamespace=\"urn:devloop\">"
    );
    out.push_str("  <process id=\"process\" isExecutable=\"false\">\n");
    for n in &model.nodes {
        let id = escape(&n.id);
        let direction = || {
            let ins = model.predecessors(&n.id).len();
            let outs = model.successors(&n.id).len();
            match (ins > 1, outs > 1) {
                (true, false) => "Converging",
                (false, true) => "Diverging",
                (true, true) => "Mixed",
                (false, false) => "Unspecified",
            }
        };
        let _ = match &n.element {
            BpmnElement::StartEvent => writeln!(out, "    <startEvent id=\"{id}\"/>"),
            BpmnElement::EndEvent => writeln!(out, "    <endEvent id=\"{id}\"/>"),
            BpmnElement::Task(p) => {
                writeln!(
                    out,
                    "    <task id=\"{id}\" name=\"{}\"/>",
                    escape(p.as_str())
                )
            }
            BpmnElement::ExclusiveGateway => writeln!(
                out,
                "    <exclusiveGateway id=\"{id}\" gatewayDirection=\"{}\"/>",
                direction()
            ),
            BpmnElement::ParallelGateway => writeln!(
                out,
                "    <parallelGateway id=\"{id}\" gatewayDirection=\"{}\"/>",
                direction()
            ),
        };
    }
    for f in &model.flows {
        let _ = writeln!(
            out,
            "    <sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"/>",
            escape(&f.id),
            escape(&f.source),
            escape(&f.target)
        );
    }
    out.push_str("  </process>\n</definitions>\n");
    out
}

fn attr(node: roxmltree::Node<'_, '_>, name: &str) -> Result<String, BpmnError> {
    node.attribute(name)
        .map(str::to_string)
        .ok_or_else(|| BpmnError::MissingAttribute {
            element: node.tag_name().name().to_string(),
            attribute: name.to_string(),
        })
}

/// Reads the subset written by [`export_xml`] and validates the result.
pub fn parse_xml(text: &str) -> Result<BpmnModel, BpmnError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| BpmnError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "definitions" {
        return Err(BpmnError::Xml(format!(
            "expected <definitions>, found <{}>",
            root.tag_name().name()
        )));
    }
    let process = root
        .children()
        .find(|n| n.is_element() && n.tag_name().name() == "process")
        .ok_or_else(|| BpmnError::Xml("no <process> element".into()))?;
    let mut model = BpmnModel::default();
    for child in process.children().filter(|n| n.is_element()) {
        let tag = child.tag_name().name();
        let element = match tag {
            "startEvent" => BpmnElement::StartEvent,
            "endEvent" => BpmnElement::EndEvent,
            "exclusiveGateway" => BpmnElement::ExclusiveGateway,
            "parallelGateway" => BpmnElement::ParallelGateway,
            "task" => {
                let name = attr(child, "name")?;
                BpmnElement::Task(Phase::new(&name).map_err(|e| BpmnError::Invalid(e.to_string()))?)
            }
            "sequenceFlow" => {
                model.flows.push(SequenceFlow {
                    id: attr(child, "id")?,
                    source: attr(child, "sourceRef")?,
                    target: attr(child, "targetRef")?,
                });
                continue;
            }
            other => return Err(BpmnError::UnknownElement(other.to_string())),
        };
        model.nodes.push(BpmnNode {
            id: attr(child, "id")?,
            element,
        });
    }
    model.validate()?;
    Ok(model)
}
