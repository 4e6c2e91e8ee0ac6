//! Natural-language descriptions of BPMN models.
//!
//! Text planning walks the model from its start event and folds each gateway
//! block into one message; realization maps every message to a fixed sentence
//! template. The templates are invertible, see [`parse_description`].
//!
//! Nested blocks inside a message are summarised inline: an empty branch is
//! `nothing`, consecutive items are joined by ` then `, and blocks read
//! `one of [a | b]`, `all of [a | b]` and `repeat [body] after [r1 | r2]`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::bpmn::{BpmnElement, BpmnModel};
use crate::instance::Phase;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DescribeError {
    #[error("unstructured model: {0}")]
    UnstructuredModel(String),
    #[error("sentence {index} does not match any template: {sentence:?}")]
    UnknownSentence { index: usize, sentence: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MessageKind {
    Start,
    DoTask(Phase),
    OptionalTask(Phase),
    Choice(Vec<String>),
    ParallelBlock(Vec<String>),
    LoopBlock { body: String, redos: Vec<String> },
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Message {
    pub position: usize,
    pub kind: MessageKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessDescription {
    pub text: String,
    pub sentence_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Block {
    Task(Phase),
    Choice(Vec<Vec<Block>>),
    Parallel(Vec<Vec<Block>>),
    Loop {
        body: Vec<Block>,
        redos: Vec<Vec<Block>>,
    },
}

#[derive(Debug)]
enum Stop {
    End,
    Join(String),
    BackEdge(String),
    LoopExit {
        entry: String,
        redos: Vec<Vec<Block>>,
        rest: Vec<Block>,
        stop: Box<Stop>,
    },
}

struct Walker<'a> {
    model: &'a BpmnModel,
    elements: BTreeMap<&'a str, &'a BpmnElement>,
    loop_entries: BTreeSet<String>,
    open_loops: Vec<String>,
}

fn unstructured(msg: impl Into<String>) -> DescribeError {
    DescribeError::UnstructuredModel(msg.into())
}

impl<'a> Walker<'a> {
    fn new(model: &'a BpmnModel) -> Result<Self, DescribeError> {
        let elements = model
            .nodes
            .iter()
            .map(|n| (n.id.as_str(), &n.element))
            .collect();
        let mut w = Walker {
            model,
            elements,
            loop_entries: BTreeSet::new(),
            open_loops: Vec::new(),
        };
        w.find_loop_entries()?;
        Ok(w)
    }

    /// Targets of back edges in a depth-first search from the start event.
    fn find_loop_entries(&mut self) -> Result<(), DescribeError> {
        let start = self
            .model
            .start()
            .ok_or_else(|| unstructured("no start event"))?;
        let mut on_stack = BTreeSet::new();
        let mut done = BTreeSet::new();
        let mut stack: Vec<(&str, usize)> = vec![(start.id.as_str(), 0)];
        on_stack.insert(start.id.as_str());
        while let Some((node, next)) = stack.pop() {
            let succ = self.model.successors(node);
            if next < succ.len() {
                stack.push((node, next + 1));
                let m = succ[next];
                if on_stack.contains(m) {
                    self.loop_entries.insert(m.to_string());
                } else if !done.contains(m) {
                    on_stack.insert(m);
                    stack.push((m, 0));
                }
            } else {
                on_stack.remove(node);
                done.insert(node);
            }
        }
        for e in &self.loop_entries {
            if self.elements.get(e.as_str()) != Some(&&BpmnElement::ExclusiveGateway) {
                return Err(unstructured(format!("cycle re-enters at non-gateway {e}")));
            }
        }
        Ok(())
    }

    fn element(&self, id: &str) -> Result<&'a BpmnElement, DescribeError> {
        self.elements
            .get(id)
            .copied()
            .ok_or_else(|| unstructured(format!("unknown node {id}")))
    }

    fn single_successor(&self, id: &str) -> Result<&'a str, DescribeError> {
        match self.model.successors(id).as_slice() {
            [one] => Ok(one),
            other => Err(unstructured(format!(
                "node {id} has {} outgoing flows",
                other.len()
            ))),
        }
    }

    /// Collects blocks from `id` onwards until the walk leaves the current
    /// block.
    fn walk(&mut self, mut id: &'a str) -> Result<(Vec<Block>, Stop), DescribeError> {
        let mut blocks = Vec::new();
        loop {
            let element = self.element(id)?;
            let ins = self.model.predecessors(id).len();
            let outs = self.model.successors(id).len();
            match element {
                BpmnElement::EndEvent => return Ok((blocks, Stop::End)),
                BpmnElement::StartEvent => return Err(unstructured("flow into the start event")),
                BpmnElement::Task(p) => {
                    blocks.push(Block::Task(p.clone()));
                    id = self.single_successor(id)?;
                }
                _ if self.loop_entries.contains(id) => {
                    if self.open_loops.iter().any(|e| e == id) {
                        return Ok((blocks, Stop::BackEdge(id.to_string())));
                    }
                    self.open_loops.push(id.to_string());
                    let first = self.single_successor(id)?;
                    let (body, stop) = self.walk(first)?;
                    self.open_loops.pop();
                    match stop {
                        Stop::LoopExit {
                            entry,
                            redos,
                            rest,
                            stop,
                        } if entry == id => {
                            blocks.push(Block::Loop { body, redos });
                            blocks.extend(rest);
                            return Ok((blocks, *stop));
                        }
                        other => {
                            return Err(unstructured(format!("loop at {id} ends in {other:?}")))
                        }
                    }
                }
                _ if outs > 1 && ins > 1 => {
                    return Err(unstructured(format!("gateway {id} both splits and joins")))
                }
                _ if ins > 1 => return Ok((blocks, Stop::Join(id.to_string()))),
                _ if outs > 1 => {
                    let (block, next) = self.split(id, element)?;
                    match next {
                        Ok(after) => {
                            blocks.push(block.expect("block for a joined split"));
                            id = after;
                        }
                        Err(stop) => return Ok((blocks, stop)),
                    }
                }
                _ => id = self.single_successor(id)?,
            }
        }
    }

    /// Walks every branch of a split. Returns either the block and the node
    /// after its join, or the stop of an enclosing loop exit.
    #[allow(clippy::type_complexity)]
    fn split(
        &mut self,
        id: &'a str,
        element: &BpmnElement,
    ) -> Result<(Option<Block>, Result<&'a str, Stop>), DescribeError> {
        let mut branches = Vec::new();
        for target in self.model.successors(id) {
            branches.push(self.walk(target)?);
        }
        // The deepest loop some branch returns to is the one closing here;
        // back edges to outer loops continue past the inner loop.
        let closing = self.open_loops.iter().rev().find(|open| {
            branches
                .iter()
                .any(|(_, s)| matches!(s, Stop::BackEdge(e) if e == *open))
        });
        if let Some(entry) = closing.cloned() {
            if *element != BpmnElement::ExclusiveGateway {
                return Err(unstructured(format!("loop exit {id} is not exclusive")));
            }
            let mut redos = Vec::new();
            let mut forward = Vec::new();
            for (blocks, stop) in branches {
                match stop {
                    Stop::BackEdge(e) if e == entry => redos.push(blocks),
                    s => forward.push((blocks, s)),
                }
            }
            if forward.len() != 1 {
                return Err(unstructured(format!(
                    "loop exit {id} has {} continuations",
                    forward.len()
                )));
            }
            let (rest, stop) = forward.pop().expect("one continuation");
            return Ok((
                None,
                Err(Stop::LoopExit {
                    entry,
                    redos,
                    rest,
                    stop: Box::new(stop),
                }),
            ));
        }
        let mut join: Option<String> = None;
        let mut paths = Vec::new();
        for (blocks, stop) in branches {
            match stop {
                Stop::Join(j) if join.as_ref().is_none_or(|x| *x == j) => join = Some(j),
                other => return Err(unstructured(format!("branch of {id} ends in {other:?}"))),
            }
            paths.push(blocks);
        }
        let join = join.expect("split has branches");
        if self.element(&join)? != element {
            return Err(unstructured(format!(
                "split {id} closes at a different gateway kind"
            )));
        }
        let block = match element {
            BpmnElement::ParallelGateway => Block::Parallel(paths),
            _ => Block::Choice(paths),
        };
        let join_id = self
            .model
            .nodes
            .iter()
            .find(|n| n.id == join)
            .map(|n| n.id.as_str())
            .expect("known join");
        Ok((Some(block), Ok(self.single_successor(join_id)?)))
    }
}

fn summarize(blocks: &[Block]) -> String {
    if blocks.is_empty() {
        return "nothing".to_string();
    }
    blocks
        .iter()
        .map(|b| match b {
            Block::Task(p) => p.to_string(),
            Block::Choice(paths) => format!("one of [{}]", summarize_all(paths).join(" | ")),
            Block::Parallel(paths) => format!("all of [{}]", summarize_all(paths).join(" | ")),
            Block::Loop { body, redos } => format!(
                "repeat [{}] after [{}]",
                summarize(body),
                summarize_all(redos).join(" | ")
            ),
        })
        .collect::<Vec<_>>()
        .join(" then ")
}

fn summarize_all(paths: &[Vec<Block>]) -> Vec<String> {
    paths.iter().map(|p| summarize(p)).collect()
}

/// Orders the information to communicate: one message per task or gateway
/// block, between a start and an end message.
pub fn plan_text(model: &BpmnModel) -> Result<Vec<Message>, DescribeError> {
    let mut walker = Walker::new(model)?;
    let start = walker
        .model
        .start()
        .ok_or_else(|| unstructured("no start event"))?;
    let first = walker.single_successor(&start.id)?;
    let (blocks, stop) = walker.walk(first)?;
    if !matches!(stop, Stop::End) {
        return Err(unstructured(format!("walk ended in {stop:?}")));
    }
    let mut kinds = vec![MessageKind::Start];
    for block in blocks {
        kinds.push(match block {
            Block::Task(p) => MessageKind::DoTask(p),
            Block::Choice(paths) => match optional_task(&paths) {
                Some(p) => MessageKind::OptionalTask(p),
                None => MessageKind::Choice(summarize_all(&paths)),
            },
            Block::Parallel(paths) => MessageKind::ParallelBlock(summarize_all(&paths)),
            Block::Loop { body, redos } => MessageKind::LoopBlock {
                body: summarize(&body),
                redos: summarize_all(&redos),
            },
        });
    }
    kinds.push(MessageKind::End);
    Ok(kinds
        .into_iter()
        .enumerate()
        .map(|(position, kind)| Message { position, kind })
        .collect())
}

fn optional_task(paths: &[Vec<Block>]) -> Option<Phase> {
    match paths {
        [a, b] => match (a.as_slice(), b.as_slice()) {
            ([], [Block::Task(p)]) | ([Block::Task(p)], []) => Some(p.clone()),
            _ => None,
        },
        _ => None,
    }
}

/// Renders each message with its sentence template.
pub fn realize_text(messages: &[Message]) -> ProcessDescription {
    let mut sentences = Vec::with_capacity(messages.len());
    let mut previous: Option<&MessageKind> = None;
    for m in messages {
        sentences.push(match &m.kind {
            MessageKind::Start => "The process starts.".to_string(),
            MessageKind::DoTask(p) if matches!(previous, Some(MessageKind::Start)) => {
                format!("First, {p} is performed.")
            }
            MessageKind::DoTask(p) => format!("Then, {p} is performed."),
            MessageKind::OptionalTask(p) => format!("Optionally, {p} is performed."),
            MessageKind::Choice(items) => format!(
                "Next, exactly one of the following is performed: {}.",
                items.join(", ")
            ),
            MessageKind::ParallelBlock(items) => format!(
                "Next, the following are performed in any order: {}.",
                items.join(", ")
            ),
            MessageKind::LoopBlock { body, redos } => {
                format!("Next, {body}; this may repeat after {}.", redos.join(", "))
            }
            MessageKind::End => "The process ends.".to_string(),
        });
        previous = Some(&m.kind);
    }
    ProcessDescription {
        sentence_count: sentences.len(),
        text: sentences.join(" "),
    }
}

pub fn describe(model: &BpmnModel) -> Result<ProcessDescription, DescribeError> {
    Ok(realize_text(&plan_text(model)?))
}

/// Recovers the message list from a realized description.
pub fn parse_description(text: &str) -> Result<Vec<Message>, DescribeError> {
    let mut sentences = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let (sentence, tail) = match rest.find(". ") {
            Some(i) => (&rest[..i], &rest[i + 2..]),
            None => (rest.strip_suffix('.').unwrap_or(rest), ""),
        };
        sentences.push(sentence);
        rest = tail.trim_start();
    }
    let list = |s: &str| s.split(", ").map(str::to_string).collect::<Vec<_>>();
    sentences
        .into_iter()
        .enumerate()
        .map(|(position, s)| {
            let unknown = || DescribeError::UnknownSentence {
                index: position,
                sentence: s.to_string(),
            };
            let phase = |name: &str| Phase::new(name).map_err(|_| unknown());
            let kind = if s == "The process starts" {
                MessageKind::Start
            } else if s == "The process ends" {
                MessageKind::End
            } else if let Some(items) =
                s.strip_prefix("Next, exactly one of the following is performed: ")
            {
                MessageKind::Choice(list(items))
            } else if let Some(items) =
                s.strip_prefix("Next, the following are performed in any order: ")
            {
                MessageKind::ParallelBlock(list(items))
            } else if let Some((body, redos)) = s
                .strip_prefix("Next, ")
                .and_then(|x| x.split_once("; this may repeat after "))
            {
                MessageKind::LoopBlock {
                    body: body.to_string(),
                    redos: list(redos),
                }
            } else if let Some(name) = s.strip_suffix(" is performed") {
                if let Some(p) = name.strip_prefix("First, ").or(name.strip_prefix("Then, ")) {
                    MessageKind::DoTask(phase(p)?)
                } else if let Some(p) = name.strip_prefix("Optionally, ") {
                    MessageKind::OptionalTask(phase(p)?)
                } else {
                    return Err(unknown());
                }
            } else {
                return Err(unknown());
            };
            Ok(Message { position, kind })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpmn::{tree_to_bpmn, BpmnNode, SequenceFlow};
    use crate::mining::ProcessTree;

    fn model(expr: &str) -> BpmnModel {
        tree_to_bpmn(&ProcessTree::parse(expr).unwrap())
    }
    fn kinds(expr: &str) -> Vec<MessageKind> {
        plan_text(&model(expr))
            .unwrap()
            .into_iter()
            .map(|m| m.kind)
            .collect()
    }
    fn p(name: &str) -> Phase {
        Phase::new(name).unwrap()
    }

    #[test]
    fn plans() {
        assert_eq!(
            kinds("A"),
            vec![
                MessageKind::Start,
                MessageKind::DoTask(p("A")),
                MessageKind::End
            ]
        );
        assert_eq!(
            kinds("seq(D, xor(tau, R), C, T)"),
            vec![
                MessageKind::Start,
                MessageKind::DoTask(p("D")),
                MessageKind::OptionalTask(p("R")),
                MessageKind::DoTask(p("C")),
                MessageKind::DoTask(p("T")),
                MessageKind::End
            ]
        );
        assert_eq!(
            kinds("par(A, B)"),
            vec![
                MessageKind::Start,
                MessageKind::ParallelBlock(vec!["A".into(), "B".into()]),
                MessageKind::End
            ]
        );
    }

    #[test]
    fn nested_summaries() {
        assert_eq!(
            kinds("loop(seq(A, xor(B, C)), tau, D)")[1],
            MessageKind::LoopBlock {
                body: "A then one of [B | C]".into(),
                redos: vec!["nothing".into(), "D".into()]
            }
        );
        assert_eq!(
            kinds("xor(par(A, B), loop(C, D))")[1],
            MessageKind::Choice(vec!["repeat [C] after [D]".into(), "all of [A | B]".into()])
        );
        assert_eq!(
            kinds("seq(loop(loop(A, B), C), E)"),
            vec![
                MessageKind::Start,
                MessageKind::LoopBlock {
                    body: "repeat [A] after [B]".into(),
                    redos: vec!["C".into()]
                },
                MessageKind::DoTask(p("E")),
                MessageKind::End
            ]
        );
    }

    #[test]
    fn realized_text() {
        let d = describe(&model("Coding")).unwrap();
        assert_eq!(
            d.text,
            "The process starts. First, Coding is performed. The process ends."
        );
        assert_eq!(d.sentence_count, 3);
        let d = describe(&model("seq(D, xor(tau, R), C, T)")).unwrap();
        assert_eq!(
            d.text,
            "The process starts. First, D is performed. Optionally, R is performed. \
             Then, C is performed. Then, T is performed. The process ends."
        );
        assert_eq!(
            describe(&model("tau")).unwrap().text,
            "The process starts. The process ends."
        );
    }

    #[test]
    fn templates_invert() {
        for expr in [
            "seq(D, xor(tau, R), C, T)",
            "seq(A, par(B, seq(C, D)), loop(E, F, tau), xor(G, H))",
            "tau",
        ] {
            let messages = plan_text(&model(expr)).unwrap();
            let text = realize_text(&messages).text;
            assert_eq!(parse_description(&text).unwrap(), messages, "{expr}");
        }
        assert!(parse_description("Something else.").is_err());
    }

    #[test]
    fn nested_loops_describe() {
        for expr in ["loop(L0, loop(L1, L2))", "loop(seq(L0, loop(L1, L2)), L3)"] {
            let d = describe(&model(expr)).unwrap();
            assert_eq!(
                parse_description(&d.text).unwrap(),
                plan_text(&model(expr)).unwrap()
            );
        }
    }

    #[test]
    fn unstructured_model_rejected() {
        let node = |id: &str, element| BpmnNode {
            id: id.into(),
            element,
        };
        let flow = |id: &str, s: &str, t: &str| SequenceFlow {
            id: id.into(),
            source: s.into(),
            target: t.into(),
        };
        // Exclusive split closed by a parallel join.
        let m = BpmnModel {
            nodes: vec![
                node("s", BpmnElement::StartEvent),
                node("x", BpmnElement::ExclusiveGateway),
                node("a", BpmnElement::Task(p("A"))),
                node("b", BpmnElement::Task(p("B"))),
                node("j", BpmnElement::ParallelGateway),
                node("e", BpmnElement::EndEvent),
            ],
            flows: vec![
                flow("f0", "s", "x"),
                flow("f1", "x", "a"),
                flow("f2", "x", "b"),
                flow("f3", "a", "j"),
                flow("f4", "b", "j"),
                flow("f5", "j", "e"),
            ],
        };
        assert!(matches!(
            plan_text(&m),
            Err(DescribeError::UnstructuredModel(_))
        ));
    }
}
