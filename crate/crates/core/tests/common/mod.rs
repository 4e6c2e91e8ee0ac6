#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use devloop::bpmn::{BpmnElement, BpmnModel};
use devloop::mining::{build_dfg, DfgNode, EventLog, Operator, ProcessTree, Trace};
use devloop::Phase;
use rand::Rng;

/// Random process tree with unique labels `L0, L1, ...`, at most
/// `max_leaves` visible leaves and depth at most `max_depth`. Tau only
/// appears as an exclusive branch; loop children never accept the empty
/// trace and loop bodies are never parallel or loop nodes.
pub fn random_tree<R: Rng>(rng: &mut R, max_depth: usize, max_leaves: usize) -> ProcessTree {
    let mut next = 0;
    build(rng, 0, max_depth, max_leaves, false, &mut next)
}

/// Like [`random_tree`], but every loop body also has disjoint start and
/// end activities, the class of trees the miner is guaranteed to recover
/// from a directly-follows complete log. May use one leaf more than
/// `max_leaves` for such a body.
pub fn random_rediscoverable_tree<R: Rng>(
    rng: &mut R,
    max_depth: usize,
    max_leaves: usize,
) -> ProcessTree {
    let mut next = 0;
    build(rng, 0, max_depth, max_leaves, true, &mut next)
}

fn leaf(next: &mut usize) -> ProcessTree {
    *next += 1;
    ProcessTree::leaf(&format!("L{}", *next - 1))
}

fn build<R: Rng>(
    rng: &mut R,
    depth: usize,
    max_depth: usize,
    budget: usize,
    separated_bodies: bool,
    next: &mut usize,
) -> ProcessTree {
    let remaining = budget.saturating_sub(*next);
    if depth >= max_depth || remaining < 2 || (depth > 0 && rng.random_bool(0.35)) {
        return leaf(next);
    }
    let arity = rng.random_range(2..=3usize).min(remaining);
    // A separated loop body needs room for a two-leaf sequence.
    let kinds = if separated_bodies && depth + 2 > max_depth {
        3
    } else {
        4
    };
    match rng.random_range(0..kinds) {
        0 => {
            let ch = (0..arity)
                .map(|_| build(rng, depth + 1, max_depth, budget, separated_bodies, next))
                .collect();
            ProcessTree::seq(ch)
        }
        1 => {
            let mut ch: Vec<ProcessTree> = (0..arity)
                .map(|_| build(rng, depth + 1, max_depth, budget, separated_bodies, next))
                .collect();
            if rng.random_bool(0.4) && !ch.iter().any(ProcessTree::accepts_empty) {
                ch.push(ProcessTree::Tau);
            }
            ProcessTree::xor(ch)
        }
        2 => {
            let ch = (0..arity)
                .map(|_| build(rng, depth + 1, max_depth, budget, separated_bodies, next))
                .collect();
            ProcessTree::par(ch)
        }
        _ => {
            let mut body = build(rng, depth + 1, max_depth, budget, separated_bodies, next);
            if body.accepts_empty()
                || matches!(
                    body,
                    ProcessTree::Node(Operator::Parallel | Operator::Loop, _)
                )
            {
                body = leaf(next);
            }
            if separated_bodies {
                let b = shape(&body);
                if !b.first.is_disjoint(&b.last) {
                    body = ProcessTree::seq(vec![leaf(next), leaf(next)]);
                }
            }
            let redos = (1..arity)
                .map(|_| {
                    let r = build(rng, depth + 1, max_depth, budget, separated_bodies, next);
                    if r.accepts_empty() {
                        leaf(next)
                    } else {
                        r
                    }
                })
                .collect();
            ProcessTree::looped(body, redos)
        }
    }
}

pub fn dfg_edges(traces: &BTreeSet<Trace>) -> BTreeSet<(DfgNode, DfgNode)> {
    let log = EventLog::from_traces(traces.iter().cloned()).without_empty();
    if log.is_empty() {
        return BTreeSet::new();
    }
    build_dfg(&log)
        .expect("non-empty traces")
        .edges()
        .map(|(a, b, _)| (a.clone(), b.clone()))
        .collect()
}

/// Traces up to `max_len` labels that a token game on the model can
/// complete. Exclusive gateways move one token from any input to one
/// output, parallel gateways synchronise all inputs and fill all outputs.
pub fn token_game_language(model: &BpmnModel, max_len: usize) -> BTreeSet<Vec<Phase>> {
    let index = |id: &str| {
        model
            .nodes
            .iter()
            .position(|n| n.id == id)
            .expect("known node")
    };
    let incoming: Vec<Vec<usize>> = (0..model.nodes.len())
        .map(|n| {
            (0..model.flows.len())
                .filter(|&f| index(&model.flows[f].target) == n)
                .collect()
        })
        .collect();
    let outgoing: Vec<Vec<usize>> = (0..model.nodes.len())
        .map(|n| {
            (0..model.flows.len())
                .filter(|&f| index(&model.flows[f].source) == n)
                .collect()
        })
        .collect();
    let start = model
        .nodes
        .iter()
        .position(|n| n.element == BpmnElement::StartEvent)
        .expect("start event");

    let mut initial = vec![0u8; model.flows.len()];
    for &f in &outgoing[start] {
        initial[f] += 1;
    }
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(Vec<u8>, Vec<Phase>)> = HashSet::new();
    let mut queue = VecDeque::from([(initial, Vec::<Phase>::new())]);
    while let Some((marking, trace)) = queue.pop_front() {
        if !seen.insert((marking.clone(), trace.clone())) {
            continue;
        }
        for (n, node) in model.nodes.iter().enumerate() {
            let inputs: Vec<usize> = incoming[n]
                .iter()
                .copied()
                .filter(|&f| marking[f] > 0)
                .collect();
            if inputs.is_empty() {
                continue;
            }
            match &node.element {
                BpmnElement::StartEvent => {}
                BpmnElement::EndEvent => {
                    let mut m = marking.clone();
                    m[inputs[0]] -= 1;
                    if m.iter().all(|&c| c == 0) {
                        out.insert(trace.clone());
                    }
                }
                BpmnElement::Task(p) => {
                    if trace.len() >= max_len {
                        continue;
                    }
                    let mut m = marking.clone();
                    m[inputs[0]] -= 1;
                    for &f in &outgoing[n] {
                        m[f] += 1;
                    }
                    let mut t = trace.clone();
                    t.push(p.clone());
                    queue.push_back((m, t));
                }
                BpmnElement::ExclusiveGateway => {
                    for &i in &inputs {
                        for &o in &outgoing[n] {
                            let mut m = marking.clone();
                            m[i] -= 1;
                            m[o] += 1;
                            queue.push_back((m, trace.clone()));
                        }
                    }
                }
                BpmnElement::ParallelGateway => {
                    if inputs.len() < incoming[n].len() {
                        continue;
                    }
                    let mut m = marking.clone();
                    for &i in &incoming[n] {
                        m[i] -= 1;
                    }
                    for &o in &outgoing[n] {
                        m[o] += 1;
                    }
                    queue.push_back((m, trace.clone()));
                }
            }
        }
    }
    out
}

struct Shape {
    nullable: bool,
    first: BTreeSet<Phase>,
    last: BTreeSet<Phase>,
    follows: BTreeSet<(Phase, Phase)>,
}

fn shape(tree: &ProcessTree) -> Shape {
    let cross = |a: &BTreeSet<Phase>, b: &BTreeSet<Phase>| -> Vec<(Phase, Phase)> {
        a.iter()
            .flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone())))
            .collect()
    };
    match tree {
        ProcessTree::Tau => Shape {
            nullable: true,
            first: BTreeSet::new(),
            last: BTreeSet::new(),
            follows: BTreeSet::new(),
        },
        ProcessTree::Leaf(p) => Shape {
            nullable: false,
            first: BTreeSet::from([p.clone()]),
            last: BTreeSet::from([p.clone()]),
            follows: BTreeSet::new(),
        },
        ProcessTree::Node(op, children) => {
            let parts: Vec<Shape> = children.iter().map(shape).collect();
            let mut follows: BTreeSet<(Phase, Phase)> = parts
                .iter()
                .flat_map(|s| s.follows.iter().cloned())
                .collect();
            let union = |f: fn(&Shape) -> &BTreeSet<Phase>| -> BTreeSet<Phase> {
                parts.iter().flat_map(|s| f(s).iter().cloned()).collect()
            };
            match op {
                Operator::Sequence => {
                    for i in 0..parts.len() {
                        for j in i + 1..parts.len() {
                            follows.extend(cross(&parts[i].last, &parts[j].first));
                            if !parts[j].nullable {
                                break;
                            }
                        }
                    }
                    let mut first = BTreeSet::new();
                    for s in &parts {
                        first.extend(s.first.iter().cloned());
                        if !s.nullable {
                            break;
                        }
                    }
                    let mut last = BTreeSet::new();
                    for s in parts.iter().rev() {
                        last.extend(s.last.iter().cloned());
                        if !s.nullable {
                            break;
                        }
                    }
                    Shape {
                        nullable: parts.iter().all(|s| s.nullable),
                        first,
                        last,
                        follows,
                    }
                }
                Operator::Exclusive => Shape {
                    nullable: parts.iter().any(|s| s.nullable),
                    first: union(|s| &s.first),
                    last: union(|s| &s.last),
                    follows,
                },
                Operator::Parallel => {
                    let alphabets: Vec<BTreeSet<Phase>> =
                        children.iter().map(ProcessTree::alphabet).collect();
                    for i in 0..alphabets.len() {
                        for j in 0..alphabets.len() {
                            if i != j {
                                follows.extend(cross(&alphabets[i], &alphabets[j]));
                            }
                        }
                    }
                    Shape {
                        nullable: parts.iter().all(|s| s.nullable),
                        first: union(|s| &s.first),
                        last: union(|s| &s.last),
                        follows,
                    }
                }
                Operator::Loop => {
                    let body = &parts[0];
                    assert!(!body.nullable && parts[1..].iter().all(|s| !s.nullable));
                    for redo in &parts[1..] {
                        follows.extend(cross(&body.last, &redo.first));
                        follows.extend(cross(&redo.last, &body.first));
                    }
                    Shape {
                        nullable: false,
                        first: body.first.clone(),
                        last: body.last.clone(),
                        follows,
                    }
                }
            }
        }
    }
}

/// Directly-follows edges of the tree's full language, computed from its
/// structure, ignoring the empty trace. Assumes loop children never
/// accept the empty trace.
pub fn tree_dfg_edges(tree: &ProcessTree) -> BTreeSet<(DfgNode, DfgNode)> {
    let s = shape(tree);
    let act = |p: &Phase| DfgNode::Activity(p.clone());
    let mut edges: BTreeSet<(DfgNode, DfgNode)> =
        s.follows.iter().map(|(a, b)| (act(a), act(b))).collect();
    edges.extend(s.first.iter().map(|p| (DfgNode::Start, act(p))));
    edges.extend(s.last.iter().map(|p| (act(p), DfgNode::End)));
    edges
}
