use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Dfg, EventLog, MiningError, Operator, Trace};
use crate::instance::Phase;

/// A partition of the activities together with the operator that joins the
/// parts. For loops the first part is the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub kind: Operator,
    pub parts: Vec<BTreeSet<Phase>>,
}

type Graph = BTreeMap<Phase, BTreeSet<Phase>>;

/// Tries exclusive, sequence, parallel and loop cuts in that order.
pub fn find_cut(dfg: &Dfg) -> Option<Cut> {
    if dfg.activities().is_empty() {
        return None;
    }
    let succ = dfg.successors();
    exclusive_cut(dfg, &succ)
        .or_else(|| sequence_cut(dfg, &succ))
        .or_else(|| parallel_cut(dfg, &succ))
        .or_else(|| loop_cut(dfg, &succ))
}

fn cut_if_split(kind: Operator, parts: Vec<BTreeSet<Phase>>) -> Option<Cut> {
    (parts.len() >= 2).then_some(Cut { kind, parts })
}

/// Connected components of the undirected graph where `linked(a, b)` holds.
fn components<F>(nodes: &BTreeSet<Phase>, linked: F) -> Vec<BTreeSet<Phase>>
where
    F: Fn(&Phase, &Phase) -> bool,
{
    let mut seen: BTreeSet<Phase> = BTreeSet::new();
    let mut out = Vec::new();
    for start in nodes {
        if seen.contains(start) {
            continue;
        }
        let mut part = BTreeSet::new();
        let mut queue = VecDeque::from([start.clone()]);
        seen.insert(start.clone());
        while let Some(n) = queue.pop_front() {
            for m in nodes {
                if !seen.contains(m) && (linked(&n, m) || linked(m, &n)) {
                    seen.insert(m.clone());
                    queue.push_back(m.clone());
                }
            }
            part.insert(n);
        }
        out.push(part);
    }
    out
}

fn edge(succ: &Graph, a: &Phase, b: &Phase) -> bool {
    succ.get(a).is_some_and(|s| s.contains(b))
}

fn exclusive_cut(dfg: &Dfg, succ: &Graph) -> Option<Cut> {
    let parts = components(dfg.activities(), |a, b| edge(succ, a, b));
    cut_if_split(Operator::Exclusive, parts)
}

/// Transitive closure: `reach[a]` holds every node reachable from `a` by a
/// non-empty path.
fn reachability(succ: &Graph) -> Graph {
    succ.keys()
        .map(|a| {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<&Phase> = succ[a].iter().collect();
            while let Some(n) = queue.pop_front() {
                if seen.insert(n.clone()) {
                    queue.extend(succ[n].iter());
                }
            }
            (a.clone(), seen)
        })
        .collect()
}

fn sequence_cut(dfg: &Dfg, succ: &Graph) -> Option<Cut> {
    let reach = reachability(succ);
    let reaches = |a: &Phase, b: &Phase| reach[a].contains(b);
    // Group strongly connected activities and activities that cannot reach
    // each other in either direction.
    let nodes: Vec<&Phase> = dfg.activities().iter().collect();
    let mut group: Vec<usize> = (0..nodes.len()).collect();
    fn root(group: &mut [usize], mut i: usize) -> usize {
        while group[i] != i {
            group[i] = group[group[i]];
            i = group[i];
        }
        i
    }
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let ij = reaches(nodes[i], nodes[j]);
            let ji = reaches(nodes[j], nodes[i]);
            if ij == ji {
                let (ri, rj) = (root(&mut group, i), root(&mut group, j));
                group[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut by_root: BTreeMap<usize, BTreeSet<Phase>> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        by_root
            .entry(root(&mut group, i))
            .or_default()
            .insert((*n).clone());
    }
    let mut parts: Vec<BTreeSet<Phase>> = by_root.into_values().collect();
    if parts.len() < 2 {
        return None;
    }
    // Earlier parts reach more of the others.
    let mut keyed: Vec<(usize, BTreeSet<Phase>)> = parts
        .iter()
        .map(|p| (parts_reached(p, &parts, &reaches), p.clone()))
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    parts = keyed.into_iter().map(|(_, p)| p).collect();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            for a in &parts[i] {
                for b in &parts[j] {
                    if !reaches(a, b) || reaches(b, a) {
                        return None;
                    }
                }
            }
        }
    }
    cut_if_split(Operator::Sequence, parts)
}

fn parts_reached<F>(part: &BTreeSet<Phase>, parts: &[BTreeSet<Phase>], reaches: &F) -> usize
where
    F: Fn(&Phase, &Phase) -> bool,
{
    parts
        .iter()
        .filter(|other| *other != part)
        .filter(|other| part.iter().any(|a| other.iter().any(|b| reaches(a, b))))
        .count()
}

fn parallel_cut(dfg: &Dfg, succ: &Graph) -> Option<Cut> {
    let both = |a: &Phase, b: &Phase| edge(succ, a, b) && edge(succ, b, a);
    let raw = components(dfg.activities(), |a, b| a != b && !both(a, b));
    let starts = dfg.start_activities();
    let ends = dfg.end_activities();
    let complete = |p: &BTreeSet<Phase>| !p.is_disjoint(&starts) && !p.is_disjoint(&ends);
    let (mut parts, partial): (Vec<_>, Vec<_>) = raw.into_iter().partition(|p| complete(p));
    if parts.is_empty() {
        return None;
    }
    for p in partial {
        parts[0].extend(p);
    }
    if parts.len() < 2 {
        return None;
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            for a in &parts[i] {
                for b in &parts[j] {
                    if !both(a, b) {
                        return None;
                    }
                }
            }
        }
    }
    cut_if_split(Operator::Parallel, parts)
}

fn loop_cut(dfg: &Dfg, succ: &Graph) -> Option<Cut> {
    let starts = dfg.start_activities();
    let ends = dfg.end_activities();
    let mut body: BTreeSet<Phase> = starts.union(&ends).cloned().collect();
    let rest: BTreeSet<Phase> = dfg.activities().difference(&body).cloned().collect();
    let mut redos = components(&rest, |a, b| edge(succ, a, b));
    loop {
        let before = redos.len();
        redos.retain(|part| {
            let belongs_to_body = part.iter().any(|r| {
                let into_non_start = body.iter().any(|b| !starts.contains(b) && edge(succ, r, b));
                let from_non_end = body.iter().any(|b| !ends.contains(b) && edge(succ, b, r));
                let to_starts: Vec<bool> = starts.iter().map(|s| edge(succ, r, s)).collect();
                let partial_starts = to_starts.iter().any(|&x| x) && !to_starts.iter().all(|&x| x);
                let from_ends: Vec<bool> = ends.iter().map(|e| edge(succ, e, r)).collect();
                let partial_ends = from_ends.iter().any(|&x| x) && !from_ends.iter().all(|&x| x);
                into_non_start || from_non_end || partial_starts || partial_ends
            });
            if belongs_to_body {
                body.extend(part.iter().cloned());
            }
            !belongs_to_body
        });
        if redos.len() == before {
            break;
        }
    }
    let mut parts = vec![body];
    parts.extend(redos);
    cut_if_split(Operator::Loop, parts)
}

/// Divides the log according to the cut, one sublog per part.
pub fn split_log(log: &EventLog, cut: &Cut) -> Result<Vec<EventLog>, MiningError> {
    let mut owner: BTreeMap<&Phase, usize> = BTreeMap::new();
    for (i, part) in cut.parts.iter().enumerate() {
        if part.is_empty() {
            return Err(MiningError::InvalidCut("empty part".into()));
        }
        for p in part {
            if owner.insert(p, i).is_some() {
                return Err(MiningError::InvalidCut(format!("{p} appears in two parts")));
            }
        }
    }
    if let Some(missing) = log.alphabet().iter().find(|p| !owner.contains_key(p)) {
        return Err(MiningError::InvalidCut(format!("{missing} is not covered")));
    }
    let n = cut.parts.len();
    let mut out = vec![EventLog::new(); n];
    for (trace, count) in log.iter() {
        let idx: Vec<usize> = trace.iter().map(|p| owner[p]).collect();
        match cut.kind {
            Operator::Exclusive => {
                let mut tally = vec![0usize; n];
                idx.iter().for_each(|&i| tally[i] += 1);
                let best = (0..n).rev().max_by_key(|&i| tally[i]).unwrap_or(0);
                out[best].add(project(trace, &cut.parts[best]), count);
            }
            Operator::Sequence => {
                let mut pieces: Vec<Trace> = vec![Vec::new(); n];
                let mut cursor = 0;
                for (p, &i) in trace.iter().zip(&idx) {
                    cursor = cursor.max(i);
                    pieces[cursor].push(p.clone());
                }
                for (sub, piece) in out.iter_mut().zip(pieces) {
                    sub.add(piece, count);
                }
            }
            Operator::Parallel => {
                for (sub, part) in out.iter_mut().zip(&cut.parts) {
                    sub.add(project(trace, part), count);
                }
            }
            Operator::Loop => {
                let mut runs: Vec<(usize, Trace)> = Vec::new();
                for (p, &i) in trace.iter().zip(&idx) {
                    match runs.last_mut() {
                        Some((last, run)) if *last == i => run.push(p.clone()),
                        _ => {
                            // A redo directly after another redo, or at either
                            // end, implies an empty body iteration.
                            let prev_redo = runs.last().is_none_or(|(l, _)| *l != 0);
                            if i != 0 && prev_redo {
                                runs.push((0, Vec::new()));
                            }
                            runs.push((i, vec![p.clone()]));
                        }
                    }
                }
                if runs.last().is_none_or(|(l, _)| *l != 0) {
                    runs.push((0, Vec::new()));
                }
                for (i, run) in runs {
                    out[i].add(run, count);
                }
            }
        }
    }
    Ok(out)
}

fn project(trace: &[Phase], keep: &BTreeSet<Phase>) -> Trace {
    trace
        .iter()
        .filter(|p| keep.contains(*p))
        .cloned()
        .collect()
}
