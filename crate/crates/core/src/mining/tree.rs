//! Process trees: structure, trace semantics, bounded language enumeration,
//! random simulation and the prefix expression format.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::instance::Phase;

/// A trace is a possibly-empty sequence of phases.
pub type Trace = Vec<Phase>;

/// Guard for [`ProcessTree::enumerate_language`].
pub const MAX_ENUMERATION_LEN: usize = 12;
/// Default cap on the size of any intermediate trace set during enumeration.
pub const DEFAULT_NODE_BUDGET: usize = 500_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("operator {0} needs at least two children")]
    TooFewChildren(Operator),
    #[error("max_len {0} exceeds the enumeration limit of {MAX_ENUMERATION_LEN}")]
    MaxLenTooLarge(usize),
    #[error("enumeration exceeded the node budget of {0}")]
    DepthExceeded(usize),
    #[error("expression: {0}")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Sequence,
    Exclusive,
    Parallel,
    /// First child is the body, the rest are redo parts.
    Loop,
}

impl Operator {
    pub fn keyword(self) -> &'static str {
        match self {
            Operator::Sequence => "seq",
            Operator::Exclusive => "xor",
            Operator::Parallel => "par",
            Operator::Loop => "loop",
        }
    }

    fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "seq" => Operator::Sequence,
            "xor" => Operator::Exclusive,
            "par" | "and" => Operator::Parallel,
            "loop" => Operator::Loop,
            _ => return None,
        })
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Block-structured process model.
///
/// Children of exclusive and parallel nodes are kept in canonical order (τ
/// first, then by rendered form), so structurally equal models compare equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ProcessTree {
    Tau,
    Leaf(Phase),
    Node(Operator, Vec<ProcessTree>),
}

impl ProcessTree {
    pub fn leaf(name: &str) -> Self {
        ProcessTree::Leaf(Phase::new(name).expect("valid phase name"))
    }

    /// Builds an operator node, canonicalising child order where it does not
    /// matter.
    pub fn operator(op: Operator, mut children: Vec<ProcessTree>) -> Result<Self, TreeError> {
        if children.len() < 2 {
            return Err(TreeError::TooFewChildren(op));
        }
        if matches!(op, Operator::Exclusive | Operator::Parallel) {
            children.sort_by_cached_key(|c| (!matches!(c, ProcessTree::Tau), c.to_string()));
        }
        Ok(ProcessTree::Node(op, children))
    }

    // Shorthands for literal trees; they panic on fewer than two children.
    pub fn seq(children: Vec<ProcessTree>) -> Self {
        Self::operator(Operator::Sequence, children).expect("seq needs two children")
    }
    pub fn xor(children: Vec<ProcessTree>) -> Self {
        Self::operator(Operator::Exclusive, children).expect("xor needs two children")
    }
    pub fn par(children: Vec<ProcessTree>) -> Self {
        Self::operator(Operator::Parallel, children).expect("par needs two children")
    }
    pub fn looped(body: ProcessTree, redos: Vec<ProcessTree>) -> Self {
        let mut children = vec![body];
        children.extend(redos);
        Self::operator(Operator::Loop, children).expect("loop needs a redo part")
    }

    /// Re-sorts every exclusive/parallel child list.
    pub fn canonical(self) -> Self {
        match self {
            ProcessTree::Node(op, children) => {
                let children = children.into_iter().map(ProcessTree::canonical).collect();
                Self::operator(op, children).expect("arity preserved")
            }
            other => other,
        }
    }

    /// Distinct labels of all leaves.
    pub fn alphabet(&self) -> BTreeSet<Phase> {
        let mut out = BTreeSet::new();
        self.collect_alphabet(&mut out);
        out
    }

    fn collect_alphabet(&self, out: &mut BTreeSet<Phase>) {
        match self {
            ProcessTree::Tau => {}
            ProcessTree::Leaf(p) => {
                out.insert(p.clone());
            }
            ProcessTree::Node(_, ch) => ch.iter().for_each(|c| c.collect_alphabet(out)),
        }
    }

    /// Number of leaves that are not τ, counting repeated labels.
    pub fn visible_leaf_count(&self) -> usize {
        match self {
            ProcessTree::Tau => 0,
            ProcessTree::Leaf(_) => 1,
            ProcessTree::Node(_, ch) => ch.iter().map(ProcessTree::visible_leaf_count).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ProcessTree::Node(_, ch) => 1 + ch.iter().map(ProcessTree::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// True if the empty trace is in the language.
    pub fn accepts_empty(&self) -> bool {
        match self {
            ProcessTree::Tau => true,
            ProcessTree::Leaf(_) => false,
            ProcessTree::Node(Operator::Exclusive, ch) => ch.iter().any(ProcessTree::accepts_empty),
            ProcessTree::Node(Operator::Loop, ch) => ch[0].accepts_empty(),
            ProcessTree::Node(_, ch) => ch.iter().all(ProcessTree::accepts_empty),
        }
    }

    /// Language membership.
    pub fn accepts(&self, trace: &[Phase]) -> bool {
        Matcher::new(trace).matches(self, 0, trace.len())
    }

    /// Every trace of length at most `max_len`, generated from the tree
    /// semantics.
    pub fn enumerate_language(&self, max_len: usize) -> Result<BTreeSet<Trace>, TreeError> {
        self.enumerate_language_with_budget(max_len, DEFAULT_NODE_BUDGET)
    }

    pub fn enumerate_language_with_budget(
        &self,
        max_len: usize,
        budget: usize,
    ) -> Result<BTreeSet<Trace>, TreeError> {
        if max_len > MAX_ENUMERATION_LEN {
            return Err(TreeError::MaxLenTooLarge(max_len));
        }
        Enumerator { max_len, budget }.language(self)
    }

    /// Draws one trace by simulating the tree. Each loop repeats with
    /// probability `repeat_prob` per iteration, at most `max_repeats` times.
    pub fn sample_trace<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        repeat_prob: f64,
        max_repeats: usize,
    ) -> Trace {
        let mut out = Vec::new();
        self.sample_into(rng, repeat_prob, max_repeats, &mut out);
        out
    }

    fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        repeat_prob: f64,
        max_repeats: usize,
        out: &mut Trace,
    ) {
        match self {
            ProcessTree::Tau => {}
            ProcessTree::Leaf(p) => out.push(p.clone()),
            ProcessTree::Node(Operator::Sequence, ch) => {
                for c in ch {
                    c.sample_into(rng, repeat_prob, max_repeats, out);
                }
            }
            ProcessTree::Node(Operator::Exclusive, ch) => {
                let pick = rng.random_range(0..ch.len());
                ch[pick].sample_into(rng, repeat_prob, max_repeats, out);
            }
            ProcessTree::Node(Operator::Parallel, ch) => {
                let parts: Vec<Trace> = ch
                    .iter()
                    .map(|c| c.sample_trace(rng, repeat_prob, max_repeats))
                    .collect();
                let mut cursors = vec![0usize; parts.len()];
                loop {
                    let open: Vec<usize> = (0..parts.len())
                        .filter(|&i| cursors[i] < parts[i].len())
                        .collect();
                    if open.is_empty() {
                        break;
                    }
                    let i = open[rng.random_range(0..open.len())];
                    out.push(parts[i][cursors[i]].clone());
                    cursors[i] += 1;
                }
            }
            ProcessTree::Node(Operator::Loop, ch) => {
                ch[0].sample_into(rng, repeat_prob, max_repeats, out);
                let mut repeats = 0;
                while repeats < max_repeats && rng.random_bool(repeat_prob) {
                    let redo = &ch[1 + rng.random_range(0..ch.len() - 1)];
                    redo.sample_into(rng, repeat_prob, max_repeats, out);
                    ch[0].sample_into(rng, repeat_prob, max_repeats, out);
                    repeats += 1;
                }
            }
        }
    }

    /// Parses the prefix notation, e.g. `seq(D, xor(tau, R), C, T)`.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let mut p = ExprParser {
            tokens: tokenize(text),
            pos: 0,
        };
        let tree = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(TreeError::Syntax(format!(
                "unexpected trailing token {:?}",
                p.tokens[p.pos]
            )));
        }
        Ok(tree)
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTree::Tau => f.write_str("tau"),
            ProcessTree::Leaf(p) => write!(f, "{p}"),
            ProcessTree::Node(op, ch) => {
                write!(f, "{op}(")?;
                for (i, c) in ch.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for ProcessTree {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProcessTree::parse(s)
    }
}

/// Memoised membership test over contiguous ranges of one trace. Parallel
/// nodes project onto child alphabets and recurse with a fresh matcher.
struct Matcher<'a> {
    trace: &'a [Phase],
    memo: HashMap<(usize, usize, usize), bool>,
}

impl<'a> Matcher<'a> {
    fn new(trace: &'a [Phase]) -> Self {
        Matcher {
            trace,
            memo: HashMap::new(),
        }
    }

    fn matches(&mut self, tree: &ProcessTree, i: usize, j: usize) -> bool {
        let key = (tree as *const ProcessTree as usize, i, j);
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }
        let result = match tree {
            ProcessTree::Tau => i == j,
            ProcessTree::Leaf(p) => j == i + 1 && &self.trace[i] == p,
            ProcessTree::Node(Operator::Exclusive, ch) => ch.iter().any(|c| self.matches(c, i, j)),
            ProcessTree::Node(Operator::Sequence, ch) => self.sequence_reaches(ch, i, j),
            ProcessTree::Node(Operator::Loop, ch) => self.loop_matches(&ch[0], &ch[1..], i, j),
            ProcessTree::Node(Operator::Parallel, ch) => parallel_accepts(ch, &self.trace[i..j]),
        };
        self.memo.insert(key, result);
        result
    }

    fn sequence_reaches(&mut self, ch: &[ProcessTree], i: usize, j: usize) -> bool {
        let mut reach: BTreeSet<usize> = BTreeSet::from([i]);
        for c in ch {
            let mut next = BTreeSet::new();
            for &from in &reach {
                for to in from..=j {
                    if self.matches(c, from, to) {
                        next.insert(to);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            reach = next;
        }
        reach.contains(&j)
    }

    fn loop_matches(
        &mut self,
        body: &ProcessTree,
        redos: &[ProcessTree],
        i: usize,
        j: usize,
    ) -> bool {
        // Positions reachable right after a body iteration.
        let mut after_body: HashSet<usize> = HashSet::new();
        let mut frontier: Vec<usize> = (i..=j).filter(|&k| self.matches(body, i, k)).collect();
        after_body.extend(frontier.iter().copied());
        let mut after_redo: HashSet<usize> = HashSet::new();
        while let Some(b) = frontier.pop() {
            for redo in redos {
                for m in b..=j {
                    if !after_redo.contains(&m) && self.matches(redo, b, m) {
                        after_redo.insert(m);
                        for k in m..=j {
                            if self.matches(body, m, k) && after_body.insert(k) {
                                frontier.push(k);
                            }
                        }
                    }
                }
            }
        }
        after_body.contains(&j)
    }
}

fn parallel_accepts(children: &[ProcessTree], trace: &[Phase]) -> bool {
    let alphabets: Vec<BTreeSet<Phase>> = children.iter().map(ProcessTree::alphabet).collect();
    let candidates: Vec<Vec<usize>> = trace
        .iter()
        .map(|p| {
            (0..children.len())
                .filter(|&c| alphabets[c].contains(p))
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return false;
    }
    if candidates.iter().all(|c| c.len() == 1) {
        let mut parts: Vec<Trace> = vec![Vec::new(); children.len()];
        for (p, c) in trace.iter().zip(&candidates) {
            parts[c[0]].push(p.clone());
        }
        return children.iter().zip(&parts).all(|(c, t)| c.accepts(t));
    }
    // Overlapping alphabets: search over event-to-child assignments.
    let mut parts: Vec<Trace> = vec![Vec::new(); children.len()];
    assign(children, trace, &candidates, 0, &mut parts)
}

fn assign(
    children: &[ProcessTree],
    trace: &[Phase],
    candidates: &[Vec<usize>],
    k: usize,
    parts: &mut Vec<Trace>,
) -> bool {
    if k == trace.len() {
        return children.iter().zip(parts.iter()).all(|(c, t)| c.accepts(t));
    }
    for &c in &candidates[k] {
        parts[c].push(trace[k].clone());
        let ok = assign(children, trace, candidates, k + 1, parts);
        parts[c].pop();
        if ok {
            return true;
        }
    }
    false
}

struct Enumerator {
    max_len: usize,
    budget: usize,
}

impl Enumerator {
    fn check(&self, set: &BTreeSet<Trace>) -> Result<(), TreeError> {
        if set.len() > self.budget {
            Err(TreeError::DepthExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn language(&self, tree: &ProcessTree) -> Result<BTreeSet<Trace>, TreeError> {
        let out = match tree {
            ProcessTree::Tau => BTreeSet::from([Vec::new()]),
            ProcessTree::Leaf(p) if self.max_len >= 1 => BTreeSet::from([vec![p.clone()]]),
            ProcessTree::Leaf(_) => BTreeSet::new(),
            ProcessTree::Node(Operator::Exclusive, ch) => {
                let mut acc = BTreeSet::new();
                for c in ch {
                    acc.extend(self.language(c)?);
                    self.check(&acc)?;
                }
                acc
            }
            ProcessTree::Node(Operator::Sequence, ch) => {
                let mut acc: BTreeSet<Trace> = BTreeSet::from([Vec::new()]);
                for c in ch {
                    let lang = self.language(c)?;
                    let mut next = BTreeSet::new();
                    for a in &acc {
                        for b in &lang {
                            if a.len() + b.len() <= self.max_len {
                                let mut t = a.clone();
                                t.extend(b.iter().cloned());
                                next.insert(t);
                            }
                        }
                    }
                    self.check(&next)?;
                    acc = next;
                }
                acc
            }
            ProcessTree::Node(Operator::Parallel, ch) => {
                let mut acc: BTreeSet<Trace> = BTreeSet::from([Vec::new()]);
                for c in ch {
                    let lang = self.language(c)?;
                    let mut next = BTreeSet::new();
                    for a in &acc {
                        for b in &lang {
                            if a.len() + b.len() <= self.max_len {
                                interleave(a, b, &mut Vec::new(), &mut next);
                            }
                        }
                    }
                    self.check(&next)?;
                    acc = next;
                }
                acc
            }
            ProcessTree::Node(Operator::Loop, ch) => {
                let body = self.language(&ch[0])?;
                let mut redo = BTreeSet::new();
                for r in &ch[1..] {
                    redo.extend(self.language(r)?);
                }
                let mut acc = body.clone();
                let mut frontier = body.clone();
                while !frontier.is_empty() {
                    let mut fresh = BTreeSet::new();
                    for x in &frontier {
                        for r in &redo {
                            if x.len() + r.len() > self.max_len {
                                continue;
                            }
                            for b in &body {
                                if x.len() + r.len() + b.len() <= self.max_len {
                                    let mut t = x.clone();
                                    t.extend(r.iter().cloned());
                                    t.extend(b.iter().cloned());
                                    if !acc.contains(&t) {
                                        fresh.insert(t);
                                    }
                                }
                            }
                        }
                    }
                    acc.extend(fresh.iter().cloned());
                    self.check(&acc)?;
                    frontier = fresh;
                }
                acc
            }
        };
        Ok(out)
    }
}

fn interleave(a: &[Phase], b: &[Phase], prefix: &mut Trace, out: &mut BTreeSet<Trace>) {
    if a.is_empty() || b.is_empty() {
        let mut t = prefix.clone();
        t.extend(a.iter().cloned());
        t.extend(b.iter().cloned());
        out.insert(t);
        return;
    }
    prefix.push(a[0].clone());
    interleave(&a[1..], b, prefix, out);
    prefix.pop();
    prefix.push(b[0].clone());
    interleave(a, &b[1..], prefix, out);
    prefix.pop();
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Comma,
    Word(String),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token::Word(std::mem::take(word)));
        }
    };
    for ch in text.chars() {
        match ch {
            '(' | ')' | ',' => {
                flush(&mut word, &mut tokens);
                tokens.push(match ch {
                    '(' => Token::Open,
                    ')' => Token::Close,
                    _ => Token::Comma,
                });
            }
            c if c.is_whitespace() => flush(&mut word, &mut tokens),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

struct ExprParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl ExprParser {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<ProcessTree, TreeError> {
        let word = match self.next() {
            Some(Token::Word(w)) => w,
            other => return Err(TreeError::Syntax(format!("expected a name, got {other:?}"))),
        };
        if self.tokens.get(self.pos) != Some(&Token::Open) {
            if word == "tau" {
                return Ok(ProcessTree::Tau);
            }
            let phase = Phase::new(&word).map_err(|e| TreeError::Syntax(e.to_string()))?;
            return Ok(ProcessTree::Leaf(phase));
        }
        let op = Operator::from_keyword(&word)
            .ok_or_else(|| TreeError::Syntax(format!("unknown operator {word:?}")))?;
        self.pos += 1;
        let mut children = vec![self.expr()?];
        loop {
            match self.next() {
                Some(Token::Comma) => children.push(self.expr()?),
                Some(Token::Close) => break,
                other => {
                    return Err(TreeError::Syntax(format!(
                        "expected ',' or ')', got {other:?}"
                    )))
                }
            }
        }
        ProcessTree::operator(op, children)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Trace {
        s.split_whitespace()
            .map(|p| Phase::new(p).unwrap())
            .collect()
    }

    fn example() -> ProcessTree {
        ProcessTree::parse("seq(D, xor(tau, R), C, T)").unwrap()
    }

    #[test]
    fn expression_round_trip() {
        let tree = example();
        assert_eq!(tree.to_string(), "seq(D, xor(tau, R), C, T)");
        assert_eq!(
            ProcessTree::parse("seq(D, xor(R, tau), C, T)").unwrap(),
            tree
        );
        assert_eq!(ProcessTree::parse(&tree.to_string()).unwrap(), tree);
        assert!(ProcessTree::parse("seq(A)").is_err());
        assert!(ProcessTree::parse("foo(A, B)").is_err());
        assert!(ProcessTree::parse("seq(A, B").is_err());
        assert!(ProcessTree::parse("seq(A, B) C").is_err());
    }

    #[test]
    fn acceptance_examples() {
        let tree = example();
        assert!(tree.accepts(&t("D C T")));
        assert!(tree.accepts(&t("D R C T")));
        assert!(!tree.accepts(&t("D T C")));
        assert!(!tree.accepts(&t("D R R C T")));
        assert!(ProcessTree::parse("loop(tau, A)").unwrap().accepts(&[]));
        assert!(ProcessTree::parse("loop(tau, A)")
            .unwrap()
            .accepts(&t("A A A")));
    }

    #[test]
    fn loop_and_parallel_semantics() {
        let lp = ProcessTree::parse("loop(A, B, C)").unwrap();
        assert!(lp.accepts(&t("A")));
        assert!(lp.accepts(&t("A B A C A")));
        assert!(!lp.accepts(&t("A B")));
        assert!(!lp.accepts(&t("A B C A")));
        let par = ProcessTree::parse("par(seq(A, B), C)").unwrap();
        assert!(par.accepts(&t("A C B")));
        assert!(par.accepts(&t("C A B")));
        assert!(!par.accepts(&t("B A C")));
        assert!(!par.accepts(&t("A B")));
        // Overlapping alphabets go through the assignment search.
        let dup = ProcessTree::parse("par(seq(A, B), A)").unwrap();
        assert!(dup.accepts(&t("A A B")));
        assert!(dup.accepts(&t("A B A")));
        assert!(!dup.accepts(&t("B A A")));
    }

    #[test]
    fn enumeration_examples() {
        let leaf = ProcessTree::leaf("A");
        assert_eq!(
            leaf.enumerate_language(3).unwrap(),
            BTreeSet::from([t("A")])
        );
        let opt = ProcessTree::parse("xor(tau, R)").unwrap();
        assert_eq!(
            opt.enumerate_language(2).unwrap(),
            BTreeSet::from([t(""), t("R")])
        );
        assert_eq!(
            example().enumerate_language(4).unwrap(),
            BTreeSet::from([t("D C T"), t("D R C T")])
        );
        assert_eq!(
            ProcessTree::parse("loop(A, B)")
                .unwrap()
                .enumerate_language(5)
                .unwrap(),
            BTreeSet::from([t("A"), t("A B A"), t("A B A B A")])
        );
        assert!(matches!(
            leaf.enumerate_language(13),
            Err(TreeError::MaxLenTooLarge(13))
        ));
        let wide = ProcessTree::parse("par(A, B, C, D, E, F)").unwrap();
        assert!(matches!(
            wide.enumerate_language_with_budget(6, 100),
            Err(TreeError::DepthExceeded(100))
        ));
    }

    #[test]
    fn enumeration_agrees_with_membership() {
        // Brute force over all strings up to length 4 on the alphabet.
        let trees = [
            "seq(D, xor(tau, R), C, T)",
            "par(A, seq(B, C))",
            "loop(xor(A, B), C)",
            "loop(tau, A, B)",
            "xor(tau, par(A, B))",
        ];
        for expr in trees {
            let tree = ProcessTree::parse(expr).unwrap();
            let alphabet: Vec<Phase> = tree.alphabet().into_iter().collect();
            let mut all: Vec<Trace> = vec![Vec::new()];
            let mut frontier = all.clone();
            for _ in 0..4 {
                let mut next = Vec::new();
                for f in &frontier {
                    for a in &alphabet {
                        let mut x = f.clone();
                        x.push(a.clone());
                        next.push(x);
                    }
                }
                all.extend(next.iter().cloned());
                frontier = next;
            }
            let by_filter: BTreeSet<Trace> = all.into_iter().filter(|x| tree.accepts(x)).collect();
            assert_eq!(tree.enumerate_language(4).unwrap(), by_filter, "{expr}");
        }
    }

    #[test]
    fn sampled_traces_are_accepted() {
        let tree = ProcessTree::parse("seq(A, loop(par(B, C), D), xor(tau, E))").unwrap();
        let mut rng = crate::par::stream_rng(1, 0);
        for _ in 0..200 {
            let trace = tree.sample_trace(&mut rng, 0.4, 3);
            assert!(tree.accepts(&trace), "{trace:?}");
        }
    }

    #[test]
    fn structural_helpers() {
        let tree = example();
        assert_eq!(tree.visible_leaf_count(), 4);
        assert_eq!(tree.depth(), 2);
        assert!(!tree.accepts_empty());
        assert!(ProcessTree::parse("xor(tau, A)").unwrap().accepts_empty());
        assert_eq!(
            ProcessTree::operator(Operator::Loop, vec![ProcessTree::Tau]),
            Err(TreeError::TooFewChildren(Operator::Loop))
        );
    }
}
