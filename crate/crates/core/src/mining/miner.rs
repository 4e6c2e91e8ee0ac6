use thiserror::Error;

use super::{find_cut, split_log, Dfg, EventLog, Operator, ProcessTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MiningError {
    #[error("log is empty")]
    EmptyLog,
    #[error("log contains an empty trace")]
    EmptyTrace,
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Discovers a process tree that accepts every trace of the log.
pub fn mine_tree(log: &EventLog) -> Result<ProcessTree, MiningError> {
    if log.is_empty() {
        return Err(MiningError::EmptyLog);
    }
    mine(log)
}

fn mine(log: &EventLog) -> Result<ProcessTree, MiningError> {
    if log.iter().all(|(t, _)| t.is_empty()) {
        return Ok(ProcessTree::Tau);
    }
    let alphabet = log.alphabet();
    if alphabet.len() == 1 && log.iter().all(|(t, _)| t.len() == 1) {
        return Ok(ProcessTree::Leaf(
            alphabet.into_iter().next().expect("one label"),
        ));
    }
    if log.contains_empty_trace() {
        let rest = mine(&log.without_empty())?;
        return Ok(ProcessTree::xor(vec![ProcessTree::Tau, rest]));
    }
    let dfg = Dfg::from_log(log);
    let Some(cut) = find_cut(&dfg) else {
        let mut children = vec![ProcessTree::Tau];
        children.extend(alphabet.into_iter().map(ProcessTree::Leaf));
        return Ok(ProcessTree::Node(Operator::Loop, children));
    };
    let children = split_log(log, &cut)?
        .iter()
        .map(mine)
        .collect::<Result<Vec<_>, _>>()?;
    ProcessTree::operator(cut.kind, children).map_err(|e| MiningError::InvalidCut(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Phase;

    fn t(s: &str) -> Vec<Phase> {
        s.split_whitespace()
            .map(|p| Phase::new(p).unwrap())
            .collect()
    }
    fn mined(traces: &[&str]) -> ProcessTree {
        mine_tree(&EventLog::from_traces(traces.iter().map(|x| t(x)))).unwrap()
    }

    #[test]
    fn worked_example() {
        let tree = mined(&["D C T", "D R C T"]);
        assert_eq!(tree.to_string(), "seq(D, xor(tau, R), C, T)");
        assert!(tree.accepts(&t("D C T")));
        assert!(tree.accepts(&t("D R C T")));
    }

    #[test]
    fn base_cases() {
        assert_eq!(mined(&["A"]), ProcessTree::leaf("A"));
        assert_eq!(mined(&["A A"]).to_string(), "loop(tau, A)");
        assert_eq!(mine_tree(&EventLog::new()), Err(MiningError::EmptyLog));
    }

    #[test]
    fn operators() {
        assert_eq!(mined(&["A B", "B A"]).to_string(), "par(A, B)");
        assert_eq!(mined(&["A", "B"]).to_string(), "xor(A, B)");
        assert_eq!(mined(&["A B A", "A"]).to_string(), "loop(A, B)");
        assert_eq!(mined(&["A C", "B C"]).to_string(), "seq(xor(A, B), C)");
    }

    #[test]
    fn fitness_on_a_mixed_log() {
        let traces = ["A B C D", "A C B D", "A E D", "A B C F B C D", "A E F E D"];
        let tree = mined(&traces);
        for x in traces {
            assert!(tree.accepts(&t(x)), "{tree} rejects {x}");
        }
    }
}
