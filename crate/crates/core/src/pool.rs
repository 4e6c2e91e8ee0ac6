//! Execution statistics per instance, replay selection and the success-rate
//! filter.
//!
//! Every distinct instance has a frequency `N(i)` (how often it was executed)
//! and a success count `Q(i)`. Replay re-executes instances chosen by a
//! [`SelectionStrategy`]; the UCT strategy scores an entry as
//!
//! ```text
//! 1 - Q(i)/N(i) + c * sqrt(ln N / N(i))
//! ```
//!
//! where `N` is the pool-wide execution total.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{parse_instance, serialize_instance, Instance};

/// Header of the pool CSV file.
pub const CSV_HEADER: [&str; 4] = ["id", "instance", "frequency", "success"];

const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("entry has zero frequency")]
    ZeroFrequency,
    #[error("pool total must be positive")]
    NonPositiveTotal,
    #[error("the pool is empty")]
    EmptyPool,
    #[error("no entry is eligible for selection")]
    NoEligibleEntry,
    #[error("replay needs at least one round")]
    NoRounds,
    #[error("row {row}: {message}")]
    InvalidRow { row: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: u64,
    pub instance: Instance,
    pub frequency: u64,
    pub success_count: u64,
}

impl PoolEntry {
    /// `Q(i) / N(i)`.
    pub fn success_rate(&self) -> Result<f64, PoolError> {
        if self.frequency == 0 {
            return Err(PoolError::ZeroFrequency);
        }
        Ok(self.success_count as f64 / self.frequency as f64)
    }

    /// `1 - Q(i)/N(i) + c * sqrt(ln(total) / N(i))`.
    pub fn uct_score(&self, pool_total: u64, c: f64) -> Result<f64, PoolError> {
        uct_score(self, pool_total, c)
    }
}

pub fn success_rate(entry: &PoolEntry) -> Result<f64, PoolError> {
    entry.success_rate()
}

pub fn uct_score(entry: &PoolEntry, pool_total: u64, c: f64) -> Result<f64, PoolError> {
    if entry.frequency == 0 {
        return Err(PoolError::ZeroFrequency);
    }
    if pool_total == 0 {
        return Err(PoolError::NonPositiveTotal);
    }
    let n = entry.frequency as f64;
    let failure = 1.0 - entry.success_count as f64 / n;
    Ok(failure + c * ((pool_total as f64).ln() / n).sqrt())
}

/// How replay picks the next entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionStrategy {
    /// Maximise the UCT score.
    Uct { c: f64 },
    /// Maximise the failure rate; entries that never failed are not eligible.
    FailureRate,
    /// Minimise the frequency.
    Frequency,
}

impl SelectionStrategy {
    pub const DEFAULT_C: f64 = 1.0;

    pub fn uct() -> Self {
        SelectionStrategy::Uct { c: Self::DEFAULT_C }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::Uct { .. } => "uct",
            SelectionStrategy::FailureRate => "failure_rate",
            SelectionStrategy::Frequency => "frequency",
        }
    }
}

impl Default for SelectionStrategy {
    fn default() -> Self {
        Self::uct()
    }
}

/// Instances keyed by their serialized form, plus the execution total `N`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstancePool {
    entries: Vec<PoolEntry>,
    index: HashMap<Instance, usize>,
    total: u64,
}

impl InstancePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, inst: &Instance) -> Option<&PoolEntry> {
        self.index.get(inst).map(|&i| &self.entries[i])
    }

    pub fn get_by_id(&self, id: u64) -> Option<&PoolEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Adds `inst` with zero statistics if absent; returns its id.
    pub fn ensure(&mut self, inst: &Instance) -> u64 {
        if let Some(&i) = self.index.get(inst) {
            return self.entries[i].id;
        }
        let id = self.entries.iter().map(|e| e.id).max().map_or(1, |m| m + 1);
        self.index.insert(inst.clone(), self.entries.len());
        self.entries.push(PoolEntry {
            id,
            instance: inst.clone(),
            frequency: 0,
            success_count: 0,
        });
        id
    }

    /// Counts one execution of `inst`.
    pub fn record(&mut self, inst: &Instance, success: bool) -> &PoolEntry {
        self.ensure(inst);
        let i = self.index[inst];
        let entry = &mut self.entries[i];
        entry.frequency += 1;
        if success {
            entry.success_count += 1;
        }
        self.total += 1;
        &self.entries[i]
    }

    /// Inserts an entry with preset statistics, e.g. from a synthetic pool
    /// or a file. Statistics of an existing entry for the same instance are
    /// replaced.
    pub fn insert_stats(
        &mut self,
        inst: &Instance,
        frequency: u64,
        success_count: u64,
    ) -> Result<u64, PoolError> {
        if success_count > frequency {
            return Err(PoolError::InvalidRow {
                row: self.entries.len() + 1,
                message: format!("success {success_count} exceeds frequency {frequency}"),
            });
        }
        let id = self.ensure(inst);
        let i = self.index[inst];
        let entry = &mut self.entries[i];
        self.total = self.total - entry.frequency + frequency;
        entry.frequency = frequency;
        entry.success_count = success_count;
        Ok(id)
    }

    fn entry_index_by_id(&self, id: u64) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    /// Picks the next entry to replay; ties are broken uniformly with `rng_seed`.
    pub fn select_next(
        &self,
        strategy: SelectionStrategy,
        rng_seed: u64,
    ) -> Result<&PoolEntry, PoolError> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let i = self.select_index(strategy, &mut rng)?;
        Ok(&self.entries[i])
    }

    fn select_index(
        &self,
        strategy: SelectionStrategy,
        rng: &mut ChaCha8Rng,
    ) -> Result<usize, PoolError> {
        if self.entries.is_empty() {
            return Err(PoolError::EmptyPool);
        }
        let executed = || {
            self.entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.frequency > 0)
        };
        // Higher score wins for every strategy.
        let scored: Vec<(usize, f64)> = match strategy {
            SelectionStrategy::Uct { c } => executed()
                .map(|(i, e)| Ok((i, uct_score(e, self.total, c)?)))
                .collect::<Result<_, PoolError>>()?,
            SelectionStrategy::FailureRate => executed()
                .filter(|(_, e)| e.success_count < e.frequency)
                .map(|(i, e)| (i, 1.0 - e.success_count as f64 / e.frequency as f64))
                .collect(),
            SelectionStrategy::Frequency => executed()
                .map(|(i, e)| (i, -(e.frequency as f64)))
                .collect(),
        };
        let best = scored
            .iter()
            .map(|&(_, s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = scored
            .iter()
            .filter(|&&(_, s)| s >= best - TIE_EPSILON)
            .map(|&(i, _)| i)
            .collect();
        tied.choose(rng).copied().ok_or(PoolError::NoEligibleEntry)
    }

    /// Re-executes selected entries `rounds` times and records the outcomes.
    ///
    /// An executor error counts as a failed execution and is kept in the
    /// report.
    pub fn replay<F>(
        &mut self,
        strategy: SelectionStrategy,
        mut executor: F,
        rounds: usize,
        rng_seed: u64,
    ) -> Result<ReplayReport, PoolError>
    where
        F: FnMut(&Instance) -> Result<bool, String>,
    {
        if rounds == 0 {
            return Err(PoolError::NoRounds);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let distinct: Vec<u64> = self.entries.iter().map(|e| e.id).collect();
        let mut visited: std::collections::HashSet<u64> = Default::default();
        let mut report = ReplayReport {
            strategy,
            distinct_instances: distinct.len(),
            rounds: Vec::with_capacity(rounds),
            coverage_complete_at: None,
        };
        for attempt in 1..=rounds {
            let idx = self.select_index(strategy, &mut rng)?;
            let inst = self.entries[idx].instance.clone();
            let id = self.entries[idx].id;
            let (success, fault) = match executor(&inst) {
                Ok(s) => (s, None),
                Err(msg) => (false, Some(msg)),
            };
            self.record(&inst, success);
            visited.insert(id);
            if report.coverage_complete_at.is_none() && visited.len() == distinct.len() {
                report.coverage_complete_at = Some(attempt);
            }
            report.rounds.push(ReplayRound {
                attempt,
                entry_id: id,
                success,
                fault,
                distinct_visited: visited.len(),
            });
        }
        Ok(report)
    }

    /// Entries with success rate at or above `threshold`, best first
    /// (success rate, then frequency, descending).
    pub fn filter_by_sr(&self, threshold: f64) -> Vec<PoolEntry> {
        let mut kept: Vec<(f64, &PoolEntry)> = self
            .entries
            .iter()
            .filter_map(|e| e.success_rate().ok().map(|sr| (sr, e)))
            .filter(|(sr, _)| *sr >= threshold)
            .collect();
        kept.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(b.1.frequency.cmp(&a.1.frequency))
                .then(a.1.id.cmp(&b.1.id))
        });
        kept.into_iter().map(|(_, e)| e.clone()).collect()
    }

    /// Writes the pool as `id,instance,frequency,success`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PoolError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for e in &self.entries {
            w.write_record([
                e.id.to_string(),
                serialize_instance(&e.instance),
                e.frequency.to_string(),
                e.success_count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads a pool CSV. Rows with `success > frequency`, duplicate ids or
    /// duplicate instances are rejected.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PoolError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(PoolError::InvalidRow {
                row: 0,
                message: format!("expected header {}", CSV_HEADER.join(",")),
            });
        }
        let mut pool = InstancePool::new();
        for (n, rec) in r.records().enumerate() {
            let row = n + 1;
            let rec = rec?;
            let bad = |message: String| PoolError::InvalidRow { row, message };
            let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("missing column {i}")));
            let id: u64 = field(0)?.parse().map_err(|e| bad(format!("id: {e}")))?;
            let instance = parse_instance(field(1)?).map_err(|e| bad(e.to_string()))?;
            let frequency: u64 = field(2)?
                .parse()
                .map_err(|e| bad(format!("frequency: {e}")))?;
            let success_count: u64 = field(3)?
                .parse()
                .map_err(|e| bad(format!("success: {e}")))?;
            if success_count > frequency {
                return Err(bad(format!(
                    "success {success_count} exceeds frequency {frequency}"
                )));
            }
            if id == 0 || pool.entry_index_by_id(id).is_some() {
                return Err(bad(format!("invalid or duplicate id {id}")));
            }
            if pool.index.contains_key(&instance) {
                return Err(bad(format!("duplicate instance {instance}")));
            }
            pool.index.insert(instance.clone(), pool.entries.len());
            pool.entries.push(PoolEntry {
                id,
                instance,
                frequency,
                success_count,
            });
            pool.total += frequency;
        }
        Ok(pool)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PoolError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), PoolError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayRound {
    pub attempt: usize,
    pub entry_id: u64,
    pub success: bool,
    pub fault: Option<String>,
    /// Distinct entries selected so far, this round included.
    pub distinct_visited: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub strategy: SelectionStrategy,
    pub distinct_instances: usize,
    pub rounds: Vec<ReplayRound>,
    /// Attempt at which every entry present at the start had been selected.
    pub coverage_complete_at: Option<usize>,
}

impl ReplayReport {
    pub fn final_coverage(&self) -> usize {
        self.rounds.last().map_or(0, |r| r.distinct_visited)
    }

    pub fn faults(&self) -> impl Iterator<Item = &ReplayRound> {
        self.rounds.iter().filter(|r| r.fault.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(s: &str) -> Instance {
        parse_instance(s).unwrap()
    }

    /// The three example rows: C→T (14, 6), D→C→T (21, 13), D→R→C→T (30, 21).
    fn example_pool() -> InstancePool {
        let mut p = InstancePool::new();
        p.insert_stats(&inst("C -> T"), 14, 6).unwrap();
        p.insert_stats(&inst("D -> C -> T"), 21, 13).unwrap();
        p.insert_stats(&inst("D -> R -> C -> T"), 30, 21).unwrap();
        p
    }

    #[test]
    fn record_updates_counters() {
        let mut p = InstancePool::new();
        let e = p.record(&inst("D -> C -> T"), true).clone();
        assert_eq!((e.id, e.frequency, e.success_count), (1, 1, 1));
        p.record(&inst("C -> T"), false);
        assert_eq!(p.total(), 2);

        let mut p = example_pool();
        let e = p.record(&inst("C -> T"), false);
        assert_eq!((e.frequency, e.success_count), (15, 6));
        assert_eq!(p.total(), 66);
    }

    #[test]
    fn success_rates() {
        let p = example_pool();
        assert!((p.entries()[0].success_rate().unwrap() - 0.428571).abs() < 1e-4);
        assert!((p.entries()[2].success_rate().unwrap() - 0.7).abs() < 1e-12);
        let zero = PoolEntry {
            id: 1,
            instance: inst("A"),
            frequency: 5,
            success_count: 0,
        };
        assert_eq!(zero.success_rate().unwrap(), 0.0);
        let never = PoolEntry {
            frequency: 0,
            ..zero
        };
        assert!(matches!(
            never.success_rate(),
            Err(PoolError::ZeroFrequency)
        ));
        assert!(matches!(
            never.uct_score(10, 1.0),
            Err(PoolError::ZeroFrequency)
        ));
    }

    #[test]
    fn uct_scores_of_example_rows() {
        let p = example_pool();
        assert_eq!(p.total(), 65);
        let s: Vec<f64> = p
            .entries()
            .iter()
            .map(|e| e.uct_score(65, 1.0).unwrap())
            .collect();
        assert!((s[0] - 1.1175).abs() < 1e-3, "{s:?}");
        assert!((s[1] - 0.8268).abs() < 1e-3, "{s:?}");
        assert!((s[2] - 0.6730).abs() < 1e-3, "{s:?}");
        assert!(matches!(
            p.entries()[0].uct_score(0, 1.0),
            Err(PoolError::NonPositiveTotal)
        ));
        let chosen = p.select_next(SelectionStrategy::uct(), 3).unwrap();
        assert_eq!(chosen.instance, inst("C -> T"));
    }

    #[test]
    fn failure_rate_skips_perfect_entries() {
        let mut p = InstancePool::new();
        p.insert_stats(&inst("A"), 3, 3).unwrap();
        p.insert_stats(&inst("B"), 3, 3).unwrap();
        assert!(matches!(
            p.select_next(SelectionStrategy::FailureRate, 0),
            Err(PoolError::NoEligibleEntry)
        ));
        assert!(matches!(
            InstancePool::new().select_next(SelectionStrategy::Frequency, 0),
            Err(PoolError::EmptyPool)
        ));
    }

    #[test]
    fn frequency_picks_least_executed() {
        let mut p = InstancePool::new();
        p.insert_stats(&inst("A"), 1, 0).unwrap();
        p.insert_stats(&inst("B"), 9, 4).unwrap();
        let e = p.select_next(SelectionStrategy::Frequency, 11).unwrap();
        assert_eq!(e.instance, inst("A"));
    }

    #[test]
    fn never_executed_entries_are_not_selectable() {
        let mut p = InstancePool::new();
        p.ensure(&inst("A"));
        assert!(matches!(
            p.select_next(SelectionStrategy::Frequency, 0),
            Err(PoolError::NoEligibleEntry)
        ));
    }

    #[test]
    fn ties_are_seeded() {
        let mut p = InstancePool::new();
        for name in ["A", "B", "C", "D"] {
            p.insert_stats(&inst(name), 2, 1).unwrap();
        }
        let picks: std::collections::HashSet<u64> = (0..40)
            .map(|s| p.select_next(SelectionStrategy::uct(), s).unwrap().id)
            .collect();
        assert!(picks.len() > 1);
        let a = p.select_next(SelectionStrategy::uct(), 5).unwrap().id;
        let b = p.select_next(SelectionStrategy::uct(), 5).unwrap().id;
        assert_eq!(a, b);
    }

    #[test]
    fn replay_single_entry() {
        let mut p = InstancePool::new();
        p.record(&inst("A -> B"), true);
        let report = p
            .replay(SelectionStrategy::Frequency, |_| Ok(true), 3, 1)
            .unwrap();
        assert!(report.rounds.iter().all(|r| r.entry_id == 1));
        assert_eq!(report.coverage_complete_at, Some(1));
        assert_eq!(p.entries()[0].frequency, 4);
    }

    #[test]
    fn replay_executor_fault_counts_as_failure() {
        let mut p = InstancePool::new();
        p.record(&inst("A"), true);
        let report = p
            .replay(SelectionStrategy::uct(), |_| Err("timeout".into()), 2, 1)
            .unwrap();
        assert_eq!(report.faults().count(), 2);
        assert_eq!(p.entries()[0].frequency, 3);
        assert_eq!(p.entries()[0].success_count, 1);
        assert!(matches!(
            p.replay(SelectionStrategy::uct(), |_| Ok(true), 0, 1),
            Err(PoolError::NoRounds)
        ));
    }

    #[test]
    fn filter_thresholds() {
        let p = example_pool();
        let all = p.filter_by_sr(0.30);
        let ids: Vec<u64> = all.iter().map(|e| e.id).collect();
        assert_eq!(ids, vec![3, 2, 1]);
        let high = p.filter_by_sr(0.65);
        assert_eq!(high.len(), 1);
        assert_eq!(high[0].instance, inst("D -> R -> C -> T"));
        assert_eq!(p.filter_by_sr(0.0).len(), 3);
    }

    #[test]
    fn csv_round_trip_and_rejection() {
        let p = example_pool();
        let text = p.to_csv_string();
        assert!(text.starts_with("id,instance,frequency,success\n1,C -> T,14,6\n"));
        let back = InstancePool::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, p);

        let bad = "id,instance,frequency,success\n1,A -> B,2,3\n";
        assert!(matches!(
            InstancePool::read_csv(bad.as_bytes()),
            Err(PoolError::InvalidRow { row: 1, .. })
        ));
        let bad_header = "id,inst,frequency,success\n";
        assert!(InstancePool::read_csv(bad_header.as_bytes()).is_err());
    }
}
