use std::collections::HashSet;

use rand::seq::IndexedRandom;

use super::campaign::{mine_entries, Executor, GENERATOR_STREAM, REPLAY_STREAM};
use super::config::RunConfig;
use super::report::{ratio, ExperimentReport};
use super::tasks::{in_category, load_tasks, CATEGORIES};
use super::HarnessError;
use crate::bpmn::ElementCounts;
use crate::generation::{mock_generate, BackendConfig, MockConfig, PromptSpec, MAX_TEMPERATURE};
use crate::instance::{diversity, unknown_phases, Instance, PhaseVocabulary};
use crate::orchestrator::SimulatedEnvironment;
use crate::par::{map_indexed, mix_seed, stream_rng, Parallelism};
use crate::pool::{InstancePool, PoolEntry, SelectionStrategy};

const CLEAN_STREAM: u64 = 10;
const NOISE_STREAM: u64 = 11;
const SYNTHETIC_STREAM: u64 = 12;
const BASELINE_STREAM: u64 = 13;
// Call-index offsets keep the outcome streams of separate stages apart.
const REPLAY_CALLS: u64 = 1 << 32;
const ARM_CALLS: u64 = 1 << 40;

pub const STRATEGIES: [&str; 3] = ["uct", "failure_rate", "frequency"];

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                out[idx[k]] = rank;
            }
            i = j + 1;
        }
        out
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx
        .iter()
        .zip(&ry)
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

struct Setup {
    vocab: PhaseVocabulary,
    env: SimulatedEnvironment,
    mock: MockConfig,
    mode: Parallelism,
}

fn setup(cfg: &RunConfig) -> Result<Setup, HarnessError> {
    cfg.validate()?;
    let vocab = match &cfg.vocabulary_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            PhaseVocabulary::from_json(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        }
        None => PhaseVocabulary::builtin(),
    };
    let env = match Executor::from_config(cfg, &vocab)? {
        Executor::Simulated(env) => env,
        Executor::ChatChain { .. } => {
            return Err(HarnessError::Config(
                "experiments run against the simulated environment".into(),
            ))
        }
    };
    let mock = match &cfg.generation.backend {
        BackendConfig::Mock {
            seeds,
            hallucination_vocab,
            weights,
        } => MockConfig {
            seeds: if seeds.is_empty() {
                vec![vocab.default_instance().clone()]
            } else {
                seeds.clone()
            },
            hallucination_vocab: hallucination_vocab.clone(),
            rng_seed: mix_seed(cfg.seed, GENERATOR_STREAM),
            weights: *weights,
        },
        BackendConfig::Llm(_) => {
            return Err(HarnessError::Config(
                "experiments use the mock generator backend".into(),
            ))
        }
    };
    Ok(Setup {
        vocab,
        env,
        mock,
        mode: Parallelism::from_flag(cfg.parallel),
    })
}

fn base_meta(report: &mut ExperimentReport, cfg: &RunConfig) {
    report.set_meta("seed", cfg.seed);
    report.set_meta("config", cfg.to_json());
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mock-generates `samples` instances per temperature and executes them.
/// Every temperature uses the same generator stream and call indices.
pub fn experiment_temperature(
    cfg: &RunConfig,
    temps: &[f64],
    samples: usize,
) -> Result<ExperimentReport, HarnessError> {
    let s = setup(cfg)?;
    let default = s.vocab.default_instance().clone();
    let mut report = ExperimentReport::new(
        "temperature",
        &[
            "temperature",
            "samples",
            "success_rate",
            "diversity",
            "conforming_rate",
            "hallucination_rate",
        ],
    );
    for &t in temps {
        let out = mock_generate(&s.mock, &[], t, samples, 0, None, s.mode)
            .map_err(|e| HarnessError::step(format!("temperature {t}"), e))?;
        let outcomes = map_indexed(s.mode, &out, |i, inst| {
            (s.env.compile(inst, i as u64), s.env.conforms(inst))
        });
        let n = out.len().max(1) as f64;
        let success = outcomes.iter().filter(|o| o.0).count() as f64 / n;
        let conforming = outcomes.iter().filter(|o| o.1).count() as f64 / n;
        let hallucinated = out
            .iter()
            .filter(|i| !unknown_phases(i, &s.vocab).is_empty())
            .count() as f64
            / n;
        let div = mean(out.iter().map(|i| diversity(i, &default)));
        report.push(vec![
            format!("{t:.2}"),
            out.len().to_string(),
            ratio(success),
            ratio(div),
            ratio(conforming),
            ratio(hallucinated),
        ]);
    }
    base_meta(&mut report, cfg);
    report.set_meta("temperatures", temps);
    report.set_meta("samples_per_temperature", samples);
    Ok(report)
}

/// `size` distinct instances generated at the maximum temperature, each
/// executed `initial_executions` times.
pub fn synthetic_pool(
    cfg: &RunConfig,
    size: usize,
    initial_executions: u64,
) -> Result<InstancePool, HarnessError> {
    let s = setup(cfg)?;
    let mut distinct: Vec<Instance> = Vec::new();
    let mut seen: HashSet<Instance> = HashSet::new();
    let mut batch = 0u64;
    while distinct.len() < size {
        if batch > 1000 {
            return Err(HarnessError::Config(format!(
                "could not generate {size} distinct instances"
            )));
        }
        let out = mock_generate(
            &s.mock,
            &[],
            MAX_TEMPERATURE,
            size * 2,
            mix_seed(SYNTHETIC_STREAM, batch),
            None,
            s.mode,
        )
        .map_err(|e| HarnessError::step("synthetic pool", e))?;
        for inst in out {
            if distinct.len() < size && seen.insert(inst.clone()) {
                distinct.push(inst);
            }
        }
        batch += 1;
    }
    let mut pool = InstancePool::new();
    for (i, inst) in distinct.iter().enumerate() {
        pool.ensure(inst);
        for r in 0..initial_executions {
            let call = i as u64 * initial_executions + r;
            pool.record(inst, s.env.compile(inst, call));
        }
    }
    Ok(pool)
}

/// Replays the synthetic pool under each strategy and reports how many
/// distinct entries have been visited after every attempt.
pub fn experiment_strategies(
    cfg: &RunConfig,
    rounds: usize,
) -> Result<ExperimentReport, HarnessError> {
    let s = setup(cfg)?;
    let e = &cfg.experiments;
    let pool = synthetic_pool(cfg, e.synthetic_pool_size, e.synthetic_initial_executions)?;
    let q_equals_n = pool
        .entries()
        .iter()
        .filter(|p| p.frequency > 0 && p.success_count == p.frequency)
        .count();
    let strategies = [
        SelectionStrategy::Uct { c: cfg.uct_c },
        SelectionStrategy::FailureRate,
        SelectionStrategy::Frequency,
    ];
    let mut curves = Vec::new();
    let mut completion = serde_json::Map::new();
    for strategy in strategies {
        let mut p = pool.clone();
        let mut call = REPLAY_CALLS;
        let env = &s.env;
        let replay = p.replay(
            strategy,
            |inst| {
                call += 1;
                Ok(env.compile(inst, call))
            },
            rounds,
            mix_seed(cfg.seed, REPLAY_STREAM),
        )?;
        completion.insert(
            strategy.name().to_string(),
            serde_json::json!({
                "coverage_complete_at": replay.coverage_complete_at,
                "final_coverage": replay.final_coverage(),
            }),
        );
        curves.push(replay);
    }
    let mut report = ExperimentReport::new(
        "strategies",
        &["attempt", "uct", "failure_rate", "frequency"],
    );
    for attempt in 0..rounds {
        let mut row = vec![(attempt + 1).to_string()];
        row.extend(
            curves
                .iter()
                .map(|c| c.rounds[attempt].distinct_visited.to_string()),
        );
        report.push(row);
    }
    base_meta(&mut report, cfg);
    report.set_meta("pool_size", pool.len());
    report.set_meta("entries_without_failures", q_equals_n);
    report.set_meta("rounds", rounds);
    report.set_meta("strategies", completion);
    Ok(report)
}

/// A pool mixing hidden-model traces with mock output at a high
/// temperature, each instance executed once and then replayed with UCT.
pub fn noisy_pool(
    cfg: &RunConfig,
    total: usize,
    noise_fraction: f64,
) -> Result<InstancePool, HarnessError> {
    let s = setup(cfg)?;
    let e = &cfg.experiments;
    let noisy = ((total as f64) * noise_fraction).round() as usize;
    let clean_base = mix_seed(cfg.seed, CLEAN_STREAM);
    let mut batch: Vec<Instance> = (0..total - noisy)
        .map(|i| {
            let mut rng = stream_rng(clean_base, i as u64);
            let trace = s.env.hidden_model.sample_trace(&mut rng, 0.3, 2);
            Instance::new(trace).unwrap_or_else(|_| s.vocab.default_instance().clone())
        })
        .collect();
    batch.extend(
        mock_generate(
            &s.mock,
            &[],
            e.noise_temperature,
            noisy,
            NOISE_STREAM,
            None,
            s.mode,
        )
        .map_err(|err| HarnessError::step("noise generation", err))?,
    );
    let outcomes = map_indexed(s.mode, &batch, |i, inst| s.env.compile(inst, i as u64));
    let mut pool = InstancePool::new();
    for (inst, ok) in batch.iter().zip(outcomes) {
        pool.record(inst, ok);
    }
    if e.filtering_replay_rounds > 0 {
        let mut call = REPLAY_CALLS;
        let env = &s.env;
        pool.replay(
            SelectionStrategy::Uct { c: cfg.uct_c },
            |inst| {
                call += 1;
                Ok(env.compile(inst, call))
            },
            e.filtering_replay_rounds,
            mix_seed(cfg.seed, REPLAY_STREAM),
        )?;
    }
    Ok(pool)
}

fn push_counts(report: &mut ExperimentReport, group: &str, entries: usize, c: &ElementCounts) {
    for (label, value) in [
        ("entries", entries),
        ("tasks", c.tasks),
        ("exclusive_gateways", c.exclusive_gateways),
        ("parallel_gateways", c.parallel_gateways),
        ("gateways", c.exclusive_gateways + c.parallel_gateways),
    ] {
        report.push(vec![
            group.to_string(),
            label.to_string(),
            value.to_string(),
        ]);
    }
}

/// Success-rate histogram of a noisy pool and the models mined from all
/// entries versus the entries that pass the threshold.
pub fn experiment_filtering(
    cfg: &RunConfig,
    noise_fraction: f64,
) -> Result<ExperimentReport, HarnessError> {
    let e = &cfg.experiments;
    let pool = noisy_pool(cfg, e.filtering_instances, noise_fraction)?;
    let mut report = ExperimentReport::new("filtering", &["group", "label", "value"]);
    let mut bins = [0usize; 10];
    for entry in pool.entries() {
        if let Ok(sr) = entry.success_rate() {
            bins[((sr * 10.0).floor() as usize).min(9)] += 1;
        }
    }
    for (i, count) in bins.iter().enumerate() {
        report.push(vec![
            "histogram".into(),
            format!("{:.1}-{:.1}", i as f64 / 10.0, (i + 1) as f64 / 10.0),
            count.to_string(),
        ]);
    }
    let all: Vec<PoolEntry> = pool.entries().to_vec();
    let kept = pool.filter_by_sr(cfg.filter_threshold);
    let unfiltered = mine_entries(&all)?;
    push_counts(&mut report, "unfiltered", all.len(), &unfiltered.counts);
    base_meta(&mut report, cfg);
    report.set_meta("noise_fraction", noise_fraction);
    report.set_meta("unfiltered_model", unfiltered.tree.to_string());
    if kept.is_empty() {
        push_counts(&mut report, "filtered", 0, &ElementCounts::default());
    } else {
        let filtered = mine_entries(&kept)?;
        push_counts(&mut report, "filtered", kept.len(), &filtered.counts);
        report.set_meta("filtered_model", filtered.tree.to_string());
    }
    Ok(report)
}

/// Compares a baseline arm, seeded uniformly from a raw pool, with an
/// enhanced arm seeded from the filtered survivors and constrained by the
/// model mined from them. Both arms share generator streams and call
/// indices. `tasks_per_arm` counts tasks per category.
pub fn experiment_enhancement(
    cfg: &RunConfig,
    tasks_per_arm: usize,
) -> Result<ExperimentReport, HarnessError> {
    let s = setup(cfg)?;
    let e = &cfg.experiments;
    let tasks = load_tasks(cfg.tasks_path.as_deref())?;
    let per_task = cfg.loop_settings.instances_per_task;
    let chosen: Vec<(&str, &str)> = CATEGORIES
        .iter()
        .flat_map(|c| {
            in_category(&tasks, c)
                .into_iter()
                .take(tasks_per_arm)
                .map(move |t| (*c, t.task.as_str()))
        })
        .collect();
    if chosen.is_empty() {
        return Err(HarnessError::Config(
            "no tasks in the bundled categories".into(),
        ));
    }

    let raw = noisy_pool(
        cfg,
        chosen.len() * e.warmup_instances_per_task,
        e.noise_fraction,
    )?;
    let survivors = raw.filter_by_sr(cfg.filter_threshold);
    if survivors.is_empty() {
        return Err(HarnessError::step(
            "enhancement",
            "no instance survived filtering",
        ));
    }
    let mined = mine_entries(&survivors)?;
    let k = cfg.generation.experiential_count.max(1);
    let enhanced_seeds: Vec<Instance> = survivors
        .iter()
        .take(k)
        .map(|p| p.instance.clone())
        .collect();
    let raw_instances: Vec<Instance> = raw.entries().iter().map(|p| p.instance.clone()).collect();
    let baseline_base = mix_seed(cfg.seed, BASELINE_STREAM);
    let t = cfg.generation.temperature;

    // (category, baseline successes, enhanced successes) per task.
    let per_task_outcomes = map_indexed(s.mode, &chosen, |ti, (category, task)| {
        let mut rng = stream_rng(baseline_base, ti as u64);
        let baseline_seeds: Vec<Instance> = (0..k)
            .map(|_| {
                raw_instances
                    .choose(&mut rng)
                    .expect("non-empty pool")
                    .clone()
            })
            .collect();
        let baseline_spec = PromptSpec::new(*task, s.vocab.clone()).with_experience(baseline_seeds);
        let enhanced_spec = PromptSpec::new(*task, s.vocab.clone())
            .with_experience(enhanced_seeds.clone())
            .with_description(mined.description.clone());
        let stream = ti as u64;
        let run = |spec: &PromptSpec, constraint| -> Result<usize, HarnessError> {
            let out = mock_generate(
                &s.mock,
                spec.experiential_instances(),
                t,
                per_task,
                stream,
                constraint,
                Parallelism::Sequential,
            )
            .map_err(|err| HarnessError::step(format!("task {task}"), err))?;
            Ok(out
                .iter()
                .enumerate()
                .filter(|(k, inst)| s.env.compile(inst, ARM_CALLS + (ti * per_task + k) as u64))
                .count())
        };
        Ok::<_, HarnessError>((
            *category,
            run(&baseline_spec, None)?,
            run(&enhanced_spec, Some(&mined.tree))?,
        ))
    });
    let per_task_outcomes = per_task_outcomes
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = ExperimentReport::new(
        "enhancement",
        &[
            "category",
            "tasks",
            "samples",
            "baseline_success_rate",
            "enhanced_success_rate",
            "gain",
        ],
    );
    let mut row = |label: &str, items: &[&(&str, usize, usize)]| {
        let samples = items.len() * per_task;
        let denom = samples.max(1) as f64;
        let base = items.iter().map(|o| o.1).sum::<usize>() as f64 / denom;
        let enh = items.iter().map(|o| o.2).sum::<usize>() as f64 / denom;
        report.push(vec![
            label.to_string(),
            items.len().to_string(),
            samples.to_string(),
            ratio(base),
            ratio(enh),
            ratio(enh - base),
        ]);
    };
    for c in CATEGORIES {
        let items: Vec<_> = per_task_outcomes.iter().filter(|o| o.0 == c).collect();
        if !items.is_empty() {
            row(c, &items);
        }
    }
    let all: Vec<_> = per_task_outcomes.iter().collect();
    row("all", &all);
    base_meta(&mut report, cfg);
    report.set_meta("tasks_per_category", tasks_per_arm);
    report.set_meta("raw_pool_entries", raw.len());
    report.set_meta("survivors", survivors.len());
    report.set_meta("constraint", mined.tree.to_string());
    report.set_meta("description", &mined.description.text);
    Ok(report)
}
