use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use devloop::bpmn::{export_dot, export_xml, parse_xml, tree_to_bpmn};
use devloop::describe::describe;
use devloop::generation::{build_prompt, GenerationRequest, Generator};
use devloop::harness::{
    experiment_enhancement, experiment_filtering, experiment_strategies, experiment_temperature,
    mine_entries, run_loop, Campaign, ExperimentReport, RunConfig, RunRecord,
};
use devloop::instance::{parse_instance, serialize_instance, Instance};
use devloop::mining::{build_dfg, mine_tree, EventLog};
use devloop::par::Parallelism;
use devloop::pool::{InstancePool, SelectionStrategy};

#[derive(Parser)]
#[command(
    name = "devloop",
    version,
    about = "Generate, execute, filter and mine development processes"
)]
struct Cli {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances for one task and print them.
    Generate {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long)]
        temperature: Option<f64>,
        /// Also print the prompt.
        #[arg(long)]
        show_prompt: bool,
    },
    /// Execute instances from a file (one per line) and record them in the pool.
    Run {
        instances: PathBuf,
        #[arg(long, default_value = "")]
        task: String,
        /// Pool CSV to extend; `<out>/pool.csv` when absent.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Re-execute pool entries chosen by a selection strategy.
    Replay {
        pool: PathBuf,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Uct)]
        strategy: StrategyArg,
    },
    /// Keep pool entries whose success rate reaches the threshold.
    Filter {
        pool: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Mine a model from an instance log or a pool and export it.
    Mine {
        /// Instance log (one per line) or pool CSV (`.csv`).
        input: PathBuf,
        /// For pools: only mine entries at or above this success rate.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print the text description of a BPMN-XML model.
    Describe { model: PathBuf },
    /// Run the closed loop.
    Loop {
        #[arg(long, default_value_t = 3)]
        iterations: usize,
    },
    /// Reproduce one experiment.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Uct,
    FailureRate,
    Frequency,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Temperature,
    Strategies,
    Filtering,
    Enhancement,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_instances(path: &Path) -> Result<Vec<Instance>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse_instance(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_jsonl(path: &Path, records: &[RunRecord]) -> Result<()> {
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).map(|s| s + "\n"))
        .collect::<Result<_, _>>()?;
    write(path, &text)
}

fn save_report(report: &ExperimentReport, out: &Path) -> Result<()> {
    let (csv, _) = report.write_to(out)?;
    print!("{}", report.to_csv());
    eprintln!("wrote {}", csv.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Generate {
            task,
            count,
            temperature,
            show_prompt,
        } => {
            let campaign = Campaign::new(cfg.clone())?;
            let spec = campaign.prompt_for(task);
            if *show_prompt {
                println!("{}", build_prompt(&spec));
            }
            let generator = Generator::from_config(
                &cfg.generation,
                cfg.seed,
                campaign.vocab.default_instance(),
            );
            let req = GenerationRequest {
                spec: &spec,
                constraint: None,
                temperature: temperature.unwrap_or(cfg.generation.temperature),
                count: *count,
                stream: 0,
            };
            for inst in generator.generate(&req, Parallelism::from_flag(cfg.parallel))? {
                println!("{}", serialize_instance(&inst));
            }
        }
        Command::Run {
            instances,
            task,
            pool,
        } => {
            let campaign = Campaign::new(cfg.clone())?;
            let pool_path = pool.clone().unwrap_or_else(|| out.join("pool.csv"));
            let mut pool = if pool_path.exists() {
                InstancePool::load(&pool_path)?
            } else {
                InstancePool::new()
            };
            let first_call = pool.total();
            let mut records = Vec::new();
            for (i, inst) in read_instances(instances)?.iter().enumerate() {
                let call = first_call + i as u64;
                let started = std::time::Instant::now();
                let r = campaign.executor.execute(inst, task, call)?;
                pool.record(inst, r.success);
                println!(
                    "{}\t{}",
                    if r.success { "ok" } else { "fail" },
                    serialize_instance(inst)
                );
                records.push(RunRecord {
                    call_index: call,
                    iteration: 0,
                    replay: false,
                    task: task.clone(),
                    instance: serialize_instance(inst),
                    mode: campaign.executor.mode_name(),
                    success: r.success,
                    duration_ms: started.elapsed().as_millis() as u64,
                    notes: r.notes,
                });
            }
            fs::create_dir_all(out)?;
            pool.save(&pool_path)?;
            write_jsonl(&out.join("runs.jsonl"), &records)?;
            eprintln!("pool saved to {}", pool_path.display());
        }
        Command::Replay {
            pool,
            rounds,
            strategy,
        } => {
            let campaign = Campaign::new(cfg.clone())?;
            let mut p = InstancePool::load(pool)?;
            let strategy = match strategy {
                StrategyArg::Uct => SelectionStrategy::Uct { c: cfg.uct_c },
                StrategyArg::FailureRate => SelectionStrategy::FailureRate,
                StrategyArg::Frequency => SelectionStrategy::Frequency,
            };
            let mut call = p.total();
            let executor = &campaign.executor;
            let report = p.replay(
                strategy,
                |inst| {
                    call += 1;
                    executor
                        .execute(inst, "", call)
                        .map(|r| r.success)
                        .map_err(|e| e.to_string())
                },
                *rounds,
                cfg.seed,
            )?;
            let mut table = ExperimentReport::new(
                "replay",
                &["attempt", "entry_id", "success", "distinct_visited"],
            );
            for r in &report.rounds {
                table.push(vec![
                    r.attempt.to_string(),
                    r.entry_id.to_string(),
                    r.success.to_string(),
                    r.distinct_visited.to_string(),
                ]);
            }
            table.set_meta("strategy", strategy.name());
            table.set_meta("coverage_complete_at", report.coverage_complete_at);
            table.write_to(out)?;
            p.save(pool)?;
            println!(
                "{} rounds, {}/{} entries visited",
                report.rounds.len(),
                report.final_coverage(),
                report.distinct_instances
            );
        }
        Command::Filter { pool, threshold } => {
            let p = InstancePool::load(pool)?;
            let threshold = threshold.unwrap_or(cfg.filter_threshold);
            let mut kept = InstancePool::new();
            for e in p.filter_by_sr(threshold) {
                kept.insert_stats(&e.instance, e.frequency, e.success_count)?;
            }
            let path = out.join("filtered.csv");
            fs::create_dir_all(out)?;
            kept.save(&path)?;
            println!(
                "{} of {} entries kept at threshold {threshold}",
                kept.len(),
                p.len()
            );
        }
        Command::Mine { input, threshold } => {
            let log = if input.extension().is_some_and(|e| e == "csv") {
                let p = InstancePool::load(input)?;
                let entries = match threshold {
                    Some(t) => p.filter_by_sr(*t),
                    None => p.entries().to_vec(),
                };
                if entries.is_empty() {
                    bail!("no pool entries to mine");
                }
                let mined = mine_entries(&entries)?;
                write(&out.join("model.dot"), &export_dot(&mined.bpmn))?;
                write(&out.join("model.bpmn"), &export_xml(&mined.bpmn))?;
                println!("{}", mined.tree);
                EventLog::from_weighted_instances(
                    entries
                        .iter()
                        .map(|e| (&e.instance, e.frequency.max(1) as usize)),
                )
            } else {
                let text = fs::read_to_string(input)
                    .with_context(|| format!("reading {}", input.display()))?;
                let log = EventLog::parse(&text)?;
                let tree = mine_tree(&log)?;
                let model = tree_to_bpmn(&tree);
                write(&out.join("model.dot"), &export_dot(&model))?;
                write(&out.join("model.bpmn"), &export_xml(&model))?;
                println!("{tree}");
                log
            };
            write(&out.join("dfg.dot"), &build_dfg(&log)?.to_dot())?;
            eprintln!(
                "wrote model.dot, model.bpmn and dfg.dot to {}",
                out.display()
            );
        }
        Command::Describe { model } => {
            let text = fs::read_to_string(model)
                .with_context(|| format!("reading {}", model.display()))?;
            let description = describe(&parse_xml(&text)?)?;
            println!("{}", description.text);
        }
        Command::Loop { iterations } => {
            let (report, campaign) = run_loop(&cfg, *iterations)?;
            save_report(&report, out)?;
            campaign.pool.save(&out.join("pool.csv"))?;
            write_jsonl(&out.join("runs.jsonl"), &campaign.log)?;
            if let Some(m) = &campaign.model {
                write(&out.join("model.dot"), &export_dot(&m.bpmn))?;
                write(&out.join("model.bpmn"), &export_xml(&m.bpmn))?;
                write(
                    &out.join("description.txt"),
                    &(m.description.text.clone() + "\n"),
                )?;
            }
        }
        Command::Experiment { kind } => {
            let e = &cfg.experiments;
            let report = match kind {
                ExperimentKind::Temperature => {
                    experiment_temperature(&cfg, &e.temperatures, e.samples_per_temperature)?
                }
                ExperimentKind::Strategies => experiment_strategies(&cfg, e.strategy_rounds)?,
                ExperimentKind::Filtering => experiment_filtering(&cfg, e.noise_fraction)?,
                ExperimentKind::Enhancement => experiment_enhancement(&cfg, e.tasks_per_arm)?,
            };
            save_report(&report, out)?;
        }
    }
    Ok(())
}
