use std::time::Instant;

use rand::seq::index::sample;
use serde::Serialize;

use super::config::{EnvironmentConfig, RunConfig};
use super::report::{ratio, ExperimentReport};
use super::tasks::{load_tasks, Task};
use super::HarnessError;
use crate::bpmn::{count_elements, tree_to_bpmn, BpmnModel, ElementCounts};
use crate::describe::{describe, ProcessDescription};
use crate::generation::{GenerationRequest, Generator, LlmClient, PromptSpec};
use crate::instance::{serialize_instance, Instance, PhaseVocabulary};
use crate::mining::{mine_tree, EventLog, ProcessTree};
use crate::orchestrator::{
    execute_chat_chain, execute_simulated, ChatChainConfig, ExecutionError, ExecutionResult,
    LlmAgent, SimulatedEnvironment,
};
use crate::par::{map_indexed, mix_seed, stream_rng, Parallelism};
use crate::pool::{InstancePool, PoolEntry, SelectionStrategy};

// Sub-seed labels so each random consumer gets its own stream.
pub(crate) const GENERATOR_STREAM: u64 = 1;
pub(crate) const ENVIRONMENT_STREAM: u64 = 2;
pub(crate) const REPLAY_STREAM: u64 = 3;
pub(crate) const TASK_STREAM: u64 = 4;

/// Runs one instance, either in simulation or through the chat chain.
#[derive(Debug, Clone)]
pub enum Executor {
    Simulated(SimulatedEnvironment),
    ChatChain {
        chain: ChatChainConfig,
        client: LlmClient,
        vocab: PhaseVocabulary,
    },
}

impl Executor {
    pub fn from_config(cfg: &RunConfig, vocab: &PhaseVocabulary) -> Result<Self, HarnessError> {
        match &cfg.environment {
            EnvironmentConfig::Simulated(sim) => sim
                .build(vocab, mix_seed(cfg.seed, ENVIRONMENT_STREAM))
                .map(Executor::Simulated)
                .map_err(|e| HarnessError::Config(e.to_string())),
            EnvironmentConfig::ChatChain(c) => Ok(Executor::ChatChain {
                chain: c.chain.clone(),
                client: LlmClient::new(c.llm.clone()),
                vocab: vocab.clone(),
            }),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Executor::Simulated(_) => "simulated",
            Executor::ChatChain { .. } => "chat_chain",
        }
    }

    pub fn execute(
        &self,
        inst: &Instance,
        task: &str,
        call_index: u64,
    ) -> Result<ExecutionResult, ExecutionError> {
        match self {
            Executor::Simulated(env) => Ok(execute_simulated(env, inst, call_index)),
            Executor::ChatChain {
                chain,
                client,
                vocab,
            } => {
                let mut agent = LlmAgent {
                    client: client.clone(),
                    temperature: chain.temperature,
                };
                execute_chat_chain(inst, task, vocab, chain, &mut agent)
            }
        }
    }
}

/// One line of the JSON-lines run log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub call_index: u64,
    pub iteration: usize,
    pub replay: bool,
    pub task: String,
    pub instance: String,
    pub mode: &'static str,
    pub success: bool,
    pub duration_ms: u64,
    pub notes: String,
}

/// The model mined from a set of pool entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedModel {
    pub tree: ProcessTree,
    pub bpmn: BpmnModel,
    pub counts: ElementCounts,
    pub description: ProcessDescription,
}

/// Mines the entries, each weighted by its frequency, and renders the result.
pub fn mine_entries(entries: &[PoolEntry]) -> Result<MinedModel, HarnessError> {
    let log = EventLog::from_weighted_instances(
        entries
            .iter()
            .map(|e| (&e.instance, e.frequency.max(1) as usize)),
    );
    let tree = mine_tree(&log).map_err(|e| HarnessError::step("mining", e))?;
    let bpmn = tree_to_bpmn(&tree);
    let counts = count_elements(&bpmn);
    let description = describe(&bpmn).map_err(|e| HarnessError::step("describing", e))?;
    Ok(MinedModel {
        tree,
        bpmn,
        counts,
        description,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub tasks: Vec<String>,
    pub executed: usize,
    pub successes: usize,
    pub pool_size: u64,
    pub distinct_variants: usize,
    pub survivors: usize,
    pub counts: Option<ElementCounts>,
    pub replay_coverage: usize,
}

impl IterationSummary {
    pub fn success_rate(&self) -> f64 {
        if self.executed == 0 {
            0.0
        } else {
            self.successes as f64 / self.executed as f64
        }
    }
}

/// Live state of a closed-loop campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub cfg: RunConfig,
    pub vocab: PhaseVocabulary,
    pub tasks: Vec<Task>,
    pub generator: Generator,
    pub executor: Executor,
    pub pool: InstancePool,
    /// Experiential instances for the next prompt; empty until something
    /// survives filtering.
    pub seeds: Vec<Instance>,
    pub model: Option<MinedModel>,
    pub log: Vec<RunRecord>,
    next_call: u64,
    iterations_done: usize,
}

impl Campaign {
    pub fn new(cfg: RunConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let vocab = match &cfg.vocabulary_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                PhaseVocabulary::from_json(&text)
                    .map_err(|e| HarnessError::Config(e.to_string()))?
            }
            None => PhaseVocabulary::builtin(),
        };
        let tasks = load_tasks(cfg.tasks_path.as_deref())?;
        let generator = Generator::from_config(
            &cfg.generation,
            mix_seed(cfg.seed, GENERATOR_STREAM),
            vocab.default_instance(),
        );
        let executor = Executor::from_config(&cfg, &vocab)?;
        let pool = match &cfg.pool_path {
            Some(path) if path.exists() => InstancePool::load(path)?,
            _ => InstancePool::new(),
        };
        Ok(Campaign {
            cfg,
            vocab,
            tasks,
            generator,
            executor,
            pool,
            seeds: Vec::new(),
            model: None,
            log: Vec::new(),
            next_call: 0,
            iterations_done: 0,
        })
    }

    pub fn mode(&self) -> Parallelism {
        Parallelism::from_flag(self.cfg.parallel)
    }

    fn sample_tasks(&self, iteration: usize) -> Vec<Task> {
        let mut rng = stream_rng(mix_seed(self.cfg.seed, TASK_STREAM), iteration as u64);
        let k = self
            .cfg
            .loop_settings
            .tasks_per_iteration
            .min(self.tasks.len());
        sample(&mut rng, self.tasks.len(), k)
            .into_iter()
            .map(|i| self.tasks[i].clone())
            .collect()
    }

    /// Builds the prompt for one task from the current experience.
    pub fn prompt_for(&self, task: &str) -> PromptSpec {
        let spec = PromptSpec::new(task, self.vocab.clone()).with_experience(self.seeds.clone());
        match &self.model {
            Some(m) => spec.with_description(m.description.clone()),
            None => spec,
        }
    }

    /// Runs one full iteration of the loop.
    pub fn iterate(&mut self) -> Result<IterationSummary, HarnessError> {
        let iteration = self.iterations_done + 1;
        let ctx = |stage: &str| format!("iteration {iteration}: {stage}");
        let mode = self.mode();
        let tasks = self.sample_tasks(iteration);

        let mut batch: Vec<(String, Instance)> = Vec::new();
        for (j, task) in tasks.iter().enumerate() {
            let spec = self.prompt_for(&task.task);
            let req = GenerationRequest {
                spec: &spec,
                constraint: self.model.as_ref().map(|m| &m.tree),
                temperature: self.cfg.generation.temperature,
                count: self.cfg.loop_settings.instances_per_task,
                stream: ((iteration as u64) << 20) | j as u64,
            };
            let out = self
                .generator
                .generate(&req, mode)
                .map_err(|e| HarnessError::step(ctx("generation"), e))?;
            batch.extend(out.into_iter().map(|i| (task.task.clone(), i)));
        }

        let first_call = self.next_call;
        let executor = &self.executor;
        let results = map_indexed(mode, &batch, |i, (task, inst)| {
            let started = Instant::now();
            let r = executor.execute(inst, task, first_call + i as u64);
            (r, started.elapsed().as_millis() as u64)
        });
        self.next_call += batch.len() as u64;
        let mut successes = 0;
        for (i, ((task, inst), (result, ms))) in batch.iter().zip(results).enumerate() {
            let result = result.map_err(|e| HarnessError::step(ctx("execution"), e))?;
            successes += result.success as usize;
            self.pool.record(inst, result.success);
            self.log.push(RunRecord {
                call_index: first_call + i as u64,
                iteration,
                replay: false,
                task: task.clone(),
                instance: serialize_instance(inst),
                mode: self.executor.mode_name(),
                success: result.success,
                duration_ms: ms,
                notes: result.notes,
            });
        }

        let replay_coverage = if self.cfg.replay_rounds > 0 && !self.pool.is_empty() {
            let replay_task = tasks.first().map(|t| t.task.clone()).unwrap_or_default();
            let executor = self.executor.clone();
            let mode_name = executor.mode_name();
            let mut next_call = self.next_call;
            let mut records = Vec::new();
            let report = self
                .pool
                .replay(
                    SelectionStrategy::Uct { c: self.cfg.uct_c },
                    |inst| {
                        let started = Instant::now();
                        let call = next_call;
                        next_call += 1;
                        let r = executor.execute(inst, &replay_task, call);
                        let (success, notes) = match &r {
                            Ok(res) => (res.success, res.notes.clone()),
                            Err(e) => (false, e.to_string()),
                        };
                        records.push(RunRecord {
                            call_index: call,
                            iteration,
                            replay: true,
                            task: replay_task.clone(),
                            instance: serialize_instance(inst),
                            mode: mode_name,
                            success,
                            duration_ms: started.elapsed().as_millis() as u64,
                            notes,
                        });
                        r.map(|res| res.success).map_err(|e| e.to_string())
                    },
                    self.cfg.replay_rounds,
                    mix_seed(mix_seed(self.cfg.seed, REPLAY_STREAM), iteration as u64),
                )
                .map_err(|e| HarnessError::step(ctx("replay"), e))?;
            self.next_call = next_call;
            self.log.extend(records);
            report.final_coverage()
        } else {
            0
        };

        let survivors = self.pool.filter_by_sr(self.cfg.filter_threshold);
        if !survivors.is_empty() {
            let mined = mine_entries(&survivors).map_err(|e| match e {
                HarnessError::Step { context, message } => HarnessError::Step {
                    context: ctx(&context),
                    message,
                },
                other => other,
            })?;
            self.seeds = survivors
                .iter()
                .take(self.cfg.generation.experiential_count)
                .map(|e| e.instance.clone())
                .collect();
            self.model = Some(mined);
        }
        self.iterations_done = iteration;
        Ok(IterationSummary {
            iteration,
            tasks: tasks.into_iter().map(|t| t.task).collect(),
            executed: batch.len(),
            successes,
            pool_size: self.pool.total(),
            distinct_variants: self.pool.len(),
            survivors: survivors.len(),
            counts: self.model.as_ref().map(|m| m.counts),
            replay_coverage,
        })
    }

    /// The run log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }
}

pub const LOOP_COLUMNS: [&str; 12] = [
    "iteration",
    "executed",
    "successes",
    "success_rate",
    "pool_size",
    "distinct_variants",
    "survivors",
    "tasks",
    "exclusive_gateways",
    "parallel_gateways",
    "replay_coverage",
    "sampled_tasks",
];

/// Runs `iterations` rounds and reports one row per round. The campaign is
/// returned so callers can persist the pool, the model and the run log.
pub fn run_loop(
    cfg: &RunConfig,
    iterations: usize,
) -> Result<(ExperimentReport, Campaign), HarnessError> {
    if iterations == 0 {
        return Err(HarnessError::Config("iterations must be at least 1".into()));
    }
    let mut campaign = Campaign::new(cfg.clone())?;
    let mut report = ExperimentReport::new("loop", &LOOP_COLUMNS);
    report.set_meta("seed", cfg.seed);
    report.set_meta("iterations", iterations);
    report.set_meta("config", cfg.to_json());
    for _ in 0..iterations {
        let s = campaign.iterate()?;
        let counts = s.counts.unwrap_or_default();
        report.push(vec![
            s.iteration.to_string(),
            s.executed.to_string(),
            s.successes.to_string(),
            ratio(s.success_rate()),
            s.pool_size.to_string(),
            s.distinct_variants.to_string(),
            s.survivors.to_string(),
            counts.tasks.to_string(),
            counts.exclusive_gateways.to_string(),
            counts.parallel_gateways.to_string(),
            s.replay_coverage.to_string(),
            s.tasks.len().to_string(),
        ]);
    }
    if let Some(m) = &campaign.model {
        report.set_meta("final_model", m.tree.to_string());
    }
    Ok((report, campaign))
}
