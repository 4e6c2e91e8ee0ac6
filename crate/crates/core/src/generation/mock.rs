use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GenerationError, MAX_TEMPERATURE};
use crate::instance::{Instance, Phase};
use crate::mining::ProcessTree;
use crate::par::{map_range, stream_rng, Parallelism};

pub const HALLUCINATED_PHASES: [&str; 5] = [
    "UsernameSet",
    "ExternalReview",
    "Comments",
    "EmailSet",
    "EmploymentDoc",
];

/// Per-position chance of each edit at the maximum temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MutationWeights {
    pub insert: f64,
    pub swap: f64,
    pub delete: f64,
}

impl Default for MutationWeights {
    fn default() -> Self {
        MutationWeights {
            insert: 0.06,
            swap: 0.06,
            delete: 0.04,
        }
    }
}

/// A generator that copies seed instances and perturbs them with edits whose
/// probability grows with the temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockConfig {
    pub seeds: Vec<Instance>,
    pub hallucination_vocab: Vec<Phase>,
    pub rng_seed: u64,
    #[serde(default)]
    pub weights: MutationWeights,
}

impl MockConfig {
    pub fn new(seeds: Vec<Instance>, rng_seed: u64) -> Self {
        MockConfig {
            seeds,
            hallucination_vocab: default_hallucinations(),
            rng_seed,
            weights: MutationWeights::default(),
        }
    }
}

pub fn default_hallucinations() -> Vec<Phase> {
    HALLUCINATED_PHASES
        .iter()
        .map(|p| Phase::new(p).expect("valid name"))
        .collect()
}

/// Produces `count` outputs. Output `k` uses its own random stream derived
/// from `stream` and `k`, so results do not depend on scheduling.
///
/// Every position of the picked seed draws the same random numbers at every
/// temperature; an edit fires when its draw falls below
/// `temperature / 1.5 * weight`. A constraint tree, when given, vetoes edits
/// whose result it does not accept. Hallucinated labels are inserted only
/// within the stretch of the seed each label is assigned to, so errors stay
/// local the way a model's confusions do.
pub fn mock_generate(
    cfg: &MockConfig,
    seeds: &[Instance],
    temperature: f64,
    count: usize,
    stream: u64,
    constraint: Option<&ProcessTree>,
    mode: Parallelism,
) -> Result<Vec<Instance>, GenerationError> {
    if !(0.0..=MAX_TEMPERATURE).contains(&temperature) {
        return Err(GenerationError::TemperatureOutOfRange(temperature));
    }
    let seeds = if seeds.is_empty() { &cfg.seeds } else { seeds };
    if seeds.is_empty() {
        return Err(GenerationError::NoSeeds);
    }
    let base = crate::par::mix_seed(cfg.rng_seed, stream);
    Ok(map_range(mode, count, |k| {
        let mut rng = stream_rng(base, k as u64);
        let seed = &seeds[rng.random_range(0..seeds.len())];
        mutate(cfg, seed, temperature, &mut rng, constraint)
    }))
}

fn mutate<R: Rng>(
    cfg: &MockConfig,
    seed: &Instance,
    temperature: f64,
    rng: &mut R,
    constraint: Option<&ProcessTree>,
) -> Instance {
    let scale = temperature / MAX_TEMPERATURE;
    let w = cfg.weights;
    // Each slot remembers which seed position it came from.
    let mut slots: Vec<(Phase, Option<usize>)> = seed
        .phases()
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, Some(i)))
        .collect();
    let allowed = |slots: &[(Phase, Option<usize>)]| match constraint {
        Some(tree) => {
            let trace: Vec<Phase> = slots.iter().map(|(p, _)| p.clone()).collect();
            tree.accepts(&trace)
        }
        None => true,
    };
    for i in 0..seed.len() {
        let (u_insert, u_swap, u_delete): (f64, f64, f64) =
            (rng.random(), rng.random(), rng.random());
        // Each hallucinated label belongs to one stretch of the seed.
        let pick = i * cfg.hallucination_vocab.len() / seed.len();
        let Some(mut pos) = slots.iter().position(|(_, origin)| *origin == Some(i)) else {
            continue;
        };
        if u_insert < scale * w.insert && !cfg.hallucination_vocab.is_empty() {
            slots.insert(pos, (cfg.hallucination_vocab[pick].clone(), None));
            if allowed(&slots) {
                pos += 1;
            } else {
                slots.remove(pos);
            }
        }
        if u_swap < scale * w.swap && pos > 0 {
            slots.swap(pos - 1, pos);
            if allowed(&slots) {
                pos -= 1;
            } else {
                slots.swap(pos - 1, pos);
            }
        }
        if u_delete < scale * w.delete && slots.len() > 1 {
            let removed = slots.remove(pos);
            if !allowed(&slots) {
                slots.insert(pos, removed);
            }
        }
    }
    Instance::new(slots.into_iter().map(|(p, _)| p).collect()).expect("never emptied")
}
