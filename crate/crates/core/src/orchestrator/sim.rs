use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExecutionError;
use crate::instance::{Instance, Phase, PhaseVocabulary};
use crate::mining::ProcessTree;
use crate::par::mix_seed;

pub const DEFAULT_P_TRUE: f64 = 0.8;
pub const DEFAULT_P_FALSE: f64 = 0.1;
const OPTIONAL_PHASES: [&str; 3] = ["Annotation", "CodeReviewModification", "TestModification"];

/// Compiler stand-in: an instance the hidden model accepts succeeds with
/// probability `p_true`, any other instance with `p_false`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedEnvironment {
    pub hidden_model: ProcessTree,
    pub p_true: f64,
    pub p_false: f64,
    pub rng_seed: u64,
}

impl SimulatedEnvironment {
    pub fn new(
        hidden_model: ProcessTree,
        p_true: f64,
        p_false: f64,
        rng_seed: u64,
    ) -> Result<Self, ExecutionError> {
        if !(0.0 <= p_false && p_false < p_true && p_true <= 1.0) {
            return Err(ExecutionError::InvalidProbabilities { p_true, p_false });
        }
        Ok(SimulatedEnvironment {
            hidden_model,
            p_true,
            p_false,
            rng_seed,
        })
    }

    /// The outcome depends only on the seed, the call index and whether the
    /// model accepts the instance.
    pub fn compile(&self, inst: &Instance, call_index: u64) -> bool {
        let p = if self.conforms(inst) {
            self.p_true
        } else {
            self.p_false
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.rng_seed, call_index));
        rng.random::<f64>() < p
    }

    pub fn conforms(&self, inst: &Instance) -> bool {
        self.hidden_model.accepts(inst.phases())
    }
}

/// The canonical phases in order, with annotation, review modification and
/// test modification skippable.
pub fn default_hidden_model(vocab: &PhaseVocabulary) -> ProcessTree {
    let children = vocab
        .default_instance()
        .phases()
        .iter()
        .map(|p| {
            if OPTIONAL_PHASES.contains(&p.as_str()) {
                ProcessTree::xor(vec![ProcessTree::Tau, ProcessTree::Leaf(p.clone())])
            } else {
                ProcessTree::Leaf(p.clone())
            }
        })
        .collect::<Vec<_>>();
    match children.len() {
        1 => children.into_iter().next().expect("one child"),
        _ => ProcessTree::seq(children),
    }
}

fn default_p_true() -> f64 {
    DEFAULT_P_TRUE
}
fn default_p_false() -> f64 {
    DEFAULT_P_FALSE
}

/// Serializable settings; the hidden model is a tree expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default)]
    pub hidden_model: Option<String>,
    #[serde(default = "default_p_true")]
    pub p_true: f64,
    #[serde(default = "default_p_false")]
    pub p_false: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            hidden_model: None,
            p_true: DEFAULT_P_TRUE,
            p_false: DEFAULT_P_FALSE,
        }
    }
}

impl SimulationConfig {
    pub fn build(
        &self,
        vocab: &PhaseVocabulary,
        rng_seed: u64,
    ) -> Result<SimulatedEnvironment, ExecutionError> {
        let model = match &self.hidden_model {
            Some(expr) => {
                ProcessTree::parse(expr).map_err(|e| ExecutionError::Config(e.to_string()))?
            }
            None => default_hidden_model(vocab),
        };
        SimulatedEnvironment::new(model, self.p_true, self.p_false, rng_seed)
    }
}

/// Labels the hidden model can never accept.
pub fn is_alien(env: &SimulatedEnvironment, phase: &Phase) -> bool {
    !env.hidden_model.alphabet().contains(phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(p_true: f64, p_false: f64) -> SimulatedEnvironment {
        let vocab = PhaseVocabulary::builtin();
        SimulatedEnvironment::new(default_hidden_model(&vocab), p_true, p_false, 11).unwrap()
    }

    #[test]
    fn boundary_probabilities_follow_acceptance() {
        let e = env(1.0, 0.0);
        let default = PhaseVocabulary::builtin().default_instance().clone();
        let swapped = {
            let mut p = default.phases().to_vec();
            p.swap(0, 1);
            Instance::new(p).unwrap()
        };
        for i in 0..50 {
            assert!(e.compile(&default, i));
            assert!(!e.compile(&swapped, i));
        }
    }

    #[test]
    fn empirical_rates() {
        let e = env(0.7, 0.1);
        let vocab = PhaseVocabulary::builtin();
        let good = vocab.default_instance().clone();
        let rate = (0..1000).filter(|&i| e.compile(&good, i)).count() as f64 / 1000.0;
        assert!((rate - 0.7).abs() <= 0.05, "{rate}");
        let alien = Instance::from_names(["DemandAnalysis", "EmailSet"]).unwrap();
        assert!(is_alien(&e, &Phase::new("EmailSet").unwrap()));
        let rate = (0..1000).filter(|&i| e.compile(&alien, i)).count() as f64 / 1000.0;
        assert!((rate - 0.1).abs() <= 0.05, "{rate}");
    }

    #[test]
    fn default_model_shape() {
        let vocab = PhaseVocabulary::builtin();
        let tree = default_hidden_model(&vocab);
        assert_eq!(tree.visible_leaf_count(), 14);
        let without_annotation: Vec<Phase> = vocab
            .default_instance()
            .phases()
            .iter()
            .filter(|p| p.as_str() != "Annotation")
            .cloned()
            .collect();
        assert!(tree.accepts(&without_annotation));
    }

    #[test]
    fn probability_invariant() {
        let tree = ProcessTree::leaf("A");
        assert!(SimulatedEnvironment::new(tree.clone(), 0.5, 0.5, 0).is_err());
        assert!(SimulatedEnvironment::new(tree.clone(), 1.1, 0.0, 0).is_err());
        assert!(SimulatedEnvironment::new(tree, 1.0, 0.0, 0).is_ok());
    }
}
