//! Closed-loop generation of software-development process instances.
//!
//! The crate covers the whole loop: instances (ordered phase sequences) are
//! generated from a prompt, executed against a feedback environment, logged in
//! an [`pool::InstancePool`], filtered by success rate, mined into a
//! [`mining::ProcessTree`] with the Inductive Miner, converted to BPMN,
//! rendered as text, and fed back into the next round of generation.
//!
//! Batch work (executions, mock generation, experiment sweeps) goes through
//! [`par`], which uses rayon when the `parallel` feature is enabled and runs
//! sequentially otherwise.

pub mod bpmn;
pub mod describe;
pub mod generation;
pub mod harness;
pub mod instance;
pub mod mining;
pub mod orchestrator;
pub mod par;
pub mod pool;

pub use instance::{Instance, Phase, PhaseVocabulary};
pub use mining::{EventLog, ProcessTree};
pub use pool::{InstancePool, PoolEntry, SelectionStrategy};
