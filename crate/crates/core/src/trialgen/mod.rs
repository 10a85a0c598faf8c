//! Stimulus generation: the instance pool, the problem-solving trials and
//! the per-participant evaluation trials.

pub mod manifest;
pub mod pool;
pub mod trials;

pub use manifest::{manifest_rows, read_csv, write_csv, ManifestRow};
pub use pool::{generate_pool, GenerationConfig, Pool, PoolEntry, PoolFile, Rejection, YieldReport};
pub use trials::{
    generate_evaluation_trials, make_catch_trials, make_coherence_trials, make_shared_trials,
    select_problem_solving_trials, ScoredPool, SharedTrials, Stratum, TrialKind, TrialPair,
};
