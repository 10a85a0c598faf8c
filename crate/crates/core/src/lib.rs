//! Multiple subset sum instances, exact enumeration of equal-value optima,
//! and interpretability metrics for ranking those optima.

pub mod calibration;
pub mod error;
pub mod measures;
pub mod metrics;
pub mod model;
pub mod par;
pub mod preference;
pub mod seed;
pub mod solver;
pub mod stats;
pub mod trialgen;

pub use error::{Error, Result};
pub use model::{
    apply_layout, canonical_form, objective_score, validate_solution, CanonicalKey,
    DisplayedSolution, ProblemInstance, Solution, SolutionRecord,
};
pub use par::Execution;
pub use solver::{
    brute_force_optima, enumerate_optima, greedy_lbf_lif, heuristic_optimality,
    EnumerationResult,
};
