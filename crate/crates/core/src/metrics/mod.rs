//! Solution-level complexity metrics and their pair-level differences.
//!
//! * HC: edit distance to the greedy packing (display invariant).
//! * CC: mean bin surprisal under a generative bin model (display invariant).
//! * VC: disorder of the displayed bin and item sequences.
//! * DD: edit distance of the displayed matrix to a staircase diagonal.

pub mod composition;
pub mod order;
pub mod pair;
pub mod structure;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DisplayedSolution, ProblemInstance};

pub use composition::{cc, empty_space_log_density, CcParams, EmptySpaceFamily};
pub use order::vc;
pub use pair::{compute_sds, pair_differences, raw_differences, PairDifferences, PerMetric};
pub use structure::{dd, hc};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub hc: u32,
    pub cc: f64,
    pub vc: f64,
    pub dd: u32,
}

pub fn profile(
    instance: &ProblemInstance,
    displayed: &DisplayedSolution,
    params: &CcParams,
) -> Result<ComplexityProfile> {
    Ok(ComplexityProfile {
        hc: hc(instance, displayed.solution())?,
        cc: cc(instance, displayed.solution(), params)?,
        vc: vc(instance, displayed)?,
        dd: dd(instance, displayed)?,
    })
}

/// Profiles of many displayed solutions, in input order.
pub fn profile_batch(
    items: &[(ProblemInstance, DisplayedSolution)],
    params: &CcParams,
    exec: crate::par::Execution,
) -> Result<Vec<ComplexityProfile>> {
    crate::par::map_slice(exec, items, |(p, d)| profile(p, d, params))
        .into_iter()
        .collect()
}
