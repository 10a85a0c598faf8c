//! Simulated instance pool: random instances in the study regime, solved
//! exactly and kept when they have at least two distinct optima.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, Solution};
use crate::par::{map_range, Execution};
use crate::seed::{self, STREAM_POOL};
use crate::solver::{enumerate_optima_with, EnumerationResult, SolverOptions, DEFAULT_NODE_BUDGET};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub iterations: usize,
    pub items_min: usize,
    pub items_max: usize,
    pub bins_min: usize,
    pub bins_max: usize,
    pub size_min: u32,
    pub size_max: u32,
    pub size_step: u32,
    pub capacity_min: u32,
    pub capacity_max: u32,
    pub capacity_step: u32,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Maximum number of distinct optima kept per instance.
    pub cap: usize,
    pub node_budget: u64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            items_min: 7,
            items_max: 9,
            bins_min: 4,
            bins_max: 6,
            size_min: 5,
            size_max: 100,
            size_step: 5,
            capacity_min: 10,
            capacity_max: 100,
            capacity_step: 10,
            ratio_min: 0.8,
            ratio_max: 1.0,
            cap: 100,
            node_budget: DEFAULT_NODE_BUDGET,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_owned()));
        if self.items_min == 0 || self.items_min > self.items_max {
            return bad("item-count range is empty");
        }
        if self.bins_min == 0 || self.bins_min > self.bins_max {
            return bad("bin-count range is empty");
        }
        if self.size_step == 0 || self.size_min == 0 || self.size_min > self.size_max {
            return bad("size grid is empty");
        }
        if self.capacity_step == 0 || self.capacity_min == 0 || self.capacity_min > self.capacity_max {
            return bad("capacity grid is empty");
        }
        if !(self.capacity_max - self.capacity_min).is_multiple_of(self.capacity_step) {
            return bad("capacity range must be a whole number of steps");
        }
        if !(self.ratio_min > 0.0 && self.ratio_min <= self.ratio_max) {
            return bad("ratio range is empty");
        }
        if self.cap == 0 {
            return bad("cap must be at least 1");
        }
        Ok(())
    }

    fn grid(lo: u32, hi: u32, step: u32) -> Vec<u32> {
        (lo..=hi).step_by(step as usize).collect()
    }
}

/// Why an iteration produced no pool entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// Target total capacity outside `[m * min, m * max]`.
    CapacityUnreachable,
    /// An item larger than every bin, or a bin smaller than every item.
    Screen,
    /// Load-capacity ratio outside the range after rounding capacities.
    Ratio,
    /// Node budget exhausted.
    Budget,
    /// Fewer than two distinct optima.
    SingleOptimum,
}

impl Rejection {
    pub fn name(self) -> &'static str {
        match self {
            Rejection::CapacityUnreachable => "capacity_unreachable",
            Rejection::Screen => "screen",
            Rejection::Ratio => "ratio",
            Rejection::Budget => "budget",
            Rejection::SingleOptimum => "single_optimum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub iterations: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
    /// Accepted instances whose optima were cut off at the cap.
    pub truncated: usize,
}

impl YieldReport {
    pub fn yield_fraction(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iterations as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub instance: ProblemInstance,
    pub result: EnumerationResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub config: GenerationConfig,
    pub entries: Vec<PoolEntry>,
    pub report: YieldReport,
}

/// Draws a random instance; capacities are allocated by drawing every bin
/// from the grid and then moving random bins one step toward the target
/// total.
pub fn sample_instance(
    config: &GenerationConfig,
    rng: &mut ChaCha8Rng,
    id: String,
) -> std::result::Result<ProblemInstance, Rejection> {
    let n = rng.random_range(config.items_min..=config.items_max);
    let m = rng.random_range(config.bins_min..=config.bins_max);
    let sizes = GenerationConfig::grid(config.size_min, config.size_max, config.size_step);
    let capacities = GenerationConfig::grid(config.capacity_min, config.capacity_max, config.capacity_step);
    let items: Vec<u32> = (0..n).map(|_| *sizes.choose(rng).expect("nonempty grid")).collect();
    let ratio = if config.ratio_min < config.ratio_max {
        rng.random_range(config.ratio_min..=config.ratio_max)
    } else {
        config.ratio_min
    };
    let load: u32 = items.iter().sum();
    let step = config.capacity_step;
    let target = (f64::from(load) / ratio / f64::from(step)).round() as u64 * u64::from(step);
    let lo = m as u64 * u64::from(config.capacity_min);
    let hi = m as u64 * u64::from(config.capacity_max);
    if target < lo || target > hi {
        return Err(Rejection::CapacityUnreachable);
    }
    let mut bins: Vec<u32> = (0..m).map(|_| *capacities.choose(rng).expect("nonempty grid")).collect();
    loop {
        let total: u64 = bins.iter().map(|&w| u64::from(w)).sum();
        if total == target {
            break;
        }
        let grow = total < target;
        let movable: Vec<usize> = (0..m)
            .filter(|&i| {
                if grow {
                    bins[i] < config.capacity_max
                } else {
                    bins[i] > config.capacity_min
                }
            })
            .collect();
        let &i = movable.choose(rng).expect("target inside the reachable range");
        if grow {
            bins[i] += step;
        } else {
            bins[i] -= step;
        }
    }
    let max_bin = *bins.iter().max().expect("m >= 1");
    let min_bin = *bins.iter().min().expect("m >= 1");
    let max_item = *items.iter().max().expect("n >= 1");
    let min_item = *items.iter().min().expect("n >= 1");
    if max_item > max_bin || min_bin < min_item {
        return Err(Rejection::Screen);
    }
    let instance = ProblemInstance::new(id, bins, items).expect("positive sizes and capacities");
    let pd = instance.difficulty();
    if pd < config.ratio_min || pd > config.ratio_max {
        return Err(Rejection::Ratio);
    }
    Ok(instance)
}

fn run_iteration(config: &GenerationConfig, i: usize) -> std::result::Result<PoolEntry, Rejection> {
    let mut rng = seed::rng(config.seed, STREAM_POOL, i as u64);
    let instance = sample_instance(config, &mut rng, format!("p{i:05}"))?;
    let options = SolverOptions {
        cap: config.cap,
        node_budget: config.node_budget,
    };
    let result = match enumerate_optima_with(&instance, options) {
        Ok(r) => r,
        Err(Error::BudgetExhausted { .. }) => return Err(Rejection::Budget),
        Err(e) => panic!("solver failed on a valid instance: {e}"),
    };
    if !result.has_multiple_optima() {
        return Err(Rejection::SingleOptimum);
    }
    Ok(PoolEntry { instance, result })
}

/// Runs every iteration on its own derived random stream, so the pool does
/// not depend on the thread count.
pub fn generate_pool(config: &GenerationConfig, exec: Execution) -> Result<Pool> {
    config.validate()?;
    let outcomes = map_range(exec, config.iterations, |i| run_iteration(config, i));
    let mut entries = Vec::new();
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    for outcome in outcomes {
        match outcome {
            Ok(e) => entries.push(e),
            Err(r) => *rejected.entry(r.name().to_owned()).or_default() += 1,
        }
    }
    let report = YieldReport {
        iterations: config.iterations,
        accepted: entries.len(),
        truncated: entries.iter().filter(|e| e.result.truncated).count(),
        rejected,
    };
    Ok(Pool {
        config: config.clone(),
        entries,
        report,
    })
}

/// File form of a pool entry; solutions as per-item bin indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntryRecord {
    pub id: String,
    pub bins: Vec<u32>,
    pub items: Vec<u32>,
    pub optimal_score: u64,
    pub truncated: bool,
    pub solutions: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFile {
    pub config: GenerationConfig,
    pub report: YieldReport,
    pub entries: Vec<PoolEntryRecord>,
}

impl From<&Pool> for PoolFile {
    fn from(pool: &Pool) -> Self {
        let entries = pool
            .entries
            .iter()
            .map(|e| PoolEntryRecord {
                id: e.instance.id().to_owned(),
                bins: e.instance.bins().to_vec(),
                items: e.instance.items().to_vec(),
                optimal_score: e.result.optimal_score,
                truncated: e.result.truncated,
                solutions: e
                    .result
                    .solutions
                    .iter()
                    .map(|s| s.assignment().expect("solver output is valid"))
                    .collect(),
            })
            .collect();
        Self {
            config: pool.config.clone(),
            report: pool.report.clone(),
            entries,
        }
    }
}

impl TryFrom<PoolFile> for Pool {
    type Error = Error;

    fn try_from(file: PoolFile) -> Result<Self> {
        let entries = file
            .entries
            .into_iter()
            .map(|r| {
                let instance = ProblemInstance::new(r.id, r.bins, r.items)?;
                let solutions = r
                    .solutions
                    .iter()
                    .map(|a| {
                        if a.len() != instance.num_items() {
                            return Err(Error::DimensionMismatch(format!(
                                "solution of {} entries for {} items in {}",
                                a.len(),
                                instance.num_items(),
                                instance.id()
                            )));
                        }
                        Solution::from_assignment(a, instance.num_bins())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PoolEntry {
                    instance,
                    result: EnumerationResult {
                        optimal_score: r.optimal_score,
                        solutions,
                        truncated: r.truncated,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Pool {
            config: file.config,
            entries,
            report: file.report,
        })
    }
}
