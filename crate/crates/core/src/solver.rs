//! Exact solving: the greedy reference packing, branch-and-bound enumeration
//! of every distinct optimum, and an exhaustive oracle.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{canonical_key_unchecked, objective_score, CanonicalKey, ProblemInstance, Solution};
use crate::par::{self, Execution};

pub const DEFAULT_CAP: usize = 100;
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;
pub const DEFAULT_BRUTE_FORCE_BOUND: u64 = 10_000_000;

/// Distinct optimal solutions of one instance, sorted by canonical key.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    pub optimal_score: u64,
    pub solutions: Vec<Solution>,
    /// Set when more than `cap` distinct optima exist.
    pub truncated: bool,
}

impl EnumerationResult {
    pub fn has_multiple_optima(&self) -> bool {
        self.solutions.len() >= 2
    }

    pub fn keys(&self, instance: &ProblemInstance) -> Vec<CanonicalKey> {
        self.solutions
            .iter()
            .map(|s| canonical_key_unchecked(instance, s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub cap: usize,
    pub node_budget: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Indices sorted by descending value; equal values keep input order.
fn descending_order(values: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].cmp(&values[a]));
    idx
}

/// Largest Bin First, Largest Item First.
///
/// Bins are visited by descending capacity; each bin takes every remaining
/// item, largest first, that still fits. Ties keep input order.
pub fn greedy_lbf_lif(instance: &ProblemInstance) -> Solution {
    let bins = descending_order(instance.bins());
    let items = descending_order(instance.items());
    let mut placed = vec![false; instance.num_items()];
    let mut sol = Solution::empty(instance.num_items(), instance.num_bins());
    for &bin in &bins {
        let mut free = instance.bins()[bin];
        for &item in &items {
            let size = instance.items()[item];
            if !placed[item] && size <= free {
                placed[item] = true;
                free -= size;
                sol.set(item, bin, true);
            }
        }
    }
    sol
}

/// Greedy score divided by the optimum; 1.0 when the optimum is 0.
pub fn heuristic_optimality(instance: &ProblemInstance) -> Result<f64> {
    let optimum = optimal_score(instance, DEFAULT_NODE_BUDGET)?;
    let greedy = objective_score(instance, &greedy_lbf_lif(instance))?;
    Ok(if optimum == 0 {
        1.0
    } else {
        greedy as f64 / optimum as f64
    })
}

pub fn enumerate_optima(instance: &ProblemInstance, cap: usize) -> Result<EnumerationResult> {
    enumerate_optima_with(
        instance,
        SolverOptions {
            cap,
            ..SolverOptions::default()
        },
    )
}

/// Branch-and-bound over items (largest first), each branching on a bin or
/// "unassigned". The bound is the current score plus the smaller of the
/// remaining item mass and the remaining free capacity.
///
/// Two symmetry rules cut the tree without losing any canonical key:
/// identical items take non-decreasing labels (unassigned sorts last), and an
/// empty bin may only be opened if every lower-index bin of the same capacity
/// is already open.
pub fn enumerate_optima_with(
    instance: &ProblemInstance,
    options: SolverOptions,
) -> Result<EnumerationResult> {
    if options.cap == 0 {
        return Err(Error::InvalidParameter("cap must be at least 1".into()));
    }
    let mut search = Search::new(instance, options.node_budget);
    let greedy = objective_score(instance, &greedy_lbf_lif(instance))?;
    let optimum = search.maximize(greedy)?;
    let found = search.collect(optimum, options.cap)?;
    let truncated = found.len() > options.cap;
    let solutions = found
        .into_values()
        .take(options.cap)
        .map(|labels| search.to_solution(&labels))
        .collect();
    Ok(EnumerationResult {
        optimal_score: optimum,
        solutions,
        truncated,
    })
}

fn optimal_score(instance: &ProblemInstance, budget: u64) -> Result<u64> {
    let greedy = objective_score(instance, &greedy_lbf_lif(instance))?;
    Search::new(instance, budget).maximize(greedy)
}

struct Search<'a> {
    instance: &'a ProblemInstance,
    /// Item indices in branching order.
    order: Vec<usize>,
    sizes: Vec<u64>,
    /// `same_as_prev[p]`: item at position p has the size of position p - 1.
    same_as_prev: Vec<bool>,
    /// Sum of sizes from position p onwards.
    suffix: Vec<u64>,
    /// For each bin, the lower-index bins sharing its capacity.
    twins_below: Vec<Vec<usize>>,
    capacity: Vec<u64>,
    budget: u64,
    nodes: u64,
}

/// Per-position label; `m` means unassigned.
type Labels = Vec<usize>;

impl<'a> Search<'a> {
    fn new(instance: &'a ProblemInstance, budget: u64) -> Self {
        let order = descending_order(instance.items());
        let sizes: Vec<u64> = order
            .iter()
            .map(|&j| u64::from(instance.items()[j]))
            .collect();
        let same_as_prev = (0..sizes.len())
            .map(|p| p > 0 && sizes[p] == sizes[p - 1])
            .collect();
        let mut suffix = vec![0; sizes.len() + 1];
        for p in (0..sizes.len()).rev() {
            suffix[p] = suffix[p + 1] + sizes[p];
        }
        let bins = instance.bins();
        let twins_below = (0..bins.len())
            .map(|b| (0..b).filter(|&a| bins[a] == bins[b]).collect())
            .collect();
        Self {
            instance,
            order,
            sizes,
            same_as_prev,
            suffix,
            twins_below,
            capacity: bins.iter().map(|&w| u64::from(w)).collect(),
            budget,
            nodes: 0,
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn allowed(&self, p: usize, label: usize, labels: &[usize], load: &[u64]) -> bool {
        if self.same_as_prev[p] && label < labels[p - 1] {
            return false;
        }
        let m = self.capacity.len();
        if label == m {
            return true;
        }
        if load[label] + self.sizes[p] > self.capacity[label] {
            return false;
        }
        load[label] > 0 || self.twins_below[label].iter().all(|&a| load[a] > 0)
    }

    fn bound(&self, p: usize, score: u64, load: &[u64]) -> u64 {
        let free: u64 = self
            .capacity
            .iter()
            .zip(load)
            .map(|(c, l)| c - l)
            .sum();
        score + self.suffix[p].min(free)
    }

    fn maximize(&mut self, incumbent: u64) -> Result<u64> {
        let m = self.capacity.len();
        let n = self.sizes.len();
        let ceiling = self.suffix[0].min(self.capacity.iter().sum());
        let mut best = incumbent;
        let mut labels = vec![m; n];
        let mut load = vec![0; m];
        self.max_rec(0, 0, &mut labels, &mut load, &mut best, ceiling)?;
        Ok(best)
    }

    fn max_rec(
        &mut self,
        p: usize,
        score: u64,
        labels: &mut Labels,
        load: &mut Vec<u64>,
        best: &mut u64,
        ceiling: u64,
    ) -> Result<()> {
        self.tick()?;
        if score > *best {
            *best = score;
        }
        if p == self.sizes.len() || *best == ceiling || self.bound(p, score, load) <= *best {
            return Ok(());
        }
        let m = self.capacity.len();
        for label in 0..=m {
            if !self.allowed(p, label, labels, load) {
                continue;
            }
            labels[p] = label;
            let gain = if label < m { self.sizes[p] } else { 0 };
            if label < m {
                load[label] += gain;
            }
            self.max_rec(p + 1, score + gain, labels, load, best, ceiling)?;
            if label < m {
                load[label] -= gain;
            }
            if *best == ceiling {
                break;
            }
        }
        labels[p] = m;
        Ok(())
    }

    /// Collects up to `cap + 1` distinct optimal packings keyed canonically.
    fn collect(&mut self, optimum: u64, cap: usize) -> Result<BTreeMap<CanonicalKey, Labels>> {
        let m = self.capacity.len();
        let n = self.sizes.len();
        let mut labels = vec![m; n];
        let mut load = vec![0; m];
        let mut found = BTreeMap::new();
        self.collect_rec(0, 0, optimum, cap, &mut labels, &mut load, &mut found)?;
        Ok(found)
    }

    #[allow(clippy::too_many_arguments)]
    fn collect_rec(
        &mut self,
        p: usize,
        score: u64,
        optimum: u64,
        cap: usize,
        labels: &mut Labels,
        load: &mut Vec<u64>,
        found: &mut BTreeMap<CanonicalKey, Labels>,
    ) -> Result<bool> {
        self.tick()?;
        if self.bound(p, score, load) < optimum {
            return Ok(false);
        }
        if p == self.sizes.len() {
            let sol = self.to_solution(labels);
            let key = canonical_key_unchecked(self.instance, &sol);
            found.entry(key).or_insert_with(|| labels.clone());
            return Ok(found.len() > cap);
        }
        let m = self.capacity.len();
        for label in 0..=m {
            if !self.allowed(p, label, labels, load) {
                continue;
            }
            labels[p] = label;
            let gain = if label < m { self.sizes[p] } else { 0 };
            if label < m {
                load[label] += gain;
            }
            let stop = self.collect_rec(p + 1, score + gain, optimum, cap, labels, load, found)?;
            if label < m {
                load[label] -= gain;
            }
            if stop {
                labels[p] = m;
                return Ok(true);
            }
        }
        labels[p] = m;
        Ok(false)
    }

    fn to_solution(&self, labels: &[usize]) -> Solution {
        let m = self.capacity.len();
        let mut sol = Solution::empty(self.sizes.len(), m);
        for (p, &label) in labels.iter().enumerate() {
            if label < m {
                sol.set(self.order[p], label, true);
            }
        }
        sol
    }
}

pub fn brute_force_optima(instance: &ProblemInstance) -> Result<EnumerationResult> {
    brute_force_optima_with(instance, DEFAULT_BRUTE_FORCE_BOUND, Execution::default())
}

/// Exhaustive oracle over all `(m + 1)^n` assignments. Never truncates.
pub fn brute_force_optima_with(
    instance: &ProblemInstance,
    bound: u64,
    exec: Execution,
) -> Result<EnumerationResult> {
    let m = instance.num_bins();
    let n = instance.num_items();
    let radix = (m + 1) as u64;
    let required = (radix as f64).powi(n as i32);
    if required > bound as f64 {
        return Err(Error::BruteForceBound { required, bound });
    }
    let total = radix.pow(n as u32);
    const CHUNK: u64 = 4096;
    let chunks = total.div_ceil(CHUNK) as usize;
    let partial = par::map_range(exec, chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut best = 0u64;
        let mut keys: BTreeMap<CanonicalKey, u64> = BTreeMap::new();
        let mut load = vec![0u64; m];
        for code in start..end {
            load.iter_mut().for_each(|l| *l = 0);
            let mut rest = code;
            let mut score = 0;
            let mut feasible = true;
            for &size in instance.items() {
                let digit = (rest % radix) as usize;
                rest /= radix;
                if digit > 0 {
                    load[digit - 1] += u64::from(size);
                    score += u64::from(size);
                }
            }
            for (l, &w) in load.iter().zip(instance.bins()) {
                if *l > u64::from(w) {
                    feasible = false;
                }
            }
            if !feasible || score < best {
                continue;
            }
            if score > best {
                best = score;
                keys.clear();
            }
            let sol = decode(code, radix, n, m);
            keys.entry(canonical_key_unchecked(instance, &sol)).or_insert(code);
        }
        (best, keys)
    });
    let optimum = partial.iter().map(|(b, _)| *b).max().unwrap_or(0);
    let mut merged: BTreeMap<CanonicalKey, u64> = BTreeMap::new();
    for (best, keys) in partial {
        if best == optimum {
            for (k, code) in keys {
                merged.entry(k).or_insert(code);
            }
        }
    }
    Ok(EnumerationResult {
        optimal_score: optimum,
        solutions: merged
            .into_values()
            .map(|code| decode(code, radix, n, m))
            .collect(),
        truncated: false,
    })
}

fn decode(code: u64, radix: u64, n: usize, m: usize) -> Solution {
    let mut sol = Solution::empty(n, m);
    let mut rest = code;
    for item in 0..n {
        let digit = (rest % radix) as usize;
        rest /= radix;
        if digit > 0 {
            sol.set(item, digit - 1, true);
        }
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_form, validate_solution};

    fn inst(bins: &[u32], items: &[u32]) -> ProblemInstance {
        ProblemInstance::new("t", bins.to_vec(), items.to_vec()).unwrap()
    }

    #[test]
    fn greedy_fills_single_bin() {
        let p = inst(&[15], &[10, 5]);
        let g = greedy_lbf_lif(&p);
        assert_eq!(g.assignment().unwrap(), vec![Some(0), Some(0)]);
        assert_eq!(objective_score(&p, &g).unwrap(), 15);
    }

    #[test]
    fn greedy_leaves_small_item_when_bins_full() {
        // bin 0 takes the first 10, bin 1 the second 10, the 5 fits nowhere
        let p = inst(&[10, 10], &[10, 10, 5]);
        let g = greedy_lbf_lif(&p);
        assert_eq!(g.assignment().unwrap(), vec![Some(0), Some(1), None]);
        assert_eq!(objective_score(&p, &g).unwrap(), 20);
    }

    #[test]
    fn greedy_ties_preserve_input_order() {
        let p = inst(&[10, 10], &[10, 10]);
        assert_eq!(
            greedy_lbf_lif(&p).assignment().unwrap(),
            vec![Some(0), Some(1)]
        );
    }

    #[test]
    fn toy_optimum() {
        let p = inst(&[15, 15], &[5, 10, 15]);
        let r = enumerate_optima(&p, 100).unwrap();
        assert_eq!(r.optimal_score, 30);
        assert!(!r.truncated);
        // {15} + {5,10}, the only packing up to equal-bin swaps
        assert_eq!(r.solutions.len(), 1);
    }

    #[test]
    fn unique_optimum_is_not_truncated() {
        let p = inst(&[30], &[10, 20]);
        let r = enumerate_optima(&p, 100).unwrap();
        assert_eq!(r.solutions.len(), 1);
        assert!(!r.truncated);
    }

    #[test]
    fn cap_truncates() {
        // 10 into either bin of unequal capacity: two optima
        let p = inst(&[10, 20], &[10, 10, 10]);
        let full = enumerate_optima(&p, 100).unwrap();
        assert_eq!(full.optimal_score, 30);
        assert!(!full.solutions.is_empty());
        // {20}{30} and {10,10}{30}
        let p = inst(&[20, 30], &[10, 10, 20, 30]);
        let full = enumerate_optima(&p, 100).unwrap();
        assert_eq!(full.optimal_score, 50);
        assert_eq!(full.solutions.len(), 2, "{full:?}");
        let one = enumerate_optima(&p, 1).unwrap();
        assert_eq!(one.solutions.len(), 1);
        assert!(one.truncated);
        let exact = enumerate_optima(&p, full.solutions.len()).unwrap();
        assert!(!exact.truncated);
    }

    #[test]
    fn zero_cap_rejected() {
        let p = inst(&[10], &[5]);
        assert!(enumerate_optima(&p, 0).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let p = inst(&[50, 40, 30, 20], &[5, 10, 15, 20, 25, 30, 35, 40, 45]);
        let r = enumerate_optima_with(
            &p,
            SolverOptions {
                cap: 100,
                node_budget: 10,
            },
        );
        assert_eq!(r, Err(Error::BudgetExhausted { budget: 10 }));
    }

    #[test]
    fn brute_force_trivia() {
        let p = inst(&[10], &[7]);
        let r = brute_force_optima(&p).unwrap();
        assert_eq!(r.optimal_score, 7);

        let p = inst(&[10], &[11]);
        let r = brute_force_optima(&p).unwrap();
        assert_eq!(r.optimal_score, 0);
        assert_eq!(r.solutions.len(), 1);
        assert_eq!(r.solutions[0], Solution::empty(1, 1));
    }

    #[test]
    fn brute_force_bound() {
        let p = inst(&[10, 10, 10], &[1; 12]);
        assert!(matches!(
            brute_force_optima(&p),
            Err(Error::BruteForceBound { .. })
        ));
    }

    #[test]
    fn outputs_are_feasible_optimal_and_distinct() {
        let p = inst(&[40, 30, 30, 20], &[5, 10, 10, 15, 20, 25, 30]);
        let r = enumerate_optima(&p, 100).unwrap();
        let mut keys = Vec::new();
        for s in &r.solutions {
            assert!(validate_solution(&p, s).unwrap().is_ok());
            assert_eq!(objective_score(&p, s).unwrap(), r.optimal_score);
            keys.push(canonical_form(&p, s).unwrap());
        }
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted, "sorted and unique");
    }

    #[test]
    fn heuristic_optimality_values() {
        assert_eq!(heuristic_optimality(&inst(&[10, 10], &[10, 10, 5])).unwrap(), 1.0);
        // greedy: bin 12 takes 9 (then nothing else fits: 8 > 3, 4 > 3),
        // bin 9 takes 8; score 17. Optimum 12 = 8 + 4 and 9 = 9: score 21.
        let trap = inst(&[12, 9], &[9, 8, 4]);
        let oracle = brute_force_optima(&trap).unwrap();
        assert_eq!(oracle.optimal_score, 21);
        let greedy = objective_score(&trap, &greedy_lbf_lif(&trap)).unwrap();
        assert_eq!(greedy, 17);
        let ho = heuristic_optimality(&trap).unwrap();
        assert!((ho - 17.0 / 21.0).abs() < 1e-15);
        assert_eq!(heuristic_optimality(&inst(&[5], &[10])).unwrap(), 1.0);
    }
}
