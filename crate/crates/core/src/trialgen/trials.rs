//! Problem-solving trial selection and per-participant evaluation trials.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{cc, hc, CcParams};
use crate::model::{DisplayedSolution, ProblemInstance, Solution};
use crate::par::{map_slice, Execution};
use crate::seed::{self, STREAM_PARTICIPANT, STREAM_SHARED};
use crate::stats::{mean, median, quantile};

use super::pool::Pool;

pub const EVALUATION_TRIALS: usize = 25;
pub const PROBLEM_SOLVING_TRIALS: usize = 7;
/// 1-based positions of the catch trials.
pub const CATCH_SLOTS: [usize; 2] = [5, 18];
/// 1-based positions of the coherence trials.
pub const COHERENCE_SLOTS: [usize; 3] = [9, 14, 22];
pub const EXTREME_QUANTILE: f64 = 0.9;
pub const COHERENCE_RANGE_QUANTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Low,
    Medium,
    High,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::Low, Stratum::Medium, Stratum::High];

    pub fn name(self) -> &'static str {
        match self {
            Stratum::Low => "low",
            Stratum::Medium => "medium",
            Stratum::High => "high",
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Malformed(format!("unknown stratum {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    ExtremizedHc,
    ExtremizedCc,
    Random,
    DuplicatedRandom,
    RandomSame,
    Catch,
    Coherence,
}

impl TrialKind {
    pub const ALL: [TrialKind; 7] = [
        TrialKind::ExtremizedHc,
        TrialKind::ExtremizedCc,
        TrialKind::Random,
        TrialKind::DuplicatedRandom,
        TrialKind::RandomSame,
        TrialKind::Catch,
        TrialKind::Coherence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrialKind::ExtremizedHc => "extremized_hc",
            TrialKind::ExtremizedCc => "extremized_cc",
            TrialKind::Random => "random",
            TrialKind::DuplicatedRandom => "duplicated_random",
            TrialKind::RandomSame => "random_same",
            TrialKind::Catch => "catch",
            TrialKind::Coherence => "coherence",
        }
    }

    /// Trials of this kind per participant.
    pub fn count(self) -> usize {
        match self {
            TrialKind::ExtremizedHc | TrialKind::ExtremizedCc => 6,
            TrialKind::Random | TrialKind::DuplicatedRandom | TrialKind::Coherence => 3,
            TrialKind::RandomSame | TrialKind::Catch => 2,
        }
    }
}

impl fmt::Display for TrialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Malformed(format!("unknown trial kind {s:?}")))
    }
}

/// Two displayed optima of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPair {
    pub kind: TrialKind,
    pub stratum: Stratum,
    pub problem: ProblemInstance,
    pub left: DisplayedSolution,
    pub right: DisplayedSolution,
}

/// Picks the problems at `k` equally spaced difficulty quantiles
/// (nearest rank `round(q (N - 1))` on the list sorted by difficulty, ties
/// by id), each with its first enumerated optimum.
pub fn select_problem_solving_trials(pool: &Pool, k: usize) -> Result<Vec<(ProblemInstance, Solution)>> {
    let n = pool.entries.len();
    if n < k || k < 2 {
        return Err(Error::InsufficientData(format!(
            "pool of {n} problems, need at least {k} (and k >= 2)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&pool.entries[a].instance, &pool.entries[b].instance);
        pa.difficulty()
            .total_cmp(&pb.difficulty())
            .then_with(|| pa.id().cmp(pb.id()))
    });
    Ok((0..k)
        .map(|i| {
            let q = i as f64 / (k - 1) as f64;
            let e = &pool.entries[order[(q * (n - 1) as f64).round() as usize]];
            (e.instance.clone(), e.result.solutions[0].clone())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairRef {
    pub problem: u32,
    pub a: u16,
    pub b: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeMetric {
    Hc,
    Cc,
}

impl ExtremeMetric {
    fn index(self) -> usize {
        match self {
            ExtremeMetric::Hc => 0,
            ExtremeMetric::Cc => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredProblem {
    pub entry: usize,
    pub pd: f64,
    pub stratum: Stratum,
    pub hc: Vec<u32>,
    pub cc: Vec<f64>,
}

impl ScoredProblem {
    fn abs_delta(&self, metric: ExtremeMetric, a: usize, b: usize) -> f64 {
        match metric {
            ExtremeMetric::Hc => (f64::from(self.hc[a]) - f64::from(self.hc[b])).abs(),
            ExtremeMetric::Cc => (self.cc[a] - self.cc[b]).abs(),
        }
    }
}

/// Pool with per-solution HC and CC, difficulty strata and, for each
/// stratum and metric, the top-decile candidate pairs.
pub struct ScoredPool<'a> {
    pub pool: &'a Pool,
    pub cc_params: CcParams,
    pub problems: Vec<ScoredProblem>,
    /// Tertile cut points of difficulty.
    pub cuts: (f64, f64),
    /// `[metric][stratum]` percentile threshold of `|delta|` over candidate
    /// pairs.
    pub thresholds: [[f64; 3]; 2],
    extremes: [[Vec<PairRef>; 3]; 2],
}

impl<'a> ScoredPool<'a> {
    pub fn new(pool: &'a Pool, cc_params: &CcParams, exec: Execution) -> Result<Self> {
        cc_params.validate()?;
        if pool.entries.is_empty() {
            return Err(Error::InsufficientData("empty pool".into()));
        }
        let pds: Vec<f64> = pool.entries.iter().map(|e| e.instance.difficulty()).collect();
        let cuts = (quantile(&pds, 1.0 / 3.0), quantile(&pds, 2.0 / 3.0));
        let scored = map_slice(exec, &pool.entries, |e| -> Result<(Vec<u32>, Vec<f64>)> {
            let mut h = Vec::with_capacity(e.result.solutions.len());
            let mut c = Vec::with_capacity(e.result.solutions.len());
            for s in &e.result.solutions {
                h.push(hc(&e.instance, s)?);
                c.push(cc(&e.instance, s, cc_params)?);
            }
            Ok((h, c))
        });
        let problems = scored
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let (hc, cc) = r?;
                let pd = pds[i];
                let stratum = if pd <= cuts.0 {
                    Stratum::Low
                } else if pd <= cuts.1 {
                    Stratum::Medium
                } else {
                    Stratum::High
                };
                Ok(ScoredProblem {
                    entry: i,
                    pd,
                    stratum,
                    hc,
                    cc,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut thresholds = [[f64::NAN; 3]; 2];
        let mut extremes: [[Vec<PairRef>; 3]; 2] = Default::default();
        for metric in [ExtremeMetric::Hc, ExtremeMetric::Cc] {
            for (si, stratum) in Stratum::ALL.into_iter().enumerate() {
                let in_stratum = || problems.iter().filter(move |p| p.stratum == stratum);
                let mut values = Vec::new();
                for p in in_stratum() {
                    for a in 0..p.hc.len() {
                        for b in a + 1..p.hc.len() {
                            values.push(p.abs_delta(metric, a, b));
                        }
                    }
                }
                if values.is_empty() {
                    continue;
                }
                let t = quantile(&values, EXTREME_QUANTILE);
                thresholds[metric.index()][si] = t;
                let list = &mut extremes[metric.index()][si];
                for p in in_stratum() {
                    for a in 0..p.hc.len() {
                        for b in a + 1..p.hc.len() {
                            if p.abs_delta(metric, a, b) >= t {
                                list.push(PairRef {
                                    problem: p.entry as u32,
                                    a: a as u16,
                                    b: b as u16,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            pool,
            cc_params: *cc_params,
            problems,
            cuts,
            thresholds,
            extremes,
        })
    }

    pub fn extreme_pairs(&self, metric: ExtremeMetric, stratum: Stratum) -> &[PairRef] {
        &self.extremes[metric.index()][stratum as usize]
    }

    fn in_stratum(&self, stratum: Stratum) -> Vec<usize> {
        self.problems
            .iter()
            .filter(|p| p.stratum == stratum)
            .map(|p| p.entry)
            .collect()
    }

    fn pair(&self, kind: TrialKind, r: PairRef) -> TrialPair {
        let e = &self.pool.entries[r.problem as usize];
        let sol = |k: u16| DisplayedSolution::identity(e.result.solutions[k as usize].clone());
        TrialPair {
            kind,
            stratum: self.problems[r.problem as usize].stratum,
            problem: e.instance.clone(),
            left: sol(r.a),
            right: sol(r.b),
        }
    }
}

/// Trials shown to every participant at fixed positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedTrials {
    pub catch: Vec<TrialPair>,
    pub coherence: Vec<TrialPair>,
}

pub fn make_shared_trials(scored: &ScoredPool<'_>, seed: u64) -> Result<SharedTrials> {
    Ok(SharedTrials {
        catch: make_catch_trials(scored, seed)?,
        coherence: make_coherence_trials(scored)?,
    })
}

/// Two distinct low-difficulty problems, each shown twice with the same
/// optimum and the same layout.
pub fn make_catch_trials(scored: &ScoredPool<'_>, seed: u64) -> Result<Vec<TrialPair>> {
    let low = scored.in_stratum(Stratum::Low);
    if low.len() < 2 {
        return Err(Error::Starvation(format!(
            "catch trials need 2 low-difficulty problems, found {}",
            low.len()
        )));
    }
    let mut rng = seed::rng(seed, STREAM_SHARED, 0);
    Ok(index::sample(&mut rng, low.len(), 2)
        .into_iter()
        .map(|i| {
            let e = &scored.pool.entries[low[i]];
            let shown = DisplayedSolution::identity(e.result.solutions[0].clone());
            TrialPair {
                kind: TrialKind::Catch,
                stratum: Stratum::Low,
                problem: e.instance.clone(),
                left: shown.clone(),
                right: shown,
            }
        })
        .collect())
}

/// Summary of one coherence candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceCandidate {
    pub entry: usize,
    pub range: f64,
    pub asymmetry: f64,
}

/// Medium-difficulty problems with at least three optima, with the range
/// and `|median - mean|` of their CC values.
pub fn coherence_candidates(scored: &ScoredPool<'_>) -> Vec<CoherenceCandidate> {
    scored
        .problems
        .iter()
        .filter(|p| p.stratum == Stratum::Medium && p.cc.len() >= 3)
        .map(|p| {
            let lo = p.cc.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = p.cc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            CoherenceCandidate {
                entry: p.entry,
                range: hi - lo,
                asymmetry: (median(&p.cc) - mean(&p.cc)).abs(),
            }
        })
        .collect()
}

/// Among candidates whose CC range reaches the 95th percentile, the one
/// with the smallest asymmetry; its min-, median- and max-CC optima paired
/// as (min, median), (median, max), (min, max). For an even number of
/// optima the lower of the two middle solutions is the median.
pub fn make_coherence_trials(scored: &ScoredPool<'_>) -> Result<Vec<TrialPair>> {
    let candidates = coherence_candidates(scored);
    if candidates.is_empty() {
        return Err(Error::Starvation(
            "no medium-difficulty problem with at least 3 optima for coherence trials".into(),
        ));
    }
    let ranges: Vec<f64> = candidates.iter().map(|c| c.range).collect();
    let cut = quantile(&ranges, COHERENCE_RANGE_QUANTILE);
    let chosen = candidates
        .iter()
        .filter(|c| c.range >= cut)
        .min_by(|a, b| a.asymmetry.total_cmp(&b.asymmetry))
        .expect("the largest range always reaches its own percentile");
    let p = &scored.problems[chosen.entry];
    let mut order: Vec<usize> = (0..p.cc.len()).collect();
    order.sort_by(|&a, &b| p.cc[a].total_cmp(&p.cc[b]).then(a.cmp(&b)));
    let (lo, mid, hi) = (order[0], order[(order.len() - 1) / 2], order[order.len() - 1]);
    Ok([(lo, mid), (mid, hi), (lo, hi)]
        .into_iter()
        .map(|(a, b)| {
            scored.pair(
                TrialKind::Coherence,
                PairRef {
                    problem: p.entry as u32,
                    a: a as u16,
                    b: b as u16,
                },
            )
        })
        .collect())
}

/// A uniformly random permutation other than the identity.
fn non_identity_permutation(rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<usize>> {
    if len < 2 {
        return Err(Error::InvalidParameter(format!(
            "cannot reorder a sequence of length {len}"
        )));
    }
    let mut p: Vec<usize> = (0..len).collect();
    loop {
        p.shuffle(rng);
        if p.iter().enumerate().any(|(i, &v)| i != v) {
            return Ok(p);
        }
    }
}

/// Re-displays a solution with random non-identity bin and item orders.
pub fn manipulate(displayed: &DisplayedSolution, rng: &mut ChaCha8Rng) -> Result<DisplayedSolution> {
    let s = displayed.solution();
    let bins = non_identity_permutation(rng, s.num_bins())?;
    let items = non_identity_permutation(rng, s.num_items())?;
    DisplayedSolution::new(s.clone(), bins, items)
}

fn draw_pair(rng: &mut ChaCha8Rng, problem: usize, count: usize) -> PairRef {
    let ix = index::sample(rng, count, 2);
    PairRef {
        problem: problem as u32,
        a: ix.index(0) as u16,
        b: ix.index(1) as u16,
    }
}

/// Assembles one participant's 25 evaluation trials: 6 extremized-HC and
/// 6 extremized-CC (2 per stratum from the top decile), 3 random (one per
/// stratum, stratified by item count), their 3 re-displayed clones, 2
/// random-same, and the shared catch and coherence trials at fixed slots.
pub fn generate_evaluation_trials(
    scored: &ScoredPool<'_>,
    shared: &SharedTrials,
    participant_seed: u64,
) -> Result<Vec<TrialPair>> {
    if shared.catch.len() != CATCH_SLOTS.len() || shared.coherence.len() != COHERENCE_SLOTS.len() {
        return Err(Error::InvalidParameter("shared trials incomplete".into()));
    }
    let mut rng = seed::rng(participant_seed, STREAM_PARTICIPANT, 0);
    let mut used: BTreeSet<PairRef> = BTreeSet::new();
    let mut own = Vec::with_capacity(20);

    for (metric, kind, label) in [
        (ExtremeMetric::Hc, TrialKind::ExtremizedHc, "HC"),
        (ExtremeMetric::Cc, TrialKind::ExtremizedCc, "CC"),
    ] {
        for stratum in Stratum::ALL {
            let available: Vec<PairRef> = scored
                .extreme_pairs(metric, stratum)
                .iter()
                .filter(|r| !used.contains(r))
                .copied()
                .collect();
            if available.len() < 2 {
                return Err(Error::Starvation(format!(
                    "{stratum} stratum has {} unused top-decile |d{label}| pairs, need 2",
                    available.len()
                )));
            }
            for i in index::sample(&mut rng, available.len(), 2) {
                used.insert(available[i]);
                own.push(scored.pair(kind, available[i]));
            }
        }
    }

    let mut randoms = Vec::with_capacity(3);
    for stratum in Stratum::ALL {
        let problems = scored.in_stratum(stratum);
        let sizes: BTreeSet<usize> = problems
            .iter()
            .map(|&p| scored.pool.entries[p].instance.num_items())
            .collect();
        let sizes: Vec<usize> = sizes.into_iter().collect();
        let &size = sizes
            .choose(&mut rng)
            .ok_or_else(|| Error::Starvation(format!("{stratum} stratum has no problems")))?;
        let of_size: Vec<usize> = problems
            .into_iter()
            .filter(|&p| scored.pool.entries[p].instance.num_items() == size)
            .collect();
        let &p = of_size.choose(&mut rng).expect("size drawn from these problems");
        let r = draw_pair(&mut rng, p, scored.problems[p].hc.len());
        randoms.push(scored.pair(TrialKind::Random, r));
    }
    own.extend(randoms.iter().cloned());

    for (i, base) in randoms.iter().enumerate() {
        let mut clone = base.clone();
        clone.kind = TrialKind::DuplicatedRandom;
        if i != 1 {
            clone.left = manipulate(&clone.left, &mut rng)?;
        }
        if i != 0 {
            clone.right = manipulate(&clone.right, &mut rng)?;
        }
        own.push(clone);
    }

    let sizes: BTreeSet<usize> = scored
        .pool
        .entries
        .iter()
        .map(|e| e.instance.num_items())
        .collect();
    let sizes: Vec<usize> = sizes.into_iter().collect();
    if sizes.len() < 2 {
        return Err(Error::Starvation(
            "random-same trials need problems of two different sizes".into(),
        ));
    }
    for (i, s) in index::sample(&mut rng, sizes.len(), 2).into_iter().enumerate() {
        let of_size: Vec<usize> = (0..scored.pool.entries.len())
            .filter(|&p| scored.pool.entries[p].instance.num_items() == sizes[s])
            .collect();
        let &p = of_size.choose(&mut rng).expect("size taken from the pool");
        let k = *(0..scored.problems[p].hc.len())
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .expect("at least two optima");
        let mut t = scored.pair(
            TrialKind::RandomSame,
            PairRef {
                problem: p as u32,
                a: k as u16,
                b: k as u16,
            },
        );
        if i == 0 {
            t.right = manipulate(&t.right, &mut rng)?;
        } else {
            t.left = manipulate(&t.left, &mut rng)?;
        }
        own.push(t);
    }

    own.shuffle(&mut rng);
    let mut own = own.into_iter();
    let mut catch = shared.catch.iter();
    let mut coherence = shared.coherence.iter();
    Ok((1..=EVALUATION_TRIALS)
        .map(|slot| {
            if CATCH_SLOTS.contains(&slot) {
                catch.next().expect("two catch trials").clone()
            } else if COHERENCE_SLOTS.contains(&slot) {
                coherence.next().expect("three coherence trials").clone()
            } else {
                own.next().expect("twenty participant trials")
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical_form;
    use crate::solver::EnumerationResult;
    use crate::trialgen::pool::{generate_pool, GenerationConfig, PoolEntry, YieldReport};

    fn test_pool() -> Pool {
        generate_pool(
            &GenerationConfig {
                iterations: 400,
                seed: 21,
                ..GenerationConfig::default()
            },
            Execution::default(),
        )
        .unwrap()
    }

    fn hand_pool(pds: &[(u32, &str)]) -> Pool {
        // one bin of 100 and items summing to the given load
        let entries = pds
            .iter()
            .map(|&(load, id)| {
                let instance = ProblemInstance::new(id, vec![100], vec![load]).unwrap();
                let s = Solution::from_assignment(&[Some(0)], 1).unwrap();
                PoolEntry {
                    instance,
                    result: EnumerationResult {
                        optimal_score: u64::from(load),
                        solutions: vec![s],
                        truncated: false,
                    },
                }
            })
            .collect();
        Pool {
            config: GenerationConfig::default(),
            entries,
            report: YieldReport {
                iterations: 0,
                accepted: 0,
                rejected: Default::default(),
                truncated: 0,
            },
        }
    }

    #[test]
    fn problem_solving_selection_on_seven_distinct() {
        let pool = hand_pool(&[(90, "a"), (80, "b"), (85, "c"), (95, "d"), (82, "e"), (99, "f"), (88, "g")]);
        let picked = select_problem_solving_trials(&pool, 7).unwrap();
        let ids: Vec<&str> = picked.iter().map(|(p, _)| p.id()).collect();
        assert_eq!(ids, ["b", "e", "c", "g", "a", "d", "f"]);
    }

    #[test]
    fn problem_solving_selection_with_ties_uses_nearest_rank() {
        // sorted: a80 b80 c85 d85 e85 f90 g90 h90 i95 j99 (ties by id)
        let pool = hand_pool(&[
            (90, "h"), (80, "b"), (85, "d"), (95, "i"), (85, "c"),
            (99, "j"), (90, "f"), (80, "a"), (85, "e"), (90, "g"),
        ]);
        let picked = select_problem_solving_trials(&pool, 7).unwrap();
        let ids: Vec<&str> = picked.iter().map(|(p, _)| p.id()).collect();
        // ranks round(i * 9 / 6) = 0, 2 (1.5 -> 2), 3, 5 (4.5 -> 5), 6, 8 (7.5 -> 8), 9
        assert_eq!(ids, ["a", "c", "d", "f", "g", "i", "j"]);
        assert!(select_problem_solving_trials(&hand_pool(&[(90, "a")]), 7).is_err());
    }

    #[test]
    fn twenty_five_trials_with_the_expected_inventory() {
        let pool = test_pool();
        let scored = ScoredPool::new(&pool, &CcParams::confirmatory(), Execution::default()).unwrap();
        let shared = make_shared_trials(&scored, 5).unwrap();
        let trials = generate_evaluation_trials(&scored, &shared, 77).unwrap();
        assert_eq!(trials.len(), 25);
        for kind in TrialKind::ALL {
            assert_eq!(trials.iter().filter(|t| t.kind == kind).count(), kind.count(), "{kind}");
        }
        for slot in CATCH_SLOTS {
            assert_eq!(trials[slot - 1].kind, TrialKind::Catch);
        }
        for slot in COHERENCE_SLOTS {
            assert_eq!(trials[slot - 1].kind, TrialKind::Coherence);
        }
        for t in &trials {
            let l = canonical_form(&t.problem, t.left.solution()).unwrap();
            let r = canonical_form(&t.problem, t.right.solution()).unwrap();
            match t.kind {
                TrialKind::Catch => assert_eq!(t.left, t.right),
                TrialKind::RandomSame => {
                    assert_eq!(t.left.solution(), t.right.solution());
                    assert_ne!(t.left, t.right);
                }
                _ => assert_ne!(l, r),
            }
        }
    }

    #[test]
    fn participants_differ_but_are_reproducible() {
        let pool = test_pool();
        let scored = ScoredPool::new(&pool, &CcParams::confirmatory(), Execution::default()).unwrap();
        let shared = make_shared_trials(&scored, 5).unwrap();
        let a = generate_evaluation_trials(&scored, &shared, 1).unwrap();
        let b = generate_evaluation_trials(&scored, &shared, 1).unwrap();
        let c = generate_evaluation_trials(&scored, &shared, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // shared trials identical across participants
        for slot in CATCH_SLOTS.iter().chain(&COHERENCE_SLOTS) {
            assert_eq!(a[slot - 1], c[slot - 1]);
        }
    }

    #[test]
    fn extremized_pairs_reach_the_decile() {
        let pool = test_pool();
        let scored = ScoredPool::new(&pool, &CcParams::confirmatory(), Execution::default()).unwrap();
        for metric in [ExtremeMetric::Hc, ExtremeMetric::Cc] {
            for stratum in Stratum::ALL {
                let t = scored.thresholds[metric.index()][stratum as usize];
                let pairs = scored.extreme_pairs(metric, stratum);
                assert!(!pairs.is_empty());
                for r in pairs {
                    let p = &scored.problems[r.problem as usize];
                    assert_eq!(p.stratum, stratum);
                    assert!(p.abs_delta(metric, r.a as usize, r.b as usize) >= t);
                }
            }
        }
    }

    #[test]
    fn coherence_uses_min_median_max() {
        let pool = test_pool();
        let scored = ScoredPool::new(&pool, &CcParams::confirmatory(), Execution::default()).unwrap();
        let co = make_coherence_trials(&scored).unwrap();
        let params = CcParams::confirmatory();
        let c = |d: &DisplayedSolution| cc(&co[0].problem, d.solution(), &params).unwrap();
        assert_eq!(co[0].left, co[2].left);
        assert_eq!(co[0].right, co[1].left);
        assert_eq!(co[1].right, co[2].right);
        assert!(c(&co[0].left) <= c(&co[0].right) && c(&co[1].left) <= c(&co[1].right));
        assert_eq!(co[0].stratum, Stratum::Medium);
    }

    #[test]
    fn manipulation_keeps_the_solution_and_moves_the_display() {
        let mut rng = seed::rng(1, STREAM_PARTICIPANT, 0);
        let s = Solution::from_assignment(&[Some(0), Some(1), None], 2).unwrap();
        let d = DisplayedSolution::identity(s.clone());
        for _ in 0..50 {
            let m = manipulate(&d, &mut rng).unwrap();
            assert_eq!(m.solution(), &s);
            assert!(!m.bin_order().iter().enumerate().all(|(i, &v)| i == v));
            assert!(!m.item_order().iter().enumerate().all(|(i, &v)| i == v));
        }
        let one = DisplayedSolution::identity(Solution::from_assignment(&[Some(0)], 1).unwrap());
        assert!(manipulate(&one, &mut rng).is_err());
    }
}
