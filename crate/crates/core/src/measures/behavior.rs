//! Gaze bias, log reaction time, problem-solving efficiency and preference
//! coherence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::Side;

use super::log::{ParticipantRecord, SOLVE_TRIALS};

/// `(R - L) / (R + L)` over on-stimulus gaze samples; `None` with no gaze.
pub fn gaze_bias(right: u32, left: u32) -> Option<f64> {
    let total = f64::from(right) + f64::from(left);
    (total > 0.0).then(|| (f64::from(right) - f64::from(left)) / total)
}

pub fn log_rt(rt_ms: f64) -> Result<f64> {
    if rt_ms > 0.0 && rt_ms.is_finite() {
        Ok(rt_ms.ln())
    } else {
        Err(Error::Malformed(format!("reaction time {rt_ms} must be positive")))
    }
}

/// Weighted problem-solving efficiency for a cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseReport {
    /// Per-trial weight; sums to one.
    pub weights: Vec<f64>,
    /// Cohort mean efficiency per trial.
    pub mean_efficiency: Vec<f64>,
    pub scores: BTreeMap<String, f64>,
}

/// Score per optimum per second, one value per problem-solving trial.
pub fn efficiencies(p: &ParticipantRecord) -> Result<Vec<f64>> {
    p.validate()?;
    Ok((0..SOLVE_TRIALS)
        .map(|i| p.solve_scores[i] / p.solve_optima[i] / p.solve_rt_s[i])
        .collect())
}

/// Trials that are harder on average get more weight.
pub fn pse_weights(mean_efficiency: &[f64]) -> Result<Vec<f64>> {
    let n = mean_efficiency.len();
    if n < 2 {
        return Err(Error::InsufficientData("weights need at least two trials".into()));
    }
    let total: f64 = mean_efficiency.iter().sum();
    if !(total.is_finite() && total != 0.0) {
        return Err(Error::InsufficientData(format!(
            "summed mean efficiency {total} leaves the weights undefined"
        )));
    }
    let scale = 1.0 / (n - 1) as f64;
    Ok(mean_efficiency.iter().map(|e| scale * (1.0 - e / total)).collect())
}

pub fn pse_score(efficiency: &[f64], weights: &[f64]) -> Result<f64> {
    if efficiency.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} efficiencies for {} weights",
            efficiency.len(),
            weights.len()
        )));
    }
    Ok(efficiency.iter().zip(weights).map(|(e, w)| e * w).sum())
}

pub fn pse(cohort: &[ParticipantRecord]) -> Result<PseReport> {
    if cohort.is_empty() {
        return Err(Error::InsufficientData("no participants".into()));
    }
    let eff = cohort.iter().map(efficiencies).collect::<Result<Vec<_>>>()?;
    let m = cohort.len() as f64;
    let mean_efficiency: Vec<f64> = (0..SOLVE_TRIALS)
        .map(|i| eff.iter().map(|e| e[i]).sum::<f64>() / m)
        .collect();
    let weights = pse_weights(&mean_efficiency)?;
    let mut scores = BTreeMap::new();
    for (p, e) in cohort.iter().zip(&eff) {
        if scores.insert(p.participant_id.clone(), pse_score(e, &weights)?).is_some() {
            return Err(Error::Malformed(format!(
                "participant {} listed twice",
                p.participant_id
            )));
        }
    }
    Ok(PseReport {
        weights,
        mean_efficiency,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coherence {
    Coherent,
    Incoherent,
}

/// Classifies the three judgements over solutions A, B, C shown as the
/// pairs (A, B), (B, C) and (A, C). The side picked is the one judged
/// easier. A cycle makes the set incoherent.
pub fn coherence_class(ab: Side, bc: Side, ac: Side) -> Coherence {
    let a_over_b = ab == Side::Left;
    let b_over_c = bc == Side::Left;
    let a_over_c = ac == Side::Left;
    if a_over_b == b_over_c && a_over_c != a_over_b {
        Coherence::Incoherent
    } else {
        Coherence::Coherent
    }
}

/// Edge form for arbitrary labels: each `(winner, loser)` pair is one
/// judgement. Three distinct labels and three distinct pairs are required.
pub fn coherence_of_judgements<T: Ord + Clone>(judgements: &[(T, T)]) -> Result<Coherence> {
    let mut labels: Vec<T> = judgements
        .iter()
        .flat_map(|(w, l)| [w.clone(), l.clone()])
        .collect();
    labels.sort();
    labels.dedup();
    let mut pairs: Vec<(T, T)> = judgements
        .iter()
        .map(|(w, l)| if w <= l { (w.clone(), l.clone()) } else { (l.clone(), w.clone()) })
        .collect();
    pairs.sort();
    pairs.dedup();
    if judgements.len() != 3 || labels.len() != 3 || pairs.len() != 3 {
        return Err(Error::Malformed(
            "coherence needs one judgement for each pair of three solutions".into(),
        ));
    }
    let wins = |x: &T| judgements.iter().filter(|(w, _)| w == x).count();
    // a transitive tournament on three nodes has win counts 2, 1, 0
    let mut counts: Vec<usize> = labels.iter().map(wins).collect();
    counts.sort_unstable();
    Ok(if counts == [0, 1, 2] {
        Coherence::Coherent
    } else {
        Coherence::Incoherent
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaze_bias_cases() {
        assert_eq!(gaze_bias(0, 0), None);
        assert_eq!(gaze_bias(3, 1), Some(0.5));
        assert_eq!(gaze_bias(0, 7), Some(-1.0));
        for (r, l) in [(2, 9), (10, 0), (5, 5)] {
            assert_eq!(gaze_bias(r, l).unwrap(), -gaze_bias(l, r).unwrap());
        }
    }

    #[test]
    fn log_rt_requires_positive_time() {
        assert!((log_rt(1000.0).unwrap() - 1000f64.ln()).abs() < 1e-15);
        assert!(log_rt(0.0).is_err());
        assert!(log_rt(-5.0).is_err());
        assert!(log_rt(f64::NAN).is_err());
    }

    fn person(id: &str, scores: [f64; 7], rts: [f64; 7]) -> ParticipantRecord {
        ParticipantRecord {
            participant_id: id.into(),
            psi_total: 100,
            solve_scores: scores.to_vec(),
            solve_optima: vec![100.0; 7],
            solve_rt_s: rts.to_vec(),
        }
    }

    #[test]
    fn weights_sum_to_one_and_favour_hard_trials() {
        let cohort = vec![
            person("a", [100.0, 90.0, 80.0, 60.0, 50.0, 40.0, 30.0], [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]),
            person("b", [100.0, 100.0, 70.0, 70.0, 40.0, 40.0, 10.0], [15.0, 15.0, 35.0, 35.0, 55.0, 55.0, 90.0]),
        ];
        let r = pse(&cohort).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // easiest trial on average gets the smallest weight
        let easiest = r
            .mean_efficiency
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let lightest = r
            .weights
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(easiest, lightest);
        // hand-computed first weight
        let e: Vec<f64> = (0..7)
            .map(|i| {
                (cohort[0].solve_scores[i] / 100.0 / cohort[0].solve_rt_s[i]
                    + cohort[1].solve_scores[i] / 100.0 / cohort[1].solve_rt_s[i])
                    / 2.0
            })
            .collect();
        let w0 = (1.0 - e[0] / e.iter().sum::<f64>()) / 6.0;
        assert!((r.weights[0] - w0).abs() < 1e-15);
    }

    #[test]
    fn uniform_cohort_gives_equal_weights_and_plain_mean() {
        let p = person("u", [50.0; 7], [10.0; 7]);
        let r = pse(&[p.clone(), person("v", [50.0; 7], [10.0; 7])]).unwrap();
        for w in &r.weights {
            assert!((w - 1.0 / 7.0).abs() < 1e-15);
        }
        assert!((r.scores["u"] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn doubling_time_halves_the_score_at_fixed_weights() {
        let p = person("a", [100.0, 90.0, 80.0, 60.0, 50.0, 40.0, 30.0], [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]);
        let slow = ParticipantRecord {
            solve_rt_s: p.solve_rt_s.iter().map(|t| t * 2.0).collect(),
            ..p.clone()
        };
        let w = pse_weights(&[0.1, 0.05, 0.02, 0.01, 0.008, 0.005, 0.001]).unwrap();
        let fast = pse_score(&efficiencies(&p).unwrap(), &w).unwrap();
        let halved = pse_score(&efficiencies(&slow).unwrap(), &w).unwrap();
        assert!((halved - fast / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pse_rejects_bad_input() {
        let mut p = person("a", [1.0; 7], [1.0; 7]);
        p.solve_scores.pop();
        assert!(pse(&[p]).is_err());
        let mut q = person("a", [1.0; 7], [1.0; 7]);
        q.solve_optima[3] = 0.0;
        assert!(pse(&[q]).is_err());
        let mut r = person("a", [1.0; 7], [1.0; 7]);
        r.solve_rt_s[0] = 0.0;
        assert!(pse(&[r]).is_err());
        assert!(pse(&[]).is_err());
        // all scores zero: weights undefined
        assert!(pse(&[person("z", [0.0; 7], [1.0; 7])]).is_err());
    }

    #[test]
    fn exactly_two_of_eight_patterns_are_cyclic() {
        let sides = [Side::Left, Side::Right];
        let mut cyclic = Vec::new();
        for ab in sides {
            for bc in sides {
                for ac in sides {
                    let c = coherence_class(ab, bc, ac);
                    // independent check through the edge form
                    let edge = |s: Side, x: char, y: char| if s == Side::Left { (x, y) } else { (y, x) };
                    let judged = [edge(ab, 'a', 'b'), edge(bc, 'b', 'c'), edge(ac, 'a', 'c')];
                    assert_eq!(coherence_of_judgements(&judged).unwrap(), c);
                    if c == Coherence::Incoherent {
                        cyclic.push((ab, bc, ac));
                    }
                }
            }
        }
        assert_eq!(
            cyclic,
            vec![(Side::Left, Side::Left, Side::Right), (Side::Right, Side::Right, Side::Left)]
        );
    }

    #[test]
    fn edge_form_rejects_incomplete_sets() {
        assert!(coherence_of_judgements(&[("a", "b"), ("b", "c")]).is_err());
        assert!(coherence_of_judgements(&[("a", "b"), ("b", "a"), ("a", "c")]).is_err());
    }
}
