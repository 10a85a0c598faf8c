//! Visual-order complexity of a display: how far the shown bin and item
//! sequences are from sorted, via tie-broken Kendall tau.

use crate::error::{Error, Result};
use crate::model::{DisplayedSolution, ProblemInstance};

pub const TIE_OFFSET: f64 = 1e-5;

/// Kendall tau-a: (concordant - discordant) / (k (k - 1) / 2).
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let k = x.len();
    let mut score = 0i64;
    for i in 0..k {
        for j in i + 1..k {
            let sx = (x[j] - x[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let sy = (y[j] - y[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            score += sx * sy;
        }
    }
    score as f64 / (k * (k - 1) / 2) as f64
}

/// `1 - max(|tau_asc|, |tau_desc|)` after adding ascending (`i eps`) and
/// descending (`(k - i + 1) eps`) tie-breaking offsets, 1-based `i`.
pub fn disorder(seq: &[f64]) -> Result<f64> {
    let k = seq.len();
    if k < 2 {
        return Err(Error::SequenceTooShort(k));
    }
    let reference: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let asc: Vec<f64> = seq
        .iter()
        .enumerate()
        .map(|(i, a)| a + (i + 1) as f64 * TIE_OFFSET)
        .collect();
    let desc: Vec<f64> = seq
        .iter()
        .enumerate()
        .map(|(i, a)| a + (k - i) as f64 * TIE_OFFSET)
        .collect();
    let t_asc = kendall_tau_a(&asc, &reference).abs();
    let t_desc = kendall_tau_a(&desc, &reference).abs();
    Ok(1.0 - t_asc.max(t_desc))
}

/// Count-weighted disorder of the displayed capacities and sizes.
pub fn vc(instance: &ProblemInstance, displayed: &DisplayedSolution) -> Result<f64> {
    let w: Vec<f64> = displayed
        .displayed_capacities(instance)
        .into_iter()
        .map(f64::from)
        .collect();
    let z: Vec<f64> = displayed
        .displayed_sizes(instance)
        .into_iter()
        .map(f64::from)
        .collect();
    let (m, n) = (w.len() as f64, z.len() as f64);
    Ok((m * disorder(&w)? + n * disorder(&z)?) / (m + n))
}
