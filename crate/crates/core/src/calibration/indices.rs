//! Corpus indices and their first principal component, used as an external
//! target for the composition model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, Solution};
use crate::stats::{mean, sample_sd, zscore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundIndices {
    /// Spread of item counts across bins.
    pub av: f64,
    /// Mean headroom above the largest item of each nonempty bin.
    pub ad: f64,
    /// Reciprocal mean fill ratio of nonempty bins.
    pub ar: f64,
}

/// AV uses the sample standard deviation (0 for a single bin); the AR ratio
/// averages over all `n` items, unassigned ones counting as 0.
pub fn compound_indices(instance: &ProblemInstance, solution: &Solution) -> Result<CompoundIndices> {
    if solution.num_items() != instance.num_items() || solution.num_bins() != instance.num_bins() {
        return Err(Error::DimensionMismatch("solution does not fit instance".into()));
    }
    let n = instance.num_items() as f64;
    let mut counts = Vec::with_capacity(instance.num_bins());
    let mut headroom = Vec::new();
    let mut ratios = Vec::new();
    for (bin, &w) in instance.bins().iter().enumerate() {
        let sizes: Vec<u32> = solution.items_in(bin).map(|j| instance.items()[j]).collect();
        counts.push(sizes.len() as f64);
        if let Some(&largest) = sizes.iter().max() {
            let w = f64::from(w);
            headroom.push(w - f64::from(largest));
            let load: f64 = sizes.iter().map(|&z| f64::from(z)).sum();
            ratios.push(load / n / w);
        }
    }
    if headroom.is_empty() {
        return Err(Error::InvalidParameter(
            "all bins empty; AD and AR are undefined".into(),
        ));
    }
    let av = if counts.len() < 2 { 0.0 } else { sample_sd(&counts) };
    Ok(CompoundIndices {
        av,
        ad: mean(&headroom),
        ar: 1.0 / mean(&ratios),
    })
}

/// Z-scores each of the three index columns.
pub fn standardize_indices(rows: &[CompoundIndices]) -> Result<Vec<[f64; 3]>> {
    let col = |f: fn(&CompoundIndices) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let av = zscore(&col(|r| r.av), "AV")?;
    let ad = zscore(&col(|r| r.ad), "AD")?;
    let ar = zscore(&col(|r| r.ar), "AR")?;
    Ok((0..rows.len()).map(|i| [av[i], ad[i], ar[i]]).collect())
}

pub const POWER_ITERATION_TOL: f64 = 1e-10;
const POWER_ITERATION_MAX: usize = 100_000;

/// Sample covariance (divisor n - 1) of three columns.
pub fn covariance3(rows: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let n = rows.len() as f64;
    let mut mu = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            mu[k] += r[k] / n;
        }
    }
    let mut c = [[0.0; 3]; 3];
    for r in rows {
        for a in 0..3 {
            for b in 0..3 {
                c[a][b] += (r[a] - mu[a]) * (r[b] - mu[b]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    c
}

/// Leading eigenvector by power iteration, oriented so that its
/// largest-magnitude entry is positive.
pub fn leading_eigenvector(c: &[[f64; 3]; 3]) -> Result<[f64; 3]> {
    let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = *c
        .iter()
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .expect("three columns");
    let n0 = norm(&v);
    if !(n0 > 0.0) {
        return Err(Error::InvalidParameter("covariance has rank 0".into()));
    }
    v.iter_mut().for_each(|x| *x /= n0);
    for _ in 0..POWER_ITERATION_MAX {
        let mut next = [0.0; 3];
        for a in 0..3 {
            next[a] = (0..3).map(|b| c[a][b] * v[b]).sum();
        }
        let len = norm(&next);
        if !(len > 0.0) {
            return Err(Error::InvalidParameter("covariance has rank 0".into()));
        }
        next.iter_mut().for_each(|x| *x /= len);
        let delta = (0..3).map(|k| (next[k] - v[k]).abs()).fold(0.0, f64::max);
        v = next;
        if delta < POWER_ITERATION_TOL {
            break;
        }
    }
    let lead = (0..3)
        .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .expect("three entries");
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

/// Scores of each row on the first principal component.
pub fn pca_first_component(rows: &[[f64; 3]]) -> Result<Vec<f64>> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} rows, need at least 3",
            rows.len()
        )));
    }
    let v = leading_eigenvector(&covariance3(rows))?;
    Ok(rows.iter().map(|r| r[0] * v[0] + r[1] * v[1] + r[2] * v[2]).collect())
}

/// Indices, z-scoring and PCA in one step.
pub fn compound_scores(corpus: &[(ProblemInstance, Solution)]) -> Result<Vec<f64>> {
    let indices = corpus
        .iter()
        .map(|(p, s)| compound_indices(p, s))
        .collect::<Result<Vec<_>>>()?;
    pca_first_component(&standardize_indices(&indices)?)
}
