//! Fixed-effects behavioral models: a four-category cumulative-logit model
//! of which side looks easier, and a linear model of log reaction time.
//!
//! Thresholds are symmetric around a central value:
//! `theta = central + (-1, 0, 1) * spacing`, and
//! `P(Y <= k) = logistic(theta_k - eta)` with `eta = sum beta * delta`.
//! Negative betas therefore shift mass to the left when the right side is
//! more complex.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{PairDifferences, PerMetric};
use crate::stats::logistic;

/// Ordered response categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    DefinitelyLeft,
    SlightlyLeft,
    SlightlyRight,
    DefinitelyRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Choice {
    pub const ALL: [Choice; 4] = [
        Choice::DefinitelyLeft,
        Choice::SlightlyLeft,
        Choice::SlightlyRight,
        Choice::DefinitelyRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Option<Self> {
        Self::ALL.get(k).copied()
    }

    pub fn side(self) -> Side {
        match self {
            Choice::DefinitelyLeft | Choice::SlightlyLeft => Side::Left,
            _ => Side::Right,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Choice::DefinitelyLeft => "definitely_left",
            Choice::SlightlyLeft => "slightly_left",
            Choice::SlightlyRight => "slightly_right",
            Choice::DefinitelyRight => "definitely_right",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Malformed(format!("unknown choice {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceModelParams {
    pub central: f64,
    pub spacing: f64,
    pub betas: PerMetric,
}

impl ChoiceModelParams {
    pub fn confirmatory() -> Self {
        Self {
            central: 0.136,
            spacing: 1.898,
            betas: PerMetric::new([-0.314, -0.234, -0.371, -0.031]),
        }
    }

    pub fn exploratory() -> Self {
        Self {
            central: 0.123,
            spacing: 1.681,
            betas: PerMetric::new([-0.401, -0.151, -0.530, -0.216]),
        }
    }

    /// Accepts `confirmatory`, `exploratory`, or the `_choice` suffixed names.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "confirmatory" | "confirmatory_choice" => Some(Self::confirmatory()),
            "exploratory" | "exploratory_choice" => Some(Self::exploratory()),
            _ => None,
        }
    }

    pub fn thresholds(&self) -> [f64; 3] {
        [
            self.central - self.spacing,
            self.central,
            self.central + self.spacing,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold spacing {} must be positive",
                self.spacing
            )));
        }
        Ok(())
    }
}

/// Category probabilities for linear predictor `eta`.
pub fn category_probs(thresholds: [f64; 3], eta: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = interval_prob(thresholds, k, eta);
    }
    out
}

/// `P(Y = k)`, evaluated on whichever tail avoids cancellation.
fn interval_prob(thresholds: [f64; 3], k: usize, eta: f64) -> f64 {
    let upper = (k < 3).then(|| thresholds[k] - eta);
    let lower = (k > 0).then(|| thresholds[k - 1] - eta);
    match (lower, upper) {
        (None, Some(u)) => logistic(u),
        (Some(l), None) => logistic(-l),
        (Some(l), Some(u)) => {
            if l > 0.0 {
                logistic(-l) - logistic(-u)
            } else {
                logistic(u) - logistic(l)
            }
        }
        (None, None) => unreachable!(),
    }
}

/// Probabilities of (definitely left, slightly left, slightly right,
/// definitely right).
pub fn predict_choice_probs(params: &ChoiceModelParams, d: &PairDifferences) -> [f64; 4] {
    category_probs(params.thresholds(), params.betas.dot(d.signed))
}

pub const PROB_FLOOR: f64 = 1e-12;

/// Mean negative log probability of the observed categories, with each
/// probability floored at 1e-12.
pub fn ordinal_log_loss(
    params: &ChoiceModelParams,
    trials: &[(PairDifferences, Choice)],
) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::InsufficientData("no trials".into()));
    }
    let total: f64 = trials
        .iter()
        .map(|(d, y)| -predict_choice_probs(params, d)[y.index()].max(PROB_FLOOR).ln())
        .sum();
    Ok(total / trials.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtModelParams {
    /// Log milliseconds.
    pub intercept: f64,
    /// Coefficients on absolute standardized differences.
    pub coefs: PerMetric,
    /// Coefficient on standardized problem-solving efficiency, if modeled.
    pub pse: Option<f64>,
}

impl RtModelParams {
    pub fn confirmatory() -> Self {
        Self {
            intercept: 9.010,
            coefs: PerMetric::new([-0.042, 0.016, -0.004, -0.029]),
            pse: Some(-0.167),
        }
    }

    pub fn exploratory() -> Self {
        Self {
            intercept: 9.399,
            coefs: PerMetric::new([-0.067, -0.041, -0.051, -0.009]),
            pse: None,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "confirmatory" | "confirmatory_rt" => Some(Self::confirmatory()),
            "exploratory" | "exploratory_rt" => Some(Self::exploratory()),
            _ => None,
        }
    }
}

/// Predicted log reaction time in log milliseconds.
pub fn predict_log_rt(params: &RtModelParams, d: &PairDifferences, pse_z: f64) -> f64 {
    params.intercept + params.coefs.dot(d.absolute) + params.pse.unwrap_or(0.0) * pse_z
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalFit {
    pub params: ChoiceModelParams,
    pub log_likelihood: f64,
    /// Mean negative log-likelihood per trial.
    pub log_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const FIT_GRADIENT_TOL: f64 = 1e-8;
pub const FIT_MAX_ITER: usize = 500;
const DIVERGENCE_LIMIT: f64 = 1e3;

/// Fits central threshold, spacing and all four betas.
pub fn fit_ordinal_fixed(trials: &[(PairDifferences, Choice)]) -> Result<OrdinalFit> {
    fit_ordinal(trials, [true; 4])
}

/// Fits thresholds and the betas marked free; the others stay at 0.
pub fn fit_ordinal(trials: &[(PairDifferences, Choice)], free: [bool; 4]) -> Result<OrdinalFit> {
    let cols: Vec<usize> = (0..4).filter(|&k| free[k]).collect();
    let k = cols.len();
    let mut x = Vec::with_capacity(trials.len() * k);
    let mut y = Vec::with_capacity(trials.len());
    for (d, c) in trials {
        let s = d.signed.to_array();
        x.extend(cols.iter().map(|&j| s[j]));
        y.push(c.index() as u8);
    }
    let data = OrdinalData { k, x, y };
    let (theta, ll, iterations, converged) = newton_fit(&data)?;
    let mut betas = [0.0; 4];
    for (slot, &j) in cols.iter().enumerate() {
        betas[j] = theta[2 + slot];
    }
    Ok(OrdinalFit {
        params: ChoiceModelParams {
            central: theta[0],
            spacing: theta[1],
            betas: PerMetric::new(betas),
        },
        log_likelihood: ll,
        log_loss: -ll / trials.len() as f64,
        iterations,
        converged,
    })
}

/// Row-major design matrix with `k` predictor columns.
pub struct OrdinalData {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<u8>,
}

impl OrdinalData {
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }
}

fn pdf(t: f64) -> f64 {
    let f = logistic(t);
    f * (1.0 - f)
}

fn pdf_slope(t: f64) -> f64 {
    let f = logistic(t);
    f * (1.0 - f) * (1.0 - 2.0 * f)
}

/// Log-likelihood, gradient and Hessian at `theta = (central, spacing, betas)`.
pub fn log_likelihood(data: &OrdinalData, theta: &[f64], with_hessian: bool) -> (f64, Vec<f64>, Vec<f64>) {
    let dim = 2 + data.k;
    let mut ll = 0.0;
    let mut grad = vec![0.0; dim];
    let mut hess = vec![0.0; if with_hessian { dim * dim } else { 0 }];
    let thresholds = [theta[0] - theta[1], theta[0], theta[0] + theta[1]];
    let mut du = vec![0.0; dim];
    let mut dl = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for i in 0..data.y.len() {
        let x = data.row(i);
        let eta: f64 = x.iter().zip(&theta[2..]).map(|(a, b)| a * b).sum();
        let y = data.y[i] as usize;
        let p = interval_prob(thresholds, y, eta).max(1e-300);
        ll += p.ln();
        // d(theta_k)/d(central, spacing) = (1, k - 1)
        let upper = (y < 3).then(|| thresholds[y] - eta);
        let lower = (y > 0).then(|| thresholds[y - 1] - eta);
        du[0] = 1.0;
        du[1] = y as f64 - 1.0;
        dl[0] = 1.0;
        dl[1] = y as f64 - 2.0;
        for j in 0..data.k {
            du[2 + j] = -x[j];
            dl[2 + j] = -x[j];
        }
        let fu = upper.map_or(0.0, pdf);
        let fl = lower.map_or(0.0, pdf);
        for j in 0..dim {
            g[j] = (fu * du[j] - fl * dl[j]) / p;
            grad[j] += g[j];
        }
        if with_hessian {
            let su = upper.map_or(0.0, pdf_slope) / p;
            let sl = lower.map_or(0.0, pdf_slope) / p;
            for a in 0..dim {
                for b in 0..dim {
                    hess[a * dim + b] += su * du[a] * du[b] - sl * dl[a] * dl[b] - g[a] * g[b];
                }
            }
        }
    }
    (ll, grad, hess)
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
fn cholesky_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

fn param_name(j: usize) -> String {
    match j {
        0 => "central threshold".into(),
        1 => "threshold spacing".into(),
        j => format!("beta {}", j - 2),
    }
}

/// Damped Newton ascent from (central 0, spacing 1, betas 0).
fn newton_fit(data: &OrdinalData) -> Result<(Vec<f64>, f64, usize, bool)> {
    let n = data.y.len();
    if n == 0 {
        return Err(Error::InsufficientData("no trials".into()));
    }
    let mut seen = [false; 4];
    for &y in &data.y {
        seen[y as usize] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Separation {
            direction: "all responses fall in one category".into(),
        });
    }
    let dim = 2 + data.k;
    let mut theta = vec![0.0; dim];
    theta[1] = 1.0;
    let scale = 1.0 / n as f64;
    let (mut ll, mut grad, mut hess) = log_likelihood(data, &theta, true);
    for iter in 0..FIT_MAX_ITER {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max((g * scale).abs()));
        if gmax < FIT_GRADIENT_TOL {
            return Ok((theta, ll, iter, true));
        }
        // Newton direction on -H, ridged until positive definite
        let neg_h: Vec<f64> = hess.iter().map(|h| -h).collect();
        let mut ridge = 0.0;
        let step = loop {
            let mut a = neg_h.clone();
            for j in 0..dim {
                a[j * dim + j] += ridge;
            }
            if let Some(s) = cholesky_solve(&a, &grad) {
                break s;
            }
            ridge = if ridge == 0.0 { 1e-8 * n as f64 } else { ridge * 10.0 };
            if ridge > 1e12 {
                return Err(Error::Separation {
                    direction: "curvature vanished".into(),
                });
            }
        };
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if cand[1] > 0.0 {
                let (ll_new, _, _) = log_likelihood(data, &cand, false);
                if ll_new.is_finite() && ll_new >= ll + 1e-4 * t * slope {
                    // an unchanged likelihood is rounding, not ascent
                    accepted = (ll_new > ll).then_some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(cand) = accepted else {
            // no ascent possible at machine precision
            return Ok((theta, ll, iter, gmax < 1e-6));
        };
        theta = cand;
        if let Some(j) = (0..dim).find(|&j| theta[j].abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Separation {
                direction: param_name(j),
            });
        }
        if theta[1] < 1e-8 {
            return Err(Error::Separation {
                direction: "threshold spacing collapsing to 0".into(),
            });
        }
        (ll, grad, hess) = log_likelihood(data, &theta, true);
    }
    Ok((theta, ll, FIT_MAX_ITER, false))
}
