//! Compositional complexity: the mean per-bin surprisal, in nats, of a
//! generative bin model with three independent parts.
//!
//! * item count `N ~ Geom(p)` on {0, 1, ...}, pmf `p (1 - p)^N`;
//! * relative sizes `C ~ Dir(alpha)` for `N > 1` (absent otherwise),
//!   optionally measured relative to the density at the even split;
//! * unused fraction `E` from a two-component mixture anchored at 0 and 1.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, Solution};
use crate::stats::log_add_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptySpaceFamily {
    TruncatedNormal,
    TruncatedLaplace,
    ContinuousBernoulli,
}

impl EmptySpaceFamily {
    pub const ALL: [EmptySpaceFamily; 3] = [
        EmptySpaceFamily::TruncatedNormal,
        EmptySpaceFamily::TruncatedLaplace,
        EmptySpaceFamily::ContinuousBernoulli,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmptySpaceFamily::TruncatedNormal => "truncated_normal",
            EmptySpaceFamily::TruncatedLaplace => "truncated_laplace",
            EmptySpaceFamily::ContinuousBernoulli => "continuous_bernoulli",
        }
    }

    /// Whether `sigma` is admissible for this family.
    pub fn sigma_ok(self, sigma: f64) -> bool {
        match self {
            EmptySpaceFamily::ContinuousBernoulli => sigma > 0.0 && sigma < 1.0,
            _ => sigma > 0.0 && sigma.is_finite(),
        }
    }
}

impl fmt::Display for EmptySpaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmptySpaceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown empty-space family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcParams {
    pub empty_family: EmptySpaceFamily,
    pub sigma: f64,
    pub p_geom: f64,
    pub alpha: f64,
    pub dirichlet_correction: bool,
}

impl CcParams {
    /// Continuous Bernoulli, sigma 0.426, p 0.043, alpha 0.984, corrected.
    pub fn confirmatory() -> Self {
        Self {
            empty_family: EmptySpaceFamily::ContinuousBernoulli,
            sigma: 0.426,
            p_geom: 0.043,
            alpha: 0.984,
            dirichlet_correction: true,
        }
    }

    /// Truncated normal, sigma 0.103, p 0.977, alpha 1.620, corrected.
    pub fn exploratory() -> Self {
        Self {
            empty_family: EmptySpaceFamily::TruncatedNormal,
            sigma: 0.103,
            p_geom: 0.977,
            alpha: 1.620,
            dirichlet_correction: true,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "confirmatory" => Some(Self::confirmatory()),
            "exploratory" => Some(Self::exploratory()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.empty_family.sigma_ok(self.sigma) {
            return Err(Error::InvalidParameter(format!(
                "sigma {} out of range for {}",
                self.sigma, self.empty_family
            )));
        }
        if !(self.p_geom > 0.0 && self.p_geom < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p {} outside (0, 1)",
                self.p_geom
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} not positive",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn ln_cb_normalizer(lambda: f64) -> f64 {
    // C(l) = 2 atanh(1 - 2l) / (1 - 2l); series near l = 1/2
    let x = 1.0 - 2.0 * lambda;
    if x.abs() < 1e-4 {
        let x2 = x * x;
        LN_2 + (1.0 + x2 / 3.0 + x2 * x2 / 5.0).ln()
    } else {
        (2.0 * x.atanh() / x).ln()
    }
}

fn ln_truncated_normal_at_zero(dist: f64, sigma: f64) -> f64 {
    // N(0, sigma) restricted to (0, 1): mass 0.5 * erf(1 / (sigma sqrt 2))
    let mass = 0.5 * erf(1.0 / (sigma * std::f64::consts::SQRT_2));
    -0.5 * (dist / sigma).powi(2) - (sigma * (2.0 * PI).sqrt()).ln() - mass.ln()
}

fn ln_truncated_laplace_at_zero(dist: f64, sigma: f64) -> f64 {
    // exp(-x / s) / (s (1 - exp(-1 / s))) on (0, 1)
    -dist / sigma - sigma.ln() - (-(-1.0 / sigma).exp_m1()).ln()
}

fn ln_cb(e: f64, lambda: f64) -> f64 {
    ln_cb_normalizer(lambda) + e * lambda.ln() + (1.0 - e) * (1.0 - lambda).ln()
}

/// Log density of the empty-space mixture `0.5 f0(e) + 0.5 f1(e)` on [0, 1].
pub fn empty_space_log_density(e: f64, family: EmptySpaceFamily, sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::Infeasible(format!("empty fraction {e} outside [0, 1]")));
    }
    if !family.sigma_ok(sigma) {
        return Err(Error::InvalidParameter(format!(
            "sigma {sigma} out of range for {family}"
        )));
    }
    Ok(empty_space_log_density_unchecked(e, family, sigma))
}

fn empty_space_log_density_unchecked(e: f64, family: EmptySpaceFamily, sigma: f64) -> f64 {
    let (a, b) = match family {
        EmptySpaceFamily::TruncatedNormal => (
            ln_truncated_normal_at_zero(e, sigma),
            ln_truncated_normal_at_zero(1.0 - e, sigma),
        ),
        EmptySpaceFamily::TruncatedLaplace => (
            ln_truncated_laplace_at_zero(e, sigma),
            ln_truncated_laplace_at_zero(1.0 - e, sigma),
        ),
        EmptySpaceFamily::ContinuousBernoulli => (ln_cb(e, sigma), ln_cb(e, 1.0 - sigma)),
    };
    log_add_exp(a, b) - LN_2
}

/// `ln p(N)` for the geometric law starting at zero.
pub fn ln_count_pmf(n: usize, p: f64) -> f64 {
    p.ln() + n as f64 * (-p).ln_1p()
}

/// What the surprisal of one bin needs to know about it.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSummary {
    pub count: usize,
    /// Sum of `ln(size / assigned total)` over the bin's items.
    pub log_share_sum: f64,
    pub empty: f64,
}

impl BinSummary {
    pub fn new(capacity: u32, sizes: &[u32]) -> Result<Self> {
        let total: u64 = sizes.iter().map(|&z| u64::from(z)).sum();
        if total > u64::from(capacity) {
            return Err(Error::Infeasible(format!(
                "bin load {total} exceeds capacity {capacity}"
            )));
        }
        let log_share_sum = if sizes.len() > 1 {
            let t = total as f64;
            sizes.iter().map(|&z| (f64::from(z) / t).ln()).sum()
        } else {
            0.0
        };
        Ok(Self {
            count: sizes.len(),
            log_share_sum,
            empty: 1.0 - total as f64 / f64::from(capacity),
        })
    }
}

/// Per-bin summaries of a solution, computed once and reusable across
/// parameter settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSummary {
    pub bins: Vec<BinSummary>,
}

impl SolutionSummary {
    pub fn new(instance: &ProblemInstance, solution: &Solution) -> Result<Self> {
        if solution.num_items() != instance.num_items() || solution.num_bins() != instance.num_bins()
        {
            return Err(Error::DimensionMismatch("solution does not fit instance".into()));
        }
        let bins = instance
            .bins()
            .iter()
            .enumerate()
            .map(|(bin, &w)| {
                let sizes: Vec<u32> = solution.items_in(bin).map(|j| instance.items()[j]).collect();
                BinSummary::new(w, &sizes)
            })
            .collect::<Result<_>>()?;
        Ok(Self { bins })
    }
}

/// The three additive parts of one bin's surprisal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSurprisal {
    pub count_term: f64,
    /// `None` for bins with fewer than two items.
    pub composition_term: Option<f64>,
    pub empty_term: f64,
}

impl BinSurprisal {
    pub fn total(&self) -> f64 {
        self.count_term + self.composition_term.unwrap_or(0.0) + self.empty_term
    }
}

/// Negative symmetric-Dirichlet log density at a composition with `n > 1`
/// parts, given `sum ln C_k`.
pub fn composition_surprisal(n: usize, log_share_sum: f64, alpha: f64, corrected: bool) -> Result<f64> {
    if n <= 1 {
        return Err(Error::InvalidParameter(format!(
            "composition term undefined for {n} items"
        )));
    }
    let nf = n as f64;
    let ln_density = if corrected {
        // normalizing constants cancel against the even split (1/n, ..., 1/n)
        (alpha - 1.0) * (log_share_sum + nf * nf.ln())
    } else {
        ln_gamma(nf * alpha) - nf * ln_gamma(alpha) + (alpha - 1.0) * log_share_sum
    };
    Ok(-ln_density)
}

/// Empty-space log density with its parameter-only constants folded in.
#[derive(Debug, Clone, Copy)]
enum EmptyDensity {
    Normal { inv_sigma: f64, ln_norm: f64 },
    Laplace { inv_sigma: f64, ln_norm: f64 },
    Bernoulli { ln_c: [f64; 2], ln_l: f64, ln_1ml: f64 },
}

impl EmptyDensity {
    fn new(family: EmptySpaceFamily, sigma: f64) -> Self {
        match family {
            EmptySpaceFamily::TruncatedNormal => Self::Normal {
                inv_sigma: 1.0 / sigma,
                ln_norm: ln_truncated_normal_at_zero(0.0, sigma),
            },
            EmptySpaceFamily::TruncatedLaplace => Self::Laplace {
                inv_sigma: 1.0 / sigma,
                ln_norm: ln_truncated_laplace_at_zero(0.0, sigma),
            },
            EmptySpaceFamily::ContinuousBernoulli => Self::Bernoulli {
                ln_c: [ln_cb_normalizer(sigma), ln_cb_normalizer(1.0 - sigma)],
                ln_l: sigma.ln(),
                ln_1ml: (-sigma).ln_1p(),
            },
        }
    }

    fn ln_pdf(&self, e: f64) -> f64 {
        let (a, b) = match *self {
            Self::Normal { inv_sigma, ln_norm } => (
                ln_norm - 0.5 * (e * inv_sigma).powi(2),
                ln_norm - 0.5 * ((1.0 - e) * inv_sigma).powi(2),
            ),
            Self::Laplace { inv_sigma, ln_norm } => {
                (ln_norm - e * inv_sigma, ln_norm - (1.0 - e) * inv_sigma)
            }
            Self::Bernoulli { ln_c, ln_l, ln_1ml } => (
                ln_c[0] + e * ln_l + (1.0 - e) * ln_1ml,
                ln_c[1] + e * ln_1ml + (1.0 - e) * ln_l,
            ),
        };
        log_add_exp(a, b) - LN_2
    }
}

/// Bin surprisal under fixed parameters, for scoring many bins.
#[derive(Debug, Clone)]
pub struct BinScorer {
    ln_p: f64,
    ln_q: f64,
    alpha: f64,
    corrected: bool,
    ln_gamma_alpha: f64,
    empty: EmptyDensity,
}

impl BinScorer {
    /// Parameters are assumed valid.
    pub fn new(params: &CcParams) -> Self {
        Self {
            ln_p: params.p_geom.ln(),
            ln_q: (-params.p_geom).ln_1p(),
            alpha: params.alpha,
            corrected: params.dirichlet_correction,
            ln_gamma_alpha: ln_gamma(params.alpha),
            empty: EmptyDensity::new(params.empty_family, params.sigma),
        }
    }

    pub fn bin(&self, bin: &BinSummary) -> BinSurprisal {
        let composition_term = (bin.count > 1).then(|| {
            let n = bin.count as f64;
            let am1 = self.alpha - 1.0;
            let ln_density = if self.corrected {
                am1 * (bin.log_share_sum + n * n.ln())
            } else {
                ln_gamma(n * self.alpha) - n * self.ln_gamma_alpha + am1 * bin.log_share_sum
            };
            -ln_density
        });
        BinSurprisal {
            count_term: -(self.ln_p + bin.count as f64 * self.ln_q),
            composition_term,
            empty_term: -self.empty.ln_pdf(bin.empty.clamp(0.0, 1.0)),
        }
    }

    pub fn cc(&self, summary: &SolutionSummary) -> f64 {
        let total: f64 = summary.bins.iter().map(|b| self.bin(b).total()).sum();
        total / summary.bins.len() as f64
    }
}

pub fn bin_surprisal(bin: &BinSummary, params: &CcParams) -> BinSurprisal {
    BinScorer::new(params).bin(bin)
}

/// Mean bin surprisal from precomputed summaries. Parameters are assumed
/// valid; see [`cc`] for the checked entry point.
pub fn cc_from_summary(summary: &SolutionSummary, params: &CcParams) -> f64 {
    BinScorer::new(params).cc(summary)
}

/// Compositional complexity of a solution, in nats.
pub fn cc(instance: &ProblemInstance, solution: &Solution, params: &CcParams) -> Result<f64> {
    params.validate()?;
    let summary = SolutionSummary::new(instance, solution)?;
    Ok(cc_from_summary(&summary, params))
}
