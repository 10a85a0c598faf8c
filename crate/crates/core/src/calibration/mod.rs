//! Fitting the composition model's parameters `(p, sigma, alpha)` for each
//! of the six variants (three empty-space families, correction on or off),
//! either against a compound of corpus indices or against observed choices.

pub mod indices;
pub mod optimize;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::composition::{BinScorer, SolutionSummary};
use crate::metrics::{CcParams, EmptySpaceFamily, PairDifferences, PerMetric};
use crate::model::{ProblemInstance, Solution};
use crate::par::{map_slice, Execution};
use crate::preference::{fit_ordinal, Choice};
use crate::stats::{pearson, sample_sd};

pub use indices::{compound_indices, compound_scores, pca_first_component, CompoundIndices};
pub use optimize::{bounded_minimize, Bounds, Minimum, MinimizeOptions, StopReason};

/// Starting point `(p, sigma, alpha)`.
pub const START: [f64; 3] = [0.50, 0.05, 2.00];
pub const BOUND_EPS: f64 = 1e-6;
pub const SIGMA_MAX: f64 = 10.0;
pub const ALPHA_MAX: f64 = 100.0;
pub const MIN_CORPUS: usize = 10;
pub const MIN_TRIALS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variant {
    pub family: EmptySpaceFamily,
    pub corrected: bool,
}

impl Variant {
    pub fn all() -> [Variant; 6] {
        let mut out = [Variant {
            family: EmptySpaceFamily::TruncatedNormal,
            corrected: false,
        }; 6];
        for (i, family) in EmptySpaceFamily::ALL.into_iter().enumerate() {
            for (j, corrected) in [false, true].into_iter().enumerate() {
                out[2 * i + j] = Variant { family, corrected };
            }
        }
        out
    }

    pub fn name(&self) -> String {
        format!(
            "{}{}",
            self.family,
            if self.corrected { "+correction" } else { "" }
        )
    }

    pub fn bounds(&self) -> Bounds {
        let sigma_hi = match self.family {
            EmptySpaceFamily::ContinuousBernoulli => 1.0 - BOUND_EPS,
            _ => SIGMA_MAX,
        };
        Bounds {
            lower: vec![BOUND_EPS; 3],
            upper: vec![1.0 - BOUND_EPS, sigma_hi, ALPHA_MAX],
        }
    }

    /// Parameters from an optimizer point `(p, sigma, alpha)`.
    pub fn params(&self, x: &[f64]) -> CcParams {
        CcParams {
            empty_family: self.family,
            sigma: x[1],
            p_geom: x[0],
            alpha: x[2],
            dirichlet_correction: self.corrected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationTarget {
    /// Negative Pearson correlation with the compound score.
    Compound,
    /// Ordinal log-loss of choices predicted from the CC difference.
    LogLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: String,
    pub params: CcParams,
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub stop: Option<StopReason>,
    /// Set when the variant could not be optimized at all.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub target: CalibrationTarget,
    pub variants: Vec<VariantResult>,
    /// Index into `variants`.
    pub winner: usize,
}

impl CalibrationReport {
    pub fn best(&self) -> &VariantResult {
        &self.variants[self.winner]
    }

    fn assemble(target: CalibrationTarget, variants: Vec<VariantResult>) -> Result<Self> {
        let winner = variants
            .iter()
            .enumerate()
            .filter(|(_, v)| v.converged && v.loss.is_finite())
            .min_by(|a, b| a.1.loss.total_cmp(&b.1.loss))
            .map(|(i, _)| i)
            .ok_or_else(|| {
                let detail: Vec<String> = variants
                    .iter()
                    .map(|v| {
                        format!(
                            "{}: {}",
                            v.variant,
                            v.error.clone().unwrap_or_else(|| format!("{:?}", v.stop))
                        )
                    })
                    .collect();
                Error::Calibration(format!("no variant converged ({})", detail.join("; ")))
            })?;
        Ok(Self {
            target,
            variants,
            winner,
        })
    }
}

impl fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.target {
            CalibrationTarget::Compound => "loss (-r)",
            CalibrationTarget::LogLoss => "log-loss",
        };
        writeln!(
            f,
            "{:<3}{:<36}{:>10}{:>10}{:>10}{:>14}{:>7}  status",
            "", "variant", "p", "sigma", "alpha", label, "iter"
        )?;
        for (i, v) in self.variants.iter().enumerate() {
            let status = match (&v.error, v.stop) {
                (Some(e), _) => format!("failed: {e}"),
                (None, Some(s)) if v.converged => format!("converged ({s:?})"),
                (None, s) => format!("not converged ({s:?})"),
            };
            writeln!(
                f,
                "{:<3}{:<36}{:>10.4}{:>10.4}{:>10.4}{:>14.6}{:>7}  {}",
                if i == self.winner { "*" } else { "" },
                v.variant,
                v.params.p_geom,
                v.params.sigma,
                v.params.alpha,
                v.loss,
                v.iterations,
                status
            )?;
        }
        Ok(())
    }
}

fn run_variant<F>(variant: Variant, objective: F) -> VariantResult
where
    F: Fn(&CcParams) -> f64,
{
    let bounds = variant.bounds();
    let result = bounded_minimize(
        |x| objective(&variant.params(x)),
        &START,
        &bounds,
        &MinimizeOptions::default(),
    );
    match result {
        Ok(m) => VariantResult {
            variant: variant.name(),
            params: variant.params(&m.x),
            loss: m.value,
            iterations: m.iterations,
            evaluations: m.evaluations,
            converged: m.converged(),
            stop: Some(m.stop),
            error: None,
        },
        Err(e) => VariantResult {
            variant: variant.name(),
            params: variant.params(&START),
            loss: f64::NAN,
            iterations: 0,
            evaluations: 0,
            converged: false,
            stop: None,
            error: Some(e.to_string()),
        },
    }
}

fn summaries(pairs: &[(&ProblemInstance, &Solution)]) -> Result<Vec<SolutionSummary>> {
    pairs.iter().map(|(p, s)| SolutionSummary::new(p, s)).collect()
}

/// Prepared correlation objective: per-solution bin summaries and targets.
pub struct CorrelationObjective<'a> {
    summaries: Vec<SolutionSummary>,
    target: &'a [f64],
}

impl<'a> CorrelationObjective<'a> {
    pub fn new(corpus: &[(ProblemInstance, Solution)], target: &'a [f64]) -> Result<Self> {
        let pairs: Vec<_> = corpus.iter().map(|(p, s)| (p, s)).collect();
        Ok(Self {
            summaries: summaries(&pairs)?,
            target,
        })
    }

    /// Negative Pearson correlation; NaN when CC does not vary.
    pub fn loss(&self, params: &CcParams) -> f64 {
        let scorer = BinScorer::new(params);
        let values: Vec<f64> = self.summaries.iter().map(|s| scorer.cc(s)).collect();
        pearson(&values, self.target).map_or(f64::NAN, |r| -r)
    }
}

/// Maximizes the correlation between CC and the corpus' compound score.
pub fn calibrate_correlation(
    corpus: &[(ProblemInstance, Solution)],
    exec: Execution,
) -> Result<CalibrationReport> {
    if corpus.len() < MIN_CORPUS {
        return Err(Error::InsufficientData(format!(
            "corpus of {} solutions, need at least {MIN_CORPUS}",
            corpus.len()
        )));
    }
    let target = compound_scores(corpus)?;
    calibrate_correlation_to(corpus, &target, exec)
}

/// As [`calibrate_correlation`], with a caller-supplied target score per
/// corpus element.
pub fn calibrate_correlation_to(
    corpus: &[(ProblemInstance, Solution)],
    target: &[f64],
    exec: Execution,
) -> Result<CalibrationReport> {
    if corpus.len() < MIN_CORPUS {
        return Err(Error::InsufficientData(format!(
            "corpus of {} solutions, need at least {MIN_CORPUS}",
            corpus.len()
        )));
    }
    if target.len() != corpus.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} target scores for {} solutions",
            target.len(),
            corpus.len()
        )));
    }
    let objective = CorrelationObjective::new(corpus, target)?;
    let results = map_slice(exec, &Variant::all(), |&v| {
        run_variant(v, |params| objective.loss(params))
    });
    CalibrationReport::assemble(CalibrationTarget::Compound, results)
}

/// One observed choice between two solutions of the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceObservation {
    pub instance: ProblemInstance,
    pub left: Solution,
    pub right: Solution,
    pub choice: Choice,
}

/// Prepared log-loss objective: per-trial bin summaries and choices.
pub struct LogLossObjective {
    left: Vec<SolutionSummary>,
    right: Vec<SolutionSummary>,
    choices: Vec<Choice>,
}

impl LogLossObjective {
    pub fn new(trials: &[ChoiceObservation]) -> Result<Self> {
        Ok(Self {
            left: summaries(&trials.iter().map(|t| (&t.instance, &t.left)).collect::<Vec<_>>())?,
            right: summaries(&trials.iter().map(|t| (&t.instance, &t.right)).collect::<Vec<_>>())?,
            choices: trials.iter().map(|t| t.choice).collect(),
        })
    }

    /// Standardized right-minus-left CC differences, or `None` when they do
    /// not vary.
    pub fn standardized_deltas(&self, params: &CcParams) -> Option<Vec<f64>> {
        let scorer = BinScorer::new(params);
        let deltas: Vec<f64> = self
            .left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| scorer.cc(r) - scorer.cc(l))
            .collect();
        let sd = sample_sd(&deltas);
        (sd > 0.0 && sd.is_finite()).then(|| deltas.iter().map(|d| d / sd).collect())
    }

    /// Fitted ordinal log-loss with the CC difference as the only predictor.
    pub fn fitted(&self, params: &CcParams) -> Result<crate::preference::OrdinalFit> {
        let deltas = self
            .standardized_deltas(params)
            .ok_or_else(|| Error::ZeroVariance("cc".into()))?;
        let data: Vec<(PairDifferences, Choice)> = deltas
            .iter()
            .zip(&self.choices)
            .map(|(&d, &c)| {
                (
                    PairDifferences::from_signed(PerMetric::new([0.0, d, 0.0, 0.0]), 0.0, 0.0),
                    c,
                )
            })
            .collect();
        fit_ordinal(&data, [false, true, false, false])
    }

    /// The outer objective; failures of the inner fit read as NaN.
    pub fn loss(&self, params: &CcParams) -> f64 {
        self.fitted(params).map_or(f64::NAN, |f| f.log_loss)
    }
}

/// Minimizes the fitted ordinal log-loss over `(p, sigma, alpha)`.
pub fn calibrate_logloss(trials: &[ChoiceObservation], exec: Execution) -> Result<CalibrationReport> {
    if trials.len() < MIN_TRIALS {
        return Err(Error::InsufficientData(format!(
            "{} trials, need at least {MIN_TRIALS}",
            trials.len()
        )));
    }
    let objective = LogLossObjective::new(trials)?;
    let results = map_slice(exec, &Variant::all(), |&v| {
        run_variant(v, |params| objective.loss(params))
    });
    CalibrationReport::assemble(CalibrationTarget::LogLoss, results)
}
