//! Pair-level quantities: standardized right-minus-left differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ComplexityProfile;

pub const METRIC_NAMES: [&str; 4] = ["hc", "cc", "vc", "dd"];

/// One value per metric, in HC, CC, VC, DD order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerMetric {
    pub hc: f64,
    pub cc: f64,
    pub vc: f64,
    pub dd: f64,
}

impl PerMetric {
    pub fn new(v: [f64; 4]) -> Self {
        Self {
            hc: v[0],
            cc: v[1],
            vc: v[2],
            dd: v[3],
        }
    }

    pub fn splat(x: f64) -> Self {
        Self::new([x; 4])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.hc, self.cc, self.vc, self.dd]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.to_array().map(f))
    }

    pub fn dot(self, other: Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Raw right-minus-left differences of the four metrics.
pub fn raw_differences(left: &ComplexityProfile, right: &ComplexityProfile) -> PerMetric {
    PerMetric::new([
        f64::from(right.hc) - f64::from(left.hc),
        right.cc - left.cc,
        right.vc - left.vc,
        f64::from(right.dd) - f64::from(left.dd),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDifferences {
    /// Signed standardized differences.
    pub signed: PerMetric,
    /// Absolute standardized differences.
    pub absolute: PerMetric,
    /// Maximum disorder, `max(VC_left, VC_right)`.
    pub md: f64,
    /// Problem difficulty, passed through.
    pub pd: f64,
    pub sd_used: PerMetric,
}

impl PairDifferences {
    /// From already-standardized signed differences (unit divisors).
    pub fn from_signed(signed: PerMetric, md: f64, pd: f64) -> Self {
        Self {
            signed,
            absolute: signed.map(f64::abs),
            md,
            pd,
            sd_used: PerMetric::splat(1.0),
        }
    }

    pub fn zero() -> Self {
        Self::from_signed(PerMetric::splat(0.0), 0.0, 0.0)
    }
}

fn check_sds(sds: &PerMetric) -> Result<()> {
    for (name, sd) in METRIC_NAMES.iter().zip(sds.to_array()) {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::ZeroVariance((*name).to_owned()));
        }
    }
    Ok(())
}

/// Divides raw differences by `sds`. No centering: 0 still means "no
/// difference".
pub fn pair_differences(
    left: &ComplexityProfile,
    right: &ComplexityProfile,
    sds: &PerMetric,
    pd: f64,
) -> Result<PairDifferences> {
    check_sds(sds)?;
    let raw = raw_differences(left, right).to_array();
    let sd = sds.to_array();
    let signed = PerMetric::new([0, 1, 2, 3].map(|k| raw[k] / sd[k]));
    Ok(PairDifferences {
        signed,
        absolute: signed.map(f64::abs),
        md: left.vc.max(right.vc),
        pd,
        sd_used: *sds,
    })
}

/// Per-metric sample standard deviation (divisor n - 1) of raw differences.
pub fn compute_sds(raw: &[PerMetric]) -> Result<PerMetric> {
    if raw.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} trials, need at least 2 to estimate spread",
            raw.len()
        )));
    }
    let mut out = [0.0; 4];
    for (k, name) in METRIC_NAMES.iter().enumerate() {
        let xs: Vec<f64> = raw.iter().map(|d| d.to_array()[k]).collect();
        let sd = crate::stats::sample_sd(&xs);
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance((*name).to_owned()));
        }
        out[k] = sd;
    }
    Ok(PerMetric::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(hc: u32, cc: f64, vc: f64, dd: u32) -> ComplexityProfile {
        ComplexityProfile { hc, cc, vc, dd }
    }

    #[test]
    fn identical_sides_give_zero() {
        let a = prof(3, 1.5, 0.2, 4);
        let d = pair_differences(&a, &a, &PerMetric::splat(1.0), 0.9).unwrap();
        assert_eq!(d.signed, PerMetric::splat(0.0));
        assert_eq!(d.absolute, PerMetric::splat(0.0));
        assert_eq!(d.pd, 0.9);
    }

    #[test]
    fn standardizes_and_takes_max_disorder() {
        let l = prof(0, 0.0, 0.2, 0);
        let r = prof(4, 0.0, 0.5, 0);
        let d = pair_differences(&l, &r, &PerMetric::new([2.0, 1.0, 1.0, 1.0]), 0.0).unwrap();
        assert_eq!(d.signed.hc, 2.0);
        assert_eq!(d.md, 0.5);
        let swapped = pair_differences(&r, &l, &PerMetric::new([2.0, 1.0, 1.0, 1.0]), 0.0).unwrap();
        assert_eq!(swapped.signed.hc, -2.0);
        assert_eq!(swapped.absolute, d.absolute);
        assert_eq!(swapped.md, d.md);
    }

    #[test]
    fn zero_sd_rejected() {
        let a = prof(0, 0.0, 0.0, 0);
        let e = pair_differences(&a, &a, &PerMetric::new([1.0, 0.0, 1.0, 1.0]), 0.0);
        assert_eq!(e, Err(Error::ZeroVariance("cc".into())));
    }

    #[test]
    fn sds_two_point_and_constant() {
        let raw = vec![PerMetric::splat(-1.0), PerMetric::splat(1.0)];
        let sd = compute_sds(&raw).unwrap();
        assert!((sd.hc - 2f64.sqrt()).abs() < 1e-15);
        let raw = vec![
            PerMetric::new([1.0, 1.0, 2.0, 1.0]),
            PerMetric::new([2.0, 1.0, 3.0, 1.0]),
        ];
        assert_eq!(compute_sds(&raw), Err(Error::ZeroVariance("cc".into())));
        assert!(compute_sds(&raw[..1]).is_err());
    }
}
