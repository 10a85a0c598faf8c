//! Tabular trial manifest: one CSV row per evaluation trial.
//!
//! Arrays are `;`-joined; an unassigned item is written as `-`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{profile, CcParams, ComplexityProfile};
use crate::model::{DisplayedSolution, ProblemInstance, Solution};

use super::trials::{Stratum, TrialKind, TrialPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub participant_id: String,
    pub seed: u64,
    /// 1-based position in the session.
    pub trial_index: usize,
    pub kind: TrialKind,
    pub stratum: Stratum,
    pub problem_id: String,
    pub bins: String,
    pub items: String,
    pub left_assignment: String,
    pub left_bin_order: String,
    pub left_item_order: String,
    pub right_assignment: String,
    pub right_bin_order: String,
    pub right_item_order: String,
    pub pd: f64,
    pub hc_left: u32,
    pub cc_left: f64,
    pub vc_left: f64,
    pub dd_left: u32,
    pub hc_right: u32,
    pub cc_right: f64,
    pub vc_right: f64,
    pub dd_right: u32,
}

pub fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

pub fn split_numbers<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Malformed(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

pub fn join_assignment(a: &[Option<usize>]) -> String {
    a.iter()
        .map(|x| x.map_or_else(|| "-".to_owned(), |b| b.to_string()))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn split_assignment(s: &str) -> Result<Vec<Option<usize>>> {
    s.split(';')
        .map(|t| match t.trim() {
            "-" => Ok(None),
            v => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Malformed(format!("bad assignment entry {t:?}"))),
        })
        .collect()
}

fn side(d: &DisplayedSolution) -> Result<(String, String, String)> {
    let a = d
        .solution()
        .assignment()
        .ok_or_else(|| Error::Infeasible("item in more than one bin".into()))?;
    Ok((join_assignment(&a), join(d.bin_order()), join(d.item_order())))
}

impl ManifestRow {
    pub fn new(
        participant_id: &str,
        seed: u64,
        trial_index: usize,
        trial: &TrialPair,
        cc_params: &CcParams,
    ) -> Result<Self> {
        let p = &trial.problem;
        let l = profile(p, &trial.left, cc_params)?;
        let r = profile(p, &trial.right, cc_params)?;
        let (la, lb, li) = side(&trial.left)?;
        let (ra, rb, ri) = side(&trial.right)?;
        Ok(Self {
            participant_id: participant_id.to_owned(),
            seed,
            trial_index,
            kind: trial.kind,
            stratum: trial.stratum,
            problem_id: p.id().to_owned(),
            bins: join(p.bins()),
            items: join(p.items()),
            left_assignment: la,
            left_bin_order: lb,
            left_item_order: li,
            right_assignment: ra,
            right_bin_order: rb,
            right_item_order: ri,
            pd: p.difficulty(),
            hc_left: l.hc,
            cc_left: l.cc,
            vc_left: l.vc,
            dd_left: l.dd,
            hc_right: r.hc,
            cc_right: r.cc,
            vc_right: r.vc,
            dd_right: r.dd,
        })
    }

    pub fn left_profile(&self) -> ComplexityProfile {
        ComplexityProfile {
            hc: self.hc_left,
            cc: self.cc_left,
            vc: self.vc_left,
            dd: self.dd_left,
        }
    }

    pub fn right_profile(&self) -> ComplexityProfile {
        ComplexityProfile {
            hc: self.hc_right,
            cc: self.cc_right,
            vc: self.vc_right,
            dd: self.dd_right,
        }
    }

    /// Rebuilds the problem and both displays.
    pub fn to_trial(&self) -> Result<TrialPair> {
        let problem = ProblemInstance::new(
            self.problem_id.clone(),
            split_numbers(&self.bins, "bins")?,
            split_numbers(&self.items, "items")?,
        )?;
        let display = |a: &str, b: &str, i: &str| -> Result<DisplayedSolution> {
            let a = split_assignment(a)?;
            if a.len() != problem.num_items() {
                return Err(Error::DimensionMismatch(format!(
                    "assignment of {} entries for {} items",
                    a.len(),
                    problem.num_items()
                )));
            }
            DisplayedSolution::new(
                Solution::from_assignment(&a, problem.num_bins())?,
                split_numbers(b, "bin order")?,
                split_numbers(i, "item order")?,
            )
        };
        let left = display(&self.left_assignment, &self.left_bin_order, &self.left_item_order)?;
        let right = display(&self.right_assignment, &self.right_bin_order, &self.right_item_order)?;
        Ok(TrialPair {
            kind: self.kind,
            stratum: self.stratum,
            problem,
            left,
            right,
        })
    }
}

pub fn manifest_rows(
    participant_id: &str,
    seed: u64,
    trials: &[TrialPair],
    cc_params: &CcParams,
) -> Result<Vec<ManifestRow>> {
    trials
        .iter()
        .enumerate()
        .map(|(i, t)| ManifestRow::new(participant_id, seed, i + 1, t, cc_params))
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Malformed(format!("row {}: {e}", i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrays_round_trip() {
        let a = vec![Some(0), None, Some(3)];
        assert_eq!(join_assignment(&a), "0;-;3");
        assert_eq!(split_assignment("0;-;3").unwrap(), a);
        assert_eq!(split_numbers::<u32>("10;20", "x").unwrap(), vec![10, 20]);
        assert!(split_assignment("0;x").is_err());
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let problem = ProblemInstance::new("p00001", vec![20, 30], vec![10, 10, 20]).unwrap();
        let left = DisplayedSolution::identity(
            Solution::from_assignment(&[Some(0), Some(0), Some(1)], 2).unwrap(),
        );
        let right = DisplayedSolution::new(
            Solution::from_assignment(&[Some(1), None, Some(0)], 2).unwrap(),
            vec![1, 0],
            vec![2, 0, 1],
        )
        .unwrap();
        let trial = TrialPair {
            kind: TrialKind::DuplicatedRandom,
            stratum: Stratum::High,
            problem,
            left,
            right,
        };
        let rows = manifest_rows("s001", 42, std::slice::from_ref(&trial), &CcParams::confirmatory()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("participant_id,seed,trial_index,kind,stratum,problem_id,"));
        assert!(text.contains("duplicated_random,high,p00001,20;30,10;10;20,0;0;1,0;1,0;1;2,1;-;0,1;0,2;0;1,"));
        let back: Vec<ManifestRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[0].to_trial().unwrap(), trial);
    }
}
