//! Trial logs and participant sidecars.
//!
//! A trial log has every manifest column followed by `choice`, `rt_ms`,
//! `gaze_left` and `gaze_right`. The sidecar has one row per participant:
//! `participant_id, psi_total, solve_scores, solve_optima, solve_rt_s`, the
//! last three being `;`-joined lists over the problem-solving trials.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::Choice;
use crate::trialgen::manifest::{join, split_numbers, ManifestRow};

pub const SOLVE_TRIALS: usize = 7;
pub const PSI_RANGE: (u32, u32) = (31, 186);

/// What the participant clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Response {
    Choice(Choice),
    /// The duplicated-solutions button.
    Duplicated,
}

impl Response {
    pub fn choice(self) -> Option<Choice> {
        match self {
            Response::Choice(c) => Some(c),
            Response::Duplicated => None,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Choice(c) => f.write_str(c.name()),
            Response::Duplicated => f.write_str("duplicated"),
        }
    }
}

impl FromStr for Response {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "duplicated" {
            Ok(Response::Duplicated)
        } else {
            s.parse().map(Response::Choice)
        }
    }
}

impl TryFrom<String> for Response {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Response> for String {
    fn from(r: Response) -> Self {
        r.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseFields {
    pub choice: Response,
    pub rt_ms: f64,
    pub gaze_left: u32,
    pub gaze_right: u32,
}

/// One evaluation trial as shown and answered.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: ManifestRow,
    pub response: ResponseFields,
}

impl TrialRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.response.rt_ms > 0.0 && self.response.rt_ms.is_finite()) {
            return Err(Error::Malformed(format!(
                "participant {} trial {}: rt_ms {} must be positive",
                self.trial.participant_id, self.trial.trial_index, self.response.rt_ms
            )));
        }
        Ok(())
    }
}

const RESPONSE_COLUMNS: [&str; 4] = ["choice", "rt_ms", "gaze_left", "gaze_right"];

pub fn write_trial_log<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(MANIFEST_COLUMNS.iter().chain(&RESPONSE_COLUMNS))?;
    for r in records {
        w.serialize((&r.trial, &r.response))?;
    }
    w.flush()?;
    Ok(())
}

const MANIFEST_COLUMNS: [&str; 23] = [
    "participant_id",
    "seed",
    "trial_index",
    "kind",
    "stratum",
    "problem_id",
    "bins",
    "items",
    "left_assignment",
    "left_bin_order",
    "left_item_order",
    "right_assignment",
    "right_bin_order",
    "right_item_order",
    "pd",
    "hc_left",
    "cc_left",
    "vc_left",
    "dd_left",
    "hc_right",
    "cc_right",
    "vc_right",
    "dd_right",
];

pub fn read_trial_log<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    for col in MANIFEST_COLUMNS.iter().chain(&RESPONSE_COLUMNS) {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Malformed(format!("trial log lacks column {col:?}")));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let wrap = |e: csv::Error| Error::Malformed(format!("trial log row {}: {e}", i + 1));
        let trial: ManifestRow = rec.deserialize(Some(&headers)).map_err(wrap)?;
        let response: ResponseFields = rec.deserialize(Some(&headers)).map_err(wrap)?;
        let record = TrialRecord { trial, response };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

/// Questionnaire total and the problem-solving phase of one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub psi_total: u32,
    /// Score obtained per problem-solving trial.
    pub solve_scores: Vec<f64>,
    /// Optimal score per problem-solving trial.
    pub solve_optima: Vec<f64>,
    /// Seconds per problem-solving trial.
    pub solve_rt_s: Vec<f64>,
}

impl ParticipantRecord {
    pub fn validate(&self) -> Result<()> {
        let id = &self.participant_id;
        if !(PSI_RANGE.0..=PSI_RANGE.1).contains(&self.psi_total) {
            return Err(Error::Malformed(format!(
                "participant {id}: PSI total {} outside [{}, {}]",
                self.psi_total, PSI_RANGE.0, PSI_RANGE.1
            )));
        }
        for (what, v) in [
            ("scores", &self.solve_scores),
            ("optima", &self.solve_optima),
            ("reaction times", &self.solve_rt_s),
        ] {
            if v.len() != SOLVE_TRIALS {
                return Err(Error::InsufficientData(format!(
                    "participant {id}: {} problem-solving {what}, expected {SOLVE_TRIALS}",
                    v.len()
                )));
            }
        }
        if self.solve_optima.iter().any(|&o| !(o > 0.0)) {
            return Err(Error::Malformed(format!("participant {id}: optimum must be positive")));
        }
        if self.solve_rt_s.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Malformed(format!(
                "participant {id}: problem-solving time must be positive"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParticipantRow {
    participant_id: String,
    psi_total: u32,
    solve_scores: String,
    solve_optima: String,
    solve_rt_s: String,
}

pub fn write_participants<W: Write>(records: &[ParticipantRecord], out: W) -> Result<()> {
    let rows: Vec<ParticipantRow> = records
        .iter()
        .map(|p| ParticipantRow {
            participant_id: p.participant_id.clone(),
            psi_total: p.psi_total,
            solve_scores: join(&p.solve_scores),
            solve_optima: join(&p.solve_optima),
            solve_rt_s: join(&p.solve_rt_s),
        })
        .collect();
    crate::trialgen::write_csv(&rows, out)
}

pub fn read_participants<R: Read>(input: R) -> Result<Vec<ParticipantRecord>> {
    let rows: Vec<ParticipantRow> = crate::trialgen::read_csv(input)?;
    rows.into_iter()
        .map(|r| {
            let p = ParticipantRecord {
                solve_scores: split_numbers(&r.solve_scores, "solve_scores")?,
                solve_optima: split_numbers(&r.solve_optima, "solve_optima")?,
                solve_rt_s: split_numbers(&r.solve_rt_s, "solve_rt_s")?,
                participant_id: r.participant_id,
                psi_total: r.psi_total,
            };
            p.validate()?;
            Ok(p)
        })
        .collect()
}
