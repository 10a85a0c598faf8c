//! Participant and trial exclusions with an audit trail.
//!
//! Participant rules are evaluated on the raw log, so the outcome does not
//! depend on row order or on the order the rules are listed in.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trialgen::TrialKind;

use super::log::{Response, TrialRecord};

pub const DEFAULT_EXPECTED_TRIALS: usize = crate::trialgen::trials::EVALUATION_TRIALS;
/// Button presses on non-catch trials at or above which a participant goes.
pub const BUTTON_OVERUSE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Participant: no button press on any catch trial.
    CatchMissed,
    /// Participant: button pressed on too many non-catch trials.
    ButtonOveruse,
    /// Participant: session not complete.
    Incomplete,
    /// Trial: catch trials carry no preference.
    CatchTrial,
    /// Trial: the duplicated-solutions button was pressed.
    ButtonPressed,
    /// Trial, gaze analyses only: no on-stimulus gaze.
    NoGaze,
}

impl ExclusionReason {
    pub fn name(self) -> &'static str {
        match self {
            ExclusionReason::CatchMissed => "catch_missed",
            ExclusionReason::ButtonOveruse => "button_overuse",
            ExclusionReason::Incomplete => "incomplete",
            ExclusionReason::CatchTrial => "catch_trial",
            ExclusionReason::ButtonPressed => "button_pressed",
            ExclusionReason::NoGaze => "no_gaze",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuditEntry {
    pub participant_id: String,
    /// `None` for participant-level decisions.
    pub trial_index: Option<usize>,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetainedTrial {
    pub record: TrialRecord,
    pub gaze_usable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionOutcome {
    /// Sorted by participant, then trial index.
    pub retained: Vec<RetainedTrial>,
    pub excluded_participants: BTreeMap<String, Vec<ExclusionReason>>,
    pub retained_participants: Vec<String>,
    /// Sorted.
    pub audit: Vec<AuditEntry>,
}

pub fn participant_reasons(trials: &[&TrialRecord], expected: usize) -> Vec<ExclusionReason> {
    let pressed = |t: &&&TrialRecord| t.response.choice == Response::Duplicated;
    let is_catch = |t: &&&TrialRecord| t.trial.kind == TrialKind::Catch;
    let mut reasons = Vec::new();
    if !trials.iter().filter(is_catch).any(|t| pressed(&t)) {
        reasons.push(ExclusionReason::CatchMissed);
    }
    let overuse = trials
        .iter()
        .filter(|t| !is_catch(t) && pressed(t))
        .count();
    if overuse >= BUTTON_OVERUSE {
        reasons.push(ExclusionReason::ButtonOveruse);
    }
    let mut idx: Vec<usize> = trials.iter().map(|t| t.trial.trial_index).collect();
    idx.sort_unstable();
    if idx != (1..=expected).collect::<Vec<_>>() {
        reasons.push(ExclusionReason::Incomplete);
    }
    reasons
}

pub fn apply_exclusions(log: &[TrialRecord], expected_trials: usize) -> Result<ExclusionOutcome> {
    let mut by_participant: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
    for r in log {
        by_participant
            .entry(r.trial.participant_id.as_str())
            .or_default()
            .push(r);
    }
    let mut retained = Vec::new();
    let mut excluded_participants = BTreeMap::new();
    let mut retained_participants = Vec::new();
    let mut audit = Vec::new();
    for (id, mut trials) in by_participant {
        trials.sort_by_key(|t| t.trial.trial_index);
        if let Some(w) = trials.windows(2).find(|w| w[0].trial.trial_index == w[1].trial.trial_index) {
            return Err(Error::Malformed(format!(
                "participant {id} has trial {} twice",
                w[0].trial.trial_index
            )));
        }
        let reasons = participant_reasons(&trials, expected_trials);
        if !reasons.is_empty() {
            audit.extend(reasons.iter().map(|&reason| AuditEntry {
                participant_id: id.to_owned(),
                trial_index: None,
                reason,
            }));
            excluded_participants.insert(id.to_owned(), reasons);
            continue;
        }
        retained_participants.push(id.to_owned());
        for t in trials {
            let entry = |reason| AuditEntry {
                participant_id: id.to_owned(),
                trial_index: Some(t.trial.trial_index),
                reason,
            };
            if t.trial.kind == TrialKind::Catch {
                audit.push(entry(ExclusionReason::CatchTrial));
                continue;
            }
            if t.response.choice == Response::Duplicated {
                audit.push(entry(ExclusionReason::ButtonPressed));
                continue;
            }
            let gaze_usable = t.response.gaze_left + t.response.gaze_right > 0;
            if !gaze_usable {
                audit.push(entry(ExclusionReason::NoGaze));
            }
            retained.push(RetainedTrial {
                record: t.clone(),
                gaze_usable,
            });
        }
    }
    audit.sort();
    Ok(ExclusionOutcome {
        retained,
        excluded_participants,
        retained_participants,
        audit,
    })
}
