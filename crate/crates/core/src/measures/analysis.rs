//! Per-trial and per-participant measures over a full trial log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_sds, pair_differences, raw_differences, PairDifferences, PerMetric};
use crate::preference::{Choice, Side};
use crate::trialgen::{Stratum, TrialKind};

use super::behavior::{coherence_of_judgements, gaze_bias, log_rt, pse, Coherence};
use super::exclusion::{apply_exclusions, AuditEntry, ExclusionReason, RetainedTrial};
use super::log::{ParticipantRecord, Response, TrialRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeasures {
    pub participant_id: String,
    pub trial_index: usize,
    pub kind: TrialKind,
    pub stratum: Stratum,
    pub choice: Choice,
    pub log_rt: f64,
    /// Absent when the trial had no on-stimulus gaze.
    pub gaze_bias: Option<f64>,
    pub differences: PairDifferences,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantMeasures {
    pub participant_id: String,
    pub excluded: Vec<ExclusionReason>,
    pub retained_trials: usize,
    /// `None` when a coherence judgement is missing.
    pub coherence: Option<Coherence>,
    pub pse: Option<f64>,
    pub psi_total: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    /// Spread of the raw differences over retained trials.
    pub sds: PerMetric,
    pub trials: Vec<TrialMeasures>,
    pub participants: Vec<ParticipantMeasures>,
    pub pse_weights: Option<Vec<f64>>,
    pub audit: Vec<AuditEntry>,
}

fn coherence_for(trials: &[&RetainedTrial]) -> Option<Coherence> {
    let judged: Vec<(String, String)> = trials
        .iter()
        .filter(|t| t.record.trial.kind == TrialKind::Coherence)
        .filter_map(|t| {
            let m = &t.record.trial;
            let side = t.record.response.choice.choice()?.side();
            let l = format!("{}|{}", m.problem_id, m.left_assignment);
            let r = format!("{}|{}", m.problem_id, m.right_assignment);
            Some(if side == Side::Left { (l, r) } else { (r, l) })
        })
        .collect();
    coherence_of_judgements(&judged).ok()
}

pub fn analyze(
    log: &[TrialRecord],
    participants: &[ParticipantRecord],
    expected_trials: usize,
) -> Result<Analysis> {
    let outcome = apply_exclusions(log, expected_trials)?;
    if outcome.retained.is_empty() {
        return Err(Error::InsufficientData("no trials survive the exclusions".into()));
    }
    let raw: Vec<PerMetric> = outcome
        .retained
        .iter()
        .map(|t| raw_differences(&t.record.trial.left_profile(), &t.record.trial.right_profile()))
        .collect();
    let sds = compute_sds(&raw)?;

    let mut trials = Vec::with_capacity(outcome.retained.len());
    for t in &outcome.retained {
        let m = &t.record.trial;
        let r = &t.record.response;
        let choice = match r.choice {
            Response::Choice(c) => c,
            Response::Duplicated => unreachable!("button trials are dropped"),
        };
        trials.push(TrialMeasures {
            participant_id: m.participant_id.clone(),
            trial_index: m.trial_index,
            kind: m.kind,
            stratum: m.stratum,
            choice,
            log_rt: log_rt(r.rt_ms)?,
            gaze_bias: gaze_bias(r.gaze_right, r.gaze_left),
            differences: pair_differences(&m.left_profile(), &m.right_profile(), &sds, m.pd)?,
        });
    }

    let sidecar: BTreeMap<&str, &ParticipantRecord> = participants
        .iter()
        .map(|p| (p.participant_id.as_str(), p))
        .collect();
    let cohort: Vec<ParticipantRecord> = outcome
        .retained_participants
        .iter()
        .filter_map(|id| sidecar.get(id.as_str()).map(|p| (*p).clone()))
        .collect();
    let pse_report = if cohort.is_empty() { None } else { Some(pse(&cohort)?) };

    let mut by_participant: BTreeMap<&str, Vec<&RetainedTrial>> = BTreeMap::new();
    for t in &outcome.retained {
        by_participant
            .entry(t.record.trial.participant_id.as_str())
            .or_default()
            .push(t);
    }
    let mut ids: Vec<&str> = outcome
        .retained_participants
        .iter()
        .map(String::as_str)
        .chain(outcome.excluded_participants.keys().map(String::as_str))
        .collect();
    ids.sort_unstable();
    let participants = ids
        .into_iter()
        .map(|id| {
            let kept = by_participant.get(id).map(Vec::as_slice).unwrap_or(&[]);
            let excluded = outcome.excluded_participants.get(id).cloned().unwrap_or_default();
            ParticipantMeasures {
                participant_id: id.to_owned(),
                retained_trials: kept.len(),
                coherence: if excluded.is_empty() { coherence_for(kept) } else { None },
                excluded,
                pse: pse_report.as_ref().and_then(|r| r.scores.get(id).copied()),
                psi_total: sidecar.get(id).map(|p| p.psi_total),
            }
        })
        .collect();

    Ok(Analysis {
        sds,
        trials,
        participants,
        pse_weights: pse_report.map(|r| r.weights),
        audit: outcome.audit,
    })
}
