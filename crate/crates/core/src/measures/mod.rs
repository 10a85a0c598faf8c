//! Behavioural measures computed from trial logs: gaze bias, log reaction
//! time, problem-solving efficiency, preference coherence and exclusions.

pub mod analysis;
pub mod behavior;
pub mod exclusion;
pub mod log;

pub use analysis::{analyze, Analysis, ParticipantMeasures, TrialMeasures};
pub use behavior::{
    coherence_class, coherence_of_judgements, efficiencies, gaze_bias, log_rt, pse, pse_score,
    pse_weights, Coherence, PseReport,
};
pub use exclusion::{
    apply_exclusions, AuditEntry, ExclusionOutcome, ExclusionReason, RetainedTrial,
    DEFAULT_EXPECTED_TRIALS,
};
pub use log::{
    read_participants, read_trial_log, write_participants, write_trial_log, ParticipantRecord,
    Response, ResponseFields, TrialRecord,
};
