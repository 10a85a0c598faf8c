use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use mssp_core::calibration::{
    calibrate_correlation, calibrate_logloss, CalibrationReport, ChoiceObservation,
};
use mssp_core::measures::{
    analyze, apply_exclusions, read_participants, read_trial_log, write_participants,
    write_trial_log, ParticipantRecord, Response, ResponseFields, TrialRecord,
    DEFAULT_EXPECTED_TRIALS,
};
use mssp_core::metrics::{
    pair_differences, profile, profile_batch, raw_differences, CcParams, ComplexityProfile, PairDifferences,
    PerMetric,
};
use mssp_core::model::InstanceRecord;
use mssp_core::preference::{
    predict_choice_probs, predict_log_rt, Choice, ChoiceModelParams, RtModelParams,
};
use mssp_core::seed::{self, STREAM_PARTICIPANT, STREAM_SIMULATION};
use mssp_core::solver::{enumerate_optima_with, heuristic_optimality, SolverOptions};
use mssp_core::stats::sample_sd;
use mssp_core::trialgen::{
    generate_evaluation_trials, generate_pool, make_shared_trials, manifest_rows, read_csv,
    select_problem_solving_trials, write_csv, GenerationConfig, ManifestRow, Pool, PoolFile,
    ScoredPool, TrialKind,
};
use mssp_core::{canonical_form, DisplayedSolution, Execution, ProblemInstance, SolutionRecord};

use crate::output::{cc_params, choice_params, emit, read_json, rt_params, to_json, CliResult, Failure};
use crate::{
    AnalyzeArgs, CalibrateArgs, Cli, Command, GenPoolArgs, GenTrialsArgs, PlotArgs, PredictArgs,
    RankArgs, ScoreArgs, SimulateArgs, SolveArgs, Target,
};

pub fn run(cli: Cli) -> CliResult<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::GenPool(a) => gen_pool(a, exec),
        Command::Solve(a) => solve(a),
        Command::Score(a) => score(a, exec),
        Command::Rank(a) => rank(a, exec),
        Command::GenTrials(a) => gen_trials(a, exec),
        Command::CalibrateCc(a) => calibrate(a, exec),
        Command::Predict(a) => predict(a),
        Command::Analyze(a) => analyze_log(a),
        Command::PlotData(a) => plot_data(a),
        Command::SimulateLog(a) => simulate_log(a),
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

fn gen_pool(a: GenPoolArgs, exec: Execution) -> CliResult<()> {
    let mut config: GenerationConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => GenerationConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(n) = a.iterations {
        config.iterations = n;
    }
    if let Some(c) = a.cap {
        config.cap = c;
    }
    let pool = generate_pool(&config, exec)?;
    let r = &pool.report;
    eprintln!(
        "accepted {} of {} iterations ({:.1}%), {} truncated",
        r.accepted,
        r.iterations,
        100.0 * r.yield_fraction(),
        r.truncated
    );
    emit(&[(a.out.out.as_deref(), to_json(&PoolFile::from(&pool))?)])
}

#[derive(Serialize)]
struct SolveOutput {
    id: String,
    optimal_score: u64,
    truncated: bool,
    heuristic_optimality: f64,
    solutions: Vec<Vec<Option<usize>>>,
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let record: InstanceRecord = read_json(&a.input)?;
    let instance = ProblemInstance::try_from(record)?;
    let result = enumerate_optima_with(
        &instance,
        SolverOptions {
            cap: a.cap,
            node_budget: a.node_budget,
        },
    )?;
    let out = SolveOutput {
        id: instance.id().to_owned(),
        optimal_score: result.optimal_score,
        truncated: result.truncated,
        heuristic_optimality: heuristic_optimality(&instance)?,
        solutions: result
            .solutions
            .iter()
            .map(|s| s.assignment().expect("solver output is valid"))
            .collect(),
    };
    emit(&[(a.out.out.as_deref(), to_json(&out)?)])
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<SolutionRecord>),
    One(SolutionRecord),
}

fn read_solutions(path: &std::path::Path) -> CliResult<Vec<(ProblemInstance, DisplayedSolution)>> {
    let records = match read_json::<OneOrMany>(path)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(r) => vec![r],
    };
    Ok(records
        .into_iter()
        .map(SolutionRecord::into_parts)
        .collect::<Result<Vec<_>, _>>()?)
}

#[derive(Serialize)]
struct ScoreRow {
    index: usize,
    id: String,
    hc: u32,
    cc: f64,
    vc: f64,
    dd: u32,
}

fn profiles(
    solutions: &[(ProblemInstance, DisplayedSolution)],
    params: &CcParams,
    exec: Execution,
) -> CliResult<Vec<ComplexityProfile>> {
    Ok(profile_batch(solutions, params, exec)?)
}

fn score(a: ScoreArgs, exec: Execution) -> CliResult<()> {
    let params = cc_params(&a.cc_params)?;
    let solutions = read_solutions(&a.input)?;
    let rows: Vec<ScoreRow> = profiles(&solutions, &params, exec)?
        .into_iter()
        .zip(&solutions)
        .enumerate()
        .map(|(index, (m, (p, _)))| ScoreRow {
            index,
            id: p.id().to_owned(),
            hc: m.hc,
            cc: m.cc,
            vc: m.vc,
            dd: m.dd,
        })
        .collect();
    emit(&[(a.out.out.as_deref(), csv_bytes(&rows)?)])
}

#[derive(Serialize)]
struct RankEntry {
    rank: usize,
    /// Position in the input.
    index: usize,
    score: f64,
    profile: ComplexityProfile,
    record: SolutionRecord,
}

/// Higher is more interpretable: each metric is divided by its spread over
/// the input and weighted by its (negative) choice coefficient.
fn rank(a: RankArgs, exec: Execution) -> CliResult<()> {
    let params = cc_params(&a.cc_params)?;
    let choice = choice_params(&a.choice_params)?;
    let solutions = read_solutions(&a.input)?;
    if solutions.is_empty() {
        return Err(mssp_core::Error::InsufficientData("no solutions to rank".into()).into());
    }
    let metrics = profiles(&solutions, &params, exec)?;
    let column = |f: fn(&ComplexityProfile) -> f64| -> Vec<f64> { metrics.iter().map(f).collect() };
    let columns = [
        column(|m| f64::from(m.hc)),
        column(|m| m.cc),
        column(|m| m.vc),
        column(|m| f64::from(m.dd)),
    ];
    let mut weights = choice.betas.to_array();
    if !a.include_dd {
        weights[3] = 0.0;
    }
    let scale: Vec<f64> = columns
        .iter()
        .map(|c| {
            let sd = if c.len() > 1 { sample_sd(c) } else { 0.0 };
            // a metric that does not vary cannot reorder anything
            if sd > 0.0 { 1.0 / sd } else { 0.0 }
        })
        .collect();
    let scores: Vec<f64> = (0..solutions.len())
        .map(|i| (0..4).map(|k| weights[k] * columns[k][i] * scale[k]).sum())
        .collect();
    let keys = solutions
        .iter()
        .map(|(p, d)| canonical_form(p, d.solution()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..solutions.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .total_cmp(&scores[i])
            .then_with(|| solutions[i].0.id().cmp(solutions[j].0.id()))
            .then_with(|| keys[i].cmp(&keys[j]))
            .then(i.cmp(&j))
    });
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            Ok(RankEntry {
                rank: rank + 1,
                index: i,
                score: scores[i],
                profile: metrics[i],
                record: SolutionRecord::from_parts(&solutions[i].0, &solutions[i].1)?,
            })
        })
        .collect::<Result<Vec<_>, mssp_core::Error>>()?;
    emit(&[(a.out.out.as_deref(), to_json(&entries)?)])
}

fn gen_trials(a: GenTrialsArgs, exec: Execution) -> CliResult<()> {
    if a.participants == 0 {
        return Err(Failure::usage("--participants must be at least 1"));
    }
    let params = cc_params(&a.cc_params)?;
    let file: PoolFile = read_json(&a.pool)?;
    let pool = Pool::try_from(file)?;
    let scored = ScoredPool::new(&pool, &params, exec)?;
    let shared = make_shared_trials(&scored, a.seed)?;
    let mut rows = Vec::new();
    for p in 0..a.participants {
        let participant_seed = seed::derive(a.seed, STREAM_PARTICIPANT, p as u64);
        let trials = generate_evaluation_trials(&scored, &shared, participant_seed)?;
        let id = format!("s{:03}", p + 1);
        rows.extend(manifest_rows(&id, participant_seed, &trials, &params)?);
    }
    let mut outputs = vec![(a.out.out.as_deref(), csv_bytes(&rows)?)];
    if let Some(path) = a.solve_out.as_deref() {
        let solve = select_problem_solving_trials(&pool, mssp_core::trialgen::trials::PROBLEM_SOLVING_TRIALS)?;
        let records = solve
            .into_iter()
            .map(|(p, s)| SolutionRecord::from_parts(&p, &DisplayedSolution::identity(s)))
            .collect::<Result<Vec<_>, _>>()?;
        outputs.push((Some(path), to_json(&records)?));
    }
    emit(&outputs)
}

fn calibrate(a: CalibrateArgs, exec: Execution) -> CliResult<()> {
    let report: CalibrationReport = match a.target {
        Target::Compound => {
            let corpus: Vec<_> = read_solutions(&a.input)?
                .into_iter()
                .map(|(p, d)| (p, d.solution().clone()))
                .collect();
            calibrate_correlation(&corpus, exec)?
        }
        Target::Logloss => {
            let log = read_trial_log(BufReader::new(File::open(&a.input)?))?;
            let outcome = apply_exclusions(&log, DEFAULT_EXPECTED_TRIALS)?;
            let trials = outcome
                .retained
                .iter()
                .map(|t| {
                    let pair = t.record.trial.to_trial()?;
                    Ok(ChoiceObservation {
                        instance: pair.problem,
                        left: pair.left.solution().clone(),
                        right: pair.right.solution().clone(),
                        choice: t.record.response.choice.choice().expect("button trials are dropped"),
                    })
                })
                .collect::<Result<Vec<_>, mssp_core::Error>>()?;
            calibrate_logloss(&trials, exec)?
        }
    };
    eprint!("{report}");
    emit(&[(a.out.out.as_deref(), to_json(&report)?)])
}

/// Raw differences for each row, recomputed under `params`.
fn row_differences(
    rows: &[ManifestRow],
    params: &CcParams,
) -> CliResult<Vec<(ComplexityProfile, ComplexityProfile)>> {
    rows.iter()
        .map(|r| {
            let t = r.to_trial()?;
            Ok((profile(&t.problem, &t.left, params)?, profile(&t.problem, &t.right, params)?))
        })
        .collect()
}

/// Sample SD of each raw difference over the rows. A metric whose
/// differences are all zero gets a unit divisor, which leaves them zero.
fn difference_sds(pairs: &[(ComplexityProfile, ComplexityProfile)]) -> CliResult<PerMetric> {
    let raw: Vec<[f64; 4]> = pairs.iter().map(|(l, r)| raw_differences(l, r).to_array()).collect();
    let mut sds = [1.0; 4];
    for (k, name) in ["hc", "cc", "vc", "dd"].iter().enumerate() {
        let xs: Vec<f64> = raw.iter().map(|d| d[k]).collect();
        if xs.iter().all(|&x| x == 0.0) {
            continue;
        }
        let sd = if xs.len() > 1 { sample_sd(&xs) } else { 0.0 };
        if !(sd > 0.0) {
            return Err(mssp_core::Error::ZeroVariance((*name).to_owned()).into());
        }
        sds[k] = sd;
    }
    Ok(PerMetric::new(sds))
}

fn standardized(
    rows: &[ManifestRow],
    params: &CcParams,
) -> CliResult<Vec<PairDifferences>> {
    let pairs = row_differences(rows, params)?;
    let sds = difference_sds(&pairs)?;
    pairs
        .iter()
        .zip(rows)
        .map(|((l, r), row)| Ok(pair_differences(l, r, &sds, row.pd)?))
        .collect()
}

#[derive(Serialize)]
struct PredictRow {
    participant_id: String,
    trial_index: usize,
    kind: TrialKind,
    d_hc: f64,
    d_cc: f64,
    d_vc: f64,
    d_dd: f64,
    p_definitely_left: f64,
    p_slightly_left: f64,
    p_slightly_right: f64,
    p_definitely_right: f64,
    log_rt: f64,
    rt_ms: f64,
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let params = cc_params(&a.cc_params)?;
    let choice = choice_params(&a.choice_params)?;
    let rt = rt_params(&a.rt_params)?;
    let rows: Vec<ManifestRow> = read_csv(BufReader::new(File::open(&a.input)?))?;
    let diffs = standardized(&rows, &params)?;
    let out: Vec<PredictRow> = rows
        .iter()
        .zip(&diffs)
        .map(|(r, d)| {
            let p = predict_choice_probs(&choice, d);
            let log_rt = predict_log_rt(&rt, d, a.pse_z);
            PredictRow {
                participant_id: r.participant_id.clone(),
                trial_index: r.trial_index,
                kind: r.kind,
                d_hc: d.signed.hc,
                d_cc: d.signed.cc,
                d_vc: d.signed.vc,
                d_dd: d.signed.dd,
                p_definitely_left: p[0],
                p_slightly_left: p[1],
                p_slightly_right: p[2],
                p_definitely_right: p[3],
                log_rt,
                rt_ms: log_rt.exp(),
            }
        })
        .collect();
    emit(&[(a.out.out.as_deref(), csv_bytes(&out)?)])
}

fn analyze_log(a: AnalyzeArgs) -> CliResult<()> {
    let log = read_trial_log(BufReader::new(File::open(&a.input)?))?;
    let participants = match &a.participants {
        Some(p) => read_participants(BufReader::new(File::open(p)?))?,
        None => Vec::new(),
    };
    let analysis = analyze(&log, &participants, a.expected_trials)?;
    emit(&[(a.out.out.as_deref(), to_json(&analysis)?)])
}

#[derive(Serialize)]
struct CurveRow {
    metric: &'static str,
    delta: f64,
    p_definitely_left: f64,
    p_slightly_left: f64,
    p_slightly_right: f64,
    p_definitely_right: f64,
}

/// One curve per metric: the signed difference of that metric is swept
/// while the others stay at zero.
fn plot_data(a: PlotArgs) -> CliResult<()> {
    let choice = choice_params(&a.choice_params)?;
    if a.steps < 2 || !(a.min < a.max) {
        return Err(Failure::usage("need --steps >= 2 and --min < --max"));
    }
    let mut rows = Vec::new();
    for (k, metric) in ["hc", "cc", "vc", "dd"].into_iter().enumerate() {
        for s in 0..a.steps {
            let delta = a.min + (a.max - a.min) * s as f64 / (a.steps - 1) as f64;
            let mut v = [0.0; 4];
            v[k] = delta;
            let p = predict_choice_probs(&choice, &PairDifferences::from_signed(PerMetric::new(v), 0.0, 0.0));
            rows.push(CurveRow {
                metric,
                delta,
                p_definitely_left: p[0],
                p_slightly_left: p[1],
                p_slightly_right: p[2],
                p_definitely_right: p[3],
            });
        }
    }
    emit(&[(a.out.out.as_deref(), csv_bytes(&rows)?)])
}

const SIM_RT_NOISE: f64 = 0.35;
const SIM_MAX_GAZE: u64 = 60;
const SIM_GAZE_PULL: f64 = 0.15;

fn simulate_response(
    rng: &mut impl Rng,
    row: &ManifestRow,
    d: &PairDifferences,
    choice: &ChoiceModelParams,
    rt: &RtModelParams,
) -> ResponseFields {
    let response = if row.kind == TrialKind::Catch {
        Response::Duplicated
    } else {
        let p = predict_choice_probs(choice, d);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let k = p
            .iter()
            .position(|pk| {
                acc += pk;
                u < acc
            })
            .unwrap_or(3);
        Response::Choice(Choice::from_index(k).expect("four categories"))
    };
    let noise: f64 = rng.sample(StandardNormal);
    let rt_ms = (predict_log_rt(rt, d, 0.0) + SIM_RT_NOISE * noise).exp();
    let total = rng.random_range(0..=SIM_MAX_GAZE);
    let lean = match response.choice().map(Choice::side) {
        Some(mssp_core::preference::Side::Right) => SIM_GAZE_PULL,
        Some(mssp_core::preference::Side::Left) => -SIM_GAZE_PULL,
        None => 0.0,
    };
    let right = Binomial::new(total, 0.5 + lean)
        .expect("probability in range")
        .sample(rng);
    ResponseFields {
        choice: response,
        rt_ms,
        gaze_left: (total - right) as u32,
        gaze_right: right as u32,
    }
}

fn simulate_participant(rng: &mut impl Rng, id: &str) -> ParticipantRecord {
    let trials = mssp_core::measures::log::SOLVE_TRIALS;
    let optima = vec![100.0; trials];
    let scores = (0..trials).map(|_| 100.0 - 5.0 * f64::from(rng.random_range(0..=4u8))).collect();
    let rts = (0..trials)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (45f64.ln() + 0.5 * z).exp()
        })
        .collect();
    let (lo, hi) = mssp_core::measures::log::PSI_RANGE;
    ParticipantRecord {
        participant_id: id.to_owned(),
        psi_total: rng.random_range(lo..=hi),
        solve_scores: scores,
        solve_optima: optima,
        solve_rt_s: rts,
    }
}

/// Each participant, in order of first appearance, draws from its own
/// stream, so appending participants leaves earlier ones unchanged.
fn simulate_log(a: SimulateArgs) -> CliResult<()> {
    let params = cc_params(&a.cc_params)?;
    let choice = choice_params(&a.choice_params)?;
    let rt = rt_params(&a.rt_params)?;
    let rows: Vec<ManifestRow> = read_csv(BufReader::new(File::open(&a.input)?))?;
    let diffs = standardized(&rows, &params)?;

    let mut ordinal: BTreeMap<&str, u64> = BTreeMap::new();
    for r in &rows {
        let next = ordinal.len() as u64;
        ordinal.entry(r.participant_id.as_str()).or_insert(next);
    }
    let mut rngs: BTreeMap<&str, _> = ordinal
        .iter()
        .map(|(&id, &i)| (id, seed::rng(a.seed, STREAM_SIMULATION, i)))
        .collect();
    let mut participants: Vec<(u64, ParticipantRecord)> = ordinal
        .iter()
        .map(|(&id, &i)| {
            let mut r = seed::rng(a.seed, STREAM_SIMULATION, i | 1 << 63);
            (i, simulate_participant(&mut r, id))
        })
        .collect();
    participants.sort_by_key(|(i, _)| *i);

    let log: Vec<TrialRecord> = rows
        .iter()
        .zip(&diffs)
        .map(|(row, d)| {
            let rng = rngs.get_mut(row.participant_id.as_str()).expect("every id has a stream");
            TrialRecord {
                trial: row.clone(),
                response: simulate_response(rng, row, d, &choice, &rt),
            }
        })
        .collect();
    let mut log_bytes = Vec::new();
    write_trial_log(&log, &mut log_bytes)?;
    let mut outputs = vec![(a.out.out.as_deref(), log_bytes)];
    if let Some(path) = a.participants_out.as_deref() {
        let records: Vec<ParticipantRecord> = participants.into_iter().map(|(_, p)| p).collect();
        let mut buf = Vec::new();
        write_participants(&records, &mut buf)?;
        outputs.push((Some(path), buf));
    }
    emit(&outputs)
}
