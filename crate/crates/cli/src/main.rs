//! `mssp`: pool generation, exact solving, scoring, trial assembly,
//! calibration, prediction and log analysis from the command line.
//!
//! Exit codes: 0 ok, 2 usage, 3 validation, 4 budget, 5 calibration.
//! Failures are reported on stderr as `{"error": {"class", "message"}}`.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Failure;

#[derive(Debug, Parser)]
#[command(name = "mssp", version, about = "Interpretability of equal-value MSSP optima")]
struct Cli {
    /// Run every batch step on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the instance pool with all optima per instance.
    GenPool(GenPoolArgs),
    /// Enumerate all optimal solutions of one instance.
    Solve(SolveArgs),
    /// Complexity profile of each solution.
    Score(ScoreArgs),
    /// Order equal-value solutions by predicted interpretability.
    Rank(RankArgs),
    /// Assemble per-participant evaluation trial manifests from a pool.
    GenTrials(GenTrialsArgs),
    /// Fit the CC parameters under all six model variants.
    CalibrateCc(CalibrateArgs),
    /// Choice probabilities and log reaction time per trial.
    Predict(PredictArgs),
    /// Exclusions, behavioural measures and coherence over a trial log.
    Analyze(AnalyzeArgs),
    /// Predicted-probability curves for external plotting.
    PlotData(PlotArgs),
    /// Synthesize responses for a manifest from the choice and RT models.
    SimulateLog(SimulateArgs),
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenPoolArgs {
    /// JSON generation config; flags override its fields.
    #[arg(long, value_parser = existing_file)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Maximum number of distinct optima kept per instance.
    #[arg(long)]
    cap: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON: `{"id", "bins", "items"}`.
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    #[arg(long, default_value_t = mssp_core::solver::DEFAULT_CAP)]
    cap: usize,
    #[arg(long, default_value_t = mssp_core::solver::DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Solution record or array of records.
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    #[arg(long, default_value = "confirmatory")]
    cc_params: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Array of solution records.
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    #[arg(long, default_value = "confirmatory")]
    cc_params: String,
    /// Source of the metric weights.
    #[arg(long, default_value = "confirmatory")]
    choice_params: String,
    /// Also weight DD by its coefficient.
    #[arg(long)]
    include_dd: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct GenTrialsArgs {
    /// Pool JSON written by `gen-pool`.
    #[arg(value_parser = existing_file)]
    pool: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    participants: usize,
    #[arg(long, default_value = "confirmatory")]
    cc_params: String,
    /// Where to write the problem-solving trials as solution records.
    #[arg(long)]
    solve_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Compound,
    Logloss,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Solution records (compound) or a trial log (logloss).
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Target::Compound)]
    target: Target,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Trial manifest or trial log.
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    #[arg(long, default_value = "confirmatory")]
    cc_params: String,
    #[arg(long, default_value = "confirmatory")]
    choice_params: String,
    #[arg(long, default_value = "confirmatory")]
    rt_params: String,
    /// Standardized PSE of the participant, for the RT model.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pse_z: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trial log.
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    /// Participant sidecar.
    #[arg(long, value_parser = existing_file)]
    participants: Option<PathBuf>,
    #[arg(long, default_value_t = mssp_core::measures::DEFAULT_EXPECTED_TRIALS)]
    expected_trials: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long, default_value = "confirmatory")]
    choice_params: String,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    max: f64,
    #[arg(long, default_value_t = 61)]
    steps: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Trial manifest.
    #[arg(value_parser = existing_file)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "confirmatory")]
    cc_params: String,
    #[arg(long, default_value = "confirmatory")]
    choice_params: String,
    #[arg(long, default_value = "confirmatory")]
    rt_params: String,
    /// Where to write a synthetic participant sidecar.
    #[arg(long)]
    participants_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::usage(e.render().to_string().trim_end());
            eprintln!("{}", f.to_json());
            return ExitCode::from(f.exit_code());
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
