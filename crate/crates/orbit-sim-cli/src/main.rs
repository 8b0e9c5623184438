//! Command-line front end for the offloading simulator.
//!
//! Subcommands: `run`, `sweep`, `oracle-check`, `fit`, `gen-workload`.
//! Exit codes: 0 success, 1 invalid configuration or arguments (the message
//! names the offending field), 2 I/O failure (the message names the path),
//! 3 optimizer/brute-force mismatch (the counterexample instance is printed
//! as a replayable JSON document).
//!
//! All artifact writes are atomic (write to a sibling temp file, then
//! rename), and the effective configuration — file values plus command-line
//! overrides — is echoed into the output directory next to the artifacts.
//! `ORBIT_SIM_THREADS` caps internal parallelism.

mod fit;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use orbit_sim::profile::ProfileError;
use orbit_sim::scenario::{Scenario, ScenarioError};
use orbit_sim::schedulers::{check_instance, random_instance, ScheduleError, ORACLE_MAX_TASKS};
use orbit_sim::sim::{
    run, run_stream, sweep, write_sweep_csv, write_trace_csv, SimError, SweepAxis,
};
use orbit_sim::workload::{generate_stream, read_stream_csv, write_stream_csv, WorkloadError};

#[derive(Parser)]
#[command(
    name = "orbit-sim",
    version,
    about = "Deterministic simulator for latency-constrained multi-exit inference offloading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv + metrics.json.
    Run(RunArgs),
    /// Replicate a scenario across an axis and write the aggregate CSV.
    Sweep(SweepArgs),
    /// Verify the optimizer against exhaustive search on small random instances.
    OracleCheck(OracleCheckArgs),
    /// Fit linear layer predictors from a measurement CSV.
    Fit(FitArgs),
    /// Generate a task stream CSV without running any policy.
    GenWorkload(GenWorkloadArgs),
}

/// Scenario selection shared by every artifact-producing subcommand: one
/// self-describing config file, flags only as overrides.
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario document (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the scheduling policy (dp | greedy | random | oracle).
    #[arg(long)]
    policy: Option<String>,
    /// Override the workload RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of generated tasks.
    #[arg(long)]
    n_tasks: Option<usize>,
    /// Override the per-slot arrival probability.
    #[arg(long)]
    arrival_prob: Option<f64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Replay a previously exported stream CSV instead of generating one.
    #[arg(long)]
    stream: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Sweep axis: n_tasks | arrival_prob.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values, e.g. 50,100,150.
    #[arg(long)]
    values: String,
    /// Independent replications per axis value.
    #[arg(long = "reps", visible_alias = "replications", default_value_t = 30)]
    reps: usize,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Number of random instances to draw (seeds 0..instances).
    #[arg(long, default_value_t = 200)]
    instances: u64,
    /// Maximum tasks per instance; hard cap from the exhaustive search.
    #[arg(long, default_value_t = 4)]
    max_n: usize,
}

#[derive(Args)]
struct FitArgs {
    /// Measurement CSV with columns branch,layer,device,data_bits,seconds
    /// (the last column may be named bits_out for device=size rows).
    #[arg(long)]
    samples: PathBuf,
    /// Write the profile fragment here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenWorkloadArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
}

/// Error carrying its process exit code; `main` prints the message to stderr.
#[derive(Debug)]
pub(crate) struct CliError {
    pub(crate) code: u8,
    pub(crate) message: String,
}

impl CliError {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        Self {
            code: 2,
            message: format!("{}: {source}", path.display()),
        }
    }

    fn mismatch(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

fn scenario_code(error: &ScenarioError) -> u8 {
    match error {
        ScenarioError::Io { .. } | ScenarioError::Profile(ProfileError::Io { .. }) => 2,
        _ => 1,
    }
}

impl From<ScenarioError> for CliError {
    fn from(error: ScenarioError) -> Self {
        Self {
            code: scenario_code(&error),
            message: error.to_string(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(error: SimError) -> Self {
        let code = match &error {
            SimError::Scenario(inner) => scenario_code(inner),
            SimError::Csv(inner) if inner.is_io_error() => 2,
            _ => 1,
        };
        Self {
            code,
            message: error.to_string(),
        }
    }
}

impl From<WorkloadError> for CliError {
    fn from(error: WorkloadError) -> Self {
        Self::validation(error.to_string())
    }
}

impl From<ScheduleError> for CliError {
    fn from(error: ScheduleError) -> Self {
        Self::validation(error.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::Fit(args) => cmd_fit(args),
        Command::GenWorkload(args) => cmd_gen_workload(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message);
            ExitCode::from(error.code)
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ORBIT_SIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::validation(format!(
            "ORBIT_SIM_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::validation(format!("ORBIT_SIM_THREADS: {e}")))
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, CliError> {
        let mut scenario = Scenario::load(&self.config)?;
        if let Some(policy) = &self.policy {
            scenario.policy = policy.clone();
        }
        if let Some(seed) = self.seed {
            scenario.workload.seed = seed;
        }
        if let Some(n_tasks) = self.n_tasks {
            scenario.workload.n_tasks = n_tasks;
        }
        if let Some(arrival_prob) = self.arrival_prob {
            scenario.workload.arrival_prob = arrival_prob;
        }
        if let Some(out) = &self.out {
            scenario.output_dir = out.clone();
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Writes through a sibling temp file and renames, so readers never observe
/// a half-written artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Creates the output directory and echoes the effective (post-override)
/// configuration into it for replayability.
fn prepare_output(scenario: &Scenario) -> Result<PathBuf, CliError> {
    let dir = scenario.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_atomic(
        &dir.join("scenario.json"),
        format!("{}\n", scenario.to_json()).as_bytes(),
    )?;
    Ok(dir)
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let scenario = args.scenario.load()?;
    let output = match &args.stream {
        Some(path) => {
            let profile = scenario.load_model()?;
            let gain = scenario.gain_params(&profile)?;
            let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let tasks = read_stream_csv(file)?;
            run_stream(&scenario, &profile, &gain, tasks)?
        }
        None => run(&scenario)?,
    };
    let dir = prepare_output(&scenario)?;
    let mut trace = Vec::new();
    write_trace_csv(&output.trace, &mut trace)?;
    write_atomic(&dir.join("trace.csv"), &trace)?;
    write_atomic(
        &dir.join("metrics.json"),
        format!("{}\n", output.metrics.to_json()).as_bytes(),
    )?;
    println!(
        "{}: committed {}/{} tasks, total gain {:.4}, mean latency {:.3} s -> {}",
        scenario.policy,
        output.metrics.completed,
        output.metrics.arrived,
        output.metrics.total_gain,
        output.metrics.avg_latency,
        dir.display()
    );
    Ok(())
}

fn parse_axis(raw: &str) -> Result<SweepAxis, CliError> {
    raw.parse().map_err(|_| {
        CliError::validation(format!("axis must be n_tasks or arrival_prob, got `{raw}`"))
    })
}

fn parse_values(raw: &str) -> Result<Vec<f64>, CliError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(CliError::validation(
            "values must list at least one axis value",
        ));
    }
    trimmed
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("values: `{part}` is not a number")))
        })
        .collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenario = args.scenario.load()?;
    let axis = parse_axis(&args.axis)?;
    let values = parse_values(&args.values)?;
    let started = Instant::now();
    let result = sweep(&scenario, axis, &values, args.reps)?;
    let dir = prepare_output(&scenario)?;
    let mut bytes = Vec::new();
    write_sweep_csv(&result, &mut bytes)?;
    let path = dir.join("sweep.csv");
    write_atomic(&path, &bytes)?;
    println!(
        "swept {} over {} values x {} policies x {} replications in {:.2?} -> {}",
        axis,
        values.len(),
        orbit_sim::sim::SWEEP_POLICIES.len(),
        args.reps,
        started.elapsed(),
        path.display()
    );
    Ok(())
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<(), CliError> {
    if args.max_n > ORACLE_MAX_TASKS {
        return Err(CliError::validation(format!(
            "max-n {} exceeds the exhaustive-search cap of {ORACLE_MAX_TASKS} tasks",
            args.max_n
        )));
    }
    if args.instances == 0 {
        eprintln!("warning: 0 instances requested, nothing was checked");
        return Ok(());
    }
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..args.instances {
        let instance = random_instance(seed, args.max_n);
        let agreement = check_instance(&instance)?;
        if !agreement.matches(1e-9) {
            let document = serde_json::to_string_pretty(&instance)
                .expect("instance serialization cannot fail");
            println!("{document}");
            return Err(CliError::mismatch(format!(
                "instance seed {seed}: optimizer gain {} != exhaustive gain {} \
                 (replayable instance printed on stdout)",
                agreement.dp_gain, agreement.oracle_gain
            )));
        }
        worst = worst.max((agreement.dp_gain - agreement.oracle_gain).abs());
    }
    println!(
        "oracle-check: optimizer matches exhaustive search on {} instances \
         (max {} tasks, worst |delta| {:.3e}) in {:.2?}",
        args.instances,
        args.max_n,
        worst,
        started.elapsed()
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.samples).map_err(|e| CliError::io(&args.samples, e))?;
    let fragment = fit::fit_fragment(file)?;
    let document = format!(
        "{}\n",
        serde_json::to_string_pretty(&fragment).expect("fragment serialization cannot fail")
    );
    match &args.out {
        Some(path) => {
            write_atomic(path, document.as_bytes())?;
            println!(
                "fitted {} layers -> {}",
                fragment.layer_count(),
                path.display()
            );
        }
        None => print!("{document}"),
    }
    Ok(())
}

fn cmd_gen_workload(args: &GenWorkloadArgs) -> Result<(), CliError> {
    let scenario = args.scenario.load()?;
    let tasks = generate_stream(&scenario.workload)?;
    let dir = prepare_output(&scenario)?;
    let mut bytes = Vec::new();
    write_stream_csv(&tasks, &mut bytes)?;
    let path = dir.join("stream.csv");
    write_atomic(&path, &bytes)?;
    println!("generated {} tasks -> {}", tasks.len(), path.display());
    Ok(())
}
