//! Experiment orchestration: generate a stream, run a policy, report metrics.
//!
//! A run produces the three headline metrics (total gain, completion rate,
//! average latency) plus a per-task trace; a sweep repeats runs across an
//! axis (task count or arrival probability) with paired replications per
//! policy and aggregates mean/std per point. Everything is deterministic
//! given the scenario: replication `r` uses workload seed `base + r`, and
//! parallel results are collected in job order before aggregation.

use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gain::{task_gain, GainParams};
use crate::pipeline::TaskSpec;
use crate::profile::ModelProfile;
use crate::scenario::{Scenario, ScenarioError};
use crate::schedulers::{create_policy, PolicyContext, Schedule, ScheduleError};
use crate::workload::{generate_stream, WorkloadError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("invalid sweep parameter `{field}`: {message}")]
    Sweep { field: String, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn sweep_error(field: &str, message: impl Into<String>) -> SimError {
    SimError::Sweep {
        field: field.into(),
        message: message.into(),
    }
}

/// Headline metrics of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total_gain: f64,
    /// completed / arrived; 0 when nothing arrived.
    pub completion_rate: f64,
    /// Mean of (o3 − arrival) over completed tasks; 0 when none completed.
    pub avg_latency: f64,
    pub completed: usize,
    pub arrived: usize,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialization cannot fail")
    }
}

/// One trace line per arrived task. Skipped (or demoted) tasks keep zero
/// exit/partition and empty stage times; bypassed stages of a committed task
/// inherit their predecessor's time, so all six times are populated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub task_id: u64,
    pub policy: String,
    #[serde(rename = "E")]
    pub exit: usize,
    #[serde(rename = "P")]
    pub partition: usize,
    pub s1: Option<f64>,
    pub o1: Option<f64>,
    pub s2: Option<f64>,
    pub o2: Option<f64>,
    pub s3: Option<f64>,
    pub o3: Option<f64>,
    pub accuracy: f64,
    pub gain: f64,
    pub met_deadline: bool,
}

/// Everything a run yields; the schedule is kept for invariant checks.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tasks: Vec<TaskSpec>,
    pub schedule: Schedule,
    pub metrics: Metrics,
    pub trace: Vec<TraceRow>,
}

/// Generates the scenario's stream and runs its configured policy.
pub fn run(scenario: &Scenario) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    let profile = scenario.load_model()?;
    let gain = scenario.gain_params(&profile)?;
    let tasks = generate_stream(&scenario.workload)?;
    run_stream(scenario, &profile, &gain, tasks)
}

/// Runs the scenario's policy on an externally supplied stream (replay).
pub fn run_stream(
    scenario: &Scenario,
    profile: &ModelProfile,
    gain: &GainParams,
    tasks: Vec<TaskSpec>,
) -> Result<RunOutput, SimError> {
    let policy = create_policy(&scenario.policy, scenario.workload.seed)?;
    let ctx = PolicyContext {
        profile,
        link: &scenario.link,
        gain,
        slot_len: scenario.slot_len(),
        accuracy_floor: scenario.accuracy_floor,
    };
    let schedule = policy.decide(&ctx, &tasks)?;
    let metrics = compute_metrics(&tasks, &schedule);
    let trace = trace_rows(policy.name(), &tasks, &schedule, gain)?;
    Ok(RunOutput {
        tasks,
        schedule,
        metrics,
        trace,
    })
}

pub fn compute_metrics(tasks: &[TaskSpec], schedule: &Schedule) -> Metrics {
    let arrived = tasks.len();
    let completed = schedule.timelines.iter().flatten().count();
    let latency_sum: f64 = schedule.timelines.iter().flatten().map(|t| t.total).sum();
    Metrics {
        total_gain: schedule.total_gain,
        completion_rate: if arrived > 0 {
            completed as f64 / arrived as f64
        } else {
            0.0
        },
        avg_latency: if completed > 0 {
            latency_sum / completed as f64
        } else {
            0.0
        },
        completed,
        arrived,
    }
}

fn trace_rows(
    policy: &str,
    tasks: &[TaskSpec],
    schedule: &Schedule,
    gain: &GainParams,
) -> Result<Vec<TraceRow>, SimError> {
    let mut rows = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let decision = &schedule.decisions[i];
        let row = match &schedule.timelines[i] {
            Some(t) => TraceRow {
                task_id: task.id,
                policy: policy.to_string(),
                exit: decision.exit_index(),
                partition: decision.partition_index(),
                s1: Some(t.s1),
                o1: Some(t.o1),
                s2: Some(t.s2),
                o2: Some(t.o2),
                s3: Some(t.s3),
                o3: Some(t.o3),
                accuracy: t.accuracy,
                gain: task_gain(t.accuracy, gain).map_err(ScheduleError::from)?,
                met_deadline: true,
            },
            None => TraceRow {
                task_id: task.id,
                policy: policy.to_string(),
                exit: 0,
                partition: 0,
                s1: None,
                o1: None,
                s2: None,
                o2: None,
                s3: None,
                o3: None,
                accuracy: 0.0,
                gain: 0.0,
                met_deadline: false,
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Recomputes metrics from a trace and its stream; exact equality with the
/// run's reported metrics is an invariant (same operands, same order).
pub fn metrics_from_trace(tasks: &[TaskSpec], rows: &[TraceRow]) -> Metrics {
    let arrived = rows.len();
    let mut completed = 0usize;
    let mut total_gain = 0.0;
    let mut latency_sum = 0.0;
    for (task, row) in tasks.iter().zip(rows) {
        debug_assert_eq!(task.id, row.task_id);
        total_gain += row.gain;
        if row.met_deadline {
            completed += 1;
            latency_sum += row.o3.expect("completed rows carry o3") - task.arrival;
        }
    }
    Metrics {
        total_gain,
        completion_rate: if arrived > 0 {
            completed as f64 / arrived as f64
        } else {
            0.0
        },
        avg_latency: if completed > 0 {
            latency_sum / completed as f64
        } else {
            0.0
        },
        completed,
        arrived,
    }
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], writer: W) -> Result<(), SimError> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRow>, SimError> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NTasks,
    ArrivalProb,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::NTasks => "n_tasks",
            SweepAxis::ArrivalProb => "arrival_prob",
        }
    }

    fn validate_value(self, value: f64) -> Result<(), SimError> {
        match self {
            SweepAxis::NTasks => {
                if !(value.is_finite() && value >= 1.0 && value.fract() == 0.0) {
                    return Err(sweep_error(
                        "values",
                        format!("n_tasks values must be positive integers, got {value}"),
                    ));
                }
            }
            SweepAxis::ArrivalProb => {
                if !(value.is_finite() && value > 0.0 && value <= 1.0) {
                    return Err(sweep_error(
                        "values",
                        format!("arrival_prob values must lie in (0, 1], got {value}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn apply(self, workload: &mut crate::workload::WorkloadParams, value: f64) {
        match self {
            SweepAxis::NTasks => workload.n_tasks = value as usize,
            SweepAxis::ArrivalProb => workload.arrival_prob = value,
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "n_tasks" => Ok(SweepAxis::NTasks),
            "arrival_prob" => Ok(SweepAxis::ArrivalProb),
            other => Err(sweep_error(
                "axis",
                format!("unknown axis `{other}` (expected n_tasks or arrival_prob)"),
            )),
        }
    }
}

/// Policies a sweep compares (the oracle cannot handle sweep-sized streams).
pub const SWEEP_POLICIES: [&str; 3] = ["dp", "greedy", "random"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepStat {
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single replication.
    pub std: f64,
}

/// Aggregated metrics of one (axis value, policy) point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub value: f64,
    pub policy: String,
    pub replications: usize,
    pub total_gain: SweepStat,
    pub completion_rate: SweepStat,
    pub avg_latency: SweepStat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Sorted by axis value, then policy in `SWEEP_POLICIES` order.
    pub cells: Vec<SweepCell>,
}

/// Runs every (value, policy, replication) combination and aggregates.
///
/// Replications are paired: replication `r` of every policy shares the
/// stream generated with seed `base + r`, so policy comparisons at a point
/// are against identical task sequences.
pub fn sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    replications: usize,
) -> Result<SweepResult, SimError> {
    scenario.validate()?;
    if replications == 0 {
        return Err(sweep_error("replications", "must be at least 1"));
    }
    if values.is_empty() {
        return Err(sweep_error("values", "must not be empty"));
    }
    for &v in values {
        axis.validate_value(v)?;
    }
    let profile = scenario.load_model()?;
    let gain = scenario.gain_params(&profile)?;

    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|vi| (0..replications as u64).map(move |r| (vi, r)))
        .collect();
    let runs: Vec<Vec<Metrics>> = jobs
        .par_iter()
        .map(|&(vi, rep)| {
            let mut workload = scenario.workload;
            axis.apply(&mut workload, values[vi]);
            workload.seed = scenario.workload.seed.wrapping_add(rep);
            let tasks = generate_stream(&workload)?;
            let ctx = PolicyContext {
                profile: &profile,
                link: &scenario.link,
                gain: &gain,
                slot_len: scenario.slot_len(),
                accuracy_floor: scenario.accuracy_floor,
            };
            SWEEP_POLICIES
                .iter()
                .map(|name| {
                    let policy = create_policy(name, workload.seed)?;
                    let schedule = policy.decide(&ctx, &tasks)?;
                    Ok(compute_metrics(&tasks, &schedule))
                })
                .collect::<Result<Vec<Metrics>, SimError>>()
        })
        .collect::<Result<_, SimError>>()?;

    let mut cells = Vec::with_capacity(values.len() * SWEEP_POLICIES.len());
    for (vi, &value) in values.iter().enumerate() {
        for (pi, name) in SWEEP_POLICIES.iter().enumerate() {
            let series: Vec<&Metrics> = (0..replications)
                .map(|r| &runs[vi * replications + r][pi])
                .collect();
            let stat = |f: fn(&Metrics) -> f64| mean_std(series.iter().map(|m| f(m)));
            cells.push(SweepCell {
                value,
                policy: name.to_string(),
                replications,
                total_gain: stat(|m| m.total_gain),
                completion_rate: stat(|m| m.completion_rate),
                avg_latency: stat(|m| m.avg_latency),
            });
        }
    }
    cells.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepResult { axis, cells })
}

fn mean_std(xs: impl Iterator<Item = f64>) -> SweepStat {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    SweepStat { mean, std }
}

/// Long-format CSV: one row per (axis value, policy, statistic).
pub fn write_sweep_csv<W: Write>(result: &SweepResult, writer: W) -> Result<(), SimError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "axis",
        "value",
        "policy",
        "statistic",
        "mean",
        "std",
        "replications",
    ])?;
    for cell in &result.cells {
        let stats = [
            ("total_gain", &cell.total_gain),
            ("completion_rate", &cell.completion_rate),
            ("avg_latency", &cell.avg_latency),
        ];
        for (name, stat) in stats {
            out.write_record([
                result.axis.as_str(),
                &cell.value.to_string(),
                &cell.policy,
                name,
                &stat.mean.to_string(),
                &stat.std.to_string(),
                &cell.replications.to_string(),
            ])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
