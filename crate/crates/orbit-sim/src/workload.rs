//! Seeded synthetic task-stream generation.
//!
//! Arrivals follow a Bernoulli process: the generator walks time slots and
//! each slot independently spawns at most one task with probability
//! `arrival_prob` until `n_tasks` exist. Task size is an integer image count
//! drawn from a clamped normal distribution times `bits_per_image`; the
//! relative deadline is proportional to size (`deadline = k_latency * size`).

use std::io;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{TaskSpec, TaskType};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("stream csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("stream csv row {row}: {message}")]
    Row { row: usize, message: String },
}

fn validation(field: &str, message: impl Into<String>) -> WorkloadError {
    WorkloadError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Generation parameters for one task stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadParams {
    /// Per-slot spawn probability `p`.
    pub arrival_prob: f64,
    /// Slot length in seconds; arrivals land on slot boundaries.
    pub slot_len: f64,
    /// Number of tasks to generate.
    pub n_tasks: usize,
    pub images_mean: f64,
    pub images_std: f64,
    pub images_min: u32,
    pub images_max: u32,
    pub bits_per_image: f64,
    /// Deadline proportionality constant in seconds per bit.
    pub k_latency: f64,
    /// Number of LEO satellites originating (or assisting) tasks.
    pub leo_count: usize,
    /// Probability that a task originates on the HEO.
    pub heo_task_fraction: f64,
    pub seed: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            arrival_prob: 0.1,
            slot_len: 3.0,
            n_tasks: 100,
            // The source gives only the [1, 10] image range; mean/std are
            // our assumption, centered on that range.
            images_mean: 5.5,
            images_std: 2.0,
            images_min: 1,
            images_max: 10,
            // One 32x32 RGB byte image.
            bits_per_image: 24576.0,
            // 2^-12 s/bit: a 1-image task gets a 6 s (two-slot) deadline,
            // the median task roughly 11 slots.
            k_latency: 6.0 / 24576.0,
            leo_count: 3,
            heo_task_fraction: 0.2,
            seed: 42,
        }
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if !(self.arrival_prob > 0.0 && self.arrival_prob <= 1.0) {
            return Err(validation(
                "arrival_prob",
                format!("must lie in (0, 1], got {}", self.arrival_prob),
            ));
        }
        if !(self.slot_len.is_finite() && self.slot_len > 0.0) {
            return Err(validation(
                "slot_len",
                format!("must be positive, got {}", self.slot_len),
            ));
        }
        if !self.images_mean.is_finite() || !self.images_std.is_finite() || self.images_std < 0.0 {
            return Err(validation(
                "images_mean/images_std",
                "mean must be finite and std finite and non-negative",
            ));
        }
        if self.images_min < 1 {
            return Err(validation("images_min", "must be at least 1"));
        }
        if self.images_max < self.images_min {
            return Err(validation(
                "images_max",
                format!(
                    "must be >= images_min, got {} < {}",
                    self.images_max, self.images_min
                ),
            ));
        }
        if !(self.bits_per_image.is_finite() && self.bits_per_image > 0.0) {
            return Err(validation("bits_per_image", "must be positive"));
        }
        if !(self.k_latency.is_finite() && self.k_latency > 0.0) {
            return Err(validation("k_latency", "must be positive"));
        }
        if self.leo_count == 0 {
            return Err(validation("leo_count", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.heo_task_fraction) {
            return Err(validation(
                "heo_task_fraction",
                format!("must lie in [0, 1], got {}", self.heo_task_fraction),
            ));
        }
        Ok(())
    }
}

/// Generates the task stream determined by `params` (and nothing else).
///
/// Per spawned task the draws are, in order: image count, origin LEO, task
/// type. Arrival times strictly increase by at least one slot.
pub fn generate_stream(params: &WorkloadParams) -> Result<Vec<TaskSpec>, WorkloadError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let images = Normal::new(params.images_mean, params.images_std)
        .map_err(|e| validation("images_std", e.to_string()))?;
    let mut tasks = Vec::with_capacity(params.n_tasks);
    let mut slot: u64 = 0;
    while tasks.len() < params.n_tasks {
        let spawned = rng.random::<f64>() < params.arrival_prob;
        if spawned {
            let count = images
                .sample(&mut rng)
                .round()
                .clamp(params.images_min as f64, params.images_max as f64);
            let origin_leo = rng.random_range(0..params.leo_count);
            let task_type = if rng.random::<f64>() < params.heo_task_fraction {
                TaskType::HeoImaging
            } else {
                TaskType::LeoImaging
            };
            let data_size = count * params.bits_per_image;
            tasks.push(TaskSpec {
                id: tasks.len() as u64,
                task_type,
                origin_leo,
                data_size,
                deadline_rel: params.k_latency * data_size,
                arrival: slot as f64 * params.slot_len,
            });
        }
        slot += 1;
    }
    Ok(tasks)
}

/// Row format of the stream CSV (`id,type,origin,data_bits,deadline_s,arrival_s`).
#[derive(Debug, Serialize, Deserialize)]
struct StreamRow {
    id: u64,
    #[serde(rename = "type")]
    task_type: TaskType,
    origin: usize,
    data_bits: f64,
    deadline_s: f64,
    arrival_s: f64,
}

/// Writes a stream as CSV for later replay.
pub fn write_stream_csv<W: io::Write>(tasks: &[TaskSpec], writer: W) -> Result<(), WorkloadError> {
    let mut out = csv::Writer::from_writer(writer);
    for t in tasks {
        out.serialize(StreamRow {
            id: t.id,
            task_type: t.task_type,
            origin: t.origin_leo,
            data_bits: t.data_size,
            deadline_s: t.deadline_rel,
            arrival_s: t.arrival,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a stream CSV back into arrival-ordered tasks.
pub fn read_stream_csv<R: io::Read>(reader: R) -> Result<Vec<TaskSpec>, WorkloadError> {
    let mut tasks = Vec::new();
    let mut last_arrival = f64::NEG_INFINITY;
    for (i, row) in csv::Reader::from_reader(reader).deserialize().enumerate() {
        let row: StreamRow = row?;
        let fail = |message: String| WorkloadError::Row {
            row: i + 1,
            message,
        };
        if !(row.data_bits.is_finite() && row.data_bits > 0.0) {
            return Err(fail(format!(
                "data_bits must be positive, got {}",
                row.data_bits
            )));
        }
        if !(row.deadline_s.is_finite() && row.deadline_s > 0.0) {
            return Err(fail(format!(
                "deadline_s must be positive, got {}",
                row.deadline_s
            )));
        }
        if !(row.arrival_s.is_finite() && row.arrival_s >= 0.0) {
            return Err(fail(format!(
                "arrival_s must be non-negative, got {}",
                row.arrival_s
            )));
        }
        if row.arrival_s < last_arrival {
            return Err(fail("arrival times must be non-decreasing".into()));
        }
        last_arrival = row.arrival_s;
        tasks.push(TaskSpec {
            id: row.id,
            task_type: row.task_type,
            origin_leo: row.origin,
            data_size: row.data_bits,
            deadline_rel: row.deadline_s,
            arrival: row.arrival_s,
        });
    }
    Ok(tasks)
}
