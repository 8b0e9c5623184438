//! Exhaustive oracle for small instances, and the dp-vs-oracle harness.
//!
//! The stream decision problem is a group knapsack: each task is a group
//! whose items are the (exit, partition) pairs, with slotted duration as
//! volume and task gain as value. The oracle enumerates every choice vector
//! over `{Skip} ∪ {(E, P)}` and keeps the best one that fits the slot grid
//! under the same serialized semantics the dynamic program uses, which makes
//! it exponential and only usable behind hard guard rails.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    arrival_slot, deadline_slot, dp_decide, replay_with, slots_needed, Policy, PolicyContext,
    Schedule, ScheduleError,
};
use crate::gain::{enumerate_options, task_gain, GainParams};
use crate::link::{LinkParams, BOLTZMANN, LIGHT_SPEED};
use crate::pipeline::{Decision, TaskSpec, TaskType};
use crate::profile::{BranchProfile, LayerProfile, LinearPredictor, ModelProfile};

/// Guard rails bounding the enumeration to at most 12^6 choice vectors.
pub const ORACLE_MAX_TASKS: usize = 6;
pub const ORACLE_MAX_OPTIONS: usize = 12;

/// Exhaustive optimum over every per-task choice vector, evaluated on the
/// same slot grid as the dynamic program (starts rounded up, deadlines down,
/// durations up, tasks serialized in arrival order).
pub fn brute_force_oracle(
    ctx: &PolicyContext<'_>,
    tasks: &[TaskSpec],
) -> Result<Schedule, ScheduleError> {
    let per_task_choices = 1
        + (1..=ctx.profile.branch_count())
            .map(|k| ctx.profile.layer_count(k).unwrap() + 1)
            .sum::<usize>();
    if tasks.len() > ORACLE_MAX_TASKS || per_task_choices > ORACLE_MAX_OPTIONS {
        return Err(ScheduleError::OracleTooLarge {
            tasks: tasks.len(),
            options: per_task_choices,
        });
    }
    if tasks.is_empty() {
        return Ok(Schedule::empty());
    }
    let n = tasks.len();
    let mut options = Vec::with_capacity(n);
    let mut windows = Vec::with_capacity(n);
    for task in tasks {
        let opts: Vec<(Decision, f64, u32)> =
            enumerate_options(ctx.profile, ctx.link, task.task_type, task.data_size)
                .into_iter()
                .map(|o| {
                    Ok((
                        o.decision,
                        task_gain(o.accuracy, ctx.gain)?,
                        slots_needed(o.queue_free_time, ctx.slot_len),
                    ))
                })
                .collect::<Result<_, ScheduleError>>()?;
        options.push(opts);
        windows.push((
            arrival_slot(task.arrival, ctx.slot_len),
            deadline_slot(task, ctx.slot_len),
        ));
    }

    let mut best_gain = f64::NEG_INFINITY;
    let mut best_choice: Vec<usize> = vec![0; n];
    let mut choice = vec![0usize; n];
    'vectors: loop {
        let mut cursor: u32 = 0;
        let mut gain = 0.0;
        let mut feasible = true;
        for i in 0..n {
            if choice[i] == 0 {
                continue;
            }
            let (_, g, tau) = options[i][choice[i] - 1];
            let (a, d) = windows[i];
            let start = a.max(cursor);
            if start.saturating_add(tau) > d {
                feasible = false;
                break;
            }
            cursor = start + tau;
            gain += g;
        }
        if feasible && gain > best_gain {
            best_gain = gain;
            best_choice.copy_from_slice(&choice);
        }
        let mut i = n;
        loop {
            if i == 0 {
                break 'vectors;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < 1 + options[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }

    replay_with(ctx, tasks, |i, _, _| {
        Ok(match best_choice[i] {
            0 => Decision::Skip,
            c => options[i][c - 1].0,
        })
    })
}

pub struct OraclePolicy;

impl Policy for OraclePolicy {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn decide(
        &self,
        ctx: &PolicyContext<'_>,
        tasks: &[TaskSpec],
    ) -> Result<Schedule, ScheduleError> {
        brute_force_oracle(ctx, tasks)
    }
}

/// A self-contained small scenario for equivalence checking; serializable so
/// a failing case can be reported verbatim and replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInstance {
    pub profile: ModelProfile,
    pub link: LinkParams,
    pub gain: GainParams,
    pub slot_len: f64,
    pub tasks: Vec<TaskSpec>,
}

/// Deterministically generates a random guard-rail-sized instance: at most
/// `max_n` tasks, up to 3 branches of up to 3 layers (capped so the option
/// count fits the oracle), and every deadline within a 60-slot horizon.
pub fn random_instance(seed: u64, max_n: usize) -> OracleInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let branch_count = rng.random_range(1..=3usize);
    let layer_counts: Vec<usize> = loop {
        let counts: Vec<usize> = (0..branch_count)
            .map(|_| rng.random_range(1..=3usize))
            .collect();
        let per_task_choices = 1 + counts.iter().sum::<usize>() + branch_count;
        if per_task_choices <= ORACLE_MAX_OPTIONS {
            break counts;
        }
    };
    let mut accuracy = rng.random_range(0.25..0.45);
    let branches = layer_counts
        .iter()
        .map(|&layers| {
            let branch = BranchProfile {
                accuracy,
                layers: (0..layers)
                    .map(|_| LayerProfile {
                        time_heo: LinearPredictor::new(
                            rng.random_range(0.0..2e-7),
                            rng.random_range(0.1..1.2),
                        ),
                        time_leo: LinearPredictor::new(
                            rng.random_range(0.0..1e-6),
                            rng.random_range(0.5..4.0),
                        ),
                        out_size: LinearPredictor::new(
                            rng.random_range(0.0..2.0),
                            rng.random_range(1e4..2e6),
                        ),
                    })
                    .collect(),
            };
            accuracy += rng.random_range(0.05..0.15);
            branch
        })
        .collect();
    let profile = ModelProfile {
        branches,
        input_size: LinearPredictor::new(rng.random_range(0.5..1.5), 0.0),
    };
    profile.validate().expect("generated profile is valid");

    // Fix the SNR first, then back out the transmit power, so the rate stays
    // in a regime where transfers are neither free nor hopeless.
    let bandwidth_hz = rng.random_range(1e5..1e7);
    let tx_gain = 10f64.powf(rng.random_range(2.0..5.0));
    let rx_gain = 10f64.powf(rng.random_range(2.0..5.0));
    let carrier_hz = rng.random_range(1e10..4e10);
    let distance_m = rng.random_range(1e6..1e8);
    let noise_temp_k = rng.random_range(100.0..600.0);
    let snr_factor = rng.random_range(1.0..20.0);
    let target_snr = rng.random_range(0.5..50.0);
    let path = 4.0 * std::f64::consts::PI * distance_m * carrier_hz / LIGHT_SPEED;
    let noise = BOLTZMANN * noise_temp_k * bandwidth_hz * snr_factor;
    let link = LinkParams {
        bandwidth_hz,
        tx_power_w: target_snr * noise * path * path / (tx_gain * rx_gain),
        tx_gain,
        rx_gain,
        carrier_hz,
        distance_m,
        noise_temp_k,
        snr_factor,
    };

    let gain = GainParams {
        alpha: rng.random_range(0.05..0.5),
        beta: rng.random_range(4.0..32.0),
        a_min: profile.a_min(),
    };

    let slot_len = rng.random_range(1.0..4.0);
    let n = rng.random_range(1..=max_n.max(1));
    let mut tasks = Vec::with_capacity(n);
    let mut slot: u64 = rng.random_range(0..3);
    for id in 0..n {
        let window_slots = rng.random_range(2..12u32);
        let task_type = if rng.random::<f64>() < 0.3 {
            TaskType::HeoImaging
        } else {
            TaskType::LeoImaging
        };
        tasks.push(TaskSpec {
            id: id as u64,
            task_type,
            origin_leo: rng.random_range(0..2),
            data_size: rng.random_range(5e4..2e6),
            deadline_rel: window_slots as f64 * slot_len,
            arrival: slot as f64 * slot_len,
        });
        slot += rng.random_range(1..5u64);
    }
    OracleInstance {
        profile,
        link,
        gain,
        slot_len,
        tasks,
    }
}

/// Gains of the dynamic program and the oracle on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleAgreement {
    pub dp_gain: f64,
    pub oracle_gain: f64,
}

impl OracleAgreement {
    pub fn matches(&self, tolerance: f64) -> bool {
        (self.dp_gain - self.oracle_gain).abs() <= tolerance
    }
}

/// Runs both solvers on an instance.
pub fn check_instance(instance: &OracleInstance) -> Result<OracleAgreement, ScheduleError> {
    let ctx = PolicyContext {
        profile: &instance.profile,
        link: &instance.link,
        gain: &instance.gain,
        slot_len: instance.slot_len,
        accuracy_floor: 0.0,
    };
    let dp = dp_decide(&ctx, &instance.tasks)?;
    let oracle = brute_force_oracle(&ctx, &instance.tasks)?;
    Ok(OracleAgreement {
        dp_gain: dp.total_gain,
        oracle_gain: oracle.total_gain,
    })
}
