//! Decision policies behind a common trait, selected by name at runtime.
//!
//! Four strategies ship: the offline slot-indexed dynamic program (`dp`), the
//! online per-task point selector (`greedy`), a uniform `random` baseline,
//! and an exhaustive `oracle` for small instances. Every policy produces a
//! [`Schedule`] whose committed timelines all meet their deadlines: decisions
//! that miss on replay are demoted to Skip and never occupy a satellite.

mod dp;
mod greedy;
mod oracle;
mod random;

pub use dp::{dp_decide, DpPolicy, DpTable};
pub use greedy::{greedy_decide, select_points, GreedyPolicy};
pub use oracle::{
    brute_force_oracle, check_instance, random_instance, OracleAgreement, OracleInstance,
    OraclePolicy, ORACLE_MAX_OPTIONS, ORACLE_MAX_TASKS,
};
pub use random::{random_decide, RandomPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gain::{task_gain, GainError, GainParams};
use crate::link::LinkParams;
use crate::pipeline::{self, Decision, PipelineError, QueueState, TaskSpec, TaskTimeline};
use crate::profile::ModelProfile;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("unknown policy `{0}` (expected one of dp, greedy, random, oracle)")]
    UnknownPolicy(String),
    #[error(
        "instance too large for the exhaustive oracle: {tasks} tasks with up to {options} \
         choices per task (limits: {ORACLE_MAX_TASKS} tasks, {ORACLE_MAX_OPTIONS} choices)"
    )]
    OracleTooLarge { tasks: usize, options: usize },
}

/// Everything a policy needs besides the task stream itself.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub profile: &'a ModelProfile,
    pub link: &'a LinkParams,
    pub gain: &'a GainParams,
    /// Slot length of the DP time grid, in seconds.
    pub slot_len: f64,
    /// Minimum branch accuracy the greedy selector will accept.
    pub accuracy_floor: f64,
}

/// A policy's output for a whole stream: one decision per task, the realized
/// timeline of every committed task, and the summed gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub decisions: Vec<Decision>,
    pub timelines: Vec<Option<TaskTimeline>>,
    pub total_gain: f64,
}

impl Schedule {
    pub fn empty() -> Self {
        Self {
            decisions: Vec::new(),
            timelines: Vec::new(),
            total_gain: 0.0,
        }
    }
}

/// A named decision strategy over a task stream.
pub trait Policy: Send + Sync {
    fn name(&self) -> &'static str;
    fn decide(
        &self,
        ctx: &PolicyContext<'_>,
        tasks: &[TaskSpec],
    ) -> Result<Schedule, ScheduleError>;
}

type PolicyConstructor = fn(u64) -> Box<dyn Policy>;

/// Name-to-constructor table; the seed only matters for `random`.
pub const POLICY_REGISTRY: &[(&str, PolicyConstructor)] = &[
    ("dp", |_| Box::new(DpPolicy)),
    ("greedy", |_| Box::new(GreedyPolicy)),
    ("random", |seed| Box::new(RandomPolicy::new(seed))),
    ("oracle", |_| Box::new(OraclePolicy)),
];

/// Instantiates the policy registered under `name`.
pub fn create_policy(name: &str, seed: u64) -> Result<Box<dyn Policy>, ScheduleError> {
    POLICY_REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make(seed))
        .ok_or_else(|| ScheduleError::UnknownPolicy(name.to_string()))
}

pub fn policy_names() -> Vec<&'static str> {
    POLICY_REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Replays per-task decisions against live FCFS queues in arrival order.
///
/// `decide` is consulted task by task with the queue state at that moment. A
/// non-Skip decision is committed only when its timeline meets the deadline;
/// otherwise the task is demoted to Skip, contributing no gain and holding no
/// resources. This is the single code path every policy's schedule goes
/// through, so the deadline invariant holds uniformly.
pub(crate) fn replay_with<F>(
    ctx: &PolicyContext<'_>,
    tasks: &[TaskSpec],
    mut decide: F,
) -> Result<Schedule, ScheduleError>
where
    F: FnMut(usize, &TaskSpec, &QueueState) -> Result<Decision, ScheduleError>,
{
    let mut queues = QueueState::new();
    let mut decisions = Vec::with_capacity(tasks.len());
    let mut timelines = Vec::with_capacity(tasks.len());
    let mut total_gain = 0.0;
    for (i, task) in tasks.iter().enumerate() {
        debug_assert!(
            i == 0 || tasks[i - 1].arrival <= task.arrival,
            "tasks must be arrival-sorted"
        );
        let decision = decide(i, task, &queues)?;
        if decision.is_skip() {
            decisions.push(Decision::Skip);
            timelines.push(None);
            continue;
        }
        let timeline = pipeline::schedule_task(ctx.profile, task, &decision, &queues, ctx.link)?;
        if timeline.o3 <= task.deadline() {
            queues.commit(task, &timeline);
            total_gain += task_gain(timeline.accuracy, ctx.gain)?;
            decisions.push(decision);
            timelines.push(Some(timeline));
        } else {
            decisions.push(Decision::Skip);
            timelines.push(None);
        }
    }
    Ok(Schedule {
        decisions,
        timelines,
        total_gain,
    })
}

/// Slot grid helpers shared by the DP and the oracle so both quantize time
/// identically: starts round up, deadlines round down, durations round up.
pub(crate) fn arrival_slot(arrival: f64, slot_len: f64) -> u32 {
    saturating_slot((arrival / slot_len).ceil())
}

pub(crate) fn deadline_slot(task: &TaskSpec, slot_len: f64) -> u32 {
    saturating_slot((task.deadline() / slot_len).floor())
}

pub(crate) fn slots_needed(duration: f64, slot_len: f64) -> u32 {
    saturating_slot((duration / slot_len).ceil())
}

fn saturating_slot(x: f64) -> u32 {
    if x >= u32::MAX as f64 {
        u32::MAX
    } else {
        x.max(0.0) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_all_policies() {
        assert_eq!(policy_names(), vec!["dp", "greedy", "random", "oracle"]);
        for name in policy_names() {
            assert_eq!(create_policy(name, 7).unwrap().name(), name);
        }
        assert!(matches!(
            create_policy("optimal", 0),
            Err(ScheduleError::UnknownPolicy(_))
        ));
    }

    #[test]
    fn slot_rounding_directions() {
        assert_eq!(arrival_slot(0.0, 3.0), 0);
        assert_eq!(arrival_slot(6.0, 3.0), 2);
        assert_eq!(arrival_slot(6.1, 3.0), 3);
        let task = TaskSpec {
            id: 0,
            task_type: crate::pipeline::TaskType::LeoImaging,
            origin_leo: 0,
            data_size: 1.0,
            deadline_rel: 7.0,
            arrival: 3.0,
        };
        assert_eq!(deadline_slot(&task, 3.0), 3);
        assert_eq!(slots_needed(0.0, 3.0), 0);
        assert_eq!(slots_needed(2.9, 3.0), 1);
        assert_eq!(slots_needed(3.0, 3.0), 1);
        assert_eq!(slots_needed(3.1, 3.0), 2);
    }
}
