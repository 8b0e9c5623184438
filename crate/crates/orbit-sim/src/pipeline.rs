//! Three-stage task pipeline: stage times, timeline assembly, queue coupling.
//!
//! A task runs through up to three processing stages. For a LEO-originated
//! task: layers 1..=P on the origin LEO (stage 1), a feature-map transfer,
//! then layers P+1..=M_E on the HEO (stage 2). An HEO-originated task mirrors
//! this: layers 1..=P on the HEO (stage 2), a transfer, then the tail on a
//! LEO (stage 3). Each satellite serves its stage FCFS; a stage a decision
//! never touches (e.g. the HEO when the task runs fully local) neither waits
//! on nor occupies that satellite's queue.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::LinkParams;
use crate::profile::{Device, ModelProfile, ProfileError};

/// Where a task's source data originates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "leo")]
    LeoImaging,
    #[serde(rename = "heo")]
    HeoImaging,
}

impl std::fmt::Display for TaskType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaskType::LeoImaging => write!(f, "leo"),
            TaskType::HeoImaging => write!(f, "heo"),
        }
    }
}

impl std::str::FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leo" => Ok(TaskType::LeoImaging),
            "heo" => Ok(TaskType::HeoImaging),
            other => Err(format!("unknown task type `{other}` (expected leo|heo)")),
        }
    }
}

/// One inference task of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u64,
    pub task_type: TaskType,
    /// The LEO tied to this task: its source for LEO imaging, the satellite
    /// finishing the split model for HEO imaging.
    pub origin_leo: usize,
    /// Source data size in bits.
    pub data_size: f64,
    /// Relative deadline in seconds; completion must satisfy
    /// `o3 <= arrival + deadline_rel`.
    pub deadline_rel: f64,
    /// Absolute arrival time in seconds.
    pub arrival: f64,
}

impl TaskSpec {
    pub fn deadline(&self) -> f64 {
        self.arrival + self.deadline_rel
    }
}

/// Scheduling decision for one task: skip it, or run branch `exit` split at
/// layer `partition` (0 = fully remote, `M_exit` = fully local to the origin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Skip,
    Run { exit: usize, partition: usize },
}

impl Decision {
    pub fn is_skip(&self) -> bool {
        matches!(self, Decision::Skip)
    }

    /// Exit index with 0 encoding Skip (the reserved failure exit).
    pub fn exit_index(&self) -> usize {
        match self {
            Decision::Skip => 0,
            Decision::Run { exit, .. } => *exit,
        }
    }

    pub fn partition_index(&self) -> usize {
        match self {
            Decision::Skip => 0,
            Decision::Run { partition, .. } => *partition,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot compute stage times for a Skip decision")]
    SkipDecision,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Which satellites a decision actually occupies.
///
/// `leo_stage1` and `leo_stage3` are mutually exclusive (stage 1 belongs to
/// LEO-originated tasks, stage 3 to HEO-originated ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageActivity {
    pub leo_stage1: bool,
    pub heo: bool,
    pub leo_stage3: bool,
}

/// Per-stage processing and transfer durations of one decision, plus the
/// stages it occupies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTimes {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub tr1: f64,
    pub tr2: f64,
    pub activity: StageActivity,
}

impl StageTimes {
    /// Queue-free end-to-end duration.
    pub fn makespan(&self) -> f64 {
        self.p1 + self.tr1 + self.p2 + self.tr2 + self.p3
    }
}

/// The six time points of a scheduled task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskTimeline {
    pub s1: f64,
    pub o1: f64,
    pub s2: f64,
    pub o2: f64,
    pub s3: f64,
    pub o3: f64,
    /// End-to-end latency `o3 - arrival`.
    pub total: f64,
    /// Accuracy of the chosen exit branch.
    pub accuracy: f64,
    pub activity: StageActivity,
}

/// FCFS availability of every satellite: the time each becomes free for its
/// next task stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueState {
    leo_ready: Vec<f64>,
    heo_ready: f64,
}

impl QueueState {
    pub fn new() -> Self {
        Self::default()
    }

    /// When LEO `leo` finishes its last committed stage (0.0 if never used).
    pub fn leo_ready(&self, leo: usize) -> f64 {
        self.leo_ready.get(leo).copied().unwrap_or(0.0)
    }

    pub fn heo_ready(&self) -> f64 {
        self.heo_ready
    }

    fn set_leo_ready(&mut self, leo: usize, t: f64) {
        if self.leo_ready.len() <= leo {
            self.leo_ready.resize(leo + 1, 0.0);
        }
        self.leo_ready[leo] = t;
    }

    /// Records a scheduled task's resource usage: each stage the task
    /// occupied pushes that satellite's ready time to the stage's end.
    /// Stages the decision bypassed leave their queue untouched, so an
    /// untouched satellite never waits on a task that ran elsewhere.
    pub fn commit(&mut self, task: &TaskSpec, timeline: &TaskTimeline) {
        if timeline.activity.leo_stage1 {
            self.set_leo_ready(task.origin_leo, timeline.o1);
        }
        if timeline.activity.heo {
            self.heo_ready = timeline.o2;
        }
        if timeline.activity.leo_stage3 {
            self.set_leo_ready(task.origin_leo, timeline.o3);
        }
    }
}

/// Computes the stage durations of a non-Skip decision.
///
/// Transfers carry the feature map at the partition point (the raw input for
/// partition 0); a fully local split (`partition == M_exit`) transfers
/// nothing and never touches the remote satellite.
pub fn stage_times(
    profile: &ModelProfile,
    task: &TaskSpec,
    decision: &Decision,
    link: &LinkParams,
) -> Result<StageTimes, PipelineError> {
    let &Decision::Run { exit, partition } = decision else {
        return Err(PipelineError::SkipDecision);
    };
    let m_e = profile.layer_count(exit)?;
    if partition > m_e {
        return Err(ProfileError::IndexOutOfRange {
            what: "partition",
            index: partition,
            max: m_e,
        }
        .into());
    }
    let d = task.data_size;
    let remote = partition < m_e;
    let transfer = if remote {
        link.transfer_time(profile.predict_output_size(exit, partition, d)?)
    } else {
        0.0
    };
    let sum_times = |device: Device, layers: std::ops::RangeInclusive<usize>| {
        layers
            .map(|l| profile.predict_layer_time(device, exit, l, d).unwrap())
            .sum::<f64>()
    };
    Ok(match task.task_type {
        TaskType::LeoImaging => StageTimes {
            p1: sum_times(Device::Leo, 1..=partition),
            p2: sum_times(Device::Heo, partition + 1..=m_e),
            p3: 0.0,
            tr1: transfer,
            tr2: 0.0,
            activity: StageActivity {
                leo_stage1: partition >= 1,
                heo: remote,
                leo_stage3: false,
            },
        },
        TaskType::HeoImaging => StageTimes {
            p1: 0.0,
            p2: sum_times(Device::Heo, 1..=partition),
            p3: sum_times(Device::Leo, partition + 1..=m_e),
            tr1: 0.0,
            tr2: transfer,
            activity: StageActivity {
                leo_stage1: false,
                heo: partition >= 1,
                leo_stage3: remote,
            },
        },
    })
}

/// Chains the stage durations through the FCFS queues into absolute time
/// points. Active stages wait for their satellite; bypassed stages pass
/// through instantly.
pub fn assemble_timeline(
    stage: &StageTimes,
    arrival: f64,
    origin_leo: usize,
    accuracy: f64,
    queues: &QueueState,
) -> TaskTimeline {
    let a = stage.activity;
    let s1 = if a.leo_stage1 {
        arrival.max(queues.leo_ready(origin_leo))
    } else {
        arrival
    };
    let o1 = s1 + stage.p1;
    let s2 = if a.heo {
        (o1 + stage.tr1).max(queues.heo_ready())
    } else {
        o1 + stage.tr1
    };
    let o2 = s2 + stage.p2;
    let s3 = if a.leo_stage3 {
        (o2 + stage.tr2).max(queues.leo_ready(origin_leo))
    } else {
        o2 + stage.tr2
    };
    let o3 = s3 + stage.p3;
    TaskTimeline {
        s1,
        o1,
        s2,
        o2,
        s3,
        o3,
        total: o3 - arrival,
        accuracy,
        activity: a,
    }
}

/// Full timeline of one task under a non-Skip decision against the current
/// queues. Does not mutate the queues; see [`QueueState::commit`].
pub fn schedule_task(
    profile: &ModelProfile,
    task: &TaskSpec,
    decision: &Decision,
    queues: &QueueState,
    link: &LinkParams,
) -> Result<TaskTimeline, PipelineError> {
    let stage = stage_times(profile, task, decision, link)?;
    let accuracy = profile.accuracy(decision.exit_index())?;
    Ok(assemble_timeline(
        &stage,
        task.arrival,
        task.origin_leo,
        accuracy,
        queues,
    ))
}
