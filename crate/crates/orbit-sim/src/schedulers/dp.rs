//! Offline dynamic program over the slot grid.
//!
//! `G(i, j)` is the best total gain of tasks `1..=i` when everything finishes
//! by slot `j`. Each task contributes either nothing (skip) or the gain of
//! one (exit, partition) option run in `tau` whole slots somewhere inside
//! `[arrival slot, deadline slot]`, serialized after its predecessors:
//!
//! `G(i, j) = max( G(i-1, j),  max_o { gain_o + G(i-1, min(j, d_i) - tau_o) } )`
//!
//! Option durations are queue-free pipeline times rounded UP to whole slots,
//! so any plan the table accepts stays feasible when the backtracked
//! decisions are replayed through the real continuous-time pipeline.

use super::{
    arrival_slot, deadline_slot, replay_with, slots_needed, Policy, PolicyContext, Schedule,
    ScheduleError,
};
use crate::gain::{enumerate_options, task_gain};
use crate::pipeline::{Decision, TaskSpec};

/// One schedulable option of a task on the slot grid.
#[derive(Debug, Clone, Copy)]
struct DpOption {
    decision: Decision,
    gain: f64,
    /// Whole slots the option occupies.
    tau: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    Skip,
    Sched { start: u32, option: u16 },
}

/// The filled value table plus the backtracking choices.
#[derive(Debug)]
pub struct DpTable {
    tasks: usize,
    width: usize,
    values: Vec<f64>,
    choice: Vec<Choice>,
}

impl DpTable {
    /// Best gain of tasks `1..=task` finishing by `slot` (`task` 0 is the
    /// empty prefix).
    pub fn value(&self, task: usize, slot: usize) -> f64 {
        self.values[task * self.width + slot]
    }

    /// Last slot of the grid.
    pub fn horizon(&self) -> usize {
        self.width - 1
    }

    pub fn task_count(&self) -> usize {
        self.tasks
    }

    fn choice(&self, task: usize, slot: usize) -> Choice {
        self.choice[(task - 1) * self.width + slot]
    }
}

pub(crate) struct DpRun {
    pub(crate) table: DpTable,
    options: Vec<Vec<DpOption>>,
}

/// Keeps only options that can win some cell: sorted best-first by (gain,
/// time), an option matters only if it is strictly faster (in slots) than
/// every better one.
fn option_frontier(
    ctx: &PolicyContext<'_>,
    task: &TaskSpec,
    window: u32,
) -> Result<Vec<DpOption>, ScheduleError> {
    let mut frontier: Vec<DpOption> = Vec::new();
    let mut best_tau = u32::MAX;
    for o in enumerate_options(ctx.profile, ctx.link, task.task_type, task.data_size) {
        let tau = slots_needed(o.queue_free_time, ctx.slot_len);
        if tau >= best_tau || tau > window {
            continue;
        }
        best_tau = tau;
        frontier.push(DpOption {
            decision: o.decision,
            gain: task_gain(o.accuracy, ctx.gain)?,
            tau,
        });
    }
    Ok(frontier)
}

pub(crate) fn build_table(
    ctx: &PolicyContext<'_>,
    tasks: &[TaskSpec],
) -> Result<DpRun, ScheduleError> {
    let n = tasks.len();
    let mut windows = Vec::with_capacity(n);
    let mut options = Vec::with_capacity(n);
    let mut horizon: u32 = 0;
    for task in tasks {
        let a = arrival_slot(task.arrival, ctx.slot_len);
        let d = deadline_slot(task, ctx.slot_len);
        windows.push((a, d));
        horizon = horizon.max(d);
        options.push(option_frontier(ctx, task, d.saturating_sub(a))?);
    }
    let width = horizon as usize + 1;
    let mut values = vec![0.0f64; (n + 1) * width];
    let mut choice = vec![Choice::Skip; n * width];
    for i in 1..=n {
        let (a, d) = windows[i - 1];
        let (prev_row, cur_row) = values.split_at_mut(i * width);
        let prev = &prev_row[(i - 1) * width..];
        let cur = &mut cur_row[..width];
        let choice_row = &mut choice[(i - 1) * width..i * width];
        for j in 0..width {
            let jd = (j as u32).min(d);
            let mut best = prev[j];
            let mut pick = Choice::Skip;
            for (oi, o) in options[i - 1].iter().enumerate() {
                if jd < a + o.tau {
                    continue;
                }
                let start = jd - o.tau;
                let v = o.gain + prev[start as usize];
                if v > best {
                    best = v;
                    pick = Choice::Sched {
                        start,
                        option: oi as u16,
                    };
                }
            }
            cur[j] = best;
            choice_row[j] = pick;
        }
    }
    Ok(DpRun {
        table: DpTable {
            tasks: n,
            width,
            values,
            choice,
        },
        options,
    })
}

fn backtrack(run: &DpRun) -> Vec<Decision> {
    let mut decisions = vec![Decision::Skip; run.table.tasks];
    let mut j = run.table.horizon();
    for i in (1..=run.table.tasks).rev() {
        match run.table.choice(i, j) {
            Choice::Skip => {}
            Choice::Sched { start, option } => {
                decisions[i - 1] = run.options[i - 1][option as usize].decision;
                j = start as usize;
            }
        }
    }
    decisions
}

/// Offline task-gain maximization: fills the slot-indexed table over the
/// whole (forecast) stream, backtracks the per-task decisions, and replays
/// them through the continuous pipeline.
pub fn dp_decide(ctx: &PolicyContext<'_>, tasks: &[TaskSpec]) -> Result<Schedule, ScheduleError> {
    if tasks.is_empty() {
        return Ok(Schedule::empty());
    }
    let run = build_table(ctx, tasks)?;
    let decisions = backtrack(&run);
    replay_with(ctx, tasks, |i, _, _| Ok(decisions[i]))
}

pub struct DpPolicy;

impl Policy for DpPolicy {
    fn name(&self) -> &'static str {
        "dp"
    }

    fn decide(
        &self,
        ctx: &PolicyContext<'_>,
        tasks: &[TaskSpec],
    ) -> Result<Schedule, ScheduleError> {
        dp_decide(ctx, tasks)
    }
}
