//! Online per-task point selection and the greedy baseline built on it.
//!
//! For one task against the live queues, each branch is scored by its
//! fastest partition; the deepest branch whose fastest completion meets the
//! deadline (and whose accuracy clears the floor) wins. The greedy policy
//! applies this to every task in arrival order with no lookahead.

use super::{replay_with, Policy, PolicyContext, Schedule, ScheduleError};
use crate::link::LinkParams;
use crate::pipeline::{self, Decision, QueueState, TaskSpec};
use crate::profile::ModelProfile;

/// `(accuracy, o3, exit, partition)` ordered by the global tie-break rule.
type Candidate = (f64, f64, usize, usize);

fn better(a: &Candidate, b: &Candidate) -> bool {
    (b.0, a.1, a.2, a.3) < (a.0, b.1, b.2, b.3)
}

/// Picks the (exit, partition) for one task given the committed queue state:
/// per branch the partition with the earliest completion, across branches the
/// highest accuracy whose completion meets the deadline. Skip when no branch
/// qualifies.
pub fn select_points(
    task: &TaskSpec,
    queues: &QueueState,
    profile: &ModelProfile,
    link: &LinkParams,
    accuracy_floor: f64,
) -> Decision {
    let mut best: Option<Candidate> = None;
    for exit in (1..=profile.branch_count()).rev() {
        let accuracy = profile.accuracy(exit).unwrap();
        if accuracy < accuracy_floor {
            continue;
        }
        let mut fastest: Option<(f64, usize)> = None;
        for partition in 0..=profile.layer_count(exit).unwrap() {
            let decision = Decision::Run { exit, partition };
            let o3 = pipeline::schedule_task(profile, task, &decision, queues, link)
                .expect("enumerated decision is structurally valid")
                .o3;
            if fastest.is_none_or(|(t, _)| o3 < t) {
                fastest = Some((o3, partition));
            }
        }
        let (o3, partition) = fastest.expect("branches have at least one partition");
        if o3 > task.deadline() {
            continue;
        }
        let candidate = (accuracy, o3, exit, partition);
        if best.is_none_or(|b| better(&candidate, &b)) {
            best = Some(candidate);
        }
    }
    best.map_or(Decision::Skip, |(_, _, exit, partition)| Decision::Run {
        exit,
        partition,
    })
}

/// Arrival-order greedy: decide each task with [`select_points`] against the
/// live queues and commit immediately.
pub fn greedy_decide(
    ctx: &PolicyContext<'_>,
    tasks: &[TaskSpec],
) -> Result<Schedule, ScheduleError> {
    replay_with(ctx, tasks, |_, task, queues| {
        Ok(select_points(
            task,
            queues,
            ctx.profile,
            ctx.link,
            ctx.accuracy_floor,
        ))
    })
}

pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn decide(
        &self,
        ctx: &PolicyContext<'_>,
        tasks: &[TaskSpec],
    ) -> Result<Schedule, ScheduleError> {
        greedy_decide(ctx, tasks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gain::GainParams;
    use crate::link::{BOLTZMANN, LIGHT_SPEED};
    use crate::pipeline::{StageActivity, TaskTimeline, TaskType};
    use crate::profile::{BranchProfile, LayerProfile, LinearPredictor, ModelProfile};
    use crate::schedulers::dp_decide;
    use proptest::prelude::*;

    fn two_branch_profile() -> ModelProfile {
        let layer = || LayerProfile {
            time_leo: LinearPredictor::constant(2.9),
            time_heo: LinearPredictor::constant(2.5),
            out_size: LinearPredictor::constant(2.4e6),
        };
        ModelProfile {
            branches: vec![
                BranchProfile {
                    accuracy: 0.5,
                    layers: vec![layer()],
                },
                BranchProfile {
                    accuracy: 0.7,
                    layers: vec![layer(), layer()],
                },
            ],
            input_size: LinearPredictor::identity(),
        }
    }

    fn unit_snr_link(bandwidth_hz: f64) -> LinkParams {
        let mut link = LinkParams {
            bandwidth_hz,
            tx_power_w: 1.0,
            tx_gain: 1e3,
            rx_gain: 1e3,
            carrier_hz: 26e9,
            distance_m: 0.1 * LIGHT_SPEED,
            noise_temp_k: 354.0,
            snr_factor: 10.0,
        };
        let path = 4.0 * std::f64::consts::PI * link.distance_m * link.carrier_hz / LIGHT_SPEED;
        let noise = BOLTZMANN * link.noise_temp_k * link.bandwidth_hz * link.snr_factor;
        link.tx_power_w = noise * path * path / (link.tx_gain * link.rx_gain);
        link
    }

    fn task(deadline_rel: f64) -> TaskSpec {
        TaskSpec {
            id: 0,
            task_type: TaskType::LeoImaging,
            origin_leo: 0,
            data_size: 2.4e6,
            deadline_rel,
            arrival: 0.0,
        }
    }

    #[test]
    fn ample_deadline_picks_deepest_fastest() {
        let profile = two_branch_profile();
        let link = unit_snr_link(1e6);
        // Deep-branch completions: 7.5 s remote, 7.9 s split, 5.8 s local.
        let d = select_points(&task(30.0), &QueueState::new(), &profile, &link, 0.0);
        assert_eq!(
            d,
            Decision::Run {
                exit: 2,
                partition: 2
            }
        );
    }

    #[test]
    fn unsatisfiable_floor_skips() {
        let profile = two_branch_profile();
        let link = unit_snr_link(1e6);
        let d = select_points(&task(30.0), &QueueState::new(), &profile, &link, 0.9);
        assert_eq!(d, Decision::Skip);
    }

    #[test]
    fn floor_excludes_the_only_feasible_branch() {
        let profile = two_branch_profile();
        let link = unit_snr_link(1e6);
        // 4 s fits only the shallow branch (2.9 s), which the floor rejects.
        let d = select_points(&task(4.0), &QueueState::new(), &profile, &link, 0.6);
        assert_eq!(d, Decision::Skip);
        let d = select_points(&task(4.0), &QueueState::new(), &profile, &link, 0.0);
        assert_eq!(
            d,
            Decision::Run {
                exit: 1,
                partition: 1
            }
        );
    }

    #[test]
    fn busy_heo_forces_the_local_partition() {
        // Single branch, two layers (LEO 2 s, HEO 1 s, 8e6-bit map) over an
        // 8e6 bit/s link: remote partitions stall behind the HEO until
        // t=100, but running fully local completes at 4 s < 5 s.
        let layer = |out: f64| LayerProfile {
            time_leo: LinearPredictor::constant(2.0),
            time_heo: LinearPredictor::constant(1.0),
            out_size: LinearPredictor::constant(out),
        };
        let profile = ModelProfile {
            branches: vec![BranchProfile {
                accuracy: 0.6,
                layers: vec![layer(8e6), layer(1e6)],
            }],
            input_size: LinearPredictor::identity(),
        };
        let link = unit_snr_link(8e6);
        let mut queues = QueueState::new();
        let occupant = TaskSpec {
            id: 99,
            task_type: TaskType::LeoImaging,
            origin_leo: 1,
            data_size: 1.0,
            deadline_rel: 1000.0,
            arrival: 0.0,
        };
        queues.commit(
            &occupant,
            &TaskTimeline {
                s1: 0.0,
                o1: 0.0,
                s2: 0.0,
                o2: 100.0,
                s3: 100.0,
                o3: 100.0,
                total: 100.0,
                accuracy: 0.6,
                activity: StageActivity {
                    leo_stage1: false,
                    heo: true,
                    leo_stage3: false,
                },
            },
        );
        let mut t = task(5.0);
        t.data_size = 8e6;
        let d = select_points(&t, &queues, &profile, &link, 0.0);
        assert_eq!(
            d,
            Decision::Run {
                exit: 1,
                partition: 2
            }
        );
    }

    #[test]
    fn single_task_agrees_with_dp() {
        let profile = two_branch_profile();
        let link = unit_snr_link(1e6);
        let gain = GainParams {
            alpha: 0.1,
            beta: 16.0,
            a_min: 0.5,
        };
        let ctx = PolicyContext {
            profile: &profile,
            link: &link,
            gain: &gain,
            slot_len: 3.0,
            accuracy_floor: 0.0,
        };
        let tasks = [task(30.0)];
        let g = greedy_decide(&ctx, &tasks).unwrap();
        let d = dp_decide(&ctx, &tasks).unwrap();
        assert_eq!(g.decisions, d.decisions);
        assert_eq!(g.total_gain, d.total_gain);
    }

    #[test]
    fn empty_stream_has_zero_gain() {
        let profile = two_branch_profile();
        let link = unit_snr_link(1e6);
        let gain = GainParams {
            alpha: 0.1,
            beta: 16.0,
            a_min: 0.5,
        };
        let ctx = PolicyContext {
            profile: &profile,
            link: &link,
            gain: &gain,
            slot_len: 3.0,
            accuracy_floor: 0.0,
        };
        assert_eq!(greedy_decide(&ctx, &[]).unwrap().total_gain, 0.0);
    }

    /// Flat reference rule: over all (E, P) pairs meeting deadline and
    /// floor, best by accuracy desc, completion asc, E asc, P asc.
    fn select_by_enumeration(
        task: &TaskSpec,
        queues: &QueueState,
        profile: &ModelProfile,
        link: &LinkParams,
        floor: f64,
    ) -> Decision {
        let mut best: Option<Candidate> = None;
        for exit in 1..=profile.branch_count() {
            let accuracy = profile.accuracy(exit).unwrap();
            for partition in 0..=profile.layer_count(exit).unwrap() {
                let d = Decision::Run { exit, partition };
                let o3 = pipeline::schedule_task(profile, task, &d, queues, link)
                    .unwrap()
                    .o3;
                if o3 > task.deadline() || accuracy < floor {
                    continue;
                }
                let c = (accuracy, o3, exit, partition);
                if best.is_none_or(|b| better(&c, &b)) {
                    best = Some(c);
                }
            }
        }
        best.map_or(Decision::Skip, |(_, _, e, p)| Decision::Run {
            exit: e,
            partition: p,
        })
    }

    proptest! {
        #[test]
        fn matches_flat_enumeration(
            deadline in 1.0..20.0f64,
            heo_busy in 0.0..15.0f64,
            leo_busy in 0.0..15.0f64,
            floor in 0.0..1.0f64,
        ) {
            let profile = two_branch_profile();
            let link = unit_snr_link(1e6);
            let mut queues = QueueState::new();
            let occupant = task(1000.0);
            queues.commit(&occupant, &TaskTimeline {
                s1: 0.0, o1: leo_busy, s2: leo_busy, o2: heo_busy,
                s3: heo_busy, o3: heo_busy, total: heo_busy, accuracy: 0.5,
                activity: StageActivity { leo_stage1: true, heo: true, leo_stage3: false },
            });
            let t = task(deadline);
            let got = select_points(&t, &queues, &profile, &link, floor);
            let want = select_by_enumeration(&t, &queues, &profile, &link, floor);
            prop_assert_eq!(got, want);
            if let Decision::Run { .. } = got {
                let o3 = pipeline::schedule_task(&profile, &t, &got, &queues, &link).unwrap().o3;
                prop_assert!(o3 <= t.deadline());
            }
        }
    }
}
