//! Task-gain objective and best-accuracy-within-budget selection.
//!
//! A completed task is worth a completion unit plus a sigmoid bonus that
//! saturates as accuracy clears the minimum usable accuracy `a_min`:
//!
//! `gain(a) = 1 + alpha / (1 + e^(-beta * (a - a_min)))` for `a` in (0, 1)
//!
//! A skipped or failed task (accuracy 0) is worth exactly 0; the sigmoid's
//! tiny residual at 0 is deliberately dropped so skipping adds nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::LinkParams;
use crate::pipeline::{self, Decision, QueueState, TaskSpec, TaskType};
use crate::profile::ModelProfile;

#[derive(Debug, Error)]
pub enum GainError {
    #[error("accuracy {0} outside the domain [0, 1)")]
    Domain(f64),
    #[error("invalid gain field `{field}`: {message}")]
    Validation { field: String, message: String },
}

/// Shape parameters of the gain sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    pub alpha: f64,
    pub beta: f64,
    /// Sigmoid midpoint: the minimum usable accuracy, normally the
    /// shallowest exit's accuracy of the loaded profile.
    pub a_min: f64,
}

impl GainParams {
    pub fn validate(&self) -> Result<(), GainError> {
        let check = |field: &str, ok: bool, message: String| {
            if ok {
                Ok(())
            } else {
                Err(GainError::Validation {
                    field: field.into(),
                    message,
                })
            }
        };
        check(
            "alpha",
            self.alpha.is_finite() && self.alpha > 0.0,
            format!("must be positive, got {}", self.alpha),
        )?;
        check(
            "beta",
            self.beta.is_finite() && self.beta > 0.0,
            format!("must be positive, got {}", self.beta),
        )?;
        check(
            "a_min",
            self.a_min.is_finite() && 0.0 < self.a_min && self.a_min < 1.0,
            format!("must lie in (0, 1), got {}", self.a_min),
        )
    }
}

/// Gain of completing a task at `accuracy`; exactly 0 for accuracy 0.
pub fn task_gain(accuracy: f64, params: &GainParams) -> Result<f64, GainError> {
    if !(0.0..1.0).contains(&accuracy) {
        return Err(GainError::Domain(accuracy));
    }
    if accuracy == 0.0 {
        return Ok(0.0);
    }
    let sigmoid = 1.0 / (1.0 + (-params.beta * (accuracy - params.a_min)).exp());
    Ok(1.0 + params.alpha * sigmoid)
}

/// One candidate (exit, partition) pair with its queue-free pipeline time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitOption {
    pub decision: Decision,
    pub accuracy: f64,
    /// End-to-end time against empty queues, arrival 0.
    pub queue_free_time: f64,
}

/// Every (exit, partition) pair for a task of the given type and size,
/// sorted best-first: accuracy descending, then queue-free time, exit, and
/// partition ascending.
pub fn enumerate_options(
    profile: &ModelProfile,
    link: &LinkParams,
    task_type: TaskType,
    data_size: f64,
) -> Vec<ExitOption> {
    let probe = TaskSpec {
        id: 0,
        task_type,
        origin_leo: 0,
        data_size,
        deadline_rel: f64::INFINITY,
        arrival: 0.0,
    };
    let empty = QueueState::new();
    let mut options = Vec::new();
    for exit in 1..=profile.branch_count() {
        let layers = profile.layer_count(exit).unwrap();
        let accuracy = profile.accuracy(exit).unwrap();
        for partition in 0..=layers {
            let decision = Decision::Run { exit, partition };
            let timeline = pipeline::schedule_task(profile, &probe, &decision, &empty, link)
                .expect("enumerated decision is structurally valid");
            options.push(ExitOption {
                decision,
                accuracy,
                queue_free_time: timeline.o3,
            });
        }
    }
    options.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.queue_free_time.total_cmp(&b.queue_free_time))
            .then(a.decision.exit_index().cmp(&b.decision.exit_index()))
            .then(
                a.decision
                    .partition_index()
                    .cmp(&b.decision.partition_index()),
            )
    });
    options
}

/// Highest-accuracy (exit, partition) pair whose queue-free pipeline time
/// fits `budget`; `(0.0, Skip)` when nothing fits. Ties on accuracy fall to
/// the smaller completion time, then the smaller exit and partition.
pub fn best_accuracy_within(
    profile: &ModelProfile,
    link: &LinkParams,
    task_type: TaskType,
    data_size: f64,
    budget: f64,
) -> (f64, Decision) {
    enumerate_options(profile, link, task_type, data_size)
        .into_iter()
        .find(|o| o.queue_free_time <= budget)
        .map_or((0.0, Decision::Skip), |o| (o.accuracy, o.decision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{BOLTZMANN, LIGHT_SPEED};
    use crate::profile::{BranchProfile, LayerProfile, LinearPredictor};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_params() -> GainParams {
        GainParams {
            alpha: 0.1,
            beta: 16.0,
            a_min: 0.527,
        }
    }

    #[test]
    fn gain_at_midpoint_is_exact() {
        let p = reference_params();
        assert_eq!(task_gain(p.a_min, &p).unwrap(), 1.0 + p.alpha / 2.0);
        assert_eq!(task_gain(p.a_min, &p).unwrap(), 1.05);
    }

    #[test]
    fn gain_of_zero_accuracy_is_exactly_zero() {
        assert_eq!(task_gain(0.0, &reference_params()).unwrap(), 0.0);
    }

    // Frozen from high-precision evaluation of the closed form.
    #[test]
    fn gain_golden_values() {
        let p = reference_params();
        assert_relative_eq!(
            task_gain(0.623, &p).unwrap(),
            1.0822882490381316,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            task_gain(0.697, &p).unwrap(),
            1.093_819_653_373_641,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            task_gain(0.743, &p).unwrap(),
            1.0969409570578176,
            max_relative = 1e-14
        );
    }

    #[test]
    fn gain_rejects_out_of_domain_accuracy() {
        let p = reference_params();
        for a in [-0.1, 1.0, 1.5, f64::NAN] {
            assert!(matches!(task_gain(a, &p), Err(GainError::Domain(_))));
        }
    }

    #[test]
    fn params_validation_names_field() {
        let mut p = reference_params();
        p.beta = 0.0;
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    /// Single-branch model (2 layers; LEO 2 s, HEO 1 s per layer; 8e6-bit
    /// map after layer 1) over an 8e6 bit/s link with 0.1 s propagation.
    /// Queue-free times: partition 0 -> 3.1 s, 1 -> 4.1 s, 2 -> 4.0 s.
    fn worked_profile() -> ModelProfile {
        let layer = |out: f64| LayerProfile {
            time_leo: LinearPredictor::constant(2.0),
            time_heo: LinearPredictor::constant(1.0),
            out_size: LinearPredictor::constant(out),
        };
        ModelProfile {
            branches: vec![BranchProfile {
                accuracy: 0.6,
                layers: vec![layer(8e6), layer(1e6)],
            }],
            input_size: LinearPredictor::identity(),
        }
    }

    fn worked_link() -> LinkParams {
        let mut link = LinkParams {
            bandwidth_hz: 8e6,
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

    /// Reference selection by plain exhaustive scan, independent of the
    /// sorted-options implementation.
    fn best_by_scan(
        profile: &ModelProfile,
        link: &LinkParams,
        task_type: TaskType,
        data_size: f64,
        budget: f64,
    ) -> (f64, Decision) {
        let probe = TaskSpec {
            id: 0,
            task_type,
            origin_leo: 0,
            data_size,
            deadline_rel: f64::INFINITY,
            arrival: 0.0,
        };
        let empty = QueueState::new();
        let mut best: Option<(f64, f64, Decision)> = None;
        for exit in 1..=profile.branch_count() {
            for partition in 0..=profile.layer_count(exit).unwrap() {
                let d = Decision::Run { exit, partition };
                let t = pipeline::schedule_task(profile, &probe, &d, &empty, link)
                    .unwrap()
                    .o3;
                if t > budget {
                    continue;
                }
                let acc = profile.accuracy(exit).unwrap();
                let better = match &best {
                    None => true,
                    Some((ba, bt, _)) => acc > *ba || (acc == *ba && t < *bt),
                };
                if better {
                    best = Some((acc, t, d));
                }
            }
        }
        best.map_or((0.0, Decision::Skip), |(a, _, d)| (a, d))
    }

    #[test]
    fn zero_budget_skips() {
        let (acc, d) = best_accuracy_within(
            &worked_profile(),
            &worked_link(),
            TaskType::LeoImaging,
            8e6,
            0.0,
        );
        assert_eq!(acc, 0.0);
        assert!(d.is_skip());
    }

    #[test]
    fn infinite_budget_reaches_deepest_branch() {
        let profile = worked_profile();
        let (acc, _) = best_accuracy_within(
            &profile,
            &worked_link(),
            TaskType::LeoImaging,
            8e6,
            f64::INFINITY,
        );
        assert_eq!(acc, profile.a_max());
    }

    #[test]
    fn tight_budget_excludes_midpoint_split() {
        let profile = worked_profile();
        let link = worked_link();
        // 4.05 s: splits at 0 (3.1 s) and 2 (4.0 s) fit, split at 1 (4.1 s)
        // does not; the accuracy tie falls to the faster split 0.
        let (acc, d) = best_accuracy_within(&profile, &link, TaskType::LeoImaging, 8e6, 4.05);
        assert_eq!(acc, 0.6);
        assert_eq!(
            d,
            Decision::Run {
                exit: 1,
                partition: 0
            }
        );
        assert_eq!(
            (acc, d),
            best_by_scan(&profile, &link, TaskType::LeoImaging, 8e6, 4.05)
        );
        // 2 s fits nothing.
        let (acc, d) = best_accuracy_within(&profile, &link, TaskType::LeoImaging, 8e6, 2.0);
        assert_eq!((acc, d), (0.0, Decision::Skip));
    }

    #[test]
    fn heo_tasks_see_mirrored_times() {
        let profile = worked_profile();
        let link = worked_link();
        // Fully-on-HEO (partition 2) takes 2 s; every split shipping to a
        // LEO blows past 4.05 s (5.1 s and 4.1 s).
        let (acc, d) = best_accuracy_within(&profile, &link, TaskType::HeoImaging, 8e6, 4.05);
        assert_eq!(acc, 0.6);
        assert_eq!(
            d,
            Decision::Run {
                exit: 1,
                partition: 2
            }
        );
    }

    #[test]
    fn options_are_sorted_best_first() {
        let options =
            enumerate_options(&worked_profile(), &worked_link(), TaskType::LeoImaging, 8e6);
        assert_eq!(options.len(), 3);
        let times: Vec<f64> = options.iter().map(|o| o.queue_free_time).collect();
        assert_relative_eq!(times[0], 3.1, max_relative = 1e-12);
        assert_relative_eq!(times[1], 4.0, max_relative = 1e-12);
        assert_relative_eq!(times[2], 4.1, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn gain_strictly_increasing(a in 0.001..0.95f64, delta in 1e-6..0.04f64) {
            let p = reference_params();
            let lo = task_gain(a, &p).unwrap();
            let hi = task_gain(a + delta, &p).unwrap();
            prop_assert!(lo < hi, "gain({a})={lo} !< gain({})={hi}", a + delta);
        }

        #[test]
        fn gain_bounded_between_one_and_one_plus_alpha(a in 1e-9..0.999f64) {
            let p = reference_params();
            let g = task_gain(a, &p).unwrap();
            prop_assert!(g > 1.0 && g < 1.0 + p.alpha, "gain({a}) = {g}");
        }

        #[test]
        fn best_accuracy_monotone_in_budget(b1 in 0.0..10.0f64, b2 in 0.0..10.0f64) {
            let profile = worked_profile();
            let link = worked_link();
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let (a_lo, _) = best_accuracy_within(&profile, &link, TaskType::LeoImaging, 8e6, lo);
            let (a_hi, _) = best_accuracy_within(&profile, &link, TaskType::LeoImaging, 8e6, hi);
            prop_assert!(a_lo <= a_hi);
        }

        #[test]
        fn returned_decision_fits_budget(budget in 0.0..20.0f64, size in 1e5..2e7f64) {
            let profile = worked_profile();
            let link = worked_link();
            for task_type in [TaskType::LeoImaging, TaskType::HeoImaging] {
                let (acc, d) = best_accuracy_within(&profile, &link, task_type, size, budget);
                prop_assert_eq!((acc, d), best_by_scan(&profile, &link, task_type, size, budget));
                if let Decision::Run { .. } = d {
                    let probe = TaskSpec {
                        id: 0,
                        task_type,
                        origin_leo: 0,
                        data_size: size,
                        deadline_rel: f64::INFINITY,
                        arrival: 0.0,
                    };
                    let t = pipeline::schedule_task(&profile, &probe, &d, &QueueState::new(), &link)
                        .unwrap()
                        .o3;
                    prop_assert!(t <= budget);
                }
            }
        }
    }
}
