//! Deterministic simulator and scheduling library for deadline-constrained
//! multi-exit DNN inference offloading between LEO and HEO satellites.
//!
//! A task stream arrives over discrete time slots. Each task is an image
//! classification job that can exit a multi-exit network at any of its
//! early-exit branches (trading accuracy for compute) and can be split at
//! any layer between the origin satellite and the remote one, with the
//! intermediate feature map shipped over an inter-satellite link. Scheduling
//! policies pick the exit and partition point per task to maximize total
//! task gain subject to per-task deadlines.
//!
//! Module layout mirrors the problem:
//! - [`profile`]: multi-exit model descriptions and linear layer predictors
//! - [`link`]: inter-satellite link physics (path loss, Shannon rate)
//! - [`pipeline`]: three-stage task timelines over FCFS satellite queues
//! - [`gain`]: the task-gain objective and accuracy-within-budget search
//! - [`schedulers`]: decision policies behind a common trait, selected by name
//! - [`workload`]: seeded Bernoulli task-stream generation
//! - [`sim`]: experiment runs, metric computation, and parameter sweeps
//! - [`scenario`]: self-describing experiment configuration

pub mod gain;
pub mod link;
pub mod pipeline;
pub mod profile;
pub mod scenario;
pub mod schedulers;
pub mod sim;
pub mod workload;

pub use gain::GainParams;
pub use link::LinkParams;
pub use pipeline::{Decision, QueueState, TaskSpec, TaskTimeline, TaskType};
pub use profile::ModelProfile;
pub use scenario::Scenario;
pub use schedulers::{Policy, Schedule};
pub use workload::WorkloadParams;
