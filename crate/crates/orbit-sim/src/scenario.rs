//! Scenario documents: one self-describing JSON file per experiment.
//!
//! A scenario bundles everything a run needs — model profile (by path), link
//! budget, gain shape, workload generator settings, policy selection, and
//! output location — so that a figure-producing run is reproducible from a
//! single committed file. Command-line flags exist only as overrides on top
//! of this document.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gain::GainParams;
use crate::link::LinkParams;
use crate::profile::ModelProfile;
use crate::schedulers::{create_policy, ScheduleError};
use crate::workload::WorkloadParams;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("failed to read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Profile(#[from] crate::profile::ProfileError),
}

fn validation(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Gain sigmoid shape; the midpoint `a_min` is always taken from the loaded
/// profile's shallowest exit rather than configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Model profile document, relative paths resolved against the scenario
    /// file's directory.
    pub profile: PathBuf,
    pub link: LinkParams,
    #[serde(default)]
    pub gain: GainConfig,
    #[serde(default)]
    pub workload: WorkloadParams,
    /// Policy selector: one of the registered policy names.
    #[serde(default = "default_policy")]
    pub policy: String,
    /// Slot length override; when set it wins over `workload.slot_len`.
    /// After loading, both always agree.
    #[serde(default)]
    pub slot_len: Option<f64>,
    /// Minimum exit accuracy the greedy policy will consider.
    #[serde(default)]
    pub accuracy_floor: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_policy() -> String {
    "dp".to_string()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Scenario {
    /// Parses a scenario document and reconciles the slot length knobs.
    pub fn from_json(document: &str) -> Result<Self, ScenarioError> {
        let mut scenario: Scenario = serde_json::from_str(document)?;
        match scenario.slot_len {
            Some(slot) => scenario.workload.slot_len = slot,
            None => scenario.slot_len = Some(scenario.workload.slot_len),
        }
        Ok(scenario)
    }

    /// Reads a scenario file and anchors its profile path next to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut scenario = Self::from_json(&text)?;
        if scenario.profile.is_relative() {
            if let Some(dir) = path.parent() {
                scenario.profile = dir.join(&scenario.profile);
            }
        }
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// The single authoritative slot length (reconciled at parse time).
    pub fn slot_len(&self) -> f64 {
        self.workload.slot_len
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.profile.as_os_str().is_empty() {
            return Err(validation("profile", "profile path must not be empty"));
        }
        if let Err(ScheduleError::UnknownPolicy(name)) = create_policy(&self.policy, 0).map(|_| ())
        {
            return Err(validation(
                "policy",
                format!("unknown policy `{name}` (expected one of dp, greedy, random, oracle)"),
            ));
        }
        if !(self.accuracy_floor.is_finite() && (0.0..1.0).contains(&self.accuracy_floor)) {
            return Err(validation(
                "accuracy_floor",
                format!("must lie in [0, 1), got {}", self.accuracy_floor),
            ));
        }
        if !(self.gain.alpha.is_finite() && self.gain.alpha > 0.0) {
            return Err(validation(
                "gain.alpha",
                format!("must be positive, got {}", self.gain.alpha),
            ));
        }
        if !(self.gain.beta.is_finite() && self.gain.beta > 0.0) {
            return Err(validation(
                "gain.beta",
                format!("must be positive, got {}", self.gain.beta),
            ));
        }
        self.link.validate().map_err(|e| match e {
            crate::link::LinkError::Validation { field, message } => {
                relabel("link", &field, &message)
            }
        })?;
        self.workload.validate().map_err(|e| match e {
            crate::workload::WorkloadError::Validation { field, message } => {
                relabel("workload", &field, &message)
            }
            other => validation("workload", other.to_string()),
        })?;
        if let Some(slot) = self.slot_len {
            if slot != self.workload.slot_len {
                return Err(validation(
                    "slot_len",
                    "disagrees with workload.slot_len; load scenarios via from_json/load",
                ));
            }
        }
        Ok(())
    }

    /// Loads and validates the referenced model profile.
    pub fn load_model(&self) -> Result<ModelProfile, ScenarioError> {
        Ok(ModelProfile::load(&self.profile)?)
    }

    /// Builds the gain parameters with the midpoint pinned to the profile's
    /// shallowest exit accuracy.
    pub fn gain_params(&self, profile: &ModelProfile) -> Result<GainParams, ScenarioError> {
        let params = GainParams {
            alpha: self.gain.alpha,
            beta: self.gain.beta,
            a_min: profile.a_min(),
        };
        params.validate().map_err(|e| match e {
            crate::gain::GainError::Validation { field, message } => {
                relabel("gain", &field, &message)
            }
            other => validation("gain", other.to_string()),
        })?;
        Ok(params)
    }
}

fn relabel(section: &str, field: &str, message: &str) -> ScenarioError {
    validation(format!("{section}.{field}"), message)
}
