//! Multi-exit model profiles and linear layer predictors.
//!
//! A profile describes a multi-exit network as an ordered list of branches of
//! increasing depth and accuracy. Every layer of every branch carries three
//! linear predictors fitted from measurements: inference time on a LEO
//! satellite, inference time on an HEO satellite, and output feature-map size.
//! Exit index 0 is reserved for the skip/failure case (accuracy 0) and is not
//! stored as a branch.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Satellite device class a layer runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Device {
    Leo,
    Heo,
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Device::Leo => write!(f, "leo"),
            Device::Heo => write!(f, "heo"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("invalid profile field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("failed to read profile {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed profile document: {0}")]
    Json(#[from] serde_json::Error),
}

fn validation(field: impl Into<String>, message: impl Into<String>) -> ProfileError {
    ProfileError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Affine predictor `y = slope * x + intercept` over input data size in bits.
///
/// Used for per-layer inference time (seconds) and output size (bits); both
/// coefficients must be non-negative, so predictions over non-negative inputs
/// are non-negative and non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearPredictor {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearPredictor {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    /// Constant predictor, independent of input size.
    pub fn constant(value: f64) -> Self {
        Self {
            slope: 0.0,
            intercept: value,
        }
    }

    /// Identity predictor (`y = x`).
    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn predict(&self, data_size: f64) -> f64 {
        self.slope * data_size + self.intercept
    }

    fn validate(&self, field: &str) -> Result<(), ProfileError> {
        if !self.slope.is_finite() || self.slope < 0.0 {
            return Err(validation(
                format!("{field}.slope"),
                format!("must be finite and non-negative, got {}", self.slope),
            ));
        }
        if !self.intercept.is_finite() || self.intercept < 0.0 {
            return Err(validation(
                format!("{field}.intercept"),
                format!("must be finite and non-negative, got {}", self.intercept),
            ));
        }
        Ok(())
    }
}

/// Predictors for one layer: per-device inference time plus output size.
///
/// Output size is device-independent; the tensor a layer emits does not
/// depend on which satellite computed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerProfile {
    pub time_leo: LinearPredictor,
    pub time_heo: LinearPredictor,
    pub out_size: LinearPredictor,
}

impl LayerProfile {
    pub fn time(&self, device: Device) -> &LinearPredictor {
        match device {
            Device::Leo => &self.time_leo,
            Device::Heo => &self.time_heo,
        }
    }
}

/// One early-exit branch: an ordered layer list and the exit's accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchProfile {
    /// Classification accuracy when exiting at this branch, in `[0, 1)`.
    pub accuracy: f64,
    pub layers: Vec<LayerProfile>,
}

impl BranchProfile {
    /// Number of layers in this branch (`M_i`).
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

/// A validated multi-exit model description.
///
/// Branch accuracies strictly increase with depth. Exit 0 (skip/failure,
/// accuracy 0) is implicit and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelProfile {
    pub branches: Vec<BranchProfile>,
    /// Maps task data size to the bit count entering layer 1; used as the
    /// transfer payload when the whole model is offloaded (partition 0).
    pub input_size: LinearPredictor,
}

impl ModelProfile {
    /// Number of early-exit branches (`M`).
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Minimum branchy-model accuracy (`A_min`), i.e. the accuracy of the
    /// shallowest exit.
    pub fn a_min(&self) -> f64 {
        self.branches[0].accuracy
    }

    /// Accuracy of the deepest exit.
    pub fn a_max(&self) -> f64 {
        self.branches[self.branches.len() - 1].accuracy
    }

    fn branch(&self, branch: usize) -> Result<&BranchProfile, ProfileError> {
        if branch == 0 || branch > self.branches.len() {
            return Err(ProfileError::IndexOutOfRange {
                what: "branch",
                index: branch,
                max: self.branches.len(),
            });
        }
        Ok(&self.branches[branch - 1])
    }

    /// Layer count `M_i` of a 1-based branch index.
    pub fn layer_count(&self, branch: usize) -> Result<usize, ProfileError> {
        Ok(self.branch(branch)?.layer_count())
    }

    /// Accuracy of a 1-based branch index.
    pub fn accuracy(&self, branch: usize) -> Result<f64, ProfileError> {
        Ok(self.branch(branch)?.accuracy)
    }

    /// Predicted inference time in seconds of `layer` (1-based) of `branch`
    /// (1-based) on `device`, for a task of `data_size` bits.
    pub fn predict_layer_time(
        &self,
        device: Device,
        branch: usize,
        layer: usize,
        data_size: f64,
    ) -> Result<f64, ProfileError> {
        let b = self.branch(branch)?;
        if layer == 0 || layer > b.layer_count() {
            return Err(ProfileError::IndexOutOfRange {
                what: "layer",
                index: layer,
                max: b.layer_count(),
            });
        }
        Ok(b.layers[layer - 1].time(device).predict(data_size))
    }

    /// Predicted output size in bits after `layer` of `branch`.
    ///
    /// `layer` 0 denotes the raw model input (the payload shipped when the
    /// whole model runs remotely); layers 1..=M_i use the layer's own
    /// output-size predictor.
    pub fn predict_output_size(
        &self,
        branch: usize,
        layer: usize,
        data_size: f64,
    ) -> Result<f64, ProfileError> {
        let b = self.branch(branch)?;
        if layer == 0 {
            return Ok(self.input_size.predict(data_size));
        }
        if layer > b.layer_count() {
            return Err(ProfileError::IndexOutOfRange {
                what: "layer",
                index: layer,
                max: b.layer_count(),
            });
        }
        Ok(b.layers[layer - 1].out_size.predict(data_size))
    }

    /// Checks every structural invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.branches.is_empty() {
            return Err(validation(
                "branches",
                "profile must have at least one branch",
            ));
        }
        self.input_size.validate("input_size")?;
        let mut prev_accuracy = -1.0;
        for (bi, branch) in self.branches.iter().enumerate() {
            let field = format!("branches[{bi}]");
            if !(0.0..1.0).contains(&branch.accuracy) {
                return Err(validation(
                    format!("{field}.accuracy"),
                    format!("must lie in [0, 1), got {}", branch.accuracy),
                ));
            }
            if branch.accuracy <= prev_accuracy {
                return Err(validation(
                    format!("{field}.accuracy"),
                    format!(
                        "branch accuracies must strictly increase with depth ({} after {})",
                        branch.accuracy, prev_accuracy
                    ),
                ));
            }
            prev_accuracy = branch.accuracy;
            if branch.layers.is_empty() {
                return Err(validation(
                    format!("{field}.layers"),
                    "branch must have at least one layer",
                ));
            }
            for (li, layer) in branch.layers.iter().enumerate() {
                let lf = format!("{field}.layers[{li}]");
                layer.time_leo.validate(&format!("{lf}.time_leo"))?;
                layer.time_heo.validate(&format!("{lf}.time_heo"))?;
                layer.out_size.validate(&format!("{lf}.out_size"))?;
            }
        }
        Ok(())
    }

    /// Parses and validates a profile document.
    pub fn from_json(document: &str) -> Result<Self, ProfileError> {
        let profile: ModelProfile = serde_json::from_str(document)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ProfileError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Result of [`fit_linear_predictor`]; `clamped` is set when a negative
/// fitted coefficient was clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub predictor: LinearPredictor,
    pub clamped: bool,
}

/// Ordinary least-squares fit of `measurement = slope * data_size + intercept`.
///
/// Negative fitted coefficients are clamped to zero (latency and size are
/// physically non-negative) and reported through [`LinearFit::clamped`].
pub fn fit_linear_predictor(samples: &[(f64, f64)]) -> Result<LinearFit, ProfileError> {
    if samples.len() < 2 {
        return Err(ProfileError::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let sum_x: f64 = samples.iter().map(|(x, _)| x).sum();
    let sum_y: f64 = samples.iter().map(|(_, y)| y).sum();
    let mean_x = sum_x / n;
    let mean_y = sum_y / n;
    // Centered normal equations; better conditioned than raw sums.
    let sxx: f64 = samples
        .iter()
        .map(|(x, _)| (x - mean_x) * (x - mean_x))
        .sum();
    let sxy: f64 = samples
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(ProfileError::DegenerateFit(
            "all samples share the same data size (zero variance)".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let clamped = slope < 0.0 || intercept < 0.0;
    Ok(LinearFit {
        predictor: LinearPredictor {
            slope: slope.max(0.0),
            intercept: intercept.max(0.0),
        },
        clamped,
    })
}
