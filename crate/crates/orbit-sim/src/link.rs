//! Inter-satellite link model: free-space power, Shannon rate, transfer time.
//!
//! The LEO-HEO link is a line-of-sight radio channel. Received power follows
//! the Friis free-space equation, the achievable rate is the Shannon capacity
//! with an SNR de-rating margin, and moving `size` bits costs transmission
//! time plus one-way propagation delay:
//!
//! `transfer_time(size) = size / rate + distance / c`

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Speed of light in m/s.
pub const LIGHT_SPEED: f64 = 2.998e8;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("invalid link field `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn validation(field: &str, message: impl Into<String>) -> LinkError {
    LinkError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Physical parameters of the LEO-HEO inter-satellite link.
///
/// Gains and the SNR margin are dimensionless linear ratios; the config file
/// may instead give them in decibels via `*_db` fields, converted on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinkParamsRepr")]
pub struct LinkParams {
    /// Channel bandwidth `B` in Hz.
    pub bandwidth_hz: f64,
    /// Transmit power `P_t` in W.
    pub tx_power_w: f64,
    /// Transmit antenna gain `G_t` (linear).
    pub tx_gain: f64,
    /// Receive antenna gain `G_r` (linear).
    pub rx_gain: f64,
    /// Carrier frequency `f` in Hz.
    pub carrier_hz: f64,
    /// Link distance `Q` in m.
    pub distance_m: f64,
    /// System noise temperature `T_s` in K.
    pub noise_temp_k: f64,
    /// SNR de-rating margin `gamma` (linear, >= 1 in practice).
    pub snr_factor: f64,
}

impl LinkParams {
    /// Received power in W under free-space path loss:
    /// `P_t * G_t * G_r * (4*pi*Q*f / c)^-2`.
    pub fn received_power(&self) -> f64 {
        let path = 4.0 * std::f64::consts::PI * self.distance_m * self.carrier_hz / LIGHT_SPEED;
        self.tx_power_w * self.tx_gain * self.rx_gain / (path * path)
    }

    /// De-rated signal-to-noise ratio `P_r / (k_B * T_s * B * gamma)`.
    pub fn snr(&self) -> f64 {
        self.received_power()
            / (BOLTZMANN * self.noise_temp_k * self.bandwidth_hz * self.snr_factor)
    }

    /// Achievable rate in bit/s: `B * log2(1 + snr)`.
    pub fn rate(&self) -> f64 {
        self.bandwidth_hz * (1.0 + self.snr()).log2()
    }

    /// One-way propagation delay `Q / c` in seconds.
    pub fn propagation_delay(&self) -> f64 {
        self.distance_m / LIGHT_SPEED
    }

    /// Time in seconds to move `size_bits` across the link, including the
    /// propagation delay. `transfer_time(0)` is exactly the propagation delay.
    pub fn transfer_time(&self, size_bits: f64) -> f64 {
        size_bits / self.rate() + self.propagation_delay()
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_power_w", self.tx_power_w),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("carrier_hz", self.carrier_hz),
            ("distance_m", self.distance_m),
            ("noise_temp_k", self.noise_temp_k),
            ("snr_factor", self.snr_factor),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(validation(
                    field,
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Wire format: each dimensionless ratio accepts either a linear field or a
/// `*_db` alternative, but not both.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkParamsRepr {
    bandwidth_hz: f64,
    tx_power_w: f64,
    tx_gain: Option<f64>,
    tx_gain_db: Option<f64>,
    rx_gain: Option<f64>,
    rx_gain_db: Option<f64>,
    carrier_hz: f64,
    distance_m: f64,
    noise_temp_k: f64,
    snr_factor: Option<f64>,
    snr_factor_db: Option<f64>,
}

fn resolve_ratio(field: &str, linear: Option<f64>, db: Option<f64>) -> Result<f64, LinkError> {
    match (linear, db) {
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(db_to_linear(d)),
        (Some(_), Some(_)) => Err(validation(
            field,
            format!("give either `{field}` or `{field}_db`, not both"),
        )),
        (None, None) => Err(validation(
            field,
            format!("missing: give `{field}` (linear) or `{field}_db`"),
        )),
    }
}

impl TryFrom<LinkParamsRepr> for LinkParams {
    type Error = LinkError;

    fn try_from(repr: LinkParamsRepr) -> Result<Self, Self::Error> {
        let params = LinkParams {
            bandwidth_hz: repr.bandwidth_hz,
            tx_power_w: repr.tx_power_w,
            tx_gain: resolve_ratio("tx_gain", repr.tx_gain, repr.tx_gain_db)?,
            rx_gain: resolve_ratio("rx_gain", repr.rx_gain, repr.rx_gain_db)?,
            carrier_hz: repr.carrier_hz,
            distance_m: repr.distance_m,
            noise_temp_k: repr.noise_temp_k,
            snr_factor: resolve_ratio("snr_factor", repr.snr_factor, repr.snr_factor_db)?,
        };
        params.validate()?;
        Ok(params)
    }
}
