//! Path loss, satellite INR / SNR degradation and terrestrial SNR loss.
//!
//! Linear powers are in watts; `p_tx_dbm` is converted to dBW before it
//! enters the INR sum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{element_gain_db, ElementPattern};
use crate::geometry::{global_to_local, slant_distance, BsOrientation, EarthParams, GeometryError, SteeringDirection};
use crate::linalg::{CMatrix, CVector};

/// Reported INR when the aggregate interference is exactly zero.
pub const INR_FLOOR_DB: f64 = -200.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkBudgetError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkParams {
    pub p_tx_dbm: f64,
    pub g_over_t_db: f64,
    pub l_a_db: f64,
    pub bandwidth_hz: f64,
    pub boltzmann: f64,
    pub carrier_hz: f64,
    pub ue_noise_figure_db: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            p_tx_dbm: 33.0,
            g_over_t_db: 13.0,
            l_a_db: 0.0,
            bandwidth_hz: 30e6,
            boltzmann: BOLTZMANN,
            carrier_hz: 12e9,
            ue_noise_figure_db: 7.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkBudgetError> {
        for (name, value) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("carrier_hz", self.carrier_hz),
            ("boltzmann", self.boltzmann),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(LinkBudgetError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// `10 log10(B κ)`, the noise floor per kelvin in dBW/K.
    pub fn noise_db(&self) -> f64 {
        10.0 * (self.bandwidth_hz * self.boltzmann).log10()
    }
}

pub fn fspl_db(d_m: f64, f_hz: f64) -> Result<f64, LinkBudgetError> {
    if !(d_m > 0.0) {
        return Err(LinkBudgetError::NonPositive { name: "distance", value: d_m });
    }
    if !(f_hz > 0.0) {
        return Err(LinkBudgetError::NonPositive { name: "frequency", value: f_hz });
    }
    Ok(20.0 * d_m.log10() + 20.0 * f_hz.log10() - 147.55)
}

/// FSPL over the slant range minus the BS element gain toward the
/// satellite. `dir_global` is the satellite direction seen from the BS.
pub fn total_propagation_loss_db(
    dir_global: &SteeringDirection,
    orient: &BsOrientation,
    earth: &EarthParams,
    params: &LinkParams,
    pattern: &ElementPattern,
) -> Result<f64, LinkBudgetError> {
    let d = slant_distance(dir_global, earth)?;
    let local = global_to_local(dir_global, orient)?;
    Ok(fspl_db(d, params.carrier_hz)? - element_gain_db(&local, pattern))
}

/// Satellite INR from per-BS beamforming gains `|w_j^H h_ij|²` (channels
/// include path gain).
pub fn inr_db(tx_gains: &[f64], params: &LinkParams) -> f64 {
    let total: f64 = tx_gains.iter().sum();
    if !(total > 0.0) {
        return INR_FLOOR_DB;
    }
    let inr = (params.p_tx_dbm - 30.0) + 10.0 * total.log10() + params.g_over_t_db
        - params.l_a_db
        - params.noise_db();
    inr.max(INR_FLOOR_DB)
}

/// `10 log10(1 + 10^(INR/10))`
pub fn snr_degradation_db(inr_db: f64) -> f64 {
    10.0 * (10f64.powf(0.1 * inr_db)).ln_1p() / std::f64::consts::LN_10
}

/// SNR loss of the nulling beamformer relative to the baseline, in dB.
/// Returns `+∞` when the nulling beamformer delivers no power.
pub fn terrestrial_snr_loss_db(h: &CMatrix, w_r: &CVector, w_t_baseline: &CVector, w_t_nulling: &CVector) -> f64 {
    let num = w_r.dot(&h.mul_vec(w_t_baseline)).norm_sqr();
    let den = w_r.dot(&h.mul_vec(w_t_nulling)).norm_sqr();
    if den == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (num / den).log10()
}
