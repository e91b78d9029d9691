//! Element gain pattern, URA steering vectors and beamforming gain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SteeringDirection;
use crate::linalg::{CVector, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AntennaError {
    #[error("dimension mismatch: steering vector has {steering} entries, beamformer {beamformer}")]
    DimensionMismatch { steering: usize, beamformer: usize },
    #[error("beamformer norm {0} is not 1")]
    NotUnitNorm(f64),
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(&'static str),
}

/// Sectorized element pattern (dB values, degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElementPattern {
    pub g_max_db: f64,
    pub sla_v_db: f64,
    pub a_m_db: f64,
    pub theta_3db_deg: f64,
    pub phi_3db_deg: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        ElementPattern {
            g_max_db: 8.0,
            sla_v_db: 30.0,
            a_m_db: 30.0,
            theta_3db_deg: 65.0,
            phi_3db_deg: 65.0,
        }
    }
}

impl ElementPattern {
    /// Vertical cut, in dB (non-positive). `theta_deg` is the zenith-referenced
    /// angle with 90 at the array normal.
    pub fn vertical_db(&self, theta_deg: f64) -> f64 {
        let x = (theta_deg - 90.0) / self.theta_3db_deg;
        -(12.0 * x * x).min(self.sla_v_db)
    }

    /// Horizontal cut, in dB (non-positive).
    pub fn horizontal_db(&self, phi_deg: f64) -> f64 {
        let x = phi_deg / self.phi_3db_deg;
        -(12.0 * x * x).min(self.a_m_db)
    }
}

/// Gain of a single element toward a direction in the sector's local frame.
pub fn element_gain_db(dir: &SteeringDirection, pat: &ElementPattern) -> f64 {
    let theta = 90.0 - dir.elevation_deg;
    let ev = pat.vertical_db(theta);
    let eh = pat.horizontal_db(dir.azimuth_deg);
    pat.g_max_db - (-(ev + eh)).min(pat.a_m_db)
}

/// Uniform rectangular array; element spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UraGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing_wavelengths: f64,
}

impl UraGeometry {
    pub fn new(rows: usize, cols: usize, spacing_wavelengths: f64) -> Result<Self, AntennaError> {
        if rows == 0 || cols == 0 {
            return Err(AntennaError::InvalidGeometry("rows and cols must be >= 1"));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(AntennaError::InvalidGeometry("spacing must be positive"));
        }
        Ok(UraGeometry {
            rows,
            cols,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(rows: usize, cols: usize) -> Result<Self, AntennaError> {
        Self::new(rows, cols, 0.5)
    }

    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_wavelengths
    }
}

/// Direction cosines `(u, v)` used for the array phase progression.
pub fn direction_cosines(dir: &SteeringDirection) -> (f64, f64) {
    let el = dir.elevation_deg.to_radians();
    let az = dir.azimuth_deg.to_radians();
    (el.cos() * az.sin(), el.sin())
}

/// Array response toward `dir`. Entry `m * cols + n` carries phase
/// `2π·d·(m·u + n·v)`.
pub fn steering_vector(dir: &SteeringDirection, geom: &UraGeometry) -> CVector {
    let (u, v) = direction_cosines(dir);
    let k = 2.0 * PI * geom.spacing();
    let mut out = Vec::with_capacity(geom.n_elements());
    for m in 0..geom.rows {
        for n in 0..geom.cols {
            out.push(C64::from_polar(1.0, k * (m as f64 * u + n as f64 * v)));
        }
    }
    CVector(out)
}

/// `|e^H w|²` for a unit-norm beamformer `w`.
pub fn beamforming_gain(e: &CVector, w: &CVector) -> Result<f64, AntennaError> {
    if e.len() != w.len() {
        return Err(AntennaError::DimensionMismatch {
            steering: e.len(),
            beamformer: w.len(),
        });
    }
    let n = w.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(AntennaError::NotUnitNorm(n));
    }
    Ok(e.dot(w).norm_sqr())
}

/// Composite element-plus-array gain in dB.
pub fn composite_gain_db(
    dir: &SteeringDirection,
    w: &CVector,
    geom: &UraGeometry,
    pat: &ElementPattern,
) -> Result<f64, AntennaError> {
    let g = beamforming_gain(&steering_vector(dir, geom), w)?;
    Ok(element_gain_db(dir, pat) + 10.0 * g.max(1e-300).log10())
}
