//! Scenario configuration (TOML). Every table rejects unknown keys.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ScenarioError;
use crate::antenna::{ElementPattern, UraGeometry};
use crate::channel::MultipathConfig;
use crate::ephemeris::GroundStation;
use crate::linkbudget::LinkParams;

/// Hexagonal site layout on a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Deployment {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub isd_m: f64,
    pub sectors: usize,
    pub bs_height_m: f64,
    pub downtilt_deg: f64,
    pub ue_height_m: f64,
    /// UEs dropped once per run and associated to sectors.
    pub n_ue: usize,
}

impl Default for Deployment {
    fn default() -> Self {
        Deployment {
            area_width_m: 24_000.0,
            area_height_m: 15_000.0,
            isd_m: 1732.0,
            sectors: 3,
            bs_height_m: 35.0,
            downtilt_deg: 12.0,
            ue_height_m: 1.6,
            n_ue: 1000,
        }
    }
}

impl Deployment {
    /// 3 × 3 sites.
    pub fn desk() -> Self {
        Deployment {
            area_width_m: 4330.0,
            area_height_m: 3000.0,
            n_ue: 200,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Config(m.to_string()));
        if !(self.area_width_m >= 0.0 && self.area_height_m >= 0.0) {
            return bad("deployment area must be non-negative");
        }
        if !(self.isd_m > 0.0) {
            return bad("isd_m must be positive");
        }
        if self.sectors == 0 {
            return bad("sectors must be >= 1");
        }
        if !(0.0..90.0).contains(&self.downtilt_deg) {
            return bad("downtilt_deg must be in [0, 90)");
        }
        if !(self.bs_height_m > self.ue_height_m) {
            return bad("bs_height_m must exceed ue_height_m");
        }
        if self.n_ue == 0 {
            return bad("n_ue must be >= 1");
        }
        Ok(())
    }
}

/// Beamforming strategies evaluated side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    NoNulling,
    Los,
    Multipath,
    Codebook,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub network_load: f64,
    pub n_sat: usize,
    /// RFC 3339 start instant.
    pub start: String,
    pub duration_min: f64,
    pub step_s: f64,
    pub min_elevation_deg: f64,
    pub modes: Vec<ModeKind>,
    pub lambdas: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            network_load: 0.2,
            n_sat: 10,
            start: "2024-03-01T00:00:00Z".into(),
            duration_min: 60.0,
            step_s: 60.0,
            min_elevation_deg: 25.0,
            modes: vec![ModeKind::NoNulling, ModeKind::Los, ModeKind::Multipath],
            lambdas: vec![0.1, 1.0],
        }
    }
}

impl SimConfig {
    pub fn start_time(&self) -> Result<DateTime<Utc>, ScenarioError> {
        DateTime::parse_from_rfc3339(&self.start)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| ScenarioError::Config(format!("start '{}': {e}", self.start)))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if !(self.network_load > 0.0 && self.network_load <= 1.0) {
            return bad(format!("network_load must be in (0, 1], got {}", self.network_load));
        }
        if !(self.duration_min > 0.0 && self.step_s > 0.0) {
            return bad("duration_min and step_s must be positive".into());
        }
        if !(0.0..=90.0).contains(&self.min_elevation_deg) {
            return bad("min_elevation_deg must be in [0, 90]".into());
        }
        if self.modes.is_empty() {
            return bad("at least one mode is required".into());
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return bad(format!("lambda must be finite and >= 0, got {l}"));
        }
        let needs_lambda = self.modes.iter().any(|m| matches!(m, ModeKind::Los | ModeKind::Multipath));
        if needs_lambda && self.lambdas.is_empty() {
            return bad("los/multipath modes need at least one lambda".into());
        }
        self.start_time().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub ue_rows: usize,
    pub ue_cols: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            bs_rows: 8,
            bs_cols: 8,
            ue_rows: 1,
            ue_cols: 2,
        }
    }
}

impl ArrayConfig {
    pub fn bs(&self) -> Result<UraGeometry, ScenarioError> {
        UraGeometry::half_wavelength(self.bs_rows, self.bs_cols).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn ue(&self) -> Result<UraGeometry, ScenarioError> {
        UraGeometry::half_wavelength(self.ue_rows, self.ue_cols).map_err(|e| ScenarioError::Config(e.to_string()))
    }
}

fn default_satellite_channel() -> MultipathConfig {
    MultipathConfig {
        k_factor_db: 20.0,
        ..Default::default()
    }
}

fn default_link() -> LinkParams {
    // sample atmospheric/polarization loss for system runs
    LinkParams {
        l_a_db: 2.0,
        ..Default::default()
    }
}

/// Complete scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub deployment: Deployment,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub arrays: ArrayConfig,
    #[serde(default = "default_link")]
    pub link: LinkParams,
    #[serde(default)]
    pub pattern: ElementPattern,
    #[serde(default)]
    pub terrestrial_channel: MultipathConfig,
    #[serde(default = "default_satellite_channel")]
    pub satellite_channel: MultipathConfig,
    #[serde(default = "GroundStation::boulder")]
    pub station: GroundStation,
    /// TLE file; the bundled sample constellation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tle_path: Option<String>,
    /// Codebook tensor file, required by the codebook mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook_path: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            deployment: Deployment::default(),
            sim: SimConfig::default(),
            arrays: ArrayConfig::default(),
            link: default_link(),
            pattern: ElementPattern::default(),
            terrestrial_channel: MultipathConfig::default(),
            satellite_channel: default_satellite_channel(),
            station: GroundStation::boulder(),
            tle_path: None,
            codebook_path: None,
        }
    }
}

impl ScenarioConfig {
    /// Desk-scale defaults: 3 × 3 sites, one hour at one-minute steps.
    pub fn desk() -> Self {
        ScenarioConfig {
            deployment: Deployment::desk(),
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML rendering (defaults filled in).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.deployment.validate()?;
        self.sim.validate()?;
        self.arrays.bs()?;
        self.arrays.ue()?;
        self.link.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        for c in [&self.terrestrial_channel, &self.satellite_channel] {
            c.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        }
        GroundStation::new(self.station.latitude_deg, self.station.longitude_deg, self.station.altitude_m)
            .map_err(|e| ScenarioError::Config(e.to_string()))?;
        Ok(())
    }
}
