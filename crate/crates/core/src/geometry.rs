//! Earth / satellite / base-station geometry.
//!
//! Angles are in degrees throughout the public API. In every frame the
//! elevation is measured from the horizontal plane (positive up) and the
//! azimuth counterclockwise when viewed from above. In the global frame
//! azimuth 0 points east; in a sector's local frame azimuth 0 is the
//! sector boresight and local elevation 0 is the downtilted boresight.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("elevation {0} deg outside the allowed range")]
    ElevationOutOfRange(f64),
    #[error("azimuth {0} deg outside [-180, 180]")]
    AzimuthOutOfRange(f64),
    #[error("expected a direction in the {expected:?} frame")]
    WrongFrame { expected: Frame },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Global,
    Local,
}

/// An (elevation, azimuth) pair tagged with the frame it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringDirection {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub frame: Frame,
}

/// Wrap an angle into [-180, 180).
pub fn wrap_azimuth(az_deg: f64) -> f64 {
    let w = (az_deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

impl SteeringDirection {
    pub fn new(elevation_deg: f64, azimuth_deg: f64, frame: Frame) -> Result<Self, GeometryError> {
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(GeometryError::ElevationOutOfRange(elevation_deg));
        }
        if !(-180.0..=180.0).contains(&azimuth_deg) {
            return Err(GeometryError::AzimuthOutOfRange(azimuth_deg));
        }
        Ok(SteeringDirection {
            elevation_deg,
            azimuth_deg,
            frame,
        })
    }

    pub fn global(elevation_deg: f64, azimuth_deg: f64) -> Result<Self, GeometryError> {
        Self::new(elevation_deg, azimuth_deg, Frame::Global)
    }

    pub fn local(elevation_deg: f64, azimuth_deg: f64) -> Result<Self, GeometryError> {
        Self::new(elevation_deg, azimuth_deg, Frame::Local)
    }

    /// Cartesian unit vector (x: azimuth 0, y: azimuth 90, z: up).
    pub fn unit_vector(&self) -> [f64; 3] {
        let el = self.elevation_deg.to_radians();
        let az = self.azimuth_deg.to_radians();
        [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
    }

    /// Inverse of [`unit_vector`](Self::unit_vector). The input need not be
    /// normalized. Azimuth is wrapped to [-180, 180).
    pub fn from_vector(v: [f64; 3], frame: Frame) -> Self {
        let horiz = v[0].hypot(v[1]);
        let el = v[2].atan2(horiz).to_degrees();
        let az = if horiz == 0.0 {
            0.0
        } else {
            wrap_azimuth(v[1].atan2(v[0]).to_degrees())
        };
        SteeringDirection {
            elevation_deg: el.clamp(-90.0, 90.0),
            azimuth_deg: az,
            frame,
        }
    }

    /// Great-circle angle to another direction, in degrees.
    pub fn angular_separation_deg(&self, other: &SteeringDirection) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        s.atan2(dot).to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarthParams {
    #[serde(default = "default_earth_radius")]
    pub earth_radius_m: f64,
    pub sat_altitude_m: f64,
}

fn default_earth_radius() -> f64 {
    DEFAULT_EARTH_RADIUS_M
}

impl EarthParams {
    pub fn new(earth_radius_m: f64, sat_altitude_m: f64) -> Result<Self, GeometryError> {
        if !(earth_radius_m > 0.0) {
            return Err(GeometryError::InvalidParameter("earth_radius_m must be > 0"));
        }
        if !(sat_altitude_m > 0.0) {
            return Err(GeometryError::InvalidParameter("sat_altitude_m must be > 0"));
        }
        Ok(EarthParams {
            earth_radius_m,
            sat_altitude_m,
        })
    }

    pub fn with_altitude(sat_altitude_m: f64) -> Result<Self, GeometryError> {
        Self::new(DEFAULT_EARTH_RADIUS_M, sat_altitude_m)
    }
}

/// Mounting of one BS sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsOrientation {
    #[serde(default = "default_downtilt")]
    pub downtilt_deg: f64,
    #[serde(default)]
    pub sector_bearing_deg: f64,
    #[serde(default = "default_bs_height")]
    pub height_m: f64,
}

fn default_downtilt() -> f64 {
    12.0
}

fn default_bs_height() -> f64 {
    35.0
}

impl Default for BsOrientation {
    fn default() -> Self {
        BsOrientation {
            downtilt_deg: default_downtilt(),
            sector_bearing_deg: 0.0,
            height_m: default_bs_height(),
        }
    }
}

impl BsOrientation {
    pub fn new(downtilt_deg: f64, sector_bearing_deg: f64, height_m: f64) -> Result<Self, GeometryError> {
        if !(0.0..90.0).contains(&downtilt_deg) {
            return Err(GeometryError::InvalidParameter("downtilt_deg must be in [0, 90)"));
        }
        Ok(BsOrientation {
            downtilt_deg,
            sector_bearing_deg,
            height_m,
        })
    }

    /// Boresight-aligned orientation with the given downtilt.
    pub fn with_downtilt(downtilt_deg: f64) -> Result<Self, GeometryError> {
        Self::new(downtilt_deg, 0.0, default_bs_height())
    }
}

/// Slant range from a ground point to a satellite seen at global elevation
/// `theta` on a spherical Earth.
pub fn slant_distance(theta: &SteeringDirection, params: &EarthParams) -> Result<f64, GeometryError> {
    if theta.frame != Frame::Global {
        return Err(GeometryError::WrongFrame {
            expected: Frame::Global,
        });
    }
    slant_distance_at(theta.elevation_deg, params)
}

/// [`slant_distance`] on a bare elevation angle.
pub fn slant_distance_at(elevation_deg: f64, params: &EarthParams) -> Result<f64, GeometryError> {
    if !(0.0..=90.0).contains(&elevation_deg) {
        return Err(GeometryError::ElevationOutOfRange(elevation_deg));
    }
    let re = params.earth_radius_m;
    let h = params.sat_altitude_m;
    let s = elevation_deg.to_radians().sin();
    let root = (re * re * s * s + h * h + 2.0 * h * re).sqrt();
    // root - re*s loses digits near zenith; the conjugate form does not.
    Ok((h * h + 2.0 * h * re) / (root + re * s))
}

/// Global direction expressed in a sector's local frame.
pub fn global_to_local(dir: &SteeringDirection, orient: &BsOrientation) -> Result<SteeringDirection, GeometryError> {
    if dir.frame != Frame::Global {
        return Err(GeometryError::WrongFrame {
            expected: Frame::Global,
        });
    }
    let rebased = SteeringDirection {
        azimuth_deg: wrap_azimuth(dir.azimuth_deg - orient.sector_bearing_deg),
        ..*dir
    };
    let v = rebased.unit_vector();
    let (sd, cd) = orient.downtilt_deg.to_radians().sin_cos();
    // local x' = (cos d, 0, -sin d), z' = (sin d, 0, cos d), y' = y
    let local = [v[0] * cd - v[2] * sd, v[1], v[0] * sd + v[2] * cd];
    Ok(SteeringDirection::from_vector(local, Frame::Local))
}

/// Inverse of [`global_to_local`].
pub fn local_to_global(dir: &SteeringDirection, orient: &BsOrientation) -> Result<SteeringDirection, GeometryError> {
    if dir.frame != Frame::Local {
        return Err(GeometryError::WrongFrame {
            expected: Frame::Local,
        });
    }
    let v = dir.unit_vector();
    let (sd, cd) = orient.downtilt_deg.to_radians().sin_cos();
    let g = [v[0] * cd + v[2] * sd, v[1], -v[0] * sd + v[2] * cd];
    let mut out = SteeringDirection::from_vector(g, Frame::Global);
    out.azimuth_deg = wrap_azimuth(out.azimuth_deg + orient.sector_bearing_deg);
    Ok(out)
}

/// Upper bound on the angular change of a satellite moving at `v_mps` for
/// `t_s` seconds at altitude `h_m`, in degrees.
pub fn motion_angle_bound(v_mps: f64, t_s: f64, h_m: f64) -> f64 {
    (v_mps * t_s / h_m).atan().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    Up,
    Down,
}

/// One of the two halves of a sector's beam space, in the local frame.
///
/// `Up` holds local elevations in `[Δ, 90+Δ]` (global elevation above the
/// horizon), `Down` holds `[-90+Δ, Δ]`; both are limited to `±60°` azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpacePartition {
    pub kind: PartitionKind,
    pub downtilt_deg: f64,
    pub azimuth_limit_deg: f64,
}

impl BeamSpacePartition {
    pub fn up(downtilt_deg: f64) -> Self {
        BeamSpacePartition {
            kind: PartitionKind::Up,
            downtilt_deg,
            azimuth_limit_deg: 60.0,
        }
    }

    pub fn down(downtilt_deg: f64) -> Self {
        BeamSpacePartition {
            kind: PartitionKind::Down,
            downtilt_deg,
            azimuth_limit_deg: 60.0,
        }
    }

    /// Elevation interval relative to the downtilted boresight.
    pub fn elevation_bounds(&self) -> (f64, f64) {
        match self.kind {
            PartitionKind::Up => (self.downtilt_deg, 90.0 + self.downtilt_deg),
            PartitionKind::Down => (-90.0 + self.downtilt_deg, self.downtilt_deg),
        }
    }
}

pub fn in_partition(dir: &SteeringDirection, part: &BeamSpacePartition) -> bool {
    if dir.frame != Frame::Local {
        return false;
    }
    let (lo, hi) = part.elevation_bounds();
    (lo..=hi).contains(&dir.elevation_deg) && dir.azimuth_deg.abs() <= part.azimuth_limit_deg
}
