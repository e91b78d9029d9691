//! TLE ingestion, orbit propagation and per-station visibility tracks.

mod orbit;
mod tle;

use std::fmt::Write as _;

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{SteeringDirection, DEFAULT_EARTH_RADIUS_M};

pub use orbit::{
    gmst_rad, julian_date, propagate, semi_major_axis_m, solve_kepler, topocentric, ACCURACY_WINDOW_DAYS, MU_EARTH,
};
pub use tle::{format_lines, format_tle, parse_record, parse_tle, parse_tle_lenient, tle_checksum, TleRecord, TLE_LINE_LEN};

/// Synthetic LEO shell (53°, ~550 km) arranged to pass over the default
/// station during the first hour after its epoch.
pub const SAMPLE_CONSTELLATION_TLE: &str = include_str!("../../data/sample_constellation.tle");

pub const TRACK_CSV_HEADER: &str = "sat_id,timestamp_utc,elevation_deg,azimuth_deg,distance_m";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EphemerisError {
    #[error("line {line}: expected 69 characters, found {len}")]
    LineLength { line: usize, len: usize },
    #[error("line {line}: checksum mismatch (computed {expected}, found '{found}')")]
    Checksum { line: usize, expected: u32, found: char },
    #[error("line {line}: cannot parse {field} from '{value}'")]
    Field {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: record is missing its element lines")]
    MissingLine { line: usize },
    #[error("Kepler equation did not converge (eccentricity {eccentricity})")]
    KeplerNotConverged { eccentricity: f64 },
    #[error("requested time is {days:.2} days from the element epoch")]
    OutsideAccuracyWindow { days: f64 },
    #[error("invalid ground station: {0}")]
    InvalidStation(&'static str),
    #[error("track csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// Observer on a spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStation {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
}

impl GroundStation {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self, EphemerisError> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(EphemerisError::InvalidStation("latitude outside [-90, 90]"));
        }
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(EphemerisError::InvalidStation("longitude outside [-180, 180]"));
        }
        if !altitude_m.is_finite() {
            return Err(EphemerisError::InvalidStation("altitude must be finite"));
        }
        Ok(GroundStation {
            latitude_deg,
            longitude_deg,
            altitude_m,
        })
    }

    /// 40°04′01.12″N, 105°05′15.33″W
    pub fn boulder() -> Self {
        GroundStation {
            latitude_deg: 40.0 + 4.0 / 60.0 + 1.12 / 3600.0,
            longitude_deg: -(105.0 + 5.0 / 60.0 + 15.33 / 3600.0),
            altitude_m: 0.0,
        }
    }

    /// Earth-fixed position, meters.
    pub fn ecef(&self) -> [f64; 3] {
        let r = DEFAULT_EARTH_RADIUS_M + self.altitude_m;
        let (slat, clat) = self.latitude_deg.to_radians().sin_cos();
        let (slon, clon) = self.longitude_deg.to_radians().sin_cos();
        [r * clat * clon, r * clat * slon, r * slat]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub t: DateTime<Utc>,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub distance_m: f64,
}

impl TrackSample {
    /// Global-frame direction of the sample.
    pub fn direction(&self) -> SteeringDirection {
        SteeringDirection {
            elevation_deg: self.elevation_deg,
            azimuth_deg: self.azimuth_deg,
            frame: crate::geometry::Frame::Global,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteTrack {
    pub sat_id: String,
    pub samples: Vec<TrackSample>,
}

impl SatelliteTrack {
    pub fn at(&self, t: DateTime<Utc>) -> Option<&TrackSample> {
        self.samples
            .binary_search_by(|s| s.t.cmp(&t))
            .ok()
            .map(|i| &self.samples[i])
    }
}

/// Ground station and sampling window of a tracking run (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    #[serde(default = "GroundStation::boulder")]
    pub station: GroundStation,
    /// RFC 3339 start instant.
    pub start: String,
    pub duration_min: f64,
    #[serde(default = "default_step_s")]
    pub step_s: f64,
    /// Adds a `visible` column to the track CSV.
    #[serde(default)]
    pub min_elevation_deg: Option<f64>,
}

fn default_step_s() -> f64 {
    60.0
}

impl TrackConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let c: TrackConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        c.times()?;
        GroundStation::new(c.station.latitude_deg, c.station.longitude_deg, c.station.altitude_m)
            .map_err(|e| e.to_string())?;
        Ok(c)
    }

    /// Half-open sample instants `[start, start + duration)`.
    pub fn times(&self) -> Result<Vec<DateTime<Utc>>, String> {
        let start = DateTime::parse_from_rfc3339(&self.start)
            .map_err(|e| format!("start '{}': {e}", self.start))?
            .with_timezone(&Utc);
        if !(self.duration_min > 0.0 && self.step_s > 0.0) {
            return Err("duration_min and step_s must be positive".into());
        }
        let end = start + Duration::milliseconds((self.duration_min * 60_000.0).round() as i64);
        Ok(sample_times(start, end, Duration::milliseconds((self.step_s * 1000.0).round() as i64)))
    }
}

/// Sample instants `start, start+step, …` strictly before `end`.
pub fn sample_times(start: DateTime<Utc>, end: DateTime<Utc>, step: Duration) -> Vec<DateTime<Utc>> {
    let mut out = Vec::new();
    if step <= Duration::zero() {
        return out;
    }
    let mut t = start;
    while t < end {
        out.push(t);
        t += step;
    }
    out
}

pub fn compute_track(
    rec: &TleRecord,
    station: &GroundStation,
    times: &[DateTime<Utc>],
) -> Result<SatelliteTrack, EphemerisError> {
    let samples = times
        .iter()
        .map(|&t| {
            let p = propagate(rec, t)?;
            let (el, az, d) = topocentric(p, station, t);
            Ok(TrackSample {
                t,
                elevation_deg: el,
                azimuth_deg: az,
                distance_m: d,
            })
        })
        .collect::<Result<Vec<_>, EphemerisError>>()?;
    Ok(SatelliteTrack {
        sat_id: rec.sat_id(),
        samples,
    })
}

/// Tracks for every record, computed in parallel; output order follows the
/// input order.
pub fn compute_tracks(
    records: &[TleRecord],
    station: &GroundStation,
    times: &[DateTime<Utc>],
) -> Result<Vec<SatelliteTrack>, EphemerisError> {
    records
        .par_iter()
        .map(|r| compute_track(r, station, times))
        .collect()
}

/// Satellites at or above `min_elevation_deg` at instant `t`, highest
/// first (ties by id). Tracks without a sample at `t` are skipped.
pub fn visible_satellites(
    tracks: &[SatelliteTrack],
    t: DateTime<Utc>,
    min_elevation_deg: f64,
) -> Vec<(String, SteeringDirection)> {
    let mut out: Vec<(String, SteeringDirection)> = tracks
        .iter()
        .filter_map(|tr| {
            tr.at(t)
                .filter(|s| s.elevation_deg >= min_elevation_deg)
                .map(|s| (tr.sat_id.clone(), s.direction()))
        })
        .collect();
    out.sort_by(|a, b| {
        b.1.elevation_deg
            .total_cmp(&a.1.elevation_deg)
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

/// Track CSV. With `min_elevation` set, a trailing `visible` column (0/1)
/// is appended.
pub fn write_tracks_csv(tracks: &[SatelliteTrack], min_elevation: Option<f64>) -> String {
    let mut out = String::from(TRACK_CSV_HEADER);
    if min_elevation.is_some() {
        out.push_str(",visible");
    }
    out.push('\n');
    for tr in tracks {
        for s in &tr.samples {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                tr.sat_id,
                format_timestamp(s.t),
                s.elevation_deg,
                s.azimuth_deg,
                s.distance_m
            );
            if let Some(m) = min_elevation {
                out.push_str(if s.elevation_deg >= m { ",1" } else { ",0" });
            }
            out.push('\n');
        }
    }
    out
}

/// Inverse of [`write_tracks_csv`]; an optional `visible` column is ignored.
/// Rows of one satellite must be contiguous and strictly increasing in time.
pub fn read_tracks_csv(text: &str) -> Result<Vec<SatelliteTrack>, EphemerisError> {
    let err = |line: usize, msg: String| EphemerisError::Csv { line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let header = header.trim();
    let ncols = if header == TRACK_CSV_HEADER {
        5
    } else if header == format!("{TRACK_CSV_HEADER},visible") {
        6
    } else {
        return Err(err(1, format!("unexpected header '{header}'")));
    };
    let mut tracks: Vec<SatelliteTrack> = Vec::new();
    for (i, l) in lines {
        let ln = i + 1;
        let f: Vec<&str> = l.trim().split(',').collect();
        if f.len() != ncols {
            return Err(err(ln, format!("expected {ncols} fields, found {}", f.len())));
        }
        let t = DateTime::parse_from_rfc3339(f[1])
            .map_err(|e| err(ln, format!("timestamp: {e}")))?
            .with_timezone(&Utc);
        let num = |s: &str, name: &str| s.parse::<f64>().map_err(|e| err(ln, format!("{name}: {e}")));
        let sample = TrackSample {
            t,
            elevation_deg: num(f[2], "elevation_deg")?,
            azimuth_deg: num(f[3], "azimuth_deg")?,
            distance_m: num(f[4], "distance_m")?,
        };
        if !(-90.0..=90.0).contains(&sample.elevation_deg) {
            return Err(err(ln, "elevation outside [-90, 90]".into()));
        }
        match tracks.last_mut() {
            Some(tr) if tr.sat_id == f[0] => {
                if tr.samples.last().is_some_and(|p| p.t >= t) {
                    return Err(err(ln, "timestamps must be strictly increasing".into()));
                }
                tr.samples.push(sample);
            }
            _ => {
                if tracks.iter().any(|tr| tr.sat_id == f[0]) {
                    return Err(err(ln, format!("rows of satellite {} are not contiguous", f[0])));
                }
                tracks.push(SatelliteTrack {
                    sat_id: f[0].to_string(),
                    samples: vec![sample],
                });
            }
        }
    }
    Ok(tracks)
}
