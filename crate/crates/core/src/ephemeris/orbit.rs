//! Two-body propagation from mean elements and topocentric look angles.

use std::f64::consts::PI;

use chrono::{DateTime, Utc};

use super::{EphemerisError, GroundStation, TleRecord};
use crate::geometry::wrap_azimuth;

/// Earth gravitational parameter, m³/s².
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Propagation is only trusted this far from the element epoch.
pub const ACCURACY_WINDOW_DAYS: f64 = 7.0;
const KEPLER_TOL: f64 = 1e-12;
const KEPLER_MAX_ITERS: usize = 100;

/// Semi-major axis from mean motion, meters.
pub fn semi_major_axis_m(mean_motion_rev_per_day: f64) -> f64 {
    let n = mean_motion_rev_per_day * 2.0 * PI / 86_400.0;
    (MU_EARTH / (n * n)).cbrt()
}

/// Solve `E − e sin E = M` by Newton iteration.
pub fn solve_kepler(mean_anomaly_rad: f64, e: f64) -> Result<f64, EphemerisError> {
    if !(0.0..1.0).contains(&e) {
        return Err(EphemerisError::KeplerNotConverged { eccentricity: e });
    }
    let m = mean_anomaly_rad.rem_euclid(2.0 * PI);
    let mut big_e = if e < 0.8 { m } else { PI };
    for _ in 0..KEPLER_MAX_ITERS {
        let f = big_e - e * big_e.sin() - m;
        let step = f / (1.0 - e * big_e.cos());
        big_e -= step;
        if step.abs() <= KEPLER_TOL {
            return Ok(big_e);
        }
    }
    Err(EphemerisError::KeplerNotConverged { eccentricity: e })
}

fn seconds_between(a: DateTime<Utc>, b: DateTime<Utc>) -> f64 {
    let d = b - a;
    d.num_seconds() as f64 + d.subsec_nanos() as f64 * 1e-9
}

/// ECI (true-equator, mean-equinox of date, approximated as inertial)
/// position in meters.
pub fn propagate(rec: &TleRecord, t: DateTime<Utc>) -> Result<[f64; 3], EphemerisError> {
    let dt = seconds_between(rec.epoch, t);
    if dt.abs() > ACCURACY_WINDOW_DAYS * 86_400.0 {
        return Err(EphemerisError::OutsideAccuracyWindow {
            days: dt / 86_400.0,
        });
    }
    let e = rec.eccentricity;
    let n = rec.mean_motion_rev_per_day * 2.0 * PI / 86_400.0;
    let a = semi_major_axis_m(rec.mean_motion_rev_per_day);
    let m = rec.mean_anomaly_deg.to_radians() + n * dt;
    let big_e = solve_kepler(m, e)?;

    let (se, ce) = big_e.sin_cos();
    let xp = a * (ce - e);
    let yp = a * (1.0 - e * e).sqrt() * se;

    let (sw, cw) = rec.arg_perigee_deg.to_radians().sin_cos();
    let (si, ci) = rec.inclination_deg.to_radians().sin_cos();
    let (so, co) = rec.raan_deg.to_radians().sin_cos();
    // R3(−Ω) R1(−i) R3(−ω) applied to (xp, yp, 0)
    let x1 = cw * xp - sw * yp;
    let y1 = sw * xp + cw * yp;
    let y2 = ci * y1;
    let z2 = si * y1;
    Ok([co * x1 - so * y2, so * x1 + co * y2, z2])
}

/// Julian date (UTC used as UT1).
pub fn julian_date(t: DateTime<Utc>) -> f64 {
    t.timestamp() as f64 / 86_400.0 + t.timestamp_subsec_nanos() as f64 * 1e-9 / 86_400.0 + 2_440_587.5
}

/// Greenwich mean sidereal time, IAU 1982 expression, in radians [0, 2π).
pub fn gmst_rad(t: DateTime<Utc>) -> f64 {
    let tu = (julian_date(t) - 2_451_545.0) / 36_525.0;
    let secs = 67_310.548_41 + (876_600.0 * 3600.0 + 8_640_184.812_866) * tu + 0.093_104 * tu * tu
        - 6.2e-6 * tu * tu * tu;
    (secs.rem_euclid(86_400.0) / 86_400.0) * 2.0 * PI
}

/// Look angles from a station: (elevation deg, azimuth deg counterclockwise
/// from east in [−180, 180), range m).
pub fn topocentric(pos_eci: [f64; 3], station: &GroundStation, t: DateTime<Utc>) -> (f64, f64, f64) {
    let (sg, cg) = gmst_rad(t).sin_cos();
    // ECI → ECEF is a rotation by −GMST about z
    let x = cg * pos_eci[0] + sg * pos_eci[1];
    let y = -sg * pos_eci[0] + cg * pos_eci[1];
    let z = pos_eci[2];

    let s = station.ecef();
    let (dx, dy, dz) = (x - s[0], y - s[1], z - s[2]);
    let (slat, clat) = station.latitude_deg.to_radians().sin_cos();
    let (slon, clon) = station.longitude_deg.to_radians().sin_cos();
    let east = -slon * dx + clon * dy;
    let north = -slat * clon * dx - slat * slon * dy + clat * dz;
    let up = clat * clon * dx + clat * slon * dy + slat * dz;

    let horiz = east.hypot(north);
    let el = up.atan2(horiz).to_degrees();
    let az = if horiz == 0.0 {
        0.0
    } else {
        wrap_azimuth(north.atan2(east).to_degrees())
    };
    (el, az, (dx * dx + dy * dy + dz * dz).sqrt())
}
