//! Site grid, sector base stations, UE drops and association.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Deployment;
use super::ScenarioError;
use crate::antenna::{element_gain_db, ElementPattern};
use crate::geometry::{global_to_local, wrap_azimuth, BsOrientation, Frame, SteeringDirection};

/// One sector of a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub id: usize,
    pub site: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub orientation: BsOrientation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ue {
    pub x_m: f64,
    pub y_m: f64,
}

/// Hexagonal lattice anchored at the area origin: rows `√3/2·ISD` apart,
/// odd rows shifted by half an ISD. Returns site coordinates row by row.
pub fn site_positions(d: &Deployment) -> Vec<(f64, f64)> {
    let dy = d.isd_m * 3f64.sqrt() / 2.0;
    let eps = 1e-9 * d.isd_m;
    let mut out = Vec::new();
    let mut row = 0usize;
    loop {
        let y = row as f64 * dy;
        if y > d.area_height_m + eps {
            break;
        }
        let mut x = if row % 2 == 1 { d.isd_m / 2.0 } else { 0.0 };
        while x <= d.area_width_m + eps {
            out.push((x, y));
            x += d.isd_m;
        }
        row += 1;
    }
    out
}

/// Sector BSs, `sectors` per site with bearings evenly spread from 0°.
pub fn deploy(d: &Deployment) -> Result<Vec<BaseStation>, ScenarioError> {
    d.validate()?;
    let sites = site_positions(d);
    if sites.is_empty() {
        return Err(ScenarioError::Config("deployment area too small for one site".into()));
    }
    let mut out = Vec::with_capacity(sites.len() * d.sectors);
    for (s, &(x, y)) in sites.iter().enumerate() {
        for k in 0..d.sectors {
            let bearing = wrap_azimuth(360.0 * k as f64 / d.sectors as f64);
            out.push(BaseStation {
                id: out.len(),
                site: s,
                x_m: x,
                y_m: y,
                orientation: BsOrientation {
                    downtilt_deg: d.downtilt_deg,
                    sector_bearing_deg: bearing,
                    height_m: d.bs_height_m,
                },
            });
        }
    }
    Ok(out)
}

/// Uniform UE drop over the deployment rectangle.
pub fn drop_ues(d: &Deployment, n_ue: usize, seed: u64) -> Vec<Ue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_ue)
        .map(|_| Ue {
            x_m: rng.gen::<f64>() * d.area_width_m,
            y_m: rng.gen::<f64>() * d.area_height_m,
        })
        .collect()
}

/// Direction of a UE seen from a BS, in the global frame, and the 3D range.
pub fn ue_direction(bs: &BaseStation, ue: &Ue, ue_height_m: f64) -> (SteeringDirection, f64) {
    let dx = ue.x_m - bs.x_m;
    let dy = ue.y_m - bs.y_m;
    let dz = ue_height_m - bs.orientation.height_m;
    let horiz = dx.hypot(dy);
    let az = if horiz == 0.0 { 0.0 } else { wrap_azimuth(dy.atan2(dx).to_degrees()) };
    let dir = SteeringDirection {
        elevation_deg: dz.atan2(horiz).to_degrees(),
        azimuth_deg: az,
        frame: Frame::Global,
    };
    (dir, (horiz * horiz + dz * dz).sqrt())
}

/// Received-power proxy: element gain toward the UE minus `20 log10 d`.
pub fn received_power_proxy_db(bs: &BaseStation, ue: &Ue, ue_height_m: f64, pattern: &ElementPattern) -> f64 {
    let (dir, dist) = ue_direction(bs, ue, ue_height_m);
    let local = global_to_local(&dir, &bs.orientation).expect("direction is global");
    element_gain_db(&local, pattern) - 20.0 * dist.max(1.0).log10()
}

/// Serving BS id for every UE (maximum proxy; ties to the lower id).
pub fn associate(bs_list: &[BaseStation], ues: &[Ue], ue_height_m: f64, pattern: &ElementPattern) -> Vec<usize> {
    ues.iter()
        .map(|ue| {
            let mut best: Option<(f64, usize)> = None;
            for bs in bs_list {
                let p = received_power_proxy_db(bs, ue, ue_height_m, pattern);
                let better = match best {
                    None => true,
                    Some((bp, bid)) => p > bp || (p == bp && bs.id < bid),
                };
                if better {
                    best = Some((p, bs.id));
                }
            }
            best.map_or(0, |b| b.1)
        })
        .collect()
}

/// Drop `n_ue` UEs and associate them.
pub fn drop_and_associate(
    bs_list: &[BaseStation],
    d: &Deployment,
    n_ue: usize,
    seed: u64,
    pattern: &ElementPattern,
) -> (Vec<Ue>, Vec<usize>) {
    let ues = drop_ues(d, n_ue, seed);
    let assoc = associate(bs_list, &ues, d.ue_height_m, pattern);
    (ues, assoc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_grid_is_three_by_three() {
        let d = Deployment::desk();
        assert_eq!(site_positions(&d).len(), 9);
        let bs = deploy(&d).unwrap();
        assert_eq!(bs.len(), 27);
        let bearings: Vec<f64> = bs.iter().take(3).map(|b| b.orientation.sector_bearing_deg).collect();
        assert_eq!(bearings, [0.0, 120.0, -120.0]);
    }

    #[test]
    fn minimal_area_has_a_site() {
        let d = Deployment {
            area_width_m: 2000.0,
            area_height_m: 2000.0,
            ..Default::default()
        };
        let bs = deploy(&d).unwrap();
        assert!(bs.len() >= 3 && bs.len() % 3 == 0);
    }

    #[test]
    fn ue_in_front_of_sector_associates_to_it() {
        let d = Deployment::desk();
        let bs = deploy(&d).unwrap();
        let (x, y) = site_positions(&d)[4];
        // 150 m east of the site: boresight of its 0° sector
        let ue = Ue { x_m: x + 150.0, y_m: y };
        let a = associate(&bs, &[ue], d.ue_height_m, &ElementPattern::default());
        assert_eq!(bs[a[0]].site, 4);
        assert_eq!(bs[a[0]].orientation.sector_bearing_deg, 0.0);
    }
}
