//! Synthetic terrestrial MIMO and BS-to-satellite channels, plus the
//! elevation/azimuth binned satellite channel table.
//!
//! Channels are built from a handful of geometric clusters: each cluster is a
//! rank-1 term `a_r(Ω_rx) a_t(Ω_tx)^H` with a power from an exponential decay
//! profile and a random phase. Frequency selectivity comes from a per-cluster
//! normalized delay that rotates the cluster phase from tap to tap.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{steering_vector, UraGeometry};
use crate::geometry::{wrap_azimuth, Frame, SteeringDirection};
use crate::linalg::{CMatrix, CVector, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel tap {0} is identically zero")]
    ZeroChannel(usize),
    #[error("satellite channel table is empty")]
    EmptyTable,
    #[error("invalid multipath config: {0}")]
    InvalidConfig(&'static str),
    #[error("channel table parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultipathConfig {
    pub clusters: usize,
    pub decay_db_per_cluster: f64,
    pub angular_spread_deg: f64,
    /// Ratio of the geometric (first) cluster power to the remaining
    /// clusters' total. Only applied when the link is line-of-sight.
    pub k_factor_db: f64,
    pub taps: usize,
    pub seed: u64,
}

impl Default for MultipathConfig {
    fn default() -> Self {
        MultipathConfig {
            clusters: 4,
            decay_db_per_cluster: 3.0,
            angular_spread_deg: 10.0,
            k_factor_db: 9.0,
            taps: 4,
            seed: 0,
        }
    }
}

impl MultipathConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.clusters == 0 {
            return Err(ChannelError::InvalidConfig("clusters must be >= 1"));
        }
        if self.taps == 0 {
            return Err(ChannelError::InvalidConfig("taps must be >= 1"));
        }
        if !(self.angular_spread_deg >= 0.0 && self.angular_spread_deg.is_finite()) {
            return Err(ChannelError::InvalidConfig("angular_spread_deg must be finite and >= 0"));
        }
        if !self.decay_db_per_cluster.is_finite() || self.decay_db_per_cluster < 0.0 {
            return Err(ChannelError::InvalidConfig("decay_db_per_cluster must be finite and >= 0"));
        }
        if self.k_factor_db.is_nan() {
            return Err(ChannelError::InvalidConfig("k_factor_db must not be NaN"));
        }
        Ok(())
    }

    /// K-factor in linear scale (infinite for a pure LOS channel).
    pub fn k_linear(&self) -> f64 {
        10f64.powf(self.k_factor_db / 10.0)
    }

    /// Relative powers of the non-geometric clusters (sum 1), or empty when
    /// there is only one cluster.
    fn scatter_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (1..self.clusters)
            .map(|c| 10f64.powf(-self.decay_db_per_cluster * c as f64 / 10.0))
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / s).collect()
    }
}

/// Arrays and geometric direction of one BS-to-UE link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Direction of the UE in the BS sector's local frame.
    pub tx_dir: SteeringDirection,
    pub tx_array: UraGeometry,
    pub rx_array: UraGeometry,
    pub los: bool,
}

/// One `N_r × N_t` matrix per frequency tap.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrestrialChannel {
    pub taps: Vec<CMatrix>,
}

impl TerrestrialChannel {
    pub fn n_r(&self) -> usize {
        self.taps.first().map_or(0, |h| h.rows())
    }

    pub fn n_t(&self) -> usize {
        self.taps.first().map_or(0, |h| h.cols())
    }
}

/// Scale each tap so that `||H||_F² = N_t·N_r`.
pub fn normalize_terrestrial(h: &TerrestrialChannel) -> Result<TerrestrialChannel, ChannelError> {
    let mut taps = Vec::with_capacity(h.taps.len());
    for (k, tap) in h.taps.iter().enumerate() {
        let f = tap.frobenius_norm();
        if !(f > 0.0) {
            return Err(ChannelError::ZeroChannel(k));
        }
        let target = ((tap.rows() * tap.cols()) as f64).sqrt();
        taps.push(tap.scale_real(target / f));
    }
    Ok(TerrestrialChannel { taps })
}

fn cluster_phases(rng: &mut ChaCha8Rng, taps: usize) -> Vec<C64> {
    let psi = rng.gen_range(0.0..2.0 * PI);
    let delay = rng.gen_range(0.0..1.0);
    (0..taps)
        .map(|k| C64::from_polar(1.0, psi - 2.0 * PI * delay * k as f64 / taps as f64))
        .collect()
}

fn perturbed(dir: &SteeringDirection, spread: f64, rng: &mut ChaCha8Rng) -> SteeringDirection {
    let (de, da) = if spread > 0.0 {
        let n = Normal::new(0.0, spread).expect("spread is finite and positive");
        (n.sample(rng), n.sample(rng))
    } else {
        (0.0, 0.0)
    };
    clamp_dir(dir.elevation_deg + de, dir.azimuth_deg + da, dir.frame)
}

fn clamp_dir(el: f64, az: f64, frame: Frame) -> SteeringDirection {
    SteeringDirection {
        elevation_deg: el.clamp(-90.0, 90.0),
        azimuth_deg: wrap_azimuth(az),
        frame,
    }
}

fn random_rx_dir(rng: &mut ChaCha8Rng) -> SteeringDirection {
    clamp_dir(rng.gen_range(-20.0..20.0), rng.gen_range(-180.0..180.0), Frame::Local)
}

/// Seeded cluster channel for one BS-to-UE link, normalized per tap.
///
/// The first cluster leaves along the geometric direction; on LOS links it
/// carries `K/(K+1)` of the power. The remaining clusters leave at Gaussian
/// offsets (standard deviation `angular_spread_deg`) around it and arrive
/// from uniformly drawn directions at the UE.
pub fn synth_terrestrial(
    config: &MultipathConfig,
    geometry: &LinkGeometry,
    seed: u64,
) -> Result<TerrestrialChannel, ChannelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nr = geometry.rx_array.n_elements();
    let nt = geometry.tx_array.n_elements();

    let scatter = config.scatter_powers();
    let first_power = if config.clusters == 1 {
        1.0
    } else if geometry.los {
        let k = config.k_linear();
        if k.is_infinite() {
            1.0
        } else {
            k / (k + 1.0)
        }
    } else {
        // without a dominant path the geometric cluster is simply the
        // strongest step of the decay profile
        let total: f64 = (0..config.clusters)
            .map(|c| 10f64.powf(-config.decay_db_per_cluster * c as f64 / 10.0))
            .sum();
        1.0 / total
    };
    let mut powers = vec![first_power];
    powers.extend(scatter.iter().map(|p| p * (1.0 - first_power)));

    let mut taps = vec![CMatrix::zeros(nr, nt); config.taps];
    for (c, &p) in powers.iter().enumerate() {
        let tx = if c == 0 {
            geometry.tx_dir
        } else {
            perturbed(&geometry.tx_dir, config.angular_spread_deg, &mut rng)
        };
        let rx = random_rx_dir(&mut rng);
        let phases = cluster_phases(&mut rng, config.taps);
        if p == 0.0 {
            continue;
        }
        let at = steering_vector(&tx, &geometry.tx_array);
        let ar = steering_vector(&rx, &geometry.rx_array);
        let outer = ar.outer(&at);
        for (tap, ph) in taps.iter_mut().zip(&phases) {
            *tap = tap.add(&outer.scale(*ph * p.sqrt()));
        }
    }
    normalize_terrestrial(&TerrestrialChannel { taps })
}

/// BS-to-satellite channel: a LOS steering vector plus weak scattered
/// paths, normalized per tap to `||h||² = N_t`.
///
/// The LOS and scattered parts are kept separately so the channel of a
/// table bin can be re-pointed at the exact satellite direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SatChannel {
    pub taps: Vec<CVector>,
    pub los: bool,
    pub los_dir: SteeringDirection,
    pub los_amplitude: f64,
    /// Un-normalized scattered component per tap.
    pub nlos: Vec<CVector>,
    /// Global (elevation, azimuth) center of the table bin this came from.
    pub source_bin: Option<(f64, f64)>,
}

impl SatChannel {
    fn assemble(
        los_dir: SteeringDirection,
        los_amplitude: f64,
        nlos: Vec<CVector>,
        geom: &UraGeometry,
        source_bin: Option<(f64, f64)>,
    ) -> Result<SatChannel, ChannelError> {
        let e = steering_vector(&los_dir, geom).scale_real(los_amplitude);
        let nt = geom.n_elements() as f64;
        let mut taps = Vec::with_capacity(nlos.len());
        for (k, s) in nlos.iter().enumerate() {
            let raw = e.add(s);
            let n = raw.norm();
            if !(n > 0.0) {
                return Err(ChannelError::ZeroChannel(k));
            }
            taps.push(raw.scale_real(nt.sqrt() / n));
        }
        Ok(SatChannel {
            taps,
            los: los_amplitude > 0.0,
            los_dir,
            los_amplitude,
            nlos,
            source_bin,
        })
    }

    /// Same scattered paths, LOS component re-pointed at `dir` (local frame).
    pub fn with_los_direction(&self, dir: &SteeringDirection, geom: &UraGeometry) -> Result<SatChannel, ChannelError> {
        Self::assemble(*dir, self.los_amplitude, self.nlos.clone(), geom, self.source_bin)
    }

    pub fn n_t(&self) -> usize {
        self.taps.first().map_or(0, |h| h.len())
    }
}

/// Seeded satellite channel toward `dir` (sector local frame).
///
/// The LOS term is `e(dir)` weighted by `√(K/(K+1))`. Scattered clusters
/// leave toward the ground and nearby clutter: local elevation uniform in
/// `[-30, 30]`, azimuth uniform over the sector.
pub fn synth_satellite(
    dir: &SteeringDirection,
    config: &MultipathConfig,
    seed: u64,
    geom: &UraGeometry,
) -> Result<SatChannel, ChannelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nt = geom.n_elements();
    let k = config.k_linear();
    let (los_amp, scatter_amp) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };

    let scatter = if config.clusters > 1 {
        config.scatter_powers()
    } else {
        vec![1.0]
    };
    let mut nlos = vec![CVector::zeros(nt); config.taps];
    for p in scatter {
        let d = clamp_dir(rng.gen_range(-30.0..30.0), rng.gen_range(-60.0..60.0), dir.frame);
        let phases = cluster_phases(&mut rng, config.taps);
        if scatter_amp == 0.0 {
            continue;
        }
        let e = steering_vector(&d, geom);
        for (acc, ph) in nlos.iter_mut().zip(&phases) {
            *acc = acc.axpy(*ph * (p.sqrt() * scatter_amp), &e);
        }
    }
    SatChannel::assemble(*dir, los_amp, nlos, geom, None)
}

/// Elevation bin centers (degrees) of the default table.
pub const TABLE_ELEVATIONS: [f64; 7] = [30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];
/// Azimuth bin centers (degrees) of the default table.
pub const TABLE_AZIMUTHS: [f64; 6] = [-150.0, -90.0, -30.0, 30.0, 90.0, 150.0];

/// Satellite channels of one BS sector keyed by global (elevation, azimuth)
/// bin centers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SatChannelTable {
    pub entries: Vec<((f64, f64), SatChannel)>,
}

impl SatChannelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, el_deg: f64, az_deg: f64, mut ch: SatChannel) {
        ch.source_bin = Some((el_deg, az_deg));
        self.entries.retain(|((e, a), _)| !(*e == el_deg && *a == az_deg));
        self.entries.push(((el_deg, az_deg), ch));
        self.entries
            .sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Build the full default table for a sector. `to_local` maps a global
    /// direction into the sector frame; each bin gets its own seed derived
    /// from `config.seed` and the bin index.
    pub fn build<F>(config: &MultipathConfig, geom: &UraGeometry, to_local: F) -> Result<Self, ChannelError>
    where
        F: Fn(&SteeringDirection) -> SteeringDirection,
    {
        let mut table = SatChannelTable::new();
        for (i, &el) in TABLE_ELEVATIONS.iter().enumerate() {
            for (j, &az) in TABLE_AZIMUTHS.iter().enumerate() {
                let g = SteeringDirection {
                    elevation_deg: el,
                    azimuth_deg: az,
                    frame: Frame::Global,
                };
                let local = to_local(&g);
                let seed = config
                    .seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((i * TABLE_AZIMUTHS.len() + j) as u64);
                let ch = synth_satellite(&local, config, seed, geom)?;
                table.insert(el, az, ch);
            }
        }
        Ok(table)
    }
}

/// Channel of the bin whose center is nearest (great-circle) to `dir`;
/// ties go to the lower elevation bin, then the lower azimuth bin.
pub fn table_lookup<'a>(table: &'a SatChannelTable, dir: &SteeringDirection) -> Result<&'a SatChannel, ChannelError> {
    let probe = SteeringDirection { frame: Frame::Global, ..*dir };
    let mut best: Option<(f64, &SatChannel)> = None;
    // entries are sorted by (el, az), so keeping the first strict minimum
    // implements the tie rule
    for ((el, az), ch) in &table.entries {
        let center = SteeringDirection {
            elevation_deg: *el,
            azimuth_deg: *az,
            frame: Frame::Global,
        };
        let d = probe.angular_separation_deg(&center);
        match best {
            Some((bd, _)) if d >= bd - 1e-9 => {}
            _ => best = Some((d, ch)),
        }
    }
    best.map(|(_, ch)| ch).ok_or(ChannelError::EmptyTable)
}

fn push_vec(out: &mut String, tag: &str, k: usize, v: &CVector) {
    let _ = write!(out, "{tag} {k}");
    for z in v.iter() {
        let _ = write!(out, " {:.16e} {:.16e}", z.re, z.im);
    }
    out.push('\n');
}

/// Text serialization: one `bin` record per table entry followed by its
/// normalized taps and scattered components (17 significant digits).
pub fn write_table(table: &SatChannelTable) -> String {
    let mut out = String::from("# satellite channel table v1\n");
    let (nt, taps) = table
        .entries
        .first()
        .map_or((0, 0), |(_, c)| (c.n_t(), c.taps.len()));
    let _ = writeln!(out, "n_t {nt} taps {taps} bins {}", table.len());
    for ((el, az), ch) in &table.entries {
        let _ = writeln!(
            out,
            "bin {:.16e} {:.16e} los_dir {:.16e} {:.16e} los_amplitude {:.16e}",
            el, az, ch.los_dir.elevation_deg, ch.los_dir.azimuth_deg, ch.los_amplitude
        );
        for (k, t) in ch.taps.iter().enumerate() {
            push_vec(&mut out, "tap", k, t);
        }
        for (k, t) in ch.nlos.iter().enumerate() {
            push_vec(&mut out, "nlos", k, t);
        }
    }
    out
}

pub fn read_table(text: &str) -> Result<SatChannelTable, ChannelError> {
    let perr = |line: usize, msg: &str| ChannelError::Parse {
        line,
        msg: msg.to_string(),
    };
    let num = |line: usize, s: Option<&str>| -> Result<f64, ChannelError> {
        s.ok_or_else(|| perr(line, "missing number"))?
            .parse::<f64>()
            .map_err(|e| perr(line, &e.to_string()))
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != "n_t" || h[2] != "taps" || h[4] != "bins" {
        return Err(perr(hl, "expected 'n_t <n> taps <n> bins <n>'"));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| perr(hl, &e.to_string()));
    let nt = parse_usize(h[1])?;
    let ntaps = parse_usize(h[3])?;
    let nbins = parse_usize(h[5])?;

    let read_vec = |(ln, l): (usize, &str), tag: &str, k: usize| -> Result<CVector, ChannelError> {
        let mut it = l.split_whitespace();
        if it.next() != Some(tag) {
            return Err(perr(ln, &format!("expected '{tag}' record")));
        }
        if it.next().and_then(|s| s.parse::<usize>().ok()) != Some(k) {
            return Err(perr(ln, "tap index out of sequence"));
        }
        let vals: Vec<&str> = it.collect();
        if vals.len() != 2 * nt {
            return Err(perr(ln, &format!("expected {} numbers, found {}", 2 * nt, vals.len())));
        }
        vals.chunks(2)
            .map(|p| Ok(C64::new(num(ln, Some(p[0]))?, num(ln, Some(p[1]))?)))
            .collect::<Result<Vec<_>, _>>()
            .map(CVector)
    };

    let mut table = SatChannelTable::new();
    for _ in 0..nbins {
        let (bl, bin) = lines.next().ok_or_else(|| perr(0, "truncated table"))?;
        let f: Vec<&str> = bin.split_whitespace().collect();
        if f.len() != 8 || f[0] != "bin" || f[3] != "los_dir" || f[6] != "los_amplitude" {
            return Err(perr(bl, "malformed bin record"));
        }
        let el = num(bl, Some(f[1]))?;
        let az = num(bl, Some(f[2]))?;
        let los_dir = SteeringDirection {
            elevation_deg: num(bl, Some(f[4]))?,
            azimuth_deg: num(bl, Some(f[5]))?,
            frame: Frame::Local,
        };
        let los_amplitude = num(bl, Some(f[7]))?;
        let mut taps = Vec::with_capacity(ntaps);
        for k in 0..ntaps {
            let l = lines.next().ok_or_else(|| perr(bl, "truncated taps"))?;
            taps.push(read_vec(l, "tap", k)?);
        }
        let mut nlos = Vec::with_capacity(ntaps);
        for k in 0..ntaps {
            let l = lines.next().ok_or_else(|| perr(bl, "truncated scattered components"))?;
            nlos.push(read_vec(l, "nlos", k)?);
        }
        table.insert(
            el,
            az,
            SatChannel {
                taps,
                los: los_amplitude > 0.0,
                los_dir,
                los_amplitude,
                nlos,
                source_bin: None,
            },
        );
    }
    if let Some((l, _)) = lines.next() {
        return Err(perr(l, "trailing data after last bin"));
    }
    Ok(table)
}
