//! System-level Monte-Carlo harness: deployment, UE association, per-step
//! beamforming under every requested mode, and INR / SNR-loss metrics.
//!
//! Each time step draws its own random stream from the run seed, so steps
//! run in parallel and are merged in step order; within a step samples are
//! ordered by (BS, satellite, mode).

mod config;
mod deploy;
mod metrics;

use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{element_gain_db, steering_vector, UraGeometry};
use crate::channel::{synth_terrestrial, table_lookup, ChannelError, LinkGeometry, MultipathConfig, SatChannelTable};
use crate::codebook::{select_region, CodebookError, CodebookTensor};
use crate::ephemeris::{compute_tracks, format_timestamp, sample_times, visible_satellites, EphemerisError, SatelliteTrack, TleRecord};
use crate::geometry::{global_to_local, SteeringDirection};
use crate::linalg::CVector;
use crate::linkbudget::{fspl_db, inr_db, LinkBudgetError};
use crate::nulling::{link_gain, rx_beamformer, tx_beamformer, NullingConfig, NullingError, NullingMode};

pub use config::{ArrayConfig, Deployment, ModeKind, ScenarioConfig, SimConfig};
pub use deploy::{
    associate, deploy, drop_and_associate, drop_ues, received_power_proxy_db, site_positions, ue_direction, BaseStation,
    Ue,
};
pub use metrics::{
    analyze, elevation_mass, histogram_pdf, read_inr_csv, read_rho_csv, write_cdf_csv, write_inr_csv, write_rho_csv,
    Ecdf, InrSample, MetricSet, SnrLossSample, SummaryRow, CDF_CSV_HEADER, ELEVATION_BINS, INR_CSV_HEADER,
    RHO_CSV_HEADER, SUMMARY_CSV_HEADER,
};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const INR_FILE: &str = "inr.csv";
pub const RHO_FILE: &str = "rho.csv";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no samples")]
    EmptySamples,
    #[error("metric error: {0}")]
    Metric(String),
    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Ephemeris(#[from] EphemerisError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Nulling(#[from] NullingError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    LinkBudget(#[from] LinkBudgetError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One evaluated beamforming strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub kind: ModeKind,
    pub lambda: f64,
}

impl Mode {
    pub fn label(&self) -> String {
        match self.kind {
            ModeKind::NoNulling => "no_nulling".into(),
            ModeKind::Los => format!("los_lambda_{}", self.lambda),
            ModeKind::Multipath => format!("multipath_lambda_{}", self.lambda),
            ModeKind::Codebook => "codebook".into(),
        }
    }
}

/// Modes in evaluation order: configured kinds, each nulling kind once per λ.
pub fn expand_modes(sim: &SimConfig) -> Vec<Mode> {
    let mut out = Vec::new();
    for &kind in &sim.modes {
        match kind {
            ModeKind::Los | ModeKind::Multipath => {
                out.extend(sim.lambdas.iter().map(|&lambda| Mode { kind, lambda }));
            }
            _ => out.push(Mode { kind, lambda: 0.0 }),
        }
    }
    out
}

/// 3GPP UMa line-of-sight probability for ground-level UEs.
pub fn los_probability(d2d_m: f64) -> f64 {
    if d2d_m <= 18.0 {
        1.0
    } else {
        18.0 / d2d_m + (-d2d_m / 63.0).exp() * (1.0 - 18.0 / d2d_m)
    }
}

fn mix_seed(a: u64, b: u64) -> u64 {
    a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03).rotate_left(29)
}

/// Run header written next to the metric CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub config_sha256: String,
    pub n_sites: usize,
    pub n_bs: usize,
    pub n_ue: usize,
    pub n_steps: usize,
    pub active_bs_per_step: usize,
    pub n_sat: usize,
    pub n_satellites_in_catalog: usize,
    pub modes: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricSet,
    pub manifest: Manifest,
}

/// Deployment, UE drop, tracks and channel tables shared by all steps.
pub struct World<'a> {
    pub cfg: &'a ScenarioConfig,
    pub bs: Vec<BaseStation>,
    pub ues: Vec<Ue>,
    pub association: Vec<usize>,
    pub times: Vec<DateTime<Utc>>,
    pub tracks: Vec<SatelliteTrack>,
    pub modes: Vec<Mode>,
    bs_array: UraGeometry,
    ue_array: UraGeometry,
    tables: Vec<SatChannelTable>,
    served: Vec<Vec<usize>>,
    codebook: Option<&'a CodebookTensor>,
}

impl<'a> World<'a> {
    pub fn new(
        cfg: &'a ScenarioConfig,
        tle: &[TleRecord],
        codebook: Option<&'a CodebookTensor>,
    ) -> Result<Self, ScenarioError> {
        cfg.validate()?;
        let bs_array = cfg.arrays.bs()?;
        let ue_array = cfg.arrays.ue()?;
        let modes = expand_modes(&cfg.sim);
        let wants_codebook = modes.iter().any(|m| m.kind == ModeKind::Codebook);
        let codebook = if wants_codebook { codebook } else { None };
        if wants_codebook {
            let cb = codebook.ok_or_else(|| ScenarioError::Config("codebook mode requires a codebook tensor".into()))?;
            if cb.spec.n_t() != bs_array.n_elements() {
                return Err(ScenarioError::Config(format!(
                    "codebook has N_t = {}, BS array has {}",
                    cb.spec.n_t(),
                    bs_array.n_elements()
                )));
            }
            if cb.spec.downtilt_deg != cfg.deployment.downtilt_deg {
                return Err(ScenarioError::Config(format!(
                    "codebook designed for downtilt {} deg, deployment uses {}",
                    cb.spec.downtilt_deg, cfg.deployment.downtilt_deg
                )));
            }
        }

        let bs = deploy(&cfg.deployment)?;
        let (ues, association) = drop_and_associate(
            &bs,
            &cfg.deployment,
            cfg.deployment.n_ue,
            mix_seed(cfg.seed, 1),
            &cfg.pattern,
        );
        let mut served = vec![Vec::new(); bs.len()];
        for (u, &b) in association.iter().enumerate() {
            served[b].push(u);
        }

        let start = cfg.sim.start_time()?;
        let end = start + Duration::milliseconds((cfg.sim.duration_min * 60_000.0).round() as i64);
        let times = sample_times(start, end, Duration::milliseconds((cfg.sim.step_s * 1000.0).round() as i64));
        let tracks = compute_tracks(tle, &cfg.station, &times)?;

        let tables = bs
            .par_iter()
            .map(|b| {
                let c = MultipathConfig {
                    seed: mix_seed(mix_seed(cfg.seed, 2) ^ cfg.satellite_channel.seed, b.id as u64),
                    ..cfg.satellite_channel
                };
                SatChannelTable::build(&c, &bs_array, |g| {
                    global_to_local(g, &b.orientation).expect("table bins are global")
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(World {
            cfg,
            bs,
            ues,
            association,
            times,
            tracks,
            modes,
            bs_array,
            ue_array,
            tables,
            served,
            codebook,
        })
    }

    pub fn active_bs_per_step(&self) -> usize {
        let eligible = self.served.iter().filter(|s| !s.is_empty()).count();
        ((self.cfg.sim.network_load * self.bs.len() as f64).round() as usize)
            .max(1)
            .min(eligible)
    }

    /// Samples of one time step.
    pub fn step(&self, index: usize) -> Result<MetricSet, ScenarioError> {
        let cfg = self.cfg;
        let t = self.times[index];
        let ts = format_timestamp(t);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 3));
        rng.set_stream(index as u64);

        let eligible: Vec<usize> = (0..self.bs.len()).filter(|&b| !self.served[b].is_empty()).collect();
        let mut active: Vec<usize> = sample_indices(&mut rng, eligible.len(), self.active_bs_per_step())
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        active.sort_unstable();
        // per-link draws are taken up front so they do not depend on the
        // number of satellites or modes
        let links: Vec<(usize, usize, bool, u64)> = active
            .iter()
            .map(|&b| {
                let s = &self.served[b];
                let ue = s[rng.gen_range(0..s.len())];
                let (_, d3) = ue_direction(&self.bs[b], &self.ues[ue], cfg.deployment.ue_height_m);
                let d2 = (d3 * d3 - (cfg.deployment.bs_height_m - cfg.deployment.ue_height_m).powi(2))
                    .max(0.0)
                    .sqrt();
                let los = rng.gen::<f64>() < los_probability(d2);
                (b, ue, los, rng.gen::<u64>())
            })
            .collect();

        let visible = visible_satellites(&self.tracks, t, cfg.sim.min_elevation_deg);
        let k = cfg.sim.n_sat.min(visible.len());
        let mut picked: Vec<usize> = sample_indices(&mut rng, visible.len(), k).into_vec();
        picked.sort_by(|&a, &b| visible[a].0.cmp(&visible[b].0));
        let sats: Vec<(String, SteeringDirection, f64)> = picked
            .iter()
            .map(|&i| {
                let (id, dir) = &visible[i];
                let dist = self
                    .tracks
                    .iter()
                    .find(|tr| &tr.sat_id == id)
                    .and_then(|tr| tr.at(t))
                    .map(|s| s.distance_m)
                    .expect("visible satellites have a sample at t");
                (id.clone(), *dir, dist)
            })
            .collect();
        let region = self.codebook.and_then(|cb| {
            let els: Vec<f64> = visible.iter().map(|(_, d)| d.elevation_deg).collect();
            select_region(&els, cb.n)
        });

        let n_modes = self.modes.len();
        // interference power per (satellite, mode), summed over BSs
        let mut interference = vec![vec![0.0; n_modes]; sats.len()];
        let mut rho = Vec::with_capacity(links.len() * n_modes);
        for &(b, ue, los, seed) in &links {
            let (leak, loss) = self.evaluate_link(b, ue, los, seed, &sats, region)?;
            for (acc, l) in interference.iter_mut().zip(&leak) {
                for (a, v) in acc.iter_mut().zip(l) {
                    *a += v;
                }
            }
            for (m, r) in self.modes.iter().zip(loss) {
                rho.push(SnrLossSample {
                    timestamp: ts.clone(),
                    bs_id: b,
                    rho_t_db: r,
                    mode: m.label(),
                });
            }
        }
        let mut inr = Vec::with_capacity(sats.len() * n_modes);
        for ((id, dir, _), powers) in sats.iter().zip(&interference) {
            for (m, &p) in self.modes.iter().zip(powers) {
                inr.push(InrSample {
                    timestamp: ts.clone(),
                    sat_id: id.clone(),
                    elevation_deg: dir.elevation_deg,
                    inr_db: inr_db(&[p], &cfg.link),
                    mode: m.label(),
                });
            }
        }
        Ok(MetricSet { inr, rho })
    }

    /// Tap-averaged interference per (satellite, mode) and `ρ^T` per mode.
    #[allow(clippy::type_complexity)]
    fn evaluate_link(
        &self,
        b: usize,
        ue: usize,
        los: bool,
        seed: u64,
        sats: &[(String, SteeringDirection, f64)],
        region: Option<usize>,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>), ScenarioError> {
        let cfg = self.cfg;
        let bs = &self.bs[b];
        let (ue_dir, _) = ue_direction(bs, &self.ues[ue], cfg.deployment.ue_height_m);
        let ue_local = global_to_local(&ue_dir, &bs.orientation).expect("ue direction is global");
        let h = synth_terrestrial(
            &cfg.terrestrial_channel,
            &LinkGeometry {
                tx_dir: ue_local,
                tx_array: self.bs_array,
                rx_array: self.ue_array,
                los,
            },
            seed,
        )?;

        let mut sat_taps = Vec::with_capacity(sats.len());
        let mut los_vecs = Vec::with_capacity(sats.len());
        let mut path_gain = Vec::with_capacity(sats.len());
        for (_, dir, dist) in sats {
            let local = global_to_local(dir, &bs.orientation).expect("track directions are global");
            let ch = table_lookup(&self.tables[b], dir)?.with_los_direction(&local, &self.bs_array)?;
            sat_taps.push(ch.taps);
            los_vecs.push(steering_vector(&local, &self.bs_array));
            let g_db = element_gain_db(&local, &cfg.pattern) - fspl_db(*dist, cfg.link.carrier_hz)?;
            path_gain.push(10f64.powf(g_db / 10.0));
        }
        let codeword: Option<CVector> = match (self.codebook, region) {
            (Some(cb), Some(l)) => {
                let i = cb.nearest_direction(&ue_local);
                Some(cb.codebooks[l][i].w.clone())
            }
            _ => None,
        };

        let n_taps = h.taps.len() as f64;
        let n_modes = self.modes.len();
        let mut leak = vec![vec![0.0; n_modes]; sats.len()];
        let mut gain = vec![0.0; n_modes];
        let mut base_gain = 0.0;
        for (k, hk) in h.taps.iter().enumerate() {
            let w_r = rx_beamformer(hk)?;
            let (_, w0) = tx_beamformer(hk, &w_r, &[], &NullingConfig::no_nulling())?;
            base_gain += link_gain(hk, &w_r, &w0) / n_taps;
            let mp_vecs: Vec<CVector> = sat_taps.iter().map(|t| t[k].clone()).collect();
            for (m, mode) in self.modes.iter().enumerate() {
                let w = match mode.kind {
                    ModeKind::NoNulling => w0.clone(),
                    ModeKind::Los => {
                        let c = NullingConfig::new(mode.lambda, NullingMode::LosNulling)?;
                        tx_beamformer(hk, &w_r, &los_vecs, &c)?.1
                    }
                    ModeKind::Multipath => {
                        let c = NullingConfig::new(mode.lambda, NullingMode::MultipathNulling)?;
                        tx_beamformer(hk, &w_r, &mp_vecs, &c)?.1
                    }
                    ModeKind::Codebook => codeword.clone().unwrap_or_else(|| w0.clone()),
                };
                gain[m] += link_gain(hk, &w_r, &w) / n_taps;
                for (i, hi) in mp_vecs.iter().enumerate() {
                    leak[i][m] += hi.dot(&w).norm_sqr() * path_gain[i] / n_taps;
                }
            }
        }
        let loss = gain
            .iter()
            .map(|&g| if g > 0.0 { 10.0 * (base_gain / g).log10() } else { f64::INFINITY })
            .collect();
        Ok((leak, loss))
    }
}

/// Run every time step and assemble the metrics and manifest.
pub fn run(
    cfg: &ScenarioConfig,
    tle: &[TleRecord],
    codebook: Option<&CodebookTensor>,
) -> Result<RunOutput, ScenarioError> {
    let world = World::new(cfg, tle, codebook)?;
    let steps = (0..world.times.len())
        .into_par_iter()
        .map(|i| world.step(i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut metrics = MetricSet::default();
    for s in steps {
        metrics.inr.extend(s.inr);
        metrics.rho.extend(s.rho);
    }
    let manifest = Manifest {
        seed: cfg.seed,
        config_sha256: cfg.hash(),
        n_sites: site_positions(&cfg.deployment).len(),
        n_bs: world.bs.len(),
        n_ue: world.ues.len(),
        n_steps: world.times.len(),
        active_bs_per_step: world.active_bs_per_step(),
        n_sat: cfg.sim.n_sat,
        n_satellites_in_catalog: tle.len(),
        modes: world.modes.iter().map(Mode::label).collect(),
        notes: vec![
            "active BSs are resampled uniformly without replacement at every step".into(),
            "one served UE per active sector per step, drawn from its associated UEs".into(),
            "satellite look angles are computed at the ground station and shared by all BSs".into(),
            "metrics are averaged in linear scale over frequency taps".into(),
        ],
    };
    Ok(RunOutput { metrics, manifest })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write `inr.csv`, `rho.csv` and the manifest into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = [
        (INR_FILE, write_inr_csv(&out.metrics.inr)),
        (RHO_FILE, write_rho_csv(&out.metrics.rho)),
        (MANIFEST_FILE, toml::to_string(&out.manifest).expect("manifest serializes")),
    ];
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(io_err(&p))?;
    }
    Ok(())
}

/// Load a run directory written by [`write_run`]; the manifest must exist.
pub fn read_run(dir: &Path) -> Result<(Manifest, MetricSet), ScenarioError> {
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(io_err(&p))
    };
    let manifest: Manifest =
        toml::from_str(&read(MANIFEST_FILE)?).map_err(|e| ScenarioError::Metric(format!("manifest: {e}")))?;
    let metrics = MetricSet {
        inr: read_inr_csv(&read(INR_FILE)?)?,
        rho: read_rho_csv(&read(RHO_FILE)?)?,
    };
    Ok((manifest, metrics))
}
