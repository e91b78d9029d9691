//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::{Duration, Instant};

use leo_coexist::antenna::{beamforming_gain, steering_vector, UraGeometry};
use leo_coexist::codebook::{
    build_codebook_with_report, eps_for_loss_db, AuxSolvers, CodebookSpec, TargetNullRegion,
};
use leo_coexist::ephemeris::{
    compute_track, format_tle, parse_tle, propagate, sample_times, semi_major_axis_m, GroundStation,
    SAMPLE_CONSTELLATION_TLE,
};
use leo_coexist::geometry::{motion_angle_bound, slant_distance_at, EarthParams, SteeringDirection};
use leo_coexist::linalg::CMatrix;
use leo_coexist::linkbudget::snr_degradation_db;
use leo_coexist::nulling::{hermitian_max_eigvec, link_gain, los_interference_matrix, solve_beamformers, NullingConfig, NullingMode};
use leo_coexist::scenario::{self, elevation_mass, Ecdf, MetricSet, ScenarioConfig, World, ELEVATION_BINS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn desk_config() -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    ScenarioConfig::from_toml(&std::fs::read_to_string(&path).expect("configs/desk.toml")).unwrap()
}

fn c1_zenith() -> Outcome {
    let d = slant_distance_at(90.0, &EarthParams::with_altitude(600e3).unwrap()).unwrap();
    let rel = (d - 600e3).abs() / 600e3;
    outcome(rel <= 1e-9, format!("d(90°) = {d:.6} m, rel err {rel:.1e}"))
}

fn c2_motion() -> Outcome {
    let b = motion_angle_bound(7560.0, 1e-3, 600e3);
    let rel = (b - 7.2e-4).abs() / 7.2e-4;
    outcome(rel <= 0.05, format!("{b:.4e}° (rel dev {rel:.3})"))
}

fn c3_degradation() -> Outcome {
    let a = snr_degradation_db(-6.0);
    let b = snr_degradation_db(0.0);
    outcome(
        (a - 0.97).abs() <= 0.01 && (b - 3.0103).abs() <= 1e-6,
        format!("ρ(−6 dB) = {a:.4} dB, ρ(0 dB) = {b:.7} dB"),
    )
}

fn c4_max_gain() -> Outcome {
    let geom = UraGeometry::half_wavelength(8, 8).unwrap();
    let e = steering_vector(&SteeringDirection::local(-15.0, 20.0).unwrap(), &geom);
    let g = 10.0 * beamforming_gain(&e, &e.normalized().unwrap()).unwrap().log10();
    outcome((g - 18.06).abs() <= 0.01, format!("{g:.4} dB"))
}

/// Directions drawn until all pairs are at least `min_sep` apart.
fn separated_constellation(rng: &mut ChaCha8Rng, n: usize, min_sep: f64) -> Vec<SteeringDirection> {
    let mut out: Vec<SteeringDirection> = Vec::with_capacity(n);
    while out.len() < n {
        let d = SteeringDirection::local(rng.gen_range(25.0..90.0), rng.gen_range(-60.0..60.0)).unwrap();
        if out.iter().all(|o| o.angular_separation_deg(&d) >= min_sep) {
            out.push(d);
        }
    }
    out
}

fn c5_nulling_instance() -> Outcome {
    let geom = UraGeometry::half_wavelength(8, 8).unwrap();
    let nt = geom.n_elements() as f64;
    let cfg = NullingConfig::new(10.0, NullingMode::LosNulling).unwrap();
    let mut passing = 0;
    let mut gains = Vec::new();
    let mut worst_leak = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sats = separated_constellation(&mut rng, 10, 10.0);
        let ue = SteeringDirection::local(rng.gen_range(-60.0..-5.0), rng.gen_range(-60.0..60.0)).unwrap();
        let h = CMatrix::from_rows(&[steering_vector(&ue, &geom).conj().0]);
        let interferers = los_interference_matrix(&sats, &geom);
        let pair = solve_beamformers(&h, &interferers, &cfg).unwrap();
        let g = 10.0 * link_gain(&h, &pair.w_r, &pair.w_t).log10();
        let leak = interferers
            .iter()
            .map(|e| e.dot(&pair.w_t).norm_sqr() / nt)
            .fold(0.0, f64::max);
        if g >= 17.5 && leak <= 1e-4 {
            passing += 1;
        }
        gains.push(g);
        worst_leak.push(leak);
    }
    gains.sort_by(f64::total_cmp);
    worst_leak.sort_by(f64::total_cmp);
    outcome(
        passing >= 95,
        format!(
            "{passing}/100 constellations pass; median UE gain {:.2} dB, median worst leakage {:.2e}·N_t",
            gains[50], worst_leak[50]
        ),
    )
}

fn c6_eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_val: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=16);
        let m = common::random_hermitian(&mut rng, n);
        let (mu, v) = hermitian_max_eigvec(&m).unwrap();
        let oracle = *common::hermitian_eigenvalues_oracle(&m).last().unwrap();
        worst_val = worst_val.max((mu - oracle).abs());
        worst_res = worst_res.max(m.mul_vec(&v).sub(&v.scale_real(mu)).norm());
    }
    outcome(
        worst_val <= 1e-8 && worst_res <= 1e-8,
        format!("max |μ − μ_oracle| = {worst_val:.1e}, max residual = {worst_res:.1e}"),
    )
}

fn c7_codebook() -> Outcome {
    let geom = UraGeometry::half_wavelength(5, 5).unwrap();
    let spec = CodebookSpec::new(geom, eps_for_loss_db(geom.n_elements(), 2.5));
    let (with_aux, offenders) = build_codebook_with_report(9, Some(10), &spec).unwrap();
    let (no_aux, _) = build_codebook_with_report(9, None, &spec).unwrap();
    let total = 9 * with_aux.n_directions();

    let mut loss_ok = true;
    let mut never_worse = true;
    for (a, b) in with_aux.codebooks.iter().flatten().zip(no_aux.codebooks.iter().flatten()) {
        loss_ok &= a.gain_loss <= spec.eps * (1.0 + 1e-9);
        never_worse &= a.max_sidelobe_up <= b.max_sidelobe_up * (1.0 + 1e-12);
    }

    let target = TargetNullRegion::new(9, 5).unwrap();
    let res = AuxSolvers::new(&target, Some(10), &spec)
        .unwrap()
        .search(&SteeringDirection::local(-20.0, 40.0).unwrap(), &spec);
    let strict = res.codeword.max_sidelobe_up < res.no_aux_sidelobe;

    outcome(
        loss_ok && offenders.is_empty() && never_worse && strict,
        format!(
            "gain-loss ok: {loss_ok}; {}/{total} codewords above the null bound {:.1e}; aux never worse: {never_worse}; \
             (−20°, 40°, l=5) sidelobe {:.3} → {:.3} (k* = {:?})",
            offenders.len(),
            spec.null_bound(),
            res.no_aux_sidelobe,
            res.codeword.max_sidelobe_up,
            res.codeword.k_star
        ),
    )
}

fn median(v: &[f64]) -> f64 {
    Ecdf::new(v).map(|e| e.median()).unwrap_or(f64::NAN)
}

fn c8_tradeoff(m: &MetricSet) -> Outcome {
    let none = median(&m.inr_values("no_nulling"));
    let mut ok = true;
    let mut parts = vec![format!("median INR none {none:.2}")];
    for kind in ["los", "multipath"] {
        let i01 = median(&m.inr_values(&format!("{kind}_lambda_0.1")));
        let i1 = median(&m.inr_values(&format!("{kind}_lambda_1")));
        let r01 = median(&m.rho_values(&format!("{kind}_lambda_0.1")));
        let r1 = median(&m.rho_values(&format!("{kind}_lambda_1")));
        ok &= none > i01 && i01 > i1 && r1 >= r01 && r01 >= 0.0;
        parts.push(format!("{kind} INR {i01:.2}/{i1:.2} ρ^T {r01:.3}/{r1:.3}"));
    }
    let los1 = m.inr_values("los_lambda_1");
    let below = los1.iter().filter(|&&x| x < -6.0).count() as f64 / los1.len() as f64;
    ok &= below >= 0.99;
    parts.push(format!("LOS λ=1 below −6 dB: {:.2}%", 100.0 * below));
    outcome(ok, parts.join("; "))
}

fn c9_los_vs_mp(m: &MetricSet, lambdas: &[f64]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &l in lambdas {
        let key = |s: &scenario::InrSample| (s.timestamp.clone(), s.sat_id.clone());
        let mp: HashMap<_, f64> = m
            .inr
            .iter()
            .filter(|s| s.mode == format!("multipath_lambda_{l}"))
            .map(|s| (key(s), s.inr_db))
            .collect();
        let pairs: Vec<f64> = m
            .inr
            .iter()
            .filter(|s| s.mode == format!("los_lambda_{l}"))
            .filter_map(|s| mp.get(&key(s)).map(|v| (s.inr_db - v).abs()))
            .collect();
        let frac = pairs.iter().filter(|&&d| d <= 1.0).count() as f64 / pairs.len().max(1) as f64;
        ok &= !pairs.is_empty() && frac >= 0.95;
        parts.push(format!("λ={l}: {:.1}% of {} samples within 1 dB", 100.0 * frac, pairs.len()));
    }
    outcome(ok, parts.join("; "))
}

fn c10_elevation(m: &MetricSet, cfg: &ScenarioConfig) -> Outcome {
    let low = Ecdf::new(&m.inr_in_elevation_bin("no_nulling", 0)).map(|e| e.cdf(-6.0));
    let high = Ecdf::new(&m.inr_in_elevation_bin("no_nulling", 2)).map(|e| e.cdf(-6.0));
    let (low, high) = match (low, high) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return outcome(false, "an elevation bin is empty".into()),
    };

    let tle = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let world = World::new(cfg, &tle, None).unwrap();
    let els: Vec<f64> = world
        .tracks
        .iter()
        .flat_map(|t| t.samples.iter().map(|s| s.elevation_deg))
        .filter(|&e| e >= cfg.sim.min_elevation_deg)
        .collect();
    let mass: Vec<f64> = (0..ELEVATION_BINS.len()).map(|b| elevation_mass(&els, b)).collect();
    outcome(
        low < high && mass[0] > mass[2],
        format!(
            "CDF(−6 dB) [25,45] = {low:.3} vs (70,90] = {high:.3}; elevation mass {:.3} / {:.3} / {:.3}",
            mass[0], mass[1], mass[2]
        ),
    )
}

fn run_to_files(cfg: &ScenarioConfig, threads: usize) -> BTreeMap<String, Vec<u8>> {
    let tle = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let out = pool.install(|| scenario::run(cfg, &tle, None)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    scenario::write_run(dir.path(), &out).unwrap();
    let mut files = BTreeMap::new();
    for e in std::fs::read_dir(dir.path()).unwrap() {
        let e = e.unwrap();
        files.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
    }
    let (_, metrics) = scenario::read_run(dir.path()).unwrap();
    for (name, text) in scenario::analyze(&metrics).unwrap() {
        files.insert(format!("analysis/{name}"), text.into_bytes());
    }
    files
}

fn c11_determinism(cfg: &ScenarioConfig) -> Outcome {
    let a = run_to_files(cfg, 1);
    let b = run_to_files(cfg, 4);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    outcome(
        a.len() == b.len() && differing.is_empty() && !a.is_empty(),
        format!("{} files compared (1 vs 4 threads), {} differ", a.len(), differing.len()),
    )
}

fn c12_ephemeris() -> Outcome {
    let recs = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let round_trip = format_tle(&recs) == SAMPLE_CONSTELLATION_TLE && parse_tle(&format_tle(&recs)).unwrap() == recs;

    let mut worst_radius: f64 = 0.0;
    for r in recs.iter().take(10) {
        let a = semi_major_axis_m(r.mean_motion_rev_per_day);
        for k in 0..=1000 {
            let t = r.epoch + chrono::Duration::milliseconds((r.period_s() * k as f64).round() as i64);
            let p = propagate(r, t).unwrap();
            let rad = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            worst_radius = worst_radius.max((rad / a - 1.0).abs());
        }
    }

    let st = GroundStation::boulder();
    let start = recs[0].epoch;
    let times = sample_times(start, start + chrono::Duration::hours(3), chrono::Duration::seconds(60));
    let mut worst_dist: f64 = 0.0;
    let mut n = 0;
    for r in &recs {
        let h = semi_major_axis_m(r.mean_motion_rev_per_day) - leo_coexist::geometry::DEFAULT_EARTH_RADIUS_M;
        let earth = EarthParams::with_altitude(h).unwrap();
        for s in compute_track(r, &st, &times).unwrap().samples {
            if s.elevation_deg >= 0.0 {
                let d = slant_distance_at(s.elevation_deg, &earth).unwrap();
                worst_dist = worst_dist.max((s.distance_m - d).abs() / d);
                n += 1;
            }
        }
    }
    outcome(
        round_trip && worst_radius <= 1e-9 && worst_dist <= 0.02 && n > 0,
        format!(
            "round trip {round_trip}; radius drift {worst_radius:.1e}; topocentric vs slant {:.2e} over {n} samples",
            worst_dist
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, Duration, Duration)> = Vec::new();
    let mut check = |id: usize, name: &'static str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let dt = t0.elapsed();
        let status = if o.pass && dt <= limit { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{status}] {name}: {} ({:.2} s)", o.detail, dt.as_secs_f64());
        results.push((id, name, o, dt, limit));
    };

    let secs = Duration::from_secs;
    check(1, "zenith slant distance", secs(1), &mut c1_zenith);
    check(2, "motion bound", secs(1), &mut c2_motion);
    check(3, "SNR degradation mapping", secs(1), &mut c3_degradation);
    check(4, "max beamforming gain", secs(1), &mut c4_max_gain);
    check(5, "nulling instance", secs(30), &mut c5_nulling_instance);
    check(6, "eigensolver oracle equivalence", secs(10), &mut c6_eigensolver);
    check(7, "codebook feasibility and null depth", secs(300), &mut c7_codebook);

    let cfg = desk_config();
    let t0 = Instant::now();
    let tle = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let run = scenario::run(&cfg, &tle, None).unwrap();
    let run_time = t0.elapsed();
    let m = run.metrics;
    check(8, "λ trade-off ordering", secs(120), &mut || {
        let mut o = c8_tradeoff(&m);
        o.detail = format!("{} [run {:.1} s]", o.detail, run_time.as_secs_f64());
        o
    });
    check(9, "LOS ≈ multipath nulling", secs(120), &mut || c9_los_vs_mp(&m, &cfg.sim.lambdas));
    check(10, "elevation study", secs(120), &mut || c10_elevation(&m, &cfg));
    check(11, "determinism", secs(240), &mut || c11_determinism(&cfg));
    check(12, "ephemeris", secs(10), &mut c12_ephemeris);

    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, _, o, dt, limit)| !o.pass || dt > limit)
        .map(|r| r.0)
        .collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (criteria {failed:?})")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
