use leo_coexist::antenna::ElementPattern;
use leo_coexist::ephemeris::{parse_tle, SAMPLE_CONSTELLATION_TLE};
use leo_coexist::scenario::{
    analyze, associate, deploy, drop_ues, read_run, received_power_proxy_db, run, site_positions, write_run, Deployment,
    Ecdf, ModeKind, ScenarioConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn short_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::desk();
    cfg.sim.duration_min = 15.0;
    cfg
}

#[test]
fn no_satellites_means_no_interference_and_no_loss() {
    let mut cfg = short_config();
    cfg.sim.n_sat = 0;
    let out = run(&cfg, &parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap(), None).unwrap();
    assert!(out.metrics.inr.is_empty());
    assert!(!out.metrics.rho.is_empty());
    assert!(out.metrics.rho.iter().all(|s| s.rho_t_db.abs() < 1e-9), "nulling without satellites cost gain");
}

#[test]
fn runs_are_deterministic_per_seed() {
    let tle = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let cfg = short_config();
    let a = run(&cfg, &tle, None).unwrap();
    let b = run(&cfg, &tle, None).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.manifest, b.manifest);
    let mut other = cfg.clone();
    other.seed = 1;
    assert_ne!(run(&other, &tle, None).unwrap().metrics, a.metrics);
}

#[test]
fn los_nulling_shifts_inr_cdf_left() {
    let tle = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let mut cfg = short_config();
    cfg.sim.modes = vec![ModeKind::NoNulling, ModeKind::Los];
    cfg.sim.lambdas = vec![1.0];
    let m = run(&cfg, &tle, None).unwrap().metrics;
    let base = Ecdf::new(&m.inr_values("no_nulling")).unwrap();
    let los = Ecdf::new(&m.inr_values("los_lambda_1")).unwrap();
    for p in [0.1, 0.25, 0.5, 0.75, 0.9] {
        assert!(los.quantile(p) < base.quantile(p), "quantile {p}");
    }
    assert!(m.rho_values("los_lambda_1").iter().all(|&r| r >= -1e-9));
}

#[test]
fn run_directory_round_trip_and_analysis_is_stable() {
    let tle = parse_tle(SAMPLE_CONSTELLATION_TLE).unwrap();
    let out = run(&short_config(), &tle, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &out).unwrap();
    let (manifest, metrics) = read_run(dir.path()).unwrap();
    assert_eq!(manifest, out.manifest);
    assert_eq!(metrics, out.metrics);
    let a = analyze(&metrics).unwrap();
    let b = analyze(&metrics).unwrap();
    assert_eq!(a, b);
    assert!(a.contains_key("summary.csv"));
    assert!(a.contains_key("cdf_inr_no_nulling.csv"));
    assert!(read_run(&dir.path().join("missing")).is_err());
}

#[test]
fn full_area_site_count() {
    // regression constant of the origin-anchored hexagonal lattice
    assert_eq!(site_positions(&Deployment::default()).len(), 154);
    assert_eq!(site_positions(&Deployment::desk()).len(), 9);
}

#[test]
fn association_matches_brute_force_and_ignores_order() {
    let d = Deployment::desk();
    let bs = deploy(&d).unwrap();
    let ues = drop_ues(&d, 150, 3);
    let pat = ElementPattern::default();
    let assoc = associate(&bs, &ues, d.ue_height_m, &pat);
    for (ue, &id) in ues.iter().zip(&assoc) {
        let best = bs
            .iter()
            .map(|b| received_power_proxy_db(b, ue, d.ue_height_m, &pat))
            .fold(f64::NEG_INFINITY, f64::max);
        let got = bs.iter().find(|b| b.id == id).unwrap();
        assert_eq!(received_power_proxy_db(got, ue, d.ue_height_m, &pat), best);
    }
    let mut reversed = ues.clone();
    reversed.reverse();
    let mut back = associate(&bs, &reversed, d.ue_height_m, &pat);
    back.reverse();
    assert_eq!(back, assoc);
}

/// Standard normal CDF by composite Simpson integration of the density.
fn phi(x: f64) -> f64 {
    let lo = -9.0;
    if x <= lo {
        return 0.0;
    }
    let n = 4000;
    let h = (x - lo) / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(lo) + f(x);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn ecdf_of_normal_samples_within_dkw_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let e = Ecdf::new(&xs).unwrap();
    // Dvoretzky–Kiefer–Wolfowitz bound at 99.9 % confidence
    let band = ((2.0f64 / 1e-3).ln() / (2.0 * 10_000.0)).sqrt();
    let sup = (0..=80)
        .map(|i| -4.0 + 0.1 * i as f64)
        .map(|x| (e.cdf(x) - phi(x)).abs())
        .fold(0.0, f64::max);
    assert!(sup <= band, "sup {sup} band {band}");
    assert!(Ecdf::new(&[]).is_err());
    assert!(Ecdf::new(&[1.0, f64::NAN]).is_err());
}

proptest! {
    #[test]
    fn ecdf_is_monotone_and_consistent(xs in prop::collection::vec(-100.0f64..100.0, 1..200), probes in prop::collection::vec(-120.0f64..120.0, 2..20)) {
        let e = Ecdf::new(&xs).unwrap();
        let mut p = probes.clone();
        p.sort_by(f64::total_cmp);
        for w in p.windows(2) {
            prop_assert!(e.cdf(w[0]) <= e.cdf(w[1]));
        }
        for q in [0.01, 0.25, 0.5, 0.9, 1.0] {
            let v = e.quantile(q);
            prop_assert!(e.cdf(v) >= q - 1e-12);
            prop_assert!(xs.contains(&v));
        }
        let t = e.table();
        prop_assert!((t.last().unwrap().1 - 1.0).abs() < 1e-12);
    }
}
