use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use leo_coexist::codebook::{
    build_codebook_with_report, read_tensor, write_report_csv, write_tensor, CodebookTensor, DesignConfig,
};
use leo_coexist::ephemeris::{compute_tracks, parse_tle, write_tracks_csv, TleRecord, TrackConfig, SAMPLE_CONSTELLATION_TLE};
use leo_coexist::scenario::{self, ScenarioConfig, ScenarioError, MANIFEST_FILE};

pub const TENSOR_FILE: &str = "codebook.txt";
pub const REPORT_FILE: &str = "codebook_report.csv";
pub const TRACKS_FILE: &str = "tracks.csv";

pub struct CmdError {
    pub code: u8,
    pub error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> CmdError {
    CmdError { code: 1, error }
}

fn domain(error: anyhow::Error) -> CmdError {
    CmdError { code: 2, error }
}

type CmdResult = Result<(), CmdError>;

fn read_config(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(usage)
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(domain)
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(domain)
}

/// Paths in a config file are relative to the file's directory.
fn resolve(config: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn load_tle(path: Option<&Path>) -> Result<Vec<TleRecord>, CmdError> {
    let text = match path {
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("cannot read TLE file {}", p.display()))
            .map_err(usage)?,
        None => SAMPLE_CONSTELLATION_TLE.to_string(),
    };
    parse_tle(&text).map_err(|e| domain(anyhow!(e).context("TLE parse error")))
}

pub fn design_codebook(config: &Path, out: &Path) -> CmdResult {
    let cfg = DesignConfig::from_toml(&read_config(config)?).map_err(|e| usage(e.into()))?;
    let spec = cfg.spec().map_err(|e| usage(e.into()))?;
    let (tensor, offenders) =
        build_codebook_with_report(cfg.n_regions, cfg.aux_regions, &spec).map_err(|e| domain(e.into()))?;
    create_dir(out)?;
    write_file(&out.join(REPORT_FILE), &write_report_csv(&tensor))?;
    if !offenders.is_empty() {
        eprintln!(
            "{} of {} codewords exceed the null bound {:.3e}:",
            offenders.len(),
            tensor.n * tensor.n_directions(),
            spec.null_bound()
        );
        for o in &offenders {
            eprintln!(
                "  l={} i={} steer=({}, {}) target_max_gain={:.3e}",
                o.region, o.index, o.steer_el_deg, o.steer_az_deg, o.target_max_gain
            );
        }
        if !cfg.allow_infeasible {
            return Err(domain(anyhow!("codebook infeasible for {} steering direction(s)", offenders.len())));
        }
    }
    write_file(&out.join(TENSOR_FILE), &write_tensor(&tensor))
}

pub fn track(config: &Path, tle: Option<&Path>, out: &Path) -> CmdResult {
    let cfg = TrackConfig::from_toml(&read_config(config)?).map_err(|e| usage(anyhow!(e)))?;
    let times = cfg.times().map_err(|e| usage(anyhow!(e)))?;
    let records = load_tle(tle)?;
    let tracks = compute_tracks(&records, &cfg.station, &times).map_err(|e| domain(e.into()))?;
    create_dir(out)?;
    write_file(&out.join(TRACKS_FILE), &write_tracks_csv(&tracks, cfg.min_elevation_deg))
}

fn load_codebook(config: &Path, cfg: &ScenarioConfig) -> Result<Option<CodebookTensor>, CmdError> {
    let Some(p) = &cfg.codebook_path else {
        return Ok(None);
    };
    let path = resolve(config, p);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("cannot read codebook {}", path.display()))
        .map_err(usage)?;
    read_tensor(&text)
        .map(Some)
        .map_err(|e| domain(anyhow!(e).context(format!("codebook {}", path.display()))))
}

fn scenario_error(e: ScenarioError) -> CmdError {
    match e {
        ScenarioError::Config(_) => usage(e.into()),
        other => domain(other.into()),
    }
}

pub fn simulate(config: &Path, seed: Option<u64>, out: &Path) -> CmdResult {
    let mut cfg = ScenarioConfig::from_toml(&read_config(config)?).map_err(scenario_error)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let tle_path = cfg.tle_path.as_ref().map(|p| resolve(config, p));
    let records = load_tle(tle_path.as_deref())?;
    let codebook = load_codebook(config, &cfg)?;
    let run = scenario::run(&cfg, &records, codebook.as_ref()).map_err(scenario_error)?;
    scenario::write_run(out, &run).map_err(scenario_error)?;
    write_file(&out.join("config.toml"), &cfg.to_toml())
}

pub fn analyze(input: &Path, out: &Path) -> CmdResult {
    if !input.join(MANIFEST_FILE).is_file() {
        return Err(domain(anyhow!("{} has no {MANIFEST_FILE}; not a completed run", input.display())));
    }
    let (_, metrics) = scenario::read_run(input).map_err(|e| domain(e.into()))?;
    let files = scenario::analyze(&metrics).map_err(|e| domain(e.into()))?;
    create_dir(out)?;
    for (name, text) in files {
        write_file(&out.join(name), &text)?;
    }
    Ok(())
}
