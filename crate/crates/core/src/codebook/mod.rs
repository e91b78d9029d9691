//! Null-steering codebooks: per-direction codeword design over elevation
//! band null regions, auxiliary-region sidelobe suppression, the stacked
//! codebook tensor and histogram-driven region selection.
//!
//! Null regions are elevation bands of the upward beam space expressed in
//! satellite elevation (global frame, azimuth relative to the sector
//! boresight). With a nonzero downtilt the sample points are rotated into
//! the array frame before their steering vectors are formed. Steering
//! directions of the downward grid are given directly in the array frame.

mod config;
mod io;
mod solver;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{steering_vector, UraGeometry};
use crate::geometry::{global_to_local, BsOrientation, Frame, SteeringDirection};
use crate::linalg::{CVector, LinalgError, C64};

pub use config::{ArraySpec, DesignConfig};
pub use io::{read_tensor, write_report_csv, write_tensor, REPORT_CSV_HEADER};
pub use solver::{RegionSolver, Solution};

/// Default null-depth requirement, relative to `N_t`.
pub const DEFAULT_NULL_BOUND_REL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodebookError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{} steering direction(s) cannot meet the null bound: {}", .0.len(), format_offenders(.0))]
    Infeasible(Vec<Offender>),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("tensor parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A codeword whose target-region gain exceeds the null bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Offender {
    pub region: usize,
    pub index: usize,
    pub steer_el_deg: f64,
    pub steer_az_deg: f64,
    pub target_max_gain: f64,
}

fn format_offenders(v: &[Offender]) -> String {
    v.iter()
        .map(|o| {
            format!(
                "(l={}, i={}, el={}, az={}, gain={:.3e})",
                o.region, o.index, o.steer_el_deg, o.steer_az_deg, o.target_max_gain
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Elevation band `l` of `N`: `[(l−½)w, (l+½)w]` with `w = ⌈90/N⌉`, clipped
/// to `[0, 90]`; the last band is extended to 90° so the bands cover the
/// whole upward space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TargetNullRegion {
    pub n: usize,
    pub l: usize,
}

/// Partition width `⌈90/N⌉` in degrees.
pub fn band_width(n: usize) -> f64 {
    90usize.div_ceil(n) as f64
}

impl TargetNullRegion {
    pub fn new(n: usize, l: usize) -> Result<Self, CodebookError> {
        if n == 0 {
            return Err(CodebookError::InvalidRegion("partition count must be >= 1".into()));
        }
        if l >= n {
            return Err(CodebookError::InvalidRegion(format!("index {l} out of range for N={n}")));
        }
        let r = TargetNullRegion { n, l };
        let (lo, hi) = r.raw_band();
        if !(lo < hi) {
            return Err(CodebookError::InvalidRegion(format!(
                "band {l} of N={n} is empty after clipping to [0, 90]"
            )));
        }
        Ok(r)
    }

    fn raw_band(&self) -> (f64, f64) {
        let w = band_width(self.n);
        let lo = ((self.l as f64 - 0.5) * w).max(0.0);
        let hi = if self.l + 1 == self.n {
            90.0
        } else {
            ((self.l as f64 + 0.5) * w).min(90.0)
        };
        (lo, hi)
    }

    /// Elevation band in degrees.
    pub fn elevation_band(&self) -> (f64, f64) {
        self.raw_band()
    }

    pub fn width(&self) -> f64 {
        band_width(self.n)
    }

    /// Sample points of the band on `grid`, in the global frame.
    pub fn sample_points(&self, grid: &SamplingGrid) -> Vec<SteeringDirection> {
        let (lo, hi) = self.elevation_band();
        grid.points(lo, hi)
    }
}

/// An auxiliary band `k` of a finer partition `M > N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AuxiliaryRegion {
    pub m: usize,
    pub k: usize,
}

impl AuxiliaryRegion {
    pub fn new(m: usize, k: usize, target_n: usize) -> Result<Self, CodebookError> {
        if m <= target_n {
            return Err(CodebookError::InvalidParameter(format!(
                "auxiliary partition count M={m} must exceed N={target_n}"
            )));
        }
        TargetNullRegion::new(m, k)?;
        Ok(AuxiliaryRegion { m, k })
    }

    pub fn as_band(&self) -> TargetNullRegion {
        TargetNullRegion { n: self.m, l: self.k }
    }
}

fn inclusive_steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let v = lo + step * i as f64;
        if v > hi + 1e-9 {
            break;
        }
        out.push(v.min(hi));
        i += 1;
    }
    if out.last().is_some_and(|&v| v < hi - 1e-9) {
        out.push(hi);
    }
    out
}

/// Sample density inside null regions (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingGrid {
    pub el_step_deg: f64,
    pub az_step_deg: f64,
    pub az_limit_deg: f64,
}

impl Default for SamplingGrid {
    fn default() -> Self {
        SamplingGrid {
            el_step_deg: 2.0,
            az_step_deg: 5.0,
            az_limit_deg: 60.0,
        }
    }
}

impl SamplingGrid {
    pub fn validate(&self) -> Result<(), CodebookError> {
        if !(self.el_step_deg > 0.0 && self.az_step_deg > 0.0 && self.az_limit_deg >= 0.0) {
            return Err(CodebookError::InvalidParameter("sampling steps must be positive".into()));
        }
        Ok(())
    }

    /// Grid over `[lo, hi] × [−az_limit, az_limit]`, endpoints included.
    pub fn points(&self, lo: f64, hi: f64) -> Vec<SteeringDirection> {
        let els = inclusive_steps(lo, hi, self.el_step_deg);
        let azs = inclusive_steps(-self.az_limit_deg, self.az_limit_deg, self.az_step_deg);
        let mut out = Vec::with_capacity(els.len() * azs.len());
        for &el in &els {
            for &az in &azs {
                out.push(SteeringDirection {
                    elevation_deg: el,
                    azimuth_deg: az,
                    frame: Frame::Global,
                });
            }
        }
        out
    }

    /// The whole upward space `[0°, 90°]`.
    pub fn upper_space(&self) -> Vec<SteeringDirection> {
        self.points(0.0, 90.0)
    }
}

/// Serving directions of the downward space, in the array frame. Column
/// `i` enumerates elevations from `el_start_deg` downward (outer loop) and
/// azimuths from `−az_limit_deg` upward (inner loop).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringGrid {
    pub el_start_deg: f64,
    pub el_end_deg: f64,
    pub el_step_deg: f64,
    pub az_limit_deg: f64,
    pub az_step_deg: f64,
}

impl Default for SteeringGrid {
    fn default() -> Self {
        SteeringGrid {
            el_start_deg: 0.0,
            el_end_deg: -90.0,
            el_step_deg: 15.0,
            az_limit_deg: 60.0,
            az_step_deg: 15.0,
        }
    }
}

impl SteeringGrid {
    pub fn validate(&self) -> Result<(), CodebookError> {
        if !(self.el_step_deg > 0.0 && self.az_step_deg > 0.0) {
            return Err(CodebookError::InvalidParameter("steering grid steps must be positive".into()));
        }
        if !(self.el_start_deg <= 0.0 && self.el_end_deg >= -90.0 && self.el_end_deg <= self.el_start_deg) {
            return Err(CodebookError::InvalidParameter(
                "steering grid must lie in elevation [-90, 0] with start >= end".into(),
            ));
        }
        if !(0.0..=180.0).contains(&self.az_limit_deg) {
            return Err(CodebookError::InvalidParameter("az_limit_deg must be in [0, 180]".into()));
        }
        Ok(())
    }

    pub fn directions(&self) -> Vec<SteeringDirection> {
        let mut els = Vec::new();
        let mut i = 0usize;
        loop {
            let v = self.el_start_deg - self.el_step_deg * i as f64;
            if v < self.el_end_deg - 1e-9 {
                break;
            }
            els.push(v.max(-90.0));
            i += 1;
        }
        let azs = inclusive_steps(-self.az_limit_deg, self.az_limit_deg, self.az_step_deg);
        let mut out = Vec::with_capacity(els.len() * azs.len());
        for &el in &els {
            for &az in &azs {
                out.push(SteeringDirection {
                    elevation_deg: el,
                    azimuth_deg: az,
                    frame: Frame::Local,
                });
            }
        }
        out
    }
}

/// Gain loss budget `ε` giving `loss_db` of beamforming gain relative to
/// `N_t`: `N_t (1 − 10^(−loss/20))²`.
pub fn eps_for_loss_db(n_t: usize, loss_db: f64) -> f64 {
    n_t as f64 * (1.0 - 10f64.powf(-loss_db / 20.0)).powi(2)
}

/// Everything that fixes a codebook besides the target partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookSpec {
    pub geom: UraGeometry,
    pub eps: f64,
    /// Null-depth bound as a fraction of `N_t`.
    pub null_bound_rel: f64,
    pub downtilt_deg: f64,
    pub sampling: SamplingGrid,
    pub steering: SteeringGrid,
}

impl CodebookSpec {
    pub fn new(geom: UraGeometry, eps: f64) -> Self {
        CodebookSpec {
            geom,
            eps,
            null_bound_rel: DEFAULT_NULL_BOUND_REL,
            downtilt_deg: 0.0,
            sampling: SamplingGrid::default(),
            steering: SteeringGrid::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CodebookError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(CodebookError::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.null_bound_rel > 0.0) {
            return Err(CodebookError::InvalidParameter("null bound must be positive".into()));
        }
        if !(0.0..90.0).contains(&self.downtilt_deg) {
            return Err(CodebookError::InvalidParameter("downtilt must be in [0, 90)".into()));
        }
        self.sampling.validate()?;
        self.steering.validate()
    }

    pub fn n_t(&self) -> usize {
        self.geom.n_elements()
    }

    pub fn null_bound(&self) -> f64 {
        self.null_bound_rel * self.n_t() as f64
    }

    fn orientation(&self) -> BsOrientation {
        BsOrientation {
            downtilt_deg: self.downtilt_deg,
            sector_bearing_deg: 0.0,
            height_m: 0.0,
        }
    }

    /// Steering vector of a null-region sample (global elevation, azimuth
    /// relative to boresight).
    pub fn region_vector(&self, p: &SteeringDirection) -> CVector {
        let local = if p.frame == Frame::Global {
            global_to_local(p, &self.orientation()).expect("frame checked")
        } else {
            *p
        };
        steering_vector(&local, &self.geom)
    }

    pub fn region_vectors(&self, points: &[SteeringDirection]) -> Vec<CVector> {
        points.iter().map(|p| self.region_vector(p)).collect()
    }
}

/// One designed column of a codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub w: CVector,
    pub steer_dir: SteeringDirection,
    /// `|√N_t − e^H w|²`
    pub gain_loss: f64,
    /// Largest `|e^H w|²` over the upward space.
    pub max_sidelobe_up: f64,
    /// Largest `|e^H w|²` over the target region samples.
    pub target_max_gain: f64,
    /// Auxiliary band used, if any.
    pub k_star: Option<usize>,
}

impl Codeword {
    /// Largest entry magnitude (reported, not constrained).
    pub fn max_entry_magnitude(&self) -> f64 {
        self.w.max_abs()
    }
}

fn gain(e: &CVector, w: &CVector) -> f64 {
    e.dot(w).norm_sqr()
}

fn max_gain(vectors: &[CVector], w: &CVector) -> f64 {
    vectors.iter().map(|e| gain(e, w)).fold(0.0, f64::max)
}

fn gain_loss(e: &CVector, w: &CVector) -> f64 {
    (C64::new((e.len() as f64).sqrt(), 0.0) - e.dot(w)).norm_sqr()
}

/// Deduplicated union of point sets, ordered by (elevation, azimuth).
pub fn merge_points(sets: &[&[SteeringDirection]]) -> Vec<SteeringDirection> {
    let mut map: BTreeMap<(u64, u64), SteeringDirection> = BTreeMap::new();
    let key = |x: f64| {
        // order-preserving map of f64 onto u64
        let b = x.to_bits();
        if x.is_sign_negative() {
            !b
        } else {
            b | (1 << 63)
        }
    };
    for set in sets {
        for p in *set {
            map.insert((key(p.elevation_deg), key(p.azimuth_deg)), *p);
        }
    }
    map.into_values().collect()
}

/// Codeword for `steer_dir` with the given region solver, no null check.
fn codeword_from(
    solver: &RegionSolver,
    steer_dir: &SteeringDirection,
    target_vectors: &[CVector],
    up_vectors: &[CVector],
    spec: &CodebookSpec,
    k_star: Option<usize>,
) -> Codeword {
    let e = steering_vector(steer_dir, &spec.geom);
    let sol = solver.solve(&e, spec.eps);
    Codeword {
        gain_loss: gain_loss(&e, &sol.w),
        max_sidelobe_up: max_gain(up_vectors, &sol.w),
        target_max_gain: max_gain(target_vectors, &sol.w),
        w: sol.w,
        steer_dir: *steer_dir,
        k_star,
    }
}

/// Design one codeword nulling `region_points` (global frame, azimuth
/// relative to boresight) while steering toward `steer_dir` (array frame).
///
/// Fails with [`CodebookError::Infeasible`] when the optimum still leaves
/// more than the null bound on some region point.
pub fn design_codeword(
    steer_dir: &SteeringDirection,
    region_points: &[SteeringDirection],
    spec: &CodebookSpec,
) -> Result<Codeword, CodebookError> {
    spec.validate()?;
    let cw = design_codeword_unchecked(steer_dir, region_points, spec)?;
    if cw.target_max_gain > spec.null_bound() {
        return Err(CodebookError::Infeasible(vec![Offender {
            region: 0,
            index: 0,
            steer_el_deg: steer_dir.elevation_deg,
            steer_az_deg: steer_dir.azimuth_deg,
            target_max_gain: cw.target_max_gain,
        }]));
    }
    Ok(cw)
}

/// [`design_codeword`] without the null-depth check.
pub fn design_codeword_unchecked(
    steer_dir: &SteeringDirection,
    region_points: &[SteeringDirection],
    spec: &CodebookSpec,
) -> Result<Codeword, CodebookError> {
    let pts = merge_points(&[region_points]);
    let vectors = spec.region_vectors(&pts);
    let solver = RegionSolver::new(&vectors, spec.n_t())?;
    let up = spec.region_vectors(&spec.sampling.upper_space());
    Ok(codeword_from(&solver, steer_dir, &vectors, &up, spec, None))
}

/// Outcome of the auxiliary-region search for one steering direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSearch {
    pub codeword: Codeword,
    /// Max up-space sidelobe of every `k` (None when that `k` misses the
    /// target null bound).
    pub per_k_sidelobe: Vec<Option<f64>>,
    pub no_aux_sidelobe: f64,
    /// True when no auxiliary band kept the target null bound.
    pub all_aux_infeasible: bool,
}

/// Precomputed solvers for a target band and each of its auxiliary unions.
pub struct AuxSolvers {
    target_vectors: Vec<CVector>,
    base: RegionSolver,
    aux: Vec<RegionSolver>,
    up: Vec<CVector>,
}

impl AuxSolvers {
    pub fn new(target: &TargetNullRegion, m: Option<usize>, spec: &CodebookSpec) -> Result<Self, CodebookError> {
        let target_pts = target.sample_points(&spec.sampling);
        let target_vectors = spec.region_vectors(&target_pts);
        let base = RegionSolver::new(&target_vectors, spec.n_t())?;
        let aux = match m {
            None => Vec::new(),
            Some(m) => (0..m)
                .into_par_iter()
                .map(|k| {
                    let aux = AuxiliaryRegion::new(m, k, target.n)?;
                    let pts = merge_points(&[&target_pts, &aux.as_band().sample_points(&spec.sampling)]);
                    Ok(RegionSolver::new(&spec.region_vectors(&pts), spec.n_t())?)
                })
                .collect::<Result<Vec<_>, CodebookError>>()?,
        };
        Ok(AuxSolvers {
            target_vectors,
            base,
            aux,
            up: spec.region_vectors(&spec.sampling.upper_space()),
        })
    }

    /// Exhaustive search over `k`; the no-auxiliary codeword stays a
    /// candidate so the result never has a larger up-space sidelobe.
    pub fn search(&self, steer_dir: &SteeringDirection, spec: &CodebookSpec) -> AuxSearch {
        let bound = spec.null_bound();
        let base = codeword_from(&self.base, steer_dir, &self.target_vectors, &self.up, spec, None);
        let mut per_k = Vec::with_capacity(self.aux.len());
        let mut best: Option<Codeword> = None;
        for (k, solver) in self.aux.iter().enumerate() {
            let cw = codeword_from(solver, steer_dir, &self.target_vectors, &self.up, spec, Some(k));
            if cw.target_max_gain > bound {
                per_k.push(None);
                continue;
            }
            per_k.push(Some(cw.max_sidelobe_up));
            if best.as_ref().map_or(true, |b| cw.max_sidelobe_up < b.max_sidelobe_up) {
                best = Some(cw);
            }
        }
        let all_aux_infeasible = !self.aux.is_empty() && best.is_none();
        let no_aux_sidelobe = base.max_sidelobe_up;
        let codeword = match best {
            Some(b) if b.max_sidelobe_up < base.max_sidelobe_up || base.target_max_gain > bound => b,
            _ => base,
        };
        AuxSearch {
            codeword,
            per_k_sidelobe: per_k,
            no_aux_sidelobe,
            all_aux_infeasible,
        }
    }
}

/// Auxiliary-band search for one direction and target band.
pub fn search_auxiliary(
    steer_dir: &SteeringDirection,
    target: &TargetNullRegion,
    m: usize,
    spec: &CodebookSpec,
) -> Result<AuxSearch, CodebookError> {
    spec.validate()?;
    AuxiliaryRegion::new(m, 0, target.n)?;
    let solvers = AuxSolvers::new(target, Some(m), spec)?;
    let res = solvers.search(steer_dir, spec);
    if res.codeword.target_max_gain > spec.null_bound() {
        return Err(CodebookError::Infeasible(vec![Offender {
            region: target.l,
            index: 0,
            steer_el_deg: steer_dir.elevation_deg,
            steer_az_deg: steer_dir.azimuth_deg,
            target_max_gain: res.codeword.target_max_gain,
        }]));
    }
    Ok(res)
}

/// `N` stacked codebooks of `N_t × L` plus the steering grid indexing their
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookTensor {
    pub n: usize,
    pub m: Option<usize>,
    pub spec: CodebookSpec,
    pub directions: Vec<SteeringDirection>,
    /// `codebooks[l][i]`
    pub codebooks: Vec<Vec<Codeword>>,
}

impl CodebookTensor {
    pub fn n_regions(&self) -> usize {
        self.codebooks.len()
    }

    pub fn n_directions(&self) -> usize {
        self.directions.len()
    }

    /// Every codeword whose target-region gain exceeds the null bound.
    pub fn offenders(&self) -> Vec<Offender> {
        let bound = self.spec.null_bound();
        let mut out = Vec::new();
        for (l, book) in self.codebooks.iter().enumerate() {
            for (i, cw) in book.iter().enumerate() {
                if cw.target_max_gain > bound {
                    out.push(Offender {
                        region: l,
                        index: i,
                        steer_el_deg: cw.steer_dir.elevation_deg,
                        steer_az_deg: cw.steer_dir.azimuth_deg,
                        target_max_gain: cw.target_max_gain,
                    });
                }
            }
        }
        out
    }

    /// Index of the grid direction nearest to `dir` (array frame); ties go
    /// to the lower index.
    pub fn nearest_direction(&self, dir: &SteeringDirection) -> usize {
        let probe = SteeringDirection { frame: Frame::Local, ..*dir };
        let mut best = (f64::INFINITY, 0);
        for (i, d) in self.directions.iter().enumerate() {
            let s = probe.angular_separation_deg(d);
            if s < best.0 - 1e-12 {
                best = (s, i);
            }
        }
        best.1
    }
}

/// Build all `N` codebooks (with auxiliary search when `m` is set) and
/// return them together with every codeword that misses the null bound.
pub fn build_codebook_with_report(
    n: usize,
    m: Option<usize>,
    spec: &CodebookSpec,
) -> Result<(CodebookTensor, Vec<Offender>), CodebookError> {
    spec.validate()?;
    let regions = (0..n).map(|l| TargetNullRegion::new(n, l)).collect::<Result<Vec<_>, _>>()?;
    if let Some(m) = m {
        AuxiliaryRegion::new(m, 0, n)?;
        for k in 0..m {
            TargetNullRegion::new(m, k)?;
        }
    }
    let directions = spec.steering.directions();
    let codebooks = regions
        .iter()
        .map(|region| {
            let solvers = AuxSolvers::new(region, m, spec)?;
            Ok(directions
                .par_iter()
                .map(|d| solvers.search(d, spec).codeword)
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CodebookError>>()?;
    let tensor = CodebookTensor {
        n,
        m,
        spec: *spec,
        directions,
        codebooks,
    };
    let offenders = tensor.offenders();
    Ok((tensor, offenders))
}

/// Build the codebook tensor; any codeword missing the null bound aborts the
/// build with the offending directions listed.
pub fn build_codebook(n: usize, m: Option<usize>, spec: &CodebookSpec) -> Result<CodebookTensor, CodebookError> {
    let (tensor, offenders) = build_codebook_with_report(n, m, spec)?;
    if offenders.is_empty() {
        Ok(tensor)
    } else {
        Err(CodebookError::Infeasible(offenders))
    }
}

/// Histogram bin of one elevation: `⌈θ/w − ½⌉`, so boundary angles fall in
/// the lower bin; clamped to the last band.
pub fn region_of_elevation(elevation_deg: f64, n: usize) -> usize {
    let w = band_width(n);
    let l = (elevation_deg / w - 0.5).ceil().max(0.0) as usize;
    l.min(n - 1)
}

/// Most populated band of the satellite elevations (ties: lowest `l`);
/// `None` when there are no satellites.
pub fn select_region(elevations_deg: &[f64], n: usize) -> Option<usize> {
    if n == 0 || elevations_deg.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; n];
    for &e in elevations_deg {
        counts[region_of_elevation(e, n)] += 1;
    }
    let mut best = 0;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = l;
        }
    }
    Some(best)
}

/// Column `i` of codebook `l`.
pub fn select_codeword(tensor: &CodebookTensor, l_star: usize, i: usize) -> Result<&CVector, CodebookError> {
    let book = tensor
        .codebooks
        .get(l_star)
        .ok_or_else(|| CodebookError::IndexOutOfRange(format!("region {l_star} of {}", tensor.n_regions())))?;
    book.get(i)
        .map(|cw| &cw.w)
        .ok_or_else(|| CodebookError::IndexOutOfRange(format!("column {i} of {}", book.len())))
}
