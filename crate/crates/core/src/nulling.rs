//! Regularized transmit/receive beamforming with interference nulling.
//!
//! The receive combiner is the dominant left singular vector of the
//! normalized terrestrial channel. The transmit beamformer maximizes
//! `|w_r^H H w|² − λ Σ |h_i^H w|²` over the unit sphere, i.e. it is the
//! dominant eigenvector of `H^H w_r w_r^H H − λ Σ h_i h_i^H`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{steering_vector, UraGeometry};
use crate::geometry::SteeringDirection;
use crate::linalg::{orthonormal_basis, CMatrix, CVector, LinalgError, C64};

/// Hermitian tolerance on inputs to the eigen kernel.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigen-residual tolerance, relative to `max(1, ||M||_∞)`.
pub const RESIDUAL_TOL: f64 = 1e-8;
const MAX_SQUARINGS: usize = 80;
const MAX_POLISH_ITERS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NullingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lambda must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error("channel is identically zero")]
    ZeroChannel,
    #[error("receive combiner must have unit norm, got {0}")]
    NotUnitNorm(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NullingMode {
    NoNulling,
    LosNulling,
    MultipathNulling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullingConfig {
    pub lambda: f64,
    pub mode: NullingMode,
}

impl NullingConfig {
    pub fn new(lambda: f64, mode: NullingMode) -> Result<Self, NullingError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(NullingError::InvalidLambda(lambda));
        }
        let lambda = if mode == NullingMode::NoNulling { 0.0 } else { lambda };
        Ok(NullingConfig { lambda, mode })
    }

    pub fn no_nulling() -> Self {
        NullingConfig {
            lambda: 0.0,
            mode: NullingMode::NoNulling,
        }
    }

    pub fn effective_lambda(&self) -> f64 {
        match self.mode {
            NullingMode::NoNulling => 0.0,
            _ => self.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPair {
    pub w_t: CVector,
    pub w_r: CVector,
    pub achieved_objective: f64,
}

/// Dominant eigenpair of a Hermitian matrix.
///
/// Works on the shifted, scaled matrix `B = (M + cI) / 2c` with
/// `c = ||M||_∞`, whose spectrum lies in `[0, 1]` with the same ordering as
/// `M`. Power iteration on `B` is accelerated by repeated squaring
/// (`B^(2^k)`), which resolves eigen-gaps down to roughly machine precision
/// in a few dozen matrix products. The iterate is then polished by plain
/// power steps until the residual test passes.
pub fn hermitian_max_eigvec(m: &CMatrix) -> Result<(f64, CVector), NullingError> {
    let m = m.validated_hermitian(HERMITIAN_TOL)?;
    let n = m.rows();
    if n == 0 {
        return Err(NullingError::DimensionMismatch("empty matrix".into()));
    }
    let ones = CVector(vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n]);
    let c = m.norm_inf();
    if c == 0.0 {
        return Ok((0.0, ones));
    }
    if n == 1 {
        return Ok((m[(0, 0)].re, CVector(vec![C64::new(1.0, 0.0)])));
    }
    let tol = RESIDUAL_TOL * c.max(1.0);

    let mut b = m.clone();
    b.add_diag(c);
    let b = b.scale_real(0.5 / c);

    let mut a = b.clone();
    for _ in 0..MAX_SQUARINGS {
        let sq = a.matmul(&a).symmetrized();
        let tr: f64 = (0..n).map(|i| sq[(i, i)].re).sum();
        if !(tr > 0.0) {
            break;
        }
        let next = sq.scale_real(1.0 / tr);
        let delta = next.sub(&a).max_abs();
        a = next;
        if delta <= 1e-15 {
            break;
        }
    }

    // The all-ones start can be (nearly) orthogonal to the dominant space.
    let av = a.mul_vec(&ones);
    let start = if av.norm() > 1e-8 * a.max_abs() { av.normalized() } else { None };
    let mut v = start.or_else(|| largest_column(&a)).unwrap_or_else(|| ones.clone());

    for iter in 0..=MAX_POLISH_ITERS {
        let mv = m.mul_vec(&v);
        let mu = v.dot(&mv).re;
        let residual = mv.axpy(C64::new(-mu, 0.0), &v).norm();
        if residual <= tol {
            return Ok((mu, v.phase_normalized()));
        }
        if iter == MAX_POLISH_ITERS {
            return Err(LinalgError::NotConverged { residual }.into());
        }
        v = match b.mul_vec(&v).normalized() {
            Some(x) => x,
            None => return Err(LinalgError::NotConverged { residual }.into()),
        };
    }
    unreachable!()
}

fn largest_column(a: &CMatrix) -> Option<CVector> {
    let mut best = None;
    let mut best_norm = 0.0;
    for j in 0..a.cols() {
        let col = a.column(j);
        let nn = col.norm();
        if nn > best_norm {
            best_norm = nn;
            best = Some(col);
        }
    }
    best.and_then(|c| c.normalized())
}

/// Unit-norm dominant left singular vector of `h` (`N_r × N_t`).
pub fn rx_beamformer(h: &CMatrix) -> Result<CVector, NullingError> {
    if h.rows() == 0 || h.cols() == 0 {
        return Err(NullingError::DimensionMismatch("empty channel".into()));
    }
    if h.max_abs() == 0.0 {
        return Err(NullingError::ZeroChannel);
    }
    if h.rows() == 1 {
        return Ok(CVector(vec![C64::new(1.0, 0.0)]));
    }
    let gram = h.matmul(&h.adjoint());
    let (_, v) = hermitian_max_eigvec(&gram)?;
    Ok(v)
}

/// Explicit `M = a a^H − λ Σ h_i h_i^H` with `a = H^H w_r`.
pub fn nulling_matrix(
    h: &CMatrix,
    w_r: &CVector,
    interferers: &[CVector],
    lambda: f64,
) -> Result<CMatrix, NullingError> {
    let a = effective_direction(h, w_r, interferers)?;
    let nt = h.cols();
    let mut m = CMatrix::zeros(nt, nt);
    m.add_outer_scaled(&a, 1.0);
    for hi in interferers {
        m.add_outer_scaled(hi, -lambda);
    }
    Ok(m)
}

fn effective_direction(h: &CMatrix, w_r: &CVector, interferers: &[CVector]) -> Result<CVector, NullingError> {
    if w_r.len() != h.rows() {
        return Err(NullingError::DimensionMismatch(format!(
            "combiner has {} entries, channel has {} rows",
            w_r.len(),
            h.rows()
        )));
    }
    let nr = w_r.norm();
    if (nr - 1.0).abs() > 1e-9 {
        return Err(NullingError::NotUnitNorm(nr));
    }
    if let Some(bad) = interferers.iter().find(|v| v.len() != h.cols()) {
        return Err(NullingError::DimensionMismatch(format!(
            "interferer has {} entries, channel has {} columns",
            bad.len(),
            h.cols()
        )));
    }
    Ok(h.adjoint_mul_vec(w_r))
}

/// Unit-norm transmit beamformer maximizing the regularized objective.
///
/// `M` has rank at most `1 + K`, so the eigenproblem is solved exactly on an
/// orthonormal basis `Q` of `span{a, h_1, …, h_K}`: `M = Q (Q^H M Q) Q^H`. On
/// the orthogonal complement `M` vanishes, so when the reduced problem has
/// only negative eigenvalues a complement vector (objective 0) is optimal.
pub fn tx_beamformer(
    h: &CMatrix,
    w_r: &CVector,
    interferers: &[CVector],
    cfg: &NullingConfig,
) -> Result<(f64, CVector), NullingError> {
    let lambda = cfg.effective_lambda();
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(NullingError::InvalidLambda(lambda));
    }
    let a = effective_direction(h, w_r, interferers)?;
    let nt = h.cols();
    let active: &[CVector] = if lambda == 0.0 { &[] } else { interferers };

    let mut span = Vec::with_capacity(1 + active.len());
    span.push(a.clone());
    span.extend(active.iter().cloned());
    let q = orthonormal_basis(&span, 1e-12);
    if q.is_empty() {
        return Err(NullingError::ZeroChannel);
    }
    let r = q.len();

    // Reduced matrix Q^H M Q from the projections of each rank-1 term.
    let mut reduced = CMatrix::zeros(r, r);
    let proj = |v: &CVector| -> CVector { q.iter().map(|qi| qi.dot(v)).collect() };
    reduced.add_outer_scaled(&proj(&a), 1.0);
    for hi in active {
        reduced.add_outer_scaled(&proj(hi), -lambda);
    }
    let (mu, y) = hermitian_max_eigvec(&reduced)?;

    if mu < 0.0 && r < nt {
        let w = complement_vector(&q, nt);
        return Ok((0.0, w));
    }
    let mut w = CVector::zeros(nt);
    for (qi, yi) in q.iter().zip(y.iter()) {
        w = w.axpy(*yi, qi);
    }
    let w = w.normalized().ok_or(NullingError::ZeroChannel)?;
    Ok((mu, w.phase_normalized()))
}

/// A unit vector orthogonal to every vector of the orthonormal set `q`.
fn complement_vector(q: &[CVector], n: usize) -> CVector {
    let mut best = CVector::basis(n, 0);
    let mut best_norm = -1.0;
    for k in 0..n {
        let mut r = CVector::basis(n, k);
        for _ in 0..2 {
            for qi in q {
                let c = qi.dot(&r);
                r = r.axpy(-c, qi);
            }
        }
        let nn = r.norm();
        if nn > best_norm {
            best_norm = nn;
            best = r;
        }
    }
    best.scale_real(1.0 / best_norm).phase_normalized()
}

/// Receive combiner followed by the regularized transmit beamformer.
pub fn solve_beamformers(
    h: &CMatrix,
    interferers: &[CVector],
    cfg: &NullingConfig,
) -> Result<BeamformerPair, NullingError> {
    let w_r = rx_beamformer(h)?;
    let (obj, w_t) = tx_beamformer(h, &w_r, interferers, cfg)?;
    Ok(BeamformerPair {
        w_t,
        w_r,
        achieved_objective: obj,
    })
}

/// Steering vectors standing in for the satellite channels under LOS nulling.
pub fn los_interference_matrix(tracks: &[SteeringDirection], geom: &UraGeometry) -> Vec<CVector> {
    tracks.iter().map(|d| steering_vector(d, geom)).collect()
}

/// `|w_r^H H w_t|²`
pub fn link_gain(h: &CMatrix, w_r: &CVector, w_t: &CVector) -> f64 {
    w_r.dot(&h.mul_vec(w_t)).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn residual(m: &CMatrix, mu: f64, v: &CVector) -> f64 {
        m.mul_vec(v).axpy(c(-mu, 0.0), v).norm()
    }

    #[test]
    fn diagonal_indefinite() {
        let m = CMatrix::from_diag(&[3.0, 1.0, -5.0]);
        let (mu, v) = hermitian_max_eigvec(&m).unwrap();
        assert!((mu - 3.0).abs() < 1e-12);
        assert!((v[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_degenerate() {
        let m = CMatrix::identity(4);
        let (mu, v) = hermitian_max_eigvec(&m).unwrap();
        assert!((mu - 1.0).abs() < 1e-12);
        assert!(residual(&m, mu, &v) < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let (mu, v) = hermitian_max_eigvec(&CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(mu, 0.0);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(
            hermitian_max_eigvec(&m),
            Err(NullingError::Linalg(LinalgError::NotHermitian { .. }))
        ));
    }

    #[test]
    fn near_degenerate_top_pair() {
        let m = CMatrix::from_diag(&[1.0, 1.0 - 1e-9, -1.0, 0.5]);
        let (mu, v) = hermitian_max_eigvec(&m).unwrap();
        assert!((mu - 1.0).abs() < 1e-8);
        assert!(residual(&m, mu, &v) < 1e-8);
    }

    #[test]
    fn rank_one_receive() {
        let a = CVector(vec![c(1.0, 1.0), c(0.5, -2.0)]);
        let b = CVector(vec![c(0.3, 0.0), c(-1.0, 0.2), c(0.0, 1.0)]);
        let h = a.outer(&b);
        let w = rx_beamformer(&h).unwrap();
        let corr = a.dot(&w).norm() / a.norm();
        assert!((corr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_row_receive_is_scalar_one() {
        let h = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 1.0)]]);
        assert_eq!(rx_beamformer(&h).unwrap().0, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn zero_lambda_is_matched_to_channel() {
        let h = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)],
            vec![c(-0.2, 0.1), c(1.0, -1.0), c(0.0, 0.3)],
        ]);
        let pair = solve_beamformers(&h, &[], &NullingConfig::no_nulling()).unwrap();
        let gram = h.adjoint().matmul(&h);
        let (s1, _) = hermitian_max_eigvec(&gram).unwrap();
        assert!((link_gain(&h, &pair.w_r, &pair.w_t) - s1).abs() < 1e-9 * s1);
    }

    #[test]
    fn reduced_solve_matches_full_matrix() {
        let h = CMatrix::from_rows(&[vec![c(1.0, 0.2), c(0.0, 1.0), c(0.5, 0.5), c(0.1, -0.7)]]);
        let w_r = CVector(vec![c(1.0, 0.0)]);
        let ints = vec![
            CVector(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]),
            CVector(vec![c(0.0, 1.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]),
        ];
        for &lambda in &[0.0, 0.1, 1.0, 10.0] {
            let cfg = NullingConfig::new(lambda, NullingMode::MultipathNulling).unwrap();
            let (mu, w) = tx_beamformer(&h, &w_r, &ints, &cfg).unwrap();
            let m = nulling_matrix(&h, &w_r, &ints, lambda).unwrap();
            let (mu_full, _) = hermitian_max_eigvec(&m).unwrap();
            assert!((mu - mu_full).abs() < 1e-9, "lambda={lambda}");
            assert!(residual(&m, mu, &w) < 1e-8);
        }
    }

    #[test]
    fn complement_when_all_negative() {
        // a lies inside the interferer span, so every direction in the span
        // is penalized more than rewarded for large lambda.
        let h = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]]);
        let w_r = CVector(vec![c(1.0, 0.0)]);
        let ints = vec![CVector(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])];
        let cfg = NullingConfig::new(10.0, NullingMode::LosNulling).unwrap();
        let (mu, w) = tx_beamformer(&h, &w_r, &ints, &cfg).unwrap();
        assert_eq!(mu, 0.0);
        assert!(w[0].norm() < 1e-12 && (w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_nulling_forces_zero_lambda() {
        let cfg = NullingConfig::new(5.0, NullingMode::NoNulling).unwrap();
        assert_eq!(cfg.lambda, 0.0);
        assert!(NullingConfig::new(-1.0, NullingMode::LosNulling).is_err());
        assert!(NullingConfig::new(f64::NAN, NullingMode::LosNulling).is_err());
    }
}
