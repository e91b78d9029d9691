//! Minimum-leakage codeword under a gain-loss constraint.
//!
//! Problem: minimize `w^H R w` with `R = Σ_p e_p e_p^H` over the region
//! sample points, subject to `|√N_t − e^H w|² ≤ ε` and `||w|| ≤ 1`.
//!
//! With `R = U diag(r) U^H` and `c = U^H e`, the optimum has `e^H w` real.
//! If the null space of `R` can carry the required gain on its own the
//! objective is zero and the largest achievable gain is taken there.
//! Otherwise the loss constraint is active (`e^H w = √N_t − √ε`) and the
//! KKT conditions give `y_k = μ c_k / (r_k + β)`, where `μ` enforces the
//! gain and `β ≥ 0` is the multiplier of the norm constraint, found by
//! bisection on `||y|| = 1` when the unconstrained solution leaves the ball.

use crate::linalg::{hermitian_eigen, CMatrix, CVector, LinalgError, C64};

/// Eigenvalues at or below this fraction of `max(r_max, 1)` count as null.
const NULL_REL_TOL: f64 = 1e-10;
const BISECTION_ITERS: usize = 200;

/// Eigendecomposition of one region's correlation matrix, reusable for any
/// steering direction.
#[derive(Debug, Clone)]
pub struct RegionSolver {
    r: Vec<f64>,
    u: CMatrix,
    null: Vec<bool>,
    corr: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub w: CVector,
    pub objective: f64,
}

impl RegionSolver {
    /// `points` are steering vectors of the region samples (all of length `n`).
    pub fn new(points: &[CVector], n: usize) -> Result<Self, LinalgError> {
        let mut corr = CMatrix::zeros(n, n);
        for p in points {
            if p.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            corr.add_outer_scaled(p, 1.0);
        }
        let (r, u) = hermitian_eigen(&corr)?;
        let r_max = r.iter().cloned().fold(0.0, f64::max);
        let thr = NULL_REL_TOL * r_max.max(1.0);
        let null = r.iter().map(|&x| x <= thr).collect();
        Ok(RegionSolver { r, u, null, corr })
    }

    pub fn correlation(&self) -> &CMatrix {
        &self.corr
    }

    pub fn solve(&self, e: &CVector, eps: f64) -> Solution {
        let n = e.len();
        let sqrt_n = (n as f64).sqrt();
        let c = self.u.adjoint_mul_vec(e);
        let g_min = (sqrt_n - eps.sqrt()).max(0.0);

        let c_null: f64 = c
            .iter()
            .zip(&self.null)
            .filter(|(_, &z)| z)
            .map(|(x, _)| x.norm_sqr())
            .sum::<f64>()
            .sqrt();

        let y: Vec<C64> = if c_null > 0.0 && c_null >= g_min {
            let g = sqrt_n.min(c_null);
            let s = g / (c_null * c_null);
            c.iter()
                .zip(&self.null)
                .map(|(x, &z)| if z { x * s } else { C64::new(0.0, 0.0) })
                .collect()
        } else if g_min == 0.0 {
            vec![C64::new(0.0, 0.0); n]
        } else {
            self.regularized(&c, g_min)
        };
        let w = self.u.mul_vec(&CVector(y));
        let objective = self.corr.quadratic_form(&w).max(0.0);
        Solution { w, objective }
    }

    fn y_of(&self, c: &CVector, g: f64, beta: f64) -> Vec<C64> {
        let denom: Vec<f64> = self.r.iter().map(|&r| r.max(0.0) + beta).collect();
        let s: f64 = c.iter().zip(&denom).map(|(x, d)| x.norm_sqr() / d).sum();
        let mu = g / s;
        c.iter().zip(&denom).map(|(x, d)| x * (mu / d)).collect()
    }

    fn regularized(&self, c: &CVector, g: f64) -> Vec<C64> {
        let norm = |y: &[C64]| y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let has_null = self.null.iter().any(|&z| z);
        if !has_null {
            let y = self.y_of(c, g, 0.0);
            if norm(&y) <= 1.0 {
                return y;
            }
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while norm(&self.y_of(c, g, hi)) > 1.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm(&self.y_of(c, g, mid)) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // the upper end is always on the feasible side
        self.y_of(c, g, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector(v.iter().map(|&(a, b)| C64::new(a, b)).collect())
    }

    #[test]
    fn empty_region_gives_matched_filter() {
        let s = RegionSolver::new(&[], 4).unwrap();
        let e = cv(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        let sol = s.solve(&e, 0.5);
        assert!(sol.w.sub(&e.scale_real(0.5)).max_abs() < 1e-12);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn orthogonal_point_is_nulled_exactly() {
        let e = cv(&[(1.0, 0.0), (1.0, 0.0)]);
        let p = cv(&[(1.0, 0.0), (-1.0, 0.0)]);
        let s = RegionSolver::new(&[p.clone()], 2).unwrap();
        let sol = s.solve(&e, 0.1);
        assert!(p.dot(&sol.w).norm() < 1e-12);
        assert!((e.dot(&sol.w).re - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn active_loss_constraint() {
        // the only point coincides with the steering direction, so all gain
        // costs leakage: the solver must sit exactly on the loss boundary
        let e = cv(&[(1.0, 0.0), (0.0, 1.0)]);
        let s = RegionSolver::new(&[e.clone()], 2).unwrap();
        let eps = 0.5;
        let sol = s.solve(&e, eps);
        let loss = (C64::new(2f64.sqrt(), 0.0) - e.dot(&sol.w)).norm_sqr();
        assert!((loss - eps).abs() < 1e-12);
        assert!(sol.w.norm() <= 1.0 + 1e-12);
    }
}
