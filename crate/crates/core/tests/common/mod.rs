//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use leo_coexist::linalg::{CMatrix, CVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Eigenvalues (ascending) and eigenvectors (columns) of a real symmetric
/// matrix by cyclic Jacobi rotations.
pub fn jacobi_symmetric(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum().max(0.0) * 2.0 - 1.0;
                let t = t / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let vals = idx.iter().map(|&i| a[i][i]).collect();
    let vecs = idx.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (vals, vecs)
}

/// Eigenvalues of a Hermitian matrix through its real `2n × 2n` embedding
/// `[[A, −B], [B, A]]`; every eigenvalue appears twice there, so every
/// second value is returned (ascending).
pub fn hermitian_eigenvalues_oracle(m: &CMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut e = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            e[i][j] = z.re;
            e[i + n][j + n] = z.re;
            e[i][j + n] = -z.im;
            e[i + n][j] = z.im;
        }
    }
    let (vals, _) = jacobi_symmetric(&e);
    vals.into_iter().step_by(2).collect()
}

/// Singular values (descending) of a complex matrix by one-sided Jacobi
/// (Hestenes) on the real embedding of `H^T`, whose columns are orthogonalized
/// pairwise; every singular value of `H` appears twice in the embedding.
pub fn singular_values(h: &CMatrix) -> Vec<f64> {
    let (r, c) = (h.rows(), h.cols());
    // columns of the embedding: for each row i of H, the real vectors
    // (re, im) and (−im, re) of length 2c
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * r);
    for i in 0..r {
        let row: Vec<C64> = (0..c).map(|j| h[(i, j)]).collect();
        cols.push(row.iter().map(|z| z.re).chain(row.iter().map(|z| z.im)).collect());
        cols.push(row.iter().map(|z| -z.im).chain(row.iter().map(|z| z.re)).collect());
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols.len() {
            for q in p + 1..cols.len() {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum().max(0.0) * 2.0 - 1.0;
                let t = t / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..2 * c {
                    let a = cols[p][k];
                    let b = cols[q][k];
                    cols[p][k] = cs * a - sn * b;
                    cols[q][k] = sn * a + cs * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|v| dot(v, v).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.into_iter().step_by(2).collect()
}

/// Eigenvalues `(small, large)` of `[[a, b], [b*, d]]`.
pub fn eig2_hermitian(a: f64, b: C64, d: f64) -> (f64, f64) {
    let m = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (m - r, m + r)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

pub fn random_cvector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_cmatrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let rows_v: Vec<Vec<C64>> = (0..rows).map(|_| random_cvector(rng, cols).0).collect();
    CMatrix::from_rows(&rows_v)
}

/// Codeword problem data: `min w^H R w` subject to
/// `|√N − e^H w|² ≤ ε` and `||w||² ≤ 1`.
pub struct CodewordProblem<'a> {
    pub r: &'a CMatrix,
    pub e: &'a CVector,
    pub eps: f64,
}

impl CodewordProblem<'_> {
    pub fn objective(&self, w: &CVector) -> f64 {
        self.r.quadratic_form(w)
    }

    pub fn gain_loss(&self, w: &CVector) -> f64 {
        (C64::new((self.e.len() as f64).sqrt(), 0.0) - self.e.dot(w)).norm_sqr()
    }

    pub fn feasible(&self, w: &CVector, tol: f64) -> bool {
        self.gain_loss(w) <= self.eps + tol && w.norm_sqr() <= 1.0 + tol
    }
}

/// Quadratic-penalty gradient descent with a growing penalty weight,
/// started from the matched filter. Returns the final iterate.
pub fn penalty_codeword(p: &CodewordProblem) -> CVector {
    let n = p.e.len();
    let sqrt_n = (n as f64).sqrt();
    let mut w = p.e.scale_real(1.0 / sqrt_n);
    let pen = |w: &CVector, mu: f64| -> f64 {
        let g1 = (p.gain_loss(w) - p.eps).max(0.0);
        let g2 = (w.norm_sqr() - 1.0).max(0.0);
        p.objective(w) + mu * (g1 * g1 + g2 * g2)
    };
    let grad = |w: &CVector, mu: f64| -> CVector {
        // twice the Wirtinger derivative with respect to conj(w)
        let mut g = p.r.mul_vec(w).scale_real(2.0);
        let g1 = (p.gain_loss(w) - p.eps).max(0.0);
        if g1 > 0.0 {
            let resid = C64::new(sqrt_n, 0.0) - p.e.dot(w);
            g = g.axpy(-resid * (4.0 * mu * g1), p.e);
        }
        let g2 = (w.norm_sqr() - 1.0).max(0.0);
        if g2 > 0.0 {
            g = g.axpy(C64::new(4.0 * mu * g2, 0.0), w);
        }
        g
    };
    let mut mu = 10.0;
    while mu <= 1e10 {
        let mut step = 1e-2;
        for _ in 0..20_000 {
            let f0 = pen(&w, mu);
            let g = grad(&w, mu);
            let gn = g.norm_sqr();
            if gn < 1e-30 {
                break;
            }
            loop {
                let cand = w.axpy(C64::new(-step, 0.0), &g);
                if pen(&cand, mu) <= f0 - 0.25 * step * gn {
                    w = cand;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    break;
                }
            }
            if step < 1e-18 || (f0 - pen(&w, mu)).abs() <= 1e-16 * f0.abs().max(1e-300) {
                break;
            }
        }
        mu *= 10.0;
    }
    w
}
