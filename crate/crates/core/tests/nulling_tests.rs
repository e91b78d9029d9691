mod common;

use common::{eig2_hermitian, hermitian_eigenvalues_oracle, random_cmatrix, random_cvector, random_hermitian, singular_values};
use leo_coexist::antenna::{steering_vector, UraGeometry};
use leo_coexist::geometry::SteeringDirection;
use leo_coexist::linalg::{CMatrix, CVector, C64};
use leo_coexist::nulling::{
    hermitian_max_eigvec, link_gain, los_interference_matrix, nulling_matrix, rx_beamformer, solve_beamformers,
    tx_beamformer, NullingConfig, NullingMode,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn residual(m: &CMatrix, mu: f64, v: &CVector) -> f64 {
    m.mul_vec(v).sub(&v.scale_real(mu)).norm()
}

fn los(lambda: f64) -> NullingConfig {
    NullingConfig::new(lambda, NullingMode::LosNulling).unwrap()
}

#[test]
fn dominant_eigenpair_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let n = rng.gen_range(1..=12);
        let m = random_hermitian(&mut rng, n);
        let (mu, v) = hermitian_max_eigvec(&m).unwrap();
        let oracle = *hermitian_eigenvalues_oracle(&m).last().unwrap();
        assert!((mu - oracle).abs() <= 1e-8, "n={n}: {mu} vs {oracle}");
        assert!((v.norm() - 1.0).abs() < 1e-9);
        assert!(residual(&m, mu, &v) <= 1e-8);
    }
}

#[test]
fn two_by_two_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let a = rng.gen_range(-3.0..3.0);
        let d = rng.gen_range(-3.0..3.0);
        let b = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let m = CMatrix::from_rows(&[vec![C64::new(a, 0.0), b], vec![b.conj(), C64::new(d, 0.0)]]);
        let (_, hi) = eig2_hermitian(a, b, d);
        let (mu, _) = hermitian_max_eigvec(&m).unwrap();
        assert!((mu - hi).abs() < 1e-10);
    }
}

#[test]
fn rx_beamformer_rank_one_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = random_cvector(&mut rng, 4);
    let b = random_cvector(&mut rng, 8);
    let h = a.outer(&b);
    let w = rx_beamformer(&h).unwrap();
    let an = a.normalized().unwrap();
    assert!((an.dot(&w).norm() - 1.0).abs() < 1e-9);
    let s = singular_values(&h);
    assert!(s[1] < 1e-6 * s[0]);
}

#[test]
fn rx_beamformer_single_antenna_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let h = random_cmatrix(&mut rng, 1, 6);
    let w = rx_beamformer(&h).unwrap();
    assert_eq!(w.len(), 1);
    assert!((w[0].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn rx_beamformer_two_by_four_matches_quadratic_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let h = random_cmatrix(&mut rng, 2, 4);
        let g = h.matmul(&h.adjoint());
        let (_, hi) = eig2_hermitian(g[(0, 0)].re, g[(0, 1)], g[(1, 1)].re);
        let w = rx_beamformer(&h).unwrap();
        assert!((g.quadratic_form(&w) - hi).abs() < 1e-9 * hi.max(1.0));
        assert!(residual(&g, hi, &w) <= 1e-8 * hi.max(1.0));
    }
}

#[test]
fn lambda_zero_reaches_largest_singular_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..10 {
        let h = random_cmatrix(&mut rng, 2, 8);
        let sat = vec![random_cvector(&mut rng, 8)];
        let pair = solve_beamformers(&h, &sat, &NullingConfig::no_nulling()).unwrap();
        let s1 = singular_values(&h)[0];
        let g = link_gain(&h, &pair.w_r, &pair.w_t);
        assert!((g - s1 * s1).abs() < 1e-8 * s1 * s1);
    }
}

#[test]
fn orthogonal_interferer_leaves_gain_unchanged() {
    let geom = UraGeometry::half_wavelength(1, 4).unwrap();
    // rows of H live in span{e0, e1}; the interferer is e2
    let h = CMatrix::from_rows(&[vec![
        C64::new(1.0, 0.0),
        C64::new(0.5, 0.5),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ]]);
    let sat = vec![CVector::basis(geom.n_elements(), 2).scale_real(2.0)];
    let w_r = rx_beamformer(&h).unwrap();
    let (_, w0) = tx_beamformer(&h, &w_r, &[], &NullingConfig::no_nulling()).unwrap();
    for lambda in [0.1, 10.0, 1e4] {
        let (_, w) = tx_beamformer(&h, &w_r, &sat, &los(lambda)).unwrap();
        assert!((link_gain(&h, &w_r, &w) - link_gain(&h, &w_r, &w0)).abs() < 1e-9);
    }
}

#[test]
fn two_element_aligned_interferer_closed_form() {
    // N_t = 2, channel and interferer both along steering vectors; the
    // reduced 2×2 matrix M = a a^H − λ h h^H is solved by the quadratic formula
    let geom = UraGeometry::half_wavelength(1, 2).unwrap();
    let a = steering_vector(&SteeringDirection::local(-10.0, 0.0).unwrap(), &geom);
    let hs = steering_vector(&SteeringDirection::local(30.0, 0.0).unwrap(), &geom);
    let h = CMatrix::from_rows(&[a.conj().0]);
    let w_r = rx_beamformer(&h).unwrap();
    let lambda = 10.0;
    let (mu, w) = tx_beamformer(&h, &w_r, &[hs.clone()], &los(lambda)).unwrap();
    let m = nulling_matrix(&h, &w_r, &[hs], lambda).unwrap();
    let (_, hi) = eig2_hermitian(m[(0, 0)].re, m[(0, 1)], m[(1, 1)].re);
    assert!((mu - hi.max(0.0)).abs() < 1e-10);
    assert!((m.quadratic_form(&w) - mu).abs() < 1e-10);
}

#[test]
fn empty_interferer_list_is_baseline() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = random_cmatrix(&mut rng, 2, 6);
    let w_r = rx_beamformer(&h).unwrap();
    let (_, a) = tx_beamformer(&h, &w_r, &[], &los(5.0)).unwrap();
    let (_, b) = tx_beamformer(&h, &w_r, &[], &NullingConfig::no_nulling()).unwrap();
    assert!((link_gain(&h, &w_r, &a) - link_gain(&h, &w_r, &b)).abs() < 1e-10);
    assert!(los_interference_matrix(&[], &UraGeometry::half_wavelength(2, 3).unwrap()).is_empty());
}

#[test]
fn one_satellite_steering_vector_norm() {
    let geom = UraGeometry::half_wavelength(8, 8).unwrap();
    let v = los_interference_matrix(&[SteeringDirection::local(40.0, 20.0).unwrap()], &geom);
    assert_eq!(v.len(), 1);
    assert!((v[0].norm_sqr() - 64.0).abs() < 1e-9);
}

#[test]
fn objective_beats_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let h = random_cmatrix(&mut rng, 2, 8);
    let sats: Vec<CVector> = (0..3).map(|_| random_cvector(&mut rng, 8)).collect();
    let w_r = rx_beamformer(&h).unwrap();
    let m = nulling_matrix(&h, &w_r, &sats, 2.0).unwrap();
    let (mu, w) = tx_beamformer(&h, &w_r, &sats, &los(2.0)).unwrap();
    assert!((m.quadratic_form(&w) - mu).abs() < 1e-9);
    for _ in 0..1000 {
        let p = random_cvector(&mut rng, 8).normalized().unwrap();
        assert!(m.quadratic_form(&p) <= mu + 1e-9);
    }
}

fn arb_setup() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leakage_and_gain_fall_with_lambda(seed in arb_setup()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_cmatrix(&mut rng, 2, 6);
        let sats: Vec<CVector> = (0..2).map(|_| random_cvector(&mut rng, 6)).collect();
        let w_r = rx_beamformer(&h).unwrap();
        let leak = |w: &CVector| sats.iter().map(|s| s.dot(w).norm_sqr()).sum::<f64>();
        let mut prev: Option<(f64, f64)> = None;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let (_, w) = tx_beamformer(&h, &w_r, &sats, &los(lambda)).unwrap();
            let cur = (link_gain(&h, &w_r, &w), leak(&w));
            if let Some((g, l)) = prev {
                prop_assert!(cur.0 <= g * (1.0 + 1e-9) + 1e-12);
                prop_assert!(cur.1 <= l * (1.0 + 1e-9) + 1e-12);
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn beamformers_are_unit_norm_and_phase_invariant(seed in arb_setup(), phase in 0.0f64..6.28) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_cmatrix(&mut rng, 2, 5);
        let sats = vec![random_cvector(&mut rng, 5)];
        let p = solve_beamformers(&h, &sats, &los(1.0)).unwrap();
        prop_assert!((p.w_t.norm() - 1.0).abs() < 1e-9);
        prop_assert!((p.w_r.norm() - 1.0).abs() < 1e-9);
        // a common phase on H changes neither gain nor leakage
        let hp = h.scale(C64::from_polar(1.0, phase));
        let q = solve_beamformers(&hp, &sats, &los(1.0)).unwrap();
        prop_assert!((link_gain(&h, &p.w_r, &p.w_t) - link_gain(&hp, &q.w_r, &q.w_t)).abs() < 1e-8);
        prop_assert!((sats[0].dot(&p.w_t).norm_sqr() - sats[0].dot(&q.w_t).norm_sqr()).abs() < 1e-8);
    }
}
