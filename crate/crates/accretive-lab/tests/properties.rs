//! Property tests for the structural invariants: resolvent bounds on
//! random accretive matrices, scaling laws of the optimal constant,
//! adjoint symmetry, and serialization round-trips.

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use accretive_lab::accretivity::{check_resolvent_bound, is_accretive};
use accretive_lab::numerics::{hermitian_part, operator_norm, CMatrix};
use accretive_lab::perturbation::{
    compute_b, generate_pair, predicted_sector, BValue, Family, GenParams, OperatorPair,
};
use accretive_lab::trotter::{adjoint_trotter_error, trotter_error};
use accretive_lab::ToleranceConfig;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn complex_entry() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Random matrix made accretive by shifting out the negative part of its
/// Hermitian component.
fn accretive_matrix(dim: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(complex_entry(), dim * dim).prop_map(move |entries| {
        let raw = CMatrix::from_vec(dim, dim, entries);
        let h = hermitian_part(&raw);
        let min_eig = h
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e));
        let shift = (-min_eig).max(0.0);
        &raw + CMatrix::identity(dim, dim) * Complex64::new(shift, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accretive_matrices_satisfy_resolvent_bound(
        t in (2usize..5).prop_flat_map(accretive_matrix),
        lambda in 1e-3f64..1e3,
    ) {
        let tol = tol();
        prop_assert!(is_accretive(&t, &tol).unwrap());
        let checks = check_resolvent_bound(&t, &[lambda], &tol).unwrap();
        prop_assert!(checks[0].pass, "norm {} > 1/{lambda}", checks[0].norm);
    }

    #[test]
    fn b_scales_inversely_with_perturbation(
        seed in 0u64..1000,
        gamma in 0.1f64..5.0,
    ) {
        let tol = tol();
        let base = generate_pair(Family::Rotated, 3, &GenParams::default(), seed, &tol).unwrap();
        let b0 = compute_b(&base, &tol).unwrap().finite().unwrap();
        let scaled = OperatorPair::new(
            base.t.clone(),
            &base.a * Complex64::new(gamma, 0.0),
            Family::User,
            None,
        )
        .unwrap();
        let b1 = compute_b(&scaled, &tol).unwrap().finite().unwrap();
        prop_assert!((b1 - b0 / gamma).abs() <= 1e-7 * (b0 / gamma).max(1.0),
            "b0 = {b0}, gamma = {gamma}, b1 = {b1}");
    }

    #[test]
    fn predicted_sector_structure(b in 1.0001f64..1e6) {
        let (wl, wc, m) = predicted_sector(b).unwrap();
        prop_assert!((wl + wc - std::f64::consts::FRAC_PI_2).abs() <= 1e-12);
        prop_assert!((m - b / (b - 1.0)).abs() <= 1e-9 * m);
        prop_assert!(wl > 0.0 && wc > 0.0 && m > 1.0);
    }

    #[test]
    fn trotter_adjoint_symmetry(
        seed in 0u64..200,
        t in 0.1f64..4.0,
        n_exp in 1u32..8,
    ) {
        let tol = tol();
        let pair = generate_pair(Family::Rotated, 3, &GenParams::default(), seed, &tol).unwrap();
        let h = hermitian_part(&pair.t);
        let n = 1u32 << n_exp;
        let e = trotter_error(&h, &pair.a, t, n).unwrap();
        let ea = adjoint_trotter_error(&h, &pair.a, t, n).unwrap();
        prop_assert!((e - ea).abs() <= 1e-12, "{e} vs {ea}");
    }

    #[test]
    fn matrix_file_round_trip(entries in proptest::collection::vec(complex_entry(), 9)) {
        let m = CMatrix::from_vec(3, 3, entries);
        let f = tempfile::NamedTempFile::new().unwrap();
        accretive_lab::io::write_matrix(&m, f.path()).unwrap();
        let back = accretive_lab::io::read_matrix(f.path()).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn diagonal_family_hits_target_b(
        seed in 0u64..500,
        target in 0.2f64..8.0,
    ) {
        let tol = tol();
        let params = GenParams { target_b: target, gamma: 1.0 / target };
        let pair = generate_pair(Family::Diagonal, 4, &params, seed, &tol).unwrap();
        match compute_b(&pair, &tol).unwrap() {
            BValue::Finite(b) => prop_assert!((b - target).abs() <= 1e-8 * target.max(1.0),
                "target {target}, got {b}"),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn sum_norm_subadditive_on_generated_pairs(seed in 0u64..500) {
        // cheap sanity tying the generator to the certificate scale
        let tol = tol();
        let pair = generate_pair(Family::ScalarMultiple, 4, &GenParams::default(), seed, &tol).unwrap();
        let sum = pair.sum();
        prop_assert!(operator_norm(&sum) <= operator_norm(&pair.t) + operator_norm(&pair.a) + 1e-12);
        prop_assert!(is_accretive(&sum, &tol).unwrap());
    }
}

#[test]
fn rotated_family_preserves_b_under_conjugation() {
    // unitary conjugation leaves both quadratic forms invariant, so the
    // rotated family must reproduce the diagonal family's constant
    let tol = tol();
    for seed in 0..20u64 {
        let params = GenParams {
            target_b: 2.5,
            gamma: 0.4,
        };
        let rotated = generate_pair(Family::Rotated, 5, &params, seed, &tol).unwrap();
        let b = compute_b(&rotated, &tol).unwrap().finite().unwrap();
        assert!((b - 2.5).abs() <= 1e-8, "seed {seed}: b = {b}");
    }
}

#[test]
fn numerical_range_contains_diagonal_entries() {
    let t = CMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::new(1.0, 1.0),
        Complex64::new(2.0, -0.5),
    ]));
    let boundary = accretive_lab::numerics::numerical_range_boundary(&t, 128);
    for z in [Complex64::new(1.0, 1.0), Complex64::new(2.0, -0.5)] {
        let hit = boundary.iter().any(|w| (w - z).norm() < 1e-9);
        assert!(hit, "diagonal entry {z} missing from boundary");
    }
}
