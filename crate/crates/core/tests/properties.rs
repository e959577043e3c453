//! Invariants of the decompositions, designs and optimizers over random
//! instances.

use mimo_diag_core::ensemble::{random_complex, random_instance, random_of_rank, random_psd, random_unitary};
use mimo_diag_core::matdecomp::{herm_evd, psd_sqrt, truncated_svd, DEFAULT_RANK_TOL};
use mimo_diag_core::optim::waterfill;
use mimo_diag_core::{
    achievable_rate, capacity, check_conditions, evd_zf_design, mmse_sic_rate, rank_reduce,
    theorem1_design, ComplexMatrix, Error, TransmitCovariance,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn orthonormality_defect(u: &ComplexMatrix) -> f64 {
    (&u.adjoint_mul(u) - &ComplexMatrix::identity(u.cols())).frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn svd_reconstructs_and_is_orthonormal(seed in any::<u64>(), n in 1usize..=8, m in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_complex(&mut rng, n, m);
        let svd = truncated_svd(&a, DEFAULT_RANK_TOL).unwrap();
        let rel = (&svd.reconstruct() - &a).frobenius_norm() / a.frobenius_norm();
        prop_assert!(rel <= 1e-10, "reconstruction {rel}");
        prop_assert!(orthonormality_defect(&svd.left) <= 1e-10);
        prop_assert!(orthonormality_defect(&svd.right) <= 1e-10);
        prop_assert!(svd.singular_values.iter().all(|&s| s > 0.0));
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn evd_reconstructs_hermitian(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_complex(&mut rng, n, n);
        let h = a.hermitian_part();
        let evd = herm_evd(&h).unwrap();
        let rel = (&evd.reconstruct() - &h).frobenius_norm() / h.frobenius_norm();
        prop_assert!(rel <= 1e-10, "reconstruction {rel}");
        prop_assert!(orthonormality_defect(&evd.vectors) <= 1e-10);
        prop_assert!(evd.values.windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #[test]
    fn canonical_factors_are_reproduced(seed in any::<u64>(), n in 1usize..=6) {
        // Distinct eigenvalues, so the eigenbasis is unique up to phase.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_unitary(&mut rng, n);
        let values: Vec<f64> = (0..n).map(|i| (n - i) as f64 + 0.5).collect();
        let a = &q.scale_columns(&values) * &q.adjoint();
        let first = herm_evd(&a.hermitian_part()).unwrap();
        let rebuilt = first.reconstruct().hermitian_part();
        let second = herm_evd(&rebuilt).unwrap();
        prop_assert!((&first.vectors - &second.vectors).max_abs() <= 1e-12);
        for (x, y) in first.values.iter().zip(&second.values) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_outer_product_recovers_input(seed in any::<u64>(), n in 1usize..=8, r in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_psd(&mut rng, n, r.min(n));
        let f = psd_sqrt(&s).unwrap();
        prop_assert_eq!(f.cols(), r.min(n));
        let rel = (&f.gram_outer() - &s).frobenius_norm() / s.frobenius_norm();
        prop_assert!(rel <= 1e-9);
    }

    #[test]
    fn rank_reduce_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 6);
        let s = TransmitCovariance::new(inst.s_x).unwrap();
        let once = rank_reduce(&inst.h, &s).unwrap();
        let twice = rank_reduce(&inst.h, &once).unwrap();
        prop_assert!((twice.matrix() - once.matrix()).frobenius_norm() <= 1e-10);
        let c0 = capacity(&inst.h, &s).unwrap();
        let c1 = capacity(&inst.h, &once).unwrap();
        prop_assert!((c0 - c1).abs() <= 1e-9);
    }

    #[test]
    fn theorem1_decoder_and_gains(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 8);
        let s = TransmitCovariance::new(inst.s_x).unwrap();
        let t = theorem1_design(&inst.h, &s).unwrap();
        for d in 0..t.streams() {
            let n = mimo_diag_core::matrix::norm(&t.decoder.column(d));
            prop_assert!((n - 1.0).abs() <= 1e-10);
        }
        prop_assert!(t.stream_gains.iter().all(|&g| g > 0.0));
        prop_assert!(t.stream_gains.windows(2).all(|w| w[0] >= w[1]));
        // proof chain: sum log2(1 + phi^2) = R = C
        let chain: f64 = t.stream_gains.iter().map(|g| (1.0 + g * g).log2()).sum();
        let rate = achievable_rate(&inst.h, &t).unwrap();
        let cap = capacity(&inst.h, &s).unwrap();
        prop_assert!((chain - rate).abs() <= 1e-9 && (rate - cap).abs() <= 1e-8);
    }

    #[test]
    fn theorem1_rates_are_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 6);
        let s = TransmitCovariance::new(inst.s_x).unwrap();
        let q = random_unitary(&mut rng, inst.h.rows());
        let qh = &q * &inst.h;
        let r0 = achievable_rate(&inst.h, &theorem1_design(&inst.h, &s).unwrap()).unwrap();
        let r1 = achievable_rate(&qh, &theorem1_design(&qh, &s).unwrap()).unwrap();
        prop_assert!((r0 - r1).abs() <= 1e-10);
    }

    #[test]
    fn zero_forcing_never_beats_capacity(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_complex(&mut rng, n, m);
        let s = TransmitCovariance::new(random_psd(&mut rng, m, m.min(n))).unwrap();
        match evd_zf_design(&h, &s) {
            Ok(t) => {
                let rep = check_conditions(&h, &s, &t, 1e-8).unwrap();
                prop_assert!(rep.rate_r <= rep.capacity_c + 1e-9);
                prop_assert!(rep.diag_residual <= 1e-8 * (1.0 + t.decoder.max_abs()));
                prop_assert!(rep.covariance_ok);
            }
            Err(Error::Singular { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn mmse_sic_equals_capacity_in_any_order(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=6, d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_complex(&mut rng, n, m);
        let v = random_complex(&mut rng, m, d);
        let cap = capacity(&h, &TransmitCovariance::from_precoder(&v).unwrap()).unwrap();
        let fwd = mmse_sic_rate(&h, &v).unwrap();
        let rev: Vec<usize> = (0..d).rev().collect();
        let bwd = mimo_diag_core::mmse_sic_rate_ordered(&h, &v, &rev).unwrap();
        prop_assert!((fwd - cap).abs() <= 1e-9);
        prop_assert!((bwd - cap).abs() <= 1e-9);
    }

    #[test]
    fn waterfill_kkt(gains in proptest::collection::vec(0.01f64..100.0, 1..8), power in 0.01f64..50.0) {
        let p = waterfill(&gains, power).unwrap();
        let total: f64 = p.iter().sum();
        prop_assert!((total - power).abs() <= 1e-10 * power);
        let level = p.iter().zip(&gains).find(|(x, _)| **x > 0.0).map(|(x, g)| x + 1.0 / g).unwrap();
        for (x, g) in p.iter().zip(&gains) {
            if *x > 0.0 {
                prop_assert!((x + 1.0 / g - level).abs() <= 1e-9 * level.max(1.0));
            } else {
                prop_assert!(1.0 / g >= level - 1e-9);
            }
        }
    }

    #[test]
    fn capacity_of_rank_deficient_channel_survives_reduction(seed in any::<u64>(), m in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_of_rank(&mut rng, m, m, m - 1);
        let s = TransmitCovariance::new(random_psd(&mut rng, m, m)).unwrap();
        let t = theorem1_design(&h, &s).unwrap();
        prop_assert_eq!(t.streams(), m - 1);
        let reduced = rank_reduce(&h, &s).unwrap();
        let rep = check_conditions(&h, &reduced, &t, 1e-8).unwrap();
        prop_assert!(rep.all_ok(), "{:?}", rep);
        prop_assert!((rep.capacity_c - capacity(&h, &s).unwrap()).abs() <= 1e-9);
    }
}
