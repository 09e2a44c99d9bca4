use blockgs::dense::spectral_norm;
use blockgs::testbed::{MatrixClass, MatrixClassParams};
use blockgs::{
    bcgs_i_p_1s, bcgs_i_p_2s, bcgs_pip_iro, lazy_s_column, switch_check, BlockPartition,
    DenseMatrix, Error, IntraorthoKind, OrthoVariant, VariantTag, DEFAULT_SWITCH_CONST, UNIT_ROUNDOFF,
};
use proptest::prelude::*;

fn generate(class: MatrixClass, m: usize, p: usize, s: usize, kappa: f64, seed: u64) -> DenseMatrix {
    MatrixClassParams {
        class,
        m,
        p,
        s,
        kappa_target: kappa,
        rng_seed: seed,
    }
    .generate()
    .unwrap()
}

/// R from nalgebra's Householder QR with a positive diagonal.
fn reference_r(x: &DenseMatrix) -> DenseMatrix {
    let mut r = x.clone().qr().r();
    for k in 0..r.nrows() {
        if r[(k, k)] < 0.0 {
            r.row_mut(k).neg_mut();
        }
    }
    r
}

fn expected_syncs(tag: VariantTag, p: u64) -> u64 {
    match tag {
        VariantTag::PipIro => 1 + 2 * (p - 1),
        VariantTag::OneSync | VariantTag::Adaptive => p + 1,
        VariantTag::TwoSync => 2 * p,
        VariantTag::Bcgs2 => 1 + 4 * (p - 1),
        VariantTag::A1s => p,
    }
}

#[test]
fn tag_names_round_trip() {
    for tag in VariantTag::ALL {
        assert_eq!(tag.as_str().parse::<VariantTag>().unwrap(), tag);
    }
    assert_eq!("ip-1s".parse::<VariantTag>().unwrap(), VariantTag::OneSync);
    assert!("CGS".parse::<VariantTag>().is_err());
}

#[test]
fn single_block_is_io_a() {
    let x = generate(MatrixClass::Default, 30, 1, 4, 1e2, 1);
    let part = BlockPartition::new(30, 1, 4).unwrap();
    for tag in VariantTag::ALL {
        let rep = OrthoVariant::default_for(tag).run(&x, &part).unwrap();
        assert_eq!(rep.ledger.total(), 1, "{tag}");
        assert!(rep.loo() < 1e-14);
    }
}

#[test]
fn small_ledger_examples() {
    let x = generate(MatrixClass::Default, 100, 4, 2, 1e2, 2);
    let part = BlockPartition::new(100, 4, 2).unwrap();
    let rep = bcgs_pip_iro(&x, &part, IntraorthoKind::HouseQr).unwrap();
    assert_eq!(rep.ledger.total(), 7);
    let x = generate(MatrixClass::Default, 200, 13, 4, 1e2, 2);
    let part = BlockPartition::new(200, 13, 4).unwrap();
    let rep = bcgs_i_p_2s(&x, &part, IntraorthoKind::HouseQr, IntraorthoKind::HouseQr).unwrap();
    assert_eq!(rep.ledger.total(), 26);
}

#[test]
fn breakdown_returns_partial_factorization() {
    let x = generate(MatrixClass::Default, 200, 10, 5, 1e13, 1);
    let part = BlockPartition::new(200, 10, 5).unwrap();
    let fail = OrthoVariant::default_for(VariantTag::OneSync)
        .run(&x, &part)
        .unwrap_err();
    assert!(matches!(fail.error, Error::NotPositiveDefinite { .. }));
    let done = fail.failed_block - 1;
    assert!(done >= 1);
    let f = &fail.partial.factorization;
    assert_eq!(f.q.ncols(), done * 5);
    assert_eq!(f.r.shape(), (done * 5, done * 5));
    let lead = x.columns(0, done * 5).clone_owned();
    assert!(spectral_norm(&(&lead - &f.q * &f.r)) <= 1e-12 * spectral_norm(&lead));
}

#[test]
fn adaptive_matches_two_sync_after_switch() {
    let x = generate(MatrixClass::Glued, 200, 10, 5, 1e12, 1);
    let part = BlockPartition::new(200, 10, 5).unwrap();
    let rep = OrthoVariant::default_for(VariantTag::Adaptive).run(&x, &part).unwrap();
    let d = rep.switch_block.expect("glued 1e12 input must trigger the switch") as u64;
    assert!((2..=10).contains(&d));
    // blocks before d cost one sync each, blocks from d on cost two
    assert_eq!(rep.ledger.total(), d + 2 * (10 - d + 1));
    assert!(rep.loo() < 1e-13);
}

#[test]
fn per_block_loo_is_reported_for_every_block() {
    let x = generate(MatrixClass::Piled, 120, 6, 3, 1e6, 4);
    let part = BlockPartition::new(120, 6, 3).unwrap();
    for tag in VariantTag::ALL {
        let rep = OrthoVariant::default_for(tag).run(&x, &part).unwrap();
        assert_eq!(rep.per_block_loo.len(), 6);
        assert_eq!(*rep.per_block_loo.last().unwrap(), rep.loo());
    }
}

#[test]
fn one_sync_matches_pip_iro() {
    for seed in 0..6 {
        let x = generate(MatrixClass::Default, 90, 5, 3, 1e4, seed);
        let part = BlockPartition::new(90, 5, 3).unwrap();
        let a = bcgs_i_p_1s(&x, &part, IntraorthoKind::HouseQr).unwrap();
        let b = bcgs_pip_iro(&x, &part, IntraorthoKind::HouseQr).unwrap();
        let tol = 1e-8 * spectral_norm(&x);
        let diff = &a.factorization.r - &b.factorization.r;
        for j in 0..diff.ncols() {
            assert!(diff.column(j).norm() <= tol, "seed {seed} column {j}");
        }
    }
}

#[test]
fn sweep_of_regimes() {
    // HouseQR-based variants stay near u well inside the kappa^2 regime
    for class in [MatrixClass::Default, MatrixClass::Glued, MatrixClass::Piled] {
        let x = generate(class, 200, 10, 5, 1e6, 7);
        let part = BlockPartition::new(200, 10, 5).unwrap();
        let kappa = blockgs::cond2(&x).unwrap();
        if kappa >= 1e7 {
            continue;
        }
        for tag in VariantTag::ALL {
            let rep = OrthoVariant::default_for(tag).run(&x, &part).unwrap();
            assert!(rep.loo() <= 1e-8, "{class} {tag}: {:e}", rep.loo());
        }
    }
}

#[test]
fn switch_check_ties_switch() {
    // 2^2 * 1 = 4 exactly
    let omega = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
    assert!(switch_check(&omega, 2.0));
    assert!(!switch_check(&omega, 2.0 + 1e-12));
    assert!(switch_check(&DenseMatrix::from_element(1, 1, -1.0), 1.0));
}

#[test]
fn lazy_identity_decoupled_case() {
    let z = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
    let p = DenseMatrix::from_fn(2, 2, |i, j| (1 + i * j) as f64);
    let out = lazy_s_column(&z, &p, &DenseMatrix::zeros(3, 2), &DenseMatrix::identity(2, 2)).unwrap();
    assert_eq!(out.rows(0, 3), z);
    assert_eq!(out.rows(3, 2), p);
}

fn instance() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
    (2usize..6, 1usize..5, 0.0f64..2.0, any::<u64>()).prop_map(|(p, s, lk, seed)| {
        let m = p * s + 10 + (seed % 30) as usize;
        (m, p, s, 10f64.powf(lk), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn variants_match_reference_qr((m, p, s, kappa, seed) in instance()) {
        let x = generate(MatrixClass::Default, m, p, s, kappa, seed);
        let part = BlockPartition::new(m, p, s).unwrap();
        let oracle = reference_r(&x);
        let xnorm = spectral_norm(&x);
        for tag in VariantTag::ALL {
            let rep = OrthoVariant::default_for(tag).run(&x, &part).unwrap();
            let loo = rep.loo();
            let mut f = rep.factorization;
            f.normalize_signs();
            prop_assert!(spectral_norm(&(&f.r - &oracle)) <= 1e-10 * xnorm, "{}", tag);
            prop_assert!(spectral_norm(&(&x - &f.q * &f.r)) <= 100.0 * UNIT_ROUNDOFF * xnorm, "{}", tag);
            prop_assert!(loo <= 1e-12, "{} loo {:e}", tag, loo);
            prop_assert!((0..f.r.nrows()).all(|k| f.r[(k, k)] > 0.0));
        }
    }

    #[test]
    fn ledger_formulas((m, p, s, kappa, seed) in instance()) {
        let x = generate(MatrixClass::Default, m, p, s, kappa, seed);
        let part = BlockPartition::new(m, p, s).unwrap();
        for tag in VariantTag::ALL {
            let rep = OrthoVariant::default_for(tag).run(&x, &part).unwrap();
            prop_assert_eq!(rep.ledger.total(), expected_syncs(tag, p as u64), "{}", tag);
            let sum: u64 = rep.ledger.breakdown().iter().map(|(_, c)| c).sum();
            prop_assert_eq!(sum, rep.ledger.total());
        }
    }

    #[test]
    fn prefix_consistency((m, p, s, kappa, seed) in instance(), cut in 1usize..6) {
        let k = cut.min(p);
        let x = generate(MatrixClass::Default, m, p, s, kappa, seed);
        let full_part = BlockPartition::new(m, p, s).unwrap();
        let prefix_part = BlockPartition::new(m, k, s).unwrap();
        let prefix = x.columns(0, k * s).clone_owned();
        for tag in VariantTag::ALL {
            let variant = OrthoVariant::default_for(tag);
            let full = variant.run(&x, &full_part).unwrap().factorization;
            let part = variant.run(&prefix, &prefix_part).unwrap().factorization;
            // A_1S orthogonalizes the first two blocks together
            if tag == VariantTag::A1s && k == 1 && p > 1 {
                continue;
            }
            prop_assert_eq!(full.q.columns(0, k * s).clone_owned(), part.q, "{} Q", tag);
            prop_assert_eq!(full.r.view((0, 0), (k * s, k * s)).clone_owned(), part.r, "{} R", tag);
        }
    }

    #[test]
    fn switch_check_scale_invariant(
        entries in proptest::collection::vec(-1.0f64..1.0, 16),
        log_c in -6.0f64..6.0,
        shift in 1e-6f64..1.0,
    ) {
        let g = DenseMatrix::from_column_slice(4, 4, &entries);
        let omega = g.tr_mul(&g) + DenseMatrix::identity(4, 4) * shift;
        let c = 10f64.powf(log_c);
        prop_assert_eq!(
            switch_check(&(&omega * c), DEFAULT_SWITCH_CONST),
            switch_check(&omega, DEFAULT_SWITCH_CONST)
        );
    }

    #[test]
    fn lazy_identity(seed in any::<u64>(), s in 1usize..5) {
        let x = generate(MatrixClass::Default, 12 * s + 20, 3, s, 1e2, seed);
        let xnorm = spectral_norm(&x);
        let q = x.columns(0, s).clone_owned().qr().q();
        let u = x.columns(s, s).clone_owned();
        let xn = x.columns(2 * s, s).clone_owned();
        let y_cols = q.tr_mul(&u);
        let w = &u - &q * &y_cols;
        // independent second normalization through nalgebra's Cholesky
        let y_diag = (w.tr_mul(&w)).cholesky().unwrap().l().transpose();
        let q_new = &w * y_diag.clone().try_inverse().unwrap();
        let lazy = lazy_s_column(&q.tr_mul(&xn), &u.tr_mul(&xn), &y_cols, &y_diag).unwrap();
        let direct_top = q.tr_mul(&xn);
        let direct_bottom = q_new.tr_mul(&xn);
        prop_assert!(spectral_norm(&(lazy.rows(0, s) - direct_top)) <= 1e-8 * xnorm);
        prop_assert!(spectral_norm(&(lazy.rows(s, s) - direct_bottom)) <= 1e-8 * xnorm);
    }
}
