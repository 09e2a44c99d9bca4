use blockgs::dense::spectral_norm;
use blockgs::sync::fused_block_product;
use blockgs::{
    cholesky_upper, cond2, loss_of_orthogonality, tri_solve, DenseMatrix, Error, SolveSide,
    SyncLedger, UNIT_ROUNDOFF,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn spec_examples() {
    let i3 = DenseMatrix::identity(3, 3);
    let mut ledger = SyncLedger::new();
    let grid = fused_block_product(&[&i3], &[&i3], &mut ledger).unwrap();
    assert_eq!(grid[0][0], i3);
    assert_eq!(ledger.total(), 1);
    let e1 = DenseMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
    let e2 = DenseMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
    assert_eq!(fused_block_product(&[&e1], &[&e2], &mut ledger).unwrap()[0][0][(0, 0)], 0.0);

    assert_eq!(cholesky_upper(&DenseMatrix::identity(4, 4)).unwrap(), DenseMatrix::identity(4, 4));
    let indefinite = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(cholesky_upper(&indefinite), Err(Error::NotPositiveDefinite { .. })));

    let r = DenseMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
    let b = DenseMatrix::from_column_slice(2, 1, &[2.0, 8.0]);
    assert_eq!(tri_solve(&r, &b, SolveSide::Left).unwrap(), DenseMatrix::from_column_slice(2, 1, &[1.0, 2.0]));

    let q = DenseMatrix::identity(5, 5).columns(0, 3).clone_owned();
    assert_eq!(loss_of_orthogonality(&q), 0.0);
    let scaled = DenseMatrix::from_column_slice(3, 1, &[2.0, 0.0, 0.0]);
    assert_eq!(loss_of_orthogonality(&scaled), 3.0);

    assert_eq!(cond2(&DenseMatrix::identity(3, 3)).unwrap(), 1.0);
    let d = DenseMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 1.0, 0.1]));
    assert!((cond2(&d).unwrap() - 100.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fused_product_equals_individual_products(seed in any::<u64>(), m in 1usize..20, a in 1usize..4, b in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let left: Vec<DenseMatrix> = (0..a).map(|k| random(m, k + 1, &mut rng)).collect();
        let right: Vec<DenseMatrix> = (0..b).map(|k| random(m, k + 2, &mut rng)).collect();
        let lrefs: Vec<&DenseMatrix> = left.iter().collect();
        let rrefs: Vec<&DenseMatrix> = right.iter().collect();
        let mut ledger = SyncLedger::new();
        let grid = fused_block_product(&lrefs, &rrefs, &mut ledger).unwrap();
        prop_assert_eq!(ledger.total(), 1);
        for (i, l) in left.iter().enumerate() {
            for (j, r) in right.iter().enumerate() {
                prop_assert_eq!(&grid[i][j], &l.tr_mul(r));
            }
        }
    }

    #[test]
    fn cholesky_reconstructs(seed in any::<u64>(), n in 1usize..10, log_kappa in 0.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random(n, n, &mut rng).qr().q();
        let eig = DVector::from_fn(n, |i, _| 10f64.powf(-log_kappa * i as f64 / n.max(2) as f64));
        let g = &q * DenseMatrix::from_diagonal(&eig) * q.transpose();
        let r = cholesky_upper(&g).unwrap();
        let gnorm = spectral_norm(&g);
        let diff = r.tr_mul(&r) - &g;
        prop_assert!(diff.iter().all(|v| v.abs() <= 50.0 * UNIT_ROUNDOFF * gnorm));
    }

    #[test]
    fn tri_solve_residual(seed in any::<u64>(), n in 1usize..10, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = random(n, n, &mut rng).upper_triangle();
        for i in 0..n {
            r[(i, i)] = r[(i, i)].signum() * (0.5 + r[(i, i)].abs());
        }
        let kappa = cond2(&r).unwrap();
        for side in [SolveSide::Left, SolveSide::LeftTransposed, SolveSide::Right, SolveSide::RightTransposed] {
            let b = match side {
                SolveSide::Left | SolveSide::LeftTransposed => random(n, k, &mut rng),
                _ => random(k, n, &mut rng),
            };
            let y = tri_solve(&r, &b, side).unwrap();
            let back = match side {
                SolveSide::Left => &r * &y,
                SolveSide::LeftTransposed => r.transpose() * &y,
                SolveSide::Right => &y * &r,
                SolveSide::RightTransposed => &y * r.transpose(),
            };
            prop_assert!(spectral_norm(&(back - &b)) <= 100.0 * UNIT_ROUNDOFF * kappa * spectral_norm(&b));
        }
    }

    #[test]
    fn loo_is_permutation_invariant(seed in any::<u64>(), m in 4usize..20, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random(m, n, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        let p = DenseMatrix::from_fn(n, n, |i, j| if perm[j] == i { 1.0 } else { 0.0 });
        let a = loss_of_orthogonality(&q);
        let b = loss_of_orthogonality(&(&q * p));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }
}
