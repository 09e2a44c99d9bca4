//! Dense kernels shared by every orthogonalization routine.
//!
//! Matrices are column-major `nalgebra` matrices. Besides the block layout
//! helpers this module holds the upper Cholesky factorization, triangular
//! solves that never form an inverse, and the three quality metrics used
//! throughout: loss of orthogonality, relative residual and the 2-norm
//! condition number.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{dim_err, Error, Result};

/// Column-major real matrix carrying `X`, `Q`, `R` and all panels.
pub type DenseMatrix = DMatrix<f64>;

/// Roundoff unit used by every tolerance, `2^-52 ≈ 2.22e-16`.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON;

/// Block-column layout of a tall matrix `[X_1, ..., X_p]`.
///
/// Every block has `s` columns except the first, which has `lead_width`
/// columns (`s + 1` for the Arnoldi layout `[r, W]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    pub m: usize,
    pub p: usize,
    pub s: usize,
    pub lead_width: usize,
}

impl BlockPartition {
    pub fn new(m: usize, p: usize, s: usize) -> Result<Self> {
        Self::with_lead_width(m, p, s, s)
    }

    pub fn with_lead_width(m: usize, p: usize, s: usize, lead_width: usize) -> Result<Self> {
        if s == 0 || p == 0 || lead_width == 0 {
            return Err(Error::InvalidArgument(format!(
                "block partition needs p, s, lead width >= 1 (got p={p}, s={s}, lead={lead_width})"
            )));
        }
        let part = Self { m, p, s, lead_width };
        if part.cols() > m {
            return Err(Error::InvalidArgument(format!(
                "{} columns do not fit in {m} rows",
                part.cols()
            )));
        }
        Ok(part)
    }

    /// Total number of columns `n`.
    pub fn cols(&self) -> usize {
        self.lead_width + (self.p - 1) * self.s
    }

    /// Column range of block `k` (zero-based).
    pub fn block_range(&self, k: usize) -> Range<usize> {
        assert!(k < self.p, "block {k} out of range for p={}", self.p);
        if k == 0 {
            0..self.lead_width
        } else {
            let start = self.lead_width + (k - 1) * self.s;
            start..start + self.s
        }
    }

    pub fn block_width(&self, k: usize) -> usize {
        self.block_range(k).len()
    }

    /// Copy of block `k` of `x`.
    pub fn block(&self, x: &DenseMatrix, k: usize) -> DenseMatrix {
        let r = self.block_range(k);
        x.columns(r.start, r.len()).clone_owned()
    }

    pub fn check(&self, x: &DenseMatrix) -> Result<()> {
        if x.nrows() != self.m || x.ncols() != self.cols() {
            return dim_err(format!(
                "matrix is {}x{} but partition expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.m,
                self.cols()
            ));
        }
        Ok(())
    }
}

/// Thin QR factorization `X = Q R` with `diag(R) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactorization {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

impl QrFactorization {
    /// Flip signs so that every diagonal entry of `R` is nonnegative.
    pub fn normalize_signs(&mut self) {
        for k in 0..self.r.nrows().min(self.r.ncols()) {
            if self.r[(k, k)] < 0.0 {
                self.r.row_mut(k).neg_mut();
                self.q.column_mut(k).neg_mut();
            }
        }
    }

    /// First diagonal index of `R` that is zero to working precision, if any.
    ///
    /// `scale` is a norm of the factored matrix; entries below
    /// `max(m, n) * u * scale` count as zero.
    pub fn deficient_pivot(&self, scale: f64) -> Option<usize> {
        let tol = self.q.nrows().max(self.r.ncols()) as f64 * UNIT_ROUNDOFF * scale;
        (0..self.r.nrows().min(self.r.ncols())).find(|&k| self.r[(k, k)].abs() <= tol)
    }
}

/// Upper Cholesky factor `R` with `R^T R = G`.
///
/// The input is symmetrized as `(G + G^T)/2` first; Gram matrices formed by
/// subtraction are symmetric only to roundoff.
pub fn cholesky_upper(g: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.nrows();
    if g.ncols() != n {
        return dim_err(format!("cholesky of non-square {}x{}", n, g.ncols()));
    }
    let sym = (g + g.transpose()) * 0.5;
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = sym[(j, j)];
        for k in 0..j {
            d -= r[(k, j)] * r[(k, j)];
        }
        // also rejects NaN
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let rjj = d.sqrt();
        r[(j, j)] = rjj;
        for i in j + 1..n {
            let mut v = sym[(j, i)];
            for k in 0..j {
                v -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = v / rjj;
        }
    }
    Ok(r)
}

/// Which triangular system [`tri_solve`] solves for `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveSide {
    /// `R X = B`
    Left,
    /// `R^T X = B`
    LeftTransposed,
    /// `X R = B`
    Right,
    /// `X R^T = B`
    RightTransposed,
}

/// Solve a triangular system with the upper triangular `r`.
pub fn tri_solve(r: &DenseMatrix, b: &DenseMatrix, side: SolveSide) -> Result<DenseMatrix> {
    let n = r.nrows();
    if r.ncols() != n {
        return dim_err(format!("triangular factor is {}x{}", n, r.ncols()));
    }
    let conforming = match side {
        SolveSide::Left | SolveSide::LeftTransposed => b.nrows() == n,
        SolveSide::Right | SolveSide::RightTransposed => b.ncols() == n,
    };
    if !conforming {
        return dim_err(format!(
            "rhs {}x{} does not conform with {n}x{n} factor",
            b.nrows(),
            b.ncols()
        ));
    }
    if let Some(index) = (0..n).find(|&i| r[(i, i)] == 0.0) {
        return Err(Error::SingularTriangular { index });
    }

    let mut x = b.clone();
    match side {
        SolveSide::Left => {
            for c in 0..x.ncols() {
                for i in (0..n).rev() {
                    let mut v = x[(i, c)];
                    for k in i + 1..n {
                        v -= r[(i, k)] * x[(k, c)];
                    }
                    x[(i, c)] = v / r[(i, i)];
                }
            }
        }
        SolveSide::LeftTransposed => {
            for c in 0..x.ncols() {
                for i in 0..n {
                    let mut v = x[(i, c)];
                    for k in 0..i {
                        v -= r[(k, i)] * x[(k, c)];
                    }
                    x[(i, c)] = v / r[(i, i)];
                }
            }
        }
        SolveSide::Right => {
            for j in 0..n {
                for k in 0..j {
                    let rkj = r[(k, j)];
                    if rkj != 0.0 {
                        let (src, mut dst) = x.columns_range_pair_mut(k, j);
                        dst.axpy(-rkj, &src, 1.0);
                    }
                }
                x.column_mut(j).unscale_mut(r[(j, j)]);
            }
        }
        SolveSide::RightTransposed => {
            for j in (0..n).rev() {
                for k in j + 1..n {
                    let rjk = r[(j, k)];
                    if rjk != 0.0 {
                        let (mut dst, src) = x.columns_range_pair_mut(j, k);
                        dst.axpy(-rjk, &src, 1.0);
                    }
                }
                x.column_mut(j).unscale_mut(r[(j, j)]);
            }
        }
    }
    Ok(x)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |acc: f64, &v| acc.max(v))
}

/// `||I - Q^T Q||_2`.
pub fn loss_of_orthogonality(q: &DenseMatrix) -> f64 {
    let n = q.ncols();
    let defect = DenseMatrix::identity(n, n) - q.tr_mul(q);
    spectral_norm(&defect)
}

/// `||X - Q R||_2 / ||X||_2`.
pub fn relative_residual(x: &DenseMatrix, q: &DenseMatrix, r: &DenseMatrix) -> Result<f64> {
    if q.nrows() != x.nrows() || r.ncols() != x.ncols() || q.ncols() != r.nrows() {
        return dim_err(format!(
            "X {}x{}, Q {}x{}, R {}x{} do not conform",
            x.nrows(),
            x.ncols(),
            q.nrows(),
            q.ncols(),
            r.nrows(),
            r.ncols()
        ));
    }
    let xn = spectral_norm(x);
    if xn == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(spectral_norm(&(x - q * r)) / xn)
}

fn extreme_singular_values(x: &DenseMatrix) -> (f64, f64) {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0, |a: f64, &v| a.max(v));
    let min = sv.iter().fold(f64::INFINITY, |a: f64, &v| a.min(v));
    (max, min)
}

/// `sigma_max / sigma_min` without a singularity check; `inf` when
/// `sigma_min` is zero.
pub fn singular_value_ratio(x: &DenseMatrix) -> f64 {
    if x.is_empty() {
        return 1.0;
    }
    let (max, min) = extreme_singular_values(x);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// 2-norm condition number from a full SVD.
pub fn cond2(x: &DenseMatrix) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::SingularMatrix);
    }
    let (max, min) = extreme_singular_values(x);
    let tol = UNIT_ROUNDOFF * max * x.nrows().max(x.ncols()) as f64;
    if max == 0.0 || min <= tol {
        return Err(Error::SingularMatrix);
    }
    Ok(max / min)
}

/// True when every entry is finite.
pub fn all_finite(x: &DenseMatrix) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Horizontal concatenation `[a, b]`.
pub fn hcat(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.nrows(), b.nrows(), "hcat row mismatch");
    let mut out = DenseMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Vertical concatenation `[a; b]`.
pub fn vcat(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.ncols(), b.ncols(), "vcat column mismatch");
    let mut out = DenseMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}
