//! Intraorthogonalization routines: QR of a single block.
//!
//! Each routine charges the ledger according to its reduction structure.
//! HouseQR stands in for TSQR and is charged a single synchronization.

use std::fmt;
use std::str::FromStr;

use crate::dense::{cholesky_upper, tri_solve, DenseMatrix, QrFactorization, SolveSide};
use crate::error::{dim_err, Error, Result};
use crate::sync::SyncLedger;

/// Default leaf count for TSQR when none is given.
pub const DEFAULT_TSQR_ROW_BLOCKS: usize = 4;

/// The available intraorthogonalization routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntraorthoKind {
    HouseQr,
    Tsqr { row_blocks: usize },
    Mgs,
    CholQr,
    /// Cholesky QR through `T - S^T S`; standalone it behaves like CholQR.
    CholQrPythagorean,
}

impl IntraorthoKind {
    /// Stability exponent: LOO grows like `u * kappa^alpha1`.
    pub fn alpha1(&self) -> u32 {
        match self {
            Self::HouseQr | Self::Tsqr { .. } => 0,
            Self::Mgs => 1,
            Self::CholQr | Self::CholQrPythagorean => 2,
        }
    }

    /// Synchronization points charged for a block of `s` columns.
    pub fn sync_cost(&self, s: usize) -> u64 {
        match self {
            Self::Mgs => s as u64,
            _ => 1,
        }
    }

    pub fn apply(&self, x: &DenseMatrix, ledger: &mut SyncLedger) -> Result<QrFactorization> {
        match *self {
            Self::HouseQr => house_qr(x, ledger),
            Self::Tsqr { row_blocks } => tsqr(x, row_blocks, ledger),
            Self::Mgs => mgs(x, ledger),
            Self::CholQr | Self::CholQrPythagorean => chol_qr(x, ledger),
        }
    }
}

impl fmt::Display for IntraorthoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HouseQr => write!(f, "HouseQR"),
            Self::Tsqr { row_blocks } => write!(f, "TSQR:{row_blocks}"),
            Self::Mgs => write!(f, "MGS"),
            Self::CholQr => write!(f, "CholQR"),
            Self::CholQrPythagorean => write!(f, "CholQRPythagorean"),
        }
    }
}

impl FromStr for IntraorthoKind {
    type Err = Error;

    /// Case-insensitive; TSQR accepts an optional leaf count as `TSQR:8`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let kind = match (name, arg) {
            ("houseqr" | "householder", None) => Self::HouseQr,
            ("tsqr", None) => Self::Tsqr {
                row_blocks: DEFAULT_TSQR_ROW_BLOCKS,
            },
            ("tsqr", Some(a)) => {
                let row_blocks: usize = a
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad TSQR leaf count '{a}'")))?;
                if row_blocks == 0 {
                    return Err(Error::InvalidArgument("TSQR needs at least one leaf".into()));
                }
                Self::Tsqr { row_blocks }
            }
            ("mgs", None) => Self::Mgs,
            ("cholqr", None) => Self::CholQr,
            ("cholqrpythagorean", None) => Self::CholQrPythagorean,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown intraorthogonalization '{s}'"
                )))
            }
        };
        Ok(kind)
    }
}

fn check_tall(x: &DenseMatrix) -> Result<()> {
    if x.nrows() < x.ncols() {
        return dim_err(format!(
            "QR needs rows >= cols, got {}x{}",
            x.nrows(),
            x.ncols()
        ));
    }
    Ok(())
}

/// Householder QR without any ledger charge.
fn householder(x: &DenseMatrix) -> QrFactorization {
    let (m, n) = x.shape();
    let mut a = x.clone();
    let mut vs: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for j in 0..n {
        let norm = a.view((j, j), (m - j, 1)).norm();
        if norm == 0.0 {
            vs.push(None);
            continue;
        }
        let x0 = a[(j, j)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| a[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            vs.push(None);
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vnorm);
        for c in j..n {
            let dot: f64 = (0..m - j).map(|i| v[i] * a[(j + i, c)]).sum();
            for i in 0..m - j {
                a[(j + i, c)] -= 2.0 * v[i] * dot;
            }
        }
        vs.push(Some(v));
    }

    let mut r = DenseMatrix::zeros(n, n);
    for c in 0..n {
        for i in 0..=c {
            r[(i, c)] = a[(i, c)];
        }
    }
    let mut q = DenseMatrix::identity(m, n);
    for j in (0..n).rev() {
        if let Some(v) = &vs[j] {
            for c in 0..n {
                let dot: f64 = (0..m - j).map(|i| v[i] * q[(j + i, c)]).sum();
                for i in 0..m - j {
                    q[(j + i, c)] -= 2.0 * v[i] * dot;
                }
            }
        }
    }
    let mut f = QrFactorization { q, r };
    f.normalize_signs();
    f
}

/// Thin Householder QR, charged as one synchronization.
///
/// Rank deficiency is not an error; it shows up as a zero diagonal entry of
/// `R` (see [`QrFactorization::deficient_pivot`]).
pub fn house_qr(x: &DenseMatrix, ledger: &mut SyncLedger) -> Result<QrFactorization> {
    check_tall(x)?;
    let f = householder(x);
    ledger.charge(1);
    Ok(f)
}

fn tsqr_tree(x: &DenseMatrix, bounds: &[usize]) -> QrFactorization {
    if bounds.len() == 2 {
        let rows = bounds[1] - bounds[0];
        return householder(&x.rows(bounds[0], rows).clone_owned());
    }
    let mid = bounds.len() / 2;
    let top = tsqr_tree(x, &bounds[..=mid]);
    let bottom = tsqr_tree(x, &bounds[mid..]);
    let n = x.ncols();
    let mut stacked = DenseMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&top.r);
    stacked.rows_mut(n, n).copy_from(&bottom.r);
    let node = householder(&stacked);
    let q_top = &top.q * node.q.rows(0, n);
    let q_bottom = &bottom.q * node.q.rows(n, n);
    let mut q = DenseMatrix::zeros(q_top.nrows() + q_bottom.nrows(), n);
    q.rows_mut(0, q_top.nrows()).copy_from(&q_top);
    q.rows_mut(q_top.nrows(), q_bottom.nrows()).copy_from(&q_bottom);
    QrFactorization { q, r: node.r }
}

/// Tall-skinny QR over a balanced binary tree of contiguous row panels.
///
/// The leaf count is reduced when needed so that every panel keeps at least
/// `cols(X)` rows. The whole tree counts as one synchronization.
pub fn tsqr(x: &DenseMatrix, row_blocks: usize, ledger: &mut SyncLedger) -> Result<QrFactorization> {
    check_tall(x)?;
    if row_blocks == 0 {
        return Err(Error::InvalidArgument("TSQR needs at least one leaf".into()));
    }
    let (m, n) = x.shape();
    let leaves = row_blocks.min(m / n.max(1)).max(1);
    let bounds: Vec<usize> = (0..=leaves).map(|i| i * m / leaves).collect();
    let mut f = tsqr_tree(x, &bounds);
    f.normalize_signs();
    ledger.charge(1);
    Ok(f)
}

/// Modified Gram-Schmidt, one synchronization per column.
pub fn mgs(x: &DenseMatrix, ledger: &mut SyncLedger) -> Result<QrFactorization> {
    check_tall(x)?;
    let (m, n) = x.shape();
    let mut q = x.clone();
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let rij = q.column(i).dot(&q.column(j));
            r[(i, j)] = rij;
            let (qi, mut qj) = q.columns_range_pair_mut(i, j);
            qj.axpy(-rij, &qi, 1.0);
        }
        let norm = q.column(j).norm();
        ledger.charge(1);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::RankDeficient { column: j });
        }
        r[(j, j)] = norm;
        q.column_mut(j).unscale_mut(norm);
    }
    debug_assert_eq!(q.nrows(), m);
    Ok(QrFactorization { q, r })
}

/// Cholesky QR: `R = chol(X^T X)`, `Q = X R^{-1}`; one synchronization.
pub fn chol_qr(x: &DenseMatrix, ledger: &mut SyncLedger) -> Result<QrFactorization> {
    check_tall(x)?;
    let gram = x.tr_mul(x);
    ledger.charge(1);
    let r = cholesky_upper(&gram)?;
    let q = tri_solve(&r, x, SolveSide::Right)?;
    Ok(QrFactorization { q, r })
}

/// Sync-free Cholesky QR of `V = X - Q S` from the already reduced `T = X^T X`.
///
/// Returns `(U, S_diag)` with `S_diag = chol(T - S^T S)` and
/// `U = V S_diag^{-1}`. `s_proj` may have zero rows when there is nothing to
/// project against.
pub fn pythagorean_chol_step(
    v: &DenseMatrix,
    t: &DenseMatrix,
    s_proj: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let w = v.ncols();
    if t.shape() != (w, w) || s_proj.ncols() != w {
        return dim_err(format!(
            "pythagorean step: V has {w} columns, T is {}x{}, S is {}x{}",
            t.nrows(),
            t.ncols(),
            s_proj.nrows(),
            s_proj.ncols()
        ));
    }
    let gram = t - s_proj.tr_mul(s_proj);
    let s_diag = cholesky_upper(&gram)?;
    let u = tri_solve(&s_diag, v, SolveSide::Right)?;
    Ok((u, s_diag))
}
