//! The delayed-normalization loop shared by the one-sync, two-sync and
//! adaptive schemes, both for plain block QR and inside s-step Arnoldi.
//!
//! One call to [`LowSyncEngine::advance`] finishes one block column:
//!
//! 1. projection coefficients `S`, either given or recovered lazily;
//! 2. first normalization of `V = X - Q S`, through the Pythagorean Cholesky
//!    step (no sync) or through `io_1` (one sync);
//! 3. the caller supplies the next block, possibly generated from `U`;
//! 4. one fused reduction `[Q U]^T [U X_next]` (plus `X_next^T X_next` while
//!    the one-sync path is active);
//! 5. second normalization `Q_new = (U - Q Ycols) Y^{-1}` and the `R` update.

use crate::dense::{cholesky_upper, tri_solve, DenseMatrix, QrFactorization, SolveSide};
use crate::error::{dim_err, Error, Result};
use crate::intraortho::{pythagorean_chol_step, IntraorthoKind};
use crate::sync::{fused_block_product, SyncLedger};

use super::{lazy_s_column, switch_check};

/// How the first normalization of each block is done.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum FirstPass {
    Pythagorean,
    Intraortho(IntraorthoKind),
}

/// Adaptive switching parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SwitchRule {
    pub io_1: IntraorthoKind,
    pub switch_const: f64,
}

/// Source of the projection coefficients of the pending block.
#[derive(Debug, Clone)]
pub(crate) enum Projection {
    Direct(DenseMatrix),
    Lazy {
        z: DenseMatrix,
        p: DenseMatrix,
        y_cols: DenseMatrix,
        y_diag: DenseMatrix,
    },
}

#[derive(Debug, Clone)]
struct Pending {
    x: DenseMatrix,
    projection: Projection,
    gram: Option<DenseMatrix>,
}

#[derive(Debug, Clone)]
pub(crate) struct LowSyncEngine {
    q: DenseMatrix,
    r: DenseMatrix,
    block_ends: Vec<usize>,
    first_pass: FirstPass,
    switch_rule: Option<SwitchRule>,
    switch_block: Option<usize>,
    pending: Option<Pending>,
    last_step_intraortho: bool,
}

impl LowSyncEngine {
    /// Start from a finished first block `Q_1, R_11` and the second block
    /// `x2` with its known coefficients `s12 = Q_1^T X_2`. `gram` must hold
    /// `X_2^T X_2` when the first pass is Pythagorean.
    pub fn start(
        q1: DenseMatrix,
        r11: DenseMatrix,
        x2: DenseMatrix,
        s12: DenseMatrix,
        gram: Option<DenseMatrix>,
        first_pass: FirstPass,
        switch_rule: Option<SwitchRule>,
    ) -> Result<Self> {
        let w1 = q1.ncols();
        if r11.shape() != (w1, w1) || x2.nrows() != q1.nrows() || s12.shape() != (w1, x2.ncols())
        {
            return dim_err("inconsistent first block passed to the low-sync loop");
        }
        if first_pass == FirstPass::Pythagorean && gram.is_none() {
            return dim_err("Pythagorean first pass needs X^T X of the second block");
        }
        Ok(Self {
            q: q1,
            r: r11,
            block_ends: vec![w1],
            first_pass,
            switch_rule,
            switch_block: None,
            pending: Some(Pending {
                x: x2,
                projection: Projection::Direct(s12),
                gram,
            }),
            last_step_intraortho: false,
        })
    }

    pub fn block_ends(&self) -> &[usize] {
        &self.block_ends
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn switch_block(&self) -> Option<usize> {
        self.switch_block
    }

    /// Whether the most recent block used `io_1` for its first pass.
    pub fn last_step_intraortho(&self) -> bool {
        self.last_step_intraortho
    }

    pub fn factorization(&self) -> QrFactorization {
        QrFactorization {
            q: self.q.clone(),
            r: self.r.clone(),
        }
    }

    fn first_normalization(
        &mut self,
        block: usize,
        v: &DenseMatrix,
        s: &DenseMatrix,
        gram: Option<&DenseMatrix>,
        ledger: &mut SyncLedger,
    ) -> Result<(DenseMatrix, DenseMatrix)> {
        match self.first_pass {
            FirstPass::Intraortho(io) => io_checked(io, v, ledger),
            FirstPass::Pythagorean => {
                let gram = gram.ok_or_else(|| {
                    Error::Dimension("missing X^T X for the Pythagorean step".into())
                })?;
                match pythagorean_chol_step(v, gram, s) {
                    Ok(pair) => Ok(pair),
                    Err(Error::NotPositiveDefinite { .. }) if self.switch_rule.is_some() => {
                        // The Gram estimate is already indefinite: switch on this block.
                        let rule = self.switch_rule.unwrap();
                        self.first_pass = FirstPass::Intraortho(rule.io_1);
                        self.switch_block = Some(block);
                        self.last_step_intraortho = true;
                        io_checked(rule.io_1, v, ledger)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Finish the pending block. `next_block` receives the first-pass `U`
    /// and returns the block after it, or `None` when this is the last one.
    pub fn advance<F>(&mut self, ledger: &mut SyncLedger, next_block: F) -> Result<()>
    where
        F: FnOnce(&DenseMatrix) -> Option<DenseMatrix>,
    {
        let Pending {
            x,
            projection,
            gram,
        } = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidArgument("no pending block".into()))?;
        let block = self.block_ends.len() + 1;

        let s = match projection {
            Projection::Direct(s) => s,
            Projection::Lazy {
                z,
                p,
                y_cols,
                y_diag,
            } => lazy_s_column(&z, &p, &y_cols, &y_diag)?,
        };
        let v = &x - &self.q * &s;
        self.last_step_intraortho = matches!(self.first_pass, FirstPass::Intraortho(_));

        let (u, s_diag) = self.first_normalization(block, &v, &s, gram.as_ref(), ledger)?;
        let x_next = next_block(&u);
        let want_gram = self.first_pass == FirstPass::Pythagorean;

        let mut left: Vec<&DenseMatrix> = vec![&self.q, &u];
        let mut right: Vec<&DenseMatrix> = vec![&u];
        if let Some(xn) = &x_next {
            right.push(xn);
            if want_gram {
                left.push(xn);
            }
        }
        let mut grid = fused_block_product(&left, &right, ledger)?;
        let next_gram = if want_gram && x_next.is_some() {
            Some(grid[2].swap_remove(1))
        } else {
            None
        };
        let (z, p) = if x_next.is_some() {
            (grid[0].swap_remove(1), grid[1].swap_remove(1))
        } else {
            (DenseMatrix::zeros(0, 0), DenseMatrix::zeros(0, 0))
        };
        let omega = grid[1].swap_remove(0);
        let y_cols = grid[0].swap_remove(0);

        if let Some(rule) = self.switch_rule {
            if self.switch_block.is_none() && switch_check(&omega, rule.switch_const) {
                self.first_pass = FirstPass::Intraortho(rule.io_1);
                self.switch_block = Some(block);
            }
        }

        let y_diag = cholesky_upper(&(&omega - y_cols.tr_mul(&y_cols)))?;
        let q_new = tri_solve(&y_diag, &(&u - &self.q * &y_cols), SolveSide::Right)?;
        let r_cols = &s + &y_cols * &s_diag;
        let r_diag = &y_diag * &s_diag;
        self.append(&q_new, &r_cols, &r_diag);

        self.pending = x_next.map(|x| Pending {
            x,
            projection: Projection::Lazy {
                z,
                p,
                y_cols,
                y_diag,
            },
            gram: next_gram,
        });
        Ok(())
    }

    fn append(&mut self, q_new: &DenseMatrix, r_cols: &DenseMatrix, r_diag: &DenseMatrix) {
        let (m, n) = self.q.shape();
        let w = q_new.ncols();
        let q = std::mem::replace(&mut self.q, DenseMatrix::zeros(0, 0));
        self.q = q.resize(m, n + w, 0.0);
        self.q.columns_mut(n, w).copy_from(q_new);
        let r = std::mem::replace(&mut self.r, DenseMatrix::zeros(0, 0));
        self.r = r.resize(n + w, n + w, 0.0);
        self.r.view_mut((0, n), (n, w)).copy_from(r_cols);
        self.r.view_mut((n, n), (w, w)).copy_from(r_diag);
        self.block_ends.push(n + w);
    }
}

/// Apply an intraorthogonalization and turn a rank-deficient result into a
/// Cholesky-style breakdown.
pub(crate) fn io_checked(
    io: IntraorthoKind,
    x: &DenseMatrix,
    ledger: &mut SyncLedger,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let f = io.apply(x, ledger)?;
    if !f.r.iter().chain(f.q.iter()).all(|v| v.is_finite()) {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }
    if let Some(pivot) = f.deficient_pivot(x.norm()) {
        return Err(Error::NotPositiveDefinite { pivot });
    }
    Ok((f.q, f.r))
}
