use crate::dense::{
    cholesky_upper, hcat, tri_solve, BlockPartition, DenseMatrix, QrFactorization, SolveSide,
};
use crate::error::Error;
use crate::intraortho::{pythagorean_chol_step, IntraorthoKind};
use crate::sync::{fused_block_product, SyncLedger};

use super::engine::{io_checked, FirstPass, LowSyncEngine, SwitchRule};
use super::{lazy_s_column, BcgsFailure, BcgsReport, BcgsResult, OrthoVariant};

/// Accumulates finished blocks for the drivers that do not use the engine.
struct Factors {
    q: DenseMatrix,
    r: DenseMatrix,
    block_ends: Vec<usize>,
}

impl Factors {
    fn new(m: usize) -> Self {
        Self {
            q: DenseMatrix::zeros(m, 0),
            r: DenseMatrix::zeros(0, 0),
            block_ends: Vec::new(),
        }
    }

    fn push(&mut self, q_new: &DenseMatrix, r_cols: &DenseMatrix, r_diag: &DenseMatrix) {
        let (m, n) = self.q.shape();
        let w = q_new.ncols();
        let q = std::mem::replace(&mut self.q, DenseMatrix::zeros(0, 0));
        self.q = q.resize(m, n + w, 0.0);
        self.q.columns_mut(n, w).copy_from(q_new);
        let r = std::mem::replace(&mut self.r, DenseMatrix::zeros(0, 0));
        self.r = r.resize(n + w, n + w, 0.0);
        if n > 0 {
            self.r.view_mut((0, n), (n, w)).copy_from(r_cols);
        }
        self.r.view_mut((n, n), (w, w)).copy_from(r_diag);
        self.block_ends.push(n + w);
    }

    fn report(self, ledger: SyncLedger, switch_block: Option<usize>) -> BcgsReport {
        BcgsReport::new(
            QrFactorization {
                q: self.q,
                r: self.r,
            },
            ledger,
            switch_block,
            &self.block_ends,
        )
    }

    fn fail(self, error: Error, ledger: SyncLedger, failed_block: usize) -> Box<BcgsFailure> {
        Box::new(BcgsFailure {
            error,
            partial: self.report(ledger, None),
            failed_block,
        })
    }
}

fn precheck(x: &DenseMatrix, part: &BlockPartition, variant: &OrthoVariant) -> Result<(), Box<BcgsFailure>> {
    if let Err(error) = part.check(x).and_then(|_| variant.validate()) {
        return Err(Factors::new(x.nrows()).fail(error, SyncLedger::new(), 1));
    }
    Ok(())
}

fn engine_failure(
    engine: &LowSyncEngine,
    error: Error,
    ledger: SyncLedger,
    failed_block: usize,
) -> Box<BcgsFailure> {
    Box::new(BcgsFailure {
        error,
        partial: BcgsReport::new(
            engine.factorization(),
            ledger,
            engine.switch_block(),
            engine.block_ends(),
        ),
        failed_block,
    })
}

/// Shared front half of the one-sync, two-sync and adaptive drivers.
fn run_low_sync(
    x: &DenseMatrix,
    part: &BlockPartition,
    io_a: IntraorthoKind,
    first_pass: FirstPass,
    switch_rule: Option<SwitchRule>,
) -> BcgsResult {
    let mut ledger = SyncLedger::new();
    let mut factors = Factors::new(x.nrows());
    let (q1, r11) = match io_checked(io_a, &part.block(x, 0), &mut ledger) {
        Ok(pair) => pair,
        Err(e) => return Err(factors.fail(e, ledger, 1)),
    };
    if part.p == 1 {
        factors.push(&q1, &DenseMatrix::zeros(0, 0), &r11);
        return Ok(factors.report(ledger, None));
    }

    let x2 = part.block(x, 1);
    let (s12, gram) = if first_pass == FirstPass::Pythagorean {
        let mut g = fused_block_product(&[&q1, &x2], &[&x2], &mut ledger)
            .expect("panel shapes checked by the partition");
        let t2 = g[1].swap_remove(0);
        (g[0].swap_remove(0), Some(t2))
    } else {
        let mut g = fused_block_product(&[&q1], &[&x2], &mut ledger)
            .expect("panel shapes checked by the partition");
        (g[0].swap_remove(0), None)
    };
    let mut engine = LowSyncEngine::start(q1, r11, x2, s12, gram, first_pass, switch_rule)
        .expect("first block shapes are consistent");

    for k in 1..part.p {
        let next = (k + 1 < part.p).then(|| part.block(x, k + 1));
        if let Err(e) = engine.advance(&mut ledger, |_| next) {
            return Err(engine_failure(&engine, e, ledger, k + 1));
        }
    }
    let switch_block = engine.switch_block();
    let block_ends = engine.block_ends().to_vec();
    Ok(BcgsReport::new(
        engine.factorization(),
        ledger,
        switch_block,
        &block_ends,
    ))
}

/// Two-sync Pythagorean reorthogonalized BCGS.
///
/// Per block: `[Q X]^T X` gives `S` and `T`, the Pythagorean Cholesky step
/// gives `U`, then `[Q U]^T U` drives the second pass.
pub fn bcgs_pip_iro(x: &DenseMatrix, part: &BlockPartition, io_a: IntraorthoKind) -> BcgsResult {
    precheck(x, part, &OrthoVariant::PipIro { io_a })?;
    let mut ledger = SyncLedger::new();
    let mut factors = Factors::new(x.nrows());
    match io_checked(io_a, &part.block(x, 0), &mut ledger) {
        Ok((q1, r11)) => factors.push(&q1, &DenseMatrix::zeros(0, 0), &r11),
        Err(e) => return Err(factors.fail(e, ledger, 1)),
    }

    for k in 1..part.p {
        let xk = part.block(x, k);
        let step = (|| {
            let mut g = fused_block_product(&[&factors.q, &xk], &[&xk], &mut ledger)?;
            let t = g[1].swap_remove(0);
            let s = g[0].swap_remove(0);
            let v = &xk - &factors.q * &s;
            let (u, s_diag) = pythagorean_chol_step(&v, &t, &s)?;
            let mut g = fused_block_product(&[&factors.q, &u], &[&u], &mut ledger)?;
            let omega = g[1].swap_remove(0);
            let y_cols = g[0].swap_remove(0);
            let y_diag = cholesky_upper(&(&omega - y_cols.tr_mul(&y_cols)))?;
            let q_new = tri_solve(&y_diag, &(&u - &factors.q * &y_cols), SolveSide::Right)?;
            Ok::<_, Error>((q_new, &s + &y_cols * &s_diag, &y_diag * &s_diag))
        })();
        match step {
            Ok((q_new, r_cols, r_diag)) => factors.push(&q_new, &r_cols, &r_diag),
            Err(e) => return Err(factors.fail(e, ledger, k + 1)),
        }
    }
    Ok(factors.report(ledger, None))
}

/// One-sync reorthogonalized BCGS with Pythagorean first pass.
pub fn bcgs_i_p_1s(x: &DenseMatrix, part: &BlockPartition, io_a: IntraorthoKind) -> BcgsResult {
    precheck(x, part, &OrthoVariant::OneSync { io_a })?;
    run_low_sync(x, part, io_a, FirstPass::Pythagorean, None)
}

/// Two-sync reorthogonalized BCGS with `io_1` as first pass.
pub fn bcgs_i_p_2s(
    x: &DenseMatrix,
    part: &BlockPartition,
    io_a: IntraorthoKind,
    io_1: IntraorthoKind,
) -> BcgsResult {
    precheck(x, part, &OrthoVariant::TwoSync { io_a, io_1 })?;
    run_low_sync(x, part, io_a, FirstPass::Intraortho(io_1), None)
}

/// One-sync loop that hands over to the two-sync loop once the switching
/// test fires on some `Omega`.
pub fn bcgs_adaptive(
    x: &DenseMatrix,
    part: &BlockPartition,
    io_a: IntraorthoKind,
    io_1: IntraorthoKind,
    switch_const: f64,
) -> BcgsResult {
    precheck(
        x,
        part,
        &OrthoVariant::Adaptive {
            io_a,
            io_1,
            switch_const,
        },
    )?;
    run_low_sync(
        x,
        part,
        io_a,
        FirstPass::Pythagorean,
        Some(SwitchRule { io_1, switch_const }),
    )
}

/// Classic BCGS2: project, `io_1`, project again, `io_2`.
pub fn bcgs_iro(
    x: &DenseMatrix,
    part: &BlockPartition,
    io_1: IntraorthoKind,
    io_2: IntraorthoKind,
) -> BcgsResult {
    precheck(x, part, &OrthoVariant::Bcgs2 { io_1, io_2 })?;
    let mut ledger = SyncLedger::new();
    let mut factors = Factors::new(x.nrows());
    match io_checked(io_2, &part.block(x, 0), &mut ledger) {
        Ok((q1, r11)) => factors.push(&q1, &DenseMatrix::zeros(0, 0), &r11),
        Err(e) => return Err(factors.fail(e, ledger, 1)),
    }
    for k in 1..part.p {
        let xk = part.block(x, k);
        let step = bcgs2_step(&factors.q, &xk, io_1, io_2, &mut ledger);
        match step {
            Ok((q_new, r_cols, r_diag)) => factors.push(&q_new, &r_cols, &r_diag),
            Err(e) => return Err(factors.fail(e, ledger, k + 1)),
        }
    }
    Ok(factors.report(ledger, None))
}

/// One BCGS2 block step against the orthonormal `q`: four syncs with
/// single-sync routines. Returns the new block and its `R` columns.
pub(crate) fn bcgs2_step(
    q: &DenseMatrix,
    xk: &DenseMatrix,
    io_1: IntraorthoKind,
    io_2: IntraorthoKind,
    ledger: &mut SyncLedger,
) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix), Error> {
    let s1 = fused_block_product(&[q], &[xk], ledger)?.remove(0).remove(0);
    let (u, s_diag) = io_checked(io_1, &(xk - q * &s1), ledger)?;
    let s2 = fused_block_product(&[q], &[&u], ledger)?.remove(0).remove(0);
    let (q_new, y_diag) = io_checked(io_2, &(&u - q * &s2), ledger)?;
    Ok((q_new, &s1 + &s2 * &s_diag, &y_diag * &s_diag))
}

/// Earlier one-sync scheme: the first intraorthogonalization is dropped and
/// the second one is delayed into the fused reduction.
///
/// The first two blocks are factored together by `io_a`; afterwards each
/// block is projected with lazily recovered coefficients and normalized
/// once by a Cholesky QR of the fused Gram data.
pub fn bcgs_iro_a_1s(x: &DenseMatrix, part: &BlockPartition, io_a: IntraorthoKind) -> BcgsResult {
    precheck(x, part, &OrthoVariant::A1s { io_a })?;
    let mut ledger = SyncLedger::new();
    let mut factors = Factors::new(x.nrows());
    let x1 = part.block(x, 0);
    let w1 = x1.ncols();
    if part.p == 1 {
        return match io_checked(io_a, &x1, &mut ledger) {
            Ok((q1, r11)) => {
                factors.push(&q1, &DenseMatrix::zeros(0, 0), &r11);
                Ok(factors.report(ledger, None))
            }
            Err(e) => Err(factors.fail(e, ledger, 1)),
        };
    }

    let x2 = part.block(x, 1);
    let (q12, r12) = match io_checked(io_a, &hcat(&x1, &x2), &mut ledger) {
        Ok(pair) => pair,
        Err(e) => return Err(factors.fail(e, ledger, 1)),
    };
    let q1 = q12.columns(0, w1).clone_owned();
    factors.push(
        &q1,
        &DenseMatrix::zeros(0, 0),
        &r12.view((0, 0), (w1, w1)).clone_owned(),
    );
    let mut s = r12.view((0, w1), (w1, x2.ncols())).clone_owned();
    let mut u = &x2 - &q1 * &s;

    for k in 1..part.p {
        let next = (k + 1 < part.p).then(|| part.block(x, k + 1));
        let step = (|| {
            let mut right: Vec<&DenseMatrix> = vec![&u];
            if let Some(xn) = &next {
                right.push(xn);
            }
            let mut g = fused_block_product(&[&factors.q, &u], &right, &mut ledger)?;
            let zp = next
                .as_ref()
                .map(|_| (g[0].swap_remove(1), g[1].swap_remove(1)));
            let omega = g[1].swap_remove(0);
            let y_cols = g[0].swap_remove(0);
            let y_diag = cholesky_upper(&(&omega - y_cols.tr_mul(&y_cols)))?;
            let q_new = tri_solve(&y_diag, &(&u - &factors.q * &y_cols), SolveSide::Right)?;
            Ok::<_, Error>((q_new, y_cols, y_diag, zp))
        })();
        let (q_new, y_cols, y_diag, zp) = match step {
            Ok(v) => v,
            Err(e) => return Err(factors.fail(e, ledger, k + 1)),
        };
        factors.push(&q_new, &(&s + &y_cols), &y_diag);
        if let (Some(xn), Some((z, p))) = (next, zp) {
            s = match lazy_s_column(&z, &p, &y_cols, &y_diag) {
                Ok(s) => s,
                Err(e) => return Err(factors.fail(e, ledger, k + 2)),
            };
            u = &xn - &factors.q * &s;
        }
    }
    Ok(factors.report(ledger, None))
}
