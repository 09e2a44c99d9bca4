use std::fmt;

use nalgebra::DVector;

use crate::bcgs::drivers::bcgs2_step;
use crate::bcgs::engine::{FirstPass, LowSyncEngine, SwitchRule};
use crate::bcgs::{OrthoVariant, VariantTag};
use crate::dense::{hcat, DenseMatrix};
use crate::error::{Error, Result};
use crate::intraortho::IntraorthoKind;
use crate::sync::{fused_block_product, SyncLedger};

use super::basis::{generate_panel, BasisPolicy, Panel};
use super::givens::GivensLeastSquares;
use super::operator::{IdentityOperator, LinearOperator};

/// Ledger phase holding the reductions spent on the first column.
pub const SETUP_PHASE: &str = "setup";

/// Default stopping tolerance on the relative backward error.
pub const DEFAULT_TOL: f64 = 1e-12;

/// `||b - A x|| / (||A||_F ||x|| + ||b||)`.
pub fn gmres_backward_error(a: &dyn LinearOperator, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let res = (b - a.apply(x)).norm();
    let denom = a.frobenius_norm() * x.norm() + b.norm();
    if denom == 0.0 {
        return if res == 0.0 { 0.0 } else { f64::INFINITY };
    }
    res / denom
}

#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub s: usize,
    /// One of `IP_1S`, `IP_2S`, `ADAPTIVE` or `BCGS2`.
    pub variant: OrthoVariant,
    pub tol: f64,
    /// Cap on single-vector iterations; defaults to the Krylov dimension limit.
    pub max_iterations: Option<usize>,
    pub basis: BasisPolicy,
}

impl GmresOptions {
    pub fn new(s: usize, variant: OrthoVariant) -> Self {
        Self {
            s,
            variant,
            tol: DEFAULT_TOL,
            max_iterations: None,
            basis: BasisPolicy::default(),
        }
    }
}

/// Which first-pass normalization a block step used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    OneSync,
    TwoSync,
    Bcgs2,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OneSync => "1S",
            Self::TwoSync => "2S",
            Self::Bcgs2 => "BCGS2",
        })
    }
}

/// Convergence record of one block step.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    /// Single-vector iteration count `k s`.
    pub iteration: usize,
    pub block: usize,
    pub backward_error: f64,
    /// `|g_last|` from the Givens least-squares problem.
    pub ls_residual: f64,
    /// Synchronizations so far, first-column setup excluded.
    pub syncs: u64,
    pub step: StepKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GmresStatus {
    Converged,
    /// The orthogonalization broke down; the best iterate so far is returned.
    Halted { reason: String },
    MaxIterations,
}

impl GmresStatus {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Halted { .. } => "halted",
            Self::MaxIterations => "max_iterations",
        }
    }
}

/// Everything the solver accumulated.
#[derive(Debug, Clone)]
pub struct GmresState {
    /// Krylov basis `B`, `k s` columns.
    pub basis: DenseMatrix,
    /// Preconditioned basis `Z = M_R^{-1} B`.
    pub zprec: DenseMatrix,
    /// Orthonormal basis, `k s + 1` columns.
    pub q: DenseMatrix,
    /// Upper triangular factor of `[r, W]`.
    pub r: DenseMatrix,
    pub givens: GivensLeastSquares,
    pub beta: f64,
    pub history: Vec<HistoryEntry>,
    pub ledger: SyncLedger,
    /// Block step whose Gram block triggered the switch (adaptive only).
    pub switch_step: Option<usize>,
}

impl GmresState {
    pub fn block_steps(&self) -> usize {
        self.history.len()
    }

    /// Synchronizations with the first-column setup excluded.
    pub fn syncs(&self) -> u64 {
        self.ledger.total_excluding(SETUP_PHASE)
    }

    /// Iterations done with the one-sync and the two-sync first pass.
    pub fn phase_iterations(&self, s: usize) -> (usize, usize) {
        let ones = self.history.iter().filter(|h| h.step == StepKind::OneSync).count();
        (ones * s, (self.history.len() - ones) * s)
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: DVector<f64>,
    pub backward_error: f64,
    pub status: GmresStatus,
    pub state: GmresState,
}

impl GmresOutcome {
    pub fn iterations(&self) -> usize {
        self.state.history.last().map_or(0, |h| h.iteration)
    }
}

enum Orthogonalizer {
    LowSync(Box<LowSyncEngine>),
    Bcgs2 {
        io_1: IntraorthoKind,
        io_2: IntraorthoKind,
        q: DenseMatrix,
        r: DenseMatrix,
    },
}

/// s-step GMRES without preconditioning.
pub fn sstep_gmres(
    a: &dyn LinearOperator,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let id = IdentityOperator::new(a.dim());
    sstep_gmres_preconditioned(a, b, x0, opts, &id, &id)
}

/// s-step GMRES with left and right preconditioners given as `M^{-1}`.
///
/// Each block step generates `s` basis vectors from the last column of the
/// first-pass block, orthogonalizes them with the chosen scheme, updates the
/// Givens factorization and evaluates the backward error of the explicitly
/// formed iterate `x0 + Z y`.
pub fn sstep_gmres_preconditioned(
    a: &dyn LinearOperator,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    opts: &GmresOptions,
    left: &dyn LinearOperator,
    right: &dyn LinearOperator,
) -> Result<GmresOutcome> {
    let m = a.dim();
    let s = opts.s;
    if b.len() != m || x0.len() != m || left.dim() != m || right.dim() != m {
        return Err(Error::Dimension(format!(
            "system of dimension {m} with b {}, x0 {}",
            b.len(),
            x0.len()
        )));
    }
    if s == 0 || s >= m {
        return Err(Error::InvalidArgument(format!("block width {s} for dimension {m}")));
    }
    opts.variant.validate()?;
    opts.basis.validate(s)?;
    let tag = opts.variant.tag();
    if matches!(tag, VariantTag::PipIro | VariantTag::A1s) {
        return Err(Error::InvalidArgument(format!("{tag} is not available inside GMRES")));
    }
    let max_steps = {
        let dim_cap = (m - 1) / s;
        let user = opts.max_iterations.map_or(dim_cap, |it| it / s);
        user.min(dim_cap)
    };

    let mut ledger = SyncLedger::new();
    ledger.set_phase(SETUP_PHASE);
    let r0 = left.apply(&(b - a.apply(x0)));
    let r0m = DenseMatrix::from_column_slice(m, 1, r0.as_slice());

    let be0 = gmres_backward_error(a, b, x0);
    let empty_state = |ledger: SyncLedger, beta: f64| GmresState {
        basis: DenseMatrix::zeros(m, 0),
        zprec: DenseMatrix::zeros(m, 0),
        q: DenseMatrix::zeros(m, 0),
        r: DenseMatrix::zeros(0, 0),
        givens: GivensLeastSquares::new(beta),
        beta,
        history: Vec::new(),
        ledger,
        switch_step: None,
    };
    if be0 <= opts.tol || max_steps == 0 {
        ledger.charge(1);
        let beta = r0.norm();
        let status = if be0 <= opts.tol {
            GmresStatus::Converged
        } else {
            GmresStatus::MaxIterations
        };
        return Ok(GmresOutcome {
            x: x0.clone(),
            backward_error: be0,
            status,
            state: empty_state(ledger, beta),
        });
    }

    // The first panel is generated from r itself; with unit column scaling
    // its norm is not needed before the basis exists.
    let first = match generate_panel(a, left, right, &r0, s, &opts.basis) {
        Ok(p) => p,
        Err(e) => {
            ledger.charge(1);
            let beta = r0.norm();
            return Ok(GmresOutcome {
                x: x0.clone(),
                backward_error: be0,
                status: GmresStatus::Halted {
                    reason: e.to_string(),
                },
                state: empty_state(ledger, beta),
            });
        }
    };

    let one_sync_start = matches!(tag, VariantTag::OneSync | VariantTag::Adaptive);
    let mut rows: Vec<&DenseMatrix> = vec![&r0m];
    if one_sync_start {
        rows.push(&first.x);
    }
    let mut grid = fused_block_product(&rows, &[&r0m, &first.x], &mut ledger)?;
    let beta = grid[0][0][(0, 0)].max(0.0).sqrt();
    let s12 = grid[0].swap_remove(1) / beta;
    let gram = one_sync_start.then(|| grid[1].swap_remove(1));
    let q1 = r0m / beta;
    let r11 = DenseMatrix::from_element(1, 1, beta);
    ledger.set_phase("iterate");

    let mut orth = match opts.variant {
        OrthoVariant::OneSync { .. } => Orthogonalizer::LowSync(Box::new(LowSyncEngine::start(
            q1,
            r11,
            first.x.clone(),
            s12,
            gram,
            FirstPass::Pythagorean,
            None,
        )?)),
        OrthoVariant::TwoSync { io_1, .. } => Orthogonalizer::LowSync(Box::new(
            LowSyncEngine::start(q1, r11, first.x.clone(), s12, None, FirstPass::Intraortho(io_1), None)?,
        )),
        OrthoVariant::Adaptive {
            io_1, switch_const, ..
        } => Orthogonalizer::LowSync(Box::new(LowSyncEngine::start(
            q1,
            r11,
            first.x.clone(),
            s12,
            gram,
            FirstPass::Pythagorean,
            Some(SwitchRule { io_1, switch_const }),
        )?)),
        OrthoVariant::Bcgs2 { io_1, io_2 } => Orthogonalizer::Bcgs2 { io_1, io_2, q: q1, r: r11 },
        _ => unreachable!("rejected above"),
    };

    let mut state = empty_state(ledger, beta);
    let mut pending_panel: Option<Panel> = Some(first);
    let mut best = (x0.clone(), be0);
    let mut status = GmresStatus::MaxIterations;

    for step in 1..=max_steps {
        let panel = pending_panel.take().expect("a panel is queued for every step");
        let want_next = step < max_steps;
        let mut gen_error: Option<Error> = None;
        let mut next_panel: Option<Panel> = None;
        let (step_kind, advanced) = match &mut orth {
            Orthogonalizer::LowSync(engine) => {
                let res = engine.advance(&mut state.ledger, |u| {
                    if !want_next {
                        return None;
                    }
                    let seed = DVector::from_column_slice(u.column(u.ncols() - 1).as_slice());
                    match generate_panel(a, left, right, &seed, s, &opts.basis) {
                        Ok(p) => {
                            let x = p.x.clone();
                            next_panel = Some(p);
                            Some(x)
                        }
                        Err(e) => {
                            gen_error = Some(e);
                            None
                        }
                    }
                });
                let kind = if engine.last_step_intraortho() {
                    StepKind::TwoSync
                } else {
                    StepKind::OneSync
                };
                (kind, res)
            }
            Orthogonalizer::Bcgs2 { io_1, io_2, q, r } => {
                let res = bcgs2_step(q, &panel.x, *io_1, *io_2, &mut state.ledger).map(
                    |(q_new, r_cols, r_diag)| {
                        let n = q.ncols();
                        let w = q_new.ncols();
                        *q = hcat(q, &q_new);
                        let old = std::mem::replace(r, DenseMatrix::zeros(0, 0));
                        *r = old.resize(n + w, n + w, 0.0);
                        r.view_mut((0, n), (n, w)).copy_from(&r_cols);
                        r.view_mut((n, n), (w, w)).copy_from(&r_diag);
                    },
                );
                if res.is_ok() && want_next {
                    let seed = DVector::from_column_slice(q.column(q.ncols() - 1).as_slice());
                    match generate_panel(a, left, right, &seed, s, &opts.basis) {
                        Ok(p) => next_panel = Some(p),
                        Err(e) => gen_error = Some(e),
                    }
                }
                (StepKind::Bcgs2, res)
            }
        };

        if let Err(e) = advanced {
            if let Some(x) = lucky_solution(&orth, &state, &panel, x0) {
                let be = gmres_backward_error(a, b, &x);
                state.history.push(HistoryEntry {
                    iteration: step * s,
                    block: step,
                    backward_error: be,
                    ls_residual: f64::NAN,
                    syncs: state.ledger.total_excluding(SETUP_PHASE),
                    step: step_kind,
                });
                if be < best.1 {
                    best = (x, be);
                }
            }
            status = if best.1 <= opts.tol {
                GmresStatus::Converged
            } else {
                GmresStatus::Halted {
                    reason: format!("block step {step}: {e}"),
                }
            };
            break;
        }

        state.basis = hcat(&state.basis, &panel.b);
        state.zprec = hcat(&state.zprec, &panel.z);
        let r = match &orth {
            Orthogonalizer::LowSync(engine) => engine.r(),
            Orthogonalizer::Bcgs2 { r, .. } => r,
        };
        let n = 1 + step * s;
        let h_new = r.view((0, 1 + (step - 1) * s), (n, s)).clone_owned();
        state.givens.update(&h_new);
        if let Orthogonalizer::LowSync(engine) = &orth {
            if state.switch_step.is_none() {
                state.switch_step = engine.switch_block().map(|d| d - 1);
            }
        }

        let y = state.givens.solve();
        let (x, be) = match y {
            Ok(y) => {
                let x = x0 + &state.zprec * y;
                let be = gmres_backward_error(a, b, &x);
                (x, be)
            }
            Err(_) => (x0.clone(), f64::NAN),
        };
        state.history.push(HistoryEntry {
            iteration: step * s,
            block: step,
            backward_error: be,
            ls_residual: state.givens.residual(),
            syncs: state.ledger.total_excluding(SETUP_PHASE),
            step: step_kind,
        });
        let finite = be.is_finite() && x.iter().all(|v| v.is_finite());
        if finite && be < best.1 {
            best = (x, be);
        }
        if finite && be <= opts.tol {
            status = GmresStatus::Converged;
            break;
        }
        if !finite {
            status = GmresStatus::Halted {
                reason: format!("block step {step}: non-finite iterate"),
            };
            break;
        }
        if let Some(e) = gen_error {
            status = GmresStatus::Halted {
                reason: format!("block step {step}: {e}"),
            };
            break;
        }
        pending_panel = next_panel;
        if pending_panel.is_none() {
            status = GmresStatus::MaxIterations;
            break;
        }
    }

    match &orth {
        Orthogonalizer::LowSync(engine) => {
            state.q = engine.q().clone();
            state.r = engine.r().clone();
        }
        Orthogonalizer::Bcgs2 { q, r, .. } => {
            state.q = q.clone();
            state.r = r.clone();
        }
    }
    Ok(GmresOutcome {
        x: best.0,
        backward_error: best.1,
        status,
        state,
    })
}

/// When the block that failed to orthogonalize lies in the span of the
/// current basis, the Krylov space is invariant and the least-squares
/// problem with the projection coefficients as extra columns is exact.
/// The extra projection here is a local diagnostic and is not charged.
fn lucky_solution(
    orth: &Orthogonalizer,
    state: &GmresState,
    panel: &Panel,
    x0: &DVector<f64>,
) -> Option<DVector<f64>> {
    let (q, r) = match orth {
        Orthogonalizer::LowSync(engine) => (engine.q(), engine.r()),
        Orthogonalizer::Bcgs2 { q, r, .. } => (q, r),
    };
    let s_new = q.tr_mul(&panel.x);
    let residual = (&panel.x - q * &s_new).norm();
    if !(residual <= 1e-12 * panel.x.norm()) {
        return None;
    }
    let n = q.ncols();
    let h_prev = r.view((0, 1), (n, n - 1)).clone_owned();
    let h = hcat(&h_prev, &s_new);
    let mut rhs = DenseMatrix::zeros(n, 1);
    rhs[(0, 0)] = state.beta;
    let svd = h.svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    let y = svd.solve(&rhs, cutoff).ok()?;
    let z = hcat(&state.zprec, &panel.z);
    Some(x0 + z * y.column(0))
}
