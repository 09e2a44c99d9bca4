//! Low-synchronization reorthogonalized block Gram-Schmidt.
//!
//! The crate provides block QR drivers built from block classical
//! Gram-Schmidt with reorthogonalization, an instrumented count of the
//! global reductions each one needs, an s-step GMRES solver that uses them
//! for its Arnoldi process, and generators for test matrices.

pub mod bcgs;
pub mod dense;
pub mod error;
pub mod intraortho;
pub mod krylov;
pub mod sync;
pub mod testbed;

pub use bcgs::{
    bcgs_adaptive, bcgs_i_p_1s, bcgs_i_p_2s, bcgs_iro, bcgs_iro_a_1s, bcgs_pip_iro,
    lazy_s_column, switch_check, BcgsFailure, BcgsReport, BcgsResult, OrthoVariant, VariantTag,
    DEFAULT_SWITCH_CONST,
};
pub use dense::{
    cholesky_upper, cond2, loss_of_orthogonality, relative_residual, tri_solve, BlockPartition,
    DenseMatrix, QrFactorization, SolveSide, UNIT_ROUNDOFF,
};
pub use error::{Error, Result};
pub use intraortho::{chol_qr, house_qr, mgs, pythagorean_chol_step, tsqr, IntraorthoKind};
pub use sync::{fused_block_product, SyncLedger};
