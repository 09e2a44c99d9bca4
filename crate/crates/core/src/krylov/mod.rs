//! s-step Arnoldi and GMRES on top of the low-synchronization BCGS schemes.

pub mod basis;
pub mod givens;
pub mod gmres;
pub mod operator;

pub use basis::{generate_panel, leja_order, BasisKind, BasisPolicy, ColumnScaling, Panel};
pub use givens::{Givens, GivensLeastSquares};
pub use gmres::{
    gmres_backward_error, sstep_gmres, sstep_gmres_preconditioned, GmresOptions, GmresOutcome,
    GmresState, GmresStatus, HistoryEntry, StepKind, DEFAULT_TOL, SETUP_PHASE,
};
pub use operator::{CsrMatrix, DenseOperator, IdentityOperator, LinearOperator};
