//! Test matrices, Matrix Market I/O and κ sweeps.

pub mod generators;
pub mod matrix_market;
pub mod sweep;

pub use generators::{
    gen_default, gen_glued, gen_monomial, gen_nonsymmetric, gen_piled, MatrixClass,
    MatrixClassParams,
};
pub use matrix_market::{
    parse_matrix_market, read_matrix_market, write_matrix_market_array,
    write_matrix_market_coordinate, MatrixMarket, MmFormat, MmSymmetry,
};
pub use sweep::{kappa_sweep, log_grid, SweepResult, SweepRow, SWEEP_COLUMNS};
