//! Block classical Gram-Schmidt drivers.
//!
//! Six block orthogonalization schemes share the same conventions: the input
//! is split by a [`BlockPartition`], every global reduction is charged to a
//! ledger owned by the driver, and a breakdown mid-run returns the finished
//! prefix of the factorization together with the error.
//!
//! | tag       | syncs for `p` blocks |
//! |-----------|----------------------|
//! | `PIP_IRO` | `1 + 2(p-1)`         |
//! | `IP_1S`   | `p + 1`              |
//! | `IP_2S`   | `2p`                 |
//! | `ADAPTIVE`| between the two above|
//! | `BCGS2`   | `1 + 4(p-1)`         |
//! | `A_1S`    | `p`                  |

pub(crate) mod drivers;
pub(crate) mod engine;

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;

use crate::dense::{
    loss_of_orthogonality, tri_solve, vcat, BlockPartition, DenseMatrix, QrFactorization,
    SolveSide,
};
use crate::error::{Error, Result};
use crate::intraortho::IntraorthoKind;
use crate::sync::SyncLedger;

pub use drivers::{
    bcgs_adaptive, bcgs_i_p_1s, bcgs_i_p_2s, bcgs_iro, bcgs_iro_a_1s, bcgs_pip_iro,
};

/// Default constant of the switching test, `sqrt(3)`.
pub const DEFAULT_SWITCH_CONST: f64 = 1.732_050_807_568_877_2;

/// Short names of the six drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantTag {
    PipIro,
    OneSync,
    TwoSync,
    Adaptive,
    Bcgs2,
    A1s,
}

impl VariantTag {
    pub const ALL: [VariantTag; 6] = [
        Self::PipIro,
        Self::OneSync,
        Self::TwoSync,
        Self::Adaptive,
        Self::Bcgs2,
        Self::A1s,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PipIro => "PIP_IRO",
            Self::OneSync => "IP_1S",
            Self::TwoSync => "IP_2S",
            Self::Adaptive => "ADAPTIVE",
            Self::Bcgs2 => "BCGS2",
            Self::A1s => "A_1S",
        }
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant '{s}'")))
    }
}

/// A fully configured block orthogonalization scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrthoVariant {
    /// Two-sync Pythagorean reorthogonalized baseline.
    PipIro { io_a: IntraorthoKind },
    /// One sync per block column.
    OneSync { io_a: IntraorthoKind },
    /// Two syncs per block column with a stable `io_1`.
    TwoSync {
        io_a: IntraorthoKind,
        io_1: IntraorthoKind,
    },
    /// One-sync until the switching test fires, two-sync afterwards.
    Adaptive {
        io_a: IntraorthoKind,
        io_1: IntraorthoKind,
        switch_const: f64,
    },
    /// Classic reorthogonalized BCGS with two intraorthogonalizations.
    Bcgs2 {
        io_1: IntraorthoKind,
        io_2: IntraorthoKind,
    },
    /// Earlier one-sync scheme kept as an instability reference.
    A1s { io_a: IntraorthoKind },
}

impl OrthoVariant {
    /// Build a variant from its tag. `BCGS2` uses `io_1` for the first pass
    /// and `io_a` for the second.
    pub fn from_tag(
        tag: VariantTag,
        io_a: IntraorthoKind,
        io_1: IntraorthoKind,
        switch_const: f64,
    ) -> Self {
        match tag {
            VariantTag::PipIro => Self::PipIro { io_a },
            VariantTag::OneSync => Self::OneSync { io_a },
            VariantTag::TwoSync => Self::TwoSync { io_a, io_1 },
            VariantTag::Adaptive => Self::Adaptive {
                io_a,
                io_1,
                switch_const,
            },
            VariantTag::Bcgs2 => Self::Bcgs2 { io_1, io_2: io_a },
            VariantTag::A1s => Self::A1s { io_a },
        }
    }

    /// All variants with HouseQR everywhere and the default switch constant.
    pub fn default_for(tag: VariantTag) -> Self {
        Self::from_tag(
            tag,
            IntraorthoKind::HouseQr,
            IntraorthoKind::HouseQr,
            DEFAULT_SWITCH_CONST,
        )
    }

    pub fn tag(&self) -> VariantTag {
        match self {
            Self::PipIro { .. } => VariantTag::PipIro,
            Self::OneSync { .. } => VariantTag::OneSync,
            Self::TwoSync { .. } => VariantTag::TwoSync,
            Self::Adaptive { .. } => VariantTag::Adaptive,
            Self::Bcgs2 { .. } => VariantTag::Bcgs2,
            Self::A1s { .. } => VariantTag::A1s,
        }
    }

    /// The routine applied to the first block.
    pub fn io_a(&self) -> IntraorthoKind {
        match *self {
            Self::PipIro { io_a }
            | Self::OneSync { io_a }
            | Self::TwoSync { io_a, .. }
            | Self::Adaptive { io_a, .. }
            | Self::A1s { io_a } => io_a,
            Self::Bcgs2 { io_2, .. } => io_2,
        }
    }

    /// The per-block routine, when the variant has one.
    pub fn io_1(&self) -> Option<IntraorthoKind> {
        match *self {
            Self::TwoSync { io_1, .. } | Self::Adaptive { io_1, .. } | Self::Bcgs2 { io_1, .. } => {
                Some(io_1)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::TwoSync { io_1, .. } | Self::Adaptive { io_1, .. } if io_1.alpha1() > 1 => {
                Err(Error::InvalidArgument(format!(
                    "{} needs an io_1 with alpha1 <= 1, got {io_1}",
                    self.tag()
                )))
            }
            Self::Adaptive { switch_const, .. } if !(switch_const.is_finite() && switch_const > 0.0) => {
                Err(Error::InvalidArgument(format!(
                    "switch constant must be positive, got {switch_const}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Factor `x` block by block.
    pub fn run(&self, x: &DenseMatrix, part: &BlockPartition) -> BcgsResult {
        match *self {
            Self::PipIro { io_a } => bcgs_pip_iro(x, part, io_a),
            Self::OneSync { io_a } => bcgs_i_p_1s(x, part, io_a),
            Self::TwoSync { io_a, io_1 } => bcgs_i_p_2s(x, part, io_a, io_1),
            Self::Adaptive {
                io_a,
                io_1,
                switch_const,
            } => bcgs_adaptive(x, part, io_a, io_1, switch_const),
            Self::Bcgs2 { io_1, io_2 } => bcgs_iro(x, part, io_1, io_2),
            Self::A1s { io_a } => bcgs_iro_a_1s(x, part, io_a),
        }
    }
}

/// Output of a successful block factorization.
#[derive(Debug, Clone)]
pub struct BcgsReport {
    pub factorization: QrFactorization,
    pub ledger: SyncLedger,
    /// One-based block index at which the adaptive scheme switched to two syncs.
    pub switch_block: Option<usize>,
    /// LOO of the leading `k` blocks of `Q`, for `k = 1..=p`.
    pub per_block_loo: Vec<f64>,
}

impl BcgsReport {
    pub(crate) fn new(
        factorization: QrFactorization,
        ledger: SyncLedger,
        switch_block: Option<usize>,
        block_ends: &[usize],
    ) -> Self {
        let per_block_loo = block_ends
            .iter()
            .map(|&end| loss_of_orthogonality(&factorization.q.columns(0, end).clone_owned()))
            .collect();
        Self {
            factorization,
            ledger,
            switch_block,
            per_block_loo,
        }
    }

    pub fn loo(&self) -> f64 {
        self.per_block_loo.last().copied().unwrap_or(0.0)
    }
}

/// A breakdown in the middle of a factorization.
#[derive(Debug)]
pub struct BcgsFailure {
    pub error: Error,
    /// Factorization of the blocks finished before the breakdown.
    pub partial: BcgsReport,
    /// One-based index of the block that could not be completed.
    pub failed_block: usize,
}

impl fmt::Display for BcgsFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {}: {}", self.failed_block, self.error)
    }
}

impl std::error::Error for BcgsFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub type BcgsResult = std::result::Result<BcgsReport, Box<BcgsFailure>>;

/// Switching test on the Gram block `Omega = U^T U`.
///
/// Returns true when `c^2 lambda_min <= lambda_max`, i.e. when the estimated
/// condition number of `U` reaches `c`. A nonpositive or NaN smallest
/// eigenvalue always switches.
pub fn switch_check(omega: &DenseMatrix, switch_const: f64) -> bool {
    if omega.is_empty() {
        return false;
    }
    if !omega.iter().all(|v| v.is_finite()) {
        return true;
    }
    let sym = (omega + omega.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lmin > 0.0) {
        return true;
    }
    switch_const * switch_const * lmin <= lmax
}

/// Projection coefficients `Q_k^T X_{k+1}` recovered from the delayed
/// quantities of the previous iteration, without a reduction:
/// `[Z; Y^{-T}(P - Ycols^T Z)]`.
pub fn lazy_s_column(
    z_prev: &DenseMatrix,
    p_prev: &DenseMatrix,
    y_cols_prev: &DenseMatrix,
    y_diag_prev: &DenseMatrix,
) -> Result<DenseMatrix> {
    let j = p_prev - y_cols_prev.tr_mul(z_prev);
    let bottom = tri_solve(y_diag_prev, &j, SolveSide::LeftTransposed)?;
    Ok(vcat(z_prev, &bottom))
}
