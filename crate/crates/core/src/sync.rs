//! Logical synchronization accounting.
//!
//! A synchronization point is one global reduction across all processes.
//! Nothing is actually distributed here; every routine that would need a
//! reduction charges the ledger it is handed instead.

use crate::dense::DenseMatrix;
use crate::error::{dim_err, Result};

/// Phase label used until [`SyncLedger::set_phase`] is called.
pub const DEFAULT_PHASE: &str = "main";

/// Monotone counter of synchronization points with a per-phase breakdown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncLedger {
    total: u64,
    breakdown: Vec<(String, u64)>,
    phase: String,
}

impl Default for SyncLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl SyncLedger {
    pub fn new() -> Self {
        Self {
            total: 0,
            breakdown: Vec::new(),
            phase: DEFAULT_PHASE.to_string(),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Per-phase counts in order of first use.
    pub fn breakdown(&self) -> &[(String, u64)] {
        &self.breakdown
    }

    pub fn phase(&self) -> &str {
        &self.phase
    }

    /// Route subsequent charges to `label`.
    pub fn set_phase(&mut self, label: impl Into<String>) {
        self.phase = label.into();
    }

    /// Count attributed to `label`, zero if it was never charged.
    pub fn phase_total(&self, label: &str) -> u64 {
        self.breakdown
            .iter()
            .find(|(l, _)| l == label)
            .map_or(0, |(_, c)| *c)
    }

    /// Total with the count of `label` left out.
    pub fn total_excluding(&self, label: &str) -> u64 {
        self.total - self.phase_total(label)
    }

    /// Record `count` synchronization points in the current phase.
    pub fn charge(&mut self, count: u64) {
        if count == 0 {
            return;
        }
        self.total += count;
        match self.breakdown.iter_mut().find(|(l, _)| *l == self.phase) {
            Some((_, c)) => *c += count,
            None => self.breakdown.push((self.phase.clone(), count)),
        }
    }
}

/// Gram grid `[L_i^T R_j]` computed in a single fused reduction.
///
/// Charges exactly one synchronization point no matter how many panels are
/// involved. Panels with zero columns are allowed and yield empty entries.
pub fn fused_block_product(
    left: &[&DenseMatrix],
    right: &[&DenseMatrix],
    ledger: &mut SyncLedger,
) -> Result<Vec<Vec<DenseMatrix>>> {
    let m = match left.iter().chain(right.iter()).next() {
        Some(p) => p.nrows(),
        None => return dim_err("fused product needs at least one panel"),
    };
    if let Some(bad) = left.iter().chain(right.iter()).find(|p| p.nrows() != m) {
        return dim_err(format!(
            "panel has {} rows, expected {m}",
            bad.nrows()
        ));
    }
    let grid = left
        .iter()
        .map(|l| right.iter().map(|r| l.tr_mul(r)).collect())
        .collect();
    ledger.charge(1);
    Ok(grid)
}
