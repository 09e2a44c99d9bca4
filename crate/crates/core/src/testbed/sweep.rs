use crate::bcgs::OrthoVariant;
use crate::dense::{relative_residual, singular_value_ratio};
use crate::error::Result;

use super::generators::{MatrixClass, MatrixClassParams};

/// Column names of the sweep CSV, in order.
pub const SWEEP_COLUMNS: [&str; 10] = [
    "class",
    "kappa_target",
    "kappa_measured",
    "variant",
    "io_a",
    "io_1",
    "loo",
    "rel_residual",
    "sync_total",
    "status",
];

/// One factorization in a sweep. Breakdowns carry `loo = rel_residual = inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub class: MatrixClass,
    pub kappa_target: f64,
    pub kappa_measured: f64,
    pub variant: OrthoVariant,
    pub loo: f64,
    pub rel_residual: f64,
    pub sync_total: u64,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Fields as strings in [`SWEEP_COLUMNS`] order; floats in scientific notation.
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.class.to_string(),
            format!("{:e}", self.kappa_target),
            format!("{:e}", self.kappa_measured),
            self.variant.tag().to_string(),
            self.variant.io_a().to_string(),
            self.variant
                .io_1()
                .map_or_else(|| "-".to_string(), |k| k.to_string()),
            format!("{:e}", self.loo),
            format!("{:e}", self.rel_residual),
            self.sync_total.to_string(),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Run every variant on one generated matrix per grid point.
///
/// `base` supplies the class, shape and seed; its `kappa_target` is replaced
/// by each grid value. Breakdowns become rows, not errors.
pub fn kappa_sweep(
    base: &MatrixClassParams,
    variants: &[OrthoVariant],
    kappa_grid: &[f64],
) -> Result<SweepResult> {
    let part = base.partition()?;
    for v in variants {
        v.validate()?;
    }
    let mut rows = Vec::with_capacity(variants.len() * kappa_grid.len());
    for &kappa in kappa_grid {
        let params = MatrixClassParams {
            kappa_target: kappa,
            ..*base
        };
        let x = params.generate()?;
        let kappa_measured = singular_value_ratio(&x);
        for &variant in variants {
            let row = match variant.run(&x, &part) {
                Ok(report) => {
                    let f = &report.factorization;
                    SweepRow {
                        class: base.class,
                        kappa_target: kappa,
                        kappa_measured,
                        variant,
                        loo: report.loo(),
                        rel_residual: relative_residual(&x, &f.q, &f.r)?,
                        sync_total: report.ledger.total(),
                        status: "ok".into(),
                    }
                }
                Err(fail) => SweepRow {
                    class: base.class,
                    kappa_target: kappa,
                    kappa_measured,
                    variant,
                    loo: f64::INFINITY,
                    rel_residual: f64::INFINITY,
                    sync_total: fail.partial.ledger.total(),
                    status: format!("breakdown at block {}", fail.failed_block),
                },
            };
            rows.push(row);
        }
    }
    Ok(SweepResult { rows })
}

/// `n` points spaced evenly in log scale from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}
