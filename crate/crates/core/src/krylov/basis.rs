use nalgebra::DVector;

use crate::dense::{DenseMatrix, UNIT_ROUNDOFF};
use crate::error::{Error, Result};

use super::operator::LinearOperator;

/// Polynomial recurrence of the s-step basis.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// `b_{j+1} = A b_j`
    Monomial,
    /// `b_{j+1} = (A - theta_j I) b_j`; needs at least `s - 1` shifts.
    Newton { shifts: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnScaling {
    None,
    /// Each new basis column is scaled to unit 2-norm.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisPolicy {
    pub kind: BasisKind,
    pub scaling: ColumnScaling,
}

impl Default for BasisPolicy {
    fn default() -> Self {
        Self {
            kind: BasisKind::Monomial,
            scaling: ColumnScaling::Unit,
        }
    }
}

impl BasisPolicy {
    pub fn validate(&self, s: usize) -> Result<()> {
        if let BasisKind::Newton { shifts } = &self.kind {
            if shifts.len() + 1 < s {
                return Err(Error::InvalidArgument(format!(
                    "Newton basis with s={s} needs {} shifts, got {}",
                    s - 1,
                    shifts.len()
                )));
            }
        }
        Ok(())
    }
}

/// The preconditioned operator `M_L^{-1} A M_R^{-1}`.
pub struct Preconditioned<'a> {
    pub a: &'a dyn LinearOperator,
    pub left: &'a dyn LinearOperator,
    pub right: &'a dyn LinearOperator,
}

impl Preconditioned<'_> {
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.left.apply(&self.a.apply(&self.right.apply(v)))
    }
}

/// One s-step panel: the basis `B`, `Z = M_R^{-1} B` and
/// `X = M_L^{-1} A M_R^{-1} B`.
#[derive(Debug, Clone)]
pub struct Panel {
    pub b: DenseMatrix,
    pub z: DenseMatrix,
    pub x: DenseMatrix,
}

fn negligible(norm: f64, scale: f64) -> bool {
    !(norm > 100.0 * UNIT_ROUNDOFF * scale)
}

fn generate(
    op: &Preconditioned<'_>,
    seed: &DVector<f64>,
    s: usize,
    policy: &BasisPolicy,
) -> Result<Panel> {
    policy.validate(s)?;
    let m = op.a.dim();
    if seed.len() != m {
        return Err(Error::Dimension(format!(
            "seed has length {}, operator dimension is {m}",
            seed.len()
        )));
    }
    let seed_norm = seed.norm();
    if seed_norm == 0.0 || !seed_norm.is_finite() {
        return Err(Error::Breakdown { column: 0 });
    }
    let mut b = DenseMatrix::zeros(m, s);
    let mut x = DenseMatrix::zeros(m, s);
    let mut col = match policy.scaling {
        ColumnScaling::Unit => seed / seed_norm,
        ColumnScaling::None => seed.clone(),
    };
    for j in 0..s {
        let w = op.apply(&col);
        b.set_column(j, &col);
        x.set_column(j, &w);
        if j + 1 == s {
            break;
        }
        let next = match &policy.kind {
            BasisKind::Monomial => w.clone(),
            BasisKind::Newton { shifts } => &w - &col * shifts[j],
        };
        let norm = next.norm();
        let scale = match &policy.kind {
            BasisKind::Monomial => w.norm().max(col.norm() * op.a.frobenius_norm()),
            BasisKind::Newton { shifts } => w.norm() + shifts[j].abs() * col.norm(),
        };
        if negligible(norm, scale) {
            return Err(Error::Breakdown { column: j + 1 });
        }
        col = match policy.scaling {
            ColumnScaling::Unit => next / norm,
            ColumnScaling::None => next,
        };
    }
    let z = op.right.apply_panel(&b);
    Ok(Panel { b, z, x })
}

/// Generate `s` basis columns from `seed` and their preconditioned images.
///
/// The recurrence runs on the preconditioned operator. A column that
/// vanishes to working precision is reported as [`Error::Breakdown`].
pub fn generate_panel(
    a: &dyn LinearOperator,
    left: &dyn LinearOperator,
    right: &dyn LinearOperator,
    seed: &DVector<f64>,
    s: usize,
    policy: &BasisPolicy,
) -> Result<Panel> {
    if s == 0 {
        return Err(Error::InvalidArgument("block width must be positive".into()));
    }
    generate(&Preconditioned { a, left, right }, seed, s, policy)
}

/// Reorder real shifts so that each one maximizes the product of distances
/// to the ones before it, starting from the largest magnitude.
pub fn leja_order(points: &[f64]) -> Vec<f64> {
    let mut rest: Vec<f64> = points.to_vec();
    let mut out = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let pick = if out.is_empty() {
            (0..rest.len())
                .max_by(|&i, &j| rest[i].abs().total_cmp(&rest[j].abs()))
                .unwrap()
        } else {
            (0..rest.len())
                .max_by(|&i, &j| {
                    let score = |k: usize| -> f64 {
                        out.iter().map(|&o: &f64| (rest[k] - o).abs().ln()).sum()
                    };
                    score(i).total_cmp(&score(j))
                })
                .unwrap()
        };
        out.push(rest.swap_remove(pick));
    }
    out
}
