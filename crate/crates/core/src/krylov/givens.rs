use nalgebra::DVector;

use crate::dense::{tri_solve, DenseMatrix, SolveSide};
use crate::error::Result;

/// Plane rotation `[c s; -s c]` acting on two consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Givens {
    pub c: f64,
    pub s: f64,
}

impl Givens {
    /// Rotation mapping `(a, b)` to `(r, 0)` with `r >= 0`.
    pub fn zeroing(a: f64, b: f64) -> (Self, f64) {
        if b == 0.0 {
            return if a >= 0.0 {
                (Self { c: 1.0, s: 0.0 }, a)
            } else {
                (Self { c: -1.0, s: 0.0 }, -a)
            };
        }
        let r = a.hypot(b);
        (Self { c: a / r, s: b / r }, r)
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.c * x + self.s * y, -self.s * x + self.c * y)
    }
}

/// Incremental QR of an upper Hessenberg least-squares matrix by Givens
/// rotations, solving `min || beta e_1 - H y ||`.
#[derive(Debug, Clone)]
pub struct GivensLeastSquares {
    rotations: Vec<Givens>,
    /// Columns of the triangular factor `T`, each of length `index + 1`.
    t_cols: Vec<Vec<f64>>,
    /// Rotated right-hand side `beta G^T e_1`.
    g: Vec<f64>,
}

impl GivensLeastSquares {
    pub fn new(beta: f64) -> Self {
        Self {
            rotations: Vec::new(),
            t_cols: Vec::new(),
            g: vec![beta],
        }
    }

    /// Number of columns processed so far.
    pub fn len(&self) -> usize {
        self.t_cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_cols.is_empty()
    }

    pub fn rotations(&self) -> &[Givens] {
        &self.rotations
    }

    /// Append Hessenberg columns. Column `k` (global index) must have at
    /// least `k + 2` rows; entries beyond `k + 1` are ignored.
    pub fn update(&mut self, new_cols: &DenseMatrix) {
        for col in new_cols.column_iter() {
            let k = self.t_cols.len();
            assert!(col.len() >= k + 2, "Hessenberg column {k} is too short");
            let mut h: Vec<f64> = col.iter().take(k + 2).copied().collect();
            for (i, rot) in self.rotations.iter().enumerate() {
                let (a, b) = rot.apply(h[i], h[i + 1]);
                h[i] = a;
                h[i + 1] = b;
            }
            let (rot, r) = Givens::zeroing(h[k], h[k + 1]);
            h[k] = r;
            h.truncate(k + 1);
            let (g0, g1) = rot.apply(self.g[k], 0.0);
            self.g[k] = g0;
            self.g.push(g1);
            self.rotations.push(rot);
            self.t_cols.push(h);
        }
    }

    /// `|g_last|`, the residual norm of the current least-squares problem.
    pub fn residual(&self) -> f64 {
        self.g.last().map_or(0.0, |v| v.abs())
    }

    /// The triangular factor `T` (square, `len x len`).
    pub fn t(&self) -> DenseMatrix {
        let n = self.len();
        let mut t = DenseMatrix::zeros(n, n);
        for (j, col) in self.t_cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                t[(i, j)] = v;
            }
        }
        t
    }

    pub fn rhs(&self) -> &[f64] {
        &self.g
    }

    /// Accumulated orthogonal factor `G` with `H = G [T; 0]`.
    pub fn orthogonal_factor(&self) -> DenseMatrix {
        let n = self.len() + 1;
        let mut g = DenseMatrix::identity(n, n);
        for (i, rot) in self.rotations.iter().enumerate().rev() {
            for c in 0..n {
                let (a, b) = (g[(i, c)], g[(i + 1, c)]);
                g[(i, c)] = rot.c * a - rot.s * b;
                g[(i + 1, c)] = rot.s * a + rot.c * b;
            }
        }
        g
    }

    /// Solve `T y = g_{1:len}`.
    pub fn solve(&self) -> Result<DVector<f64>> {
        let n = self.len();
        let rhs = DenseMatrix::from_column_slice(n, 1, &self.g[..n]);
        let y = tri_solve(&self.t(), &rhs, SolveSide::Left)?;
        Ok(DVector::from_column_slice(y.as_slice()))
    }
}
