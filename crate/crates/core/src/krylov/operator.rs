use nalgebra::DVector;

use crate::dense::DenseMatrix;
use crate::error::{dim_err, Error, Result};

/// A square linear map applied to vectors and panels.
///
/// Preconditioners are passed as operators applying `M^{-1}`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;

    fn apply_panel(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim(), x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            out.set_column(j, &self.apply(&col.clone_owned()));
        }
        out
    }

    /// Frobenius norm, used by the GMRES backward error.
    fn frobenius_norm(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityOperator {
    pub n: usize,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn apply_panel(&self, x: &DenseMatrix) -> DenseMatrix {
        x.clone()
    }

    fn frobenius_norm(&self) -> f64 {
        (self.n as f64).sqrt()
    }
}

/// Dense square matrix with a cached Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    a: DenseMatrix,
    fro: f64,
}

impl DenseOperator {
    pub fn new(a: DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return dim_err(format!("operator must be square, got {}x{}", a.nrows(), a.ncols()));
        }
        let fro = a.norm();
        Ok(Self { a, fro })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn apply_panel(&self, x: &DenseMatrix) -> DenseMatrix {
        &self.a * x
    }

    fn frobenius_norm(&self) -> f64 {
        self.fro
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    fro: f64,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::InvalidArgument(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let fro = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            fro,
        })
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let triplets: Vec<_> = (0..a.nrows())
            .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
            .filter(|&(i, j)| a[(i, j)] != 0.0)
            .map(|(i, j)| (i, j, a[(i, j)]))
            .collect();
        Self::from_triplets(a.nrows(), a.ncols(), &triplets).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |k| (i, self.indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices in range")
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "operand length mismatch");
        DVector::from_fn(self.nrows, |i, _| {
            (self.indptr[i]..self.indptr[i + 1])
                .map(|k| self.values[k] * x[self.indices[k]])
                .sum()
        })
    }

    fn frobenius_norm(&self) -> f64 {
        self.fro
    }
}
