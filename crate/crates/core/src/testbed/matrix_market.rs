//! Matrix Market reader and writers.
//!
//! Supports `matrix coordinate|array real|integer general|symmetric`.
//! Symmetric storage is expanded on read. Writers print every value with the
//! shortest representation that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::krylov::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
}

/// A parsed Matrix Market file.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket {
    pub format: MmFormat,
    pub symmetry: MmSymmetry,
    pub matrix: CsrMatrix,
}

impl MatrixMarket {
    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| perr(line, format!("bad numeric value '{tok}'")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_index(tok: &str, bound: usize, line: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| perr(line, format!("bad index '{tok}'")))?;
    if i == 0 || i > bound {
        return Err(perr(line, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

/// Parse Matrix Market text from any reader.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<MatrixMarket> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(perr(1, "empty file")),
    };
    let toks: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(perr(hline, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let format = match toks[2].as_str() {
        "coordinate" => MmFormat::Coordinate,
        "array" => MmFormat::Array,
        other => return Err(perr(hline, format!("unsupported format '{other}'"))),
    };
    match toks[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(perr(hline, format!("unsupported field '{other}'"))),
    }
    let symmetry = match toks[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        other => return Err(perr(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => None,
        other => Some((n, other)),
    });

    let (sline, size) = data.next().ok_or_else(|| perr(hline + 1, "missing size line"))?;
    let size = size?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let expected = if format == MmFormat::Coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(perr(sline, format!("size line needs {expected} integers")));
    }
    let num = |t: &str| -> Result<usize> {
        t.parse()
            .map_err(|_| perr(sline, format!("bad size '{t}'")))
    };
    let nrows = num(dims[0])?;
    let ncols = num(dims[1])?;
    if nrows == 0 {
        return Err(perr(sline, "matrix must have at least one row"));
    }
    if symmetry == MmSymmetry::Symmetric && nrows != ncols {
        return Err(perr(sline, "symmetric matrix must be square"));
    }

    let mut triplets = Vec::new();
    let mut last_line = sline;
    match format {
        MmFormat::Coordinate => {
            let nnz = num(dims[2])?;
            for k in 0..nnz {
                let (n, l) = data
                    .next()
                    .ok_or_else(|| perr(last_line + 1, format!("expected {nnz} entries, found {k}")))?;
                let l = l?;
                last_line = n;
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(perr(n, "entry needs row, column and value"));
                }
                let i = parse_index(t[0], nrows, n)?;
                let j = parse_index(t[1], ncols, n)?;
                let v = parse_value(t[2], n)?;
                if symmetry == MmSymmetry::Symmetric && i < j {
                    return Err(perr(n, "symmetric file must store the lower triangle"));
                }
                triplets.push((i, j, v));
                if symmetry == MmSymmetry::Symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
        MmFormat::Array => {
            let cols: Vec<(usize, usize)> = match symmetry {
                MmSymmetry::General => (0..ncols)
                    .flat_map(|j| (0..nrows).map(move |i| (i, j)))
                    .collect(),
                MmSymmetry::Symmetric => (0..ncols)
                    .flat_map(|j| (j..nrows).map(move |i| (i, j)))
                    .collect(),
            };
            let total = cols.len();
            for (k, (i, j)) in cols.into_iter().enumerate() {
                let (n, l) = data
                    .next()
                    .ok_or_else(|| perr(last_line + 1, format!("expected {total} values, found {k}")))?;
                let l = l?;
                last_line = n;
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 1 {
                    return Err(perr(n, "array entry needs exactly one value"));
                }
                let v = parse_value(t[0], n)?;
                if v != 0.0 {
                    triplets.push((i, j, v));
                    if symmetry == MmSymmetry::Symmetric && i != j {
                        triplets.push((j, i, v));
                    }
                }
            }
        }
    }
    if let Some((n, _)) = data.next() {
        return Err(perr(n, "unexpected data after the last entry"));
    }
    let matrix = CsrMatrix::from_triplets(nrows, ncols, &triplets)?;
    Ok(MatrixMarket {
        format,
        symmetry,
        matrix,
    })
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixMarket> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

/// Write a dense matrix in `array real general` format.
pub fn write_matrix_market_array<W: Write>(out: W, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{:e}", a[(i, j)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write a sparse matrix in `coordinate real general` format.
pub fn write_matrix_market_coordinate<W: Write>(out: W, a: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}
