//! Dense column-major matrix and vector containers plus their text format.
//!
//! These are deliberately plain: owned `Vec<f64>` storage, explicit
//! transposition, no views. Construction from literal data rejects NaN and
//! infinity so that every downstream non-finite value is traceable to a
//! documented error path rather than bad input.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Shape of a scalar, vector, or matrix value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn num_entries(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Scalar => write!(f, "scalar"),
            Shape::Vector(n) => write!(f, "vec({n})"),
            Shape::Matrix(r, c) => write!(f, "mat({r}x{c})"),
        }
    }
}

/// Anything with a [`Shape`]: scalars, vectors, matrices.
pub trait HasShape {
    fn shape(&self) -> Shape;
}

impl HasShape for f64 {
    fn shape(&self) -> Shape {
        Shape::Scalar
    }
}

// ── DenseVector ──────────────────────────────────────────────────────

/// A real column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    /// Build from literal entries. Rejects non-finite entries.
    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        check_finite(entries, "vector literal")?;
        Ok(Self { data: entries.to_vec() })
    }

    pub fn zeros(len: usize) -> Self {
        Self { data: vec![0.0; len] }
    }

    /// The `i`-th standard basis vector of length `len`.
    pub fn unit(len: usize, i: usize) -> Result<Self> {
        if i >= len {
            return Err(Error::InvalidArgument {
                what: format!("unit index {i} out of range for length {len}"),
            });
        }
        let mut v = Self::zeros(len);
        v.data[i] = 1.0;
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::dim("vector add", format!("{} vs {}", self.len(), other.len())));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::dim("vector sub", format!("{} vs {}", self.len(), other.len())));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { data })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { data: self.data.iter().map(|a| c * a).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Max-absolute-value norm; 0 for the empty vector.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl HasShape for DenseVector {
    fn shape(&self) -> Shape {
        Shape::Vector(self.len())
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

// ── DenseMatrix ──────────────────────────────────────────────────────

/// A real matrix stored column-major: entry `(i, j)` lives at `j * rows + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from a column-major slice. Rejects non-finite entries and
    /// length mismatches.
    pub fn from_col_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dim(
                "matrix literal",
                format!("{rows}x{cols} needs {} entries, got {}", rows * cols, entries.len()),
            ));
        }
        check_finite(entries, "matrix literal")?;
        Ok(Self { rows, cols, data: entries.to_vec() })
    }

    /// Build from row slices, e.g. `from_rows(&[&[1.0, 2.0], &[3.0, 4.0]])`.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::dim(
                    "matrix literal",
                    format!("row 0 has {c} entries but row {i} has {}", row.len()),
                ));
            }
        }
        let mut m = Self { rows: r, cols: c, data: vec![0.0; r * c] };
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.data[j * r + i] = v;
            }
        }
        check_finite(&m.data, "matrix literal")?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = v;
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[i * self.cols + j] = self.data[j * self.rows + i];
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(
                "matrix add",
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(
                "matrix sub",
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| c * a).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Max-absolute-value norm over all entries; 0 for an empty matrix.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> DenseVector {
        let start = j * self.rows;
        DenseVector { data: self.data[start..start + self.rows].to_vec() }
    }

    /// Single-column matrix holding `v`.
    pub fn from_column(v: &DenseVector) -> Self {
        Self { rows: v.len(), cols: 1, data: v.as_slice().to_vec() }
    }

    /// Frobenius inner product `sum_ij A_ij * B_ij`.
    pub fn frobenius_dot(&self, other: &Self) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(
                "frobenius dot",
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }
}

impl HasShape for DenseMatrix {
    fn shape(&self) -> Shape {
        Shape::Matrix(self.rows, self.cols)
    }
}

fn check_finite(entries: &[f64], context: &str) -> Result<()> {
    for (k, v) in entries.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { context: format!("{context} at flat index {k}") });
        }
    }
    Ok(())
}

// ── Text format ──────────────────────────────────────────────────────
//
// First line: "rows cols". Then `rows` lines of `cols` whitespace-separated
// decimals. A vector file is a single-column (n 1) or single-row (1 n)
// matrix. Blank trailing lines are ignored.

/// Parse a matrix from the text format. Errors carry 1-based line numbers.
pub fn parse_matrix_text(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate();
    let (header_line, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "missing header line".into() })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: header_line + 1,
            msg: format!("header must be \"rows cols\", got {header:?}"),
        });
    }
    let rows: usize = dims[0].parse().map_err(|_| Error::Parse {
        line: header_line + 1,
        msg: format!("bad row count {:?}", dims[0]),
    })?;
    let cols: usize = dims[1].parse().map_err(|_| Error::Parse {
        line: header_line + 1,
        msg: format!("bad column count {:?}", dims[1]),
    })?;

    let mut m = DenseMatrix::zeros(rows, cols);
    let mut filled = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if filled == rows {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected {rows} data rows, found extra data"),
            });
        }
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != cols {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected {cols} entries, got {}", entries.len()),
            });
        }
        for (j, tok) in entries.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad number {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("non-finite entry {tok:?}"),
                });
            }
            m.set(filled, j, v);
        }
        filled += 1;
    }
    if filled != rows {
        return Err(Error::Parse {
            line: filled + 1,
            msg: format!("expected {rows} data rows, got {filled}"),
        });
    }
    Ok(m)
}

/// Parse a vector: any single-row or single-column matrix file.
pub fn parse_vector_text(text: &str) -> Result<DenseVector> {
    let m = parse_matrix_text(text)?;
    if m.cols() == 1 {
        Ok(m.column(0))
    } else if m.rows() == 1 {
        let data: Vec<f64> = (0..m.cols()).map(|j| m.get(0, j)).collect();
        Ok(DenseVector { data })
    } else {
        Err(Error::Parse {
            line: 1,
            msg: format!("expected a vector (one row or one column), got {}x{}", m.rows(), m.cols()),
        })
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix_text(&fs::read_to_string(path)?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<DenseVector> {
    parse_vector_text(&fs::read_to_string(path)?)
}

/// Render in the text format with full 17-significant-digit precision.
pub fn matrix_to_text(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:.16e}", m.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn vector_to_text(v: &DenseVector) -> String {
    let mut out = format!("{} 1\n", v.len());
    for i in 0..v.len() {
        out.push_str(&format!("{:.16e}\n", v[i]));
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    fs::write(path, matrix_to_text(m))?;
    Ok(())
}

pub fn write_vector(path: impl AsRef<Path>, v: &DenseVector) -> Result<()> {
    fs::write(path, vector_to_text(v))?;
    Ok(())
}
