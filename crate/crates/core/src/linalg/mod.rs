//! Dense matrices and the symmetric linear algebra every estimator builds on.
//!
//! Storage is row-major `Vec<f64>`. [`CovMatrix`] is always exactly symmetric;
//! routines that factor or diagonalise it detect the band/envelope structure
//! produced by tapering and banding and skip the structural zeros.

mod cholesky;
mod eigen;

pub use cholesky::Cholesky;
pub use eigen::{spd_inverse, spectral_norm, sym_eigen_max, sym_eigen_min};

use std::ops::Range;

use crate::error::{Error, Result};

const ASYMMETRY_WARN: f64 = 1e-10;

/// Symmetric `p × p` matrix with covariance semantics.
///
/// Not necessarily positive definite: tapered sample covariances routinely
/// have negative eigenvalues until they are adjusted.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovMatrix {
    /// Builds from row-major data, symmetrising as `(A + Aᵀ)/2`.
    ///
    /// Logs a warning when the largest asymmetry exceeds `1e-10`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("covariance dimension must be at least 1"));
        }
        if data.len() != dim * dim {
            return Err(Error::shape("CovMatrix::from_row_major", dim * dim, data.len()));
        }
        let mut m = CovMatrix { dim, data };
        let asym = m.symmetrize();
        if asym > ASYMMETRY_WARN {
            log::warn!("input matrix asymmetric by {asym:e}; symmetrised as (A + Aᵀ)/2");
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("covariance rows must form a square matrix"));
        }
        Self::from_row_major(dim, rows.concat())
    }

    /// Builds from a function of 0-based `(i, j)`; only `i <= j` is evaluated.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "covariance dimension must be at least 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        CovMatrix { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "covariance dimension must be at least 1");
        CovMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Caller guarantees `data` is exactly symmetric.
    pub(crate) fn from_symmetric_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        CovMatrix { dim, data }
    }

    fn symmetrize(&mut self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                worst = worst.max((a - b).abs());
                let m = 0.5 * (a + b);
                self.data[i * n + j] = m;
                self.data[j * n + i] = m;
            }
        }
        worst
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)`, 0-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += c;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        CovMatrix { dim: self.dim, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &CovMatrix) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::shape("CovMatrix::add", self.dim, other.dim));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(CovMatrix { dim: self.dim, data })
    }

    /// Principal sub-matrix on the 0-based index range.
    pub fn principal(&self, range: Range<usize>) -> Self {
        assert!(range.start < range.end && range.end <= self.dim);
        let m = range.len();
        let mut data = Vec::with_capacity(m * m);
        for i in range.clone() {
            data.extend_from_slice(&self.row(i)[range.clone()]);
        }
        CovMatrix { dim: m, data }
    }

    /// Rectangular block `rows × cols` (0-based ranges).
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> RectMatrix {
        assert!(rows.end <= self.dim && cols.end <= self.dim);
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            data.extend_from_slice(&self.row(i)[cols.clone()]);
        }
        RectMatrix { rows: rows.len(), cols: cols.len(), data }
    }

    /// Largest `|i − j|` with a non-zero entry.
    pub fn bandwidth(&self) -> usize {
        bandwidth(&self.data, self.dim)
    }

    pub fn max_abs_diff(&self, other: &CovMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        max_abs_diff(&self.data, &other.data)
    }
}

impl From<&CovMatrix> for RectMatrix {
    fn from(m: &CovMatrix) -> Self {
        RectMatrix { rows: m.dim, cols: m.dim, data: m.data.clone() }
    }
}

/// General `rows × cols` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RectMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix must have at least one row and one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::shape("RectMatrix::from_row_major", rows * cols, data.len()));
        }
        Ok(RectMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1×1");
        RectMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = RectMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        RectMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &RectMatrix) -> Result<Self> {
        self.zip_with(other, "RectMatrix::sub", |a, b| a - b)
    }

    pub fn add(&self, other: &RectMatrix) -> Result<Self> {
        self.zip_with(other, "RectMatrix::add", |a, b| a + b)
    }

    pub(crate) fn add_assign(&mut self, other: &RectMatrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn zip_with(&self, other: &RectMatrix, ctx: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::shape(ctx, format!("{:?}", self.shape()), format!("{:?}", other.shape())));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(RectMatrix { rows: self.rows, cols: self.cols, data })
    }

    /// Matrix product; zero entries of `self` are skipped.
    pub fn matmul(&self, other: &RectMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape("RectMatrix::matmul", self.cols, other.rows));
        }
        let mut out = RectMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::shape("RectMatrix::mul_vec", self.cols, x.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn max_abs_diff(&self, other: &RectMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        max_abs_diff(&self.data, &other.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `n × p` observation matrix, one sample per row. `n` may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("data must have at least one column"));
        }
        if data.len() != n * p {
            return Err(Error::shape("DataMatrix::new", n * p, data.len()));
        }
        Ok(DataMatrix { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("ragged data rows"));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn empty(p: usize) -> Self {
        DataMatrix { n: 0, p, data: Vec::new() }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Rows `range` as a new matrix.
    pub fn slice_rows(&self, range: Range<usize>) -> Self {
        DataMatrix { n: range.len(), p: self.p, data: self.data[range.start * self.p..range.end * self.p].to_vec() }
    }

    /// All rows except `skip`.
    pub fn without_row(&self, skip: usize) -> Self {
        let mut data = Vec::with_capacity(self.data.len().saturating_sub(self.p));
        for (i, r) in self.rows().enumerate() {
            if i != skip {
                data.extend_from_slice(r);
            }
        }
        DataMatrix { n: self.n - 1, p: self.p, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dot product with a fixed four-lane summation order.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn bandwidth(data: &[f64], n: usize) -> usize {
    let mut w = 0;
    for i in 0..n {
        let row = &data[i * n..i * n + i];
        if let Some(j) = row.iter().position(|&v| v != 0.0) {
            w = w.max(i - j);
        }
    }
    w
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
