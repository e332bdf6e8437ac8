use super::{dot, CovMatrix, RectMatrix};
use crate::error::{Error, Result};

/// Lower Cholesky factor `A = L Lᵀ` that respects the envelope of `A`.
///
/// Row `i` of `L` is only stored from the first non-zero column of row `i`
/// of `A`; fill-in never leaves that envelope, so banded inputs factor in
/// `O(p w²)`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
    first: Vec<usize>,
}

impl Cholesky {
    /// Factors `a`, reporting the minimum eigenvalue when it is not PD.
    pub fn new(a: &CovMatrix) -> Result<Self> {
        match Self::try_new(a) {
            Some(c) => Ok(c),
            None => Err(Error::Singular {
                context: "Cholesky factorisation".into(),
                min_eigenvalue: super::sym_eigen_min(a).unwrap_or(f64::NAN),
            }),
        }
    }

    /// Factors `a`, returning `None` when a pivot is not strictly positive.
    pub fn try_new(a: &CovMatrix) -> Option<Self> {
        Self::factor_slice(a.dim(), a.as_slice())
    }

    pub(crate) fn factor_slice(n: usize, a: &[f64]) -> Option<Self> {
        let first: Vec<usize> = (0..n)
            .map(|i| a[i * n..i * n + i].iter().position(|&v| v != 0.0).unwrap_or(i))
            .collect();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let lo = fi.max(first[j]);
                let s = a[i * n + j] - dot(&l[i * n + lo..i * n + j], &l[j * n + lo..j * n + j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Cholesky { dim: n, l, first })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)` of `L`.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    pub fn factor(&self) -> RectMatrix {
        RectMatrix::from_row_major(self.dim, self.dim, self.l.clone()).expect("dim >= 1")
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let fi = self.first[i];
            let s = b[i] - dot(&self.l[i * n + fi..i * n + i], &b[fi..i]);
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_in_place(&self, y: &mut [f64]) {
        let n = self.dim;
        assert_eq!(y.len(), n);
        for i in (0..n).rev() {
            let xi = y[i] / self.l[i * n + i];
            y[i] = xi;
            let fi = self.first[i];
            for (yl, &lil) in y[fi..i].iter_mut().zip(&self.l[i * n + fi..i * n + i]) {
                *yl -= lil * xi;
            }
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.l[i * self.dim + i].ln()).sum::<f64>()
    }

    /// `A⁻¹`, symmetrised.
    pub fn inverse(&self) -> CovMatrix {
        let n = self.dim;
        let mut inv = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
                inv[i * n + j] = m;
                inv[j * n + i] = m;
            }
        }
        CovMatrix::from_symmetric_unchecked(n, inv)
    }
}
