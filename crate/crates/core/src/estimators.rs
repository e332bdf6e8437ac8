//! Frequentist point estimators of the conditional mean operator.
//!
//! A covariance `Σ` on `Z = (X, Y)` with `X ∈ ℝ^{p0}` first is mapped to
//! `ψ(Σ) = Σ_YX Σ_XX⁻¹` and `ν(Σ) = Σ_YY − Σ_YX Σ_XX⁻¹ Σ_XY`. The blocks are
//! `Σ_XX = Σ[1:p0, 1:p0]`, `Σ_YX = Σ[p0+1:p, 1:p0]`, `Σ_YY = Σ[p0+1:p, p0+1:p]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, spectral_norm, sym_eigen_min, Cholesky, CovMatrix, RectMatrix};
use crate::operators::{band, pd_adjust, taper, trailing_block_factor, BlockwiseParams, TaperParams};

pub use crate::linalg::DataMatrix;

/// `(p − p0) × p0` regression coefficient / conditional mean operator.
pub type CoefMatrix = RectMatrix;

/// Split of `p` coordinates into `p0` covariates followed by `p − p0` responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    p: usize,
    p0: usize,
}

impl Partition {
    pub fn new(p: usize, p0: usize) -> Result<Self> {
        if p0 < 1 || p0 >= p {
            return Err(Error::invalid(format!("partition needs 1 <= p0 < p, got p={p}, p0={p0}")));
        }
        Ok(Partition { p, p0 })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn p0(&self) -> usize {
        self.p0
    }

    /// Response dimension `p − p0`.
    pub fn q(&self) -> usize {
        self.p - self.p0
    }

    fn check(&self, s: &CovMatrix) -> Result<()> {
        if s.dim() != self.p {
            return Err(Error::shape("partition", self.p, s.dim()));
        }
        Ok(())
    }
}

/// `Σ_i z_i z_iᵀ` over the rows of `z`.
pub fn scatter(z: &DataMatrix) -> CovMatrix {
    let p = z.p();
    let mut acc = vec![0.0; p * p];
    for row in z.rows() {
        for (i, &zi) in row.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            for (a, &zj) in acc[i * p + i..(i + 1) * p].iter_mut().zip(&row[i..]) {
                *a += zi * zj;
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            acc[i * p + j] = acc[j * p + i];
        }
    }
    CovMatrix::from_symmetric_unchecked(p, acc)
}

/// `S_n = n⁻¹ Σ_i Z_i Z_iᵀ` with no mean subtraction.
pub fn sample_covariance(z: &DataMatrix) -> Result<CovMatrix> {
    if z.n() == 0 {
        return Err(Error::InsufficientData("sample covariance needs at least one row".into()));
    }
    Ok(scatter(z).scaled(1.0 / z.n() as f64))
}

/// Sample covariance after subtracting column means (divisor `n`).
pub fn sample_covariance_centered(z: &DataMatrix) -> Result<CovMatrix> {
    let (centered, _) = crate::spatiotemporal::center(z)?;
    sample_covariance(&centered)
}

fn xx_factor(s: &CovMatrix, part: Partition) -> Result<Cholesky> {
    part.check(s)?;
    let xx = s.principal(0..part.p0);
    Cholesky::try_new(&xx).ok_or_else(|| Error::Singular {
        context: "covariate block Σ_XX".into(),
        min_eigenvalue: sym_eigen_min(&xx).unwrap_or(f64::NAN),
    })
}

/// Rows of `Σ_YX Σ_XX⁻¹`, solving only for non-zero rows of `Σ_YX`.
fn coef_from_factor(s: &CovMatrix, part: Partition, chol: &Cholesky) -> CoefMatrix {
    let (p0, q) = (part.p0, part.q());
    let mut c = RectMatrix::zeros(q, p0);
    for r in 0..q {
        let yx = &s.row(p0 + r)[..p0];
        if yx.iter().all(|&v| v == 0.0) {
            continue;
        }
        let out = c.row_mut(r);
        out.copy_from_slice(yx);
        chol.solve_in_place(out);
    }
    c
}

/// `ν = Σ_YY − C Σ_XY` for `C = ψ(Σ)`, symmetric by construction.
fn residual_variance(s: &CovMatrix, part: Partition, c: &CoefMatrix) -> CovMatrix {
    let (p0, q) = (part.p0, part.q());
    let nonzero: Vec<bool> = (0..q).map(|r| c.row(r).iter().any(|&v| v != 0.0)).collect();
    let mut v = vec![0.0; q * q];
    for r in 0..q {
        for t in r..q {
            let mut val = s.get(p0 + r, p0 + t);
            if nonzero[r] && nonzero[t] {
                val -= dot(c.row(r), &s.row(p0 + t)[..p0]);
            }
            v[r * q + t] = val;
            v[t * q + r] = val;
        }
    }
    CovMatrix::from_symmetric_unchecked(q, v)
}

/// `ψ(Σ) = Σ_YX Σ_XX⁻¹`.
pub fn cond_mean_operator(s: &CovMatrix, part: Partition) -> Result<CoefMatrix> {
    let chol = xx_factor(s, part)?;
    Ok(coef_from_factor(s, part, &chol))
}

/// `ν(Σ) = Σ_YY − Σ_YX Σ_XX⁻¹ Σ_XY`.
pub fn cond_variance(s: &CovMatrix, part: Partition) -> Result<CovMatrix> {
    Ok(cond_gaussian(s, part)?.1)
}

/// `(ψ(Σ), ν(Σ))` sharing one factorisation of `Σ_XX`.
pub fn cond_gaussian(s: &CovMatrix, part: Partition) -> Result<(CoefMatrix, CovMatrix)> {
    let chol = xx_factor(s, part)?;
    let c = coef_from_factor(s, part, &chol);
    let v = residual_variance(s, part, &c);
    Ok((c, v))
}

/// Adjusted tapering estimator of covariance `T_k^(ε)(S)`.
pub fn adjusted_taper(s: &CovMatrix, params: TaperParams) -> Result<CovMatrix> {
    pd_adjust(&taper(s, params.k()), params.epsilon())
}

/// Adjusted banding estimator of covariance `B_k^(ε)(S)`.
pub fn adjusted_band(s: &CovMatrix, k: usize, epsilon: f64) -> Result<CovMatrix> {
    pd_adjust(&band(s, k), epsilon)
}

/// Tapering estimator `ψ(T_k^(ε)(S))`.
pub fn tapering_estimator(s: &CovMatrix, params: TaperParams, part: Partition) -> Result<CoefMatrix> {
    part.check(s)?;
    cond_mean_operator(&adjusted_taper(s, params)?, part)
}

/// Blockwise tapering estimator `T_k(S)_YX · Λ^(ε)(T_k(S)_XX; b)`, `b = 2⌊a k ln k⌋`.
///
/// Only the last `b` covariates enter; the first `p0 − b` columns of the
/// result are exact zeros.
pub fn blockwise_estimator(s: &CovMatrix, params: BlockwiseParams, part: Partition) -> Result<CoefMatrix> {
    part.check(s)?;
    let t = taper(s, params.k());
    blockwise_from_tapered(&t, params, part)
}

fn blockwise_from_tapered(t: &CovMatrix, params: BlockwiseParams, part: Partition) -> Result<CoefMatrix> {
    let (p0, q) = (part.p0, part.q());
    let b = params.block_size(p0);
    let xx = t.principal(0..p0);
    let chol = trailing_block_factor(&xx, b, params.epsilon())?;
    let off = p0 - b;
    let mut c = RectMatrix::zeros(q, p0);
    for r in 0..q {
        let yx = &t.row(p0 + r)[off..p0];
        if yx.iter().all(|&v| v == 0.0) {
            continue;
        }
        let out = &mut c.row_mut(r)[off..];
        out.copy_from_slice(yx);
        chol.solve_in_place(out);
    }
    Ok(c)
}

/// Banding plug-in `ψ(B_k^(ε)(S))`.
pub fn banding_estimator(s: &CovMatrix, k: usize, epsilon: f64, part: Partition) -> Result<CoefMatrix> {
    part.check(s)?;
    cond_mean_operator(&adjusted_band(s, k, epsilon)?, part)
}

/// Spectral-norm loss `‖Ĉ − C‖₂`.
pub fn loss(c_hat: &CoefMatrix, c_true: &CoefMatrix) -> Result<f64> {
    spectral_norm(&c_hat.sub(c_true)?)
}

/// A covariance-based estimator of the conditional mean operator with its
/// tuning parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Estimator {
    Tapering(TaperParams),
    Blockwise(BlockwiseParams),
    Banding { k: usize, epsilon: f64 },
    /// Plain `ψ(S)` with no regularisation.
    SampleCovariance,
}

impl Estimator {
    pub fn fit(&self, s: &CovMatrix, part: Partition) -> Result<CoefMatrix> {
        match *self {
            Estimator::Tapering(p) => tapering_estimator(s, p, part),
            Estimator::Blockwise(p) => blockwise_estimator(s, p, part),
            Estimator::Banding { k, epsilon } => banding_estimator(s, k, epsilon, part),
            Estimator::SampleCovariance => cond_mean_operator(s, part),
        }
    }

    /// Conditional mean operator and conditional variance defining the
    /// predictive Gaussian `Y | X`. The blockwise estimator borrows the
    /// conditional variance of the tapering estimator with the same `(k, ε)`.
    pub fn predictive(&self, s: &CovMatrix, part: Partition) -> Result<(CoefMatrix, CovMatrix)> {
        part.check(s)?;
        match *self {
            Estimator::Tapering(p) => cond_gaussian(&adjusted_taper(s, p)?, part),
            Estimator::Blockwise(p) => {
                let t = taper(s, p.k());
                let c = blockwise_from_tapered(&t, p, part)?;
                let adjusted = pd_adjust(&t, p.epsilon())?;
                let (_, v) = cond_gaussian(&adjusted, part)?;
                Ok((c, v))
            }
            Estimator::Banding { k, epsilon } => cond_gaussian(&adjusted_band(s, k, epsilon)?, part),
            Estimator::SampleCovariance => cond_gaussian(s, part),
        }
    }

    /// Largest `|i − j|` of the covariance entries the estimator reads, if limited.
    pub fn bandwidth(&self) -> Option<usize> {
        match *self {
            Estimator::Tapering(p) => Some(p.k() - 1),
            Estimator::Blockwise(p) => Some(p.k() - 1),
            Estimator::Banding { k, .. } => Some(k),
            Estimator::SampleCovariance => None,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Estimator::Tapering(p) => format!("tapering(k={}, eps={})", p.k(), p.epsilon()),
            Estimator::Blockwise(p) => format!("blockwise(k={}, a={}, eps={})", p.k(), p.a(), p.epsilon()),
            Estimator::Banding { k, epsilon } => format!("banding(k={k}, eps={epsilon})"),
            Estimator::SampleCovariance => "sample-covariance".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(rows: &[Vec<f64>]) -> CovMatrix {
        CovMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn sample_covariance_examples() {
        let z = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(sample_covariance(&z).unwrap(), cov(&[vec![1.0, 0.0], vec![0.0, 0.0]]));
        let z = DataMatrix::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(sample_covariance(&z).unwrap(), cov(&[vec![4.0]]));
        let z = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(sample_covariance(&z).unwrap(), cov(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
        assert!(sample_covariance(&DataMatrix::empty(2)).is_err());
    }

    #[test]
    fn centered_covariance_removes_mean() {
        let z = DataMatrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        let s = sample_covariance_centered(&z).unwrap();
        assert_eq!(s, cov(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));
    }

    #[test]
    fn cond_mean_examples() {
        let part = Partition::new(2, 1).unwrap();
        let c = cond_mean_operator(&cov(&[vec![4.0, 2.0], vec![2.0, 3.0]]), part).unwrap();
        assert!((c.get(0, 0) - 0.5).abs() < 1e-15);
        let c = cond_mean_operator(&cov(&[vec![1.0, 0.6], vec![0.6, 1.0]]), part).unwrap();
        assert!((c.get(0, 0) - 0.6).abs() < 1e-15);
        let block = CovMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let c = cond_mean_operator(&block, Partition::new(3, 2).unwrap()).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn cond_variance_examples() {
        let part = Partition::new(2, 1).unwrap();
        let v = cond_variance(&cov(&[vec![1.0, 0.5], vec![0.5, 1.0]]), part).unwrap();
        assert!((v.get(0, 0) - 0.75).abs() < 1e-15);
        let v = cond_variance(&CovMatrix::identity(3), Partition::new(3, 2).unwrap()).unwrap();
        assert_eq!(v.get(0, 0), 1.0);
        let block = CovMatrix::from_fn(4, |i, j| match (i < 2, j < 2) {
            (true, true) => if i == j { 2.0 } else { 0.5 },
            (false, false) => if i == j { 3.0 } else { 1.0 },
            _ => 0.0,
        });
        let part = Partition::new(4, 2).unwrap();
        assert!(cond_variance(&block, part).unwrap().max_abs_diff(&block.principal(2..4)) < 1e-15);
    }

    #[test]
    fn singular_covariate_block_is_an_error() {
        let s = cov(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        let err = cond_mean_operator(&s, Partition::new(2, 1).unwrap()).unwrap_err();
        assert!(err.is_numerical());
        // epsilon = 0 never regularises silently
        let err = tapering_estimator(&s, TaperParams::new(2, 0.0).unwrap(), Partition::new(2, 1).unwrap());
        assert!(err.is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, 0).is_err());
        assert!(Partition::new(3, 3).is_err());
        let p = Partition::new(5, 3).unwrap();
        assert_eq!(p.q(), 2);
        let err = cond_mean_operator(&CovMatrix::identity(4), p).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn tapering_examples() {
        let part = Partition::new(4, 2).unwrap();
        let c = tapering_estimator(&CovMatrix::identity(4), TaperParams::new(3, 0.5).unwrap(), part).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let part = Partition::new(2, 1).unwrap();
        let s = cov(&[vec![1.0, 0.6], vec![0.6, 1.0]]);
        let c = tapering_estimator(&s, TaperParams::new(4, 0.0).unwrap(), part).unwrap();
        assert!((c.get(0, 0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn blockwise_identity_and_sparsity() {
        let part = Partition::new(6, 4).unwrap();
        let params = BlockwiseParams::new(2, 1.5, 0.5).unwrap(); // b = 2⌊3 ln 2⌋ = 4
        let c = blockwise_estimator(&CovMatrix::identity(6), params, part).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let s = CovMatrix::from_fn(6, |i, j| 0.5f64.powi((j - i) as i32));

        let params = BlockwiseParams::new(3, 0.5, 0.5).unwrap(); // b = 2⌊1.5 ln 3⌋ = 2
        let c = blockwise_estimator(&s, params, part).unwrap();
        for r in 0..2 {
            assert_eq!(c.get(r, 0), 0.0);
            assert_eq!(c.get(r, 1), 0.0);
        }
    }

    #[test]
    fn loss_examples() {
        let a = RectMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(loss(&a, &a).unwrap(), 0.0);
        let b = RectMatrix::from_rows(&[vec![-2.0, -2.0]]).unwrap();
        assert!((loss(&a, &b).unwrap() - 5.0).abs() < 1e-12);
        assert!(loss(&a, &RectMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn predictive_blockwise_uses_tapering_variance() {
        let s = CovMatrix::from_fn(6, |i, j| 0.6f64.powi((j - i) as i32));
        let part = Partition::new(6, 4).unwrap();
        let bw = BlockwiseParams::new(3, 0.5, 0.5).unwrap();
        let (_, v_block) = Estimator::Blockwise(bw).predictive(&s, part).unwrap();
        let (_, v_taper) = Estimator::Tapering(bw.taper()).predictive(&s, part).unwrap();
        assert_eq!(v_block, v_taper);
    }
}
