//! Matrix transforms: tapering, banding, sub-blocks, positive-definite
//! adjustment and the trailing-block inverse `Λ^(ε)(A; b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen_min, Cholesky, CovMatrix};

/// Eigenvalue slack under which a matrix already counts as adjusted.
const ADJUST_SLACK: f64 = 1e-12;

/// Bandwidth `k` and adjustment level `ε` of the adjusted tapering estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaperParams {
    k: usize,
    epsilon: f64,
}

impl TaperParams {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::invalid("taper bandwidth k must be >= 1"));
        }
        check_epsilon(epsilon)?;
        Ok(TaperParams { k, epsilon })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Parameters `(k, a, ε)` of the blockwise tapering estimator.
///
/// The retained block size is `b = 2⌊a·k·ln k⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockwiseParams {
    k: usize,
    a: f64,
    epsilon: f64,
}

impl BlockwiseParams {
    pub fn new(k: usize, a: f64, epsilon: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("blockwise bandwidth k must be >= 2 so that ln k > 0"));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::invalid(format!("blockwise scale a must be positive, got {a}")));
        }
        check_epsilon(epsilon)?;
        let params = BlockwiseParams { k, a, epsilon };
        if params.raw_block_size() < 1 {
            return Err(Error::invalid(format!("2⌊a·k·ln k⌋ = 0 for k={k}, a={a}")));
        }
        Ok(params)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn taper(&self) -> TaperParams {
        TaperParams { k: self.k, epsilon: self.epsilon }
    }

    /// `2⌊a·k·ln k⌋` before clamping.
    pub fn raw_block_size(&self) -> usize {
        let k = self.k as f64;
        2 * (self.a * k * k.ln()).floor() as usize
    }

    /// Block size for `p0` covariates, clamped to `p0` with a warning.
    pub fn block_size(&self, p0: usize) -> usize {
        let b = self.raw_block_size();
        if b > p0 {
            log::debug!("blockwise block size 2⌊a·k·ln k⌋ = {b} exceeds p0 = {p0}; clamped to p0");
            p0
        } else {
            b
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("adjustment level epsilon must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// Taper weight for index offset `d = |i − j|`.
#[inline]
pub(crate) fn offset_weight(d: usize, k: usize) -> f64 {
    if 2 * d <= k {
        1.0
    } else if d < k {
        (2 * (k - d)) as f64 / k as f64
    } else {
        0.0
    }
}

/// Tapering weight `w_ij^(k)` for 1-based indices `i`, `j`.
///
/// `1` for `|i−j| ≤ k/2`, `2 − |i−j|/(k/2)` for `k/2 < |i−j| < k`, else `0`.
/// The boundary `|i−j| = k/2` takes weight one.
pub fn taper_weight(i: usize, j: usize, k: usize) -> f64 {
    offset_weight(i.abs_diff(j), k)
}

/// Entrywise product of `s` with the taper weights; exact zeros for `|i−j| ≥ k`.
pub fn taper(s: &CovMatrix, k: usize) -> CovMatrix {
    let n = s.dim();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for d in 0..k.min(n - i) {
            let j = i + d;
            let v = offset_weight(d, k) * s.get(i, j);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    CovMatrix::from_symmetric_unchecked(n, data)
}

/// Hard banding: entries with `|i−j| > k` set to zero.
pub fn band(s: &CovMatrix, k: usize) -> CovMatrix {
    let n = s.dim();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..(i + k + 1).min(n) {
            let v = s.get(i, j);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    CovMatrix::from_symmetric_unchecked(n, data)
}

/// Diagonal shift `([ε − λ_min(A)] ∨ 0)` that [`pd_adjust`] would apply.
pub fn pd_shift(a: &CovMatrix, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let min = sym_eigen_min(a)?;
    if min >= epsilon - ADJUST_SLACK * epsilon.abs().max(1.0) {
        Ok(0.0)
    } else {
        Ok(epsilon - min)
    }
}

/// `A + ([ε − λ_min(A)] ∨ 0)·I`. Returns `A` unchanged when `λ_min(A) ≥ ε`.
pub fn pd_adjust(a: &CovMatrix, epsilon: f64) -> Result<CovMatrix> {
    let shift = pd_shift(a, epsilon)?;
    Ok(if shift == 0.0 { a.clone() } else { a.shifted(shift) })
}

/// 1-based clipped window `(l ∨ 1) ..= ((l+k−1) ∧ q)` as a 0-based range.
fn window(q: usize, l: i64, k: usize) -> Option<std::ops::Range<usize>> {
    let lo = l.max(1);
    let hi = (l + k as i64 - 1).min(q as i64);
    (k >= 1 && hi >= lo).then(|| (lo - 1) as usize..hi as usize)
}

/// Principal sub-block `M_l^(k)(S)` on 1-based rows/cols `(l∨1)…((l+k−1)∧q)`.
pub fn sub_block(s: &CovMatrix, l: i64, k: usize) -> Result<CovMatrix> {
    let range = window(s.dim(), l, k)
        .ok_or_else(|| Error::invalid(format!("sub-block window l={l}, k={k} is empty for q={}", s.dim())))?;
    Ok(s.principal(range))
}

/// `M_l^{*(k)}(S)`: `S` with everything outside the clipped window zeroed.
pub fn embedded_block(s: &CovMatrix, l: i64, k: usize) -> CovMatrix {
    let n = s.dim();
    let mut out = vec![0.0; n * n];
    if let Some(r) = window(n, l, k) {
        for i in r.clone() {
            for j in r.clone() {
                out[i * n + j] = s.get(i, j);
            }
        }
    }
    CovMatrix::from_symmetric_unchecked(n, out)
}

/// Cholesky factor of the PD-adjusted trailing `b × b` block of `a`.
pub(crate) fn trailing_block_factor(a: &CovMatrix, b: usize, epsilon: f64) -> Result<Cholesky> {
    let p0 = a.dim();
    if b < 1 || b > p0 {
        return Err(Error::invalid(format!("block size b={b} must satisfy 1 <= b <= {p0}")));
    }
    let block = a.principal(p0 - b..p0);
    let adjusted = pd_adjust(&block, epsilon)?;
    Cholesky::try_new(&adjusted).ok_or_else(|| Error::Singular {
        context: format!("trailing {b}x{b} block after adjustment with epsilon={epsilon}"),
        min_eigenvalue: sym_eigen_min(&adjusted).unwrap_or(f64::NAN),
    })
}

/// `Λ^(ε)(A; b)`: zero except the bottom-right `b × b` block, which holds the
/// inverse of the PD-adjusted trailing block of `A`.
pub fn lambda_op(a: &CovMatrix, b: usize, epsilon: f64) -> Result<CovMatrix> {
    let p0 = a.dim();
    let inv = trailing_block_factor(a, b, epsilon)?.inverse();
    let off = p0 - b;
    let mut out = vec![0.0; p0 * p0];
    for i in 0..b {
        for j in 0..b {
            out[(off + i) * p0 + off + j] = inv.get(i, j);
        }
    }
    Ok(CovMatrix::from_symmetric_unchecked(p0, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spd_inverse;

    fn ones(n: usize) -> CovMatrix {
        CovMatrix::from_fn(n, |_, _| 1.0)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(taper_weight(1, 4, 4), 0.5);
        assert_eq!(taper_weight(2, 2, 1), 1.0);
        assert_eq!(taper_weight(1, 5, 4), 0.0);
        // boundary |i-j| = k/2 belongs to the flat part
        assert_eq!(taper_weight(1, 3, 4), 1.0);
    }

    #[test]
    fn taper_examples() {
        let t = taper(&ones(3), 2);
        assert_eq!(t.to_rows(), vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]]);
        let t = taper(&ones(3), 3);
        assert_eq!(t.get(0, 2), 2.0 / 3.0);
        assert_eq!(t.get(0, 1), 1.0);
        let s = CovMatrix::from_fn(5, |i, j| 1.0 / (1.0 + (i + 2 * j) as f64));
        assert_eq!(taper(&s, 8), s);
    }

    #[test]
    fn band_examples() {
        let b = band(&ones(3), 1);
        assert_eq!(b.to_rows(), vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]]);
        let s = CovMatrix::from_fn(4, |i, j| (i * 4 + j) as f64);
        assert_eq!(band(&s, 0), CovMatrix::from_diagonal(&s.diagonal()));
        assert_eq!(band(&s, 3), s);
    }

    #[test]
    fn pd_adjust_examples() {
        let a = CovMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let adj = pd_adjust(&a, 0.5).unwrap();
        let expect = CovMatrix::from_rows(&[vec![1.5, 1.0], vec![1.0, 1.5]]).unwrap();
        assert!(adj.max_abs_diff(&expect) < 1e-12);
        assert_eq!(pd_adjust(&CovMatrix::identity(2), 0.5).unwrap(), CovMatrix::identity(2));
        let d = CovMatrix::from_diagonal(&[0.1, 2.0]);
        assert_eq!(pd_adjust(&d, 0.1).unwrap(), d);
        assert!(pd_adjust(&d, -1.0).is_err());
    }

    #[test]
    fn sub_block_examples() {
        let s = CovMatrix::from_fn(3, |i, j| (10 * (i + 1) + j + 1) as f64);
        assert_eq!(sub_block(&s, 1, 2).unwrap(), s.principal(0..2));
        assert_eq!(sub_block(&s, 3, 2).unwrap(), s.principal(2..3));
        assert_eq!(sub_block(&s, 0, 2).unwrap(), s.principal(0..1));
        assert!(sub_block(&s, -5, 2).is_err());
        assert!(sub_block(&s, 4, 2).is_err());
    }

    #[test]
    fn lambda_examples() {
        let a = CovMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let l = lambda_op(&a, 2, 0.5).unwrap();
        assert!(l.max_abs_diff(&CovMatrix::from_diagonal(&[0.0, 0.0, 1.0 / 3.0, 0.25])) < 1e-15);
        let l = lambda_op(&CovMatrix::identity(3), 3, 0.0).unwrap();
        assert!(l.max_abs_diff(&CovMatrix::identity(3)) < 1e-15);
        let l = lambda_op(&CovMatrix::from_diagonal(&[1.0, 0.0]), 1, 0.5).unwrap();
        assert!(l.max_abs_diff(&CovMatrix::from_diagonal(&[0.0, 2.0])) < 1e-12);
        let err = lambda_op(&CovMatrix::from_diagonal(&[1.0, 0.0]), 1, 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn lambda_full_block_is_adjusted_inverse() {
        let a = CovMatrix::from_fn(4, |i, j| if i == j { 1.0 } else { 0.9f64.powi((j - i) as i32) * 0.8 });
        let l = lambda_op(&a, 4, 0.3).unwrap();
        let direct = spd_inverse(&pd_adjust(&a, 0.3).unwrap()).unwrap();
        assert!(l.max_abs_diff(&direct) < 1e-8);
    }

    #[test]
    fn blockwise_block_size() {
        let p = BlockwiseParams::new(2, 5.0, 0.5).unwrap();
        assert_eq!(p.raw_block_size(), 12);
        assert_eq!(p.block_size(400), 12);
        assert_eq!(p.block_size(8), 8);
        assert!(BlockwiseParams::new(1, 5.0, 0.5).is_err());
        assert!(BlockwiseParams::new(2, 0.0, 0.5).is_err());
        // a·k·ln k < 1 leaves an empty block
        assert!(BlockwiseParams::new(2, 0.5, 0.5).is_err());
    }
}
