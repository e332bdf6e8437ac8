//! Extreme eigenvalues of symmetric matrices.
//!
//! Two deterministic routes:
//! * band width `w ≤ p/5`: bisection on the smallest eigenvalue, where each
//!   probe is a banded Cholesky of `A − σI` (succeeds iff `σ < λ_min`);
//! * otherwise: Householder reduction to tridiagonal form followed by
//!   Sturm-sequence bisection.

use super::{bandwidth, dot, Cholesky, CovMatrix, RectMatrix};
use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_eigen_min(a: &CovMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::invalid("non-finite matrix entry in eigenvalue computation"));
    }
    Ok(extreme(a.as_slice(), a.dim(), 1.0))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eigen_max(a: &CovMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::invalid("non-finite matrix entry in eigenvalue computation"));
    }
    Ok(-extreme(a.as_slice(), a.dim(), -1.0))
}

/// Largest singular value, via the largest eigenvalue of the smaller Gram matrix.
pub fn spectral_norm(a: &RectMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::invalid("non-finite matrix entry in spectral norm"));
    }
    let (r, c) = a.shape();
    let gram = if r <= c {
        let mut g = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..=i {
                let v = dot(a.row(i), a.row(j));
                g[i * r + j] = v;
                g[j * r + i] = v;
            }
        }
        CovMatrix::from_symmetric_unchecked(r, g)
    } else {
        let mut g = vec![0.0; c * c];
        for k in 0..r {
            let row = a.row(k);
            for (i, &ai) in row.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                for (gij, &aj) in g[i * c..i * c + i + 1].iter_mut().zip(&row[..=i]) {
                    *gij += ai * aj;
                }
            }
        }
        for i in 0..c {
            for j in 0..i {
                g[j * c + i] = g[i * c + j];
            }
        }
        CovMatrix::from_symmetric_unchecked(c, g)
    };
    if gram.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(sym_eigen_max(&gram)?.max(0.0).sqrt())
}

/// `A⁻¹` for symmetric positive definite `A` (λ_min > 1e-12 required).
pub fn spd_inverse(a: &CovMatrix) -> Result<CovMatrix> {
    let min = sym_eigen_min(a)?;
    if min <= 1e-12 {
        return Err(Error::Singular { context: "spd_inverse".into(), min_eigenvalue: min });
    }
    Ok(Cholesky::new(a)?.inverse())
}

/// Smallest eigenvalue of `sign · A`.
fn extreme(a: &[f64], n: usize, sign: f64) -> f64 {
    let w = bandwidth(a, n);
    if w == 0 {
        return (0..n).map(|i| sign * a[i * n + i]).fold(f64::INFINITY, f64::min);
    }
    if n == 2 {
        let (x, y, z) = (sign * a[0], sign * a[1], sign * a[3]);
        let mid = 0.5 * (x + z);
        let rad = (0.25 * (x - z) * (x - z) + y * y).sqrt();
        return mid - rad;
    }
    if 5 * w <= n {
        banded_min(a, n, w, sign)
    } else {
        let (d, e) = tridiagonalize(a, n, sign);
        tridiagonal_kth(&d, &e, 0)
    }
}

fn tolerance(lo: f64, hi: f64) -> f64 {
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    4.0 * f64::EPSILON * scale
}

fn banded_min(a: &[f64], n: usize, w: usize, sign: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let d = sign * a[i * n + i];
        let from = i.saturating_sub(w);
        let to = (i + w + 1).min(n);
        let radius: f64 = (from..to).filter(|&j| j != i).map(|j| a[i * n + j].abs()).sum();
        lo = lo.min(d - radius);
        hi = hi.min(d);
    }
    // Lower band of sign·A in the layout banded_pd uses for L.
    let stride = w + 1;
    let mut band = vec![0.0; n * stride];
    for i in 0..n {
        for j in i.saturating_sub(w)..=i {
            band[i * stride + (j + w - i)] = sign * a[i * n + j];
        }
    }
    let mut work = vec![0.0; n * stride];
    let tol = tolerance(lo, hi);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if banded_pd(&band, n, w, mid, &mut work) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Whether `B − σI` admits a Cholesky factorisation, for `B` and `L` both in
/// band storage: entry `(i, c)` lives at `i*(w+1) + (c + w − i)`, `i − w ≤ c ≤ i`.
fn banded_pd(band: &[f64], n: usize, w: usize, sigma: f64, l: &mut [f64]) -> bool {
    let stride = w + 1;
    for i in 0..n {
        let j0 = i.saturating_sub(w);
        for j in j0..=i {
            let mut s = band[i * stride + (j + w - i)];
            if i == j {
                s -= sigma;
            }
            let lo = j0.max(j.saturating_sub(w));
            let len = j - lo;
            if len > 0 {
                let ri = i * stride + (lo + w - i);
                let rj = j * stride + (lo + w - j);
                s -= dot(&l[ri..ri + len], &l[rj..rj + len]);
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i * stride + w] = s.sqrt();
            } else {
                l[i * stride + (j + w - i)] = s / l[j * stride + w];
            }
        }
    }
    true
}

/// Householder reduction of `sign·A` to tridiagonal `(diag, subdiag)`.
fn tridiagonalize(a: &[f64], n: usize, sign: f64) -> (Vec<f64>, Vec<f64>) {
    let mut m: Vec<f64> = a.iter().map(|v| sign * v).collect();
    let mut e = vec![0.0; n - 1];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let base = k + 1;
        for (t, vt) in v[..len].iter_mut().enumerate() {
            *vt = m[(base + t) * n + k];
        }
        let norm = dot(&v[..len], &v[..len]).sqrt();
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2 = dot(&v[..len], &v[..len]);
        if vnorm2 == 0.0 {
            e[k] = m[base * n + k];
            continue;
        }
        let beta = 2.0 / vnorm2;
        for t in 0..len {
            let row = &m[(base + t) * n + base..(base + t) * n + n];
            p[t] = beta * dot(row, &v[..len]);
        }
        let kk = 0.5 * beta * dot(&p[..len], &v[..len]);
        for t in 0..len {
            p[t] -= kk * v[t];
        }
        for s in 0..len {
            let (vs, ps) = (v[s], p[s]);
            let row = &mut m[(base + s) * n + base..(base + s) * n + n];
            for t in 0..len {
                row[t] -= vs * p[t] + ps * v[t];
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        e[n - 2] = m[(n - 1) * n + (n - 2)];
    }
    let d = (0..n).map(|i| m[i * n + i]).collect();
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() <= pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q.abs() <= pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest (0-based) eigenvalue of a symmetric tridiagonal matrix.
fn tridiagonal_kth(d: &[f64], e: &[f64], k: usize) -> f64 {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let emax = e.iter().fold(1.0f64, |m, v| m.max(v * v));
    let pivmin = f64::MIN_POSITIVE * emax;
    let tol = tolerance(lo, hi);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid, pivmin) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
