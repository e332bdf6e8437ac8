//! Naive reference implementations written directly from the definitions,
//! with explicit 1-based indices. Matrices are `Vec<Vec<f64>>`.
#![allow(dead_code, clippy::needless_range_loop, clippy::int_plus_one)]

use bandtaper::linalg::{CovMatrix, RectMatrix};
use bandtaper::rng::{substream, Stream};

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn cov(m: &Mat) -> CovMatrix {
    CovMatrix::from_rows(m).unwrap()
}

pub fn rect(m: &Mat) -> RectMatrix {
    RectMatrix::from_rows(m).unwrap()
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max)
}

/// `A(i, j)` with 1-based indices.
fn at(a: &Mat, i: usize, j: usize) -> f64 {
    a[i - 1][j - 1]
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, l) = (a.len(), b.len(), b[0].len());
    let mut c = zeros(n, l);
    for i in 0..n {
        for j in 0..l {
            for t in 0..m {
                c[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// `A[r1..=r2, c1..=c2]`, 1-based inclusive.
pub fn slice(a: &Mat, r1: usize, r2: usize, c1: usize, c2: usize) -> Mat {
    (r1..=r2).map(|i| (c1..=c2).map(|j| at(a, i, j)).collect()).collect()
}

/// Gauss–Jordan inversion with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a.iter().enumerate().map(|(i, r)| {
        let mut row = r.clone();
        row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
        row
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap()).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular matrix in oracle inverse");
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// All eigenvalues by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn lambda_min(a: &Mat) -> f64 {
    jacobi_eigenvalues(a)[0]
}

/// Largest singular value via the eigenvalues of `AᵀA`.
pub fn spectral_norm(a: &Mat) -> f64 {
    let g = matmul(&transpose(a), a);
    jacobi_eigenvalues(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `w_ij = 1` for `|i−j| ≤ k/2`, `2 − |i−j|/(k/2)` for `k/2 < |i−j| < k`, 0 otherwise.
pub fn taper(s: &Mat, k: usize) -> Mat {
    let p = s.len();
    let half = k as f64 / 2.0;
    let mut out = zeros(p, p);
    for i in 1..=p {
        for j in 1..=p {
            let d = (i as f64 - j as f64).abs();
            let w = if d <= half {
                1.0
            } else if d < k as f64 {
                2.0 - d / half
            } else {
                0.0
            };
            out[i - 1][j - 1] = w * at(s, i, j);
        }
    }
    out
}

pub fn band(s: &Mat, k: usize) -> Mat {
    let p = s.len();
    let mut out = zeros(p, p);
    for i in 1..=p {
        for j in 1..=p {
            if i.abs_diff(j) <= k {
                out[i - 1][j - 1] = at(s, i, j);
            }
        }
    }
    out
}

pub fn pd_adjust(a: &Mat, eps: f64) -> Mat {
    let shift = (eps - lambda_min(a)).max(0.0);
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] += shift;
    }
    out
}

/// `M_l^(k)`: rows and columns `max(l,1) ..= min(l+k−1, q)`.
pub fn sub_block(s: &Mat, l: i64, k: usize) -> Mat {
    let q = s.len() as i64;
    let lo = l.max(1) as usize;
    let hi = (l + k as i64 - 1).min(q) as usize;
    slice(s, lo, hi, lo, hi)
}

/// `M*_l^(k)`: entries `(i, j)` with `l ≤ i, j ≤ l+k−1`, zero elsewhere.
pub fn embedded_block(s: &Mat, l: i64, k: usize) -> Mat {
    let q = s.len();
    let mut out = zeros(q, q);
    for i in 1..=q {
        for j in 1..=q {
            let inside = |x: usize| (x as i64) >= l && (x as i64) <= l + k as i64 - 1;
            if inside(i) && inside(j) {
                out[i - 1][j - 1] = at(s, i, j);
            }
        }
    }
    out
}

/// `S*(k) = Σ_{l=1−k}^{q} M*_l^(k)`.
pub fn block_sum(s: &Mat, k: usize) -> Mat {
    let q = s.len();
    let mut out = zeros(q, q);
    for l in (1 - k as i64)..=(q as i64) {
        let m = embedded_block(s, l, k);
        for i in 0..q {
            for j in 0..q {
                out[i][j] += m[i][j];
            }
        }
    }
    out
}

/// `Λ^(ε)(A; b)`.
pub fn lambda_op(a: &Mat, b: usize, eps: f64) -> Mat {
    let p0 = a.len();
    let inv = inverse(&pd_adjust(&slice(a, p0 - b + 1, p0, p0 - b + 1, p0), eps));
    let mut out = zeros(p0, p0);
    for i in 1..=b {
        for j in 1..=b {
            out[p0 - b + i - 1][p0 - b + j - 1] = inv[i - 1][j - 1];
        }
    }
    out
}

/// `Σ_YX Σ_XX⁻¹` with `Σ_XX = Σ[1:p0, 1:p0]`, `Σ_YX = Σ[p0+1:p, 1:p0]`.
pub fn psi(s: &Mat, p0: usize) -> Mat {
    let p = s.len();
    matmul(&slice(s, p0 + 1, p, 1, p0), &inverse(&slice(s, 1, p0, 1, p0)))
}

/// `Σ_YY − Σ_YX Σ_XX⁻¹ Σ_XY`.
pub fn nu(s: &Mat, p0: usize) -> Mat {
    let p = s.len();
    let c = psi(s, p0);
    let cxy = matmul(&c, &slice(s, 1, p0, p0 + 1, p));
    let yy = slice(s, p0 + 1, p, p0 + 1, p);
    yy.iter().zip(&cxy).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect()
}

/// `T_k(S)_YX Λ^(ε){T_k(S)_XX; b}`.
pub fn phi(s: &Mat, p0: usize, k: usize, b: usize, eps: f64) -> Mat {
    let p = s.len();
    let t = taper(s, k);
    matmul(&slice(&t, p0 + 1, p, 1, p0), &lambda_op(&slice(&t, 1, p0, 1, p0), b, eps))
}

/// `2⌊a k ln k⌋` capped at `p0`.
pub fn block_size(k: usize, a: f64, p0: usize) -> usize {
    ((2.0 * (a * k as f64 * (k as f64).ln()).floor()) as usize).min(p0)
}

pub fn stream(seed: u64) -> Stream {
    substream(seed, 0xfeed, 0)
}

/// Random SPD matrix `G Gᵀ/p + 0.1 I`.
pub fn random_pd(p: usize, rng: &mut Stream) -> Mat {
    let g: Mat = (0..p).map(|_| (0..p).map(|_| rng.normal()).collect()).collect();
    let mut s = matmul(&g, &transpose(&g));
    for (i, row) in s.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= p as f64;
        }
        row[i] += 0.1;
    }
    s
}

/// Random symmetric matrix with standard normal entries.
pub fn random_symmetric(p: usize, rng: &mut Stream) -> Mat {
    let mut s = zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = rng.normal();
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    s
}
