//! Inverse-Wishart initial posterior and post-processed posteriors.
//!
//! Parameterisation: `IW_p(B, ν)` has density `∝ |Σ|^{-ν/2} exp(-tr(Σ⁻¹B)/2)`,
//! so `Σ⁻¹ ~ W_p(B⁻¹, ν − p − 1)` and `ν > 2p` is required. The conjugate
//! update of `IW_p(B₀, ν₀)` with `n` mean-zero observations is
//! `IW_p(B₀ + n S_n, ν₀ + n)`.
//!
//! Posterior draws are produced by mapping each inverse-Wishart sample through
//! a [`PostProcess`] function. Draw `d` always comes from
//! `rng::substream(seed, POSTERIOR, d)`, so results do not depend on the
//! thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{loss, scatter, CoefMatrix, DataMatrix, Estimator};
use crate::linalg::{dot, Cholesky, CovMatrix, RectMatrix};
use crate::rng::{domain, substream, Stream};

/// Draws are summed in fixed chunks of this size, then chunk sums in order.
const SUM_CHUNK: usize = 16;

/// Scale matrix and degrees of freedom of an inverse-Wishart law.
#[derive(Debug, Clone, PartialEq)]
pub struct IwParams {
    scale: CovMatrix,
    df: f64,
}

impl IwParams {
    pub fn new(scale: CovMatrix, df: f64) -> Result<Self> {
        let p = scale.dim() as f64;
        if !(df > 2.0 * p) || !df.is_finite() {
            return Err(Error::invalid(format!("inverse-Wishart df must exceed 2p = {}, got {df}", 2.0 * p)));
        }
        Cholesky::new(&scale)?;
        Ok(IwParams { scale, df })
    }

    /// `B₀ = I_p`, `ν₀ = 2p + 3`.
    pub fn default_prior(p: usize) -> Self {
        IwParams { scale: CovMatrix::identity(p), df: (2 * p + 3) as f64 }
    }

    pub fn scale(&self) -> &CovMatrix {
        &self.scale
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }
}

/// Conjugate update: scale `B₀ + Σ z zᵀ`, df `ν₀ + n`.
pub fn iw_posterior(prior: &IwParams, z: &DataMatrix) -> Result<IwParams> {
    if z.p() != prior.dim() {
        return Err(Error::shape("iw_posterior", prior.dim(), z.p()));
    }
    if z.n() == 0 {
        return Ok(prior.clone());
    }
    let scale = prior.scale.add(&scatter(z))?;
    Ok(IwParams { scale, df: prior.df + z.n() as f64 })
}

/// Lower-triangular Bartlett factor with `χ²_{df−i}` diagonal (row-major).
fn bartlett(p: usize, df: f64, rng: &mut Stream) -> Vec<f64> {
    let mut a = vec![0.0; p * p];
    for i in 0..p {
        rng.fill_normal(&mut a[i * p..i * p + i]);
        a[i * p + i] = rng.chi_square(df - i as f64).sqrt();
    }
    a
}

/// One draw from `W_p(scale, df)` via the Bartlett decomposition
/// `W = L A Aᵀ Lᵀ`, `scale = L Lᵀ`. Requires `df > p − 1`.
pub fn wishart_sample(scale: &CovMatrix, df: f64, rng: &mut Stream) -> Result<CovMatrix> {
    let p = scale.dim();
    if !(df > p as f64 - 1.0) || !df.is_finite() {
        return Err(Error::invalid(format!("Wishart df must exceed p - 1 = {}, got {df}", p - 1)));
    }
    let chol = Cholesky::new(scale)?;
    let a = bartlett(p, df, rng);
    // G = L A, lower triangular
    let mut g = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            g[i * p + j] = (j..=i).map(|l| chol.l(i, l) * a[l * p + j]).sum();
        }
    }
    let mut w = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let v = dot(&g[i * p..i * p + j + 1], &g[j * p..j * p + j + 1]);
            w[i * p + j] = v;
            w[j * p + i] = v;
        }
    }
    Ok(CovMatrix::from_symmetric_unchecked(p, w))
}

/// One draw from `IW_p(B, ν)`: `W ~ W_p(B⁻¹, ν − p − 1)`, returned as `W⁻¹`.
pub fn iw_sample(params: &IwParams, rng: &mut Stream) -> Result<CovMatrix> {
    Ok(IwSampler::new(params)?.sample(rng))
}

/// Reusable inverse-Wishart sampler.
///
/// With `B = U Uᵀ` (`U` upper triangular) and Bartlett factor `A`,
/// `W = U⁻ᵀ A Aᵀ U⁻¹ ~ W_p(B⁻¹, m)` and `W⁻¹ = V Vᵀ` with `V = U A⁻ᵀ`.
/// `V` is obtained by forward substitution, never by explicit inversion.
#[derive(Debug, Clone)]
pub struct IwSampler {
    p: usize,
    upper: Vec<f64>,
    precision_df: f64,
}

impl IwSampler {
    pub fn new(params: &IwParams) -> Result<Self> {
        let p = params.dim();
        // U from the Cholesky factor of the index-reversed scale.
        let rev = CovMatrix::from_fn(p, |i, j| params.scale.get(p - 1 - i, p - 1 - j));
        let chol = Cholesky::new(&rev)?;
        let mut upper = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                upper[i * p + j] = chol.l(p - 1 - i, p - 1 - j);
            }
        }
        Ok(IwSampler { p, upper, precision_df: params.df - p as f64 - 1.0 })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Upper-triangular `V` with `Σ = V Vᵀ`, row-major.
    ///
    /// Rows of `V` are solved four at a time. The bulk of the substitution is
    /// a 4×4 register tile over column-interleaved copies of `A` and of the
    /// partial solutions.
    fn factor(&self, rng: &mut Stream) -> Vec<f64> {
        const TR: usize = 4;
        const TU: usize = 4;
        let p = self.p;
        let a = bartlett(p, self.precision_df, rng);
        // packed[(g p + l) TU + u] = A[TU g + u][l], strictly below the diagonal
        let mut packed = vec![0.0; p.div_ceil(TU) * TU * p];
        for r in 0..p {
            let (g, u) = (r / TU, r % TU);
            for (l, &x) in a[r * p..r * p + r].iter().enumerate() {
                packed[(g * p + l) * TU + u] = x;
            }
        }
        let mut v = vec![0.0; p * p];
        // xs[l TR + t]: entry l of the solution for row c0 + t of V
        let mut xs = vec![0.0; TR * p];
        for c0 in (0..p).step_by(TR) {
            let rows = (p - c0).min(TR);
            xs[c0 * TR..].fill(0.0);
            let g0 = c0 / TU;
            for g in g0..p.div_ceil(TU) {
                let r0 = g * TU;
                // tile over l in c0..mid, then the triangle mid..r per row
                let mid = r0.max(c0);
                let mut acc = [[0.0f64; TU]; TR];
                let xl = &xs[c0 * TR..mid * TR];
                let al = &packed[(g * p + c0) * TU..(g * p + mid) * TU];
                for (xv, av) in xl.chunks_exact(TR).zip(al.chunks_exact(TU)) {
                    let xv: &[f64; TR] = xv.try_into().expect("chunk");
                    let av: &[f64; TU] = av.try_into().expect("chunk");
                    for t in 0..TR {
                        for u in 0..TU {
                            acc[t][u] += xv[t] * av[u];
                        }
                    }
                }
                for u in 0..(p - r0).min(TU) {
                    let r = r0 + u;
                    if r < c0 {
                        continue;
                    }
                    let diag = a[r * p + r];
                    for (t, acc_t) in acc.iter().enumerate().take(rows) {
                        let mut s = acc_t[u];
                        for m in mid..r {
                            s += a[r * p + m] * xs[m * TR + t];
                        }
                        xs[r * TR + t] = (self.upper[(c0 + t) * p + r] - s) / diag;
                    }
                }
            }
            for t in 0..rows {
                let c = c0 + t;
                for j in c..p {
                    v[c * p + j] = xs[j * TR + t];
                }
            }
        }
        v
    }

    /// A full draw of `Σ`.
    pub fn sample(&self, rng: &mut Stream) -> CovMatrix {
        self.sample_band(self.p, rng)
    }

    /// A draw of `Σ` with only the entries `|i − j| ≤ w` filled in.
    ///
    /// Those entries are identical to the corresponding entries of
    /// [`sample`](Self::sample) for the same stream; the rest are zero.
    pub fn sample_band(&self, w: usize, rng: &mut Stream) -> CovMatrix {
        let p = self.p;
        let v = self.factor(rng);
        let mut s = vec![0.0; p * p];
        for i in 0..p {
            for j in i..(i + w + 1).min(p) {
                let val = dot(&v[i * p + j..(i + 1) * p], &v[j * p + j..(j + 1) * p]);
                s[i * p + j] = val;
                s[j * p + i] = val;
            }
        }
        CovMatrix::from_symmetric_unchecked(p, s)
    }
}

/// Map from a covariance draw to a coefficient matrix.
pub trait PostProcess: Sync {
    fn apply(&self, sigma: &CovMatrix) -> Result<CoefMatrix>;

    /// Largest `|i − j|` of the entries `apply` reads; `None` reads everything.
    fn bandwidth(&self) -> Option<usize> {
        None
    }
}

/// Tapering (`ψ∘T_k^(ε)`), blockwise (`φ(·; 2⌊ak ln k⌋, ε)`), banding
/// (`ψ∘B_k^(ε)`) or plain `ψ` post-processing on a fixed partition.
#[derive(Debug, Clone, Copy)]
pub struct Post {
    pub estimator: Estimator,
    pub partition: crate::estimators::Partition,
}

impl PostProcess for Post {
    fn apply(&self, sigma: &CovMatrix) -> Result<CoefMatrix> {
        self.estimator.fit(sigma, self.partition)
    }

    fn bandwidth(&self) -> Option<usize> {
        self.estimator.bandwidth()
    }
}

/// Adapter for closures.
pub struct FnPost<F>(pub F);

impl<F> PostProcess for FnPost<F>
where
    F: Fn(&CovMatrix) -> Result<CoefMatrix> + Sync,
{
    fn apply(&self, sigma: &CovMatrix) -> Result<CoefMatrix> {
        (self.0)(sigma)
    }
}

/// Post-processed posterior sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub draws: Vec<CoefMatrix>,
    pub seed: u64,
}

impl PosteriorDraws {
    pub fn count(&self) -> usize {
        self.draws.len()
    }
}

fn draw_sigma(sampler: &IwSampler, bandwidth: Option<usize>, seed: u64, index: usize) -> CovMatrix {
    let mut rng = substream(seed, domain::POSTERIOR, index as u64);
    match bandwidth {
        Some(w) if w < sampler.dim() => sampler.sample_band(w, &mut rng),
        _ => sampler.sample(&mut rng),
    }
}

/// `N` post-processed draws; draw `d` is `post(Σ_d)` with `Σ_d ~ IW(params)`.
pub fn ppp(params: &IwParams, post: &dyn PostProcess, n: usize, seed: u64) -> Result<PosteriorDraws> {
    if n == 0 {
        return Err(Error::invalid("number of posterior draws must be >= 1"));
    }
    let sampler = IwSampler::new(params)?;
    let bw = post.bandwidth();
    let draws = (0..n)
        .into_par_iter()
        .map(|d| {
            post.apply(&draw_sigma(&sampler, bw, seed, d))
                .map_err(|e| Error::Draw { index: d, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws { draws, seed })
}

fn sum_in_order<'a>(items: impl Iterator<Item = &'a CoefMatrix>, shape: (usize, usize)) -> CoefMatrix {
    let mut total = RectMatrix::zeros(shape.0, shape.1);
    for m in items {
        total.add_assign(m);
    }
    total
}

/// Element-wise average of the draws.
pub fn posterior_mean(d: &PosteriorDraws) -> Result<CoefMatrix> {
    let first = d.draws.first().ok_or_else(|| Error::invalid("posterior mean of zero draws"))?;
    let shape = first.shape();
    if d.draws.iter().any(|m| m.shape() != shape) {
        return Err(Error::invalid("posterior draws have different shapes"));
    }
    let chunks: Vec<CoefMatrix> = d.draws.chunks(SUM_CHUNK).map(|c| sum_in_order(c.iter(), shape)).collect();
    Ok(sum_in_order(chunks.iter(), shape).scaled(1.0 / d.count() as f64))
}

/// Posterior means of several post-processing functions applied to the
/// same `N` draws, without storing the draws.
///
/// Bit-identical to `posterior_mean(&ppp(params, post, n, seed))` for each
/// `post`.
pub fn ppp_means(params: &IwParams, posts: &[&dyn PostProcess], n: usize, seed: u64) -> Result<Vec<CoefMatrix>> {
    if n == 0 || posts.is_empty() {
        return Err(Error::invalid("need at least one draw and one post-processing function"));
    }
    let sampler = IwSampler::new(params)?;
    let bw = posts.iter().map(|p| p.bandwidth()).try_fold(0usize, |m, b| b.map(|b| m.max(b)));
    let chunk_sums = |chunk: usize| -> Result<Vec<CoefMatrix>> {
        let mut sums: Vec<Option<CoefMatrix>> = vec![None; posts.len()];
        for d in chunk * SUM_CHUNK..((chunk + 1) * SUM_CHUNK).min(n) {
            let sigma = draw_sigma(&sampler, bw, seed, d);
            for (sum, post) in sums.iter_mut().zip(posts) {
                let c = post.apply(&sigma).map_err(|e| Error::Draw { index: d, source: Box::new(e) })?;
                match sum {
                    Some(s) => s.add_assign(&c),
                    None => {
                        // chunk sums start from zero, as in `posterior_mean`
                        let mut z = RectMatrix::zeros(c.rows(), c.cols());
                        z.add_assign(&c);
                        *sum = Some(z);
                    }
                }
            }
        }
        Ok(sums.into_iter().map(|s| s.expect("chunk is non-empty")).collect())
    };
    let n_chunks = n.div_ceil(SUM_CHUNK);
    let wave = 2 * rayon::current_num_threads().max(1);
    let mut totals: Option<Vec<CoefMatrix>> = None;
    for start in (0..n_chunks).step_by(wave) {
        let batch: Vec<Vec<CoefMatrix>> =
            (start..(start + wave).min(n_chunks)).into_par_iter().map(chunk_sums).collect::<Result<_>>()?;
        for sums in batch {
            match &mut totals {
                None => {
                    totals = Some(
                        sums.iter()
                            .map(|s| {
                                let mut z = RectMatrix::zeros(s.rows(), s.cols());
                                z.add_assign(s);
                                z
                            })
                            .collect(),
                    )
                }
                Some(t) => t.iter_mut().zip(&sums).for_each(|(t, s)| t.add_assign(s)),
            }
        }
    }
    Ok(totals.expect("n >= 1").into_iter().map(|t| t.scaled(1.0 / n as f64)).collect())
}

/// Monte-Carlo P-loss: mean over draws of `‖draw − C‖²`.
pub fn p_loss(d: &PosteriorDraws, c_true: &CoefMatrix) -> Result<f64> {
    if d.draws.is_empty() {
        return Err(Error::invalid("P-loss of zero draws"));
    }
    let mut total = 0.0;
    for m in &d.draws {
        total += loss(m, c_true)?.powi(2);
    }
    Ok(total / d.count() as f64)
}
