//! Monte-Carlo experiment harness.
//!
//! The truth is `Σ₀ = Σ₀* + (floor − λ_min(Σ₀*)) I` with
//! `σ*_ij = ρ |i − j|^{−(α+1)}` off the diagonal and 1 on it. Replication `r`
//! of a study draws its data from `derive_seed(seed, r)`, so every method in
//! a study sees the same data and results do not depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{iw_posterior, posterior_mean, ppp, ppp_means, IwParams, Post, PostProcess};
use crate::error::{Error, Result};
use crate::estimators::{cond_mean_operator, loss, sample_covariance, CoefMatrix, DataMatrix, Estimator, Partition};
use crate::linalg::{spd_inverse, sym_eigen_min, Cholesky, CovMatrix};
use crate::operators::{BlockwiseParams, TaperParams};
use crate::rng::{derive_seed, domain, substream};
use crate::tuning::{loocv_bayes, loocv_frequentist, Direction, Method, TuningGrid};

/// Parameters of the polynomially decaying truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub p: usize,
    pub rho: f64,
    pub alpha: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    0.5
}

impl TruthSpec {
    pub fn new(p: usize, rho: f64, alpha: f64) -> Result<Self> {
        let spec = TruthSpec { p, rho, alpha, floor: default_floor() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::invalid(format!("truth dimension must be >= 2, got {}", self.p)));
        }
        if !(self.alpha > 0.0) || !self.rho.is_finite() || !(self.floor > 0.0) {
            return Err(Error::invalid("truth needs alpha > 0, finite rho and floor > 0"));
        }
        Ok(())
    }
}

/// `Σ₀` with minimum eigenvalue pinned at `spec.floor`.
///
/// The shift `floor − λ_min(Σ₀*)` is applied as is, so it is negative when
/// `λ_min(Σ₀*) > floor`.
pub fn make_sigma0(spec: &TruthSpec) -> Result<CovMatrix> {
    spec.validate()?;
    let star = CovMatrix::from_fn(spec.p, |i, j| {
        if i == j {
            1.0
        } else {
            spec.rho * ((j - i) as f64).powf(-(spec.alpha + 1.0))
        }
    });
    let shift = spec.floor - sym_eigen_min(&star)?;
    Ok(star.shifted(shift))
}

/// `max_j Σ_{|i−j| ≥ k} |σ_ij|`.
pub fn tail_mass(sigma: &CovMatrix, k: usize) -> f64 {
    let p = sigma.dim();
    (0..p)
        .map(|j| (0..p).filter(|&i| i.abs_diff(j) >= k).map(|i| sigma.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Draws rows `L g` with `Σ = L Lᵀ` and `g` standard normal.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    chol: Cholesky,
}

impl GaussianSampler {
    pub fn new(sigma: &CovMatrix) -> Result<Self> {
        Ok(GaussianSampler { chol: Cholesky::new(sigma)? })
    }

    /// `n` rows; row `r` uses `substream(seed, DATA, r)`.
    pub fn sample(&self, n: usize, seed: u64) -> DataMatrix {
        let p = self.chol.dim();
        let mut data = vec![0.0; n * p];
        let mut g = vec![0.0; p];
        for (r, row) in data.chunks_mut(p.max(1)).enumerate().take(n) {
            substream(seed, domain::DATA, r as u64).fill_normal(&mut g);
            for (i, out) in row.iter_mut().enumerate() {
                *out = (0..=i).map(|l| self.chol.l(i, l) * g[l]).sum();
            }
        }
        DataMatrix::new(n, p, data).expect("shape is consistent")
    }
}

/// `n` i.i.d. `N_p(0, Σ)` rows.
pub fn sample_gaussian(sigma: &CovMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    Ok(GaussianSampler::new(sigma)?.sample(n, seed))
}

/// Mean over population standard deviation, or a marker for zero spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TValue {
    Value(f64),
    Degenerate,
}

impl TValue {
    pub fn value(self) -> Option<f64> {
        match self {
            TValue::Value(v) => Some(v),
            TValue::Degenerate => None,
        }
    }
}

/// `(Σd/T) / [Σ(d − d̄)²/T]^{1/2}`.
pub fn t_value(d: &[f64]) -> Result<TValue> {
    if d.len() < 2 {
        return Err(Error::InsufficientData(format!("t-value needs at least 2 values, got {}", d.len())));
    }
    let t = d.len() as f64;
    let mean = d.iter().sum::<f64>() / t;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t;
    if !(var > 0.0) || d.iter().all(|&x| x == d[0]) {
        return Ok(TValue::Degenerate);
    }
    Ok(TValue::Value(mean / var.sqrt()))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("slope needs two equally long sequences of length >= 2"));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("log-log slope needs positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("slope needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// `max_j Σ_{i : |i−j| > a k ln k} |w_ij|` with `W = Σ₀⁻¹`.
pub fn precision_decay(sigma0: &CovMatrix, k: usize, a: f64) -> Result<f64> {
    if k < 2 || !(a > 0.0) {
        return Err(Error::invalid("precision decay needs k >= 2 and a > 0"));
    }
    let p = sigma0.dim();
    let offset = a * k as f64 * (k as f64).ln();
    if offset >= (p - 1) as f64 {
        log::warn!("offset {offset:.3} leaves no entries in a {p}x{p} matrix");
        return Ok(0.0);
    }
    let w = spd_inverse(sigma0)?;
    Ok((0..p)
        .map(|j| (0..p).filter(|&i| i.abs_diff(j) as f64 > offset).map(|i| w.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// How a method's estimate is produced in a risk study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RiskMethod {
    /// Leave-one-out tuned over the study grid.
    Tuned { method: Method },
    /// Fixed parameters, frequentist plug-in.
    Fixed { estimator: Estimator },
    /// Fixed parameters, posterior mean of the post-processed posterior.
    FixedPpp { estimator: Estimator },
    /// `ψ(Σ₀)` itself.
    Oracle,
}

impl RiskMethod {
    pub fn label(&self) -> String {
        match self {
            RiskMethod::Tuned { method } => format!("{} (loocv)", method.as_str()),
            RiskMethod::Fixed { estimator } => estimator.label(),
            RiskMethod::FixedPpp { estimator } => format!("{} ppp", estimator.label()),
            RiskMethod::Oracle => "oracle".into(),
        }
    }
}

/// Settings shared by risk and comparison studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub truth: TruthSpec,
    pub n: usize,
    pub p0: usize,
    pub reps: usize,
    pub ks: Vec<usize>,
    #[serde(rename = "a")]
    pub a_values: Vec<f64>,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub methods: Vec<RiskMethod>,
    /// `d = loss(first) − loss(second)` in comparison studies.
    #[serde(default = "default_compare")]
    pub compare: [Method; 2],
    /// Posterior draws per point estimate; 0 skips posterior comparisons.
    pub draws: usize,
    /// Posterior draws per fold in Bayesian leave-one-out.
    pub cv_draws: usize,
    #[serde(default)]
    pub direction: Direction,
}

fn default_compare() -> [Method; 2] {
    [Method::Tapering, Method::Blockwise]
}

impl StudyConfig {
    /// Defaults: `p0 = 0.8p`, `k ∈ 2..=10`, `a ∈ {5, 10, 20}`, `ε = 0.5`, `N = 1000`.
    pub fn new(truth: TruthSpec, n: usize, reps: usize, seed: u64) -> Self {
        StudyConfig {
            truth,
            n,
            p0: (0.8 * truth.p as f64).floor() as usize,
            reps,
            ks: (2..=10).collect(),
            a_values: vec![5.0, 10.0, 20.0],
            epsilon: 0.5,
            seed,
            methods: Vec::new(),
            compare: default_compare(),
            draws: 1000,
            cv_draws: 50,
            direction: Direction::Maximize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        Partition::new(self.truth.p, self.p0)?;
        if self.reps == 0 || self.n == 0 {
            return Err(Error::invalid("reps and n must be >= 1"));
        }
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 2) {
            return Err(Error::invalid("k grid must be non-empty with k >= 2"));
        }
        if self.a_values.is_empty() || self.a_values.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::invalid("a grid must be non-empty with a > 0"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be >= 0"));
        }
        if self.compare.iter().any(|m| m.is_bayes()) {
            return Err(Error::invalid("compared methods are given by their frequentist names"));
        }
        Ok(())
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.truth.p, self.p0).expect("validated")
    }

    fn estimator(&self, method: Method, k: usize, a: f64) -> Result<Estimator> {
        Ok(match method.base() {
            Method::Tapering => Estimator::Tapering(TaperParams::new(k, self.epsilon)?),
            Method::Blockwise => Estimator::Blockwise(BlockwiseParams::new(k, a, self.epsilon)?),
            _ => Estimator::Banding { k, epsilon: self.epsilon },
        })
    }

    fn grid(&self, method: Method) -> Result<TuningGrid> {
        TuningGrid::from_ranges(method, &self.ks, &self.a_values, &[self.epsilon])
    }
}

/// Losses of one method over the replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCell {
    pub method: String,
    pub losses: Vec<f64>,
    /// Mean over the successful replications.
    pub mean_loss: f64,
    /// Selected candidate per replication for tuned methods.
    pub selected: Vec<String>,
    pub failures: Vec<String>,
    pub complete: bool,
}

/// Loss differences and t-values at one `(k, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub k: usize,
    pub a: f64,
    pub d_f: Vec<f64>,
    pub d_b: Vec<f64>,
    pub t_f: Option<TValue>,
    pub t_b: Option<TValue>,
}

/// One point of a rate study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub p: usize,
    pub p0: usize,
    pub k: usize,
    pub squared_risk: f64,
}

/// Results of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub risk: Vec<RiskCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<CompareCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate: Vec<RatePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Wall-clock seconds; kept out of serialized reports so they stay
    /// reproducible.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl StudyReport {
    fn new(seed: u64, reps: usize) -> Self {
        StudyReport { seed, reps, risk: Vec::new(), compare: Vec::new(), rate: Vec::new(), slope: None, wall_clock_secs: 0.0 }
    }
}

fn rep_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, r as u64)
}

fn prior_posterior(z: &DataMatrix) -> Result<IwParams> {
    iw_posterior(&IwParams::default_prior(z.p()), z)
}

/// Estimate of one method on one replication: coefficient and selected label.
fn risk_estimate(cfg: &StudyConfig, m: &RiskMethod, z: &DataMatrix, s: &CovMatrix, truth: &CoefMatrix, seed: u64) -> Result<(CoefMatrix, String)> {
    let part = cfg.partition();
    let post_seed = derive_seed(seed, domain::POSTERIOR);
    let posterior_estimate = |e: Estimator| -> Result<CoefMatrix> {
        let post = Post { estimator: e, partition: part };
        posterior_mean(&ppp(&prior_posterior(z)?, &post, cfg.draws.max(1), post_seed)?)
    };
    match *m {
        RiskMethod::Oracle => Ok((truth.clone(), "oracle".into())),
        RiskMethod::Fixed { estimator } => Ok((estimator.fit(s, part)?, estimator.label())),
        RiskMethod::FixedPpp { estimator } => Ok((posterior_estimate(estimator)?, estimator.label())),
        RiskMethod::Tuned { method } => {
            let grid = cfg.grid(method)?;
            if method.is_bayes() {
                let prior = IwParams::default_prior(z.p());
                let cv_seed = derive_seed(seed, domain::CV_FOLD);
                let report = loocv_bayes(z, part, &prior, &grid, cfg.cv_draws.max(1), cv_seed, cfg.direction)?;
                Ok((posterior_estimate(report.best())?, report.best().label()))
            } else {
                let report = loocv_frequentist(z, part, &grid, cfg.direction)?;
                Ok((report.best().fit(s, part)?, report.best().label()))
            }
        }
    }
}

/// Mean spectral-norm loss of each method over `cfg.reps` replications.
pub fn risk_mc(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.methods.is_empty() {
        return Err(Error::invalid("risk study needs at least one method"));
    }
    let start = Instant::now();
    let sigma0 = make_sigma0(&cfg.truth)?;
    let truth = cond_mean_operator(&sigma0, cfg.partition())?;
    let sampler = GaussianSampler::new(&sigma0)?;
    type RepOutcome = Vec<std::result::Result<(f64, String), String>>;
    let per_rep: Vec<RepOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = rep_seed(cfg.seed, r);
            let z = sampler.sample(cfg.n, seed);
            let s = match sample_covariance(&z) {
                Ok(s) => s,
                Err(e) => return vec![Err(e.to_string()); cfg.methods.len()],
            };
            cfg.methods
                .iter()
                .map(|m| {
                    risk_estimate(cfg, m, &z, &s, &truth, seed)
                        .and_then(|(c, label)| Ok((loss(&c, &truth)?, label)))
                        .map_err(|e| format!("replication {r}: {e}"))
                })
                .collect()
        })
        .collect();
    let mut report = StudyReport::new(cfg.seed, cfg.reps);
    for (j, m) in cfg.methods.iter().enumerate() {
        let mut cell = RiskCell { method: m.label(), losses: Vec::new(), mean_loss: f64::NAN, selected: Vec::new(), failures: Vec::new(), complete: true };
        for rep in &per_rep {
            match &rep[j] {
                Ok((l, label)) => {
                    cell.losses.push(*l);
                    if matches!(m, RiskMethod::Tuned { .. }) {
                        cell.selected.push(label.clone());
                    }
                }
                Err(msg) => {
                    log::warn!("{}: {msg}", cell.method);
                    cell.failures.push(msg.clone());
                    cell.complete = false;
                }
            }
        }
        if !cell.losses.is_empty() {
            cell.mean_loss = cell.losses.iter().sum::<f64>() / cell.losses.len() as f64;
        }
        report.risk.push(cell);
    }
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Paired loss differences `d_f` (plug-in) and `d_b` (posterior means)
/// between `cfg.compare[0]` and `cfg.compare[1]` over the `(k, a)` grid.
pub fn compare_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let start = Instant::now();
    let part = cfg.partition();
    let sigma0 = make_sigma0(&cfg.truth)?;
    let truth = cond_mean_operator(&sigma0, part)?;
    let sampler = GaussianSampler::new(&sigma0)?;
    let cells: Vec<(usize, f64)> = cfg.ks.iter().flat_map(|&k| cfg.a_values.iter().map(move |&a| (k, a))).collect();
    let [first, second] = cfg.compare;
    let pairs: Vec<(Estimator, Estimator)> = cells
        .iter()
        .map(|&(k, a)| Ok((cfg.estimator(first, k, a)?, cfg.estimator(second, k, a)?)))
        .collect::<Result<_>>()?;
    // Distinct estimators, so shared ones are evaluated once per replication.
    let mut distinct: Vec<Estimator> = Vec::new();
    for (e1, e2) in &pairs {
        for e in [e1, e2] {
            if !distinct.contains(e) {
                distinct.push(*e);
            }
        }
    }
    let index = |e: &Estimator| distinct.iter().position(|d| d == e).expect("collected above");

    let per_rep: Vec<(Vec<f64>, Option<Vec<f64>>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let seed = rep_seed(cfg.seed, r);
            let z = sampler.sample(cfg.n, seed);
            let s = sample_covariance(&z)?;
            let freq = distinct.iter().map(|e| loss(&e.fit(&s, part)?, &truth)).collect::<Result<Vec<_>>>()?;
            let bayes = if cfg.draws > 0 {
                let posts: Vec<Post> = distinct.iter().map(|&estimator| Post { estimator, partition: part }).collect();
                let refs: Vec<&dyn PostProcess> = posts.iter().map(|p| p as &dyn PostProcess).collect();
                let means = ppp_means(&prior_posterior(&z)?, &refs, cfg.draws, derive_seed(seed, domain::POSTERIOR))?;
                Some(means.iter().map(|c| loss(c, &truth)).collect::<Result<Vec<_>>>()?)
            } else {
                None
            };
            Ok((freq, bayes))
        })
        .collect::<Result<_>>()?;

    let mut report = StudyReport::new(cfg.seed, cfg.reps);
    for (&(k, a), (e1, e2)) in cells.iter().zip(&pairs) {
        let (i1, i2) = (index(e1), index(e2));
        let d_f: Vec<f64> = per_rep.iter().map(|(f, _)| f[i1] - f[i2]).collect();
        let d_b: Vec<f64> = per_rep.iter().filter_map(|(_, b)| b.as_ref().map(|b| b[i1] - b[i2])).collect();
        let t = |d: &[f64]| if d.len() >= 2 { t_value(d).ok() } else { None };
        report.compare.push(CompareCell { k, a, t_f: t(&d_f), t_b: t(&d_b), d_f, d_b });
    }
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Settings of a convergence-rate study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub alpha: f64,
    pub rho: f64,
    pub ns: Vec<usize>,
    pub reps: usize,
    /// Blockwise constant `a`.
    pub a: f64,
    pub epsilon: f64,
    /// `p = p_factor · n`.
    pub p_factor: f64,
    /// `p0 = ⌊p0_fraction · p⌋`.
    pub p0_fraction: f64,
    pub seed: u64,
}

impl RateConfig {
    pub fn new(alpha: f64, ns: Vec<usize>, reps: usize, seed: u64) -> Self {
        RateConfig { alpha, rho: 0.6, ns, reps, a: 1.0, epsilon: 0.5, p_factor: 2.0, p0_fraction: 0.8, seed }
    }
}

/// Squared spectral risk of the blockwise estimator with
/// `k = ⌈n^{1/(2α+1)}⌉` along `cfg.ns`, and its log-log slope.
pub fn rate_study(cfg: &RateConfig) -> Result<StudyReport> {
    if cfg.ns.len() < 3 || cfg.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rate study needs at least 3 strictly increasing sample sizes"));
    }
    if cfg.reps < 2 {
        return Err(Error::InsufficientData("rate study needs at least 2 replications".into()));
    }
    let start = Instant::now();
    let mut report = StudyReport::new(cfg.seed, cfg.reps);
    for (idx, &n) in cfg.ns.iter().enumerate() {
        let p = ((cfg.p_factor * n as f64).round() as usize).max(2);
        let p0 = ((cfg.p0_fraction * p as f64).floor() as usize).clamp(1, p - 1);
        let k = ((n as f64).powf(1.0 / (2.0 * cfg.alpha + 1.0)).ceil() as usize).max(2);
        let part = Partition::new(p, p0)?;
        let sigma0 = make_sigma0(&TruthSpec::new(p, cfg.rho, cfg.alpha)?)?;
        let truth = cond_mean_operator(&sigma0, part)?;
        let sampler = GaussianSampler::new(&sigma0)?;
        let est = Estimator::Blockwise(BlockwiseParams::new(k, cfg.a, cfg.epsilon)?);
        let cell_seed = derive_seed(cfg.seed, idx as u64);
        let sq: Vec<f64> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| {
                let z = sampler.sample(n, rep_seed(cell_seed, r));
                Ok(loss(&est.fit(&sample_covariance(&z)?, part)?, &truth)?.powi(2))
            })
            .collect::<Result<_>>()?;
        report.rate.push(RatePoint { n, p, p0, k, squared_risk: sq.iter().sum::<f64>() / sq.len() as f64 });
    }
    let xs: Vec<f64> = report.rate.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = report.rate.iter().map(|r| r.squared_risk).collect();
    report.slope = Some(log_log_slope(&xs, &ys)?);
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma0_examples() {
        let s = make_sigma0(&TruthSpec::new(2, 0.6, 0.3).unwrap()).unwrap();
        let expect = CovMatrix::from_rows(&[vec![1.1, 0.6], vec![0.6, 1.1]]).unwrap();
        assert!(s.max_abs_diff(&expect) < 1e-12);
        let s = make_sigma0(&TruthSpec::new(3, 0.5, 1.0).unwrap()).unwrap();
        assert!((s.get(0, 2) - 0.125).abs() < 1e-15);
        let s = make_sigma0(&TruthSpec::new(4, 0.0, 1.0).unwrap()).unwrap();
        assert!(s.max_abs_diff(&CovMatrix::identity(4).scaled(0.5)) < 1e-12);
    }

    #[test]
    fn t_value_examples() {
        assert!((t_value(&[1.0, 2.0, 3.0]).unwrap().value().unwrap() - 2.449_489_742_783_178).abs() < 1e-12);
        assert_eq!(t_value(&[-1.0, 1.0]).unwrap(), TValue::Value(0.0));
        assert_eq!(t_value(&[0.3, 0.3]).unwrap(), TValue::Degenerate);
        assert!(t_value(&[1.0]).is_err());
    }

    #[test]
    fn slope_examples() {
        let ns = [100.0, 200.0, 400.0, 800.0];
        let risk: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(-0.5)).collect();
        assert!((log_log_slope(&ns, &risk).unwrap() + 0.5).abs() < 1e-10);
        assert!(log_log_slope(&ns, &[2.0; 4]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn decay_of_diagonal_is_zero() {
        assert_eq!(precision_decay(&CovMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]), 2, 1.0).unwrap(), 0.0);
        assert_eq!(precision_decay(&CovMatrix::identity(30), 3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_sampling_is_seeded() {
        let sigma = CovMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let a = sample_gaussian(&sigma, 5, 9).unwrap();
        assert_eq!(a, sample_gaussian(&sigma, 5, 9).unwrap());
        assert_ne!(a, sample_gaussian(&sigma, 5, 10).unwrap());
        assert_eq!(sample_gaussian(&sigma, 0, 9).unwrap().n(), 0);
    }

    #[test]
    fn oracle_risk_is_zero() {
        let mut cfg = StudyConfig::new(TruthSpec::new(6, 0.6, 0.3).unwrap(), 10, 3, 1);
        cfg.p0 = 4;
        cfg.methods = vec![RiskMethod::Oracle];
        let r = risk_mc(&cfg).unwrap();
        assert_eq!(r.risk[0].mean_loss, 0.0);
        assert!(r.risk[0].complete);
    }
}
