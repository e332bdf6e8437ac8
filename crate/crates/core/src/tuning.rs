//! Leave-one-out selection of tuning parameters.
//!
//! Each candidate estimator induces a predictive Gaussian
//! `Y | X ~ N(Ĉ X, V̂)`. The frequentist score of a candidate is
//! `Σ_i log p(Y_i | Ĉ_{−i} X_i, V̂_{−i})` with the estimator refit on the data
//! without row `i`; the Bayesian score replaces the plug-in density by the
//! average over `S` leave-one-out posterior draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{iw_posterior, IwParams, IwSampler};
use crate::error::{Error, Result};
use crate::estimators::{sample_covariance, CoefMatrix, DataMatrix, Estimator, Partition};
use crate::linalg::{Cholesky, CovMatrix};
use crate::operators::{BlockwiseParams, TaperParams};
use crate::rng::{derive_seed, domain, substream};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Estimator family, frequentist or post-processed posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Tapering,
    Blockwise,
    Banding,
    TaperingPpp,
    BlockwisePpp,
    BandingPpp,
}

impl Method {
    pub fn is_bayes(self) -> bool {
        matches!(self, Method::TaperingPpp | Method::BlockwisePpp | Method::BandingPpp)
    }

    /// The frequentist family with the same post-processing.
    pub fn base(self) -> Method {
        match self {
            Method::TaperingPpp => Method::Tapering,
            Method::BlockwisePpp => Method::Blockwise,
            Method::BandingPpp => Method::Banding,
            m => m,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tapering => "tapering",
            Method::Blockwise => "blockwise",
            Method::Banding => "banding",
            Method::TaperingPpp => "tapering-ppp",
            Method::BlockwisePpp => "blockwise-ppp",
            Method::BandingPpp => "banding-ppp",
        }
    }

    fn accepts(self, e: &Estimator) -> bool {
        matches!(
            (self.base(), e),
            (Method::Tapering, Estimator::Tapering(_))
                | (Method::Blockwise, Estimator::Blockwise(_))
                | (Method::Banding, Estimator::Banding { .. })
        )
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tapering" => Method::Tapering,
            "blockwise" => Method::Blockwise,
            "banding" => Method::Banding,
            "tapering-ppp" => Method::TaperingPpp,
            "blockwise-ppp" => Method::BlockwisePpp,
            "banding-ppp" => Method::BandingPpp,
            _ => return Err(Error::invalid(format!("unknown method {s:?}"))),
        })
    }
}

/// Candidate parameter settings for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    method: Method,
    candidates: Vec<Estimator>,
}

impl TuningGrid {
    pub fn new(method: Method, candidates: Vec<Estimator>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::invalid("tuning grid is empty"));
        }
        if let Some(bad) = candidates.iter().find(|c| !method.accepts(c)) {
            return Err(Error::invalid(format!("candidate {} does not belong to method {}", bad.label(), method.as_str())));
        }
        Ok(TuningGrid { method, candidates })
    }

    /// Cartesian product of `ks`, `as_` (blockwise only) and `epsilons`.
    pub fn from_ranges(method: Method, ks: &[usize], as_: &[f64], epsilons: &[f64]) -> Result<Self> {
        let mut candidates = Vec::new();
        for &k in ks {
            for &eps in epsilons {
                match method.base() {
                    Method::Tapering => candidates.push(Estimator::Tapering(TaperParams::new(k, eps)?)),
                    Method::Banding => {
                        if !(eps >= 0.0) {
                            return Err(Error::invalid("epsilon must be >= 0"));
                        }
                        candidates.push(Estimator::Banding { k, epsilon: eps })
                    }
                    _ => {
                        for &a in as_ {
                            candidates.push(Estimator::Blockwise(BlockwiseParams::new(k, a, eps)?));
                        }
                    }
                }
            }
        }
        TuningGrid::new(method, candidates)
    }

    /// `k ∈ {2, …, 10}`, `a ∈ {5, 10, 20}`, `ε = 0.5`.
    pub fn default_for(method: Method) -> Self {
        let ks: Vec<usize> = (2..=10).collect();
        TuningGrid::from_ranges(method, &ks, &[5.0, 10.0, 20.0], &[0.5]).expect("default grid is valid")
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn candidates(&self) -> &[Estimator] {
        &self.candidates
    }
}

/// Whether the best score is the largest or (literal reading) the smallest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

/// Scores of every candidate and the selected one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub method: Method,
    pub direction: Direction,
    pub candidates: Vec<Estimator>,
    /// Total log-likelihood per candidate; `-inf` when a fold failed.
    pub scores: Vec<f64>,
    /// Per candidate, per fold log-likelihood.
    pub fold_scores: Vec<Vec<f64>>,
    pub selected: usize,
    pub diagnostics: Vec<String>,
}

impl CvReport {
    pub fn best(&self) -> Estimator {
        self.candidates[self.selected]
    }
}

/// `log N(y; m, V)`.
pub fn gaussian_cond_loglik(y: &[f64], m: &[f64], v: &CovMatrix) -> Result<f64> {
    let q = v.dim();
    if y.len() != q || m.len() != q {
        return Err(Error::shape("gaussian_cond_loglik", q, if y.len() != q { y.len() } else { m.len() }));
    }
    let chol = Cholesky::new(v)?;
    let mut r: Vec<f64> = y.iter().zip(m).map(|(a, b)| a - b).collect();
    chol.forward_in_place(&mut r);
    let quad: f64 = r.iter().map(|x| x * x).sum();
    Ok(-0.5 * (q as f64 * LN_2PI + chol.log_det() + quad))
}

fn plug_in_loglik(est: &Estimator, s: &CovMatrix, part: Partition, z: &[f64]) -> Result<f64> {
    let (c, v) = est.predictive(s, part)?;
    let m = c.mul_vec(&z[..part.p0()])?;
    gaussian_cond_loglik(&z[part.p0()..], &m, &v)
}

fn tie_key(e: &Estimator) -> (usize, f64, f64) {
    match *e {
        Estimator::Tapering(p) => (p.k(), 0.0, p.epsilon()),
        Estimator::Blockwise(p) => (p.k(), p.a(), p.epsilon()),
        Estimator::Banding { k, epsilon } => (k, 0.0, epsilon),
        Estimator::SampleCovariance => (usize::MAX, 0.0, 0.0),
    }
}

/// Best finite score under `direction`; ties by smallest `(k, a, ε)`, then index.
fn select(candidates: &[Estimator], scores: &[f64], direction: Direction) -> Result<usize> {
    let better = |a: f64, b: f64| match direction {
        Direction::Maximize => a > b,
        Direction::Minimize => a < b,
    };
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if better(s, scores[b]) => Some(i),
            Some(b) if s == scores[b] && tie_key(&candidates[i]) < tie_key(&candidates[b]) => Some(i),
            keep => keep,
        };
    }
    best.ok_or_else(|| Error::Singular { context: "no tuning candidate could be scored".into(), min_eigenvalue: f64::NAN })
}

fn assemble(
    grid: &TuningGrid,
    direction: Direction,
    per_fold: Vec<Vec<std::result::Result<f64, String>>>,
) -> Result<CvReport> {
    let m = grid.candidates.len();
    let mut fold_scores = vec![Vec::with_capacity(per_fold.len()); m];
    let mut diagnostics = Vec::new();
    for (i, fold) in per_fold.into_iter().enumerate() {
        for (c, r) in fold.into_iter().enumerate() {
            fold_scores[c].push(match r {
                Ok(v) => v,
                Err(msg) => {
                    diagnostics.push(format!("fold {i}, {}: {msg}", grid.candidates[c].label()));
                    f64::NEG_INFINITY
                }
            });
        }
    }
    let scores: Vec<f64> = fold_scores
        .iter()
        .map(|f| if f.iter().all(|v| v.is_finite()) { f.iter().sum() } else { f64::NEG_INFINITY })
        .collect();
    let selected = select(&grid.candidates, &scores, direction)?;
    Ok(CvReport { method: grid.method, direction, candidates: grid.candidates.clone(), scores, fold_scores, selected, diagnostics })
}

fn check_inputs(z: &DataMatrix, part: Partition) -> Result<()> {
    if z.n() < 2 {
        return Err(Error::InsufficientData(format!("leave-one-out needs n >= 2, got {}", z.n())));
    }
    if z.p() != part.p() {
        return Err(Error::shape("leave-one-out data", part.p(), z.p()));
    }
    Ok(())
}

/// `S_{−i} = (n S − z_i z_iᵀ) / (n − 1)`.
fn downdate(n_s: &CovMatrix, z: &[f64], n: usize) -> CovMatrix {
    let p = n_s.dim();
    let scale = 1.0 / (n - 1) as f64;
    let mut data = n_s.as_slice().to_vec();
    for i in 0..p {
        for j in 0..p {
            data[i * p + j] = (data[i * p + j] - z[i] * z[j]) * scale;
        }
    }
    CovMatrix::from_symmetric_unchecked(p, data)
}

/// Frequentist leave-one-out CV with the conditional Gaussian log-likelihood.
pub fn loocv_frequentist(z: &DataMatrix, part: Partition, grid: &TuningGrid, direction: Direction) -> Result<CvReport> {
    check_inputs(z, part)?;
    let n = z.n();
    let n_s = sample_covariance(z)?.scaled(n as f64);
    let per_fold = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = downdate(&n_s, z.row(i), n);
            grid.candidates.iter().map(|c| plug_in_loglik(c, &s, part, z.row(i)).map_err(|e| e.to_string())).collect()
        })
        .collect();
    assemble(grid, direction, per_fold)
}

/// `log((1/S) Σ exp(x_s))` over the finite `x_s`.
fn log_mean_exp(xs: &[f64]) -> Option<f64> {
    let max = xs.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for &x in xs.iter().filter(|x| x.is_finite()) {
        sum += (x - max).exp();
        count += 1;
    }
    Some(max + (sum / count as f64).ln())
}

/// Per-candidate fold log-scores (or the failure) and fold notes.
type FoldScores = (Vec<std::result::Result<f64, String>>, Vec<String>);

/// Bayesian leave-one-out CV over `draws` inverse-Wishart draws per fold.
///
/// Fold `i` uses the posterior `IW(B₀ + Σ_{j≠i} z_j z_jᵀ, ν₀ + n − 1)`; its
/// draws are shared by all candidates. Draw `s` of fold `i` comes from
/// `substream(derive_seed(seed, i), CV_FOLD, s)`. Draws whose post-processing
/// fails are dropped with a diagnostic.
pub fn loocv_bayes(
    z: &DataMatrix,
    part: Partition,
    prior: &IwParams,
    grid: &TuningGrid,
    draws: usize,
    seed: u64,
    direction: Direction,
) -> Result<CvReport> {
    check_inputs(z, part)?;
    if draws == 0 {
        return Err(Error::invalid("draws per fold must be >= 1"));
    }
    if prior.dim() != z.p() {
        return Err(Error::shape("loocv_bayes prior", z.p(), prior.dim()));
    }
    let n = z.n();
    let bw = grid.candidates.iter().map(|c| c.bandwidth()).try_fold(0usize, |m, b| b.map(|b| m.max(b)));
    let per_fold: Vec<FoldScores> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fold = match iw_posterior(prior, &z.without_row(i)).and_then(|post| IwSampler::new(&post)) {
                Ok(s) => s,
                Err(e) => return (vec![Err(e.to_string()); grid.candidates.len()], Vec::new()),
            };
            let fold_seed = derive_seed(seed, i as u64);
            let mut logs = vec![Vec::with_capacity(draws); grid.candidates.len()];
            let mut notes = Vec::new();
            for d in 0..draws {
                let mut rng = substream(fold_seed, domain::CV_FOLD, d as u64);
                let sigma = match bw {
                    Some(w) if w < fold.dim() => fold.sample_band(w, &mut rng),
                    _ => fold.sample(&mut rng),
                };
                for (c, cand) in grid.candidates.iter().enumerate() {
                    match plug_in_loglik(cand, &sigma, part, z.row(i)) {
                        Ok(v) => logs[c].push(v),
                        Err(e) => notes.push(format!("fold {i}, draw {d}, {}: dropped ({e})", cand.label())),
                    }
                }
            }
            let scores = logs
                .iter()
                .map(|l| log_mean_exp(l).ok_or_else(|| "no surviving posterior draw".to_string()))
                .collect();
            (scores, notes)
        })
        .collect();
    let mut notes = Vec::new();
    let scores = per_fold
        .into_iter()
        .map(|(s, n)| {
            notes.extend(n);
            s
        })
        .collect();
    let mut report = assemble(grid, direction, scores)?;
    notes.append(&mut report.diagnostics);
    report.diagnostics = notes;
    Ok(report)
}

/// Selected coefficient estimate for `method` after tuning on `z`.
///
/// Frequentist methods refit the selected estimator on `S_n`; posterior
/// methods are handled by the caller.
pub fn tuned_fit(z: &DataMatrix, part: Partition, report: &CvReport) -> Result<CoefMatrix> {
    report.best().fit(&sample_covariance(z)?, part)
}
