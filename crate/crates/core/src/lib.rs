//! Estimation of the conditional mean operator `Σ_YX Σ_XX⁻¹` under bandable
//! covariance structure.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] — dense symmetric matrices, Cholesky factorisation, extreme
//!   eigenvalues and spectral norms.
//! * [`operators`] — tapering, banding, sub-block extraction, positive-definite
//!   adjustment and the trailing-block inverse used by the blockwise estimator.
//! * [`estimators`] — sample covariance, the conditional mean operator and
//!   conditional variance, and the tapering / blockwise / banding estimators.
//! * [`bayes`] — inverse-Wishart posteriors, Wishart sampling and
//!   post-processed posteriors.
//! * [`tuning`] — leave-one-out cross-validation (frequentist and Bayesian).
//! * [`simulation`] — ground-truth generation and Monte-Carlo risk studies.
//! * [`spatiotemporal`] — panel rearrangement and forecasting.
//!
//! Matrix element accessors are 0-based. Operators that mirror the published
//! index conventions (`sub_block`, `embedded_block`, `taper_weight`) take
//! 1-based indices and say so in their docs.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod simulation;
pub mod spatiotemporal;
pub mod tuning;

pub use error::{Error, Result};
pub use estimators::{CoefMatrix, DataMatrix, Estimator, Partition};
pub use linalg::{CovMatrix, RectMatrix};
pub use operators::{BlockwiseParams, TaperParams};

/// Runs `f` on a rayon pool with exactly `threads` workers (0 = rayon default).
///
/// Every parallel routine in the crate merges results by index, so the output
/// does not depend on `threads`.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
