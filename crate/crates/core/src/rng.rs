//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`Stream`] obtained by
//! [`substream`]`(seed, domain, index)`. The stream is a ChaCha8 generator
//! whose key is derived from `(seed, domain)` and whose 64-bit stream id is
//! `index`, so replication `r` or posterior draw `d` sees the same numbers no
//! matter which thread produces it or in which order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream domains. Distinct domains never share a key.
pub mod domain {
    pub const DATA: u64 = 0x4441_5441;
    pub const POSTERIOR: u64 = 0x504f_5354;
    pub const CV_FOLD: u64 = 0x4356_464f;
    pub const WISHART: u64 = 0x5749_5348;
    pub const PANEL: u64 = 0x5041_4e45;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a parent seed with a label into a child seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ label.rotate_left(17))
}

/// Independent stream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain));
    rng.set_stream(index);
    Stream { rng, spare: None }
}

/// Uniform, Gaussian and gamma variates over a counter-based generator.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    /// Uniform on `(0, 1]`, 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; the second variate of each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang squeeze; shapes below one use
    /// the `Gamma(shape + 1)·U^{1/shape}` boost.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            return g * self.uniform().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Chi-square with `df` degrees of freedom (`2·Gamma(df/2)`).
    pub fn chi_square(&mut self, df: f64) -> f64 {
        2.0 * self.gamma(0.5 * df)
    }
}
