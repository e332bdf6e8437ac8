//! Experiment configuration: TOML files with `[study]`, `[compare]` and
//! `[rate]` sections, overridable through `BANDTAPER_<SECTION>_<KEY>`
//! environment variables.

use std::path::Path;

use bandtaper::simulation::{RateConfig, RiskMethod, StudyConfig, TruthSpec};
use bandtaper::tuning::{Direction, Method};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const ENV_PREFIX: &str = "BANDTAPER_";
const SECTIONS: [&str; 3] = ["study", "compare", "rate"];

/// Risk grid over `(n, α)` cells: one Monte-Carlo study per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub p: usize,
    /// Defaults to `⌊0.8 p⌋`.
    pub p0: Option<usize>,
    pub rho: f64,
    pub floor: f64,
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub ks: Vec<usize>,
    pub a: Vec<f64>,
    /// Tuned method names, or `oracle`.
    pub methods: Vec<String>,
    pub draws: usize,
    pub cv_draws: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            p: 60,
            p0: None,
            rho: 0.6,
            floor: 0.5,
            alphas: vec![0.1, 0.3],
            ns: vec![30, 60],
            reps: 100,
            seed: 2024,
            epsilon: 0.5,
            ks: (2..=10).collect(),
            a: vec![5.0, 10.0, 20.0],
            methods: vec!["tapering".into(), "blockwise".into(), "banding".into()],
            draws: 1000,
            cv_draws: 50,
        }
    }
}

/// Fixed-parameter comparison over a `k × a` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub p: usize,
    pub p0: Option<usize>,
    pub rho: f64,
    pub floor: f64,
    pub alpha: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub ks: Vec<usize>,
    pub a: Vec<f64>,
    /// `d = loss(first) − loss(second)`.
    pub methods: [String; 2],
    /// Posterior draws per estimate; 0 skips the posterior side.
    pub draws: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            p: 60,
            p0: None,
            rho: 0.6,
            floor: 0.5,
            alpha: 0.1,
            n: 30,
            reps: 50,
            seed: 77,
            epsilon: 0.5,
            ks: (2..=10).collect(),
            a: vec![5.0, 10.0, 20.0],
            methods: ["tapering".into(), "blockwise".into()],
            draws: 200,
        }
    }
}

/// Convergence-rate sweep of the blockwise estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    pub alpha: f64,
    pub rho: f64,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub a: f64,
    pub epsilon: f64,
    pub p_factor: f64,
    pub p0_fraction: f64,
    pub seed: u64,
}

impl Default for RateSection {
    fn default() -> Self {
        RateSection {
            alpha: 0.5,
            rho: 0.6,
            ns: vec![100, 200, 400, 800],
            reps: 30,
            a: 5.0,
            epsilon: 0.5,
            p_factor: 2.0,
            p0_fraction: 0.8,
            seed: 99,
        }
    }
}

/// A parsed configuration document. Missing sections take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub study: StudySection,
    pub compare: CompareSection,
    pub rate: RateSection,
}

impl ConfigFile {
    /// Parse `text`, then apply overrides from `env` (name, value) pairs.
    pub fn parse<I>(text: &str, env: I) -> CliResult<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for (name, raw) in env {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let rest = rest.to_ascii_lowercase();
            let Some((section, key)) = rest.split_once('_') else { continue };
            if !SECTIONS.contains(&section) {
                continue;
            }
            log::info!("override {section}.{key} = {raw}");
            let table = doc
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("{section} is not a section")))?;
            table.insert(key.to_string(), env_value(&raw));
        }
        toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    /// Read `path` (or start from defaults when `None`) and apply the process environment.
    pub fn load(path: Option<&Path>) -> CliResult<(Self, Option<Vec<u8>>)> {
        let bytes = match path {
            Some(p) => Some(std::fs::read(p).map_err(|e| CliError::io(p, e))?),
            None => None,
        };
        let text = match &bytes {
            Some(b) => std::str::from_utf8(b).map_err(|e| CliError::Config(format!("not UTF-8: {e}")))?,
            None => "",
        };
        Ok((Self::parse(text, std::env::vars())?, bytes))
    }
}

/// An override value is read as a TOML literal when it parses as one and as
/// a bare string otherwise.
fn env_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn default_p0(p: usize) -> usize {
    (0.8 * p as f64).floor() as usize
}

fn risk_method(name: &str) -> CliResult<RiskMethod> {
    if name == "oracle" {
        return Ok(RiskMethod::Oracle);
    }
    let method: Method = name.parse().map_err(|e: bandtaper::Error| CliError::Config(e.to_string()))?;
    Ok(RiskMethod::Tuned { method })
}

fn base_method(name: &str) -> CliResult<Method> {
    let method: Method = name.parse().map_err(|e: bandtaper::Error| CliError::Config(e.to_string()))?;
    if method.is_bayes() {
        return Err(CliError::Config(format!("compare.methods takes frequentist names, got {name:?}")));
    }
    Ok(method)
}

fn checked(cfg: StudyConfig) -> CliResult<StudyConfig> {
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

impl StudySection {
    /// One study per `(n, α)` cell, `n` varying slowest. Cell `i` uses seed
    /// `derive_seed(seed, i)`.
    pub fn cells(&self, direction: Direction) -> CliResult<Vec<StudyConfig>> {
        if self.ns.is_empty() || self.alphas.is_empty() {
            return Err(CliError::Config("study.ns and study.alphas must be non-empty".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("study.methods must be non-empty".into()));
        }
        let methods = self.methods.iter().map(|m| risk_method(m)).collect::<CliResult<Vec<_>>>()?;
        let mut cells = Vec::new();
        for &n in &self.ns {
            for &alpha in &self.alphas {
                let mut truth = TruthSpec::new(self.p, self.rho, alpha).map_err(|e| CliError::Config(e.to_string()))?;
                truth.floor = self.floor;
                let seed = bandtaper::rng::derive_seed(self.seed, cells.len() as u64);
                let mut cfg = StudyConfig::new(truth, n, self.reps, seed);
                cfg.p0 = self.p0.unwrap_or_else(|| default_p0(self.p));
                cfg.ks = self.ks.clone();
                cfg.a_values = self.a.clone();
                cfg.epsilon = self.epsilon;
                cfg.methods = methods.clone();
                cfg.draws = self.draws;
                cfg.cv_draws = self.cv_draws;
                cfg.direction = direction;
                cells.push(checked(cfg)?);
            }
        }
        Ok(cells)
    }
}

impl CompareSection {
    pub fn study(&self) -> CliResult<StudyConfig> {
        let mut truth = TruthSpec::new(self.p, self.rho, self.alpha).map_err(|e| CliError::Config(e.to_string()))?;
        truth.floor = self.floor;
        let mut cfg = StudyConfig::new(truth, self.n, self.reps, self.seed);
        cfg.p0 = self.p0.unwrap_or_else(|| default_p0(self.p));
        cfg.ks = self.ks.clone();
        cfg.a_values = self.a.clone();
        cfg.epsilon = self.epsilon;
        cfg.compare = [base_method(&self.methods[0])?, base_method(&self.methods[1])?];
        cfg.draws = self.draws;
        checked(cfg)
    }
}

impl RateSection {
    pub fn rate(&self) -> RateConfig {
        RateConfig {
            alpha: self.alpha,
            rho: self.rho,
            ns: self.ns.clone(),
            reps: self.reps,
            a: self.a,
            epsilon: self.epsilon,
            p_factor: self.p_factor,
            p0_fraction: self.p0_fraction,
            seed: self.seed,
        }
    }
}
