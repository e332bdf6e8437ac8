use std::path::{Path, PathBuf};

use bandtaper::bayes::{iw_posterior, ppp_means, IwParams, Post, PostProcess};
use bandtaper::estimators::sample_covariance;
use bandtaper::rng::{derive_seed, domain};
use bandtaper::simulation::{compare_study, make_sigma0, precision_decay, rate_study, risk_mc, StudyReport, TruthSpec};
use bandtaper::spatiotemporal::{center, run_forecast, sig6, ForecastTask, Panel};
use bandtaper::tuning::{loocv_bayes, loocv_frequentist, tuned_fit, Direction, Method, TuningGrid};
use bandtaper::{BlockwiseParams, Estimator, Partition, TaperParams};
use chrono::Utc;
use serde::Serialize;
use serde_json::json;

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::manifest::{InputDigest, Outputs, RunManifest};
use crate::tables::{coef_csv, figure1_csv, rate_csv, read_data, table1_csv, RiskGridCell};
use crate::{Cli, Command, DecayArgs, EstimateArgs, EstimatorKind, FitArgs, ForecastArgs, TuneArgs};

/// Seed of randomized commands run without `--seed` and without a config seed.
pub const DEFAULT_SEED: u64 = 2024;

/// What a command resolved its inputs to, for the manifest.
struct Resolved {
    config: serde_json::Value,
    seed: Option<u64>,
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: Outputs,
    inputs: Vec<InputDigest>,
}

impl Ctx<'_> {
    fn direction(&self) -> Direction {
        if self.cli.paper_literal_minimize {
            Direction::Minimize
        } else {
            Direction::Maximize
        }
    }

    /// Read an input file once; the digest covers exactly the parsed bytes.
    fn read_input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(InputDigest::of(path, &bytes));
        Ok(bytes)
    }

    fn load_config(&mut self) -> CliResult<ConfigFile> {
        let (cfg, bytes) = ConfigFile::load(self.cli.config.as_deref())?;
        if let (Some(path), Some(bytes)) = (&self.cli.config, bytes) {
            self.inputs.push(InputDigest::of(path, &bytes));
        }
        Ok(cfg)
    }
}

/// Run the selected subcommand and return the manifest path.
pub fn run(cli: &Cli, args: Vec<String>) -> CliResult<PathBuf> {
    let started = Utc::now();
    let mut ctx = Ctx { cli, out: Outputs::new(&cli.out), inputs: Vec::new() };
    let (name, resolved) = match &cli.command {
        Command::Estimate(a) => ("estimate", estimate(&mut ctx, a)?),
        Command::Study => ("study", study(&mut ctx)?),
        Command::Compare => ("compare", compare(&mut ctx)?),
        Command::Rate => ("rate", rate(&mut ctx)?),
        Command::Tune(a) => ("tune", tune(&mut ctx, a)?),
        Command::Forecast(a) => ("forecast", forecast(&mut ctx, a)?),
        Command::Decay(a) => ("decay", decay(&mut ctx, a)?),
    };
    let manifest = RunManifest {
        command: name.into(),
        args,
        config: resolved.config,
        seed: resolved.seed,
        threads: cli.threads,
        version: env!("CARGO_PKG_VERSION").into(),
        started: String::new(),
        finished: String::new(),
        outputs: Vec::new(),
        inputs: ctx.inputs,
    };
    ctx.out.commit(manifest, started)
}

fn estimator(kind: EstimatorKind, fit: &FitArgs) -> CliResult<Estimator> {
    Ok(match kind {
        EstimatorKind::Tapering => Estimator::Tapering(TaperParams::new(fit.k, fit.epsilon)?),
        EstimatorKind::Blockwise => Estimator::Blockwise(BlockwiseParams::new(fit.k, fit.a, fit.epsilon)?),
        EstimatorKind::Banding => {
            TaperParams::new(fit.k, fit.epsilon)?;
            Estimator::Banding { k: fit.k, epsilon: fit.epsilon }
        }
        EstimatorKind::Sample => Estimator::SampleCovariance,
    })
}

fn load_data(ctx: &mut Ctx, path: &Path, p0: usize, centered: bool) -> CliResult<(crate::tables::NamedData, Partition)> {
    let bytes = ctx.read_input(path)?;
    let mut named = read_data(&bytes)?;
    let part = Partition::new(named.data.p(), p0)
        .map_err(|e| CliError::input(format!("--p0 {p0} with {} columns: {e}", named.data.p())))?;
    if centered {
        named.data = center(&named.data)?.0;
    }
    Ok((named, part))
}

fn estimate(ctx: &mut Ctx, args: &EstimateArgs) -> CliResult<Resolved> {
    let est = estimator(args.method, &args.fit)?;
    let (named, part) = load_data(ctx, &args.data, args.p0, args.center)?;
    let c = est.fit(&sample_covariance(&named.data)?, part)?;
    ctx.out.add("coef.csv", coef_csv(&c, &named.columns));
    Ok(Resolved {
        config: json!({ "data": args.data, "p0": args.p0, "estimator": est, "center": args.center }),
        seed: None,
    })
}

#[derive(Serialize)]
struct TuneOutput<'a> {
    cv: &'a bandtaper::tuning::CvReport,
    selected: Estimator,
}

fn tune(ctx: &mut Ctx, args: &TuneArgs) -> CliResult<Resolved> {
    let method: Method = args.method.parse()?;
    let grid = TuningGrid::from_ranges(method, &args.ks, &args.a_values, &args.epsilon)?;
    let seed = ctx.cli.seed.unwrap_or(DEFAULT_SEED);
    let direction = ctx.direction();
    let (named, part) = load_data(ctx, &args.data, args.p0, args.center)?;
    let z = &named.data;
    let (report, c) = if method.is_bayes() {
        let prior = IwParams::default_prior(z.p());
        let report = loocv_bayes(z, part, &prior, &grid, args.cv_draws, seed, direction)?;
        let post = Post { estimator: report.best(), partition: part };
        let posts: [&dyn PostProcess; 1] = [&post];
        let mean = ppp_means(&iw_posterior(&prior, z)?, &posts, args.draws, derive_seed(seed, domain::POSTERIOR))?;
        (report, mean.into_iter().next().expect("one post-processor"))
    } else {
        let report = loocv_frequentist(z, part, &grid, direction)?;
        let c = tuned_fit(z, part, &report)?;
        (report, c)
    };
    for note in &report.diagnostics {
        log::warn!("{note}");
    }
    let mut table = String::from("candidate,score,selected\n");
    for (i, (cand, score)) in report.candidates.iter().zip(&report.scores).enumerate() {
        table.push_str(&format!("\"{}\",{},{}\n", cand.label(), sig6(*score), i == report.selected));
    }
    ctx.out.add_json("cv.json", &TuneOutput { cv: &report, selected: report.best() })?;
    ctx.out.add("cv.csv", table);
    ctx.out.add("coef.csv", coef_csv(&c, &named.columns));
    Ok(Resolved {
        config: json!({
            "data": args.data, "p0": args.p0, "method": method, "ks": args.ks, "a": args.a_values,
            "epsilon": args.epsilon, "cv_draws": args.cv_draws, "draws": args.draws,
            "center": args.center, "direction": direction,
        }),
        seed: Some(seed),
    })
}

#[derive(Serialize)]
struct StudyOutput {
    cells: Vec<RiskGridCell>,
    compare: StudyReport,
}

fn warn_incomplete(report: &StudyReport, where_: &str) {
    for cell in report.risk.iter().filter(|c| !c.complete) {
        log::warn!("{where_}: {} finished {} of {} replications", cell.method, cell.losses.len(), report.reps);
    }
}

fn study(ctx: &mut Ctx) -> CliResult<Resolved> {
    let mut cfg = ctx.load_config()?;
    if let Some(seed) = ctx.cli.seed {
        cfg.study.seed = seed;
        cfg.compare.seed = seed;
    }
    let cells = cfg.study.cells(ctx.direction())?;
    let compare_cfg = cfg.compare.study()?;
    let mut grid = Vec::with_capacity(cells.len());
    for cell in &cells {
        log::info!("risk cell n={} alpha={}", cell.n, cell.truth.alpha);
        let report = risk_mc(cell)?;
        warn_incomplete(&report, &format!("n={} alpha={}", cell.n, cell.truth.alpha));
        grid.push(RiskGridCell { n: cell.n, alpha: cell.truth.alpha, report });
    }
    let compare = compare_study(&compare_cfg)?;
    ctx.out.add("table1.csv", table1_csv(&grid));
    ctx.out.add("figure1.csv", figure1_csv(&compare));
    ctx.out.add_json("study.json", &StudyOutput { cells: grid, compare })?;
    Ok(Resolved {
        config: json!({ "study": cfg.study, "compare": cfg.compare, "direction": ctx.direction() }),
        seed: Some(cfg.study.seed),
    })
}

fn compare(ctx: &mut Ctx) -> CliResult<Resolved> {
    let mut cfg = ctx.load_config()?;
    if let Some(seed) = ctx.cli.seed {
        cfg.compare.seed = seed;
    }
    let report = compare_study(&cfg.compare.study()?)?;
    ctx.out.add("figure1.csv", figure1_csv(&report));
    ctx.out.add_json("compare.json", &report)?;
    Ok(Resolved { config: json!({ "compare": cfg.compare }), seed: Some(cfg.compare.seed) })
}

fn rate(ctx: &mut Ctx) -> CliResult<Resolved> {
    let mut cfg = ctx.load_config()?;
    if let Some(seed) = ctx.cli.seed {
        cfg.rate.seed = seed;
    }
    let report = rate_study(&cfg.rate.rate())?;
    ctx.out.add("rate.csv", rate_csv(&report));
    ctx.out.add_json("rate.json", &report)?;
    Ok(Resolved { config: json!({ "rate": cfg.rate }), seed: Some(cfg.rate.seed) })
}

fn forecast(ctx: &mut Ctx, args: &ForecastArgs) -> CliResult<Resolved> {
    let methods = args.methods.iter().map(|&m| estimator(m, &args.fit)).collect::<CliResult<Vec<_>>>()?;
    let bytes = ctx.read_input(&args.panel)?;
    let (panel, dropped) = Panel::read_csv(&bytes[..])?;
    let task = ForecastTask::new(panel.spatial(), panel.temporal(), args.t0)?;
    let mut report = run_forecast(&panel, task, &methods)?;
    report.dropped = dropped;
    ctx.out.add("forecast.csv", report.to_table());
    ctx.out.add_json("forecast.json", &report)?;
    Ok(Resolved { config: json!({ "panel": args.panel, "t0": args.t0, "methods": methods }), seed: None })
}

fn decay(ctx: &mut Ctx, args: &DecayArgs) -> CliResult<Resolved> {
    let sigma0 = make_sigma0(&TruthSpec::new(args.p, args.rho, args.alpha)?)?;
    let mut table = String::from("k,a,decay\n");
    for &k in &args.ks {
        for &a in &args.a_values {
            table.push_str(&format!("{k},{a},{}\n", sig6(precision_decay(&sigma0, k, a)?)));
        }
    }
    ctx.out.add("decay.csv", table);
    Ok(Resolved {
        config: json!({ "p": args.p, "rho": args.rho, "alpha": args.alpha, "ks": args.ks, "a": args.a_values }),
        seed: None,
    })
}
