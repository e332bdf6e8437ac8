//! Space × time panels: bandable ordering, centering, splitting and
//! forecasting of trailing time blocks.
//!
//! A unit observed at `S` locations and `T` times is flattened time-major,
//! space-minor: `(X_{1,1}, …, X_{S,1}, X_{1,2}, …, X_{S,T})`. Forecasting
//! times `t0+1..T` from times `1..t0` is then the regression of the last
//! `(T − t0)·S` coordinates on the first `t0·S`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{sample_covariance, CoefMatrix, Estimator, Partition};
use crate::linalg::{CovMatrix, DataMatrix};
use crate::rng::domain;
use crate::simulation::sample_gaussian;

/// Flatten a grid indexed `grid[s][t]`.
pub fn rearrange(grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    let spatial = grid.len();
    let temporal = grid.first().map_or(0, Vec::len);
    if spatial == 0 || temporal == 0 {
        return Err(Error::invalid("empty grid"));
    }
    if grid.iter().any(|row| row.len() != temporal) {
        return Err(Error::invalid("grid rows have different lengths"));
    }
    Ok((0..temporal).flat_map(|t| grid.iter().map(move |row| row[t])).collect())
}

/// Inverse of [`rearrange`].
pub fn unrearrange(z: &[f64], spatial: usize, temporal: usize) -> Result<Vec<Vec<f64>>> {
    if z.len() != spatial * temporal || spatial == 0 {
        return Err(Error::shape("unrearrange", spatial * temporal, z.len()));
    }
    Ok((0..spatial).map(|s| (0..temporal).map(|t| z[t * spatial + s]).collect()).collect())
}

/// Subtract column means; returns the centered data and the means.
pub fn center(z: &DataMatrix) -> Result<(DataMatrix, Vec<f64>)> {
    if z.n() == 0 {
        return Err(Error::InsufficientData("centering needs at least one row".into()));
    }
    let mut means = vec![0.0; z.p()];
    for row in z.rows() {
        means.iter_mut().zip(row).for_each(|(m, x)| *m += x);
    }
    let n = z.n() as f64;
    means.iter_mut().for_each(|m| *m /= n);
    Ok((center_with(z, &means)?, means))
}

/// Subtract a given mean vector from every row.
pub fn center_with(z: &DataMatrix, means: &[f64]) -> Result<DataMatrix> {
    if means.len() != z.p() {
        return Err(Error::shape("center_with", z.p(), means.len()));
    }
    let data = z.rows().flat_map(|row| row.iter().zip(means).map(|(x, m)| x - m)).collect();
    DataMatrix::new(z.n(), z.p(), data)
}

/// Panel geometry plus the cut time `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastTask {
    spatial: usize,
    temporal: usize,
    t0: usize,
}

impl ForecastTask {
    pub fn new(spatial: usize, temporal: usize, t0: usize) -> Result<Self> {
        if spatial == 0 {
            return Err(Error::invalid("spatial count must be >= 1"));
        }
        if t0 < 1 || t0 >= temporal {
            return Err(Error::invalid(format!("cut time must satisfy 1 <= t0 < T = {temporal}, got {t0}")));
        }
        Ok(ForecastTask { spatial, temporal, t0 })
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    /// `T·S`.
    pub fn p(&self) -> usize {
        self.spatial * self.temporal
    }

    /// `t0·S`.
    pub fn p0(&self) -> usize {
        self.spatial * self.t0
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.p(), self.p0()).expect("validated in ForecastTask::new")
    }
}

/// Mean over test rows of `‖Ĉ x − y‖₂`.
pub fn forecast_error(c_hat: &CoefMatrix, test: &DataMatrix, task: ForecastTask) -> Result<f64> {
    let (p, p0) = (task.p(), task.p0());
    if test.n() == 0 {
        return Err(Error::InsufficientData("no test rows".into()));
    }
    if test.p() != p {
        return Err(Error::shape("forecast_error data", p, test.p()));
    }
    if c_hat.shape() != (p - p0, p0) {
        return Err(Error::shape("forecast_error coefficient", format!("{}x{}", p - p0, p0), format!("{:?}", c_hat.shape())));
    }
    let mut total = 0.0;
    for row in test.rows() {
        let pred = c_hat.mul_vec(&row[..p0])?;
        let sq: f64 = pred.iter().zip(&row[p0..]).map(|(a, b)| (a - b) * (a - b)).sum();
        total += sq.sqrt();
    }
    Ok(total / test.n() as f64)
}

/// A unit dropped during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedUnit {
    pub unit_id: String,
    pub line: u64,
    pub reason: String,
}

/// Complete units, each stored in rearranged order.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    spatial: usize,
    temporal: usize,
    unit_ids: Vec<String>,
    data: DataMatrix,
}

impl Panel {
    /// From grids indexed `grid[s][t]`.
    pub fn from_grids(unit_ids: Vec<String>, grids: &[Vec<Vec<f64>>]) -> Result<Self> {
        if unit_ids.len() != grids.len() {
            return Err(Error::shape("panel ids", grids.len(), unit_ids.len()));
        }
        let first = grids.first().ok_or_else(|| Error::InsufficientData("panel has no units".into()))?;
        let (spatial, temporal) = (first.len(), first.first().map_or(0, Vec::len));
        let mut data = Vec::with_capacity(grids.len() * spatial * temporal);
        for g in grids {
            if g.len() != spatial || g.iter().any(|r| r.len() != temporal) {
                return Err(Error::invalid("panel grids have different shapes"));
            }
            data.extend(rearrange(g)?);
        }
        let data = DataMatrix::new(grids.len(), spatial * temporal, data)?;
        Ok(Panel { spatial, temporal, unit_ids, data })
    }

    /// From already rearranged rows.
    pub fn from_rearranged(spatial: usize, temporal: usize, unit_ids: Vec<String>, data: DataMatrix) -> Result<Self> {
        if data.p() != spatial * temporal || spatial == 0 {
            return Err(Error::shape("panel", spatial * temporal, data.p()));
        }
        if unit_ids.len() != data.n() {
            return Err(Error::shape("panel ids", data.n(), unit_ids.len()));
        }
        Ok(Panel { spatial, temporal, unit_ids, data })
    }

    /// Parse the panel CSV format: header `unit_id,x_s1_t1,x_s2_t1,…,x_sS_tT`.
    ///
    /// Units with an empty, `NA` or non-numeric cell are dropped and listed.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Self, Vec<DroppedUnit>)> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let (spatial, temporal) = parse_header(&header)?;
        let p = spatial * temporal;
        let (mut ids, mut data, mut dropped) = (Vec::new(), Vec::new(), Vec::new());
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |pos| pos.line());
            let id = record.get(0).unwrap_or("").to_string();
            let parsed: std::result::Result<Vec<f64>, String> = record
                .iter()
                .skip(1)
                .enumerate()
                .map(|(c, cell)| match cell {
                    "" | "NA" | "na" | "NaN" | "nan" => Err(format!("missing value in column {}", c + 2)),
                    _ => cell
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| format!("non-numeric value {cell:?} in column {}", c + 2)),
                })
                .collect();
            match parsed {
                Ok(values) => {
                    debug_assert_eq!(values.len(), p);
                    ids.push(id);
                    data.extend(values);
                }
                Err(reason) => {
                    log::warn!("dropping unit {id:?} (line {line}): {reason}");
                    dropped.push(DroppedUnit { unit_id: id, line, reason });
                }
            }
        }
        let data = DataMatrix::new(ids.len(), p, data)?;
        Ok((Panel { spatial, temporal, unit_ids: ids, data }, dropped))
    }

    /// Write in the format read by [`read_csv`](Self::read_csv).
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["unit_id".to_string()];
        for t in 1..=self.temporal {
            for s in 1..=self.spatial {
                header.push(format!("x_s{s}_t{t}"));
            }
        }
        w.write_record(&header)?;
        for (id, row) in self.unit_ids.iter().zip(self.data.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn spatial(&self) -> usize {
        self.spatial
    }

    pub fn temporal(&self) -> usize {
        self.temporal
    }

    pub fn units(&self) -> usize {
        self.data.n()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    /// Rearranged observations, one row per unit.
    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn grid(&self, unit: usize) -> Vec<Vec<f64>> {
        unrearrange(self.data.row(unit), self.spatial, self.temporal).expect("panel shape is consistent")
    }
}

fn parse_header(header: &csv::StringRecord) -> Result<(usize, usize)> {
    let bad = |msg: String| Error::invalid(format!("panel header: {msg}"));
    if header.get(0) != Some("unit_id") {
        return Err(bad("first column must be unit_id".into()));
    }
    let mut cells = Vec::new();
    for name in header.iter().skip(1) {
        let rest = name.strip_prefix("x_s").ok_or_else(|| bad(format!("unexpected column {name:?}")))?;
        let (s, t) = rest.split_once("_t").ok_or_else(|| bad(format!("unexpected column {name:?}")))?;
        let s: usize = s.parse().map_err(|_| bad(format!("bad spatial index in {name:?}")))?;
        let t: usize = t.parse().map_err(|_| bad(format!("bad time index in {name:?}")))?;
        cells.push((s, t));
    }
    let spatial = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let temporal = cells.iter().map(|c| c.1).max().unwrap_or(0);
    if spatial == 0 || temporal == 0 || cells.len() != spatial * temporal {
        return Err(bad(format!("{} value columns do not form an S x T grid", cells.len())));
    }
    for (idx, &(s, t)) in cells.iter().enumerate() {
        if (s, t) != (idx % spatial + 1, idx / spatial + 1) {
            return Err(bad(format!("column x_s{s}_t{t} out of time-major, space-minor order")));
        }
    }
    Ok((spatial, temporal))
}

/// Chronological split and train-mean centering.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTest {
    pub train: DataMatrix,
    pub test: DataMatrix,
    /// Training means, also subtracted from the test rows.
    pub means: Vec<f64>,
}

/// First `⌈n/2⌉` units train, the rest test; both centered with train means.
pub fn split_and_center(data: &DataMatrix) -> Result<TrainTest> {
    let n = data.n();
    let n_train = n.div_ceil(2);
    if n_train < 2 || n - n_train < 1 {
        return Err(Error::InsufficientData(format!("need at least 3 units for a train/test split, got {n}")));
    }
    let (train, means) = center(&data.slice_rows(0..n_train))?;
    let test = center_with(&data.slice_rows(n_train..n), &means)?;
    Ok(TrainTest { train, test, means })
}

/// One row of the forecast table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub method: String,
    pub estimator: Estimator,
    pub error: f64,
}

/// Forecast errors per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub spatial: usize,
    pub temporal: usize,
    pub t0: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub dropped: Vec<DroppedUnit>,
    pub rows: Vec<ForecastRow>,
}

impl ForecastReport {
    /// `method,error` table with six significant digits.
    pub fn to_table(&self) -> String {
        let mut out = String::from("method,error\n");
        for row in &self.rows {
            out.push_str(&format!("{},{}\n", row.method, sig6(row.error)));
        }
        out
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 5 - x.abs().log10().floor() as i32;
    if (0..=15).contains(&digits) {
        format!("{:.*}", digits as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

/// Fit each estimator on the training half and score it on the test half.
pub fn run_forecast(panel: &Panel, task: ForecastTask, methods: &[Estimator]) -> Result<ForecastReport> {
    if (panel.spatial, panel.temporal) != (task.spatial, task.temporal) {
        return Err(Error::shape(
            "run_forecast",
            format!("S={}, T={}", task.spatial, task.temporal),
            format!("S={}, T={}", panel.spatial, panel.temporal),
        ));
    }
    let split = split_and_center(&panel.data)?;
    let s = sample_covariance(&split.train)?;
    let part = task.partition();
    let rows = methods
        .iter()
        .map(|m| {
            let c_hat = m.fit(&s, part)?;
            Ok(ForecastRow { method: m.label(), estimator: *m, error: forecast_error(&c_hat, &split.test, task)? })
        })
        .collect::<Result<_>>()?;
    Ok(ForecastReport {
        spatial: panel.spatial,
        temporal: panel.temporal,
        t0: task.t0,
        n_train: split.train.n(),
        n_test: split.test.n(),
        dropped: Vec::new(),
        rows,
    })
}

/// Covariance model for synthetic panels.
///
/// `Cov(X_{s1,t1}, X_{s2,t2}) = c (1 + |t1 − t2|)^{−α−1} K(s1, s2) + nugget·δ`
/// with `K` exchangeable: 1 on the diagonal, `spatial_corr` off it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelModel {
    pub spatial: usize,
    pub temporal: usize,
    pub alpha: f64,
    pub scale: f64,
    pub spatial_corr: f64,
    pub nugget: f64,
}

impl PanelModel {
    pub fn new(spatial: usize, temporal: usize) -> Self {
        PanelModel { spatial, temporal, alpha: 0.5, scale: 1.0, spatial_corr: 0.5, nugget: 0.1 }
    }

    /// Temporal decay `r(h) = c (1 + h)^{−α−1}`.
    pub fn decay(&self, lag: usize) -> f64 {
        self.scale * (1.0 + lag as f64).powf(-self.alpha - 1.0)
    }

    /// Covariance of the rearranged vector.
    pub fn covariance(&self) -> Result<CovMatrix> {
        if self.spatial == 0 || self.temporal == 0 {
            return Err(Error::invalid("panel model needs S, T >= 1"));
        }
        if !(0.0..1.0).contains(&self.spatial_corr) || !(self.scale > 0.0) || !(self.nugget >= 0.0) || !(self.alpha > 0.0) {
            return Err(Error::invalid("panel model needs scale > 0, alpha > 0, nugget >= 0, 0 <= spatial_corr < 1"));
        }
        let s = self.spatial;
        Ok(CovMatrix::from_fn(s * self.temporal, |i, j| {
            let (ti, si) = (i / s, i % s);
            let (tj, sj) = (j / s, j % s);
            let k = if si == sj { 1.0 } else { self.spatial_corr };
            self.decay(ti.abs_diff(tj)) * k + if i == j { self.nugget } else { 0.0 }
        }))
    }
}

/// `units` i.i.d. Gaussian units drawn from `model`.
pub fn synthetic_panel(model: &PanelModel, units: usize, seed: u64) -> Result<Panel> {
    let sigma = model.covariance()?;
    let data = sample_gaussian(&sigma, units, crate::rng::derive_seed(seed, domain::PANEL))?;
    let ids = (1..=units).map(|u| format!("u{u:04}")).collect();
    Panel::from_rearranged(model.spatial, model.temporal, ids, data)
}
