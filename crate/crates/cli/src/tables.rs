//! CSV input parsing and the human-facing CSV tables.

use bandtaper::simulation::{StudyReport, TValue};
use bandtaper::spatiotemporal::sig6;
use bandtaper::{CoefMatrix, DataMatrix};

use crate::error::{CliError, CliResult};

/// A numeric CSV with a header row.
#[derive(Debug, Clone)]
pub struct NamedData {
    pub columns: Vec<String>,
    pub data: DataMatrix,
}

/// Parse a CSV with a header row and numeric cells. Any ragged row, blank or
/// non-numeric cell is an error naming its line and column.
pub fn read_data(bytes: &[u8]) -> CliResult<NamedData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let columns: Vec<String> =
        rdr.headers().map_err(|e| CliError::input(format!("csv header: {e}")))?.iter().map(String::from).collect();
    if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
        return Err(CliError::input("csv: missing header row"));
    }
    let p = columns.len();
    let mut values = Vec::new();
    let mut n = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::input(format!("csv: {e}")))?;
        let line = record.position().map_or(0, |pos| pos.line());
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::input(format!("csv line {line}, column {}: {cell:?} is not a number", c + 1)))?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::input("csv: no data rows"));
    }
    Ok(NamedData { columns, data: DataMatrix::new(n, p, values)? })
}

/// Coefficient matrix with response names down the side and predictor names across.
pub fn coef_csv(c: &CoefMatrix, columns: &[String]) -> String {
    let p0 = c.cols();
    let mut out = String::from("response");
    for name in &columns[..p0] {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, name) in columns[p0..].iter().enumerate() {
        out.push_str(name);
        for &v in c.row(i) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// One risk study per `(n, α)` cell.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RiskGridCell {
    pub n: usize,
    pub alpha: f64,
    pub report: StudyReport,
}

/// Rows are methods, columns are `(n, α)` cells, entries mean spectral loss.
pub fn table1_csv(cells: &[RiskGridCell]) -> String {
    let mut out = String::from("method");
    for c in cells {
        out.push_str(&format!(",n={} alpha={}", c.n, c.alpha));
    }
    out.push('\n');
    let Some(first) = cells.first() else { return out };
    for (m, risk) in first.report.risk.iter().enumerate() {
        out.push_str(&risk.method);
        for c in cells {
            let cell = &c.report.risk[m];
            out.push(',');
            if cell.losses.is_empty() {
                out.push_str("NA");
            } else {
                out.push_str(&sig6(cell.mean_loss));
            }
        }
        out.push('\n');
    }
    out
}

fn tvalue_cell(t: Option<TValue>) -> String {
    match t {
        Some(TValue::Value(v)) => sig6(v),
        Some(TValue::Degenerate) => "degenerate".into(),
        None => "NA".into(),
    }
}

/// Rows are `k`; columns are `t_f` then `t_b` for each `a`.
pub fn figure1_csv(report: &StudyReport) -> String {
    let mut ks: Vec<usize> = report.compare.iter().map(|c| c.k).collect();
    ks.dedup();
    let mut as_: Vec<f64> = Vec::new();
    for c in &report.compare {
        if !as_.contains(&c.a) {
            as_.push(c.a);
        }
    }
    let mut out = String::from("k");
    for side in ["t_f", "t_b"] {
        for a in &as_ {
            out.push_str(&format!(",{side} a={a}"));
        }
    }
    out.push('\n');
    for k in ks {
        out.push_str(&k.to_string());
        for bayes in [false, true] {
            for &a in &as_ {
                let cell = report.compare.iter().find(|c| c.k == k && c.a == a);
                out.push(',');
                out.push_str(&tvalue_cell(cell.and_then(|c| if bayes { c.t_b } else { c.t_f })));
            }
        }
        out.push('\n');
    }
    out
}

pub fn rate_csv(report: &StudyReport) -> String {
    let mut out = String::from("n,p,p0,k,squared_risk\n");
    for r in &report.rate {
        out.push_str(&format!("{},{},{},{},{}\n", r.n, r.p, r.p0, r.k, sig6(r.squared_risk)));
    }
    out
}
