//! CSV output: a `#` metadata block followed by a header and rows.

use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{FrontPoint, RunConfig, RunResult};
use crate::priorities::{PriorityError, PriorityMatrix};

pub const TOOL_VERSION: &str = concat!("pareto-consensus ", env!("CARGO_PKG_VERSION"));

pub const TRAJECTORY_DIGITS: usize = 17;
pub const SUMMARY_DIGITS: usize = 6;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("row {row} has {got} columns, header has {expected}")]
    ColumnCount {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("priorities file: {0}")]
    Priorities(String),
    #[error("priorities record {record}: {source}")]
    PriorityRecord {
        record: usize,
        source: PriorityError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `v` with `digits` significant digits; fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let exp = v.abs().log10().floor() as i64;
    if (-5..digits as i64).contains(&exp) {
        let decimals = (digits as i64 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.prec$e}", prec = digits - 1)
    }
}

/// Resolved run parameters echoed at the top of every CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub scenario: String,
    pub c: f64,
    pub c_defaulted: bool,
    pub a_from_updated_w: bool,
    pub eta_a: f64,
    pub alpha: f64,
    pub k_max: usize,
    pub record_every: usize,
}

impl Metadata {
    pub fn new(scenario: &str, cfg: &RunConfig, c_defaulted: bool, eta_a: f64) -> Self {
        Metadata {
            scenario: scenario.to_string(),
            c: cfg.c,
            c_defaulted,
            a_from_updated_w: cfg.a_from_updated_w,
            eta_a,
            alpha: cfg.alpha,
            k_max: cfg.k_max,
            record_every: cfg.record_every,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {TOOL_VERSION}");
        let _ = writeln!(s, "# scenario: {}", self.scenario);
        let _ = writeln!(
            s,
            "# c: {:?}{}",
            self.c,
            if self.c_defaulted { " (default 0.9/max_degree)" } else { "" }
        );
        let _ = writeln!(
            s,
            "# mixing_from: {}",
            if self.a_from_updated_w { "W(k+1)" } else { "W(k)" }
        );
        let _ = writeln!(s, "# eta_a: {:?}", self.eta_a);
        let _ = writeln!(s, "# alpha: {:?}", self.alpha);
        let _ = writeln!(s, "# k_max: {}", self.k_max);
        let _ = writeln!(s, "# record_every: {}", self.record_every);
        s
    }
}

/// Header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(header: Vec<String>) -> Self {
        ResultTable {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), ReportError> {
        if row.len() != self.header.len() {
            return Err(ReportError::ColumnCount {
                row: self.rows.len() + 1,
                expected: self.header.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self, meta: &Metadata, digits: usize) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_sig(*v, digits)))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is utf-8");
        Ok(meta.render() + &body)
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// `k, gap, xhat_<i>_<p>...` with `gap = max_i f(x̂^i(k)) − f(x*)`.
pub fn trajectory_table(result: &RunResult, fstar: f64) -> Result<ResultTable, ReportError> {
    let n = result.xhat.len();
    let m = result.xhat.first().map_or(0, Vec::len);
    let mut header = vec!["k".to_string(), "gap".to_string()];
    for i in 1..=n {
        header.extend((1..=m).map(|p| format!("xhat_{i}_{p}")));
    }
    let mut t = ResultTable::new(header);
    for s in &result.samples {
        let gap = s.value.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v - fstar));
        let mut row = vec![s.k as f64, gap];
        row.extend(s.xhat.iter().flatten());
        t.push(row)?;
    }
    Ok(t)
}

/// One summary row: `w̄`, `x*`, per-agent `x̂`, `f(x*)`, `f(x̂)`, plus the
/// final iterate (agent mean) and its value.
pub fn summary_table(
    cfg: &RunConfig,
    result: &RunResult,
    xstar: &[f64],
) -> Result<ResultTable, ReportError> {
    let n = result.xhat.len();
    let m = xstar.len();
    let mut header: Vec<String> = indexed("wbar_", n).collect();
    header.extend(indexed("xstar_", m));
    for i in 1..=n {
        header.extend((1..=m).map(|p| format!("xhat_{i}_{p}")));
    }
    header.push("f_xstar".into());
    header.push("f_xhat".into());
    header.extend(indexed("xfinal_", m));
    header.push("f_xfinal".into());

    let value = |x: &[f64]| -> f64 {
        cfg.objectives
            .iter()
            .zip(result.wbar.iter())
            .map(|(f, w)| w * f.evaluate(x).unwrap_or(f64::NAN))
            .sum()
    };
    let xhat = result.xhat_mean();
    let xfinal = result.x_final_mean();
    let mut row: Vec<f64> = result.wbar.iter().copied().collect();
    row.extend(xstar);
    row.extend(result.xhat.iter().flatten());
    row.push(value(xstar));
    row.push(value(&xhat));
    row.extend(&xfinal);
    row.push(value(&xfinal));
    let mut t = ResultTable::new(header);
    t.push(row)?;
    Ok(t)
}

/// `wbar_<j>..., f<j>..., weighted` per front point.
pub fn front_table(points: &[FrontPoint]) -> Result<ResultTable, ReportError> {
    let n = points.first().map_or(0, |p| p.wbar.len());
    let mut header: Vec<String> = indexed("wbar_", n).collect();
    header.extend(indexed("f", n));
    header.push("weighted".into());
    let mut t = ResultTable::new(header);
    for p in points {
        let mut row: Vec<f64> = p.wbar.iter().copied().collect();
        row.extend(&p.values);
        row.push(p.weighted);
        t.push(row)?;
    }
    Ok(t)
}

/// Reads one `n×n` matrix per record from columns `w<i>_<j>` (1-based,
/// row-major). Lines starting with `#` are skipped.
pub fn read_priorities_csv(text: &str) -> Result<Vec<PriorityMatrix>, ReportError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let cols = header.len();
    let n = (cols as f64).sqrt().round() as usize;
    if n < 2 || n * n != cols {
        return Err(ReportError::Priorities(format!(
            "{cols} columns is not a square number of at least 4"
        )));
    }
    for (idx, name) in header.iter().enumerate() {
        let want = format!("w{}_{}", idx / n + 1, idx % n + 1);
        if name != want {
            return Err(ReportError::Priorities(format!(
                "column {} is `{name}`, expected `{want}`",
                idx + 1
            )));
        }
    }
    let mut out = Vec::new();
    for (rec_idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    ReportError::Priorities(format!("record {}: `{v}` is not a number", rec_idx + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Vec<f64>> = values.chunks(n).map(<[f64]>::to_vec).collect();
        let w = PriorityMatrix::from_rows(&rows).map_err(|source| ReportError::PriorityRecord {
            record: rec_idx + 1,
            source,
        })?;
        out.push(w);
    }
    if out.is_empty() {
        return Err(ReportError::Priorities("no records".into()));
    }
    Ok(out)
}

/// Inverse of [`read_priorities_csv`].
pub fn write_priorities_csv(list: &[PriorityMatrix]) -> Result<String, ReportError> {
    let n = list.first().map_or(0, PriorityMatrix::agent_count);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..n * n).map(|k| format!("w{}_{}", k / n + 1, k % n + 1)))?;
    for m in list {
        let mm = m.as_matrix();
        w.write_record((0..n * n).map(|k| format!("{:?}", mm[(k / n, k % n)])))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}
