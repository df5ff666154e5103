//! Per-iteration run records and their CSV form.

use std::io::Write;

use crate::error::{Error, Result};
use crate::pnorm_core::Regularizer;

pub const SCHEMA_LINE: &str = "# trace-schema v1";
pub const COLUMNS: [&str; 10] = ["k", "a_k", "A_k", "lambda_k", "lambdahat_k", "gamma_k", "f_y", "move_norm", "drop", "E_k"];

/// One iteration. Points are kept so the gap audit can be recomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub a: f64,
    pub big_a: f64,
    /// â_k and Â_k; equal to a_k and A_k outside the adaptive method.
    pub a_hat: f64,
    pub big_a_hat: f64,
    pub lambda: f64,
    pub lambda_hat: f64,
    pub gamma: f64,
    pub x: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub eps: f64,
    pub f_y: Option<f64>,
    pub f_y_tilde: Option<f64>,
    /// ‖x_k − ỹ_k‖.
    pub move_norm: f64,
    pub drop: Option<f64>,
    pub e_k: Option<f64>,
    /// Oracle audit verdict for this iteration's answer.
    pub oracle_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The oracle reported a stationary query at iteration k.
    AtOptimum { k: usize },
    /// Oracle failure at iteration k; the trace is truncated there.
    Failed { k: usize, reason: String },
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    pub method: String,
    pub p: f64,
    pub r: f64,
    pub c: f64,
    pub sigma: f64,
    pub sigma_prime: f64,
    pub x0: Vec<f64>,
    pub regularizer: Option<Regularizer>,
    pub f_star: Option<f64>,
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    /// Stationary point reported by the oracle, if the run stopped there.
    pub stationary: Option<Vec<f64>>,
}

impl RunTrace {
    pub fn new(method: &str, p: f64, r: f64, x0: &[f64]) -> Self {
        RunTrace {
            method: method.to_string(),
            p,
            r,
            c: f64::NAN,
            sigma: 0.0,
            sigma_prime: 0.0,
            x0: x0.to_vec(),
            regularizer: None,
            f_star: None,
            rows: Vec::new(),
            status: RunStatus::Completed,
            stationary: None,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The final output point y_T (x₀ when no iteration ran).
    pub fn last_point(&self) -> &[f64] {
        if let Some(s) = &self.stationary {
            return s;
        }
        self.rows.last().map(|r| r.y.as_slice()).unwrap_or(&self.x0)
    }

    pub fn final_a(&self) -> f64 {
        self.rows.last().map(|r| r.big_a).unwrap_or(0.0)
    }

    pub fn oracle_audit_passed(&self) -> bool {
        self.rows.iter().all(|r| r.oracle_ok)
    }

    /// Largest `drop − E_k` over audited rows.
    pub fn worst_drop_excess(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| Some(r.drop? - r.e_k?))
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    /// Gaps f(y_k) − f* along the trace, when both are known.
    pub fn gaps(&self) -> Vec<(usize, f64)> {
        let Some(fs) = self.f_star else { return Vec::new() };
        self.rows.iter().filter_map(|r| Some((r.k, r.f_y? - fs))).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{SCHEMA_LINE}")?;
        writeln!(out, "# method={}", self.method)?;
        writeln!(out, "# p={}", self.p)?;
        writeln!(out, "# r={}", self.r)?;
        if let Some(fs) = self.f_star {
            writeln!(out, "# f_star={fs}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.a.to_string(),
                r.big_a.to_string(),
                r.lambda.to_string(),
                r.lambda_hat.to_string(),
                r.gamma.to_string(),
                opt(r.f_y),
                r.move_norm.to_string(),
                opt(r.drop),
                opt(r.e_k),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// A trace read back from CSV: metadata comments plus the numeric columns.
#[derive(Clone, Debug, Default)]
pub struct CsvTrace {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<CsvRow>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvRow {
    pub k: usize,
    pub a: f64,
    pub big_a: f64,
    pub lambda: f64,
    pub lambda_hat: f64,
    pub gamma: f64,
    pub f_y: Option<f64>,
    pub move_norm: f64,
    pub drop: Option<f64>,
    pub e_k: Option<f64>,
}

impl CsvTrace {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(SCHEMA_LINE) {
            return Err(Error::Io("missing trace-schema v1 header".into()));
        }
        let mut meta = Vec::new();
        let mut body = String::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.push((k.to_string(), v.to_string()));
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != COLUMNS {
            return Err(Error::Io(format!("unexpected trace columns: {headers:?}")));
        }
        let num = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|e| Error::Io(format!("bad number {s:?}: {e}"))) };
        let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(CsvRow {
                k: rec[0].parse().map_err(|e| Error::Io(format!("bad k: {e}")))?,
                a: num(&rec[1])?,
                big_a: num(&rec[2])?,
                lambda: num(&rec[3])?,
                lambda_hat: num(&rec[4])?,
                gamma: num(&rec[5])?,
                f_y: opt(&rec[6])?,
                move_norm: num(&rec[7])?,
                drop: opt(&rec[8])?,
                e_k: opt(&rec[9])?,
            });
        }
        Ok(CsvTrace { meta, rows })
    }
}
