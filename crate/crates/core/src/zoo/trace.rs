use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::block::BlockVector;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "iter,cluster,f_exact,grad_sq_active,guarded,seed_counter";

/// One iteration of an asynchronous run, describing the iterate `x^k` the step
/// started from and the update applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// 0-based index of the cluster updated at this step.
    pub cluster: usize,
    /// `(agent, ||g_i||)` for every agent updated at this step.
    pub grad_norms: Vec<(usize, f64)>,
    /// Exact `f(x^k)`, when an oracle is available.
    pub f_exact: Option<f64>,
    /// Exact `sum_{i in active} ||grad_i f(x^k)||^2`, when an oracle is available.
    pub grad_sq_active: Option<f64>,
    /// Number of observations clamped by the guard during this step.
    pub guarded: usize,
    /// Cumulative number of random streams opened up to and including this step.
    pub seed_counter: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub final_x: BlockVector,
    /// Exact value at the final iterate, when available.
    pub final_f: Option<f64>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(1/T) sum_k sum_{i in active_k} ||grad_i f(x^k)||^2`, if every record has it.
    pub fn mean_grad_sq_active(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let mut acc = 0.0;
        for r in &self.records {
            acc += r.grad_sq_active?;
        }
        Some(acc / self.records.len() as f64)
    }

    /// Exact values `f(x^0), ..., f(x^{T-1})` followed by `f(x^T)`.
    pub fn cost_curve(&self) -> Option<Vec<f64>> {
        let mut out: Vec<f64> = self.records.iter().map(|r| r.f_exact).collect::<Option<_>>()?;
        out.push(self.final_f?);
        Some(out)
    }

    /// First index whose exact value is at or below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.cost_curve()?.iter().position(|&v| v <= threshold)
    }

    pub fn guarded_total(&self) -> usize {
        self.records.iter().map(|r| r.guarded).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.iter,
                r.cluster + 1,
                fmt_opt(r.f_exact),
                fmt_opt(r.grad_sq_active),
                r.guarded,
                r.seed_counter
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// 17 significant digits; missing values are empty fields.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// One parsed row of a trace CSV (cluster 1-based as written).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub cluster: usize,
    pub f_exact: Option<f64>,
    pub grad_sq_active: Option<f64>,
    pub guarded: usize,
    pub seed_counter: u64,
}

pub fn parse_trace_csv(text: &str, origin: &str) -> Result<Vec<TraceRow>> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(perr(1, format!("expected header `{TRACE_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(perr(lineno, format!("expected 6 fields, found {}", fields.len())));
        }
        let int = |s: &str, name: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| perr(lineno, format!("bad {name} `{s}`")))
        };
        let float = |s: &str, name: &str| -> Result<Option<f64>> {
            let s = s.trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| perr(lineno, format!("bad {name} `{s}`")))
        };
        rows.push(TraceRow {
            iter: int(fields[0], "iter")? as usize,
            cluster: int(fields[1], "cluster")? as usize,
            f_exact: float(fields[2], "f_exact")?,
            grad_sq_active: float(fields[3], "grad_sq_active")?,
            guarded: int(fields[4], "guarded")? as usize,
            seed_counter: int(fields[5], "seed_counter")?,
        });
    }
    Ok(rows)
}
