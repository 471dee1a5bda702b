//! Aggregate reports and plot-ready data series.
//!
//! The CSV surfaces are fixed schemas: evaluation reports carry
//! `ratio,accuracy,tokens,act_ratio` rows sorted by ratio descending, and
//! sweep tables carry `all_steps,err_step,type,ori_acc,fin_acc,drop`. The
//! full effective configuration travels in the JSON artifact written next to
//! each CSV. All numeric cells are fixed to two decimals so identical inputs
//! produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::injector::{InjectionKind, SweepRow};
use crate::pipeline::BatchOutcome;

/// One evaluation row at one compression budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub ratio: f64,
    pub accuracy: f64,
    pub tokens: f64,
    pub act_ratio: f64,
}

/// Batch evaluation report. Wall-clock is reported on the console only; the
/// serialized artifact stays deterministic for identical inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: PipelineConfig,
    pub rows: Vec<ReportRow>,
    pub failures: u64,
    #[serde(skip)]
    pub wall_secs: f64,
}

impl EvalReport {
    pub fn new(config: PipelineConfig) -> Self {
        EvalReport {
            config,
            rows: Vec::new(),
            failures: 0,
            wall_secs: 0.0,
        }
    }

    pub fn push_batch(&mut self, ratio: f64, outcome: &BatchOutcome) {
        debug_assert!((0.0..=100.0).contains(&outcome.accuracy));
        self.rows.push(ReportRow {
            ratio,
            accuracy: outcome.accuracy,
            tokens: outcome.mean_tokens,
            act_ratio: outcome.mean_act_ratio,
        });
        self.failures += outcome.failures;
        self.sort_rows();
    }

    /// Table order: ratio descending.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            b.ratio
                .partial_cmp(&a.ratio)
                .expect("ratios are finite")
                .then(std::cmp::Ordering::Equal)
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("ratio,accuracy,tokens,act_ratio\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{:.2},{:.2},{:.2},{:.2}\n",
                row.ratio, row.accuracy, row.tokens, row.act_ratio
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `x,y` series of accuracy against realized ratio, ratio ascending.
    pub fn accuracy_vs_ratio_series(&self) -> String {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.ratio.partial_cmp(&b.ratio).expect("ratios are finite"));
        let mut out = String::from("x,y\n");
        for row in &rows {
            out.push_str(&format!("{:.2},{:.2}\n", row.ratio, row.accuracy));
        }
        out
    }
}

/// Sweep table in the fixed column schema.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("all_steps,err_step,type,ori_acc,fin_acc,drop\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.2},{:.2}\n",
            row.all_steps, row.err_step, row.kind, row.ori_acc, row.fin_acc, row.drop
        ));
    }
    out
}

/// Parses a sweep CSV back into rows (the `fit` entry point accepts tables
/// produced elsewhere, including hand-entered ones).
pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.trim())
        .ok_or_else(|| Error::Dataset {
            line: 1,
            message: "empty sweep file".into(),
        })?;
    if header != "all_steps,err_step,type,ori_acc,fin_acc,drop" {
        return Err(Error::Dataset {
            line: 1,
            message: format!("unexpected sweep header '{header}'"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Dataset {
                line: line_no,
                message: format!("expected 6 columns, found {}", fields.len()),
            });
        }
        let parse_num = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Dataset {
                line: line_no,
                message: format!("bad {what} '{s}'"),
            })
        };
        rows.push(SweepRow {
            all_steps: parse_num(fields[0], "all_steps")? as usize,
            err_step: parse_num(fields[1], "err_step")? as usize,
            kind: fields[2].trim().parse::<InjectionKind>()?,
            ori_acc: parse_num(fields[3], "ori_acc")?,
            fin_acc: parse_num(fields[4], "fin_acc")?,
            drop: parse_num(fields[5], "drop")?,
        });
    }
    if rows.is_empty() {
        return Err(Error::DegenerateInput("sweep file has no rows".into()));
    }
    Ok(rows)
}

/// `x,y` series of accuracy drop against relative error position.
pub fn drop_vs_position_series(rows: &[SweepRow]) -> String {
    let mut out = String::from("x,y\n");
    for row in rows {
        out.push_str(&format!(
            "{:.4},{:.2}\n",
            row.err_step as f64 / row.all_steps as f64,
            row.drop
        ));
    }
    out
}
