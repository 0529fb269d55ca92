use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

/// Per-iteration record. Undefined gaps are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub f_val: f64,
    pub g_val: f64,
    /// `⟨∇f(x_k), x_k − s_k⟩`.
    pub surrogate_f_gap: f64,
    /// `⟨∇g(x_k), x_k − s_k⟩`.
    pub surrogate_g_gap: f64,
    pub wall_nanos: u64,
    pub iterate: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CriterionMet,
    BudgetExhausted,
    OracleFailure(String),
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::CriterionMet => f.write_str("criterion_met"),
            StopReason::BudgetExhausted => f.write_str("budget_exhausted"),
            StopReason::OracleFailure(msg) => write!(f, "oracle_failure: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub final_point: Array1<f64>,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRow>,
    /// Index into `trace` of the smallest finite surrogate f-gap.
    pub best_index: usize,
}

impl SolveOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }

    pub fn last(&self) -> &TraceRow {
        self.trace.last().expect("trace is never empty")
    }

    pub fn best(&self) -> &TraceRow {
        &self.trace[self.best_index]
    }
}

pub(crate) fn best_index(trace: &[TraceRow]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in trace.iter().enumerate() {
        if row.surrogate_f_gap.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, v)| row.surrogate_f_gap < v) {
            best = Some((i, row.surrogate_f_gap));
        }
    }
    best.map_or(trace.len().saturating_sub(1), |(i, _)| i)
}

/// Accumulates rows for one solver run.
#[derive(Debug)]
pub(crate) struct TraceRecorder {
    rows: Vec<TraceRow>,
    started: Instant,
    timing: bool,
    keep_iterates: bool,
}

impl TraceRecorder {
    pub(crate) fn new(timing: bool, keep_iterates: bool) -> Self {
        Self {
            rows: Vec::new(),
            started: Instant::now(),
            timing,
            keep_iterates,
        }
    }

    pub(crate) fn push(&mut self, k: usize, f_val: f64, g_val: f64, gap_f: f64, gap_g: f64, x: &Array1<f64>) {
        let wall_nanos = if self.timing {
            u64::try_from(self.started.elapsed().as_nanos()).unwrap_or(u64::MAX)
        } else {
            0
        };
        self.rows.push(TraceRow {
            k,
            f_val,
            g_val,
            surrogate_f_gap: gap_f,
            surrogate_g_gap: gap_g,
            wall_nanos,
            iterate: self.keep_iterates.then(|| x.clone()),
        });
    }

    pub(crate) fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub(crate) fn finish(self, final_point: Array1<f64>, stop_reason: StopReason) -> SolveOutcome {
        let best_index = best_index(&self.rows);
        SolveOutcome {
            final_point,
            stop_reason,
            trace: self.rows,
            best_index,
        }
    }
}
