//! Trace CSV and summary JSON files.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use bilevel_core::model::{SolveOutcome, TraceRow};
use bilevel_core::{Error, Result};

use crate::experiments::{Prepared, References, Settings, SolverKind};

pub const TRACE_HEADER: [&str; 6] = ["k", "f_val", "g_val", "surrogate_f_gap", "surrogate_g_gap", "wall_nanos"];

/// One finished solver run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance: String,
    pub solver: SolverKind,
    pub settings: Settings,
    pub seed: u64,
    pub references: References,
    pub outcome: SolveOutcome,
}

impl RunRecord {
    pub fn new(prepared: &Prepared, solver: SolverKind, settings: &Settings, seed: u64, outcome: SolveOutcome) -> Self {
        Self {
            instance: prepared.id.clone(),
            solver,
            settings: settings.clone(),
            seed,
            references: prepared.references,
            outcome,
        }
    }

    pub fn summary(&self) -> Summary {
        Summary::from_trace(
            &self.instance,
            self.solver,
            &self.settings,
            self.seed,
            &self.outcome.stop_reason.to_string(),
            &self.outcome.trace,
            self.references,
        )
    }
}

/// Run summary; every number is recomputable from the trace tail and the
/// references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instance: String,
    pub solver: SolverKind,
    pub config: Settings,
    pub stop_reason: String,
    pub iterations: usize,
    /// `|f(x_K) − f*|`, null when `f*` is unknown.
    pub final_f_gap: Option<f64>,
    /// `g(x_K) − g*`, null when `g*` is unknown.
    pub final_g_gap: Option<f64>,
    pub wall_nanos_total: u64,
    pub seed: u64,
    pub references: References,
}

impl Summary {
    pub fn from_trace(
        instance: &str,
        solver: SolverKind,
        config: &Settings,
        seed: u64,
        stop_reason: &str,
        trace: &[TraceRow],
        references: References,
    ) -> Self {
        let last = trace.last();
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            instance: instance.to_string(),
            solver,
            config: config.clone(),
            stop_reason: stop_reason.to_string(),
            iterations: last.map_or(0, |r| r.k),
            final_f_gap: last.zip(references.f_star).and_then(|(r, f)| finite((r.f_val - f).abs())),
            final_g_gap: last.zip(references.g_star).and_then(|(r, g)| finite(r.g_val - g)),
            wall_nanos_total: last.map_or(0, |r| r.wall_nanos),
            seed,
            references,
        }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes rows to `path` through a temporary file renamed into place. Extra
/// `x_i` columns follow when the rows carry iterates.
pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let width = trace.iter().find_map(|r| r.iterate.as_ref().map(|x| x.len())).unwrap_or(0);
    let tmp = path.with_extension("csv.partial");
    {
        let file = File::create(&tmp).map_err(|e| io(&tmp, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let mut header: Vec<String> = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
        header.extend((0..width).map(|i| format!("x_{i}")));
        w.write_record(&header).map_err(|e| io(&tmp, e))?;
        for r in trace {
            let mut rec = vec![
                r.k.to_string(),
                r.f_val.to_string(),
                r.g_val.to_string(),
                r.surrogate_f_gap.to_string(),
                r.surrogate_g_gap.to_string(),
                r.wall_nanos.to_string(),
            ];
            if let Some(x) = &r.iterate {
                rec.extend(x.iter().map(|v| v.to_string()));
            } else {
                rec.extend(std::iter::repeat_n(String::new(), width));
            }
            w.write_record(&rec).map_err(|e| io(&tmp, e))?;
        }
        w.flush().map_err(|e| io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

/// Reads a trace written by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| io(path, e))?.clone();
    if header.len() < TRACE_HEADER.len() || header.iter().zip(TRACE_HEADER).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            row: 1,
            column: 0,
            message: "unexpected trace header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: line,
            column: 0,
            message: e.to_string(),
        })?;
        let cell = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| Error::Parse {
                row: line,
                column: j + 1,
                message: format!("not a number: `{}`", &rec[j]),
            })
        };
        let int = |j: usize| -> Result<u64> {
            rec[j].parse::<u64>().map_err(|_| Error::Parse {
                row: line,
                column: j + 1,
                message: format!("not an integer: `{}`", &rec[j]),
            })
        };
        let iterate = if rec.len() > TRACE_HEADER.len() && !rec[TRACE_HEADER.len()].is_empty() {
            Some(Array1::from((TRACE_HEADER.len()..rec.len()).map(cell).collect::<Result<Vec<_>>>()?))
        } else {
            None
        };
        rows.push(TraceRow {
            k: int(0)? as usize,
            f_val: cell(1)?,
            g_val: cell(2)?,
            surrogate_f_gap: cell(3)?,
            surrogate_g_gap: cell(4)?,
            wall_nanos: int(5)?,
            iterate,
        });
    }
    Ok(rows)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| io(path, e))?;
    let tmp = path.with_extension("json.partial");
    {
        let mut f = File::create(&tmp).map_err(|e| io(&tmp, e))?;
        f.write_all(text.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(|e| io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text).map_err(|e| io(path, e))
}

/// File-name stem for a run: the id with characters outside `[A-Za-z0-9.-]`
/// replaced by `_`.
pub fn run_stem(instance: &str, solver: SolverKind, seed: u64) -> String {
    let clean: String = instance
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    format!("{clean}__{solver}__seed{seed}")
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn persist(dir: &Path, stem: &str, record: &RunRecord) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write_trace(&csv, &record.outcome.trace)?;
    write_summary(&json, &record.summary())?;
    Ok((csv, json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rows(with_x: bool) -> Vec<TraceRow> {
        (0..4)
            .map(|k| TraceRow {
                k,
                f_val: 0.1 * k as f64 + 1e-17,
                g_val: -1.0 / (k as f64 + 3.0),
                surrogate_f_gap: if k == 0 { f64::NAN } else { 1e-300 * k as f64 },
                surrogate_g_gap: f64::INFINITY,
                wall_nanos: 17 * k as u64,
                iterate: with_x.then(|| array![k as f64 / 3.0, -0.0]),
            })
            .collect()
    }

    fn same(a: &TraceRow, b: &TraceRow) -> bool {
        let bits = |v: f64| v.to_bits();
        a.k == b.k
            && bits(a.f_val) == bits(b.f_val)
            && bits(a.g_val) == bits(b.g_val)
            && (bits(a.surrogate_f_gap) == bits(b.surrogate_f_gap) || (a.surrogate_f_gap.is_nan() && b.surrogate_f_gap.is_nan()))
            && bits(a.surrogate_g_gap) == bits(b.surrogate_g_gap)
            && a.wall_nanos == b.wall_nanos
            && match (&a.iterate, &b.iterate) {
                (None, None) => true,
                (Some(x), Some(y)) => x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()),
                _ => false,
            }
    }

    #[test]
    fn trace_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for with_x in [false, true] {
            let path = dir.path().join(format!("t{with_x}.csv"));
            let original = rows(with_x);
            write_trace(&path, &original).unwrap();
            let back = read_trace(&path).unwrap();
            assert_eq!(back.len(), original.len());
            assert!(original.iter().zip(&back).all(|(a, b)| same(a, b)));
        }
    }

    #[test]
    fn header_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace(&path, &rows(false)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,f_val,g_val,surrogate_f_gap,surrogate_g_gap,wall_nanos\n"));
    }

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(run_stem("random:dim=2,seed=1", SolverKind::CgBio, 4), "random_dim_2_seed_1__cg-bio__seed4");
    }
}
