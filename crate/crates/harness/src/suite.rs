//! Declarative suites: a JSON list of cells, run over a bounded worker pool
//! and resumable per cell.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use bilevel_core::{Error, Result};

use crate::experiments::{run_cell, CellConfig, SolverKind};
use crate::persist::{persist, run_stem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub instance: String,
    pub solver: SolverKind,
    #[serde(default)]
    pub config: CellConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Cell {
    /// Output stem, prefixed by the cell's position so that repeated cells
    /// with different configs do not collide.
    pub fn stem(&self, index: usize) -> String {
        format!("{index:04}_{}", run_stem(&self.instance, self.solver, self.seed))
    }
}

pub fn parse_suite(text: &str) -> Result<Vec<Cell>> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        row: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load_suite(path: &Path) -> Result<Vec<Cell>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_suite(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Done { csv: PathBuf, json: PathBuf },
    /// The summary already existed.
    Skipped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub index: usize,
    pub stem: String,
    pub status: CellStatus,
}

#[derive(Serialize)]
struct FailureFile<'a> {
    instance: &'a str,
    solver: SolverKind,
    seed: u64,
    error: &'a str,
}

fn run_one(dir: &Path, index: usize, cell: &Cell) -> CellReport {
    let stem = cell.stem(index);
    let failed = dir.join(format!("{stem}.failed.json"));
    if dir.join(format!("{stem}.json")).exists() {
        return CellReport {
            index,
            stem,
            status: CellStatus::Skipped,
        };
    }
    let status = match run_cell(&cell.instance, cell.solver, &cell.config, cell.seed).and_then(|rec| persist(dir, &stem, &rec)) {
        Ok((csv, json)) => {
            let _ = fs::remove_file(&failed);
            CellStatus::Done { csv, json }
        }
        Err(e) => {
            let msg = e.to_string();
            let body = FailureFile {
                instance: &cell.instance,
                solver: cell.solver,
                seed: cell.seed,
                error: &msg,
            };
            let text = serde_json::to_string_pretty(&body).expect("plain struct serializes");
            if let Err(io) = fs::write(&failed, text) {
                CellStatus::Failed(format!("{msg}; could not record failure: {io}"))
            } else {
                CellStatus::Failed(msg)
            }
        }
    };
    CellReport { index, stem, status }
}

/// Runs every cell with up to `jobs` workers. Cell failures are recorded in
/// `<stem>.failed.json` and do not stop the suite; reports come back in cell
/// order.
pub fn run_suite(cells: &[Cell], dir: &Path, jobs: usize) -> Result<Vec<CellReport>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let next = AtomicUsize::new(0);
    let reports = Mutex::new(Vec::with_capacity(cells.len()));
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let report = run_one(dir, i, cell);
                reports.lock().expect("no worker panics while holding the lock").push(report);
            });
        }
    });
    let mut reports = reports.into_inner().expect("workers joined");
    reports.sort_by_key(|r| r.index);
    Ok(reports)
}
