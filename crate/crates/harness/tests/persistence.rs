use std::fs;

use bilevel_harness::experiments::{run_cell, CellConfig, SolverKind};
use bilevel_harness::persist::{persist, read_summary, read_trace, Summary};
use bilevel_harness::suite::{parse_suite, run_suite, CellStatus};

fn quiet(iters: usize) -> CellConfig {
    CellConfig {
        max_iters: Some(iters),
        record_iterates: Some(true),
        timing: Some(false),
        ..CellConfig::default()
    }
}

#[test]
fn trace_and_summary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for solver in [SolverKind::CgBio, SolverKind::AIrg, SolverKind::Dbgd] {
        let rec = run_cell("random:dim=3", solver, &quiet(50), 4).unwrap();
        let (csv, json) = persist(dir.path(), &format!("rt-{solver}"), &rec).unwrap();
        let trace = read_trace(&csv).unwrap();
        assert_eq!(trace.len(), rec.outcome.trace.len());
        for (a, b) in trace.iter().zip(&rec.outcome.trace) {
            assert_eq!(a.k, b.k);
            assert_eq!(a.f_val.to_bits(), b.f_val.to_bits());
            assert_eq!(a.g_val.to_bits(), b.g_val.to_bits());
            assert_eq!(a.iterate, b.iterate);
        }
        let summary = read_summary(&json).unwrap();
        assert_eq!(summary, rec.summary());

        // Everything in the summary follows from the trace read back from disk.
        let again = Summary::from_trace(
            &summary.instance,
            summary.solver,
            &summary.config,
            summary.seed,
            &summary.stop_reason,
            &trace,
            summary.references,
        );
        assert_eq!(again, summary);
    }
}

#[test]
fn suite_reruns_are_byte_identical() {
    let text = r#"[
        {"instance": "toy", "solver": "cg-bio", "config": {"timing": false}},
        {"instance": "random:dim=2", "solver": "cg-upper", "seed": 3, "config": {"max_iters": 40, "timing": false}},
        {"instance": "random:dim=3", "solver": "a-irg", "seed": 5, "config": {"max_iters": 40, "timing": false}}
    ]"#;
    let cells = parse_suite(text).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_suite(&cells, a.path(), 1).unwrap();
    let rb = run_suite(&cells, b.path(), 3).unwrap();
    assert_eq!(ra.len(), 3);
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(x.stem, y.stem);
        let (CellStatus::Done { csv: c1, json: j1 }, CellStatus::Done { csv: c2, json: j2 }) = (&x.status, &y.status) else {
            panic!("{:?} / {:?}", x.status, y.status);
        };
        assert_eq!(fs::read(c1).unwrap(), fs::read(c2).unwrap());
        assert_eq!(fs::read(j1).unwrap(), fs::read(j2).unwrap());
    }
    let resumed = run_suite(&cells, a.path(), 2).unwrap();
    assert!(resumed.iter().all(|r| r.status == CellStatus::Skipped));
}
