use std::time::Duration;

use perceplan::{bundled, Task};
use perceplan_bench::{emit_report, parse_csv, run_experiment, ReportFormat, RunMetrics, RunRecord};
use proptest::prelude::*;

const BUDGET: Duration = Duration::from_secs(60);

fn sweep(runs: usize) -> Vec<RunMetrics> {
    let mut rows = Vec::new();
    for n in 1..=3 {
        let inst = bundled::instance(n).unwrap();
        for task in [Task::First, Task::Count(100)] {
            for s in perceplan::Strategy::ALL {
                rows.push(run_experiment(&inst, &n.to_string(), s, task, BUDGET, runs).unwrap());
            }
        }
    }
    rows
}

fn counts(rows: &[RunMetrics]) -> Vec<(usize, usize, usize, bool)> {
    rows.iter().flat_map(|m| m.runs.iter().map(|r| (r.queries, r.feasible, r.infeasible, r.timed_out))).collect()
}

fn record() -> impl Strategy<Value = RunRecord> {
    (0usize..10, 0usize..100_000, 0usize..1000, 0usize..100_000, 0u64..10_000_000_000, any::<bool>()).prop_map(
        |(run, queries, feasible, infeasible, nanos, timed_out)| RunRecord {
            run,
            queries,
            feasible,
            infeasible,
            wall_time: Duration::from_nanos(nanos),
            timed_out,
        },
    )
}

#[test]
fn full_sweep_table_layout() {
    let rows = sweep(1);
    assert_eq!(rows.len(), 24);
    let table = emit_report(&rows, ReportFormat::Table);
    let headers: Vec<&str> = table.lines().filter(|l| l.starts_with("instance")).collect();
    assert_eq!(headers.len(), 3);
    for h in headers {
        let cols: Vec<&str> = h.split_whitespace().skip(2).collect();
        assert_eq!(cols, ["None", "Filt", "Pre", "Repl"]);
    }
    assert_eq!(emit_report(&rows, ReportFormat::Plotdata).lines().count(), 25);
    assert_eq!(emit_report(&rows, ReportFormat::Csv).lines().count(), 25);
}

#[test]
fn sweeps_repeat_exactly_apart_from_time() {
    let twice = sweep(2);
    for m in &twice {
        let c = |r: &RunRecord| (r.queries, r.feasible, r.infeasible, r.timed_out);
        assert_eq!(c(&m.runs[0]), c(&m.runs[1]));
    }
    let once = sweep(1);
    let first_runs: Vec<_> = counts(&twice).into_iter().step_by(2).collect();
    assert_eq!(first_runs, counts(&once));
}

proptest! {
    #[test]
    fn csv_round_trips(records in prop::collection::vec(record(), 1..6), id in "[a-z0-9_]{1,8}", n in 1usize..500) {
        let m = RunMetrics {
            instance: id.clone(),
            strategy: perceplan::Strategy::Repl,
            task: Task::Count(n),
            budget: BUDGET,
            runs: records.clone(),
            plans: vec![],
        };
        let parsed = parse_csv(&emit_report(&[m], ReportFormat::Csv)).unwrap();
        prop_assert_eq!(parsed.len(), records.len());
        for (row, r) in parsed.iter().zip(&records) {
            prop_assert_eq!(&row.instance, &id);
            prop_assert_eq!(&row.strategy, "repl");
            prop_assert_eq!(row.task.clone(), format!("count:{n}"));
            prop_assert_eq!((row.run, row.queries, row.feasible, row.infeasible, row.timed_out),
                (r.run, r.queries, r.feasible, r.infeasible, r.timed_out));
            prop_assert_eq!(row.wall_ms, r.wall_ms());
        }
    }
}
