//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line for
//! each; exits non-zero if any fails.

mod support;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use crosswash::cli::{cmd_reproduce_paper, CliError, DataSource};
use crosswash::dataset::{self, Dataset, JoinMode, SourceKind};
use crosswash::reproduce::{financial_run, link_contribution_run, reproduce};
use crosswash::{score_run, ActivityCode, ScoreTable};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use support::{activities_from, code, criteria_from, oracle, weights_from};

const SCORE_TOL: f64 = 0.01;
const SHARE_TOL: f64 = 0.0005;
const ORACLE_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Printed rows: code, weighted sum, normalised percent, in printed order.
const TABLE7: [(&str, f64, f64); 14] = [
    ("4.3", 0.77, 100.00),
    ("4.1", 0.71, 91.35),
    ("7.6", 0.54, 69.08),
    ("3.5", 0.50, 64.72),
    ("3.3", 0.49, 62.82),
    ("3.4", 0.46, 59.24),
    ("4.10", 0.43, 54.43),
    ("6.15", 0.39, 49.45),
    ("4.13", 0.37, 47.59),
    ("7.4", 0.34, 42.84),
    ("4.25", 0.33, 42.26),
    ("9.3", 0.25, 30.74),
    ("5.7", 0.24, 30.32),
    ("3.17", 0.01, 0.00),
];

const TABLE8: [(&str, f64, f64); 14] = [
    ("3.5", 0.50, 100.00),
    ("4.3", 0.50, 100.00),
    ("3.3", 0.43, 86.67),
    ("4.1", 0.40, 80.00),
    ("4.10", 0.40, 80.00),
    ("3.4", 0.33, 66.67),
    ("4.13", 0.33, 66.67),
    ("4.25", 0.33, 66.67),
    ("6.15", 0.33, 66.67),
    ("7.4", 0.33, 66.67),
    ("7.6", 0.30, 60.00),
    ("5.7", 0.23, 46.67),
    ("9.3", 0.20, 40.00),
    ("3.17", 0.00, 0.00),
];

fn check_score_table(
    table: &ScoreTable,
    printed: &[(&str, f64, f64)],
    average: f64,
    deterioration: f64,
) -> Vec<String> {
    let mut bad = Vec::new();
    if table.rows.len() != printed.len() {
        bad.push(format!("{} rows, printed {}", table.rows.len(), printed.len()));
    }
    for (row, (c, sum, pct)) in table.rows.iter().zip(printed) {
        if row.code.as_str() != *c {
            bad.push(format!("row order: {} where {c} is printed", row.code));
        }
        if (row.weighted_sum - sum).abs() > SCORE_TOL {
            bad.push(format!("{c} sum {:.4} vs {sum}", row.weighted_sum));
        }
        if (row.normalized_percent - pct).abs() > SCORE_TOL {
            bad.push(format!("{c} percent {:.4} vs {pct}", row.normalized_percent));
        }
    }
    if (table.average_percent - average).abs() > SCORE_TOL {
        bad.push(format!("average {:.4} vs {average}", table.average_percent));
    }
    if (table.deterioration_percent - deterioration).abs() > SCORE_TOL {
        bad.push(format!(
            "deterioration {:.4} vs {deterioration}",
            table.deterioration_percent
        ));
    }
    bad
}

fn verdict(bad: Vec<String>, ok: String) -> Outcome {
    if bad.is_empty() {
        Ok(ok)
    } else {
        Err(bad.join("; "))
    }
}

fn scoring_run(
    run: fn() -> (Vec<crosswash::Criterion>, crosswash::WeightVector),
    printed: &[(&str, f64, f64)],
    average: f64,
    deterioration: f64,
) -> Outcome {
    let start = Instant::now();
    let dataset = Dataset::bundled();
    let merged = dataset.activities(JoinMode::Inner).map_err(|e| e.to_string())?;
    let (criteria, weights) = run();
    let table = score_run(&merged, &criteria, &weights).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut bad = check_score_table(&table, printed, average, deterioration);
    if elapsed >= Duration::from_secs(1) {
        bad.push(format!("took {elapsed:?}"));
    }
    verdict(
        bad,
        format!(
            "average {:.4}, deterioration {:.4}, {elapsed:?}",
            table.average_percent, table.deterioration_percent
        ),
    )
}

fn table7() -> Outcome {
    scoring_run(financial_run, &TABLE7, 53.20, 46.80)
}

fn table8() -> Outcome {
    scoring_run(link_contribution_run, &TABLE8, 66.20, 33.80)
}

fn aggregate_tables() -> Outcome {
    let r = reproduce(&Dataset::bundled()).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for name in ["Table 2", "Table 3", "Table 4", "Table 5"] {
        let check = r
            .checks
            .iter()
            .find(|c| c.name == name)
            .ok_or(format!("{name} not run"))?;
        bad.extend(check.mismatches.iter().map(|m| format!("{name}: {m}")));
    }
    // a few printed cells, spelled out
    let d = Dataset::bundled();
    let merged = d.activities(JoinMode::Inner).map_err(|e| e.to_string())?;
    let agg = crosswash::aggregation::group_merged(&merged, crosswash::aggregation::GroupBy::Link, &d.context)
        .map_err(|e| e.to_string())?;
    let link3 = agg.rows.iter().find(|r| r.level.get() == 3).ok_or("no link 3")?;
    let capex = link3.metric(SourceKind::Capex).ok_or("no capex")?;
    if capex.musd != 1406.0
        || (capex.share_company - 0.077012).abs() > SHARE_TOL
        || (capex.share_selected_pct - 55.397951).abs() > SHARE_TOL
    {
        bad.push(format!("Table 4 link 3 capex {capex:?}"));
    }
    verdict(bad, "Tables 2-5: exact millions, shares within 0.0005".into())
}

fn merge_cardinality() -> Outcome {
    let d = Dataset::bundled();
    let count = |m| d.activities(m).map(|a| a.len()).map_err(|e| e.to_string());
    let got = (
        count(JoinMode::Inner)?,
        count(JoinMode::CapexOnly)?,
        count(JoinMode::TurnoverOnly)?,
    );
    let totals = (d.capex.total_musd(), d.turnover.total_musd());
    let mut bad = Vec::new();
    if got != (14, 19, 17) {
        bad.push(format!("cardinalities {got:?}"));
    }
    if totals != (2652.0, 3466.0) {
        bad.push(format!("totals {totals:?}"));
    }
    verdict(bad, format!("inner/capex/turnover = {got:?}, totals {totals:?}"))
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<bool>)> {
    (1usize..=8, 1usize..=4).prop_flat_map(|(rows, cols)| {
        (
            prop::collection::vec(prop::collection::vec(-1000.0f64..1000.0, cols), rows),
            prop::collection::vec(0.0f64..1.0, cols).prop_filter("positive weight", |w| w.iter().any(|x| *x > 1e-6)),
            prop::collection::vec(any::<bool>(), cols),
        )
    })
}

fn properties() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 1000,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let result = runner.run(
        &(instance(), 0.01f64..100.0, -500.0f64..500.0),
        |((raw, weights, benefit), a, b)| {
            let acts = activities_from(&raw);
            let criteria = criteria_from(&benefit);
            let w = weights_from(&weights);
            let table = score_run(&acts, &criteria, &w).unwrap();
            let expected = oracle(&raw, &weights, &benefit);

            // oracle agreement and range
            for (i, p) in expected.percents.iter().enumerate() {
                let row = table.row(&code(i)).unwrap();
                prop_assert!((row.normalized_percent - p).abs() <= ORACLE_TOL);
                prop_assert!((row.weighted_sum - expected.sums[i]).abs() <= ORACLE_TOL);
                prop_assert!((0.0..=100.0).contains(&row.normalized_percent));
            }
            prop_assert!((table.average_percent - expected.average).abs() <= ORACLE_TOL);

            // affine change of every raw value leaves the result alone
            let moved: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| a * v + b).collect()).collect();
            let affine = score_run(&activities_from(&moved), &criteria, &w).unwrap();
            for (x, y) in table.rows.iter().zip(&affine.rows) {
                prop_assert!((x.normalized_percent - y.normalized_percent).abs() <= ORACLE_TOL);
            }

            // scaling the weights leaves percents and ranks alone
            let scaled = score_run(&acts, &criteria, &w.scaled(a).unwrap()).unwrap();
            for (x, y) in table.rows.iter().zip(&scaled.rows) {
                prop_assert_eq!(x.rank, y.rank);
                prop_assert!((x.normalized_percent - y.normalized_percent).abs() <= ORACLE_TOL);
            }

            // raising one benefit value never lowers that alternative's sum
            let j = benefit.iter().position(|b| *b);
            if let Some(j) = j {
                let mut raised = raw.clone();
                raised[0][j] += a;
                let after = score_run(&activities_from(&raised), &criteria, &w).unwrap();
                let before = table.row(&code(0)).unwrap().weighted_sum;
                prop_assert!(after.row(&code(0)).unwrap().weighted_sum >= before - 1e-12);
            }

            // reversing the input order changes nothing
            let mut reversed = acts.clone();
            reversed.reverse();
            let rev = score_run(&reversed, &criteria, &w).unwrap();
            for (x, y) in table.rows.iter().zip(&rev.rows) {
                prop_assert_eq!(&x.code, &y.code);
                prop_assert!((x.normalized_percent - y.normalized_percent).abs() <= ORACLE_TOL);
            }
            Ok(())
        },
    );
    match result {
        Ok(()) => Ok("1000 random matrices: oracle, range, affine, scaling, monotonicity, permutation".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Writes the bundled fixture with one line rewritten.
fn mutated_fixture(dir: &Path, file: &str, line: usize, new_line: &str) {
    for (name, text) in dataset::bundled_files() {
        let body = if name == file {
            let mut lines: Vec<&str> = text.lines().collect();
            lines[line] = new_line;
            lines.join("\n") + "\n"
        } else {
            text.to_string()
        };
        std::fs::write(dir.join(name), body).unwrap();
    }
}

fn expect_mismatch(dir: &Path, first: &str, label: &str, bad: &mut Vec<String>) {
    match cmd_reproduce_paper(&DataSource::Dir(dir.to_path_buf())) {
        Err(CliError::Mismatch { message, .. }) if message.starts_with(first) => {}
        Err(CliError::Mismatch { message, .. }) => bad.push(format!("{label}: {message}")),
        other => bad.push(format!(
            "{label}: {:?}",
            other.map(|_| "passed").map_err(|e| e.to_string())
        )),
    }
}

fn mutation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let mut tried = 0;
    let files = dataset::bundled_files();
    for (file, kind) in [("capex.csv", SourceKind::Capex), ("turnover.csv", SourceKind::Turnover)] {
        let text = files.iter().find(|(n, _)| *n == file).unwrap().1;
        let table = Dataset::bundled().table(kind).clone();
        for (i, line) in text.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            let n = fields.len();
            let amount: f64 = fields[n - 2].parse().map_err(|_| format!("{file}:{i}"))?;
            let code = ActivityCode::new(fields[0]).unwrap();
            assert!(table.get(&code).is_some());
            for delta in [2.0, -2.0] {
                if amount + delta < 0.0 {
                    continue;
                }
                let mut changed = fields.clone();
                let value = format!("{}", amount + delta);
                changed[n - 2] = &value;
                mutated_fixture(dir.path(), file, i, &changed.join(","));
                // every amount lands in a link group of the full-scope table
                expect_mismatch(dir.path(), "Table 2", &format!("{file} {code} {delta:+}"), &mut bad);
                tried += 1;
            }
        }
    }
    let context = files.iter().find(|(n, _)| *n == "context.csv").unwrap().1;
    let values: Vec<&str> = context.lines().nth(1).unwrap().split(',').collect();
    for (col, first) in [
        (2, "disclosure totals"),
        (4, "disclosure totals"),
        (6, "disclosure totals"),
        (7, "disclosure totals"),
    ] {
        let mut changed = values.clone();
        let value = format!("{}", values[col].parse::<f64>().unwrap() + 2.0);
        changed[col] = &value;
        mutated_fixture(dir.path(), "context.csv", 1, &changed.join(","));
        expect_mismatch(dir.path(), first, &format!("context column {col}"), &mut bad);
        tried += 1;
    }
    verdict(
        bad,
        format!("{tried} single-value mutations, each reported with the first mismatching table"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("1 Table 7 four-criterion scores", table7),
        ("2 Table 8 link/contribution scores", table8),
        ("3 Tables 2-5 grouped CapEx/Turnover", aggregate_tables),
        ("4 merge cardinality and totals", merge_cardinality),
        ("5 scoring invariants", properties),
        ("6 mutated fixture is rejected", mutation),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    println!("{} of 6 criteria passed", 6 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
