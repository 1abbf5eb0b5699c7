//! Regenerates the published CapEx/Turnover and scoring tables from a
//! dataset and checks them against bundled golden copies.
//!
//! Tolerances: integer millions compare exactly, 6-decimal shares within
//! [`SHARE_TOLERANCE`], 2-decimal scores and averages within
//! [`SCORE_TOLERANCE`].

use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::activity::{Activity, ActivityCode};
use crate::aggregation::{group_by_level, group_merged, AggregationError, GroupBy, GroupedAggregate, MetricCell};
use crate::dataset::{Dataset, DatasetError, JoinMode, SourceKind};
use crate::mcdm::{score_run, Criterion, CriterionId, ScoreError, ScoreTable, WeightVector};

pub const SCORE_TOLERANCE: f64 = 0.01;
pub const SHARE_TOLERANCE: f64 = 0.0005;
pub const MONEY_TOLERANCE: f64 = 1e-9;

const TABLE2: &str = include_str!("../golden/table2.csv");
const TABLE3: &str = include_str!("../golden/table3.csv");
const TABLE4: &str = include_str!("../golden/table4.csv");
const TABLE5: &str = include_str!("../golden/table5.csv");
const TABLE7: &str = include_str!("../golden/table7.csv");
const TABLE8: &str = include_str!("../golden/table8.csv");
const SUMMARY: &str = include_str!("../golden/summary.csv");

#[derive(Debug, Error)]
pub enum ReproduceError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("golden file {file} is malformed: {message}")]
    Golden { file: &'static str, message: String },
}

/// The four-criterion run: CapEx 0.3, Turnover 0.2, Link 0.3, Contribution 0.2.
pub fn financial_run() -> (Vec<Criterion>, WeightVector) {
    let entries = vec![
        (CriterionId::Capex, 0.3),
        (CriterionId::Turnover, 0.2),
        (CriterionId::Link, 0.3),
        (CriterionId::Contribution, 0.2),
    ];
    let criteria = entries.iter().map(|(id, _)| Criterion::benefit(id.clone())).collect();
    (criteria, WeightVector::new(entries).expect("static weights are valid"))
}

/// The Link/Contribution-only run: Link 0.3, Contribution 0.2.
pub fn link_contribution_run() -> (Vec<Criterion>, WeightVector) {
    let entries = vec![(CriterionId::Link, 0.3), (CriterionId::Contribution, 0.2)];
    let criteria = entries.iter().map(|(id, _)| Criterion::benefit(id.clone())).collect();
    (criteria, WeightVector::new(entries).expect("static weights are valid"))
}

#[derive(Debug, Deserialize)]
struct GoldenGroupRow {
    level: u8,
    capex_musd: Option<f64>,
    capex_share_company: Option<f64>,
    capex_share_selected_pct: Option<f64>,
    turnover_musd: Option<f64>,
    turnover_share_company: Option<f64>,
    turnover_share_selected_pct: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct GoldenScoreRow {
    code: String,
    #[allow(dead_code)]
    name: String,
    weighted_sum: f64,
    normalized_percent: f64,
}

#[derive(Debug, Deserialize)]
struct GoldenSummaryRow {
    key: String,
    value: f64,
}

fn parse_golden<T: serde::de::DeserializeOwned>(file: &'static str, text: &str) -> Result<Vec<T>, ReproduceError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| ReproduceError::Golden {
            file,
            message: e.to_string(),
        })
}

/// Outcome of one table comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub mismatches: Vec<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reproduction {
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// One line per check, mismatch details indented beneath.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            if c.passed() {
                let _ = writeln!(out, "{}: ok", c.name);
            } else {
                let _ = writeln!(out, "{}: MISMATCH ({} cells)", c.name, c.mismatches.len());
                for m in &c.mismatches {
                    let _ = writeln!(out, "    {m}");
                }
            }
        }
        let matched = self.checks.iter().filter(|c| c.passed()).count();
        let _ = writeln!(out, "{matched}/{} checks matched", self.checks.len());
        out
    }
}

fn compare_metric(
    out: &mut Vec<String>,
    level: u8,
    label: &str,
    got: Option<&MetricCell>,
    musd: Option<f64>,
    company: Option<f64>,
    selected: Option<f64>,
) {
    match (got, musd) {
        (None, None) => {}
        (None, Some(want)) => out.push(format!("level {level} {label}: missing, printed {want}")),
        (Some(cell), None) => out.push(format!(
            "level {level} {label}: {} M$ where the printed table has no entry",
            cell.musd
        )),
        (Some(cell), Some(want)) => {
            if (cell.musd - want).abs() > MONEY_TOLERANCE {
                out.push(format!("level {level} {label} M$: {} vs printed {want}", cell.musd));
            }
            let shares = [
                ("share of company", cell.share_company, company),
                ("share of selection (%)", cell.share_selected_pct, selected),
            ];
            for (what, value, printed) in shares {
                if let Some(p) = printed {
                    if (value - p).abs() > SHARE_TOLERANCE {
                        out.push(format!("level {level} {label} {what}: {value:.6} vs printed {p:.6}"));
                    }
                }
            }
        }
    }
}

fn check_aggregate(name: &'static str, agg: &GroupedAggregate, golden: &[GoldenGroupRow]) -> Check {
    let mut mismatches = Vec::new();
    let got_levels: Vec<u8> = agg.rows.iter().map(|r| r.level.get()).collect();
    let want_levels: Vec<u8> = golden.iter().map(|r| r.level).collect();
    if got_levels != want_levels {
        mismatches.push(format!("levels {got_levels:?} vs printed {want_levels:?}"));
    }
    for g in golden {
        let Some(row) = agg.rows.iter().find(|r| r.level.get() == g.level) else {
            continue;
        };
        compare_metric(
            &mut mismatches,
            g.level,
            "capex",
            row.metric(SourceKind::Capex),
            g.capex_musd,
            g.capex_share_company,
            g.capex_share_selected_pct,
        );
        compare_metric(
            &mut mismatches,
            g.level,
            "turnover",
            row.metric(SourceKind::Turnover),
            g.turnover_musd,
            g.turnover_share_company,
            g.turnover_share_selected_pct,
        );
    }
    Check { name, mismatches }
}

fn check_scores(
    name: &'static str,
    table: &ScoreTable,
    golden: &[GoldenScoreRow],
    average: f64,
    deterioration: f64,
) -> Check {
    let mut mismatches = Vec::new();
    let got: Vec<&str> = table.rows.iter().map(|r| r.code.as_str()).collect();
    let want: Vec<&str> = golden.iter().map(|r| r.code.as_str()).collect();
    if got != want {
        mismatches.push(format!("row order {got:?} vs printed {want:?}"));
    }
    for g in golden {
        let Some(row) = ActivityCode::new(g.code.clone())
            .ok()
            .and_then(|c| table.row(&c).cloned())
        else {
            mismatches.push(format!("{}: missing from the run", g.code));
            continue;
        };
        if (row.weighted_sum - g.weighted_sum).abs() > SCORE_TOLERANCE {
            mismatches.push(format!(
                "{}: weighted sum {:.4} vs printed {:.2}",
                g.code, row.weighted_sum, g.weighted_sum
            ));
        }
        if (row.normalized_percent - g.normalized_percent).abs() > SCORE_TOLERANCE {
            mismatches.push(format!(
                "{}: normalised percent {:.4} vs printed {:.2}",
                g.code, row.normalized_percent, g.normalized_percent
            ));
        }
    }
    if (table.average_percent - average).abs() > SCORE_TOLERANCE {
        mismatches.push(format!("average {:.4} vs printed {average:.2}", table.average_percent));
    }
    if (table.deterioration_percent - deterioration).abs() > SCORE_TOLERANCE {
        mismatches.push(format!(
            "deterioration {:.4} vs printed {deterioration:.2}",
            table.deterioration_percent
        ));
    }
    Check { name, mismatches }
}

fn check_totals(dataset: &Dataset, summary: &[GoldenSummaryRow]) -> Check {
    let ctx = &dataset.context;
    let actual = [
        ("eligible_capex_musd", ctx.eligible_capex_musd),
        ("eligible_turnover_musd", ctx.eligible_turnover_musd),
        ("aligned_capex_musd", ctx.aligned_capex_musd),
        ("aligned_turnover_musd", ctx.aligned_turnover_musd),
        ("capex table sum", dataset.capex.total_musd()),
        ("turnover table sum", dataset.turnover.total_musd()),
    ];
    let lookup = |key: &str| summary.iter().find(|r| r.key == key).map(|r| r.value);
    let mut mismatches = Vec::new();
    for (key, value) in actual {
        let golden_key = match key {
            "capex table sum" => "aligned_capex_musd",
            "turnover table sum" => "aligned_turnover_musd",
            k => k,
        };
        if let Some(want) = lookup(golden_key) {
            if (value - want).abs() > MONEY_TOLERANCE {
                mismatches.push(format!("{key}: {value} vs published {want}"));
            }
        }
    }
    Check {
        name: "disclosure totals",
        mismatches,
    }
}

/// The activity sets the tables are built from: the outer join (all
/// disclosed activities) and the inner join (activities in both tables).
pub fn table_inputs(dataset: &Dataset) -> Result<(Vec<Activity>, Vec<Activity>), DatasetError> {
    Ok((
        dataset.activities(JoinMode::Outer)?,
        dataset.activities(JoinMode::Inner)?,
    ))
}

/// Rebuilds every table and compares it with its golden copy.
pub fn reproduce(dataset: &Dataset) -> Result<Reproduction, ReproduceError> {
    let summary: Vec<GoldenSummaryRow> = parse_golden("summary.csv", SUMMARY)?;
    let value = |key: &str| {
        summary
            .iter()
            .find(|r| r.key == key)
            .map(|r| r.value)
            .ok_or_else(|| ReproduceError::Golden {
                file: "summary.csv",
                message: format!("missing key {key}"),
            })
    };
    let (full, merged) = table_inputs(dataset)?;
    let ctx = &dataset.context;

    let mut checks = vec![
        check_aggregate(
            "Table 2",
            &group_by_level(&full, GroupBy::Link, ctx)?,
            &parse_golden("table2.csv", TABLE2)?,
        ),
        check_aggregate(
            "Table 3",
            &group_by_level(&full, GroupBy::Contribution, ctx)?,
            &parse_golden("table3.csv", TABLE3)?,
        ),
        check_aggregate(
            "Table 4",
            &group_merged(&merged, GroupBy::Link, ctx)?,
            &parse_golden("table4.csv", TABLE4)?,
        ),
        check_aggregate(
            "Table 5",
            &group_merged(&merged, GroupBy::Contribution, ctx)?,
            &parse_golden("table5.csv", TABLE5)?,
        ),
    ];

    let (criteria, weights) = financial_run();
    checks.push(check_scores(
        "Table 7",
        &score_run(&merged, &criteria, &weights)?,
        &parse_golden("table7.csv", TABLE7)?,
        value("table7.average_percent")?,
        value("table7.deterioration_percent")?,
    ));
    let (criteria, weights) = link_contribution_run();
    checks.push(check_scores(
        "Table 8",
        &score_run(&merged, &criteria, &weights)?,
        &parse_golden("table8.csv", TABLE8)?,
        value("table8.average_percent")?,
        value("table8.deterioration_percent")?,
    ));
    checks.push(check_totals(dataset, &summary));
    Ok(Reproduction { checks })
}
