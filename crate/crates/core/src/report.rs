//! Markdown, CSV and JSON-lines rendering of score tables, grouped
//! aggregates and sweeps.
//!
//! Markdown rounds for display (half away from zero). CSV and JSON-lines
//! carry full precision.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::json;

use crate::activity::ActivityCode;
use crate::aggregation::{GroupBy, GroupRow, GroupedAggregate, MetricCell, Scope};
use crate::mcdm::ScoreTable;
use crate::sensitivity::SweepResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Markdown,
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            other => Err(format!(
                "unknown format {other:?}, expected markdown, csv or json-lines"
            )),
        }
    }
}

/// Rounds half away from zero to `decimals` places.
pub fn round_half_away(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let r = (x * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn fixed(x: f64, decimals: u32) -> String {
    format!("{:.*}", decimals as usize, round_half_away(x, decimals))
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields).expect("writing to a Vec cannot fail");
    String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Activity names keyed by code, for labelling rows.
pub type Names = HashMap<ActivityCode, String>;

fn name_of<'a>(names: &'a Names, code: &ActivityCode) -> &'a str {
    names.get(code).map(String::as_str).unwrap_or("")
}

pub fn render_score_table(table: &ScoreTable, names: &Names, format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Markdown => {
            out.push_str("| Code | Activity | Weighted Sum | Normalised Weighted Sum (%) |\n");
            out.push_str("|------|----------|-------------:|----------------------------:|\n");
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    r.code,
                    md_escape(name_of(names, &r.code)),
                    fixed(r.weighted_sum, 2),
                    fixed(r.normalized_percent, 2)
                );
            }
            let _ = writeln!(
                out,
                "\naverage {}, deterioration {}",
                fixed(table.average_percent, 2),
                fixed(table.deterioration_percent, 2)
            );
        }
        OutputFormat::Csv => {
            out.push_str("code,name,weighted_sum,normalized_percent,rank\n");
            for r in &table.rows {
                out.push_str(&csv_line(&[
                    r.code.to_string(),
                    name_of(names, &r.code).to_string(),
                    r.weighted_sum.to_string(),
                    r.normalized_percent.to_string(),
                    r.rank.to_string(),
                ]));
            }
            let _ = writeln!(
                out,
                "# average_percent={},deterioration_percent={}",
                table.average_percent, table.deterioration_percent
            );
        }
        OutputFormat::JsonLines => {
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "code": r.code,
                        "name": name_of(names, &r.code),
                        "weighted_sum": r.weighted_sum,
                        "normalized_percent": r.normalized_percent,
                        "rank": r.rank,
                    })
                );
            }
            let _ = writeln!(
                out,
                "{}",
                json!({
                    "average_percent": table.average_percent,
                    "deterioration_percent": table.deterioration_percent,
                })
            );
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Col {
    Musd,
    Company,
    Selected,
}

// Column layouts: (header, metric is capex, column kind).
fn aggregate_columns(agg: &GroupedAggregate, paper_compat: bool) -> (String, Vec<(String, bool, Col)>) {
    let level_header = match agg.group_by {
        GroupBy::Link => "Link",
        GroupBy::Contribution => "Contribution",
    };
    if !paper_compat {
        let cols = [
            ("capex_musd", true, Col::Musd),
            ("capex_share_company_frac", true, Col::Company),
            ("capex_share_selected_pct", true, Col::Selected),
            ("turnover_musd", false, Col::Musd),
            ("turnover_share_company_frac", false, Col::Company),
            ("turnover_share_selected_pct", false, Col::Selected),
        ];
        return (
            "level".to_string(),
            cols.iter().map(|(h, c, k)| (h.to_string(), *c, *k)).collect(),
        );
    }
    let full = [
        ("CapEx M$", true, Col::Musd),
        ("CapEx Perc", true, Col::Company),
        ("CapEx Perc2", true, Col::Selected),
        ("Turnover M$", false, Col::Musd),
        ("Turnover Perc", false, Col::Company),
        ("Turnover Perc2", false, Col::Selected),
    ];
    let merged = [
        ("CapEx M$", true, Col::Musd),
        ("CapEx Perc", true, Col::Company),
        ("Turnover M$", false, Col::Musd),
        ("Turnover Perc", false, Col::Company),
        ("CapEx Perc2", true, Col::Selected),
        ("Turnover Perc2", false, Col::Selected),
    ];
    let cols = match agg.scope {
        Scope::Full => &full,
        Scope::Merged => &merged,
    };
    (
        level_header.to_string(),
        cols.iter().map(|(h, c, k)| (h.to_string(), *c, *k)).collect(),
    )
}

fn cell_value(row: &GroupRow, capex: bool, col: Col) -> Option<f64> {
    let cell: Option<&MetricCell> = if capex {
        row.capex.as_ref()
    } else {
        row.turnover.as_ref()
    };
    cell.map(|c| match col {
        Col::Musd => c.musd,
        Col::Company => c.share_company,
        Col::Selected => c.share_selected_pct,
    })
}

fn display_cell(value: Option<f64>, col: Col) -> String {
    match (value, col) {
        (None, _) => String::new(),
        (Some(v), Col::Musd) => v.to_string(),
        (Some(v), _) => fixed(v, 6),
    }
}

/// Renders a grouped aggregate. With `paper_compat`, columns use the
/// disclosure-table names and order and every share prints at 6 decimals.
pub fn render_aggregate(agg: &GroupedAggregate, format: OutputFormat, paper_compat: bool) -> String {
    let (level_header, cols) = aggregate_columns(agg, paper_compat);
    let mut out = String::new();
    match format {
        OutputFormat::Markdown => {
            let _ = writeln!(
                out,
                "| {level_header} | {} |",
                cols.iter().map(|c| c.0.as_str()).collect::<Vec<_>>().join(" | ")
            );
            let _ = writeln!(out, "|---:|{}", "---:|".repeat(cols.len()));
            for row in &agg.rows {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|(_, capex, col)| display_cell(cell_value(row, *capex, *col), *col))
                    .collect();
                let _ = writeln!(out, "| {} | {} |", row.level, cells.join(" | "));
            }
            let _ = writeln!(
                out,
                "\ngrouped by {} ({} scope); selected capex {} M$, turnover {} M$",
                agg.group_by, agg.scope, agg.capex_total_musd, agg.turnover_total_musd
            );
        }
        OutputFormat::Csv => {
            let mut header = vec![level_header];
            header.extend(cols.iter().map(|c| c.0.clone()));
            out.push_str(&csv_line(&header));
            for row in &agg.rows {
                let mut fields = vec![row.level.to_string()];
                fields.extend(cols.iter().map(|(_, capex, col)| {
                    let v = cell_value(row, *capex, *col);
                    if paper_compat {
                        display_cell(v, *col)
                    } else {
                        v.map(|x| x.to_string()).unwrap_or_default()
                    }
                }));
                out.push_str(&csv_line(&fields));
            }
        }
        OutputFormat::JsonLines => {
            for row in &agg.rows {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "group_by": agg.group_by,
                        "scope": agg.scope,
                        "level": row.level,
                        "capex": row.capex,
                        "turnover": row.turnover,
                    })
                );
            }
        }
    }
    out
}

fn weights_label(point_weights: &crate::mcdm::WeightVector, decimals: u32) -> String {
    point_weights
        .entries()
        .iter()
        .map(|(id, w)| format!("{id}={}", fixed(*w, decimals)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the sweep grid followed by the rank-stability table.
pub fn render_sweep(
    sweep: &SweepResult,
    stability: &[(ActivityCode, f64)],
    names: &Names,
    format: OutputFormat,
) -> String {
    let mut out = String::new();
    let base = sweep.baseline_point();
    match format {
        OutputFormat::Markdown => {
            out.push_str("| Point | Weights | Average (%) | Deterioration (%) | Top |\n");
            out.push_str("|------:|---------|------------:|------------------:|-----|\n");
            for (i, p) in sweep.grid.iter().enumerate() {
                let top: Vec<String> = p
                    .ranking
                    .iter()
                    .filter(|(_, r)| *r == 1)
                    .map(|(c, _)| c.to_string())
                    .collect();
                let _ = writeln!(
                    out,
                    "| {i} | {} | {} | {} | {} |",
                    weights_label(&p.weights, 4),
                    fixed(p.average_percent, 2),
                    fixed(p.deterioration_percent, 2),
                    top.join(", ")
                );
            }
            out.push_str("\n| Code | Activity | Baseline rank | Rank stability |\n");
            out.push_str("|------|----------|--------------:|---------------:|\n");
            for (code, frac) in stability {
                let _ = writeln!(
                    out,
                    "| {code} | {} | {} | {} |",
                    md_escape(name_of(names, code)),
                    base.rank_of(code).unwrap_or(0),
                    fixed(*frac, 4)
                );
            }
        }
        OutputFormat::Csv => {
            out.push_str("point,weights,average_percent,deterioration_percent,ranking\n");
            for (i, p) in sweep.grid.iter().enumerate() {
                let ranking: Vec<String> = p.ranking.iter().map(|(c, r)| format!("{c}:{r}")).collect();
                out.push_str(&csv_line(&[
                    i.to_string(),
                    p.weights
                        .entries()
                        .iter()
                        .map(|(id, w)| format!("{id}={w}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                    p.average_percent.to_string(),
                    p.deterioration_percent.to_string(),
                    ranking.join(" "),
                ]));
            }
            out.push('\n');
            out.push_str("code,name,baseline_rank,rank_stability\n");
            for (code, frac) in stability {
                out.push_str(&csv_line(&[
                    code.to_string(),
                    name_of(names, code).to_string(),
                    base.rank_of(code).unwrap_or(0).to_string(),
                    frac.to_string(),
                ]));
            }
        }
        OutputFormat::JsonLines => {
            for (i, p) in sweep.grid.iter().enumerate() {
                let weights: serde_json::Map<String, serde_json::Value> = p
                    .weights
                    .entries()
                    .iter()
                    .map(|(id, w)| (id.to_string(), json!(w)))
                    .collect();
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "point": i,
                        "weights": weights,
                        "average_percent": p.average_percent,
                        "deterioration_percent": p.deterioration_percent,
                        "ranking": p.ranking,
                    })
                );
            }
            for (code, frac) in stability {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "code": code,
                        "baseline_rank": base.rank_of(code),
                        "rank_stability": frac,
                    })
                );
            }
        }
    }
    out
}
