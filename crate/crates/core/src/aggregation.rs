//! CapEx and Turnover totals grouped by Link or Contribution level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{Activity, Level};
use crate::dataset::{CompanyContext, SourceKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("no activities to aggregate")]
    Empty,
    #[error("company {0} total must be positive")]
    NonPositiveTotal(SourceKind),
    #[error("activity {0} lacks a capex or turnover figure; merged grouping needs both")]
    NotMerged(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Link,
    Contribution,
}

impl GroupBy {
    pub fn level_of(self, activity: &Activity) -> Level {
        match self {
            GroupBy::Link => activity.link(),
            GroupBy::Contribution => activity.contribution(),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Link => "link",
            GroupBy::Contribution => "contribution",
        })
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "link" => Ok(GroupBy::Link),
            "contribution" => Ok(GroupBy::Contribution),
            other => Err(format!("cannot group by {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Every disclosed activity, each figure from its own table.
    Full,
    /// Only activities present in both tables.
    Merged,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Full => "full",
            Scope::Merged => "merged",
        })
    }
}

/// One metric's figures for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub musd: f64,
    /// Fraction of the company-wide figure.
    pub share_company: f64,
    /// Percent of the selected activity set's total.
    pub share_selected_pct: f64,
}

/// A level's row. A metric is `None` when no activity at this level
/// discloses it, which is distinct from a disclosed zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub level: Level,
    pub capex: Option<MetricCell>,
    pub turnover: Option<MetricCell>,
}

impl GroupRow {
    pub fn metric(&self, kind: SourceKind) -> Option<&MetricCell> {
        match kind {
            SourceKind::Capex => self.capex.as_ref(),
            SourceKind::Turnover => self.turnover.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedAggregate {
    pub group_by: GroupBy,
    pub scope: Scope,
    /// Levels strictly increasing; levels with no activities are omitted.
    pub rows: Vec<GroupRow>,
    pub capex_total_musd: f64,
    pub turnover_total_musd: f64,
}

impl GroupedAggregate {
    pub fn row(&self, level: Level) -> Option<&GroupRow> {
        self.rows.iter().find(|r| r.level == level)
    }

    pub fn total(&self, kind: SourceKind) -> f64 {
        match kind {
            SourceKind::Capex => self.capex_total_musd,
            SourceKind::Turnover => self.turnover_total_musd,
        }
    }
}

#[derive(Default)]
struct Sums {
    capex: Option<f64>,
    turnover: Option<f64>,
}

fn add(slot: &mut Option<f64>, value: Option<f64>) {
    if let Some(v) = value {
        *slot = Some(slot.unwrap_or(0.0) + v);
    }
}

fn aggregate(
    activities: &[Activity],
    group_by: GroupBy,
    scope: Scope,
    context: &CompanyContext,
) -> Result<GroupedAggregate, AggregationError> {
    if activities.is_empty() {
        return Err(AggregationError::Empty);
    }
    for kind in [SourceKind::Capex, SourceKind::Turnover] {
        let total = context.company_total(kind);
        if !(total.is_finite() && total > 0.0) {
            return Err(AggregationError::NonPositiveTotal(kind));
        }
    }
    let mut by_level: BTreeMap<Level, Sums> = BTreeMap::new();
    for a in activities {
        let sums = by_level.entry(group_by.level_of(a)).or_default();
        add(&mut sums.capex, a.capex());
        add(&mut sums.turnover, a.turnover());
    }
    let capex_total: f64 = by_level.values().filter_map(|s| s.capex).sum();
    let turnover_total: f64 = by_level.values().filter_map(|s| s.turnover).sum();
    let cell = |sum: Option<f64>, kind: SourceKind, selected_total: f64| {
        sum.map(|musd| MetricCell {
            musd,
            share_company: musd / context.company_total(kind),
            share_selected_pct: if selected_total > 0.0 {
                100.0 * musd / selected_total
            } else {
                0.0
            },
        })
    };
    let rows = by_level
        .into_iter()
        .map(|(level, sums)| GroupRow {
            level,
            capex: cell(sums.capex, SourceKind::Capex, capex_total),
            turnover: cell(sums.turnover, SourceKind::Turnover, turnover_total),
        })
        .collect();
    Ok(GroupedAggregate {
        group_by,
        scope,
        rows,
        capex_total_musd: capex_total,
        turnover_total_musd: turnover_total,
    })
}

/// Sums each disclosed figure per level over the given activities.
///
/// Shares of the company use the context's company-wide totals; shares of
/// the selection use the sums over `activities`.
pub fn group_by_level(
    activities: &[Activity],
    group_by: GroupBy,
    context: &CompanyContext,
) -> Result<GroupedAggregate, AggregationError> {
    aggregate(activities, group_by, Scope::Full, context)
}

/// Like [`group_by_level`] over an inner-joined set, where every activity
/// carries both figures.
pub fn group_merged(
    activities: &[Activity],
    group_by: GroupBy,
    context: &CompanyContext,
) -> Result<GroupedAggregate, AggregationError> {
    if let Some(a) = activities
        .iter()
        .find(|a| a.capex().is_none() || a.turnover().is_none())
    {
        return Err(AggregationError::NotMerged(a.code().to_string()));
    }
    aggregate(activities, group_by, Scope::Merged, context)
}

/// Percent of a metric's selected total held by the given levels.
pub fn concentration_summary(agg: &GroupedAggregate, levels: &BTreeSet<Level>, kind: SourceKind) -> f64 {
    agg.rows
        .iter()
        .filter(|r| levels.contains(&r.level))
        .filter_map(|r| r.metric(kind))
        .map(|c| c.share_selected_pct)
        .sum()
}
