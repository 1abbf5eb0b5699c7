//! Weighted-sum scoring over a decision matrix.
//!
//! The pipeline is: build a [`DecisionMatrix`] from activities, min-max
//! normalize every criterion column onto `[0, 1]`, take the weighted sum of
//! each row, and min-max rescale those sums onto `[0, 100]`. The average of
//! the rescaled scores is how well the activity set as a whole lines up with
//! the company's main business; `100 - average` is the deterioration to apply
//! to a taxonomy-based environmental score.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{Activity, ActivityCode};

/// Two rescaled percents closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Relative spread below which all weighted sums count as equal.
const DEGENERATE_SPREAD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("activity code must not be empty")]
    EmptyCode,
    #[error("level {0} is outside 0..=5")]
    LevelOutOfRange(i64),
    #[error("{field} amount {value} must be finite and non-negative")]
    NegativeAmount { field: &'static str, value: f64 },
    #[error("value for {code} on criterion {criterion} is not finite")]
    NonFinite { code: String, criterion: String },
    #[error("duplicate activity code {0}")]
    DuplicateCode(String),
    #[error("duplicate criterion {0}")]
    DuplicateCriterion(String),
    #[error("matrix row {row} has {found} values, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("matrix has {rows} rows for {alternatives} alternatives")]
    RowCount { rows: usize, alternatives: usize },
    #[error("weight {weight} for criterion {criterion} must be finite and non-negative")]
    InvalidWeight { criterion: String, weight: f64 },
    #[error("at least one weight must be positive")]
    NoPositiveWeight,
    #[error("weights cover {weights:?} but the matrix has criteria {criteria:?}")]
    CriteriaMismatch {
        weights: Vec<String>,
        criteria: Vec<String>,
    },
    #[error("activity {code} has no value for criterion {criterion}")]
    MissingValue { code: String, criterion: String },
    #[error("nothing to score: {0}")]
    Empty(&'static str),
    #[error("{name} = {value} is outside [0, 100]")]
    OutOfRange { name: &'static str, value: f64 },
}

/// Identifies a criterion. The four built-in criteria read their values
/// straight from [`Activity`]; custom criteria read from its extra
/// attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum CriterionId {
    Link,
    Contribution,
    Capex,
    Turnover,
    Custom(String),
}

impl CriterionId {
    pub fn value_for(&self, activity: &Activity) -> Option<f64> {
        match self {
            CriterionId::Link => Some(activity.link().into()),
            CriterionId::Contribution => Some(activity.contribution().into()),
            CriterionId::Capex => activity.capex(),
            CriterionId::Turnover => activity.turnover(),
            CriterionId::Custom(name) => activity.extra(name),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            CriterionId::Link => "link",
            CriterionId::Contribution => "contribution",
            CriterionId::Capex => "capex",
            CriterionId::Turnover => "turnover",
            CriterionId::Custom(name) => name,
        }
    }
}

impl From<String> for CriterionId {
    fn from(s: String) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "link" => CriterionId::Link,
            "contribution" => CriterionId::Contribution,
            "capex" => CriterionId::Capex,
            "turnover" => CriterionId::Turnover,
            _ => CriterionId::Custom(s.trim().to_string()),
        }
    }
}

impl From<CriterionId> for String {
    fn from(id: CriterionId) -> Self {
        id.as_str().to_string()
    }
}

impl FromStr for CriterionId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(CriterionId::from(s.to_string()))
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether larger raw values are better (benefit) or worse (cost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Benefit,
    Cost,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "benefit" => Ok(Direction::Benefit),
            "cost" => Ok(Direction::Cost),
            other => Err(format!("unknown direction {other:?}, expected benefit or cost")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Criterion {
    pub id: CriterionId,
    #[serde(default)]
    pub direction: Direction,
}

impl Criterion {
    pub fn benefit(id: CriterionId) -> Self {
        Criterion {
            id,
            direction: Direction::Benefit,
        }
    }

    pub fn cost(id: CriterionId) -> Self {
        Criterion {
            id,
            direction: Direction::Cost,
        }
    }
}

/// Criterion weights, in order.
///
/// Weights need not sum to one; see [`WeightVector::renormalized`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    entries: Vec<(CriterionId, f64)>,
}

impl WeightVector {
    pub fn new(entries: Vec<(CriterionId, f64)>) -> Result<Self, ScoreError> {
        let mut seen = HashSet::new();
        for (id, weight) in &entries {
            if !seen.insert(id) {
                return Err(ScoreError::DuplicateCriterion(id.to_string()));
            }
            if !weight.is_finite() || *weight < 0.0 {
                return Err(ScoreError::InvalidWeight {
                    criterion: id.to_string(),
                    weight: *weight,
                });
            }
        }
        if !entries.iter().any(|(_, w)| *w > 0.0) {
            return Err(ScoreError::NoPositiveWeight);
        }
        Ok(WeightVector { entries })
    }

    pub fn entries(&self) -> &[(CriterionId, f64)] {
        &self.entries
    }

    pub fn get(&self, id: &CriterionId) -> Option<f64> {
        self.entries.iter().find(|(c, _)| c == id).map(|(_, w)| *w)
    }

    pub fn ids(&self) -> impl Iterator<Item = &CriterionId> {
        self.entries.iter().map(|(c, _)| c)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ScoreError> {
        WeightVector::new(self.entries.iter().map(|(c, w)| (c.clone(), w * factor)).collect())
    }

    /// Weights divided by their sum, so they add up to one.
    pub fn renormalized(&self) -> Self {
        let total = self.sum();
        WeightVector {
            entries: self.entries.iter().map(|(c, w)| (c.clone(), w / total)).collect(),
        }
    }
}

/// Alternatives by criteria grid of raw (or normalized) values.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix {
    alternatives: Vec<ActivityCode>,
    criteria: Vec<Criterion>,
    // row-major
    values: Vec<f64>,
}

impl DecisionMatrix {
    pub fn new(
        alternatives: Vec<ActivityCode>,
        criteria: Vec<Criterion>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, ScoreError> {
        if alternatives.is_empty() {
            return Err(ScoreError::Empty("no alternatives"));
        }
        if criteria.is_empty() {
            return Err(ScoreError::Empty("no criteria"));
        }
        if rows.len() != alternatives.len() {
            return Err(ScoreError::RowCount {
                rows: rows.len(),
                alternatives: alternatives.len(),
            });
        }
        let mut seen = HashSet::new();
        for code in &alternatives {
            if !seen.insert(code) {
                return Err(ScoreError::DuplicateCode(code.to_string()));
            }
        }
        let mut seen = HashSet::new();
        for c in &criteria {
            if !seen.insert(&c.id) {
                return Err(ScoreError::DuplicateCriterion(c.id.to_string()));
            }
        }
        let mut values = Vec::with_capacity(rows.len() * criteria.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != criteria.len() {
                return Err(ScoreError::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: criteria.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ScoreError::NonFinite {
                        code: alternatives[i].to_string(),
                        criterion: criteria[j].id.to_string(),
                    });
                }
            }
            values.extend(row);
        }
        Ok(DecisionMatrix {
            alternatives,
            criteria,
            values,
        })
    }

    /// Reads each criterion's raw value off every activity.
    pub fn from_activities(activities: &[Activity], criteria: &[Criterion]) -> Result<Self, ScoreError> {
        let rows = activities
            .iter()
            .map(|a| {
                criteria
                    .iter()
                    .map(|c| {
                        c.id.value_for(a).ok_or_else(|| ScoreError::MissingValue {
                            code: a.code().to_string(),
                            criterion: c.id.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let codes = activities.iter().map(|a| a.code().clone()).collect();
        DecisionMatrix::new(codes, criteria.to_vec(), rows)
    }

    pub fn alternatives(&self) -> &[ActivityCode] {
        &self.alternatives
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn n_alternatives(&self) -> usize {
        self.alternatives.len()
    }

    pub fn n_criteria(&self) -> usize {
        self.criteria.len()
    }

    pub fn value(&self, row: usize, column: usize) -> f64 {
        self.values[row * self.criteria.len() + column]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.criteria.len();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn column(&self, column: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(column).step_by(self.criteria.len()).copied()
    }
}

/// Min-max normalizes every column onto `[0, 1]`.
///
/// Benefit columns map the column minimum to 0 and maximum to 1; cost
/// columns the reverse. A column whose values are all equal carries no
/// information and becomes all zeros.
pub fn normalize_matrix(matrix: &DecisionMatrix) -> DecisionMatrix {
    let n = matrix.n_criteria();
    let mut values = matrix.values.clone();
    for (j, criterion) in matrix.criteria.iter().enumerate() {
        let (lo, hi) = matrix
            .column(j)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        for v in values.iter_mut().skip(j).step_by(n) {
            *v = if span > 0.0 {
                let x = match criterion.direction {
                    Direction::Benefit => (*v - lo) / span,
                    Direction::Cost => (hi - *v) / span,
                };
                x.clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        if span <= 0.0 && matrix.n_alternatives() > 1 {
            log::warn!(
                "criterion {} is constant across all alternatives; normalized to 0",
                criterion.id
            );
        }
    }
    DecisionMatrix {
        alternatives: matrix.alternatives.clone(),
        criteria: matrix.criteria.clone(),
        values,
    }
}

/// `S_i = sum_j w_j * V_ij` for every row of an already normalized matrix.
///
/// Weights are matched to columns by criterion id and must cover exactly the
/// matrix's criteria.
pub fn weighted_sum(matrix: &DecisionMatrix, weights: &WeightVector) -> Result<Vec<(ActivityCode, f64)>, ScoreError> {
    let wanted: BTreeSet<_> = matrix.criteria.iter().map(|c| &c.id).collect();
    let given: BTreeSet<_> = weights.ids().collect();
    if wanted != given || weights.entries().len() != matrix.n_criteria() {
        return Err(ScoreError::CriteriaMismatch {
            weights: weights.ids().map(ToString::to_string).collect(),
            criteria: matrix.criteria.iter().map(|c| c.id.to_string()).collect(),
        });
    }
    let column_weights: Vec<f64> = matrix
        .criteria
        .iter()
        .map(|c| weights.get(&c.id).unwrap_or(0.0))
        .collect();
    Ok(matrix
        .alternatives
        .iter()
        .enumerate()
        .map(|(i, code)| {
            let s = matrix.row(i).iter().zip(&column_weights).map(|(v, w)| v * w).sum();
            (code.clone(), s)
        })
        .collect())
}

/// Min-max rescales weighted sums onto `[0, 100]`.
///
/// The best alternative lands on 100 and the worst on 0. When every sum is
/// equal all alternatives get 100.
pub fn rescale_scores(sums: &[(ActivityCode, f64)]) -> Result<Vec<(ActivityCode, f64)>, ScoreError> {
    if sums.is_empty() {
        return Err(ScoreError::Empty("no weighted sums to rescale"));
    }
    let (lo, hi) = sums
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| {
            (lo.min(*s), hi.max(*s))
        });
    let span = hi - lo;
    let degenerate = span <= DEGENERATE_SPREAD * hi.abs().max(lo.abs());
    Ok(sums
        .iter()
        .map(|(code, s)| {
            let pct = if degenerate {
                100.0
            } else {
                (100.0 * ((s - lo) / span)).clamp(0.0, 100.0)
            };
            (code.clone(), pct)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub code: ActivityCode,
    pub weighted_sum: f64,
    pub normalized_percent: f64,
    /// Dense rank, 1 for the best; tied percents share a rank.
    pub rank: usize,
}

/// Result of one scoring run, rows sorted best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    pub average_percent: f64,
    pub deterioration_percent: f64,
}

impl ScoreTable {
    /// Builds a table from per-alternative weighted sums.
    pub fn from_sums(sums: &[(ActivityCode, f64)]) -> Result<Self, ScoreError> {
        let percents = rescale_scores(sums)?;
        let mut rows: Vec<ScoreRow> = sums
            .iter()
            .zip(percents)
            .map(|((code, s), (_, pct))| ScoreRow {
                code: code.clone(),
                weighted_sum: *s,
                normalized_percent: pct,
                rank: 0,
            })
            .collect();
        sort_and_rank(&mut rows);
        let average_percent = rows.iter().map(|r| r.normalized_percent).sum::<f64>() / rows.len() as f64;
        Ok(ScoreTable {
            rows,
            average_percent,
            deterioration_percent: 100.0 - average_percent,
        })
    }

    pub fn row(&self, code: &ActivityCode) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| &r.code == code)
    }

    pub fn rank_of(&self, code: &ActivityCode) -> Option<usize> {
        self.row(code).map(|r| r.rank)
    }

    pub fn ranking(&self) -> impl Iterator<Item = &ActivityCode> {
        self.rows.iter().map(|r| &r.code)
    }
}

// Groups near-equal percents, then orders by (group, code).
fn sort_and_rank(rows: &mut [ScoreRow]) {
    rows.sort_by(|a, b| {
        b.normalized_percent
            .partial_cmp(&a.normalized_percent)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.code.cmp(&b.code))
    });
    let mut rank = 0;
    let mut anchor = f64::NAN;
    for row in rows.iter_mut() {
        if rank == 0 || (anchor - row.normalized_percent).abs() > TIE_TOLERANCE {
            rank += 1;
            anchor = row.normalized_percent;
        }
        row.rank = rank;
    }
    rows.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.code.cmp(&b.code)));
}

/// Scores a set of activities: normalize, weight, rescale, average.
pub fn score_run(
    activities: &[Activity],
    criteria: &[Criterion],
    weights: &WeightVector,
) -> Result<ScoreTable, ScoreError> {
    if activities.is_empty() {
        return Err(ScoreError::Empty("no activities"));
    }
    let matrix = DecisionMatrix::from_activities(activities, criteria)?;
    let normalized = normalize_matrix(&matrix);
    let sums = weighted_sum(&normalized, weights)?;
    ScoreTable::from_sums(&sums)
}

/// Lowers an environmental score by a deterioration percentage.
pub fn apply_deterioration(base_env_score: f64, deterioration_percent: f64) -> Result<f64, ScoreError> {
    for (name, value) in [
        ("base environmental score", base_env_score),
        ("deterioration", deterioration_percent),
    ] {
        if !(0.0..=100.0).contains(&value) {
            return Err(ScoreError::OutOfRange { name, value });
        }
    }
    Ok(base_env_score * (1.0 - deterioration_percent / 100.0))
}
