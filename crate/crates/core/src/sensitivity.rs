//! How much do the scores depend on the chosen weights?
//!
//! [`sweep_weights`] re-runs [`score_run`] over a grid of perturbed weight
//! vectors; [`rank_stability`] reports how often each activity keeps its
//! baseline rank across that grid. [`compare_criteria_sets`] scores the same
//! activities under two criteria selections and reports rank shifts, which
//! is how the with/without financial criteria contrast is expressed.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{Activity, ActivityCode};
use crate::mcdm::{score_run, Criterion, CriterionId, ScoreError, ScoreTable, WeightVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("perturbation step {0} must be finite and positive")]
    InvalidStep(f64),
}

/// Additive weight perturbations of `±k * step` for `k` in `1..=radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub step: f64,
    pub radius: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub weights: WeightVector,
    pub average_percent: f64,
    pub deterioration_percent: f64,
    /// Codes best first, with their dense ranks.
    pub ranking: Vec<(ActivityCode, usize)>,
}

impl SweepPoint {
    fn from_table(weights: WeightVector, table: &ScoreTable) -> Self {
        SweepPoint {
            weights,
            average_percent: table.average_percent,
            deterioration_percent: table.deterioration_percent,
            ranking: table.rows.iter().map(|r| (r.code.clone(), r.rank)).collect(),
        }
    }

    pub fn rank_of(&self, code: &ActivityCode) -> Option<usize> {
        self.ranking.iter().find(|(c, _)| c == code).map(|(_, r)| *r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub baseline: WeightVector,
    /// Grid points in enumeration order; the first is the baseline.
    pub grid: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn baseline_point(&self) -> &SweepPoint {
        &self.grid[0]
    }
}

/// The weight vectors visited by a sweep, baseline first.
///
/// Each criterion is perturbed on its own by `k * step` for
/// `k = -radius..=-1, 1..=radius`, clamped at zero. Vectors whose weights
/// all clamp to zero are dropped.
pub fn perturbation_grid(
    baseline: &WeightVector,
    perturbation: Perturbation,
) -> Result<Vec<WeightVector>, SensitivityError> {
    let Perturbation { step, radius } = perturbation;
    if !(step.is_finite() && step > 0.0) {
        return Err(SensitivityError::InvalidStep(step));
    }
    let mut grid = vec![baseline.clone()];
    let radius = i64::from(radius);
    for j in 0..baseline.entries().len() {
        for k in (-radius..=radius).filter(|k| *k != 0) {
            let entries: Vec<(CriterionId, f64)> = baseline
                .entries()
                .iter()
                .enumerate()
                .map(|(i, (id, w))| {
                    let w = if i == j { (w + k as f64 * step).max(0.0) } else { *w };
                    (id.clone(), w)
                })
                .collect();
            match WeightVector::new(entries) {
                Ok(w) => grid.push(w),
                Err(ScoreError::NoPositiveWeight) => {
                    log::debug!("skipping all-zero weight vector (criterion {j}, k = {k})")
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(grid)
}

/// Scores every point of the perturbation grid. Points are evaluated in
/// parallel and returned in grid order.
pub fn sweep_weights(
    activities: &[Activity],
    criteria: &[Criterion],
    baseline: &WeightVector,
    perturbation: Perturbation,
) -> Result<SweepResult, SensitivityError> {
    let grid = perturbation_grid(baseline, perturbation)?;
    let points = grid
        .into_par_iter()
        .map(|w| score_run(activities, criteria, &w).map(|t| SweepPoint::from_table(w, &t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        baseline: baseline.clone(),
        grid: points,
    })
}

/// For each code, the fraction of grid points at which its dense rank
/// equals its baseline rank. Codes come back in baseline order.
pub fn rank_stability(sweep: &SweepResult) -> Vec<(ActivityCode, f64)> {
    let Some(base) = sweep.grid.first() else {
        return Vec::new();
    };
    let n = sweep.grid.len() as f64;
    base.ranking
        .iter()
        .map(|(code, rank)| {
            let same = sweep.grid.iter().filter(|p| p.rank_of(code) == Some(*rank)).count();
            (code.clone(), same as f64 / n)
        })
        .collect()
}

/// A criteria selection together with its weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaSet {
    pub criteria: Vec<Criterion>,
    pub weights: WeightVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankShift {
    pub code: ActivityCode,
    pub rank_a: usize,
    pub rank_b: usize,
    /// `rank_b - rank_a`; positive means the activity moved down under `b`.
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: ScoreTable,
    pub b: ScoreTable,
    /// In the order of `a`'s ranking.
    pub shifts: Vec<RankShift>,
}

pub fn compare_criteria_sets(
    activities: &[Activity],
    set_a: &CriteriaSet,
    set_b: &CriteriaSet,
) -> Result<Comparison, SensitivityError> {
    let a = score_run(activities, &set_a.criteria, &set_a.weights)?;
    let b = score_run(activities, &set_b.criteria, &set_b.weights)?;
    let ranks_b: HashMap<&ActivityCode, usize> = b.rows.iter().map(|r| (&r.code, r.rank)).collect();
    let shifts = a
        .rows
        .iter()
        .map(|r| {
            let rank_b = ranks_b[&r.code];
            RankShift {
                code: r.code.clone(),
                rank_a: r.rank,
                rank_b,
                delta: rank_b as i64 - r.rank as i64,
            }
        })
        .collect();
    Ok(Comparison { a, b, shifts })
}
