//! Straight-line reference implementation of the scoring pipeline, written
//! independently of the library so the two can be checked against each other.

#![allow(dead_code, clippy::needless_range_loop)]

use crosswash::{Activity, ActivityCode, Criterion, CriterionId, Direction, Level, WeightVector};

pub struct OracleRun {
    pub normalized: Vec<Vec<f64>>,
    pub sums: Vec<f64>,
    pub percents: Vec<f64>,
    pub average: f64,
}

/// raw[i][j]: alternative i, criterion j. `benefit[j]` false means cost.
pub fn oracle(raw: &[Vec<f64>], weights: &[f64], benefit: &[bool]) -> OracleRun {
    let rows = raw.len();
    let cols = weights.len();
    let mut normalized = vec![vec![0.0; cols]; rows];
    for j in 0..cols {
        let mut lo = raw[0][j];
        let mut hi = raw[0][j];
        for i in 1..rows {
            if raw[i][j] < lo {
                lo = raw[i][j];
            }
            if raw[i][j] > hi {
                hi = raw[i][j];
            }
        }
        for i in 0..rows {
            normalized[i][j] = if hi == lo {
                0.0
            } else if benefit[j] {
                (raw[i][j] - lo) / (hi - lo)
            } else {
                (hi - raw[i][j]) / (hi - lo)
            };
        }
    }
    let mut sums = vec![0.0; rows];
    for i in 0..rows {
        for j in 0..cols {
            sums[i] += weights[j] * normalized[i][j];
        }
    }
    let mut lo = sums[0];
    let mut hi = sums[0];
    for s in &sums {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    let flat = hi - lo <= 1e-12 * hi.abs().max(lo.abs());
    let percents: Vec<f64> = sums
        .iter()
        .map(|s| if flat { 100.0 } else { 100.0 * (s - lo) / (hi - lo) })
        .collect();
    let average = percents.iter().sum::<f64>() / rows as f64;
    OracleRun {
        normalized,
        sums,
        percents,
        average,
    }
}

pub fn code(i: usize) -> ActivityCode {
    ActivityCode::new(format!("{}.{}", i / 10 + 1, i % 10 + 1)).unwrap()
}

pub fn criterion_name(j: usize) -> String {
    format!("c{j}")
}

/// Builds activities carrying `raw` as custom criteria `c0, c1, ...`.
pub fn activities_from(raw: &[Vec<f64>]) -> Vec<Activity> {
    raw.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut a = Activity::new(
                code(i),
                format!("activity {i}"),
                Level::new(0).unwrap(),
                Level::new(0).unwrap(),
            );
            for (j, v) in row.iter().enumerate() {
                a = a.with_extra(criterion_name(j), *v).unwrap();
            }
            a
        })
        .collect()
}

pub fn criteria_from(benefit: &[bool]) -> Vec<Criterion> {
    benefit
        .iter()
        .enumerate()
        .map(|(j, b)| Criterion {
            id: CriterionId::Custom(criterion_name(j)),
            direction: if *b { Direction::Benefit } else { Direction::Cost },
        })
        .collect()
}

pub fn weights_from(weights: &[f64]) -> WeightVector {
    WeightVector::new(
        weights
            .iter()
            .enumerate()
            .map(|(j, w)| (CriterionId::Custom(criterion_name(j)), *w))
            .collect(),
    )
    .unwrap()
}

/// The fourteen activities in both disclosure tables:
/// (code, capex, turnover, link, contribution).
pub const MERGED: [(&str, f64, f64, i64, i64); 14] = [
    ("3.3", 13.0, 370.0, 4, 2),
    ("3.4", 36.0, 833.0, 3, 2),
    ("3.5", 1.0, 29.0, 4, 3),
    ("3.17", 21.0, 47.0, 1, 0),
    ("4.1", 1060.0, 45.0, 3, 3),
    ("4.3", 938.0, 47.0, 4, 3),
    ("4.10", 85.0, 15.0, 3, 3),
    ("4.13", 54.0, 179.0, 3, 2),
    ("4.25", 1.0, 1.0, 3, 2),
    ("5.7", 18.0, 32.0, 2, 2),
    ("6.15", 167.0, 54.0, 3, 2),
    ("7.4", 3.0, 28.0, 3, 2),
    ("7.6", 132.0, 1398.0, 2, 3),
    ("9.3", 9.0, 305.0, 1, 3),
];

/// Oracle run over the merged set; columns are capex, turnover, link, contribution.
pub fn merged_oracle(weights: [f64; 4]) -> (Vec<&'static str>, OracleRun) {
    let raw: Vec<Vec<f64>> = MERGED
        .iter()
        .map(|(_, c, t, l, k)| vec![*c, *t, *l as f64, *k as f64])
        .collect();
    let codes = MERGED.iter().map(|r| r.0).collect();
    (codes, oracle(&raw, &weights, &[true; 4]))
}
