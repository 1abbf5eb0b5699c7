//! Quantifying crosswashing: how much of a company's taxonomy-aligned
//! activity actually relates to its core business.
//!
//! Each aligned activity is scored with a weighted-sum multi-criteria model
//! over its Link and Contribution levels (analyst inputs, 0 to 5) and,
//! optionally, its CapEx and Turnover. The average of the rescaled scores
//! says how well the aligned activities line up with the main business;
//! `100 - average` is the deterioration to apply to an environmental rating
//! computed from taxonomy alignment alone.
//!
//! ```
//! use crosswash::dataset::{Dataset, JoinMode};
//! use crosswash::mcdm::score_run;
//! use crosswash::reproduce::financial_run;
//!
//! let data = Dataset::bundled();
//! let activities = data.activities(JoinMode::Inner).unwrap();
//! let (criteria, weights) = financial_run();
//! let table = score_run(&activities, &criteria, &weights).unwrap();
//! assert!((table.average_percent - 53.20).abs() < 0.01);
//! assert!((table.deterioration_percent - 46.80).abs() < 0.01);
//! ```
//!
//! A longer walk-through lives in the `book/` directory of the repository.

pub mod activity;
pub mod aggregation;
pub mod cli;
pub mod dataset;
pub mod mcdm;
pub mod report;
pub mod reproduce;
pub mod sensitivity;

pub use activity::{Activity, ActivityCode, Level};
pub use mcdm::{
    apply_deterioration, normalize_matrix, rescale_scores, score_run, weighted_sum, Criterion, CriterionId,
    DecisionMatrix, Direction, ScoreError, ScoreTable, WeightVector,
};

// Runs the Rust snippets in the book as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/weighted-sum.md")]
    mod weighted_sum {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/deterioration.md")]
    mod deterioration {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/aggregation.md")]
    mod aggregation {}
    #[doc = include_str!("../../../book/src/sensitivity.md")]
    mod sensitivity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
