//! Taxonomy-aligned activities: the alternatives being scored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mcdm::ScoreError;

/// A taxonomy activity code such as `4.3` or `7.6`.
///
/// Codes order segment by segment, numerically where both segments are
/// numbers, so `4.3` sorts before `4.10`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ActivityCode(String);

impl ActivityCode {
    pub fn new(code: impl Into<String>) -> Result<Self, ScoreError> {
        let code = code.into();
        let trimmed = code.trim();
        if trimmed.is_empty() {
            return Err(ScoreError::EmptyCode);
        }
        Ok(ActivityCode(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ActivityCode {
    type Error = ScoreError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ActivityCode::new(value)
    }
}

impl From<ActivityCode> for String {
    fn from(code: ActivityCode) -> Self {
        code.0
    }
}

impl FromStr for ActivityCode {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivityCode::new(s)
    }
}

impl fmt::Display for ActivityCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for ActivityCode {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut lhs = self.0.split('.');
        let mut rhs = other.0.split('.');
        loop {
            match (lhs.next(), rhs.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(a), Some(b)) => {
                    let ord = match (a.parse::<u64>(), b.parse::<u64>()) {
                        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
                        _ => a.cmp(b),
                    };
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
            }
        }
    }
}

impl PartialOrd for ActivityCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An analyst-assigned level on the 0 to 5 scale used for Link and
/// Contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Level(u8);

impl Level {
    pub const MAX: u8 = 5;

    pub fn new(value: i64) -> Result<Self, ScoreError> {
        if (0..=i64::from(Self::MAX)).contains(&value) {
            Ok(Level(value as u8))
        } else {
            Err(ScoreError::LevelOutOfRange(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<i64> for Level {
    type Error = ScoreError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Level::new(value)
    }
}

impl From<Level> for u8 {
    fn from(level: Level) -> Self {
        level.0
    }
}

impl From<Level> for f64 {
    fn from(level: Level) -> Self {
        f64::from(level.0)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One taxonomy-aligned corporate activity.
///
/// Monetary figures are millions of USD. Either may be absent when the
/// activity appears in only one of the CapEx and Turnover disclosures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    code: ActivityCode,
    name: String,
    capex: Option<f64>,
    turnover: Option<f64>,
    link: Level,
    contribution: Level,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, f64>,
}

impl Activity {
    pub fn new(code: ActivityCode, name: impl Into<String>, link: Level, contribution: Level) -> Self {
        Activity {
            code,
            name: name.into(),
            capex: None,
            turnover: None,
            link,
            contribution,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_capex(mut self, musd: f64) -> Result<Self, ScoreError> {
        self.capex = Some(check_amount("capex", musd)?);
        Ok(self)
    }

    pub fn with_turnover(mut self, musd: f64) -> Result<Self, ScoreError> {
        self.turnover = Some(check_amount("turnover", musd)?);
        Ok(self)
    }

    /// Attaches a value for a user-defined criterion.
    pub fn with_extra(mut self, criterion: impl Into<String>, value: f64) -> Result<Self, ScoreError> {
        let criterion = criterion.into();
        if !value.is_finite() {
            return Err(ScoreError::NonFinite {
                code: self.code.to_string(),
                criterion,
            });
        }
        self.extra.insert(criterion, value);
        Ok(self)
    }

    pub fn code(&self) -> &ActivityCode {
        &self.code
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn capex(&self) -> Option<f64> {
        self.capex
    }

    pub fn turnover(&self) -> Option<f64> {
        self.turnover
    }

    pub fn link(&self) -> Level {
        self.link
    }

    pub fn contribution(&self) -> Level {
        self.contribution
    }

    pub fn extra(&self, criterion: &str) -> Option<f64> {
        self.extra.get(criterion).copied()
    }
}

fn check_amount(field: &'static str, value: f64) -> Result<f64, ScoreError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ScoreError::NegativeAmount { field, value })
    }
}
