//! CSV data formats, validation, and the bundled TotalEnergies 2022 fixture.
//!
//! All files are UTF-8 CSV with a header row, comma delimiter, a decimal
//! point and no thousands separators:
//!
//! | file | header |
//! |------|--------|
//! | `capex.csv`, `turnover.csv` | `code,name,amount_musd,share_of_company` |
//! | `attributes.csv` | `code,name,link,contribution,link_rationale,contribution_rationale` |
//! | `context.csv` | `company,period,eligible_capex_musd,eligible_capex_share,eligible_turnover_musd,eligible_turnover_share,aligned_capex_musd,aligned_turnover_musd` |
//!
//! `context.csv` may append `company_capex_total_musd` and
//! `company_turnover_total_musd`; otherwise company totals are derived as
//! eligible amount divided by eligible share.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{Activity, ActivityCode, Level};
use crate::mcdm::ScoreError;

pub const SOURCE_HEADER: &[&str] = &["code", "name", "amount_musd", "share_of_company"];
pub const ATTRIBUTE_HEADER: &[&str] = &[
    "code",
    "name",
    "link",
    "contribution",
    "link_rationale",
    "contribution_rationale",
];
pub const CONTEXT_HEADER: &[&str] = &[
    "company",
    "period",
    "eligible_capex_musd",
    "eligible_capex_share",
    "eligible_turnover_musd",
    "eligible_turnover_share",
    "aligned_capex_musd",
    "aligned_turnover_musd",
];
const CONTEXT_OPTIONAL: &[&str] = &["company_capex_total_musd", "company_turnover_total_musd"];

/// Tolerance between an explicit company total and the one implied by an
/// eligible amount and its share.
const TOTAL_CONSISTENCY: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: line {line}{}: {message}", column.as_ref().map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        file: String,
        line: u64,
        column: Option<String>,
        message: String,
    },
    #[error("{file}: line {line}, column {column}: level {value} is outside 0..=5")]
    OutOfRangeLevel {
        file: String,
        line: u64,
        column: &'static str,
        value: i64,
    },
    #[error("{file}: line {line}: {message}")]
    Validation { file: String, line: u64, message: String },
    #[error("{file}: duplicate code {code}")]
    DuplicateCode { file: String, code: String },
    #[error("no attribute row for activity {0}")]
    MissingAttribute(String),
    #[error("activity {0} appears in both tables with conflicting data")]
    Conflict(String),
    #[error("context: {0}")]
    Context(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Capex,
    Turnover,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Capex => "capex",
            SourceKind::Turnover => "turnover",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub code: ActivityCode,
    pub name: String,
    pub amount_musd: f64,
    /// Fraction of the company-wide figure, as disclosed.
    pub share_of_company: f64,
}

/// One of the two disclosure tables (CapEx or Turnover) for aligned activities.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTable {
    pub kind: SourceKind,
    pub rows: Vec<SourceRow>,
}

impl SourceTable {
    pub fn total_musd(&self) -> f64 {
        self.rows.iter().map(|r| r.amount_musd).sum()
    }

    pub fn get(&self, code: &ActivityCode) -> Option<&SourceRow> {
        self.rows.iter().find(|r| &r.code == code)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub code: ActivityCode,
    pub name: String,
    pub link: Level,
    pub contribution: Level,
    pub link_rationale: String,
    pub contribution_rationale: String,
}

/// Analyst-assigned Link and Contribution levels with their rationale.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    pub rows: Vec<AttributeRow>,
}

impl AttributeTable {
    pub fn get(&self, code: &ActivityCode) -> Option<&AttributeRow> {
        self.rows.iter().find(|r| &r.code == code)
    }
}

/// Company-level disclosure figures used to turn group sums into shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyContext {
    pub company: String,
    pub period: i32,
    pub eligible_capex_musd: f64,
    pub eligible_capex_share: f64,
    pub eligible_turnover_musd: f64,
    pub eligible_turnover_share: f64,
    pub aligned_capex_musd: f64,
    pub aligned_turnover_musd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub company_capex_total_musd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub company_turnover_total_musd: Option<f64>,
}

impl CompanyContext {
    /// Company-wide CapEx: explicit when given, else eligible / share.
    pub fn company_capex_total(&self) -> f64 {
        self.company_capex_total_musd
            .unwrap_or(self.eligible_capex_musd / self.eligible_capex_share)
    }

    pub fn company_turnover_total(&self) -> f64 {
        self.company_turnover_total_musd
            .unwrap_or(self.eligible_turnover_musd / self.eligible_turnover_share)
    }

    pub fn company_total(&self, kind: SourceKind) -> f64 {
        match kind {
            SourceKind::Capex => self.company_capex_total(),
            SourceKind::Turnover => self.company_turnover_total(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let amounts = [
            ("eligible_capex_musd", self.eligible_capex_musd),
            ("eligible_turnover_musd", self.eligible_turnover_musd),
            ("aligned_capex_musd", self.aligned_capex_musd),
            ("aligned_turnover_musd", self.aligned_turnover_musd),
        ];
        for (name, v) in amounts {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} = {v} must be non-negative"));
            }
        }
        for (name, v) in [
            ("eligible_capex_share", self.eligible_capex_share),
            ("eligible_turnover_share", self.eligible_turnover_share),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} = {v} must be a fraction in (0, 1]"));
            }
        }
        for (name, explicit, amount, share) in [
            (
                "company_capex_total_musd",
                self.company_capex_total_musd,
                self.eligible_capex_musd,
                self.eligible_capex_share,
            ),
            (
                "company_turnover_total_musd",
                self.company_turnover_total_musd,
                self.eligible_turnover_musd,
                self.eligible_turnover_share,
            ),
        ] {
            if let Some(total) = explicit {
                let implied = amount / share;
                if total.is_nan() || total <= 0.0 || ((total - implied) / implied).abs() > TOTAL_CONSISTENCY {
                    return Err(format!(
                        "{name} = {total} disagrees with eligible amount / share = {implied:.1}"
                    ));
                }
            } else {
                log::debug!("{name} derived as {amount} / {share} = {:.3}", amount / share);
            }
        }
        Ok(())
    }
}

/// How to combine the CapEx and Turnover tables into activities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JoinMode {
    /// Activities present in both tables, with both figures set.
    #[default]
    Inner,
    /// Every CapEx row; turnover left unset.
    CapexOnly,
    /// Every Turnover row; capex left unset.
    TurnoverOnly,
    /// Union of both tables; each figure set where disclosed.
    Outer,
}

impl FromStr for JoinMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "inner" => Ok(JoinMode::Inner),
            "capex-only" => Ok(JoinMode::CapexOnly),
            "turnover-only" => Ok(JoinMode::TurnoverOnly),
            "outer" => Ok(JoinMode::Outer),
            other => Err(format!("unknown join mode {other:?}")),
        }
    }
}

#[derive(Deserialize)]
struct RawSource {
    code: String,
    name: String,
    amount_musd: f64,
    share_of_company: f64,
}

#[derive(Deserialize)]
struct RawAttribute {
    code: String,
    name: String,
    link: i64,
    contribution: i64,
    link_rationale: String,
    contribution_rationale: String,
}

// Reads records after checking the header, keeping line numbers for errors.
fn read_records<R: Read, T: DeserializeOwned>(
    reader: R,
    file: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<Vec<(u64, T)>, DatasetError> {
    let parse_err = |line: u64, column: Option<String>, message: String| DatasetError::Parse {
        file: file.to_string(),
        line,
        column,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, None, e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(parse_err(1, None, "empty file, expected a header row".into()));
    }
    let got: Vec<&str> = headers.iter().collect();
    let ok = got.len() >= required.len()
        && got[..required.len()] == *required
        && got[required.len()..].iter().all(|h| optional.contains(h));
    if !ok {
        return Err(parse_err(
            1,
            None,
            format!(
                "header {:?} does not match expected {:?}",
                got.join(","),
                required.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, None, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let value: T = record.deserialize(Some(&headers)).map_err(|e| {
            let (column, text) = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => {
                    let idx = err.field().map(|f| f as usize);
                    (
                        idx.and_then(|i| headers.get(i)).map(str::to_string),
                        idx.and_then(|i| record.get(i)).unwrap_or("").to_string(),
                    )
                }
                _ => (None, String::new()),
            };
            parse_err(line, column, format!("cannot parse {text:?}: {e}"))
        })?;
        out.push((line, value));
    }
    Ok(out)
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<File, DatasetError> {
    File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_source_table(path: &Path, kind: SourceKind) -> Result<SourceTable, DatasetError> {
    read_source_table(open(path)?, kind, &file_label(path))
}

/// Parses and validates a CapEx or Turnover table. `file` labels errors.
pub fn read_source_table<R: Read>(reader: R, kind: SourceKind, file: &str) -> Result<SourceTable, DatasetError> {
    let raw: Vec<(u64, RawSource)> = read_records(reader, file, SOURCE_HEADER, &[])?;
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(raw.len());
    for (line, r) in raw {
        let invalid = |message: String| DatasetError::Validation {
            file: file.to_string(),
            line,
            message,
        };
        let code = ActivityCode::new(r.code).map_err(|e| invalid(e.to_string()))?;
        if !r.amount_musd.is_finite() || r.amount_musd < 0.0 {
            return Err(invalid(format!("amount_musd {} must be non-negative", r.amount_musd)));
        }
        if !(0.0..=1.0).contains(&r.share_of_company) {
            return Err(invalid(format!(
                "share_of_company {} must be a fraction in [0, 1]",
                r.share_of_company
            )));
        }
        if !seen.insert(code.clone()) {
            return Err(DatasetError::DuplicateCode {
                file: file.to_string(),
                code: code.to_string(),
            });
        }
        rows.push(SourceRow {
            code,
            name: r.name,
            amount_musd: r.amount_musd,
            share_of_company: r.share_of_company,
        });
    }
    Ok(SourceTable { kind, rows })
}

/// Writes a source table in the same schema it is read from.
pub fn write_source_table<W: Write>(table: &SourceTable, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(SOURCE_HEADER)?;
    for row in &table.rows {
        w.write_record([
            row.code.as_str(),
            row.name.as_str(),
            &row.amount_musd.to_string(),
            &row.share_of_company.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_attributes(path: &Path) -> Result<AttributeTable, DatasetError> {
    read_attributes(open(path)?, &file_label(path))
}

pub fn read_attributes<R: Read>(reader: R, file: &str) -> Result<AttributeTable, DatasetError> {
    let raw: Vec<(u64, RawAttribute)> = read_records(reader, file, ATTRIBUTE_HEADER, &[])?;
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(raw.len());
    for (line, r) in raw {
        let code = ActivityCode::new(r.code).map_err(|e| DatasetError::Validation {
            file: file.to_string(),
            line,
            message: e.to_string(),
        })?;
        let level = |column: &'static str, value: i64| {
            Level::new(value).map_err(|_| DatasetError::OutOfRangeLevel {
                file: file.to_string(),
                line,
                column,
                value,
            })
        };
        let link = level("link", r.link)?;
        let contribution = level("contribution", r.contribution)?;
        if !seen.insert(code.clone()) {
            return Err(DatasetError::DuplicateCode {
                file: file.to_string(),
                code: code.to_string(),
            });
        }
        rows.push(AttributeRow {
            code,
            name: r.name,
            link,
            contribution,
            link_rationale: r.link_rationale,
            contribution_rationale: r.contribution_rationale,
        });
    }
    Ok(AttributeTable { rows })
}

pub fn load_context(path: &Path) -> Result<CompanyContext, DatasetError> {
    read_context(open(path)?, &file_label(path))
}

pub fn read_context<R: Read>(reader: R, file: &str) -> Result<CompanyContext, DatasetError> {
    let mut rows: Vec<(u64, CompanyContext)> = read_records(reader, file, CONTEXT_HEADER, CONTEXT_OPTIONAL)?;
    if rows.len() != 1 {
        return Err(DatasetError::Context(format!(
            "{file}: expected exactly one row, found {}",
            rows.len()
        )));
    }
    let (line, ctx) = rows.remove(0);
    ctx.validate().map_err(|message| DatasetError::Validation {
        file: file.to_string(),
        line,
        message,
    })?;
    Ok(ctx)
}

/// Joins the two disclosure tables by code and attaches Link/Contribution.
pub fn assemble_activities(
    capex: &SourceTable,
    turnover: &SourceTable,
    attrs: &AttributeTable,
    join: JoinMode,
) -> Result<Vec<Activity>, DatasetError> {
    for table in [capex, turnover] {
        let mut seen = HashSet::new();
        for row in &table.rows {
            if !seen.insert(&row.code) {
                return Err(DatasetError::DuplicateCode {
                    file: table.kind.to_string(),
                    code: row.code.to_string(),
                });
            }
        }
    }
    let capex_by_code: HashMap<_, _> = capex.rows.iter().map(|r| (&r.code, r)).collect();
    let turnover_by_code: HashMap<_, _> = turnover.rows.iter().map(|r| (&r.code, r)).collect();

    let mut codes: Vec<&ActivityCode> = Vec::new();
    match join {
        JoinMode::Inner => codes.extend(
            capex
                .rows
                .iter()
                .map(|r| &r.code)
                .filter(|c| turnover_by_code.contains_key(c)),
        ),
        JoinMode::CapexOnly => codes.extend(capex.rows.iter().map(|r| &r.code)),
        JoinMode::TurnoverOnly => codes.extend(turnover.rows.iter().map(|r| &r.code)),
        JoinMode::Outer => {
            codes.extend(capex.rows.iter().map(|r| &r.code));
            codes.extend(
                turnover
                    .rows
                    .iter()
                    .map(|r| &r.code)
                    .filter(|c| !capex_by_code.contains_key(c)),
            );
        }
    }

    let use_capex = join != JoinMode::TurnoverOnly;
    let use_turnover = join != JoinMode::CapexOnly;
    codes
        .into_iter()
        .map(|code| {
            let attr = attrs
                .get(code)
                .ok_or_else(|| DatasetError::MissingAttribute(code.to_string()))?;
            let to_err = |e: ScoreError| DatasetError::Conflict(format!("{code}: {e}"));
            let mut activity = Activity::new(code.clone(), attr.name.clone(), attr.link, attr.contribution);
            if use_capex {
                if let Some(r) = capex_by_code.get(code) {
                    activity = activity.with_capex(r.amount_musd).map_err(to_err)?;
                }
            }
            if use_turnover {
                if let Some(r) = turnover_by_code.get(code) {
                    activity = activity.with_turnover(r.amount_musd).map_err(to_err)?;
                }
            }
            Ok(activity)
        })
        .collect()
}

/// The four files of one company-period dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub capex: SourceTable,
    pub turnover: SourceTable,
    pub attributes: AttributeTable,
    pub context: CompanyContext,
}

const BUNDLED_CAPEX: &str = include_str!("../fixtures/totalenergies-2022/capex.csv");
const BUNDLED_TURNOVER: &str = include_str!("../fixtures/totalenergies-2022/turnover.csv");
const BUNDLED_ATTRIBUTES: &str = include_str!("../fixtures/totalenergies-2022/attributes.csv");
const BUNDLED_CONTEXT: &str = include_str!("../fixtures/totalenergies-2022/context.csv");

impl Dataset {
    /// Loads `capex.csv`, `turnover.csv`, `attributes.csv` and `context.csv`
    /// from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, DatasetError> {
        Ok(Dataset {
            capex: load_source_table(&dir.join("capex.csv"), SourceKind::Capex)?,
            turnover: load_source_table(&dir.join("turnover.csv"), SourceKind::Turnover)?,
            attributes: load_attributes(&dir.join("attributes.csv"))?,
            context: load_context(&dir.join("context.csv"))?,
        })
    }

    /// TotalEnergies 2022 taxonomy-aligned CapEx and Turnover, compiled in.
    pub fn bundled() -> Self {
        let load = || -> Result<Dataset, DatasetError> {
            Ok(Dataset {
                capex: read_source_table(BUNDLED_CAPEX.as_bytes(), SourceKind::Capex, "capex.csv")?,
                turnover: read_source_table(BUNDLED_TURNOVER.as_bytes(), SourceKind::Turnover, "turnover.csv")?,
                attributes: read_attributes(BUNDLED_ATTRIBUTES.as_bytes(), "attributes.csv")?,
                context: read_context(BUNDLED_CONTEXT.as_bytes(), "context.csv")?,
            })
        };
        load().expect("bundled fixture is valid")
    }

    pub fn activities(&self, join: JoinMode) -> Result<Vec<Activity>, DatasetError> {
        assemble_activities(&self.capex, &self.turnover, &self.attributes, join)
    }

    pub fn table(&self, kind: SourceKind) -> &SourceTable {
        match kind {
            SourceKind::Capex => &self.capex,
            SourceKind::Turnover => &self.turnover,
        }
    }
}

/// Bundled fixture files as `(file name, contents)`, for writing a copy to disk.
pub fn bundled_files() -> [(&'static str, &'static str); 4] {
    [
        ("capex.csv", BUNDLED_CAPEX),
        ("turnover.csv", BUNDLED_TURNOVER),
        ("attributes.csv", BUNDLED_ATTRIBUTES),
        ("context.csv", BUNDLED_CONTEXT),
    ]
}
