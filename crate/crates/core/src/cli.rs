//! Command-line front end: argument parsing, run configuration and the four
//! subcommands. Each command returns its report as a string so it can be
//! tested without spawning a process.

use std::collections::HashSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::aggregation::{group_by_level, group_merged, AggregationError, GroupBy};
use crate::dataset::{Dataset, DatasetError, JoinMode};
use crate::mcdm::{score_run, Criterion, CriterionId, Direction, ScoreError, WeightVector};
use crate::report::{self, Names, OutputFormat};
use crate::reproduce::{reproduce, ReproduceError};
use crate::sensitivity::{rank_stability, sweep_weights, Perturbation, SensitivityError};

pub const DATA_DIR_ENV: &str = "CROSSWASH_DATA_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid input files. Exit status 2.
    #[error("{0}")]
    Input(String),
    /// A golden comparison failed. Exit status 1.
    #[error("{message}")]
    Mismatch { report: String, message: String },
    /// Anything else. Exit status 1.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Mismatch { .. } | CliError::Internal(_) => 1,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AggregationError> for CliError {
    fn from(e: AggregationError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SensitivityError> for CliError {
    fn from(e: SensitivityError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ReproduceError> for CliError {
    fn from(e: ReproduceError) -> Self {
        match e {
            ReproduceError::Golden { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "crosswash",
    version,
    about = "Score taxonomy-aligned activities and the implied ESG rating deterioration"
)]
pub struct Cli {
    /// Directory with capex.csv, turnover.csv, attributes.csv and context.csv.
    /// Defaults to the bundled TotalEnergies 2022 data.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,

    /// Report format: markdown, csv or json-lines.
    #[arg(long, global = true, default_value = "markdown")]
    pub format: OutputFormat,

    /// Use the disclosure tables' column names and layout in aggregate reports.
    #[arg(long, global = true)]
    pub paper_compat: bool,

    /// Divide weights by their sum before scoring.
    #[arg(long, global = true)]
    pub renormalize_weights: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score activities and report the average and deterioration.
    Score(ScoringArgs),
    /// CapEx and Turnover grouped by Link or Contribution level.
    Aggregate(AggregateArgs),
    /// Re-score under perturbed weights and report rank stability.
    Sweep(SweepArgs),
    /// Rebuild the published tables from the data and compare with golden copies.
    ReproducePaper,
}

#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    /// Comma-separated criteria: link, contribution, capex, turnover.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<CriterionId>,

    /// Comma-separated weights, one per criterion.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Vec<f64>,

    /// CSV with header `criterion,weight,direction`.
    #[arg(long, conflicts_with = "weights")]
    pub weights_file: Option<PathBuf>,

    /// inner, capex-only, turnover-only or outer.
    #[arg(long, default_value = "inner")]
    pub join: JoinMode,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// link or contribution.
    #[arg(long, default_value = "link")]
    pub by: GroupBy,

    /// full (every disclosed activity) or merged (activities in both tables).
    #[arg(long, default_value = "full")]
    pub scope: ScopeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScopeArg {
    Full,
    Merged,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,

    /// Weight perturbation step.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub step: f64,

    /// Number of steps either side of each baseline weight.
    #[arg(long, default_value_t = 1)]
    pub radius: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Bundled,
    Dir(PathBuf),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset, CliError> {
        match self {
            DataSource::Bundled => Ok(Dataset::bundled()),
            DataSource::Dir(dir) => {
                if !dir.is_dir() {
                    return Err(CliError::Input(format!(
                        "data directory {} does not exist",
                        dir.display()
                    )));
                }
                Ok(Dataset::load_dir(dir)?)
            }
        }
    }
}

/// Everything a command needs, resolved from flags and files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    pub criteria: Vec<Criterion>,
    pub weights: WeightVector,
    pub join: JoinMode,
    pub format: OutputFormat,
    pub paper_compat: bool,
    pub renormalize_weights: bool,
}

impl RunConfig {
    /// The default run: all four criteria with CapEx 0.3, Turnover 0.2,
    /// Link 0.3, Contribution 0.2 over the bundled data.
    pub fn bundled_default() -> Self {
        let (criteria, weights) = crate::reproduce::financial_run();
        RunConfig {
            data: DataSource::Bundled,
            criteria,
            weights,
            join: JoinMode::Inner,
            format: OutputFormat::Markdown,
            paper_compat: false,
            renormalize_weights: false,
        }
    }

    pub fn effective_weights(&self) -> WeightVector {
        if self.renormalize_weights {
            self.weights.renormalized()
        } else {
            self.weights.clone()
        }
    }
}

#[derive(Debug, Deserialize)]
struct WeightRecord {
    criterion: String,
    weight: f64,
    #[serde(default)]
    direction: String,
}

/// Reads a `criterion,weight,direction` file into criteria and weights.
pub fn read_weights_file(path: &Path) -> Result<(Vec<Criterion>, WeightVector), CliError> {
    let label = path.display();
    let file = File::open(path).map_err(|e| CliError::Input(format!("{label}: {e}")))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{label}: {e}")))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != ["criterion", "weight", "direction"] && got != ["criterion", "weight"] {
        return Err(CliError::Input(format!(
            "{label}: line 1: header {:?} does not match criterion,weight,direction",
            got.join(",")
        )));
    }
    let mut criteria = Vec::new();
    let mut entries = Vec::new();
    for (i, rec) in rdr.deserialize::<WeightRecord>().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::Input(format!("{label}: line {line}: {e}")))?;
        let id: CriterionId = rec.criterion.parse().unwrap_or_else(|e| match e {});
        let direction: Direction = rec
            .direction
            .parse()
            .map_err(|e| CliError::Input(format!("{label}: line {line}: {e}")))?;
        criteria.push(Criterion {
            id: id.clone(),
            direction,
        });
        entries.push((id, rec.weight));
    }
    if entries.is_empty() {
        return Err(CliError::Input(format!("{label}: no weights")));
    }
    let weights = WeightVector::new(entries).map_err(|e| CliError::Input(format!("{label}: {e}")))?;
    Ok((criteria, weights))
}

fn resolve_scoring(args: &ScoringArgs) -> Result<(Vec<Criterion>, WeightVector), CliError> {
    if let Some(path) = &args.weights_file {
        let (criteria, weights) = read_weights_file(path)?;
        if !args.criteria.is_empty() {
            let want: HashSet<_> = args.criteria.iter().collect();
            let got: HashSet<_> = criteria.iter().map(|c| &c.id).collect();
            if want != got || args.criteria.len() != criteria.len() {
                return Err(CliError::Input(format!(
                    "--criteria does not match the criteria in {}",
                    path.display()
                )));
            }
        }
        return Ok((criteria, weights));
    }
    let default = crate::reproduce::financial_run();
    let ids: Vec<CriterionId> = if args.criteria.is_empty() {
        if args.weights.is_empty() {
            return Ok(default);
        }
        default.0.iter().map(|c| c.id.clone()).collect()
    } else {
        args.criteria.clone()
    };
    if args.weights.len() != ids.len() {
        return Err(CliError::Input(format!(
            "{} criteria but {} weights; pass one weight per criterion with --weights",
            ids.len(),
            args.weights.len()
        )));
    }
    let weights = WeightVector::new(ids.iter().cloned().zip(args.weights.iter().copied()).collect())?;
    let criteria = ids.into_iter().map(Criterion::benefit).collect();
    Ok((criteria, weights))
}

impl Cli {
    fn data_source(&self) -> DataSource {
        match &self.data_dir {
            Some(dir) => DataSource::Dir(dir.clone()),
            None => DataSource::Bundled,
        }
    }

    fn config(&self, scoring: Option<&ScoringArgs>) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::bundled_default();
        config.data = self.data_source();
        config.format = self.format;
        config.paper_compat = self.paper_compat;
        config.renormalize_weights = self.renormalize_weights;
        if let Some(args) = scoring {
            let (criteria, weights) = resolve_scoring(args)?;
            config.criteria = criteria;
            config.weights = weights;
            config.join = args.join;
        }
        Ok(config)
    }

    /// Runs the selected subcommand and returns its report.
    pub fn run(&self) -> Result<String, CliError> {
        match &self.command {
            Command::Score(args) => cmd_score(&self.config(Some(args))?),
            Command::Aggregate(args) => cmd_aggregate(&self.config(None)?, args.by, args.scope),
            Command::Sweep(args) => cmd_sweep(
                &self.config(Some(&args.scoring))?,
                Perturbation {
                    step: args.step,
                    radius: args.radius,
                },
            ),
            Command::ReproducePaper => cmd_reproduce_paper(&self.data_source()),
        }
    }
}

fn names(dataset: &Dataset) -> Names {
    dataset
        .attributes
        .rows
        .iter()
        .map(|r| (r.code.clone(), r.name.clone()))
        .collect()
}

pub fn cmd_score(config: &RunConfig) -> Result<String, CliError> {
    let dataset = config.data.load()?;
    let activities = dataset.activities(config.join)?;
    let table = score_run(&activities, &config.criteria, &config.effective_weights())?;
    Ok(report::render_score_table(&table, &names(&dataset), config.format))
}

pub fn cmd_aggregate(config: &RunConfig, by: GroupBy, scope: ScopeArg) -> Result<String, CliError> {
    let dataset = config.data.load()?;
    let agg = match scope {
        ScopeArg::Full => group_by_level(&dataset.activities(JoinMode::Outer)?, by, &dataset.context)?,
        ScopeArg::Merged => group_merged(&dataset.activities(JoinMode::Inner)?, by, &dataset.context)?,
    };
    Ok(report::render_aggregate(&agg, config.format, config.paper_compat))
}

pub fn cmd_sweep(config: &RunConfig, perturbation: Perturbation) -> Result<String, CliError> {
    let dataset = config.data.load()?;
    let activities = dataset.activities(config.join)?;
    let sweep = sweep_weights(&activities, &config.criteria, &config.effective_weights(), perturbation)?;
    let stability = rank_stability(&sweep);
    Ok(report::render_sweep(
        &sweep,
        &stability,
        &names(&dataset),
        config.format,
    ))
}

/// Rebuilds the published tables and compares them with the golden copies.
/// Fails with [`CliError::Mismatch`] naming the first table that differs.
pub fn cmd_reproduce_paper(data: &DataSource) -> Result<String, CliError> {
    let dataset = data.load()?;
    let outcome = reproduce(&dataset)?;
    let summary = outcome.summary();
    match outcome.first_failure() {
        None => Ok(summary),
        Some(first) => {
            let all: Vec<&str> = outcome.failures().map(|c| c.name).collect();
            Err(CliError::Mismatch {
                report: summary,
                message: format!(
                    "{} does not match the published values (mismatching: {})",
                    first.name,
                    all.join(", ")
                ),
            })
        }
    }
}
