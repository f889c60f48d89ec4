//! Loading happiness-report style CSV files into a [`Dataset`].
//!
//! Input is UTF-8, comma-delimited, with a header row. An empty cell or the
//! literal `NA` is missing. Rows with a missing or unparseable value in any
//! configured column are dropped (listwise deletion) and counted.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CovariateRole, Dataset, DatasetError};

/// Default binarization cut-off: a score of 6 or more is a success.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 6.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("invalid ingest configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot parse ingest configuration")]
    ConfigSyntax(#[from] toml::de::Error),
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("covariate `{0}` is constant after dropping rows and cannot be standardized")]
    ConstantCovariate(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Listwise deletion.
    #[default]
    DropRow,
}

/// Which columns to read and how to turn them into a dataset.
///
/// As TOML:
///
/// ```toml
/// response_column = "Life Ladder"
/// covariate_columns = ["Log GDP per capita", "Perceptions of corruption"]
/// threshold = 6.0          # optional, default 6
/// missing_policy = "drop-row"   # optional, the only policy
/// standardize = false      # optional
///
/// [role_map]
/// "Log GDP per capita" = "strength"
/// "Perceptions of corruption" = "stress"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub response_column: String,
    pub covariate_columns: Vec<String>,
    #[serde(default)]
    pub role_map: BTreeMap<String, CovariateRole>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default)]
    pub standardize: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_SCORE_THRESHOLD
}

impl IngestConfig {
    pub fn new(response_column: impl Into<String>, covariate_columns: Vec<String>) -> Self {
        Self {
            response_column: response_column.into(),
            covariate_columns,
            role_map: BTreeMap::new(),
            threshold: DEFAULT_SCORE_THRESHOLD,
            missing_policy: MissingPolicy::DropRow,
            standardize: false,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, IngestError> {
        Ok(toml::from_str(s)?)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Fills roles for covariates not in `role_map` from the happiness-report
    /// classification ([`known_role`]). Columns it does not know stay unset.
    pub fn fill_known_roles(&mut self) {
        for col in &self.covariate_columns {
            if !self.role_map.contains_key(col) {
                if let Some(role) = known_role(col) {
                    self.role_map.insert(col.clone(), role);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |msg: String| Err(IngestError::InvalidConfig(msg));
        if self.covariate_columns.contains(&self.response_column) {
            return invalid(format!("response column `{}` is also a covariate", self.response_column));
        }
        if !self.threshold.is_finite() {
            return invalid("threshold must be finite".into());
        }
        for (i, col) in self.covariate_columns.iter().enumerate() {
            if self.covariate_columns[..i].contains(col) {
                return invalid(format!("covariate `{col}` listed twice"));
            }
            if !self.role_map.contains_key(col) {
                return invalid(format!("no strength/stress role for covariate `{col}`"));
            }
        }
        Ok(())
    }

    pub fn roles(&self) -> Vec<CovariateRole> {
        self.covariate_columns.iter().map(|c| self.role_map[c]).collect()
    }
}

/// Strength/stress classification of the happiness-report covariates.
/// Matching ignores case and surrounding whitespace.
pub fn known_role(column: &str) -> Option<CovariateRole> {
    use CovariateRole::*;
    const KNOWN: [(&str, CovariateRole); 11] = [
        ("log gdp per capita", Strength),
        ("social support", Strength),
        ("healthy life expectancy at birth", Strength),
        ("freedom to make life choices", Strength),
        ("generosity", Strength),
        ("perceptions of corruption", Stress),
        ("positive affect", Strength),
        ("negative affect", Stress),
        ("confidence in national government", Strength),
        ("democratic quality", Strength),
        ("delivery quality", Strength),
    ];
    let key = column.trim().to_ascii_lowercase();
    KNOWN.iter().find(|(name, _)| *name == key).map(|&(_, role)| role)
}

/// A dataset plus the bookkeeping of how it was read.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub dataset: Dataset,
    pub total_rows: usize,
    pub dropped_rows: usize,
}

/// `1` where `score ≥ threshold`, else `0`.
pub fn binarize_response(scores: &[f64], threshold: f64) -> Result<Vec<u8>, IngestError> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if s.is_finite() {
                Ok(u8::from(s >= threshold))
            } else {
                Err(IngestError::NonFiniteScore(i))
            }
        })
        .collect()
}

pub fn load_csv(path: &Path, config: &IngestConfig) -> Result<Ingested, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, config)
}

/// Same as [`load_csv`] for any reader.
pub fn read_csv<R: Read>(reader: R, config: &IngestConfig) -> Result<Ingested, IngestError> {
    config.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name.trim())
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let response_idx = find(&config.response_column)?;
    let covariate_idx = config
        .covariate_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>, _>>()?;

    let k = covariate_idx.len();
    let mut scores = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut total_rows = 0;
    for record in rdr.records() {
        let record = record?;
        total_rows += 1;
        let cell = |i: usize| parse_cell(record.get(i));
        let Some(score) = cell(response_idx) else { continue };
        let row: Option<Vec<f64>> = covariate_idx.iter().map(|&i| cell(i)).collect();
        let Some(row) = row else { continue };
        scores.push(score);
        values.extend(row);
    }

    let n = scores.len();
    let mut covariates = DMatrix::from_row_slice(n, k, &values);
    if config.standardize {
        standardize_columns(&mut covariates, &config.covariate_columns)?;
    }
    let response = binarize_response(&scores, config.threshold)?;
    let dataset = Dataset::from_covariates(response, &covariates, config.covariate_columns.clone(), config.roles())?;
    Ok(Ingested {
        dataset,
        total_rows,
        dropped_rows: total_rows - n,
    })
}

fn parse_cell(cell: Option<&str>) -> Option<f64> {
    let s = cell?.trim();
    if s.is_empty() || s == "NA" {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Z-scores each column with the sample standard deviation.
fn standardize_columns(m: &mut DMatrix<f64>, names: &[String]) -> Result<(), IngestError> {
    let n = m.nrows();
    if n < 2 {
        return Ok(());
    }
    for (j, name) in names.iter().enumerate() {
        let mut col = m.column_mut(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(IngestError::ConstantCovariate(name.clone()));
        }
        col.apply(|v| *v = (*v - mean) / sd);
    }
    Ok(())
}
