//! Binary-response dataset with an intercept-first design matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether a covariate is thought to push towards success (strength) or
/// against it (stress). Reporting metadata only; the fitted model uses a
/// single linear predictor over all covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateRole {
    Strength,
    Stress,
}

impl fmt::Display for CovariateRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CovariateRole::Strength => "strength",
            CovariateRole::Stress => "stress",
        })
    }
}

impl FromStr for CovariateRole {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strength" => Ok(CovariateRole::Strength),
            "stress" => Ok(CovariateRole::Stress),
            other => Err(DatasetError::UnknownRole(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("response has {response} entries but design has {design} rows")]
    LengthMismatch { response: usize, design: usize },
    #[error("response entry {index} is {value}; expected 0 or 1")]
    NonBinaryResponse { index: usize, value: u8 },
    #[error("design entry ({row}, {col}) is not finite")]
    NonFiniteDesign { row: usize, col: usize },
    #[error("first design column must be the intercept (all ones)")]
    MissingIntercept,
    #[error("need at least k + 2 = {required} observations, got {actual}")]
    TooFewObservations { required: usize, actual: usize },
    #[error("single response class: every observation is {0}")]
    SingleClass(u8),
    #[error("{covariates} covariate columns but {names} names and {roles} roles")]
    MetadataMismatch {
        covariates: usize,
        names: usize,
        roles: usize,
    },
    #[error("unknown covariate role `{0}` (expected strength or stress)")]
    UnknownRole(String),
    #[error("row index {index} out of range for {n} observations")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Validated binary regression data.
///
/// Invariants: `n ≥ k + 2`, response in `{0, 1}` with both classes present,
/// finite design entries, first design column all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    response: Vec<u8>,
    design: DMatrix<f64>,
    covariate_names: Vec<String>,
    covariate_roles: Vec<CovariateRole>,
}

impl Dataset {
    /// Builds a dataset from a full design matrix whose first column is the intercept.
    pub fn new(
        response: Vec<u8>,
        design: DMatrix<f64>,
        covariate_names: Vec<String>,
        covariate_roles: Vec<CovariateRole>,
    ) -> Result<Self, DatasetError> {
        let n = response.len();
        if design.nrows() != n {
            return Err(DatasetError::LengthMismatch {
                response: n,
                design: design.nrows(),
            });
        }
        let k = design.ncols().saturating_sub(1);
        if design.ncols() == 0 {
            return Err(DatasetError::MissingIntercept);
        }
        if covariate_names.len() != k || covariate_roles.len() != k {
            return Err(DatasetError::MetadataMismatch {
                covariates: k,
                names: covariate_names.len(),
                roles: covariate_roles.len(),
            });
        }
        for (index, &value) in response.iter().enumerate() {
            if value > 1 {
                return Err(DatasetError::NonBinaryResponse { index, value });
            }
        }
        for col in 0..design.ncols() {
            for row in 0..n {
                let v = design[(row, col)];
                if !v.is_finite() {
                    return Err(DatasetError::NonFiniteDesign { row, col });
                }
                if col == 0 && v != 1.0 {
                    return Err(DatasetError::MissingIntercept);
                }
            }
        }
        if n < k + 2 {
            return Err(DatasetError::TooFewObservations {
                required: k + 2,
                actual: n,
            });
        }
        let positives = response.iter().filter(|&&y| y == 1).count();
        if positives == 0 {
            return Err(DatasetError::SingleClass(0));
        }
        if positives == n {
            return Err(DatasetError::SingleClass(1));
        }
        Ok(Self {
            response,
            design,
            covariate_names,
            covariate_roles,
        })
    }

    /// Builds a dataset from an `n × k` covariate matrix, prepending the intercept.
    pub fn from_covariates(
        response: Vec<u8>,
        covariates: &DMatrix<f64>,
        covariate_names: Vec<String>,
        covariate_roles: Vec<CovariateRole>,
    ) -> Result<Self, DatasetError> {
        let design = with_intercept(covariates);
        Self::new(response, design, covariate_names, covariate_roles)
    }

    /// Number of observations `n`.
    pub fn n(&self) -> usize {
        self.response.len()
    }

    /// Number of covariates `k` (excluding the intercept).
    pub fn k(&self) -> usize {
        self.design.ncols() - 1
    }

    pub fn response(&self) -> &[u8] {
        &self.response
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate_roles(&self) -> &[CovariateRole] {
        &self.covariate_roles
    }

    pub fn positives(&self) -> usize {
        self.response.iter().filter(|&&y| y == 1).count()
    }

    /// Observations at `indices`, re-validated as a dataset in their own right.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset, DatasetError> {
        let design = self.rows(indices)?;
        let response = indices.iter().map(|&i| self.response[i]).collect();
        Dataset::new(
            response,
            design,
            self.covariate_names.clone(),
            self.covariate_roles.clone(),
        )
    }

    /// Design rows at `indices`, without any validation of the result.
    pub fn rows(&self, indices: &[usize]) -> Result<DMatrix<f64>, DatasetError> {
        let n = self.n();
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(DatasetError::IndexOutOfRange { index, n });
        }
        Ok(self.design.select_rows(indices))
    }

    /// Labels at `indices`. Panics on out-of-range indices.
    pub fn labels(&self, indices: &[usize]) -> Vec<u8> {
        indices.iter().map(|&i| self.response[i]).collect()
    }
}

pub(crate) fn with_intercept(covariates: &DMatrix<f64>) -> DMatrix<f64> {
    let n = covariates.nrows();
    let k = covariates.ncols();
    DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { covariates[(i, j - 1)] })
}
