//! Seeded synthetic binary-regression data.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{CovariateRole, Dataset, DatasetError};
use crate::link::LinkSpec;

/// Standard-normal covariates and Bernoulli responses drawn from
/// `P(U = 1) = F(z′β)` for the given link.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    pub n: usize,
    /// `β`, intercept first; the covariate count is `coefficients.len() − 1`.
    pub coefficients: Vec<f64>,
    pub link: LinkSpec,
    pub seed: u64,
}

impl SyntheticModel {
    pub fn new(n: usize, coefficients: Vec<f64>, link: LinkSpec, seed: u64) -> Self {
        Self {
            n,
            coefficients,
            link,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Draws covariates row by row, then one uniform per row for the response.
    pub fn generate(&self) -> Result<Dataset, DatasetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let k = self.k();
        let draws: Vec<f64> = (0..self.n * k).map(|_| rng.sample(StandardNormal)).collect();
        let covariates = DMatrix::from_row_slice(self.n, k, &draws);
        let response = (0..self.n)
            .map(|i| {
                let eta = self.coefficients[0]
                    + (0..k).map(|j| covariates[(i, j)] * self.coefficients[j + 1]).sum::<f64>();
                let p = self.link.cdf_unchecked(eta);
                u8::from(rng.random::<f64>() < p)
            })
            .collect();
        let names = (1..=k).map(|j| format!("x{j}")).collect();
        let roles = (0..k)
            .map(|j| if j % 2 == 0 { CovariateRole::Strength } else { CovariateRole::Stress })
            .collect();
        Dataset::from_covariates(response, &covariates, names, roles)
    }
}

/// Writes `data` as CSV with a `y` column followed by the covariates.
/// Floats use the shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    let mut header = vec!["y".to_string()];
    header.extend(data.covariate_names().iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.n() {
        let mut row = vec![data.response()[i].to_string()];
        row.extend((1..=data.k()).map(|j| format!("{:?}", data.design()[(i, j)])));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
