//! Maximum-likelihood fitting of `P(U = 1) = F(z′β)` by iteratively
//! re-weighted least squares (Fisher scoring).
//!
//! Each iteration forms, at the current linear predictor `η` and clamped
//! fitted probabilities `μ`,
//!
//! ```text
//! w = F′(η)² / (μ(1 − μ))          working weight
//! ζ = η + (y − μ) / F′(η)          working response
//! ```
//!
//! and solves the weighted least-squares problem `min ‖√w ⊙ (Xβ − ζ)‖²`
//! through a QR factorization of the row-scaled design. The scaled response
//! is assembled as `√w·η + (y − μ)/√(μ(1 − μ))`, which is algebraically the
//! same thing but never divides by a density that may have underflowed.
//!
//! A step that increases the deviance is halved up to
//! [`FitConfig::max_step_halvings`] times. Iteration stops when the relative
//! deviance change `|Δdev| / (|dev| + 1)` drops to [`FitConfig::tolerance`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::link::LinkSpec;

/// Relative threshold on the diagonal of `R` below which the weighted design
/// is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Relative deviance change at which the fit is declared converged.
    pub tolerance: f64,
    /// Fitted probabilities are clamped into `[mu_floor, 1 − mu_floor]`.
    pub mu_floor: f64,
    pub max_step_halvings: usize,
    /// Sup-norm bound on `β`; exceeding it is reported as separation.
    pub divergence_bound: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-12,
            mu_floor: 1e-10,
            max_step_halvings: 10,
            divergence_bound: 1e3,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let ok = self.max_iterations > 0
            && self.tolerance > 0.0
            && self.mu_floor > 0.0
            && self.mu_floor < 0.5
            && self.max_step_halvings > 0
            && self.divergence_bound > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FitError::InvalidConfig(*self))
        }
    }
}

/// Why a fit was judged to have no finite maximum-likelihood estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationEvidence {
    /// `‖β‖∞` exceeded the divergence bound.
    CoefficientBound,
    /// Every fitted probability sits within `mu_floor` of its label.
    PerfectFit,
    /// The current linear predictor strictly separates the two classes, so
    /// the likelihood keeps increasing along a ray and no maximizer exists.
    SeparatingPredictor,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("(quasi-)complete separation detected at iteration {iteration} ({evidence:?}); the MLE does not exist")]
    Separation {
        iteration: usize,
        evidence: SeparationEvidence,
    },
    #[error("design loses full column rank (column {column})")]
    RankDeficient { column: usize },
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite design entry at row {row}")]
    NonFiniteInput { row: usize },
    #[error("invalid fit configuration {0:?}")]
    InvalidConfig(FitConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub link: LinkSpec,
    /// `β`, intercept first.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// `−2 × log_likelihood`.
    pub deviance: f64,
    /// Deviance at the start point and after every accepted iteration.
    pub deviance_history: Vec<f64>,
    /// Set when the primary start failed to converge and the perturbed
    /// restart was used.
    pub restarted: bool,
    pub mu_floor: f64,
}

/// Fits the binary GLM with the given link.
pub fn fit_irls(data: &Dataset, link: LinkSpec, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    let design = data.design();
    let y: Vec<f64> = data.response().iter().map(|&v| f64::from(v)).collect();

    // The unweighted design must already have full column rank.
    solve_weighted(design, &DVector::from_element(data.n(), 1.0), &DVector::zeros(data.n()))?;

    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mut start = vec![0.0; design.ncols()];
    start[0] = link
        .quantile(ybar)
        .expect("both classes present, so the mean lies in (0, 1)");

    let primary = run_irls(design, &y, link, config, start)?;
    if primary.converged {
        return Ok(primary);
    }

    // Flat or non-concave likelihoods (mostly cauchit) can stall from the
    // moment start; retry once from a small perturbation of zero.
    let perturbed = (0..design.ncols())
        .map(|j| if j % 2 == 0 { 1e-3 } else { -1e-3 })
        .collect();
    match run_irls(design, &y, link, config, perturbed) {
        Ok(mut retry) if retry.converged || retry.log_likelihood > primary.log_likelihood => {
            retry.restarted = true;
            Ok(retry)
        }
        _ => Ok(primary),
    }
}

fn run_irls(
    design: &DMatrix<f64>,
    y: &[f64],
    link: LinkSpec,
    config: &FitConfig,
    start: Vec<f64>,
) -> Result<FitResult, FitError> {
    let mut beta = DVector::from_vec(start);
    let mut state = State::evaluate(design, y, link, config.mu_floor, &beta);
    let mut history = vec![state.deviance];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;

        let n = y.len();
        let mut sqrt_w = DVector::zeros(n);
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            let dens = link.density_unchecked(state.eta[i]);
            let var = state.mu[i] * state.mu_c[i];
            let sd = var.sqrt();
            sqrt_w[i] = dens / sd;
            rhs[i] = sqrt_w[i] * state.eta[i] + (y[i] - state.mu[i]) / sd;
        }
        let candidate = solve_weighted(design, &sqrt_w, &rhs)?;

        let direction = &candidate - &beta;
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..=config.max_step_halvings {
            let trial = &beta + &direction * scale;
            let trial_state = State::evaluate(design, y, link, config.mu_floor, &trial);
            if trial_state.deviance <= state.deviance {
                accepted = Some((trial, trial_state));
                break;
            }
            scale *= 0.5;
        }

        let Some((next_beta, next_state)) = accepted else {
            // No improving step along the scoring direction. If the full step
            // changes the deviance by less than the tolerance we are at the
            // optimum to working precision; otherwise report a stall.
            let full = State::evaluate(design, y, link, config.mu_floor, &candidate);
            converged = relative_change(full.deviance, state.deviance) <= config.tolerance;
            break;
        };

        let change = relative_change(next_state.deviance, state.deviance);
        beta = next_beta;
        state = next_state;
        history.push(state.deviance);

        if let Some(evidence) = separation_evidence(&beta, &state, y, link, config) {
            return Err(FitError::Separation {
                iteration: iterations,
                evidence,
            });
        }
        if change <= config.tolerance {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        link,
        coefficients: beta.iter().copied().collect(),
        converged,
        iterations,
        log_likelihood: state.log_likelihood,
        deviance: state.deviance,
        deviance_history: history,
        restarted: false,
        mu_floor: config.mu_floor,
    })
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / (old.abs() + 1.0)
}

fn separation_evidence(
    beta: &DVector<f64>,
    state: &State,
    y: &[f64],
    link: LinkSpec,
    config: &FitConfig,
) -> Option<SeparationEvidence> {
    if beta.amax() > config.divergence_bound {
        return Some(SeparationEvidence::CoefficientBound);
    }
    let perfect = state.eta.iter().zip(y).all(|(&eta, &yi)| {
        let miss = if yi == 1.0 {
            link.survival_unchecked(eta)
        } else {
            link.cdf_unchecked(eta)
        };
        miss <= config.mu_floor
    });
    if perfect {
        return Some(SeparationEvidence::PerfectFit);
    }
    let min_pos = state
        .eta
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi == 1.0)
        .map(|(&e, _)| e)
        .fold(f64::INFINITY, f64::min);
    let max_neg = state
        .eta
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi == 0.0)
        .map(|(&e, _)| e)
        .fold(f64::NEG_INFINITY, f64::max);
    (min_pos > max_neg).then_some(SeparationEvidence::SeparatingPredictor)
}

/// Linear predictor, clamped fitted probabilities and likelihood at one `β`.
struct State {
    eta: Vec<f64>,
    mu: Vec<f64>,
    /// `1 − μ`, computed from the upper tail.
    mu_c: Vec<f64>,
    log_likelihood: f64,
    deviance: f64,
}

impl State {
    fn evaluate(design: &DMatrix<f64>, y: &[f64], link: LinkSpec, floor: f64, beta: &DVector<f64>) -> Self {
        let eta: Vec<f64> = (design * beta).iter().copied().collect();
        let (mu, mu_c): (Vec<f64>, Vec<f64>) = eta.iter().map(|&e| clamped_pair(link, e, floor)).unzip();
        let log_likelihood = bernoulli_log_likelihood(y, &mu, &mu_c);
        Self {
            eta,
            mu,
            mu_c,
            log_likelihood,
            deviance: -2.0 * log_likelihood,
        }
    }
}

fn clamped_pair(link: LinkSpec, eta: f64, floor: f64) -> (f64, f64) {
    let hi = 1.0 - floor;
    (
        link.cdf_unchecked(eta).clamp(floor, hi),
        link.survival_unchecked(eta).clamp(floor, hi),
    )
}

fn bernoulli_log_likelihood(y: &[f64], mu: &[f64], mu_c: &[f64]) -> f64 {
    y.iter()
        .zip(mu.iter().zip(mu_c))
        .map(|(&yi, (&m, &mc))| yi * m.ln() + (1.0 - yi) * mc.ln())
        .sum()
}

/// Least squares for `diag(sqrt_w)·X·β ≈ rhs` via Householder QR.
fn solve_weighted(design: &DMatrix<f64>, sqrt_w: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, FitError> {
    let mut scaled = design.clone();
    for (mut row, &w) in scaled.row_iter_mut().zip(sqrt_w.iter()) {
        row *= w;
    }
    let col_scale = scaled
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let qr = scaled.qr();
    let r = qr.r();
    for j in 0..r.ncols() {
        if !(r[(j, j)].abs() > RANK_TOLERANCE * col_scale) {
            return Err(FitError::RankDeficient { column: j });
        }
    }
    let qt_rhs = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qt_rhs)
        .ok_or(FitError::RankDeficient { column: r.ncols() - 1 })
}

/// `Σ yᵢ log μᵢ + (1 − yᵢ) log(1 − μᵢ)` with `μ = clamp(F(Xβ))`, using the
/// default `mu_floor`.
pub fn log_likelihood(beta: &[f64], data: &Dataset, link: LinkSpec) -> Result<f64, FitError> {
    log_likelihood_with_floor(beta, data, link, FitConfig::default().mu_floor)
}

pub fn log_likelihood_with_floor(beta: &[f64], data: &Dataset, link: LinkSpec, mu_floor: f64) -> Result<f64, FitError> {
    let design = data.design();
    if beta.len() != design.ncols() {
        return Err(FitError::DimensionMismatch {
            expected: design.ncols(),
            actual: beta.len(),
        });
    }
    let y: Vec<f64> = data.response().iter().map(|&v| f64::from(v)).collect();
    let state = State::evaluate(design, &y, link, mu_floor, &DVector::from_column_slice(beta));
    Ok(state.log_likelihood)
}

/// Clamped `F(Xβ)` for each row of `design`.
pub fn predict_probabilities(fit: &FitResult, design: &DMatrix<f64>) -> Result<Vec<f64>, FitError> {
    if design.ncols() != fit.coefficients.len() {
        return Err(FitError::DimensionMismatch {
            expected: fit.coefficients.len(),
            actual: design.ncols(),
        });
    }
    if let Some(row) = (0..design.nrows()).find(|&i| design.row(i).iter().any(|v| !v.is_finite())) {
        return Err(FitError::NonFiniteInput { row });
    }
    let beta = DVector::from_column_slice(&fit.coefficients);
    Ok((design * beta)
        .iter()
        .map(|&eta| clamped_pair(fit.link, eta, fit.mu_floor).0)
        .collect())
}
