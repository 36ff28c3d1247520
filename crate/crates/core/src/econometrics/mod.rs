//! Estimation battery for the audit: fixed-effects OLS / linear probability
//! models, logistic and Poisson regression via IRLS, two-way cluster-robust
//! variance, Welch t-tests, summary statistics, and stratified re-estimation.
//!
//! Conventions shared by every estimator:
//! - coefficients are reported in `terms` order;
//! - `FitResult` keeps the design matrix, per-row score residuals, and the
//!   bread matrix so any variance estimator can be applied after the fit;
//! - `k_params` counts absorbed fixed-effect levels, so degrees-of-freedom
//!   corrections match the dummy-variable formulation.

mod frame;
mod glm;
mod ols;
mod stratified;
mod summary;
mod ttest;
mod vcov;

pub use frame::{AnalysisFrame, Factor};
pub use glm::{glm_irls, glm_irls_with, IrlsControl};
pub use ols::ols_fe;
pub use stratified::{stratified_estimate, StratumFit};
pub use summary::{summary_stats, SummaryRow};
pub use ttest::{welch_ttest, WelchTest};
pub use vcov::vcov_two_way_cluster;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EconError {
    #[error("column {column:?} has {got} rows, frame has {expected}")]
    LengthMismatch {
        column: String,
        got: usize,
        expected: usize,
    },
    #[error("column {column:?} contains a non-finite value at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("frame has no rows")]
    EmptyFrame,
    #[error("log transform requires strictly positive outcome; {column:?} is {value} at row {row}")]
    NonPositiveLog {
        column: String,
        row: usize,
        value: f64,
    },
    #[error("{family:?} requires a 0/1 outcome; found {value} at row {row}")]
    BinaryOutcomeRequired {
        family: Family,
        row: usize,
        value: f64,
    },
    #[error("Poisson requires a non-negative integer outcome; found {value} at row {row}")]
    CountOutcomeRequired { row: usize, value: f64 },
    #[error("design matrix is rank deficient; collinear columns: {columns:?}")]
    RankDeficient { columns: Vec<String> },
    #[error("cluster factor {name:?} has a single level; clustering is undefined")]
    SingleCluster { name: String },
    #[error("model spec requests two-way clustering but the frame lacks cluster factor {which}")]
    MissingCluster { which: &'static str },
    #[error("model spec requests fixed effects but the frame has no FE factor")]
    MissingFe,
    #[error("IRLS did not converge in {iterations} iterations (score norm {score_norm:.3e})")]
    NotConverged { iterations: usize, score_norm: f64 },
    #[error("complete separation detected; logistic MLE does not exist")]
    Separation,
    #[error("outcome is constant; {0}")]
    ConstantOutcome(&'static str),
    #[error("column {0:?} is empty")]
    EmptyColumn(String),
    #[error("group {which} needs at least 2 observations, found {n}")]
    GroupTooSmall { which: &'static str, n: usize },
    #[error("group {which} has zero variance; Welch t-test undefined")]
    ZeroVariance { which: &'static str },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Least squares on a real (possibly log-transformed) outcome.
    Ols,
    /// Least squares on a 0/1 outcome (linear probability model).
    Lpm,
    Logistic,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    NaturalLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcovSpec {
    TwoWayCluster,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub transform: Transform,
    pub include_fe: bool,
    pub vcov: VcovSpec,
}

impl ModelSpec {
    pub fn ols_fe_cluster(transform: Transform) -> Self {
        ModelSpec {
            family: Family::Ols,
            transform,
            include_fe: true,
            vcov: VcovSpec::TwoWayCluster,
        }
    }

    pub fn lpm_fe_cluster() -> Self {
        ModelSpec {
            family: Family::Lpm,
            transform: Transform::None,
            include_fe: true,
            vcov: VcovSpec::TwoWayCluster,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub score_norm: f64,
}

/// A fitted model. Reported coefficients cover the named terms only; absorbed
/// fixed effects contribute to `k_params` but are not listed (OLS) or appear
/// as explicit dummy terms (GLM).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub terms: Vec<String>,
    pub coefficients: DVector<f64>,
    pub vcov: DMatrix<f64>,
    pub n_obs: usize,
    /// Parameters consumed, including absorbed FE levels and the intercept.
    pub k_params: usize,
    pub family: Family,
    pub transform: Transform,
    pub r2: Option<f64>,
    pub adj_r2: Option<f64>,
    pub pseudo_r2: Option<f64>,
    pub convergence: Option<Convergence>,
    /// True when negative eigenvalues were truncated out of the vcov.
    pub vcov_repaired: bool,
    // sandwich ingredients, kept so variance estimators can run post-fit
    pub(crate) design: DMatrix<f64>,
    pub(crate) score_resid: DVector<f64>,
    pub(crate) bread: DMatrix<f64>,
}

impl FitResult {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.vcov[(i, i)].max(0.0).sqrt())
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.terms.len())
            .map(|i| self.vcov[(i, i)].max(0.0).sqrt())
            .collect()
    }
}

pub(crate) fn validate_indicator(name: &str, values: &[f64]) -> Result<(), EconError> {
    for (row, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(EconError::NonFinite {
                column: name.to_string(),
                row,
            });
        }
    }
    Ok(())
}
