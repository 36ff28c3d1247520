//! Re-estimates a model within each level of a stratum factor and attaches
//! 95% confidence intervals. Strata that cannot support the fit (too few
//! rows, rank failures, degenerate outcomes) are skipped with the reason
//! recorded, never silently dropped.

use super::{
    frame::{AnalysisFrame, Factor},
    glm::glm_irls,
    ols::ols_fe,
    EconError, Family, FitResult, ModelSpec,
};

#[derive(Debug, Clone)]
pub struct TermCi {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub lower: f64,
    pub higher: f64,
}

#[derive(Debug)]
pub enum StratumFit {
    Fitted {
        stratum: String,
        n_obs: usize,
        fit: FitResult,
        cis: Vec<TermCi>,
    },
    Skipped {
        stratum: String,
        n_obs: usize,
        reason: String,
    },
}

impl StratumFit {
    pub fn stratum(&self) -> &str {
        match self {
            StratumFit::Fitted { stratum, .. } | StratumFit::Skipped { stratum, .. } => stratum,
        }
    }
}

/// Fits `spec` separately per stratum level, in level order.
pub fn stratified_estimate(
    frame: &AnalysisFrame,
    stratum: &Factor,
    spec: &ModelSpec,
) -> Result<Vec<StratumFit>, EconError> {
    frame.validate()?;
    if stratum.len() != frame.n() {
        return Err(EconError::LengthMismatch {
            column: stratum.name.clone(),
            got: stratum.len(),
            expected: frame.n(),
        });
    }

    let mut results = Vec::with_capacity(stratum.n_levels());
    for level in 0..stratum.n_levels() {
        let rows: Vec<usize> = (0..frame.n())
            .filter(|&i| stratum.codes[i] == level)
            .collect();
        let name = stratum.levels[level].clone();
        let sub = frame.subset(&rows);
        // a fit needs strictly more rows than parameters to say anything
        let k_floor = sub.regressors.len() + 2;
        if rows.len() <= k_floor {
            results.push(StratumFit::Skipped {
                stratum: name,
                n_obs: rows.len(),
                reason: format!("{} rows cannot support {k_floor}+ parameters", rows.len()),
            });
            continue;
        }
        let fitted = match spec.family {
            Family::Ols | Family::Lpm => ols_fe(&sub, spec),
            Family::Logistic | Family::Poisson => glm_irls(&sub, spec),
        };
        match fitted {
            Ok(fit) => {
                let cis = confidence_intervals(&fit);
                results.push(StratumFit::Fitted {
                    stratum: name,
                    n_obs: rows.len(),
                    fit,
                    cis,
                });
            }
            Err(e) => results.push(StratumFit::Skipped {
                stratum: name,
                n_obs: rows.len(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(results)
}

/// 95% CI as estimate +/- 1.96 * SE, matching the normal-approximation
/// intervals used throughout the reporting layer.
pub fn confidence_intervals(fit: &FitResult) -> Vec<TermCi> {
    fit.terms
        .iter()
        .enumerate()
        .map(|(i, term)| {
            let estimate = fit.coefficients[i];
            let se = fit.vcov[(i, i)].max(0.0).sqrt();
            TermCi {
                term: term.clone(),
                estimate,
                se,
                lower: estimate - 1.96 * se,
                higher: estimate + 1.96 * se,
            }
        })
        .collect()
}
