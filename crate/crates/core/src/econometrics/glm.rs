//! Logistic and Poisson regression via iteratively reweighted least squares
//! with canonical links. Fixed effects enter as explicit dummy columns (first
//! level is the reference); convergence is declared on the score-equation
//! norm, with half-step damping whenever a full Newton step raises deviance.

use super::{
    frame::AnalysisFrame, vcov::vcov_two_way_cluster, Convergence, EconError, Family, FitResult,
    ModelSpec, Transform, VcovSpec,
};
use nalgebra::{DMatrix, DVector};

const MAX_HALVINGS: usize = 10;
/// |linear predictor| beyond this in a logistic fit means fitted
/// probabilities are within ~1e-13 of 0/1; treated as separation.
const ETA_SEPARATION: f64 = 30.0;

/// IRLS stopping rule: convergence when the score-equation norm drops below
/// `score_tol`, failure after `max_iter` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsControl {
    pub max_iter: usize,
    pub score_tol: f64,
}

impl Default for IrlsControl {
    fn default() -> Self {
        IrlsControl {
            max_iter: 50,
            score_tol: 1e-10,
        }
    }
}

pub fn glm_irls(frame: &AnalysisFrame, spec: &ModelSpec) -> Result<FitResult, EconError> {
    glm_irls_with(frame, spec, IrlsControl::default())
}

pub fn glm_irls_with(
    frame: &AnalysisFrame,
    spec: &ModelSpec,
    control: IrlsControl,
) -> Result<FitResult, EconError> {
    let family = match spec.family {
        Family::Logistic | Family::Poisson => spec.family,
        other => {
            return Err(EconError::InvalidSpec(format!(
                "glm_irls handles Logistic/Poisson, got {other:?}"
            )))
        }
    };
    if spec.transform != Transform::None {
        return Err(EconError::InvalidSpec(
            "GLM outcomes are modeled through the link, not transformed".into(),
        ));
    }
    frame.validate()?;
    let n = frame.n();
    let y = &frame.outcome;

    match family {
        Family::Logistic => {
            for (row, &v) in y.iter().enumerate() {
                if v != 0.0 && v != 1.0 {
                    return Err(EconError::BinaryOutcomeRequired {
                        family,
                        row,
                        value: v,
                    });
                }
            }
            let ones = y.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == n {
                return Err(EconError::ConstantOutcome(
                    "logistic MLE needs both outcome classes",
                ));
            }
        }
        Family::Poisson => {
            for (row, &v) in y.iter().enumerate() {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(EconError::CountOutcomeRequired { row, value: v });
                }
            }
            if y.iter().all(|&v| v == 0.0) {
                return Err(EconError::ConstantOutcome(
                    "Poisson MLE needs a positive outcome somewhere",
                ));
            }
        }
        _ => unreachable!(),
    }

    // design: intercept, regressors, FE dummies (reference = first level)
    let mut terms: Vec<String> = vec!["(Intercept)".into()];
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for (name, col) in &frame.regressors {
        terms.push(name.clone());
        cols.push(col.clone());
    }
    if spec.include_fe {
        let fe = frame.fe.as_ref().ok_or(EconError::MissingFe)?;
        for level in 1..fe.n_levels() {
            terms.push(format!("{}:{}", fe.name, fe.levels[level]));
            cols.push(
                fe.codes
                    .iter()
                    .map(|&c| if c == level { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
    }
    super::ols::check_rank(&terms, &cols)?;

    let k = cols.len();
    let x = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let yv = DVector::from_column_slice(y);
    let ybar = y.iter().sum::<f64>() / n as f64;

    let mut beta = DVector::<f64>::zeros(k);
    beta[0] = match family {
        Family::Logistic => (ybar / (1.0 - ybar)).ln(),
        Family::Poisson => ybar.ln(),
        _ => unreachable!(),
    };

    let mut eta = &x * &beta;
    let mut mu = inv_link(family, &eta);
    let mut dev = deviance(family, &yv, &mu);
    let mut converged = false;
    let mut iterations = 0;
    let mut score_norm = f64::INFINITY;

    for iter in 1..=control.max_iter {
        iterations = iter;
        let w: DVector<f64> = match family {
            Family::Logistic => mu.map(|m| (m * (1.0 - m)).max(1e-10)),
            Family::Poisson => mu.map(|m| m.max(1e-10)),
            _ => unreachable!(),
        };
        // working response z = eta + (y - mu)/w
        let z = &eta + (&yv - &mu).component_div(&w);

        // weighted normal equations
        let mut xtwx = DMatrix::<f64>::zeros(k, k);
        let mut xtwz = DVector::<f64>::zeros(k);
        for i in 0..n {
            let wi = w[i];
            let xi = x.row(i);
            for a in 0..k {
                xtwz[a] += wi * xi[a] * z[i];
                for b in a..k {
                    xtwx[(a, b)] += wi * xi[a] * xi[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }
        let chol = xtwx.cholesky().ok_or_else(|| EconError::RankDeficient {
            columns: terms.clone(),
        })?;
        let proposal = chol.solve(&xtwz);

        // damped step: halve toward the current beta while deviance worsens
        let mut candidate = proposal.clone();
        let mut cand_eta = &x * &candidate;
        let mut cand_mu = inv_link(family, &cand_eta);
        let mut cand_dev = deviance(family, &yv, &cand_mu);
        let mut halvings = 0;
        while cand_dev > dev + 1e-12 && halvings < MAX_HALVINGS {
            candidate = (&candidate + &beta) * 0.5;
            cand_eta = &x * &candidate;
            cand_mu = inv_link(family, &cand_eta);
            cand_dev = deviance(family, &yv, &cand_mu);
            halvings += 1;
        }

        beta = candidate;
        eta = cand_eta;
        mu = cand_mu;
        dev = cand_dev;

        if family == Family::Logistic {
            let max_eta = eta.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
            if max_eta > ETA_SEPARATION && perfectly_classified(&yv, &eta) {
                return Err(EconError::Separation);
            }
        }

        let score = x.transpose() * (&yv - &mu);
        score_norm = score.norm();
        if score_norm < control.score_tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(EconError::NotConverged {
            iterations,
            score_norm,
        });
    }

    // bread = (X'WX)^{-1} at the optimum
    let w: DVector<f64> = match family {
        Family::Logistic => mu.map(|m| (m * (1.0 - m)).max(1e-10)),
        Family::Poisson => mu.map(|m| m.max(1e-10)),
        _ => unreachable!(),
    };
    let mut xtwx = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let xi = x.row(i);
        for a in 0..k {
            for b in a..k {
                xtwx[(a, b)] += w[i] * xi[a] * xi[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }
    let bread = xtwx
        .cholesky()
        .ok_or_else(|| EconError::RankDeficient {
            columns: terms.clone(),
        })?
        .inverse();

    let null_dev = null_deviance(family, &yv, ybar);
    let pseudo_r2 = if null_dev > 0.0 {
        Some(1.0 - dev / null_dev)
    } else {
        None
    };

    let mut fit = FitResult {
        terms,
        coefficients: beta,
        vcov: bread.clone(),
        n_obs: n,
        k_params: k,
        family,
        transform: Transform::None,
        r2: None,
        adj_r2: None,
        pseudo_r2,
        convergence: Some(Convergence {
            converged,
            iterations,
            score_norm,
        }),
        vcov_repaired: false,
        design: x,
        score_resid: &yv - &mu,
        bread,
    };

    if spec.vcov == VcovSpec::TwoWayCluster {
        let (v, repaired) = vcov_two_way_cluster(&fit, frame)?;
        fit.vcov = v;
        fit.vcov_repaired = repaired;
    }
    Ok(fit)
}

fn inv_link(family: Family, eta: &DVector<f64>) -> DVector<f64> {
    match family {
        Family::Logistic => eta.map(|e| 1.0 / (1.0 + (-e).exp())),
        Family::Poisson => eta.map(|e| e.exp()),
        _ => unreachable!(),
    }
}

fn deviance(family: Family, y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    let mut dev = 0.0;
    match family {
        Family::Logistic => {
            for i in 0..y.len() {
                let m = mu[i].clamp(1e-300, 1.0 - 1e-16);
                if y[i] == 1.0 {
                    dev += -2.0 * m.ln();
                } else {
                    dev += -2.0 * (1.0 - m).ln();
                }
            }
        }
        Family::Poisson => {
            for i in 0..y.len() {
                let m = mu[i].max(1e-300);
                if y[i] > 0.0 {
                    dev += 2.0 * (y[i] * (y[i] / m).ln() - (y[i] - m));
                } else {
                    dev += 2.0 * m;
                }
            }
        }
        _ => unreachable!(),
    }
    dev
}

fn null_deviance(family: Family, y: &DVector<f64>, ybar: f64) -> f64 {
    let mu0 = DVector::from_element(y.len(), ybar);
    deviance(family, y, &mu0)
}

/// True when the sign of the linear predictor sorts the classes perfectly.
fn perfectly_classified(y: &DVector<f64>, eta: &DVector<f64>) -> bool {
    for i in 0..y.len() {
        if y[i] == 1.0 && eta[i] <= 0.0 {
            return false;
        }
        if y[i] == 0.0 && eta[i] >= 0.0 {
            return false;
        }
    }
    true
}
