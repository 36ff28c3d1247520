//! Least squares with absorbed fixed effects (within transformation).
//!
//! Demeaning outcome and regressors within FE levels yields coefficients
//! numerically identical to the dummy-variable (LSDV) formulation; the FE
//! levels still count toward `k_params` so residual degrees of freedom match.

use super::{
    frame::AnalysisFrame, vcov::vcov_two_way_cluster, Convergence, EconError, Family, FitResult,
    ModelSpec, Transform, VcovSpec,
};
use nalgebra::{DMatrix, DVector};

pub fn ols_fe(frame: &AnalysisFrame, spec: &ModelSpec) -> Result<FitResult, EconError> {
    match spec.family {
        Family::Ols | Family::Lpm => {}
        other => {
            return Err(EconError::InvalidSpec(format!(
                "ols_fe handles Ols/Lpm, got {other:?}"
            )))
        }
    }
    frame.validate()?;
    let n = frame.n();

    let mut y = frame.outcome.clone();
    if spec.family == Family::Lpm {
        if spec.transform != Transform::None {
            return Err(EconError::InvalidSpec(
                "linear probability model cannot transform its 0/1 outcome".into(),
            ));
        }
        for (row, &v) in y.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(EconError::BinaryOutcomeRequired {
                    family: Family::Lpm,
                    row,
                    value: v,
                });
            }
        }
    }
    if spec.transform == Transform::NaturalLog {
        for (row, v) in y.iter_mut().enumerate() {
            if *v <= 0.0 {
                return Err(EconError::NonPositiveLog {
                    column: frame.outcome_name.clone(),
                    row,
                    value: *v,
                });
            }
            *v = v.ln();
        }
    }

    let fe = if spec.include_fe {
        Some(frame.fe.as_ref().ok_or(EconError::MissingFe)?)
    } else {
        None
    };

    // assemble columns; without FE an explicit intercept leads
    let mut terms: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    if fe.is_none() {
        terms.push("(Intercept)".into());
        cols.push(vec![1.0; n]);
    }
    for (name, col) in &frame.regressors {
        terms.push(name.clone());
        cols.push(col.clone());
    }
    if terms.is_empty() {
        return Err(EconError::InvalidSpec(
            "no regressors and no intercept".into(),
        ));
    }

    let mut y_work = y.clone();
    let mut absorbed = 0usize;
    if let Some(fe) = fe {
        absorbed = fe.n_levels();
        demean_in_place(&mut y_work, fe);
        for col in cols.iter_mut() {
            demean_in_place(col, fe);
        }
    }

    check_rank(&terms, &cols)?;

    let k = cols.len();
    let x = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let yv = DVector::from_column_slice(&y_work);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &yv;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| EconError::RankDeficient {
            columns: terms.clone(),
        })?;
    let beta = chol.solve(&xty);
    let bread = chol.inverse();

    let resid = &yv - &x * &beta;
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let k_params = k + absorbed;

    // R^2 on the untransformed-but-possibly-logged outcome, about its grand
    // mean; within residuals equal LSDV residuals so this matches the
    // dummy-variable fit
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let r2 = if tss > 0.0 { Some(1.0 - rss / tss) } else { None };
    let adj_r2 = match r2 {
        Some(r2) if n > k_params => {
            Some(1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - k_params as f64))
        }
        _ => None,
    };

    let dof = n.saturating_sub(k_params).max(1) as f64;
    let sigma2 = rss / dof;
    let classical = &bread * sigma2;

    let mut fit = FitResult {
        terms,
        coefficients: beta,
        vcov: classical,
        n_obs: n,
        k_params,
        family: spec.family,
        transform: spec.transform,
        r2,
        adj_r2,
        pseudo_r2: None,
        convergence: Some(Convergence {
            converged: true,
            iterations: 1,
            score_norm: 0.0,
        }),
        vcov_repaired: false,
        design: x,
        score_resid: resid,
        bread,
    };

    if spec.vcov == VcovSpec::TwoWayCluster {
        let (v, repaired) = vcov_two_way_cluster(&fit, frame)?;
        fit.vcov = v;
        fit.vcov_repaired = repaired;
    }
    Ok(fit)
}

/// Subtracts the level mean from each value, in place.
fn demean_in_place(values: &mut [f64], fe: &super::frame::Factor) {
    let mut sums = vec![0.0f64; fe.n_levels()];
    let mut counts = vec![0usize; fe.n_levels()];
    for (v, &code) in values.iter().zip(&fe.codes) {
        sums[code] += *v;
        counts[code] += 1;
    }
    for (sum, count) in sums.iter_mut().zip(&counts) {
        if *count > 0 {
            *sum /= *count as f64;
        }
    }
    for (v, &code) in values.iter_mut().zip(&fe.codes) {
        *v -= sums[code];
    }
}

/// Modified Gram-Schmidt rank screen. Columns whose residual norm collapses
/// relative to their original norm are reported as collinear by name.
pub(crate) fn check_rank(terms: &[String], cols: &[Vec<f64>]) -> Result<(), EconError> {
    let n = cols.first().map(|c| c.len()).unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut collinear = Vec::new();
    for (term, col) in terms.iter().zip(cols) {
        let orig_norm = norm(col);
        if orig_norm == 0.0 {
            collinear.push(term.clone());
            continue;
        }
        let mut v = col.clone();
        // two passes of re-orthogonalization keep the screen stable
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&v, b);
                for i in 0..n {
                    v[i] -= d * b[i];
                }
            }
        }
        let res_norm = norm(&v);
        if res_norm <= 1e-8 * orig_norm {
            collinear.push(term.clone());
        } else {
            for x in v.iter_mut() {
                *x /= res_norm;
            }
            basis.push(v);
        }
    }
    if collinear.is_empty() {
        Ok(())
    } else {
        Err(EconError::RankDeficient { columns: collinear })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
