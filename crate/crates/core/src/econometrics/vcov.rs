//! Two-way cluster-robust variance: the additive-subtractive three-sandwich
//! estimator V = V_A + V_B - V_{A∩B}, each term a one-way cluster sandwich
//! with small-sample factor G/(G-1) * (N-1)/(N-K) over its own grouping.
//! The subtraction can leave the matrix indefinite; negative eigenvalues are
//! truncated to zero and the repair is flagged.

use super::{frame::AnalysisFrame, EconError, FitResult};
use nalgebra::DMatrix;

/// Returns the two-way clustered vcov and whether eigenvalue truncation was
/// needed to restore positive semi-definiteness.
pub fn vcov_two_way_cluster(
    fit: &FitResult,
    frame: &AnalysisFrame,
) -> Result<(DMatrix<f64>, bool), EconError> {
    let a = frame
        .cluster_a
        .as_ref()
        .ok_or(EconError::MissingCluster { which: "a" })?;
    let b = frame
        .cluster_b
        .as_ref()
        .ok_or(EconError::MissingCluster { which: "b" })?;
    if a.n_levels() < 2 {
        return Err(EconError::SingleCluster {
            name: a.name.clone(),
        });
    }
    if b.n_levels() < 2 {
        return Err(EconError::SingleCluster {
            name: b.name.clone(),
        });
    }

    let v_a = one_way(fit, &a.codes, a.n_levels());
    let v_b = one_way(fit, &b.codes, b.n_levels());
    let (pair_codes, pair_levels) = pair_codes(a, b);
    let v_ab = one_way(fit, &pair_codes, pair_levels);

    let v = v_a + v_b - v_ab;
    Ok(repair_psd(v))
}

/// One-way cluster sandwich: c * bread * (sum_g s_g s_g') * bread with
/// s_g = sum_{i in g} x_i r_i and c = G/(G-1) * (N-1)/(N-K).
fn one_way(fit: &FitResult, codes: &[usize], n_levels: usize) -> DMatrix<f64> {
    let k = fit.design.ncols();
    let n = fit.design.nrows();
    let mut sums = DMatrix::<f64>::zeros(n_levels, k);
    for i in 0..n {
        let r = fit.score_resid[i];
        let g = codes[i];
        for j in 0..k {
            sums[(g, j)] += fit.design[(i, j)] * r;
        }
    }
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for g in 0..n_levels {
        let s = sums.row(g);
        meat += s.transpose() * s;
    }
    let g = n_levels as f64;
    let n_f = n as f64;
    let k_f = fit.k_params as f64;
    let c = g / (g - 1.0) * (n_f - 1.0) / (n_f - k_f);
    &fit.bread * meat * &fit.bread * c
}

/// Dense codes for the intersection clustering (unique (a,b) pairs).
fn pair_codes(a: &super::frame::Factor, b: &super::frame::Factor) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let mut codes = Vec::with_capacity(a.codes.len());
    for (&ca, &cb) in a.codes.iter().zip(&b.codes) {
        let next = map.len();
        let code = *map.entry((ca, cb)).or_insert(next);
        codes.push(code);
    }
    (codes, map.len())
}

/// Truncates negative eigenvalues to zero. Returns the repaired matrix and
/// whether any eigenvalue was meaningfully negative.
fn repair_psd(v: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    // symmetrize first; the three-sandwich arithmetic can leave tiny asymmetry
    let v = (&v + v.transpose()) * 0.5;
    let eig = v.clone().symmetric_eigen();
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e.abs()));
    let tol = 1e-12 * max_abs.max(1.0);
    let repaired = eig.eigenvalues.iter().any(|&e| e < -tol);
    if !repaired && eig.eigenvalues.iter().all(|&e| e >= 0.0) {
        return (v, false);
    }
    let mut lambda = eig.eigenvalues.clone();
    for e in lambda.iter_mut() {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    let q = eig.eigenvectors;
    let rebuilt = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    // re-symmetrize against rounding in the reconstruction
    let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;
    (rebuilt, repaired)
}
