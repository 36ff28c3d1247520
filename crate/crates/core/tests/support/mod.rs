//! Test-side oracles, deliberately independent of the library's linear
//! algebra: plain Gaussian elimination, an explicit dummy-variable OLS, and a
//! direct-formula two-way cluster sandwich.

#![allow(dead_code)]

pub mod fixtures;
pub mod parser_cases;

use rand::Rng;

/// Solves A x = b by Gaussian elimination with partial pivoting.
pub fn solve_gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "oracle system is singular");
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in (col + 1)..n {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    x
}

/// Least squares via explicit normal equations on a dense design matrix.
/// Returns the full coefficient vector in column order.
pub fn normal_equations_ols(design: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = design.len();
    let n = y.len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            let mut s = 0.0;
            for i in 0..n {
                s += design[a][i] * design[b][i];
            }
            xtx[a][b] = s;
        }
        let mut s = 0.0;
        for i in 0..n {
            s += design[a][i] * y[i];
        }
        xty[a] = s;
    }
    solve_gauss(xtx, xty)
}

/// Dummy-variable (LSDV) OLS: regressors plus one dummy per FE level, no
/// intercept. Returns only the regressor coefficients, in input order.
pub fn dummy_variable_ols(
    regressors: &[Vec<f64>],
    y: &[f64],
    fe_codes: &[usize],
    n_levels: usize,
) -> Vec<f64> {
    let n = y.len();
    let mut design: Vec<Vec<f64>> = regressors.to_vec();
    for level in 0..n_levels {
        design.push(
            (0..n)
                .map(|i| if fe_codes[i] == level { 1.0 } else { 0.0 })
                .collect(),
        );
    }
    let coefs = normal_equations_ols(&design, y);
    coefs[..regressors.len()].to_vec()
}

/// Matrix product helpers for the brute-force sandwich (row-major Vec<Vec>).
pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Inverts a small symmetric matrix by solving K systems against identity.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut cols = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        cols.push(solve_gauss(a.to_vec(), e));
    }
    // cols[j] is the j-th column of the inverse
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for (j, col) in cols.iter().enumerate() {
            out[i][j] = col[i];
        }
    }
    out
}

/// Direct-formula two-way cluster-robust vcov for an OLS fit:
/// V = V_A + V_B - V_AB with per-component factor G/(G-1)*(N-1)/(N-K).
/// `design` is column-major (k columns of length n), `resid` the residuals,
/// `k_params` the parameter count used in the N-K correction.
pub fn brute_force_two_way(
    design: &[Vec<f64>],
    resid: &[f64],
    codes_a: &[usize],
    codes_b: &[usize],
    k_params: usize,
) -> Vec<Vec<f64>> {
    let k = design.len();
    let n = resid.len();
    let mut xtx = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            let mut s = 0.0;
            for i in 0..n {
                s += design[a][i] * design[b][i];
            }
            xtx[a][b] = s;
        }
    }
    let bread = invert(&xtx);

    let term = |codes: &[usize]| -> Vec<Vec<f64>> {
        let n_levels = codes.iter().copied().max().unwrap() + 1;
        let mut sums = vec![vec![0.0; k]; n_levels];
        for i in 0..n {
            for j in 0..k {
                sums[codes[i]][j] += design[j][i] * resid[i];
            }
        }
        let mut meat = vec![vec![0.0; k]; k];
        for s in &sums {
            for a in 0..k {
                for b in 0..k {
                    meat[a][b] += s[a] * s[b];
                }
            }
        }
        let g = n_levels as f64;
        let nf = n as f64;
        let c = g / (g - 1.0) * (nf - 1.0) / (nf - k_params as f64);
        let mut v = mat_mul(&mat_mul(&bread, &meat), &bread);
        for row in v.iter_mut() {
            for x in row.iter_mut() {
                *x *= c;
            }
        }
        v
    };

    let mut pair_map = std::collections::HashMap::new();
    let pair_codes: Vec<usize> = codes_a
        .iter()
        .zip(codes_b)
        .map(|(&a, &b)| {
            let next = pair_map.len();
            *pair_map.entry((a, b)).or_insert(next)
        })
        .collect();

    let va = term(codes_a);
    let vb = term(codes_b);
    let vab = term(&pair_codes);
    let mut v = va;
    for i in 0..k {
        for j in 0..k {
            v[i][j] += vb[i][j] - vab[i][j];
        }
    }
    v
}

/// Standard normal draw by Box-Muller from a uniform RNG, so oracle data does
/// not depend on the library's distribution stack.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
