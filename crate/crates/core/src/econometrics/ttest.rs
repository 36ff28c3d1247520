//! Welch's unequal-variances t-test. The difference is reported as
//! mean_b - mean_a and the t statistic keeps the same sign as the difference.

use super::EconError;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub mean_a: f64,
    pub mean_b: f64,
    /// mean_b - mean_a.
    pub diff: f64,
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
}

pub fn welch_ttest(values_a: &[f64], values_b: &[f64]) -> Result<WelchTest, EconError> {
    if values_a.len() < 2 {
        return Err(EconError::GroupTooSmall {
            which: "a",
            n: values_a.len(),
        });
    }
    if values_b.len() < 2 {
        return Err(EconError::GroupTooSmall {
            which: "b",
            n: values_b.len(),
        });
    }
    let (mean_a, var_a) = mean_var(values_a);
    let (mean_b, var_b) = mean_var(values_b);
    if var_a == 0.0 {
        return Err(EconError::ZeroVariance { which: "a" });
    }
    if var_b == 0.0 {
        return Err(EconError::ZeroVariance { which: "b" });
    }
    let n_a = values_a.len() as f64;
    let n_b = values_b.len() as f64;
    let sa = var_a / n_a;
    let sb = var_b / n_b;
    let se = (sa + sb).sqrt();
    let diff = mean_b - mean_a;
    let t = diff / se;
    // Welch-Satterthwaite degrees of freedom
    let df = (sa + sb) * (sa + sb) / (sa * sa / (n_a - 1.0) + sb * sb / (n_b - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0 by construction");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(WelchTest {
        mean_a,
        mean_b,
        diff,
        t,
        df,
        p,
        n_a: values_a.len(),
        n_b: values_b.len(),
    })
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
