//! Column summaries: mean, sample standard deviation (n-1), min, max.

use super::EconError;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    /// Sample SD (n-1 denominator); 0 for a single observation.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summary_stats(columns: &[(String, Vec<f64>)]) -> Result<Vec<SummaryRow>, EconError> {
    let mut rows = Vec::with_capacity(columns.len());
    for (name, values) in columns {
        if values.is_empty() {
            return Err(EconError::EmptyColumn(name.clone()));
        }
        for (row, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(EconError::NonFinite {
                    column: name.clone(),
                    row,
                });
            }
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        rows.push(SummaryRow {
            name: name.clone(),
            n,
            mean,
            sd,
            min,
            max,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_has_zero_sd() {
        let rows = summary_stats(&[("c".into(), vec![7.0, 7.0, 7.0])]).unwrap();
        assert_eq!(rows[0].mean, 7.0);
        assert_eq!(rows[0].sd, 0.0);
        assert_eq!(rows[0].min, 7.0);
        assert_eq!(rows[0].max, 7.0);
    }

    #[test]
    fn five_value_column_matches_direct_recomputation() {
        let values = vec![2.0, 4.0, 4.0, 4.0, 6.0];
        let rows = summary_stats(&[("v".into(), values.clone())]).unwrap();
        // direct: mean 4, squared deviations (4+0+0+0+4)=8, var 8/4=2
        assert!((rows[0].mean - 4.0).abs() < 1e-15);
        assert!((rows[0].sd - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(rows[0].min, 2.0);
        assert_eq!(rows[0].max, 6.0);
        assert_eq!(rows[0].n, 5);
    }

    #[test]
    fn empty_column_is_an_error() {
        assert!(matches!(
            summary_stats(&[("e".into(), vec![])]),
            Err(EconError::EmptyColumn(_))
        ));
    }
}
