//! The estimation input: an outcome column, named regressors, and optional
//! fixed-effect / cluster factors, all row-aligned.

use super::EconError;

/// A categorical column stored as dense level codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    /// One code per row, indexing into `levels`.
    pub codes: Vec<usize>,
}

impl Factor {
    /// Builds a factor from row labels; levels are numbered in first-appearance order.
    pub fn from_labels<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Factor {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            let code = match levels.iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    levels.push(label.to_string());
                    levels.len() - 1
                }
            };
            codes.push(code);
        }
        Factor {
            name: name.into(),
            levels,
            codes,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Rebuilds the factor over a row subset, renumbering to the levels that occur.
    pub fn subset(&self, rows: &[usize]) -> Factor {
        let labels: Vec<&str> = rows
            .iter()
            .map(|&r| self.levels[self.codes[r]].as_str())
            .collect();
        Factor::from_labels(self.name.clone(), &labels)
    }
}

/// Row-aligned estimation frame.
#[derive(Debug, Clone)]
pub struct AnalysisFrame {
    pub outcome_name: String,
    pub outcome: Vec<f64>,
    pub regressors: Vec<(String, Vec<f64>)>,
    pub fe: Option<Factor>,
    pub cluster_a: Option<Factor>,
    pub cluster_b: Option<Factor>,
}

impl AnalysisFrame {
    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    /// Checks row alignment and finiteness of all used columns.
    pub fn validate(&self) -> Result<(), EconError> {
        let n = self.n();
        if n == 0 {
            return Err(EconError::EmptyFrame);
        }
        for (row, v) in self.outcome.iter().enumerate() {
            if !v.is_finite() {
                return Err(EconError::NonFinite {
                    column: self.outcome_name.clone(),
                    row,
                });
            }
        }
        for (name, col) in &self.regressors {
            if col.len() != n {
                return Err(EconError::LengthMismatch {
                    column: name.clone(),
                    got: col.len(),
                    expected: n,
                });
            }
            super::validate_indicator(name, col)?;
        }
        for factor in [&self.fe, &self.cluster_a, &self.cluster_b].into_iter().flatten() {
            if factor.len() != n {
                return Err(EconError::LengthMismatch {
                    column: factor.name.clone(),
                    got: factor.len(),
                    expected: n,
                });
            }
        }
        Ok(())
    }

    /// Extracts the given rows into a new frame, renumbering factor levels.
    pub fn subset(&self, rows: &[usize]) -> AnalysisFrame {
        AnalysisFrame {
            outcome_name: self.outcome_name.clone(),
            outcome: rows.iter().map(|&r| self.outcome[r]).collect(),
            regressors: self
                .regressors
                .iter()
                .map(|(name, col)| (name.clone(), rows.iter().map(|&r| col[r]).collect()))
                .collect(),
            fe: self.fe.as_ref().map(|f| f.subset(rows)),
            cluster_a: self.cluster_a.as_ref().map(|f| f.subset(rows)),
            cluster_b: self.cluster_b.as_ref().map(|f| f.subset(rows)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_levels_follow_first_appearance() {
        let f = Factor::from_labels("k", &["b", "a", "b", "c", "a"]);
        assert_eq!(f.levels, vec!["b", "a", "c"]);
        assert_eq!(f.codes, vec![0, 1, 0, 2, 1]);
    }

    #[test]
    fn subset_renumbers_levels() {
        let f = Factor::from_labels("k", &["x", "y", "z", "y"]);
        let sub = f.subset(&[2, 3]);
        assert_eq!(sub.levels, vec!["z", "y"]);
        assert_eq!(sub.codes, vec![0, 1]);
    }

    #[test]
    fn validate_catches_misaligned_columns() {
        let frame = AnalysisFrame {
            outcome_name: "y".into(),
            outcome: vec![1.0, 2.0],
            regressors: vec![("x".into(), vec![1.0])],
            fe: None,
            cluster_a: None,
            cluster_b: None,
        };
        assert!(matches!(
            frame.validate(),
            Err(EconError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn validate_catches_nan() {
        let frame = AnalysisFrame {
            outcome_name: "y".into(),
            outcome: vec![1.0, f64::NAN],
            regressors: vec![],
            fe: None,
            cluster_a: None,
            cluster_b: None,
        };
        assert!(matches!(frame.validate(), Err(EconError::NonFinite { row: 1, .. })));
    }
}
