//! Effect summaries in the two vocabularies the tables use: percentage-point
//! plus relative change for decision outcomes, exponentiated percent change
//! for log outcomes. A decision summary always carries both forms.

use crate::econometrics::FitResult;
use crate::terms::display_label;

use super::ReportError;

/// Relative change implied by a probability-scale estimate against a
/// baseline rate, as a percent rounded to one decimal. Sign follows the
/// estimate: (-0.017, 0.067) is -25.4.
pub fn relative_effect(estimate_pp: f64, baseline_rate: f64) -> Result<f64, ReportError> {
    if !(baseline_rate > 0.0) {
        return Err(ReportError::NonPositiveBaseline(baseline_rate));
    }
    Ok((1000.0 * estimate_pp / baseline_rate).round() / 10.0)
}

/// One term's effect with every display form precomputed. Which of the
/// optional fields are set depends on the outcome scale: decision effects
/// carry the baseline/percentage-point/relative trio, log-outcome effects
/// carry the exp and linear percent forms.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSummary {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub baseline_rate: Option<f64>,
    pub percentage_points: Option<f64>,
    /// From `relative_effect`, already rounded to one decimal.
    pub relative_percent: Option<f64>,
    /// 100 * (exp(b) - 1), the exact percent change for a log outcome.
    pub percent_exp: Option<f64>,
    /// 100 * b, the small-coefficient approximation shown alongside.
    pub percent_linear: Option<f64>,
}

fn term_base(fit: &FitResult, term: &str) -> Result<(f64, f64), ReportError> {
    let estimate = fit
        .coefficient(term)
        .ok_or_else(|| ReportError::UnknownTerm(term.to_string()))?;
    let se = fit.std_error(term).expect("term exists, checked above");
    Ok((estimate, se))
}

/// Summary for a term of a decision-outcome (probability scale) fit.
pub fn decision_effect(
    fit: &FitResult,
    term: &str,
    baseline_rate: f64,
) -> Result<EffectSummary, ReportError> {
    let (estimate, se) = term_base(fit, term)?;
    let relative = relative_effect(estimate, baseline_rate)?;
    Ok(EffectSummary {
        term: term.to_string(),
        estimate,
        se,
        ci_lower: estimate - 1.96 * se,
        ci_upper: estimate + 1.96 * se,
        baseline_rate: Some(baseline_rate),
        percentage_points: Some(100.0 * estimate),
        relative_percent: Some(relative),
        percent_exp: None,
        percent_linear: None,
    })
}

/// Summary for a term of a log-outcome fit.
pub fn log_outcome_effect(fit: &FitResult, term: &str) -> Result<EffectSummary, ReportError> {
    let (estimate, se) = term_base(fit, term)?;
    Ok(EffectSummary {
        term: term.to_string(),
        estimate,
        se,
        ci_lower: estimate - 1.96 * se,
        ci_upper: estimate + 1.96 * se,
        baseline_rate: None,
        percentage_points: None,
        relative_percent: None,
        percent_exp: Some(100.0 * (estimate.exp() - 1.0)),
        percent_linear: Some(100.0 * estimate),
    })
}

impl EffectSummary {
    /// One-line statement in the dual phrasing the report prints.
    pub fn statement(&self) -> String {
        let label = display_label(&self.term);
        match (self.baseline_rate, self.percent_exp) {
            (Some(base), _) => format!(
                "{label}: {:+.1} pp against a {:.1}% baseline ({:+.1}% relative); 95% CI [{:.3}, {:.3}] on the probability scale",
                self.percentage_points.unwrap_or_default(),
                100.0 * base,
                self.relative_percent.unwrap_or_default(),
                self.ci_lower,
                self.ci_upper,
            ),
            (None, Some(exp_pct)) => format!(
                "{label}: {exp_pct:+.2}% (exp scale; linear approx {:+.2}%); 95% CI [{:.3}, {:.3}] in log points",
                self.percent_linear.unwrap_or_default(),
                self.ci_lower,
                self.ci_upper,
            ),
            (None, None) => format!(
                "{label}: {:.4} (SE {:.4}); 95% CI [{:.3}, {:.3}]",
                self.estimate, self.se, self.ci_lower, self.ci_upper,
            ),
        }
    }
}
