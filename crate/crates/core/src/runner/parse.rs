//! Stage-aware response parsing. Parsers are total: every input maps to a
//! Valid or Malformed outcome with a reason, never a panic or an abort.

use serde::{Deserialize, Serialize};

use crate::design::{Stage, StageKind};

pub const UNIQUE_ISSUES_MARKER: &str = "UNIQUE_ISSUES:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Valid,
    Malformed,
}

/// One trial's parsed model output. Only the fields for the trial's stage are
/// populated when `parse_status` is Valid; everything is `None` on Malformed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedOutcome {
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unique_issues: Option<u32>,
    pub raw_text: String,
    pub parse_status: ParseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub malformed_reason: Option<String>,
}

impl ParsedOutcome {
    pub fn from_raw(stage: Stage, raw: &str) -> ParsedOutcome {
        let mut outcome = ParsedOutcome {
            stage,
            score: None,
            decision: None,
            review_text: None,
            unique_issues: None,
            raw_text: raw.to_string(),
            parse_status: ParseStatus::Valid,
            malformed_reason: None,
        };
        let failure = match stage.kind() {
            StageKind::Score => match parse_score(raw) {
                Ok(score) => {
                    outcome.score = Some(score);
                    None
                }
                Err(reason) => Some(reason),
            },
            StageKind::Decision => match parse_decision(raw) {
                Ok(decision) => {
                    outcome.decision = Some(decision);
                    None
                }
                Err(reason) => Some(reason),
            },
            StageKind::Review => match parse_review(raw) {
                Ok((text, issues)) => {
                    outcome.review_text = Some(text);
                    outcome.unique_issues = Some(issues);
                    None
                }
                Err(reason) => Some(reason),
            },
        };
        if let Some(reason) = failure {
            outcome.parse_status = ParseStatus::Malformed;
            outcome.malformed_reason = Some(reason);
        }
        outcome
    }

    /// A Malformed outcome for a trial whose provider calls never produced
    /// text to parse (transport or authentication failure after retries).
    pub fn provider_failure(stage: Stage, cause: &str) -> ParsedOutcome {
        ParsedOutcome {
            stage,
            score: None,
            decision: None,
            review_text: None,
            unique_issues: None,
            raw_text: String::new(),
            parse_status: ParseStatus::Malformed,
            malformed_reason: Some(format!("provider failure: {cause}")),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.parse_status == ParseStatus::Valid
    }
}

/// Accepts a bare integer 1-100, optionally surrounded by whitespace.
pub fn parse_score(raw: &str) -> Result<u32, String> {
    let t = raw.trim();
    if t.is_empty() {
        return Err("empty response".into());
    }
    if !t.bytes().all(|b| b.is_ascii_digit()) {
        return Err("expected a bare integer score, found extra text".into());
    }
    let n: u32 = t
        .parse()
        .map_err(|_| "score out of range 1-100".to_string())?;
    if !(1..=100).contains(&n) {
        return Err(format!("score {n} out of range 1-100"));
    }
    Ok(n)
}

/// Accepts exactly "0" or "1" after trimming whitespace.
pub fn parse_decision(raw: &str) -> Result<u8, String> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        "" => Err("empty response".into()),
        other => Err(format!(
            "expected exactly 0 or 1, got {:?}",
            truncate_for_reason(other)
        )),
    }
}

/// Splits a review into (body, unique-issue count). The final non-empty line
/// must be the UNIQUE_ISSUES marker with a non-negative integer.
pub fn parse_review(raw: &str) -> Result<(String, u32), String> {
    let lines: Vec<&str> = raw.lines().collect();
    let marker_idx = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .ok_or_else(|| "empty response".to_string())?;
    let marker_line = lines[marker_idx].trim();
    let Some(value) = marker_line.strip_prefix(UNIQUE_ISSUES_MARKER) else {
        return Err("missing UNIQUE_ISSUES marker on final line".into());
    };
    let value = value.trim();
    if value.is_empty() {
        return Err("UNIQUE_ISSUES marker has no count".into());
    }
    if let Some(rest) = value.strip_prefix('-') {
        if rest.bytes().all(|b| b.is_ascii_digit()) && !rest.is_empty() {
            return Err(format!("negative issue count {value}"));
        }
    }
    if !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!(
            "malformed issue count {:?}",
            truncate_for_reason(value)
        ));
    }
    let issues: u32 = value
        .parse()
        .map_err(|_| format!("issue count {value} out of range"))?;
    let body = lines[..marker_idx].join("\n").trim().to_string();
    Ok((body, issues))
}

fn truncate_for_reason(s: &str) -> String {
    const CAP: usize = 40;
    if s.len() <= CAP {
        s.to_string()
    } else {
        let mut end = CAP;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_accepts_whitespace_and_rejects_prose() {
        assert_eq!(parse_score(" 83 "), Ok(83));
        assert_eq!(parse_score("100\n"), Ok(100));
        assert!(parse_score("Score: 83").is_err());
        assert!(parse_score("0").unwrap_err().contains("out of range"));
        assert!(parse_score("101").unwrap_err().contains("out of range"));
        assert!(parse_score("99999999999999999999").is_err());
    }

    #[test]
    fn decision_is_strict() {
        assert_eq!(parse_decision("1"), Ok(1));
        assert_eq!(parse_decision("0\n"), Ok(0));
        assert!(parse_decision("reject").is_err());
        assert!(parse_decision("01").is_err());
    }

    #[test]
    fn review_splits_body_from_marker() {
        let raw = "The estimator section is underspecified.\n\nThe data appendix omits exclusions.\nUNIQUE_ISSUES: 9\n";
        let (body, n) = parse_review(raw).unwrap();
        assert_eq!(n, 9);
        assert!(body.ends_with("omits exclusions."));
        assert!(!body.contains("UNIQUE_ISSUES"));
    }

    #[test]
    fn review_marker_failures() {
        assert!(parse_review("no marker here").unwrap_err().contains("missing"));
        assert!(parse_review("body\nUNIQUE_ISSUES: -2")
            .unwrap_err()
            .contains("negative"));
        assert!(parse_review("body\nUNIQUE_ISSUES: nine").is_err());
        // trailing blank lines after the marker are tolerated
        assert!(parse_review("body\nUNIQUE_ISSUES: 3\n\n  \n").is_ok());
    }

    #[test]
    fn from_raw_populates_exactly_the_stage_fields() {
        let o = ParsedOutcome::from_raw(Stage::EditorQuality, "64");
        assert_eq!(o.score, Some(64));
        assert!(o.decision.is_none() && o.review_text.is_none() && o.unique_issues.is_none());

        let o = ParsedOutcome::from_raw(Stage::ReviewerReject, "1");
        assert_eq!(o.decision, Some(1));
        assert!(o.score.is_none());

        let o = ParsedOutcome::from_raw(Stage::ReviewerComments, "fine\nUNIQUE_ISSUES: 2");
        assert_eq!(o.unique_issues, Some(2));
        assert_eq!(o.review_text.as_deref(), Some("fine"));

        let bad = ParsedOutcome::from_raw(Stage::EditorQuality, "about 80");
        assert!(!bad.is_valid());
        assert!(bad.score.is_none());
        assert_eq!(bad.raw_text, "about 80");
    }
}
