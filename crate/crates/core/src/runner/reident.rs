//! De-anonymization probe: asks the provider to name the real authors of each
//! corpus manuscript and reports how many it can still identify. A corpus
//! that survives this check supports the blinded-condition claim.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::design::{Manuscript, ManuscriptSet, Roster};

use super::provider::{ChatProvider, ProviderRequest};
use super::throttle::SharedThrottle;
use super::{ProviderConfig, RunnerError};

pub const ATTRIBUTION_PROBE_INSTRUCTIONS: &str = "Read the manuscript below and name its most likely real authors, judging from the topic, writing style, and citations. List full names only, one per line. If you cannot tell, reply exactly: I cannot determine the authors.";

pub fn attribution_probe(manuscript: &Manuscript) -> String {
    format!(
        "{ATTRIBUTION_PROBE_INSTRUCTIONS}\n\nTitle: {}\n\n{}",
        manuscript.title, manuscript.body
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReidentStatus {
    Identified,
    NotIdentified,
    /// Provider never produced a response; treated as neither pass nor fail.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReidentOutcome {
    pub manuscript_id: String,
    pub status: ReidentStatus,
    pub matched_surnames: Vec<String>,
    /// Synthetic roster surnames the provider volunteered; any hit means the
    /// fictional identities leak into attribution guesses.
    pub roster_name_hits: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReidentReport {
    pub outcomes: Vec<ReidentOutcome>,
    pub identified: usize,
    pub unknown: usize,
    pub total: usize,
}

impl ReidentReport {
    pub fn summary_line(&self) -> String {
        if self.unknown > 0 {
            format!(
                "{} of {} identified ({} unknown)",
                self.identified, self.total, self.unknown
            )
        } else {
            format!("{} of {} identified", self.identified, self.total)
        }
    }
}

/// Last whitespace token of a full name, stripped of edge punctuation.
fn surname(full_name: &str) -> Option<String> {
    let token = full_name.split_whitespace().last()?;
    let cleaned: String = token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    (!cleaned.is_empty()).then_some(cleaned)
}

/// Word inventory of a response; apostrophes and hyphens stay inside words so
/// surnames like O'Brien or Ruiz-Santos survive intact.
fn word_set(text: &str) -> HashSet<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '-'))
        .filter(|w| !w.is_empty())
        .map(|w| w.trim_matches(|c: char| c == '\'' || c == '-').to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Probes every manuscript. `true_authors` maps manuscript id to the real
/// author names and must cover the whole set.
pub fn reident_check(
    manuscripts: &ManuscriptSet,
    true_authors: &BTreeMap<String, Vec<String>>,
    roster: &Roster,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
) -> Result<ReidentReport, RunnerError> {
    config.validate()?;
    for ms in manuscripts.iter() {
        if !true_authors.contains_key(&ms.id) {
            return Err(RunnerError::MissingAuthorList(ms.id.clone()));
        }
    }

    let roster_surnames: Vec<String> = roster
        .names
        .iter()
        .filter_map(|n| surname(&n.display_name))
        .collect();
    let throttle = SharedThrottle::new(config.max_in_flight, config.requests_per_minute);

    let mut outcomes = Vec::with_capacity(manuscripts.len());
    for ms in manuscripts.iter() {
        let prompt = attribution_probe(ms);
        let mut response: Option<String> = None;
        let mut failure = None;
        for attempt in 1..=config.retry.max_attempts {
            throttle.acquire();
            let req = ProviderRequest {
                key: &ms.id,
                prompt: &prompt,
                attempt,
                trial: None,
            };
            match provider.respond(&req) {
                Ok(text) => {
                    response = Some(text);
                    break;
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    if attempt < config.retry.max_attempts {
                        let backoff = config.retry.backoff_after(attempt);
                        if !backoff.is_zero() {
                            std::thread::sleep(backoff);
                        }
                    }
                }
            }
        }

        let outcome = match response {
            Some(text) => {
                let words = word_set(&text);
                let mut matched: Vec<String> = true_authors[&ms.id]
                    .iter()
                    .filter_map(|name| surname(name))
                    .filter(|s| words.contains(s))
                    .collect();
                matched.sort();
                matched.dedup();
                let mut roster_hits: Vec<String> = roster_surnames
                    .iter()
                    .filter(|s| words.contains(*s))
                    .cloned()
                    .collect();
                roster_hits.sort();
                roster_hits.dedup();
                ReidentOutcome {
                    manuscript_id: ms.id.clone(),
                    status: if matched.is_empty() {
                        ReidentStatus::NotIdentified
                    } else {
                        ReidentStatus::Identified
                    },
                    matched_surnames: matched,
                    roster_name_hits: roster_hits,
                    failure: None,
                }
            }
            None => ReidentOutcome {
                manuscript_id: ms.id.clone(),
                status: ReidentStatus::Unknown,
                matched_surnames: Vec::new(),
                roster_name_hits: Vec::new(),
                failure,
            },
        };
        outcomes.push(outcome);
    }

    let identified = outcomes
        .iter()
        .filter(|o| o.status == ReidentStatus::Identified)
        .count();
    let unknown = outcomes
        .iter()
        .filter(|o| o.status == ReidentStatus::Unknown)
        .count();
    Ok(ReidentReport {
        identified,
        unknown,
        total: outcomes.len(),
        outcomes,
    })
}
