//! Pure profile checks and publication-level aggregation. Flags report
//! violated invariants without ever mutating the data; exclusion decisions
//! belong to the regression layer.

use super::{FacultyRank, ImpactFields, PersonalFields, PublicationRecord};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Configurable career-plausibility thresholds. The year check is a soft
/// flag: a full professor is expected to be at least `full_rank_min_years`
/// past the PhD, and publication years may trail the PhD by at most
/// `publication_lead_years`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlausibilityRule {
    pub current_year: i32,
    pub full_rank_min_years: i32,
    pub publication_lead_years: i32,
}

impl Default for PlausibilityRule {
    fn default() -> Self {
        // the year anchor is part of the analysis config so reruns of an old
        // store reproduce the same flags; 2025 matches the mock's default
        PlausibilityRule {
            current_year: 2025,
            full_rank_min_years: 10,
            publication_lead_years: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConsistencyFlag {
    HIndexExceedsPublications {
        h_index: u32,
        publications: u32,
    },
    I10ExceedsPublications {
        i10_index: u32,
        publications: u32,
    },
    HSquaredExceedsCitations {
        h_index: u32,
        citations: u64,
    },
    PublicationCountMismatch {
        declared: u32,
        generated: u32,
    },
    RankYearImplausible {
        rank: FacultyRank,
        graduation_year: i32,
        latest_allowed: i32,
    },
    GraduationInFuture {
        graduation_year: i32,
        current_year: i32,
    },
    /// Publication `seq` (0-based) predates the PhD by more than the rule allows.
    EarlyPublicationYear {
        seq: u32,
        year: i32,
        earliest_allowed: i32,
    },
}

impl ConsistencyFlag {
    /// Stable label for counting flags by kind.
    pub fn label(&self) -> &'static str {
        match self {
            ConsistencyFlag::HIndexExceedsPublications { .. } => "h_index_exceeds_publications",
            ConsistencyFlag::I10ExceedsPublications { .. } => "i10_exceeds_publications",
            ConsistencyFlag::HSquaredExceedsCitations { .. } => "h_squared_exceeds_citations",
            ConsistencyFlag::PublicationCountMismatch { .. } => "publication_count_mismatch",
            ConsistencyFlag::RankYearImplausible { .. } => "rank_year_implausible",
            ConsistencyFlag::GraduationInFuture { .. } => "graduation_in_future",
            ConsistencyFlag::EarlyPublicationYear { .. } => "early_publication_year",
        }
    }
}

impl fmt::Display for ConsistencyFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsistencyFlag::HIndexExceedsPublications { h_index, publications } => {
                write!(f, "h-index {h_index} exceeds {publications} publications")
            }
            ConsistencyFlag::I10ExceedsPublications { i10_index, publications } => {
                write!(f, "i10-index {i10_index} exceeds {publications} publications")
            }
            ConsistencyFlag::HSquaredExceedsCitations { h_index, citations } => {
                write!(
                    f,
                    "h-index {h_index} implies at least {} citations, only {citations} reported",
                    u64::from(*h_index) * u64::from(*h_index)
                )
            }
            ConsistencyFlag::PublicationCountMismatch { declared, generated } => {
                write!(f, "{declared} publications declared, {generated} generated")
            }
            ConsistencyFlag::RankYearImplausible { rank, graduation_year, latest_allowed } => {
                write!(
                    f,
                    "{} with a {graduation_year} PhD; rule requires {latest_allowed} or earlier",
                    rank.display()
                )
            }
            ConsistencyFlag::GraduationInFuture { graduation_year, current_year } => {
                write!(f, "PhD year {graduation_year} is after {current_year}")
            }
            ConsistencyFlag::EarlyPublicationYear { seq, year, earliest_allowed } => {
                write!(
                    f,
                    "publication {seq} dated {year}, earlier than the allowed {earliest_allowed}"
                )
            }
        }
    }
}

/// Profile-level means over the publication list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedAggregates {
    pub avg_first_year_citations: f64,
    /// None when every impact factor in the list was NA.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_impact_factor: Option<f64>,
    pub na_impact_factors: u32,
    pub publications: u32,
}

/// Arithmetic means over the publication list, with NA impact factors
/// excluded pairwise (the exclusion count is reported, never hidden).
/// Returns None for an empty list: there is nothing to aggregate.
pub fn aggregate_pubs(pubs: &[PublicationRecord]) -> Option<DerivedAggregates> {
    if pubs.is_empty() {
        return None;
    }
    let n = pubs.len() as f64;
    let avg_first_year_citations =
        pubs.iter().map(|p| f64::from(p.citations_first_year)).sum::<f64>() / n;
    let ifs: Vec<f64> = pubs.iter().filter_map(|p| p.journal_impact_factor).collect();
    let na_impact_factors = (pubs.len() - ifs.len()) as u32;
    let avg_impact_factor = if ifs.is_empty() {
        None
    } else {
        Some(ifs.iter().sum::<f64>() / ifs.len() as f64)
    };
    Some(DerivedAggregates {
        avg_first_year_citations,
        avg_impact_factor,
        na_impact_factors,
        publications: pubs.len() as u32,
    })
}

/// Checks every profile invariant and returns one flag per violation, in a
/// fixed order. The inputs are never modified.
pub fn validate_profile(
    personal: &PersonalFields,
    impact: &ImpactFields,
    pubs: &[PublicationRecord],
    rule: &PlausibilityRule,
) -> Vec<ConsistencyFlag> {
    let mut flags = Vec::new();
    let declared = personal.num_publications;

    if impact.h_index > declared {
        flags.push(ConsistencyFlag::HIndexExceedsPublications {
            h_index: impact.h_index,
            publications: declared,
        });
    }
    if impact.i10_index > declared {
        flags.push(ConsistencyFlag::I10ExceedsPublications {
            i10_index: impact.i10_index,
            publications: declared,
        });
    }
    if u64::from(impact.h_index) * u64::from(impact.h_index) > impact.total_citations {
        flags.push(ConsistencyFlag::HSquaredExceedsCitations {
            h_index: impact.h_index,
            citations: impact.total_citations,
        });
    }
    if pubs.len() as u32 != declared {
        flags.push(ConsistencyFlag::PublicationCountMismatch {
            declared,
            generated: pubs.len() as u32,
        });
    }
    if personal.phd_graduation_year > rule.current_year {
        flags.push(ConsistencyFlag::GraduationInFuture {
            graduation_year: personal.phd_graduation_year,
            current_year: rule.current_year,
        });
    } else if personal.faculty_rank == FacultyRank::Full {
        let latest_allowed = rule.current_year - rule.full_rank_min_years;
        if personal.phd_graduation_year > latest_allowed {
            flags.push(ConsistencyFlag::RankYearImplausible {
                rank: personal.faculty_rank,
                graduation_year: personal.phd_graduation_year,
                latest_allowed,
            });
        }
    }
    let earliest_allowed = personal.phd_graduation_year - rule.publication_lead_years;
    for (seq, p) in pubs.iter().enumerate() {
        if p.year < earliest_allowed {
            flags.push(ConsistencyFlag::EarlyPublicationYear {
                seq: seq as u32,
                year: p.year,
                earliest_allowed,
            });
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvprobe::TenureStatus;

    fn pub_record(impact_factor: Option<f64>, first_year: u32, year: i32) -> PublicationRecord {
        PublicationRecord {
            co_authors: vec![],
            topic: "t".into(),
            journal: "J".into(),
            journal_impact_factor: impact_factor,
            year,
            citations_first_year: first_year,
        }
    }

    fn consistent_profile() -> (PersonalFields, ImpactFields, Vec<PublicationRecord>) {
        let personal = PersonalFields {
            phd_granting_institution: "Harvard University".into(),
            phd_graduation_year: 2013,
            faculty_rank: FacultyRank::Full,
            tenure_status: TenureStatus::Tenured,
            num_publications: 3,
        };
        let impact = ImpactFields {
            total_citations: 900,
            h_index: 3,
            i10_index: 2,
            average_first_year_citations: 6.0,
            average_impact_factor: 3.0,
        };
        let pubs = vec![
            pub_record(Some(2.9), 5, 2015),
            pub_record(Some(6.5), 18, 2019),
            pub_record(None, 2, 2021),
        ];
        (personal, impact, pubs)
    }

    #[test]
    fn singleton_aggregation_is_the_record_itself() {
        let agg = aggregate_pubs(&[pub_record(Some(6.5), 18, 2019)]).unwrap();
        assert_eq!(agg.avg_impact_factor, Some(6.5));
        assert_eq!(agg.avg_first_year_citations, 18.0);
        assert_eq!(agg.na_impact_factors, 0);
        assert_eq!(agg.publications, 1);
    }

    #[test]
    fn na_impact_factors_are_excluded_pairwise() {
        let pubs = vec![
            pub_record(Some(2.9), 5, 2015),
            pub_record(Some(6.5), 18, 2019),
            pub_record(None, 2, 2021),
        ];
        let agg = aggregate_pubs(&pubs).unwrap();
        // mean of {2.9, 6.5}; the NA drops from the IF mean only
        assert!((agg.avg_impact_factor.unwrap() - 4.7).abs() < 1e-12);
        assert_eq!(agg.na_impact_factors, 1);
        assert!((agg.avg_first_year_citations - 25.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_na_impact_factors_leave_the_mean_undefined() {
        let pubs = vec![pub_record(None, 1, 2020), pub_record(None, 2, 2021)];
        let agg = aggregate_pubs(&pubs).unwrap();
        assert_eq!(agg.avg_impact_factor, None);
        assert_eq!(agg.na_impact_factors, 2);
        assert!(aggregate_pubs(&[]).is_none());
    }

    #[test]
    fn consistent_profile_raises_no_flags() {
        let (personal, impact, pubs) = consistent_profile();
        assert!(validate_profile(&personal, &impact, &pubs, &PlausibilityRule::default())
            .is_empty());
    }

    #[test]
    fn each_violation_kind_is_flagged() {
        let (personal, mut impact, pubs) = consistent_profile();
        let rule = PlausibilityRule::default();

        impact.h_index = 40; // exceeds 3 pubs, and 1600 > 900 citations
        let flags = validate_profile(&personal, &impact, &pubs, &rule);
        let labels: Vec<&str> = flags.iter().map(|f| f.label()).collect();
        assert!(labels.contains(&"h_index_exceeds_publications"));
        assert!(labels.contains(&"h_squared_exceeds_citations"));

        let (personal, mut impact, pubs) = consistent_profile();
        impact.i10_index = 9;
        let flags = validate_profile(&personal, &impact, &pubs, &rule);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].label(), "i10_exceeds_publications");

        let (mut personal, impact, pubs) = consistent_profile();
        personal.num_publications = 13;
        let flags = validate_profile(&personal, &impact, &pubs, &rule);
        assert!(flags
            .iter()
            .any(|f| matches!(f, ConsistencyFlag::PublicationCountMismatch { declared: 13, generated: 3 })));
    }

    #[test]
    fn year_rules_flag_full_rank_and_early_publications() {
        let (mut personal, impact, mut pubs) = consistent_profile();
        let rule = PlausibilityRule::default();

        personal.phd_graduation_year = 2020; // full professor 5 years out
        let flags = validate_profile(&personal, &impact, &pubs, &rule);
        assert!(flags.iter().any(|f| matches!(
            f,
            ConsistencyFlag::RankYearImplausible { latest_allowed: 2015, .. }
        )));

        personal.phd_graduation_year = 2013;
        pubs[0].year = 2000; // more than ten years before the PhD
        let flags = validate_profile(&personal, &impact, &pubs, &rule);
        assert!(flags.iter().any(|f| matches!(
            f,
            ConsistencyFlag::EarlyPublicationYear { seq: 0, year: 2000, earliest_allowed: 2003 }
        )));

        personal.phd_graduation_year = 2030;
        let flags = validate_profile(&personal, &impact, &pubs, &rule);
        assert!(flags.iter().any(|f| f.label() == "graduation_in_future"));
    }

    #[test]
    fn assistant_rank_is_exempt_from_the_full_rank_year_rule() {
        let (mut personal, impact, pubs) = consistent_profile();
        personal.faculty_rank = FacultyRank::Assistant;
        personal.tenure_status = TenureStatus::NonTenured;
        personal.phd_graduation_year = 2024;
        assert!(validate_profile(&personal, &impact, &pubs, &PlausibilityRule::default())
            .is_empty());
    }
}
