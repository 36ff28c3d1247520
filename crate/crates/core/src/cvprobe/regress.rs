//! The eight-column attribute battery: for each generated career or impact
//! outcome, the same specification is fit over the profile grid so the
//! coefficients line up row-for-row across columns. Identity indicators enter
//! as regressors, field is the fixed effect, and variance is clustered two
//! ways on name and institution. The replicate index exists only to key
//! profiles; it is never a regressor.

use super::{CvDataset, CvError, CvProfile, PhdPrestige, TenureStatus};
use crate::design::{Gender, Prestige, RaceAnalysis};
use crate::econometrics::{
    glm_irls_with, ols_fe, AnalysisFrame, Factor, Family, FitResult, IrlsControl, ModelSpec,
    Transform, VcovSpec,
};
use crate::terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvColumnGroup {
    CareerAttributes,
    ResearchImpact,
}

impl CvColumnGroup {
    pub fn label(self) -> &'static str {
        match self {
            CvColumnGroup::CareerAttributes => "Career Attributes",
            CvColumnGroup::ResearchImpact => "Research Impact",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvFitColumn {
    /// 1-based table position.
    pub column: usize,
    pub outcome: String,
    pub group: CvColumnGroup,
    /// Rows dropped for this column only (unclassifiable PhD institutions in
    /// column 1, profiles with no defined derived aggregate in 6 and 8).
    pub excluded: usize,
    pub fit: FitResult,
}

#[derive(Debug, Clone)]
pub struct CvRegressionSet {
    pub columns: Vec<CvFitColumn>,
    pub n_profiles: usize,
    /// Profiles left out of column 1 because the map had no entry.
    pub unknown_prestige_excluded: usize,
}

struct ColumnPlan {
    outcome: &'static str,
    group: CvColumnGroup,
    family: Family,
    /// None marks a row excluded from this column.
    value: fn(&CvProfile) -> Option<f64>,
}

const COLUMNS: [ColumnPlan; 8] = [
    ColumnPlan {
        outcome: "PhD Inst. Prestige (1=high)",
        group: CvColumnGroup::CareerAttributes,
        family: Family::Logistic,
        value: |p| match p.phd_prestige {
            PhdPrestige::High => Some(1.0),
            PhdPrestige::Low => Some(0.0),
            PhdPrestige::Unknown => None,
        },
    },
    ColumnPlan {
        outcome: "Tenure Status (1=tenured)",
        group: CvColumnGroup::CareerAttributes,
        family: Family::Logistic,
        value: |p| {
            Some(match p.personal.tenure_status {
                TenureStatus::Tenured => 1.0,
                TenureStatus::NonTenured => 0.0,
            })
        },
    },
    ColumnPlan {
        outcome: "Publications (#)",
        group: CvColumnGroup::ResearchImpact,
        family: Family::Poisson,
        value: |p| Some(f64::from(p.personal.num_publications)),
    },
    ColumnPlan {
        outcome: "Citations (#)",
        group: CvColumnGroup::ResearchImpact,
        family: Family::Poisson,
        value: |p| Some(p.impact.total_citations as f64),
    },
    ColumnPlan {
        outcome: "1st-Year Citations (generated)",
        group: CvColumnGroup::ResearchImpact,
        family: Family::Ols,
        value: |p| Some(p.impact.average_first_year_citations),
    },
    ColumnPlan {
        outcome: "1st-Year Citations (derived)",
        group: CvColumnGroup::ResearchImpact,
        family: Family::Ols,
        value: |p| p.derived_first_year_citations,
    },
    ColumnPlan {
        outcome: "Average IF (generated)",
        group: CvColumnGroup::ResearchImpact,
        family: Family::Ols,
        value: |p| Some(p.impact.average_impact_factor),
    },
    ColumnPlan {
        outcome: "Average IF (derived)",
        group: CvColumnGroup::ResearchImpact,
        family: Family::Ols,
        value: |p| p.derived_impact_factor,
    },
];

fn indicator(profiles: &[CvProfile], term: &str) -> Vec<f64> {
    profiles
        .iter()
        .map(|p| {
            let hit = match term {
                terms::LOW_PRESTIGE => p.cell.institution_prestige == Prestige::Low,
                terms::FEMALE => p.cell.gender == Gender::Female,
                terms::BLACK => p.cell.race == RaceAnalysis::Black,
                terms::HISPANIC => p.cell.race == RaceAnalysis::Hispanic,
                terms::ASIAN => p.cell.race == RaceAnalysis::Asian,
                other => unreachable!("unknown identity term {other:?}"),
            };
            if hit {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Fits all eight columns. Column 1 silently drops Unknown-prestige rows and
/// reports the count; columns 6 and 8 drop rows whose derived aggregate is
/// undefined. Every other exclusion is a hard error upstream of this call.
pub fn cv_regressions(dataset: &CvDataset) -> Result<CvRegressionSet, CvError> {
    let profiles = &dataset.profiles;
    if profiles.is_empty() {
        return Err(CvError::Config(
            "no complete profiles to run regressions on".into(),
        ));
    }

    let regressors: Vec<(String, Vec<f64>)> = terms::IDENTITY_TERMS
        .iter()
        .map(|t| (t.to_string(), indicator(profiles, t)))
        .collect();
    let fields: Vec<&str> = profiles.iter().map(|p| p.cell.field.as_str()).collect();
    let names: Vec<&str> = profiles.iter().map(|p| p.cell.name.as_str()).collect();
    let institutions: Vec<&str> = profiles
        .iter()
        .map(|p| p.cell.institution.as_str())
        .collect();
    let base = AnalysisFrame {
        outcome_name: String::new(),
        outcome: vec![0.0; profiles.len()],
        regressors,
        fe: Some(Factor::from_labels("field", &fields)),
        cluster_a: Some(Factor::from_labels("name", &names)),
        cluster_b: Some(Factor::from_labels("institution", &institutions)),
    };

    let mut columns = Vec::with_capacity(COLUMNS.len());
    let mut unknown_prestige_excluded = 0usize;
    for (i, plan) in COLUMNS.iter().enumerate() {
        let mut rows = Vec::with_capacity(profiles.len());
        let mut outcome = Vec::with_capacity(profiles.len());
        for (row, profile) in profiles.iter().enumerate() {
            if let Some(v) = (plan.value)(profile) {
                rows.push(row);
                outcome.push(v);
            }
        }
        let excluded = profiles.len() - rows.len();
        if i == 0 {
            unknown_prestige_excluded = excluded;
        }
        let mut frame = if rows.len() == profiles.len() {
            base.clone()
        } else {
            base.subset(&rows)
        };
        frame.outcome_name = plan.outcome.to_string();
        frame.outcome = outcome;

        let spec = ModelSpec {
            family: plan.family,
            transform: Transform::None,
            include_fe: true,
            vcov: VcovSpec::TwoWayCluster,
        };
        let fit = match plan.family {
            Family::Logistic | Family::Poisson => {
                // the score is X'(y - mu), so its float-noise floor scales
                // with the outcome's total magnitude; count outcomes in the
                // thousands can never hit an absolute 1e-10
                let scale: f64 = frame.outcome.iter().map(|v| v.abs()).sum();
                let control = IrlsControl {
                    score_tol: 1e-10_f64.max(1e-12 * scale),
                    ..IrlsControl::default()
                };
                glm_irls_with(&frame, &spec, control)
            }
            Family::Ols | Family::Lpm => ols_fe(&frame, &spec),
        }
        .map_err(|source| CvError::Estimation {
            column: plan.outcome.to_string(),
            source,
        })?;
        columns.push(CvFitColumn {
            column: i + 1,
            outcome: plan.outcome.to_string(),
            group: plan.group,
            excluded,
            fit,
        });
    }

    Ok(CvRegressionSet {
        columns,
        n_profiles: profiles.len(),
        unknown_prestige_excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{CvCell, FacultyRank, ImpactFields, PersonalFields};
    use super::*;
    use crate::design::Domain;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn synthetic_profiles(n_per_cell: usize, all_tenured: bool) -> Vec<CvProfile> {
        let mut rng = StdRng::seed_from_u64(11);
        // both genders within every race, so the indicators stay independent
        let names = [
            "Ann North", "Ben South", "Cara East", "Dan West", "Eve Hill", "Fred Vale",
            "Gia Marsh", "Hal Stone",
        ];
        let institutions = [("Apex University", Prestige::High), ("Bay College", Prestige::Low)];
        let fields = ["Economics", "Physics"];
        let genders = [Gender::Female, Gender::Male];
        let races = [
            RaceAnalysis::White,
            RaceAnalysis::Black,
            RaceAnalysis::Hispanic,
            RaceAnalysis::Asian,
        ];
        let mut out = Vec::new();
        for (ni, name) in names.iter().enumerate() {
            for (inst, prestige) in institutions {
                for field in fields {
                    for rep in 0..n_per_cell {
                        let pubs = rng.random_range(6..30) as u32;
                        let tenured = all_tenured || rng.random::<f64>() < 0.5;
                        let high_phd = rng.random::<f64>() < 0.5;
                        out.push(CvProfile {
                            profile_key: format!("{name}|{inst}|{field}|{rep}"),
                            index: out.len() as u64,
                            cell: CvCell {
                                name: name.to_string(),
                                gender: genders[ni % 2],
                                race: races[ni / 2],
                                institution: inst.to_string(),
                                institution_prestige: prestige,
                                field: field.to_string(),
                                domain: Domain::Social,
                            },
                            replicate: rep as u32 + 1,
                            personal: PersonalFields {
                                phd_granting_institution: "X".into(),
                                phd_graduation_year: 2010,
                                faculty_rank: FacultyRank::Associate,
                                tenure_status: if tenured {
                                    TenureStatus::Tenured
                                } else {
                                    TenureStatus::NonTenured
                                },
                                num_publications: pubs,
                            },
                            impact: ImpactFields {
                                total_citations: (pubs * 60) as u64,
                                h_index: 10,
                                i10_index: 9,
                                average_first_year_citations: rng.random_range(4.0..14.0),
                                average_impact_factor: rng.random_range(1.0..5.0),
                            },
                            publications: Vec::new(),
                            phd_prestige: if high_phd {
                                PhdPrestige::High
                            } else {
                                PhdPrestige::Low
                            },
                            derived_first_year_citations: Some(rng.random_range(4.0..14.0)),
                            derived_impact_factor: if rng.random::<f64>() < 0.9 {
                                Some(rng.random_range(1.0..5.0))
                            } else {
                                None
                            },
                            na_impact_factors: 0,
                            shortfall: 0,
                            flags: Vec::new(),
                        });
                    }
                }
            }
        }
        out
    }

    fn dataset(profiles: Vec<CvProfile>) -> CvDataset {
        CvDataset {
            profiles,
            malformed: Vec::new(),
            unknown_institutions: Default::default(),
            unknown_prestige: 0,
            flag_counts: Default::default(),
            flagged_profiles: 0,
            shortfall_profiles: 0,
        }
    }

    #[test]
    fn eight_columns_in_table_order() {
        let set = cv_regressions(&dataset(synthetic_profiles(6, false))).unwrap();
        assert_eq!(set.columns.len(), 8);
        let families: Vec<Family> = set.columns.iter().map(|c| c.fit.family).collect();
        assert_eq!(
            families,
            vec![
                Family::Logistic,
                Family::Logistic,
                Family::Poisson,
                Family::Poisson,
                Family::Ols,
                Family::Ols,
                Family::Ols,
                Family::Ols,
            ]
        );
        assert_eq!(set.columns[0].group, CvColumnGroup::CareerAttributes);
        assert_eq!(set.columns[1].group, CvColumnGroup::CareerAttributes);
        for col in &set.columns[2..] {
            assert_eq!(col.group, CvColumnGroup::ResearchImpact);
        }
        for (i, col) in set.columns.iter().enumerate() {
            assert_eq!(col.column, i + 1);
        }
    }

    #[test]
    fn identity_terms_and_nothing_else_are_regressors() {
        let set = cv_regressions(&dataset(synthetic_profiles(6, false))).unwrap();
        for col in &set.columns {
            for term in terms::IDENTITY_TERMS {
                assert!(col.fit.coefficient(term).is_some(), "{term} missing");
            }
            assert!(
                !col.fit.terms.iter().any(|t| t.contains("replicate")),
                "replicate leaked into the design"
            );
        }
    }

    #[test]
    fn unknown_prestige_rows_leave_column_one_only() {
        let mut profiles = synthetic_profiles(6, false);
        let total = profiles.len();
        for p in profiles.iter_mut().take(7) {
            p.phd_prestige = PhdPrestige::Unknown;
        }
        let set = cv_regressions(&dataset(profiles)).unwrap();
        assert_eq!(set.unknown_prestige_excluded, 7);
        assert_eq!(set.columns[0].excluded, 7);
        assert_eq!(set.columns[0].fit.n_obs, total - 7);
        assert_eq!(set.columns[1].excluded, 0);
        assert_eq!(set.columns[1].fit.n_obs, total);
    }

    #[test]
    fn undefined_derived_aggregates_shrink_their_columns() {
        let profiles = synthetic_profiles(6, false);
        let missing = profiles
            .iter()
            .filter(|p| p.derived_impact_factor.is_none())
            .count();
        assert!(missing > 0, "test fixture should hold some undefined rows");
        let total = profiles.len();
        let set = cv_regressions(&dataset(profiles)).unwrap();
        assert_eq!(set.columns[7].excluded, missing);
        assert_eq!(set.columns[7].fit.n_obs, total - missing);
        assert_eq!(set.columns[6].excluded, 0);
    }

    #[test]
    fn degenerate_tenure_outcome_is_surfaced_not_papered_over() {
        let err = cv_regressions(&dataset(synthetic_profiles(4, true))).unwrap_err();
        match err {
            CvError::Estimation { column, .. } => {
                assert!(column.starts_with("Tenure"), "failed in {column:?}")
            }
            other => panic!("expected an estimation error, got {other:?}"),
        }
    }
}
