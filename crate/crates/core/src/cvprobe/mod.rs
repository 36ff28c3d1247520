//! Synthetic-CV probe: generates fictional academic profiles for every
//! name x institution x field cell through a three-step prompt pipeline
//! (personal record, impact metrics, publication list), classifies the
//! PhD-granting institutions by prestige, validates internal consistency,
//! and fits the eight-column regression battery over the results.

mod dataset;
mod generate;
mod mock;
mod prestige;
mod prompts;
mod regress;
mod schema;
mod validate;

pub use dataset::{assemble_dataset, CvDataset, CvProfile};
pub use generate::{
    generate_cvs, plan_profiles, read_profile_store, read_publication_store, CvGenConfig,
    CvGenRecord, CvGenStatus, CvGenSummary, CvPlanItem, CvRunOptions, CvStep, PublicationRow,
    CV_STORE_SCHEMA_VERSION,
};
pub use mock::{CvEffects, CvFault, CvMockGenerator, CvMockSpec};
pub use prestige::{normalize_institution, PrestigeMap};
pub use prompts::{
    impact_prompt, personal_prompt, publications_prompt, personal_request_key,
    impact_request_key, publications_request_key, CV_INPUT_MARKER,
};
pub use regress::{cv_regressions, CvColumnGroup, CvFitColumn, CvRegressionSet};
pub use schema::{parse_impact, parse_personal, parse_publications};
pub use validate::{aggregate_pubs, validate_profile, ConsistencyFlag, DerivedAggregates,
    PlausibilityRule};

use crate::design::{build_cells, Domain, Gender, Prestige, RaceAnalysis, Roster};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CvError {
    #[error("cv generation config invalid: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to serialize {context}: {message}")]
    Serialize { context: String, message: String },
    #[error("store {path} line {line}: {message}")]
    StoreParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("store schema version {found} is not the supported {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("profile store exists and is non-empty; pass resume to continue it")]
    StoreExists,
    #[error(
        "resume mismatch at record {index}: store has {store_key:?}, plan expects {plan_key:?}"
    )]
    ResumeMismatch {
        index: usize,
        store_key: String,
        plan_key: String,
    },
    #[error("profile store has more records than the plan; refusing to resume")]
    StoreAheadOfPlan,
    #[error(
        "publication store is inconsistent with the profile store: {0}"
    )]
    StoreJoin(String),
    #[error("prestige map error: {0}")]
    PrestigeMap(String),
    #[error("estimation failed in column {column:?}: {source}")]
    Estimation {
        column: String,
        #[source]
        source: crate::econometrics::EconError,
    },
    #[error(transparent)]
    Design(#[from] crate::design::DesignError),
}

/// Academic rank on the synthetic CV. Wire form is the display string
/// ("Assistant Professor" etc.), matching what the prompts demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacultyRank {
    Assistant,
    Associate,
    Full,
}

impl FacultyRank {
    pub const ALL: [FacultyRank; 3] = [
        FacultyRank::Assistant,
        FacultyRank::Associate,
        FacultyRank::Full,
    ];

    pub fn display(self) -> &'static str {
        match self {
            FacultyRank::Assistant => "Assistant Professor",
            FacultyRank::Associate => "Associate Professor",
            FacultyRank::Full => "Full Professor",
        }
    }

    pub fn from_display(s: &str) -> Option<Self> {
        match s {
            "Assistant Professor" => Some(FacultyRank::Assistant),
            "Associate Professor" => Some(FacultyRank::Associate),
            "Full Professor" => Some(FacultyRank::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TenureStatus {
    Tenured,
    NonTenured,
}

impl TenureStatus {
    pub fn display(self) -> &'static str {
        match self {
            TenureStatus::Tenured => "Tenured",
            TenureStatus::NonTenured => "Non-tenured",
        }
    }

    pub fn from_display(s: &str) -> Option<Self> {
        match s {
            "Tenured" => Some(TenureStatus::Tenured),
            "Non-tenured" => Some(TenureStatus::NonTenured),
            _ => None,
        }
    }
}

/// Prestige of the PhD-granting institution after map lookup. Institutions
/// absent from the map stay Unknown; nothing ever guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhdPrestige {
    High,
    Low,
    Unknown,
}

impl fmt::Display for PhdPrestige {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhdPrestige::High => "high",
            PhdPrestige::Low => "low",
            PhdPrestige::Unknown => "unknown",
        })
    }
}

/// One name x institution x field cell of the CV grid, fully resolved so a
/// stored record is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub name: String,
    pub gender: Gender,
    pub race: RaceAnalysis,
    pub institution: String,
    pub institution_prestige: Prestige,
    pub field: String,
    pub domain: Domain,
}

/// Step-1 output: who the synthetic academic is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonalFields {
    pub phd_granting_institution: String,
    pub phd_graduation_year: i32,
    pub faculty_rank: FacultyRank,
    pub tenure_status: TenureStatus,
    pub num_publications: u32,
}

/// Step-2 output: profile-level scholarly metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactFields {
    pub total_citations: u64,
    pub h_index: u32,
    pub i10_index: u32,
    pub average_first_year_citations: f64,
    pub average_impact_factor: f64,
}

/// Step-3 output: one synthetic publication. `journal_impact_factor` is None
/// where the response said NA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub co_authors: Vec<String>,
    pub topic: String,
    pub journal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub journal_impact_factor: Option<f64>,
    pub year: i32,
    pub citations_first_year: u32,
}

/// Grid enumeration for the probe: every identity cell of the roster, in
/// roster order. The audit's blinded arm has no CV counterpart.
pub fn cv_cells(roster: &Roster) -> Vec<CvCell> {
    build_cells(roster)
        .into_iter()
        .map(|c| {
            let name = &roster.names[c.name];
            let inst = &roster.institutions[c.institution];
            let field = &roster.fields[c.field];
            CvCell {
                name: name.display_name.clone(),
                gender: name.gender,
                race: name.race_analysis,
                institution: inst.name.clone(),
                institution_prestige: inst.prestige,
                field: field.field_name.clone(),
                domain: field.domain,
            }
        })
        .collect()
}

/// Canonical store key for one profile, unique per cell and replicate.
pub fn profile_key(cell: &CvCell, replicate: u32) -> String {
    profile_key_parts(&cell.name, &cell.institution, &cell.field, replicate)
}

/// Same key built from raw strings, for callers that only have payload text.
pub fn profile_key_parts(name: &str, institution: &str, field: &str, replicate: u32) -> String {
    format!("cv|name={name}|inst={institution}|field={field}|rep={replicate}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignConfig;

    #[test]
    fn builtin_roster_yields_1600_cv_cells() {
        let config = DesignConfig::builtin_default();
        let cells = cv_cells(&config.roster);
        assert_eq!(cells.len(), 1600);
        // every cell is unique under the store key
        let mut keys: Vec<String> = cells.iter().map(|c| profile_key(c, 1)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 1600);
    }

    #[test]
    fn rank_and_tenure_round_trip_their_display_strings() {
        for rank in FacultyRank::ALL {
            assert_eq!(FacultyRank::from_display(rank.display()), Some(rank));
        }
        assert_eq!(FacultyRank::from_display("Professor"), None);
        for status in [TenureStatus::Tenured, TenureStatus::NonTenured] {
            assert_eq!(TenureStatus::from_display(status.display()), Some(status));
        }
        assert_eq!(TenureStatus::from_display("tenured"), None);
    }
}
