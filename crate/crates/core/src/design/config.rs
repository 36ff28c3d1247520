//! Roster/config document: TOML with an `[audit]` section and `[[names]]`,
//! `[[institutions]]`, `[[fields]]` lists. Unknown keys are rejected so typos
//! fail loudly instead of silently running a different experiment.

use super::{
    consolidate_race, DesignError, Domain, Gender, IdentityName, Institution, Prestige,
    RaceDetailed, Roster,
};
use serde::Deserialize;
use std::path::Path;

/// Run-level knobs from the `[audit]` section.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditParams {
    /// Iterations per identity cell per stage.
    pub iterations: u32,
    /// Blinded-control iterations per field per stage.
    #[serde(default = "default_blinded_iterations")]
    pub blinded_iterations: u32,
    pub master_seed: u64,
    /// Upper bound on the total number of planned trials.
    #[serde(default = "default_max_plan_size")]
    pub max_plan_size: u64,
    /// Permits rosters that do not have the standard 40-name / 2+2-institution shape.
    #[serde(default)]
    pub allow_custom_grid: bool,
}

fn default_blinded_iterations() -> u32 {
    50
}

fn default_max_plan_size() -> u64 {
    10_000_000
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams {
            iterations: 50,
            blinded_iterations: 50,
            master_seed: 42,
            max_plan_size: default_max_plan_size(),
            allow_custom_grid: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NameRow {
    name: String,
    gender: Gender,
    race: RaceDetailed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstitutionRow {
    name: String,
    prestige: Prestige,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRow {
    name: String,
    domain: Domain,
    manuscript: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default)]
    audit: Option<AuditParams>,
    names: Vec<NameRow>,
    institutions: Vec<InstitutionRow>,
    fields: Vec<FieldRow>,
}

/// A parsed and validated roster plus its audit parameters.
#[derive(Debug, Clone)]
pub struct DesignConfig {
    pub params: AuditParams,
    pub roster: Roster,
}

impl DesignConfig {
    /// The built-in roster: 40 names, 4 institutions, 10 fields, 50 iterations.
    pub fn builtin_default() -> Self {
        load_roster_str(include_str!("default_roster.toml"))
            .expect("embedded default roster must parse")
    }
}

/// Parses and validates a roster/config document from a string.
pub fn load_roster_str(document: &str) -> Result<DesignConfig, DesignError> {
    let doc: ConfigDoc = toml::from_str(document)?;
    let params = doc.audit.unwrap_or_default();
    if params.iterations < 1 {
        return Err(DesignError::Params("iterations must be >= 1".into()));
    }
    if params.max_plan_size < 1 {
        return Err(DesignError::Params("max_plan_size must be >= 1".into()));
    }
    let roster = Roster {
        names: doc
            .names
            .into_iter()
            .map(|r| IdentityName {
                display_name: r.name,
                gender: r.gender,
                race_detailed: r.race,
                race_analysis: consolidate_race(r.race),
            })
            .collect(),
        institutions: doc
            .institutions
            .into_iter()
            .map(|r| Institution {
                name: r.name,
                prestige: r.prestige,
            })
            .collect(),
        fields: doc
            .fields
            .into_iter()
            .map(|r| super::FieldSpec {
                field_name: r.name,
                domain: r.domain,
                manuscript_id: r.manuscript,
            })
            .collect(),
    };
    roster.validate(params.allow_custom_grid)?;
    Ok(DesignConfig { params, roster })
}

/// Reads and validates a roster/config document from a file.
pub fn load_roster(path: impl AsRef<Path>) -> Result<DesignConfig, DesignError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DesignError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_roster_str(&text)
}
