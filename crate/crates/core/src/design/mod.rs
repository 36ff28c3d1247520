//! Experimental design: identity roster, institutions, fields, manuscripts,
//! and deterministic enumeration of the full factorial trial plan.

mod config;
mod manuscripts;

pub use config::{load_roster, load_roster_str, AuditParams, DesignConfig};
pub use manuscripts::{load_manuscripts, scan_deny_list, DenyList, Manuscript, ManuscriptSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("duplicate author name in roster: {0:?}")]
    DuplicateName(String),
    #[error("duplicate institution in roster: {0:?}")]
    DuplicateInstitution(String),
    #[error("duplicate field in roster: {0:?}")]
    DuplicateField(String),
    #[error("field {field:?} and {other:?} are both bound to manuscript {manuscript:?}")]
    DuplicateManuscriptBinding {
        field: String,
        other: String,
        manuscript: String,
    },
    #[error("roster section {0} is empty")]
    EmptySection(&'static str),
    #[error(
        "{0}; set allow_custom_grid = true to run a non-standard roster on purpose"
    )]
    GridShape(String),
    #[error("audit parameters invalid: {0}")]
    Params(String),
    #[error("planned {planned} trials, exceeding the budget cap of {cap}")]
    PlanBudget { planned: u64, cap: u64 },
    #[error("derived seeds collide for trials {a:?} and {b:?}; change the master seed")]
    SeedCollision { a: String, b: String },
    #[error("manuscript manifest error: {0}")]
    Manifest(String),
    #[error("de-identification check failed for {id:?}: {terms:?} found in {place}")]
    DenyListHit {
        id: String,
        terms: Vec<String>,
        place: &'static str,
    },
}

/// Gender signalled by a synthetic author name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

/// Race/ethnicity category as declared in the roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaceDetailed {
    AsianAmerican,
    Black,
    Hispanic,
    White,
    Chinese,
    Indian,
}

/// Consolidated race category used in estimation. Asian American, Chinese,
/// and Indian collapse into a single Asian category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaceAnalysis {
    Asian,
    Black,
    Hispanic,
    White,
}

impl RaceAnalysis {
    pub fn label(self) -> &'static str {
        match self {
            RaceAnalysis::Asian => "asian",
            RaceAnalysis::Black => "black",
            RaceAnalysis::Hispanic => "hispanic",
            RaceAnalysis::White => "white",
        }
    }
}

/// Deterministic mapping from the detailed roster category to the analysis category.
pub fn consolidate_race(detailed: RaceDetailed) -> RaceAnalysis {
    match detailed {
        RaceDetailed::AsianAmerican | RaceDetailed::Chinese | RaceDetailed::Indian => {
            RaceAnalysis::Asian
        }
        RaceDetailed::Black => RaceAnalysis::Black,
        RaceDetailed::Hispanic => RaceAnalysis::Hispanic,
        RaceDetailed::White => RaceAnalysis::White,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prestige {
    High,
    Low,
}

impl Prestige {
    pub fn label(self) -> &'static str {
        match self {
            Prestige::High => "high",
            Prestige::Low => "low",
        }
    }
}

/// Broad scientific domain a field belongs to; used for stratified re-estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Physical,
    Biological,
    Social,
}

impl Domain {
    pub fn label(self) -> &'static str {
        match self {
            Domain::Physical => "physical",
            Domain::Biological => "biological",
            Domain::Social => "social",
        }
    }
}

/// One synthetic author identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityName {
    pub display_name: String,
    pub gender: Gender,
    pub race_detailed: RaceDetailed,
    pub race_analysis: RaceAnalysis,
}

impl IdentityName {
    pub fn new(display_name: impl Into<String>, gender: Gender, race: RaceDetailed) -> Self {
        Self {
            display_name: display_name.into(),
            gender,
            race_detailed: race,
            race_analysis: consolidate_race(race),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Institution {
    pub name: String,
    pub prestige: Prestige,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub field_name: String,
    pub domain: Domain,
    pub manuscript_id: String,
}

/// Validated roster: declaration order is the canonical order everywhere downstream.
#[derive(Debug, Clone)]
pub struct Roster {
    pub names: Vec<IdentityName>,
    pub institutions: Vec<Institution>,
    pub fields: Vec<FieldSpec>,
}

impl Roster {
    /// Validates uniqueness constraints; the standard grid-shape constraints
    /// (40 names in fixed category counts, 2+2 institutions) apply unless
    /// `allow_custom_grid` is set.
    pub fn validate(&self, allow_custom_grid: bool) -> Result<(), DesignError> {
        if self.names.is_empty() {
            return Err(DesignError::EmptySection("names"));
        }
        if self.institutions.is_empty() {
            return Err(DesignError::EmptySection("institutions"));
        }
        if self.fields.is_empty() {
            return Err(DesignError::EmptySection("fields"));
        }

        let mut seen = HashSet::new();
        for n in &self.names {
            if !seen.insert(n.display_name.as_str()) {
                return Err(DesignError::DuplicateName(n.display_name.clone()));
            }
            if n.race_analysis != consolidate_race(n.race_detailed) {
                return Err(DesignError::GridShape(format!(
                    "name {:?} has analysis race {:?}, expected {:?}",
                    n.display_name,
                    n.race_analysis,
                    consolidate_race(n.race_detailed)
                )));
            }
        }
        let mut seen = HashSet::new();
        for i in &self.institutions {
            if !seen.insert(i.name.as_str()) {
                return Err(DesignError::DuplicateInstitution(i.name.clone()));
            }
        }
        let mut seen = HashSet::new();
        let mut ms_owner: Vec<(&str, &str)> = Vec::new();
        for f in &self.fields {
            if !seen.insert(f.field_name.as_str()) {
                return Err(DesignError::DuplicateField(f.field_name.clone()));
            }
            if let Some((other, _)) = ms_owner
                .iter()
                .find(|(_, ms)| *ms == f.manuscript_id.as_str())
            {
                return Err(DesignError::DuplicateManuscriptBinding {
                    field: f.field_name.clone(),
                    other: (*other).to_string(),
                    manuscript: f.manuscript_id.clone(),
                });
            }
            ms_owner.push((f.field_name.as_str(), f.manuscript_id.as_str()));
        }

        if !allow_custom_grid {
            self.validate_standard_shape()?;
        }
        Ok(())
    }

    fn validate_standard_shape(&self) -> Result<(), DesignError> {
        use RaceDetailed::*;
        let expect: &[(RaceDetailed, usize)] = &[
            (AsianAmerican, 4),
            (Black, 4),
            (Hispanic, 4),
            (White, 4),
            (Chinese, 2),
            (Indian, 2),
        ];
        for &(race, per_gender) in expect {
            for gender in [Gender::Female, Gender::Male] {
                let got = self
                    .names
                    .iter()
                    .filter(|n| n.race_detailed == race && n.gender == gender)
                    .count();
                if got != per_gender {
                    return Err(DesignError::GridShape(format!(
                        "expected {per_gender} {} names for {race:?}, found {got}",
                        gender.label()
                    )));
                }
            }
        }
        let high = self
            .institutions
            .iter()
            .filter(|i| i.prestige == Prestige::High)
            .count();
        let low = self.institutions.len() - high;
        if high != 2 || low != 2 {
            return Err(DesignError::GridShape(format!(
                "expected 2 high-prestige and 2 low-prestige institutions, found {high} high / {low} low"
            )));
        }
        Ok(())
    }

    pub fn field_index(&self, field_name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.field_name == field_name)
    }
}

/// The five staged prompts of the simulated review process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    EditorQuality,
    EditorDeskReject,
    ReviewerQuality,
    ReviewerComments,
    ReviewerReject,
}

/// What kind of model output a stage elicits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    /// Integer quality score 1-100.
    Score,
    /// Binary 0/1 decision.
    Decision,
    /// Free-text review ending in a unique-issue count.
    Review,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::EditorQuality,
        Stage::EditorDeskReject,
        Stage::ReviewerQuality,
        Stage::ReviewerComments,
        Stage::ReviewerReject,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::EditorQuality => "editor_quality",
            Stage::EditorDeskReject => "editor_desk_reject",
            Stage::ReviewerQuality => "reviewer_quality",
            Stage::ReviewerComments => "reviewer_comments",
            Stage::ReviewerReject => "reviewer_reject",
        }
    }

    pub fn kind(self) -> StageKind {
        match self {
            Stage::EditorQuality | Stage::ReviewerQuality => StageKind::Score,
            Stage::EditorDeskReject | Stage::ReviewerReject => StageKind::Decision,
            Stage::ReviewerComments => StageKind::Review,
        }
    }

    /// Reviewer stages carry the field-calibrated context block; editor stages do not.
    pub fn is_reviewer(self) -> bool {
        matches!(
            self,
            Stage::ReviewerQuality | Stage::ReviewerComments | Stage::ReviewerReject
        )
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One point of the name x institution x field grid, as indices into the roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub name: usize,
    pub institution: usize,
    pub field: usize,
}

/// Either a full identity cell or the blinded control arm for one field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellRef {
    Identity(Cell),
    Blinded { field: usize },
}

impl CellRef {
    pub fn field(&self) -> usize {
        match self {
            CellRef::Identity(c) => c.field,
            CellRef::Blinded { field } => *field,
        }
    }

    pub fn is_blinded(&self) -> bool {
        matches!(self, CellRef::Blinded { .. })
    }
}

/// One scheduled prompt execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub cell: CellRef,
    /// 1-based iteration index within the cell and stage.
    pub iteration: u32,
    pub stage: Stage,
    pub blinded: bool,
    pub seed: u64,
}

/// Fully resolved trial attributes, self-contained for the run ledger and the
/// mock oracle. `identity` is `None` on blinded-control trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDescriptor {
    pub trial_key: String,
    pub stage: Stage,
    pub iteration: u32,
    pub blinded: bool,
    pub seed: u64,
    pub field: String,
    pub domain: Domain,
    pub manuscript_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentityAttributes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityAttributes {
    pub name: String,
    pub gender: Gender,
    pub race_detailed: RaceDetailed,
    pub race: RaceAnalysis,
    pub institution: String,
    pub prestige: Prestige,
}

impl TrialPlan {
    /// Canonical, human-readable key identifying this trial within a run.
    pub fn trial_key(&self, roster: &Roster) -> String {
        match self.cell {
            CellRef::Identity(c) => format!(
                "{}|name={}|inst={}|field={}|iter={}",
                self.stage.label(),
                roster.names[c.name].display_name,
                roster.institutions[c.institution].name,
                roster.fields[c.field].field_name,
                self.iteration
            ),
            CellRef::Blinded { field } => format!(
                "{}|blinded|field={}|iter={}",
                self.stage.label(),
                roster.fields[field].field_name,
                self.iteration
            ),
        }
    }

    pub fn resolve(&self, roster: &Roster) -> TrialDescriptor {
        let field = &roster.fields[self.cell.field()];
        let identity = match self.cell {
            CellRef::Identity(c) => {
                let name = &roster.names[c.name];
                let inst = &roster.institutions[c.institution];
                Some(IdentityAttributes {
                    name: name.display_name.clone(),
                    gender: name.gender,
                    race_detailed: name.race_detailed,
                    race: name.race_analysis,
                    institution: inst.name.clone(),
                    prestige: inst.prestige,
                })
            }
            CellRef::Blinded { .. } => None,
        };
        TrialDescriptor {
            trial_key: self.trial_key(roster),
            stage: self.stage,
            iteration: self.iteration,
            blinded: self.blinded,
            seed: self.seed,
            field: field.field_name.clone(),
            domain: field.domain,
            manuscript_id: field.manuscript_id.clone(),
            identity,
        }
    }
}

/// Cartesian product of names x institutions x fields in declaration order
/// (names vary slowest, fields fastest).
pub fn build_cells(roster: &Roster) -> Vec<Cell> {
    let mut cells =
        Vec::with_capacity(roster.names.len() * roster.institutions.len() * roster.fields.len());
    for name in 0..roster.names.len() {
        for institution in 0..roster.institutions.len() {
            for field in 0..roster.fields.len() {
                cells.push(Cell {
                    name,
                    institution,
                    field,
                });
            }
        }
    }
    cells
}

/// Derives the replay-stable per-trial seed from the run-level master seed.
pub fn derive_trial_seed(master_seed: u64, stage: Stage, cell_key: &str, iteration: u32) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"revaudit.trial.v1|");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(b"|");
    hasher.update(stage.label().as_bytes());
    hasher.update(b"|");
    hasher.update(cell_key.as_bytes());
    hasher.update(b"|");
    hasher.update(iteration.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn cell_seed_key(roster: &Roster, cell: CellRef) -> String {
    match cell {
        CellRef::Identity(c) => format!(
            "name={};inst={};field={}",
            roster.names[c.name].display_name,
            roster.institutions[c.institution].name,
            roster.fields[c.field].field_name
        ),
        CellRef::Blinded { field } => {
            format!("blinded;field={}", roster.fields[field].field_name)
        }
    }
}

/// Enumerates the full trial plan, stage-major: for each stage, every cell for
/// `iterations` iterations, then the blinded-control arm for every field for
/// `blinded_iterations` iterations. Order is deterministic and seeds are
/// derived from the master seed, so two enumerations with equal inputs are
/// identical.
pub fn enumerate_trials(
    roster: &Roster,
    cells: &[Cell],
    iterations: u32,
    stages: &[Stage],
    blinded_iterations: u32,
    master_seed: u64,
    budget_cap: u64,
) -> Result<Vec<TrialPlan>, DesignError> {
    if iterations < 1 {
        return Err(DesignError::Params("iterations must be >= 1".into()));
    }
    let per_stage = (cells.len() as u64)
        .checked_mul(iterations as u64)
        .and_then(|n| {
            n.checked_add((roster.fields.len() as u64).checked_mul(blinded_iterations as u64)?)
        })
        .ok_or(DesignError::PlanBudget {
            planned: u64::MAX,
            cap: budget_cap,
        })?;
    let total = per_stage
        .checked_mul(stages.len() as u64)
        .ok_or(DesignError::PlanBudget {
            planned: u64::MAX,
            cap: budget_cap,
        })?;
    if total > budget_cap {
        return Err(DesignError::PlanBudget {
            planned: total,
            cap: budget_cap,
        });
    }

    let mut plans = Vec::with_capacity(total as usize);
    let mut seen_seeds: std::collections::HashMap<u64, usize> =
        std::collections::HashMap::with_capacity(total as usize);
    for &stage in stages {
        for &cell in cells {
            let cell_ref = CellRef::Identity(cell);
            let key = cell_seed_key(roster, cell_ref);
            for iteration in 1..=iterations {
                plans.push(TrialPlan {
                    cell: cell_ref,
                    iteration,
                    stage,
                    blinded: false,
                    seed: derive_trial_seed(master_seed, stage, &key, iteration),
                });
            }
        }
        for field in 0..roster.fields.len() {
            let cell_ref = CellRef::Blinded { field };
            let key = cell_seed_key(roster, cell_ref);
            for iteration in 1..=blinded_iterations {
                plans.push(TrialPlan {
                    cell: cell_ref,
                    iteration,
                    stage,
                    blinded: true,
                    seed: derive_trial_seed(master_seed, stage, &key, iteration),
                });
            }
        }
    }

    for (idx, plan) in plans.iter().enumerate() {
        if let Some(prev) = seen_seeds.insert(plan.seed, idx) {
            return Err(DesignError::SeedCollision {
                a: plans[prev].trial_key(roster),
                b: plan.trial_key(roster),
            });
        }
    }
    Ok(plans)
}
