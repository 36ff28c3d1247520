//! Ledger-to-frame mapping for the audit stages.
//!
//! Column mapping, fixed per stage kind:
//! - score stages regress the 1-100 quality score under a natural-log
//!   transform (the model applies the log, so the frame stores raw scores);
//! - decision stages regress the 0/1 outcome as a linear probability model;
//! - the comments stage regresses ln(1 + unique issue count), precomputed
//!   here because a zero-issue review is a legitimate draw and the log
//!   transform inside the model requires strictly positive values.
//!
//! Regressors are the blinding indicator plus the shared identity terms.
//! Blinded trials carry all-zero indicators and a reserved pseudo level on
//! both cluster factors, so they stay in the frame as the reference arm.

use crate::design::{Gender, Prestige, RaceAnalysis, Stage, StageKind};
use crate::econometrics::{
    glm_irls, ols_fe, AnalysisFrame, EconError, Factor, Family, FitResult, ModelSpec, Transform,
};
use crate::runner::RunLedgerRecord;
use crate::terms;

/// Cluster label for blinded trials, which have no author or institution.
pub const BLINDED_CLUSTER: &str = "(blinded)";

/// One stage's regression-ready frame, with the exclusion accounting the
/// report surfaces alongside any estimate.
#[derive(Debug)]
pub struct StageFrame {
    pub stage: Stage,
    pub frame: AnalysisFrame,
    pub spec: ModelSpec,
    pub n_valid: usize,
    /// Records excluded because parsing failed; reported, never imputed.
    pub n_malformed: usize,
    /// Mean raw outcome over blinded rows: the baseline rejection rate for
    /// decision stages. None when the plan had no blinded arm.
    pub blinded_mean_raw: Option<f64>,
}

impl StageFrame {
    /// Fits the stage's own model spec to its frame.
    pub fn fit(&self) -> Result<FitResult, EconError> {
        match self.spec.family {
            Family::Ols | Family::Lpm => ols_fe(&self.frame, &self.spec),
            Family::Logistic | Family::Poisson => glm_irls(&self.frame, &self.spec),
        }
    }
}

#[derive(Debug)]
pub struct AuditFrames {
    /// Stages with at least one valid record, in canonical stage order.
    pub stages: Vec<StageFrame>,
    /// Stages whose every record failed parsing, with their record counts.
    pub unusable: Vec<(Stage, usize)>,
}

impl AuditFrames {
    pub fn stage(&self, stage: Stage) -> Option<&StageFrame> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn total_excluded(&self) -> usize {
        self.stages.iter().map(|s| s.n_malformed).sum::<usize>()
            + self.unusable.iter().map(|(_, n)| n).sum::<usize>()
    }
}

fn stage_model(stage: Stage) -> (ModelSpec, &'static str) {
    match stage.kind() {
        StageKind::Score => (
            ModelSpec::ols_fe_cluster(Transform::NaturalLog),
            "quality_score",
        ),
        StageKind::Decision => (ModelSpec::lpm_fe_cluster(), "reject_decision"),
        StageKind::Review => (
            ModelSpec::ols_fe_cluster(Transform::None),
            "ln1p_unique_issues",
        ),
    }
}

/// Raw outcome value for a valid record, on the scale `blinded_mean_raw`
/// averages (score, 0/1 decision, or issue count before the ln1p).
fn raw_outcome(record: &RunLedgerRecord) -> Option<f64> {
    match record.trial.stage.kind() {
        StageKind::Score => record.outcome.score.map(f64::from),
        StageKind::Decision => record.outcome.decision.map(f64::from),
        StageKind::Review => record.outcome.unique_issues.map(f64::from),
    }
}

/// Groups ledger records by stage and builds one analysis frame per stage.
/// Malformed records are excluded and counted; a record marked valid but
/// missing its stage's field is treated the same way rather than trusted.
pub fn audit_frames(records: &[RunLedgerRecord]) -> AuditFrames {
    let mut stages = Vec::new();
    let mut unusable = Vec::new();
    for stage in Stage::ALL {
        let stage_records: Vec<&RunLedgerRecord> =
            records.iter().filter(|r| r.trial.stage == stage).collect();
        if stage_records.is_empty() {
            continue;
        }

        let n_total = stage_records.len();
        let mut outcome = Vec::new();
        let mut non_blinded = Vec::new();
        let mut indicators: Vec<Vec<f64>> =
            vec![Vec::new(); terms::IDENTITY_TERMS.len()];
        let mut fields = Vec::new();
        let mut names = Vec::new();
        let mut institutions = Vec::new();
        let mut blinded_sum = 0.0;
        let mut blinded_n = 0usize;

        for record in &stage_records {
            let raw = match raw_outcome(record) {
                Some(v) if record.outcome.is_valid() => v,
                _ => continue,
            };
            let y = match stage.kind() {
                StageKind::Review => (1.0 + raw).ln(),
                _ => raw,
            };
            outcome.push(y);
            fields.push(record.trial.field.clone());
            match &record.trial.identity {
                Some(id) => {
                    non_blinded.push(1.0);
                    indicators[0].push(f64::from(id.prestige == Prestige::Low));
                    indicators[1].push(f64::from(id.gender == Gender::Female));
                    indicators[2].push(f64::from(id.race == RaceAnalysis::Black));
                    indicators[3].push(f64::from(id.race == RaceAnalysis::Hispanic));
                    indicators[4].push(f64::from(id.race == RaceAnalysis::Asian));
                    names.push(id.name.clone());
                    institutions.push(id.institution.clone());
                }
                None => {
                    non_blinded.push(0.0);
                    for col in indicators.iter_mut() {
                        col.push(0.0);
                    }
                    names.push(BLINDED_CLUSTER.to_string());
                    institutions.push(BLINDED_CLUSTER.to_string());
                    blinded_sum += raw;
                    blinded_n += 1;
                }
            }
        }

        let n_valid = outcome.len();
        if n_valid == 0 {
            unusable.push((stage, n_total));
            continue;
        }

        let (spec, outcome_name) = stage_model(stage);
        let mut regressors = Vec::with_capacity(1 + terms::IDENTITY_TERMS.len());
        regressors.push((terms::NON_BLINDED.to_string(), non_blinded));
        for (term, values) in terms::IDENTITY_TERMS.iter().zip(indicators) {
            regressors.push(((*term).to_string(), values));
        }
        let frame = AnalysisFrame {
            outcome_name: outcome_name.to_string(),
            outcome,
            regressors,
            fe: Some(Factor::from_labels("field", &fields)),
            cluster_a: Some(Factor::from_labels("name", &names)),
            cluster_b: Some(Factor::from_labels("institution", &institutions)),
        };
        stages.push(StageFrame {
            stage,
            frame,
            spec,
            n_valid,
            n_malformed: n_total - n_valid,
            blinded_mean_raw: (blinded_n > 0).then(|| blinded_sum / blinded_n as f64),
        });
    }
    AuditFrames { stages, unusable }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{Domain, IdentityAttributes, RaceDetailed, TrialDescriptor};
    use crate::runner::{ParsedOutcome, ProviderStamp, LEDGER_SCHEMA_VERSION};

    fn record(stage: Stage, blinded: bool, raw: &str) -> RunLedgerRecord {
        let identity = (!blinded).then(|| IdentityAttributes {
            name: "Ann North".into(),
            gender: Gender::Female,
            race_detailed: RaceDetailed::White,
            race: RaceAnalysis::White,
            institution: "State College".into(),
            prestige: Prestige::Low,
        });
        RunLedgerRecord {
            schema_version: LEDGER_SCHEMA_VERSION,
            trial: TrialDescriptor {
                trial_key: format!("{}|{blinded}|{raw}", stage.label()),
                stage,
                iteration: 1,
                blinded,
                seed: 3,
                field: "economics".into(),
                domain: Domain::Social,
                manuscript_id: "ms-economics".into(),
                identity,
            },
            prompt_sha256: "cd".repeat(32),
            requested_at: None,
            attempts: 1,
            outcome: ParsedOutcome::from_raw(stage, raw),
            provider: ProviderStamp {
                provider_kind: "mock".into(),
                model_name: "mock-oracle-v1".into(),
                temperature: 1.0,
            },
        }
    }

    #[test]
    fn stages_map_to_their_model_specs() {
        let records = vec![
            record(Stage::EditorQuality, false, "80"),
            record(Stage::EditorDeskReject, false, "0"),
            record(Stage::ReviewerReject, false, "1"),
        ];
        let frames = audit_frames(&records);
        assert_eq!(frames.stages.len(), 3);
        let eq = frames.stage(Stage::EditorQuality).unwrap();
        assert_eq!(eq.spec.family, Family::Ols);
        assert_eq!(eq.spec.transform, Transform::NaturalLog);
        assert_eq!(eq.frame.outcome[0], 80.0);
        let rr = frames.stage(Stage::ReviewerReject).unwrap();
        assert_eq!(rr.spec.family, Family::Lpm);
        assert_eq!(rr.frame.outcome[0], 1.0);
    }

    #[test]
    fn comments_outcome_is_ln1p_of_the_issue_count() {
        let raw = "Fine work.\nUNIQUE_ISSUES: 4";
        let frames = audit_frames(&[record(Stage::ReviewerComments, false, raw)]);
        let frame = &frames.stage(Stage::ReviewerComments).unwrap().frame;
        assert!((frame.outcome[0] - 5.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn blinded_rows_get_zero_indicators_and_the_pseudo_cluster() {
        let records = vec![
            record(Stage::EditorQuality, true, "85"),
            record(Stage::EditorQuality, false, "70"),
        ];
        let frames = audit_frames(&records);
        let sf = frames.stage(Stage::EditorQuality).unwrap();
        let (name, col) = &sf.frame.regressors[0];
        assert_eq!(name, terms::NON_BLINDED);
        assert_eq!(col, &vec![0.0, 1.0]);
        for (_, col) in &sf.frame.regressors[1..] {
            assert_eq!(col[0], 0.0);
        }
        // the identity row is low-prestige female white
        assert_eq!(sf.frame.regressors[1].1[1], 1.0);
        assert_eq!(sf.frame.regressors[2].1[1], 1.0);
        assert_eq!(sf.frame.regressors[3].1[1], 0.0);
        let names = sf.frame.cluster_a.as_ref().unwrap();
        assert_eq!(names.levels[names.codes[0]], BLINDED_CLUSTER);
        assert_eq!(sf.blinded_mean_raw, Some(85.0));
    }

    #[test]
    fn malformed_records_are_counted_out_not_imputed() {
        let records = vec![
            record(Stage::EditorQuality, false, "80"),
            record(Stage::EditorQuality, false, "not a score"),
            record(Stage::ReviewerReject, false, "maybe"),
        ];
        let frames = audit_frames(&records);
        let eq = frames.stage(Stage::EditorQuality).unwrap();
        assert_eq!((eq.n_valid, eq.n_malformed), (1, 1));
        // reviewer-reject had only malformed records, so no frame exists
        assert!(frames.stage(Stage::ReviewerReject).is_none());
        assert_eq!(frames.unusable, vec![(Stage::ReviewerReject, 1)]);
        assert_eq!(frames.total_excluded(), 2);
    }
}
