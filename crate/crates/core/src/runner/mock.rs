//! Deterministic mock oracle with configurable injected bias. The latent
//! structure mirrors the estimands the analysis stage targets, so a run
//! against the mock is a closed-loop check of the whole pipeline: inject a
//! known effect, run, estimate, compare.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{Gender, Prestige, RaceAnalysis, Stage, StageKind, TrialDescriptor};

use super::provider::{ChatProvider, ProviderError, ProviderRequest, ProviderStamp};

/// Additive shifts on a channel's latent scale, keyed by trial attribute.
/// Quality channels are shifted on log-score, decision channels on log-odds,
/// the comments channel on log-mean. Unset attributes contribute zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectSet {
    pub blinded: f64,
    pub non_blinded: f64,
    pub low_prestige: f64,
    pub female: f64,
    pub black: f64,
    pub hispanic: f64,
    pub asian: f64,
    pub field: BTreeMap<String, f64>,
}

impl EffectSet {
    /// Sum of effects active for this trial. Identity effects apply only to
    /// non-blinded trials; field effects apply to every trial in the field.
    pub fn total_for(&self, trial: &TrialDescriptor) -> f64 {
        let mut total = *self.field.get(&trial.field).unwrap_or(&0.0);
        if trial.blinded {
            total += self.blinded;
            return total;
        }
        total += self.non_blinded;
        if let Some(identity) = &trial.identity {
            if identity.prestige == Prestige::Low {
                total += self.low_prestige;
            }
            if identity.gender == Gender::Female {
                total += self.female;
            }
            total += match identity.race {
                RaceAnalysis::Black => self.black,
                RaceAnalysis::Hispanic => self.hispanic,
                RaceAnalysis::Asian => self.asian,
                RaceAnalysis::White => 0.0,
            };
        }
        total
    }
}

/// Score channel: emits round(clamp(exp(latent), 1, 100)) where
/// latent = base_log_score + effects + Normal(0, noise_sd).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityChannel {
    pub base_log_score: f64,
    pub noise_sd: f64,
    #[serde(default)]
    pub effects: EffectSet,
}

/// Decision channel: emits Bernoulli(sigmoid(logit(base_rate) + effects)),
/// "1" for the reject outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionChannel {
    pub base_rate: f64,
    #[serde(default)]
    pub effects: EffectSet,
}

impl DecisionChannel {
    /// Log-odds shift that moves `base_rate` by `delta_pp` (in probability
    /// points, e.g. -0.017). Handy for calibrating injected decision effects
    /// to a target percentage-point gap.
    pub fn shift_for_probability_delta(base_rate: f64, delta_pp: f64) -> f64 {
        logit(base_rate + delta_pp) - logit(base_rate)
    }
}

/// Comments channel: issue count ~ Poisson(exp(ln(mean_issues) + effects)),
/// wrapped in templated review text ending with the marker line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentsChannel {
    pub mean_issues: f64,
    #[serde(default)]
    pub effects: EffectSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockOracleSpec {
    pub editor_quality: QualityChannel,
    pub editor_desk_reject: DecisionChannel,
    pub reviewer_quality: QualityChannel,
    pub reviewer_comments: CommentsChannel,
    pub reviewer_reject: DecisionChannel,
}

impl Default for MockOracleSpec {
    /// Neutral spec: plausible interior base levels, no injected effects.
    fn default() -> Self {
        MockOracleSpec {
            editor_quality: QualityChannel {
                base_log_score: 82.0f64.ln(),
                noise_sd: 0.3,
                effects: EffectSet::default(),
            },
            editor_desk_reject: DecisionChannel {
                base_rate: 0.031,
                effects: EffectSet::default(),
            },
            reviewer_quality: QualityChannel {
                base_log_score: 72.0f64.ln(),
                noise_sd: 0.3,
                effects: EffectSet::default(),
            },
            reviewer_comments: CommentsChannel {
                mean_issues: 8.0,
                effects: EffectSet::default(),
            },
            reviewer_reject: DecisionChannel {
                base_rate: 0.067,
                effects: EffectSet::default(),
            },
        }
    }
}

impl MockOracleSpec {
    /// A spec with small identity effects on every channel, for demo runs
    /// where the analysis tables should show something nonzero.
    pub fn demo() -> Self {
        let mut spec = MockOracleSpec::default();
        spec.editor_quality.effects.low_prestige = -0.016;
        spec.editor_quality.effects.female = -0.007;
        spec.editor_quality.effects.black = -0.010;
        spec.editor_quality.effects.hispanic = -0.006;
        spec.editor_quality.noise_sd = 0.10;
        spec.reviewer_quality.effects.low_prestige = -0.012;
        spec.reviewer_quality.noise_sd = 0.10;
        spec.editor_desk_reject.effects.low_prestige =
            DecisionChannel::shift_for_probability_delta(0.031, 0.004);
        spec.reviewer_reject.effects.non_blinded =
            DecisionChannel::shift_for_probability_delta(0.067, -0.017);
        spec.reviewer_comments.effects.low_prestige = 0.02;
        spec
    }

    pub fn validate(&self) -> Result<(), String> {
        for (label, ch) in [
            ("editor_desk_reject", &self.editor_desk_reject),
            ("reviewer_reject", &self.reviewer_reject),
        ] {
            if !(ch.base_rate > 0.0 && ch.base_rate < 1.0) {
                return Err(format!(
                    "{label}.base_rate must lie strictly inside (0, 1), got {}",
                    ch.base_rate
                ));
            }
        }
        for (label, ch) in [
            ("editor_quality", &self.editor_quality),
            ("reviewer_quality", &self.reviewer_quality),
        ] {
            if !(ch.noise_sd >= 0.0 && ch.noise_sd.is_finite()) {
                return Err(format!(
                    "{label}.noise_sd must be finite and non-negative, got {}",
                    ch.noise_sd
                ));
            }
        }
        if !(self.reviewer_comments.mean_issues > 0.0) {
            return Err(format!(
                "reviewer_comments.mean_issues must be positive, got {}",
                self.reviewer_comments.mean_issues
            ));
        }
        Ok(())
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct MockOracle {
    pub spec: MockOracleSpec,
    pub temperature: f64,
}

impl MockOracle {
    pub fn new(spec: MockOracleSpec) -> Result<Self, String> {
        spec.validate()?;
        Ok(MockOracle {
            spec,
            temperature: 1.0,
        })
    }

    /// RNG stream for one (trial, attempt) pair. Attempts get fresh streams
    /// so a retry re-samples instead of replaying the same answer.
    fn rng_for(trial_seed: u64, attempt: u32) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"revaudit.mock.v1|");
        h.update(trial_seed.to_le_bytes());
        h.update(b"|");
        h.update(attempt.to_le_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    /// Noise-free latent log-score for a quality-stage trial. Exposed so that
    /// calibration checks can verify injected group gaps exactly.
    pub fn systematic_latent(&self, trial: &TrialDescriptor) -> Option<f64> {
        let ch = match trial.stage {
            Stage::EditorQuality => &self.spec.editor_quality,
            Stage::ReviewerQuality => &self.spec.reviewer_quality,
            _ => return None,
        };
        Some(ch.base_log_score + ch.effects.total_for(trial))
    }

    /// Reject probability for a decision-stage trial.
    pub fn decision_probability(&self, trial: &TrialDescriptor) -> Option<f64> {
        let ch = match trial.stage {
            Stage::EditorDeskReject => &self.spec.editor_desk_reject,
            Stage::ReviewerReject => &self.spec.reviewer_reject,
            _ => return None,
        };
        Some(sigmoid(logit(ch.base_rate) + ch.effects.total_for(trial)))
    }

    /// Poisson mean of the unique-issue count for a comments-stage trial.
    pub fn expected_issue_mean(&self, trial: &TrialDescriptor) -> Option<f64> {
        if trial.stage != Stage::ReviewerComments {
            return None;
        }
        let ch = &self.spec.reviewer_comments;
        Some((ch.mean_issues.ln() + ch.effects.total_for(trial)).exp())
    }

    fn respond_trial(&self, trial: &TrialDescriptor, attempt: u32) -> String {
        let mut rng = Self::rng_for(trial.seed, attempt);
        match trial.stage.kind() {
            StageKind::Score => {
                let ch = match trial.stage {
                    Stage::EditorQuality => &self.spec.editor_quality,
                    _ => &self.spec.reviewer_quality,
                };
                let mut latent = ch.base_log_score + ch.effects.total_for(trial);
                if ch.noise_sd > 0.0 {
                    let noise = Normal::new(0.0, ch.noise_sd).expect("validated noise_sd");
                    latent += noise.sample(&mut rng);
                }
                let score = latent.exp().clamp(1.0, 100.0).round() as u32;
                score.to_string()
            }
            StageKind::Decision => {
                let p = self
                    .decision_probability(trial)
                    .expect("decision stage has a probability");
                let u: f64 = rng.random();
                if u < p { "1" } else { "0" }.to_string()
            }
            StageKind::Review => {
                let mean = self
                    .expected_issue_mean(trial)
                    .expect("comments stage has a mean");
                let count = Poisson::new(mean).expect("validated mean_issues").sample(&mut rng)
                    as u32;
                review_text(&trial.field, count)
            }
        }
    }
}

/// Rotating pool of concern phrasings; selection is positional, so the text
/// for a given (field, count) never varies.
const CONCERNS: [&str; 10] = [
    "the identification strategy leans on an assumption the text never defends",
    "the sample construction drops observations without reporting how many",
    "the headline estimate is sensitive to the bandwidth choice in Table 3",
    "standard errors ignore the clustered sampling design",
    "the literature positioning overlooks closely related prior results",
    "the robustness section re-estimates only a subset of specifications",
    "a key variable is measured with error the authors acknowledge but never bound",
    "the theoretical motivation and the estimating equation are not clearly linked",
    "several figures lack confidence bands, overstating precision",
    "the conclusion generalizes beyond the population actually sampled",
];

fn review_text(field: &str, count: u32) -> String {
    let mut out = format!(
        "This manuscript takes on a question of real interest to {field}. The exposition is mostly clear, and the contribution is easy to locate."
    );
    if count == 0 {
        out.push_str("\n\nI found no substantive issues to raise.");
    } else {
        out.push_str("\n\nSubstantive concerns:");
        for i in 0..count {
            let phrase = CONCERNS[(i as usize) % CONCERNS.len()];
            out.push_str(&format!("\n{}. First, {}", i + 1, phrase));
        }
    }
    out.push_str(&format!("\nUNIQUE_ISSUES: {count}"));
    out
}

impl ChatProvider for MockOracle {
    fn respond(&self, req: &ProviderRequest<'_>) -> Result<String, ProviderError> {
        match req.trial {
            Some(trial) => Ok(self.respond_trial(trial, req.attempt)),
            // auxiliary probes (attribution checks) get a fixed refusal
            None => Ok("I cannot determine the authors.".to_string()),
        }
    }

    fn stamp(&self) -> ProviderStamp {
        ProviderStamp {
            provider_kind: "mock".into(),
            model_name: "mock-oracle-v1".into(),
            temperature: self.temperature,
        }
    }

    fn deterministic(&self) -> bool {
        true
    }
}
