//! The provider abstraction: anything that can answer a rendered prompt.
//! Implementations must be shareable across worker threads.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::{Stage, TrialDescriptor};

/// One outbound request. `trial` is present for audit trials (the mock oracle
/// reads identity attributes from it) and absent for auxiliary probes.
#[derive(Debug, Clone, Copy)]
pub struct ProviderRequest<'a> {
    pub key: &'a str,
    pub prompt: &'a str,
    /// 1-based attempt number; retries re-sample rather than replay.
    pub attempt: u32,
    pub trial: Option<&'a TrialDescriptor>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderError {
    Transport(String),
    Auth(String),
    Api { status: u16, body: String },
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProviderError::Transport(msg) => write!(f, "transport error: {msg}"),
            ProviderError::Auth(msg) => write!(f, "authentication error: {msg}"),
            ProviderError::Api { status, body } => {
                write!(f, "API error (status {status}): {body}")
            }
        }
    }
}

impl std::error::Error for ProviderError {}

/// Provenance stamped into every ledger record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderStamp {
    pub provider_kind: String,
    pub model_name: String,
    pub temperature: f64,
}

pub trait ChatProvider: Send + Sync {
    fn respond(&self, req: &ProviderRequest<'_>) -> Result<String, ProviderError>;

    fn stamp(&self) -> ProviderStamp;

    /// Deterministic providers yield identical output for identical requests;
    /// the ledger omits wall-clock timestamps for them so replays are
    /// byte-identical.
    fn deterministic(&self) -> bool {
        false
    }
}

/// A scripted step for fault injection.
#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStep {
    Reply(String),
    Fail(String),
}

/// Fault-injection provider: per-key attempt scripts with a stage-keyed
/// fallback. Used to exercise retry, malformed-exhaustion, and attribution
/// paths without a network.
pub struct ScriptedProvider {
    scripts: HashMap<String, Vec<ScriptStep>>,
    fallback: Box<dyn Fn(Option<Stage>, &str) -> String + Send + Sync>,
}

impl ScriptedProvider {
    /// `fallback(stage, key)` answers any request without a script.
    pub fn new(fallback: impl Fn(Option<Stage>, &str) -> String + Send + Sync + 'static) -> Self {
        ScriptedProvider {
            scripts: HashMap::new(),
            fallback: Box::new(fallback),
        }
    }

    /// Well-formed constant answers per stage: useful when only the plumbing
    /// is under test.
    pub fn well_formed() -> Self {
        Self::new(|stage, _| match stage.map(Stage::kind) {
            Some(crate::design::StageKind::Score) => "77".to_string(),
            Some(crate::design::StageKind::Decision) => "0".to_string(),
            Some(crate::design::StageKind::Review) => {
                "The argument is sound overall.\nUNIQUE_ISSUES: 2".to_string()
            }
            None => "I cannot determine the authors.".to_string(),
        })
    }

    /// Scripts the given key: attempt n consumes step n-1; attempts beyond
    /// the script repeat the final step.
    pub fn script(mut self, key: impl Into<String>, steps: Vec<ScriptStep>) -> Self {
        self.scripts.insert(key.into(), steps);
        self
    }
}

impl ChatProvider for ScriptedProvider {
    fn respond(&self, req: &ProviderRequest<'_>) -> Result<String, ProviderError> {
        if let Some(steps) = self.scripts.get(req.key) {
            let idx = (req.attempt as usize).saturating_sub(1).min(steps.len() - 1);
            return match &steps[idx] {
                ScriptStep::Reply(text) => Ok(text.clone()),
                ScriptStep::Fail(cause) => Err(ProviderError::Transport(cause.clone())),
            };
        }
        let stage = req.trial.map(|t| t.stage);
        Ok((self.fallback)(stage, req.key))
    }

    fn stamp(&self) -> ProviderStamp {
        ProviderStamp {
            provider_kind: "scripted".into(),
            model_name: "scripted-fixture".into(),
            temperature: 0.0,
        }
    }

    fn deterministic(&self) -> bool {
        true
    }
}
