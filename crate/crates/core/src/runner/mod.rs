//! Trial execution: drives a plan against a provider under rate limits and
//! retries, parses stage outputs, and persists an append-only, resumable run
//! ledger. The mock oracle lives here too, so the whole pipeline can run
//! closed-loop without a network.

mod execute;
mod ledger;
mod mock;
mod parse;
mod provider;
mod reident;
mod remote;
mod throttle;

pub use execute::{execute, RunContext, RunOptions, RunSummary};
pub use ledger::{
    checkpoint_path, read_checkpoint, read_ledger, Checkpoint, LedgerWriter, RunLedgerRecord,
    LEDGER_SCHEMA_VERSION,
};
pub use mock::{
    CommentsChannel, DecisionChannel, EffectSet, MockOracle, MockOracleSpec, QualityChannel,
};
pub use parse::{
    parse_decision, parse_review, parse_score, ParseStatus, ParsedOutcome, UNIQUE_ISSUES_MARKER,
};
pub use provider::{
    ChatProvider, ProviderError, ProviderRequest, ProviderStamp, ScriptStep, ScriptedProvider,
};
pub use reident::{
    attribution_probe, reident_check, ReidentOutcome, ReidentReport, ReidentStatus,
};
pub use remote::{chat_payload, extract_chat_text, RemoteProvider, DEFAULT_API_KEY_ENV};
pub use throttle::{SharedThrottle, TokenBucket};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::DesignError;
use crate::promptkit::PromptError;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("provider configuration invalid: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("could not serialize {context}: {message}")]
    Serialize { context: String, message: String },
    #[error("ledger parse error at {path}:{line}: {message}")]
    LedgerParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("ledger schema version {found}, this build reads {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error(
        "resume mismatch at record {index}: ledger has {ledger_key:?}, plan expects {plan_key:?}"
    )]
    ResumeMismatch {
        index: usize,
        ledger_key: String,
        plan_key: String,
    },
    #[error("ledger holds {records} records but the plan has only {planned} trials")]
    LedgerAheadOfPlan { records: usize, planned: usize },
    #[error("ledger {0} already has records; pass resume to continue it or point at a fresh path")]
    LedgerExists(String),
    #[error("plan contains reviewer-stage trials but no context corpus was supplied")]
    MissingContextCorpus,
    #[error("no author list supplied for manuscript {0:?}")]
    MissingAuthorList(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    RemoteApi,
    MockOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_backoff_ms: 500,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Backoff before the attempt after `attempt` (1-based), capped at 60 s.
    pub fn backoff_after(&self, attempt: u32) -> std::time::Duration {
        let ms = self.base_backoff_ms as f64 * self.multiplier.powi(attempt as i32 - 1);
        std::time::Duration::from_millis(ms.min(60_000.0) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub provider_kind: ProviderKind,
    pub model_name: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub requests_per_minute: f64,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Chat-completion endpoint URL; required for the remote provider.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API credential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            provider_kind: ProviderKind::MockOracle,
            model_name: "mock-oracle-v1".into(),
            temperature: 1.0,
            max_in_flight: 8,
            requests_per_minute: 60_000.0,
            retry: RetryPolicy::default(),
            endpoint: None,
            api_key_env: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.max_in_flight < 1 {
            return Err(RunnerError::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.requests_per_minute > 0.0) {
            return Err(RunnerError::Config(format!(
                "requests_per_minute must be positive, got {}",
                self.requests_per_minute
            )));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(RunnerError::Config(format!(
                "temperature must be finite and non-negative, got {}",
                self.temperature
            )));
        }
        if self.retry.max_attempts < 1 {
            return Err(RunnerError::Config("retry.max_attempts must be at least 1".into()));
        }
        if !(self.retry.multiplier >= 1.0) {
            return Err(RunnerError::Config(format!(
                "retry.multiplier must be at least 1, got {}",
                self.retry.multiplier
            )));
        }
        Ok(())
    }
}
