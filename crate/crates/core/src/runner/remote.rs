//! HTTPS chat-completion provider. One request per trial attempt; the
//! credential comes from the environment, never from config files.

use std::time::Duration;

use serde_json::{json, Value};

use super::provider::{ChatProvider, ProviderError, ProviderRequest, ProviderStamp};
use super::{ProviderConfig, RunnerError};

pub const DEFAULT_API_KEY_ENV: &str = "REVAUDIT_API_KEY";

const REQUEST_TIMEOUT: Duration = Duration::from_secs(120);

/// Request body in the common chat-completion shape.
pub fn chat_payload(model: &str, temperature: f64, prompt: &str) -> Value {
    json!({
        "model": model,
        "temperature": temperature,
        "messages": [{ "role": "user", "content": prompt }],
    })
}

/// Pulls the first choice's message text out of a chat-completion response.
pub fn extract_chat_text(body: &Value) -> Result<String, ProviderError> {
    body.get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(|t| t.as_str())
        .map(|s| s.to_string())
        .ok_or_else(|| ProviderError::Transport("response missing choices[0].message.content".into()))
}

pub struct RemoteProvider {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    model: String,
    temperature: f64,
}

impl RemoteProvider {
    pub fn from_config(config: &ProviderConfig) -> Result<RemoteProvider, RunnerError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| RunnerError::Config("remote provider requires an endpoint URL".into()))?;
        let env_var = config
            .api_key_env
            .clone()
            .unwrap_or_else(|| DEFAULT_API_KEY_ENV.to_string());
        let api_key = std::env::var(&env_var).map_err(|_| {
            RunnerError::Config(format!(
                "credential environment variable {env_var} is not set"
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(REQUEST_TIMEOUT)
            .build()
            .map_err(|e| RunnerError::Config(format!("http client: {e}")))?;
        Ok(RemoteProvider {
            client,
            endpoint,
            api_key,
            model: config.model_name.clone(),
            temperature: config.temperature,
        })
    }
}

impl ChatProvider for RemoteProvider {
    fn respond(&self, req: &ProviderRequest<'_>) -> Result<String, ProviderError> {
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&chat_payload(&self.model, self.temperature, req.prompt))
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            return Err(ProviderError::Auth(format!("endpoint returned {status}")));
        }
        if !(200..300).contains(&status) {
            let mut body = response.text().unwrap_or_default();
            body.truncate(500);
            return Err(ProviderError::Api { status, body });
        }
        let value: Value = response
            .json()
            .map_err(|e| ProviderError::Transport(format!("invalid JSON response: {e}")))?;
        extract_chat_text(&value)
    }

    fn stamp(&self) -> ProviderStamp {
        ProviderStamp {
            provider_kind: "remote".into(),
            model_name: self.model.clone(),
            temperature: self.temperature,
        }
    }
}
