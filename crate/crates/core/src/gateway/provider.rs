//! Provider transport: the trait every backend implements, plus the
//! remote chat-completion client.

use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::{json, Value};

use super::template::TemplateName;

/// What a provider sees for one call. `bindings` are the raw placeholder
/// values, which lets the mock answer without parsing the prompt.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub template: TemplateName,
    pub prompt: &'a str,
    pub bindings: &'a BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    /// Worth retrying: transport failures, throttling, server errors.
    #[error("transient: {0}")]
    Transient(String),
    #[error("credential rejected: {0}")]
    Auth(String),
    #[error("{0}")]
    Fatal(String),
}

pub trait Provider: Send + Sync {
    fn id(&self) -> String;

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError>;

    /// Remote providers are rate limited and have their latency recorded.
    fn is_remote(&self) -> bool {
        false
    }
}

pub const ENV_ENDPOINT: &str = "SYNTH_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "SYNTH_LLM_MODEL";
pub const ENV_KEY: &str = "SYNTH_LLM_KEY";

/// Chat-completion style HTTP endpoint.
pub struct RemoteProvider {
    endpoint: String,
    model: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            key,
            agent: config.into(),
        }
    }

    /// Reads endpoint, model and key from the environment.
    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        let endpoint =
            std::env::var(ENV_ENDPOINT).map_err(|_| ProviderError::Fatal(format!("{ENV_ENDPOINT} is not set")))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| ProviderError::Fatal(format!("{ENV_MODEL} is not set")))?;
        let key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self::new(endpoint, model, key, timeout))
    }
}

impl Provider for RemoteProvider {
    fn id(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn is_remote(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let mut req = self.agent.post(&self.endpoint);
        if let Some(k) = &self.key {
            req = req.header("Authorization", format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| ProviderError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::Auth(format!("HTTP {status}"))),
            408 | 429 | 500..=599 => return Err(ProviderError::Transient(format!("HTTP {status}"))),
            _ => return Err(ProviderError::Fatal(format!("HTTP {status}"))),
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Transient(format!("unreadable response body: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Fatal("response has no choices[0].message.content".into()))
    }
}
