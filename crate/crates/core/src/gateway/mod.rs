//! The single path for model calls: templating, transport, retries, rate
//! limiting, call logging and structured-output extraction.

mod extract;
mod limiter;
pub mod mock;
mod provider;
mod template;

pub use extract::{extract_structured, ExtractionError, FieldType, Shape};
pub use limiter::{Permit, RateLimiter};
pub(crate) use mock::value_mappings;
pub use mock::{compose_sql, phrase_question, realizes, MockProvider, MISMATCH_MARKER};
pub use provider::{CompletionRequest, Provider, ProviderError, RemoteProvider, ENV_ENDPOINT, ENV_KEY, ENV_MODEL};
pub use template::{PromptTemplate, TemplateName, TemplateSet};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("template '{template}' has no binding for placeholder '{name}'")]
    MissingPlaceholder { template: String, name: String },
    #[error("template '{template}' does not declare placeholder '{name}'")]
    UnknownPlaceholder { template: String, name: String },
    #[error("unknown template '{0}'")]
    UnknownTemplate(String),
    #[error("cannot load template {path}: {message}")]
    TemplateLoad { path: String, message: String },
    #[error("template '{template}': {message}")]
    TemplateSyntax { template: String, message: String },
    #[error("credential rejected: {0}")]
    Auth(String),
    #[error("{template}: gave up after {attempts} attempts: {}", .diagnostics.join("; "))]
    Exhausted {
        template: String,
        attempts: u32,
        diagnostics: Vec<String>,
    },
    #[error("{template}: provider error: {message}")]
    Provider { template: String, message: String },
    #[error("{template}: {source}")]
    Extraction {
        template: String,
        #[source]
        source: ExtractionError,
    },
    #[error("provider not configured: {0}")]
    NotConfigured(String),
}

/// One completed model call, kept for provenance replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayCall {
    pub call_id: String,
    pub template: TemplateName,
    pub prompt: String,
    pub provider: String,
    pub response: String,
    pub latency_ms: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub attempts: u32,
    pub backoff_base_ms: u64,
    pub max_concurrent: usize,
    pub calls_per_minute: u32,
    pub request_timeout_secs: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff_base_ms: 500,
            max_concurrent: 4,
            calls_per_minute: 60,
            request_timeout_secs: 120,
        }
    }
}

pub fn call_id(scope: &str, template: TemplateName, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(scope.as_bytes());
    h.update([0]);
    h.update(template.as_str().as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())[..24].to_string()
}

pub struct Gateway {
    templates: TemplateSet,
    provider: Box<dyn Provider>,
    config: GatewayConfig,
    limiter: Option<RateLimiter>,
    log: Mutex<BTreeMap<String, GatewayCall>>,
}

impl Gateway {
    pub fn new(templates: TemplateSet, provider: Box<dyn Provider>, config: GatewayConfig) -> Self {
        let limiter = provider
            .is_remote()
            .then(|| RateLimiter::new(config.max_concurrent, config.calls_per_minute));
        Self {
            templates,
            provider,
            config,
            limiter,
            log: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn mock(templates: TemplateSet) -> Self {
        Self::new(templates, Box::new(MockProvider::new(None)), GatewayConfig::default())
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn render(&self, name: TemplateName, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        self.templates.get(name)?.render(bindings)
    }

    /// Renders and sends one prompt. `scope` distinguishes otherwise
    /// identical calls (for example successive attempts); a repeated
    /// scope and prompt returns the logged call without contacting the
    /// provider.
    pub fn complete(
        &self,
        name: TemplateName,
        bindings: &BTreeMap<String, String>,
        scope: &str,
    ) -> Result<GatewayCall, GatewayError> {
        let prompt = self.render(name, bindings)?;
        let id = call_id(scope, name, &prompt);
        if let Some(done) = self.log.lock().unwrap_or_else(|e| e.into_inner()).get(&id) {
            return Ok(done.clone());
        }
        let request = CompletionRequest {
            template: name,
            prompt: &prompt,
            bindings,
        };
        let mut diagnostics = Vec::new();
        let budget = self.config.attempts.max(1);
        for attempt in 1..=budget {
            let started = Instant::now();
            let result = {
                let _permit = self.limiter.as_ref().map(|l| l.acquire());
                self.provider.complete(&request)
            };
            match result {
                Ok(response) => {
                    let latency_ms = if self.provider.is_remote() {
                        started.elapsed().as_millis() as u64
                    } else {
                        0
                    };
                    let call = GatewayCall {
                        call_id: id.clone(),
                        template: name,
                        prompt,
                        provider: self.provider.id(),
                        response,
                        latency_ms,
                        attempts: attempt,
                    };
                    self.log
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .entry(id)
                        .or_insert_with(|| call.clone());
                    return Ok(call);
                }
                Err(ProviderError::Auth(m)) => return Err(GatewayError::Auth(m)),
                Err(ProviderError::Fatal(m)) => {
                    return Err(GatewayError::Provider {
                        template: name.to_string(),
                        message: m,
                    })
                }
                Err(ProviderError::Transient(m)) => {
                    log::warn!("{name}: attempt {attempt}/{budget} failed: {m}");
                    diagnostics.push(format!("attempt {attempt}: {m}"));
                    if attempt < budget {
                        let delay = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(GatewayError::Exhausted {
            template: name.to_string(),
            attempts: budget,
            diagnostics,
        })
    }

    /// `complete` followed by extraction against `shape`.
    pub fn complete_structured(
        &self,
        name: TemplateName,
        bindings: &BTreeMap<String, String>,
        scope: &str,
        shape: &Shape,
    ) -> Result<(Value, String), GatewayError> {
        let call = self.complete(name, bindings, scope)?;
        let value = extract_structured(&call.response, shape).map_err(|source| GatewayError::Extraction {
            template: name.to_string(),
            source,
        })?;
        Ok((value, call.call_id))
    }

    /// All logged calls, ordered by call id.
    pub fn calls(&self) -> Vec<GatewayCall> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).values().cloned().collect()
    }

    pub fn has_call(&self, id: &str) -> bool {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).contains_key(id)
    }

    /// Writes the call log as one JSON object per line.
    pub fn write_call_log(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for call in self.calls() {
            serde_json::to_writer(&mut f, &call)?;
            f.write_all(b"\n")?;
        }
        f.flush()
    }
}

/// Builds a binding map from string pairs.
pub fn bindings<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}
