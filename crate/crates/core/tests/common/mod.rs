#![allow(dead_code)]

use std::path::{Path, PathBuf};

use taxsql_core::forge::{initialize_database, DatabaseSchema, PoolEntry};
use taxsql_core::gateway::{CompletionRequest, Gateway, GatewayConfig, Provider, ProviderError, TemplateSet};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn templates() -> TemplateSet {
    TemplateSet::load(&root().join("prompts")).unwrap()
}

/// The retail corpus database, initialized under `dir`.
pub fn retail(dir: &Path) -> PoolEntry {
    let text = std::fs::read_to_string(root().join("data/mini_corpus_schema.json")).unwrap();
    let schema: DatabaseSchema = serde_json::from_str(&text).unwrap();
    let path = dir.join("retail.sqlite");
    initialize_database(&schema, &path).unwrap();
    PoolEntry { schema, path }
}

/// Provider answering from a closure.
pub struct Scripted<F>(pub F);

impl<F: Fn(&CompletionRequest<'_>) -> String + Send + Sync> Provider for Scripted<F> {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        Ok((self.0)(r))
    }
}

pub fn scripted(f: impl Fn(&CompletionRequest<'_>) -> String + Send + Sync + 'static) -> Gateway {
    let cfg = GatewayConfig {
        backoff_base_ms: 1,
        ..GatewayConfig::default()
    };
    Gateway::new(templates(), Box::new(Scripted(f)), cfg)
}
