//! Shared fixtures for the benchmarks.

use std::path::{Path, PathBuf};

use taxsql_core::forge::{initialize_database, DatabaseSchema};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Question and SQL of every pair in the mini corpus.
pub fn corpus_pairs() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(root().join("data/mini_corpus.jsonl")).expect("mini corpus");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).expect("corpus line");
            (v["question"].as_str().unwrap_or_default().to_string(), v["sql"].as_str().unwrap_or_default().to_string())
        })
        .collect()
}

/// The retail corpus database, initialized under `dir`.
pub fn retail_db(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(root().join("data/mini_corpus_schema.json")).expect("retail schema");
    let schema: DatabaseSchema = serde_json::from_str(&text).expect("retail schema parses");
    let path = dir.join("retail.sqlite");
    initialize_database(&schema, &path).expect("retail initializes");
    path
}
