//! Seed synthesis: one verified pair per taxonomy combination, reused from
//! a labeled corpus when one aligns exactly, otherwise generated from
//! retrieved blueprints and repaired when it fails to execute.

mod corpus;
mod retrieve;

pub use corpus::{label_pairs, load_pairs, spider_schemas, LabeledPair, RawPair};
pub use retrieve::{jaccard, match_combinations, retrieve_blueprints, Matched};

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::exec::{self, ExecError};
use crate::forge::{DatabasePool, PoolEntry};
use crate::gateway::{bindings, FieldType, Gateway, GatewayError, Shape, TemplateName};
use crate::sql::{AnalysisConfig, Dialect};
use crate::taxonomy::{classify_pair, Combination, ComplexityLevel, IntentMode, TaxonomyConfig, TaxonomyError, TaxonomyLabels};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeedError {
    #[error("seed for {combination} rejected after {attempts} attempts: {diagnosis}")]
    SeedRejected {
        combination: String,
        attempts: u32,
        diagnosis: String,
    },
    #[error("repair exhausted after {attempts} attempts: {}", .history.join(" | "))]
    RepairExhausted { attempts: u32, history: Vec<String> },
    #[error("no blueprints available")]
    NoBlueprints,
    #[error("database pool is empty")]
    EmptyPool,
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// How core intents are assigned when pairs are classified.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentSource {
    #[default]
    Heuristic,
    Llm,
}

/// Shared settings for classifying and executing synthesized pairs.
#[derive(Clone, Copy)]
pub struct Synth<'a> {
    pub gateway: &'a Gateway,
    pub taxonomy: &'a TaxonomyConfig,
    pub analysis: &'a AnalysisConfig,
    pub intent: IntentSource,
    pub timeout: Duration,
}

impl fmt::Debug for Synth<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Synth")
            .field("provider", &self.gateway.provider_id())
            .field("intent", &self.intent)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl Synth<'_> {
    /// Labels, complexity level and score of a pair.
    pub fn classify(&self, question: &str, sql: &str) -> Result<(TaxonomyLabels, ComplexityLevel, u32), TaxonomyError> {
        let mode = match self.intent {
            IntentSource::Heuristic => IntentMode::Heuristic,
            IntentSource::Llm => IntentMode::Llm(self.gateway),
        };
        let pair = classify_pair(question, sql, Dialect::Sqlite, mode, self.analysis, &self.taxonomy.rules)?;
        let (score, level) = self.taxonomy.complexity_of(&pair.labels)?;
        Ok((pair.labels, level, score))
    }

    pub fn check(&self, path: &Path, sql: &str) -> Result<(), ExecError> {
        exec::check(path, sql, self.timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStatus {
    Reused,
    Generated,
    Repaired,
}

/// One verified pair for one combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub id: String,
    pub db_id: String,
    pub question: String,
    pub sql: String,
    pub labels: TaxonomyLabels,
    pub complexity: ComplexityLevel,
    pub status: SeedStatus,
    pub blueprint_ids: Vec<String>,
    /// Gateway calls that produced the pair, in order.
    #[serde(default)]
    pub call_ids: Vec<String>,
}

impl SeedRecord {
    pub fn matches(&self, combo: &Combination) -> bool {
        self.labels == combo.labels && self.complexity == combo.complexity_level
    }
}

/// Stable key of a combination, used for ids, scopes and random streams.
pub fn combination_key(c: &Combination) -> String {
    c.labels.to_string()
}

/// Short content-derived identifier.
pub(crate) fn short_hash(parts: &[&str]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    hex::encode(&h.finalize()[..6])
}

/// Seeded stream for one purpose, independent of evaluation order.
pub(crate) fn stream(run_seed: u64, parts: &[&str]) -> ChaCha8Rng {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    let d = h.finalize();
    ChaCha8Rng::from_seed(d.into())
}

/// Differences between produced and target labels, or `None` when equal.
pub fn label_diff(got: &TaxonomyLabels, level: ComplexityLevel, want: &Combination) -> Option<String> {
    let w = &want.labels;
    let mut parts = Vec::new();
    if got.core_intent != w.core_intent {
        parts.push(format!("core intent is {} instead of {}", got.core_intent, w.core_intent));
    }
    if got.statement_type != w.statement_type {
        parts.push(format!("statement is {} instead of {}", got.statement_type, w.statement_type));
    }
    let names = |s: Vec<&'static str>| s.join(", ");
    let missing: Vec<_> = w.syntax_structures.difference(&got.syntax_structures).map(|s| s.name()).collect();
    let extra: Vec<_> = got.syntax_structures.difference(&w.syntax_structures).map(|s| s.name()).collect();
    if !missing.is_empty() {
        parts.push(format!("missing structures: {}", names(missing)));
    }
    if !extra.is_empty() {
        parts.push(format!("unwanted structures: {}", names(extra)));
    }
    let missing: Vec<_> = w.key_actions.difference(&got.key_actions).map(|s| s.name()).collect();
    let extra: Vec<_> = got.key_actions.difference(&w.key_actions).map(|s| s.name()).collect();
    if !missing.is_empty() {
        parts.push(format!("missing actions: {}", names(missing)));
    }
    if !extra.is_empty() {
        parts.push(format!("unwanted actions: {}", names(extra)));
    }
    if level != want.complexity_level {
        parts.push(format!("complexity is {level} instead of {}", want.complexity_level));
    }
    (!parts.is_empty()).then(|| parts.join("; "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    /// Blueprints retrieved per uncovered combination.
    pub top_k: usize,
    /// Generation attempts per sampled database.
    pub attempts: u32,
    /// Fresh databases tried after a rejection.
    pub fresh_schemas: u32,
    /// Repair calls allowed for a failing statement.
    pub repair_budget: u32,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            top_k: 5,
            attempts: 3,
            fresh_schemas: 1,
            repair_budget: 3,
        }
    }
}

fn blueprint_json(b: &LabeledPair) -> serde_json::Value {
    json!({"id": b.id, "question": b.question, "sql": b.sql, "labels": b.labels})
}

/// Runs the repair dialogue until the statement executes and keeps its
/// labels. A statement that already executes is returned untouched.
pub fn repair_loop(
    record: &SeedRecord,
    combo: &Combination,
    db: &PoolEntry,
    synth: &Synth<'_>,
    budget: u32,
) -> Result<SeedRecord, SeedError> {
    let first = match synth.check(&db.path, &record.sql) {
        Ok(()) => return Ok(record.clone()),
        Err(e) => e.to_string(),
    };
    let mut out = record.clone();
    let mut error = first.clone();
    let mut history = vec![format!("initial: {first}")];
    let schema = serde_json::to_string(&db.schema).expect("schema serializes");
    let combination = serde_json::to_string(combo).expect("combination serializes");
    let shape = Shape::object(&[("sql", FieldType::String)]);
    for attempt in 1..=budget {
        let b = bindings([
            ("schema", schema.clone()),
            ("combination", combination.clone()),
            ("sql", out.sql.clone()),
            ("error", error.clone()),
        ]);
        let scope = format!("repair:{}:{}:{attempt}", record.id, db.schema.id);
        let (v, call) = match synth.gateway.complete_structured(TemplateName::SeedRepair, &b, &scope, &shape) {
            Ok(x) => x,
            Err(GatewayError::Extraction { source, .. }) => {
                history.push(format!("attempt {attempt}: {source}"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        out.call_ids.push(call);
        out.sql = v["sql"].as_str().unwrap_or_default().to_string();
        error = match synth.check(&db.path, &out.sql) {
            Err(e) => e.to_string(),
            Ok(()) => match synth.classify(&out.question, &out.sql) {
                Err(e) => e.to_string(),
                Ok((labels, level, _)) => match label_diff(&labels, level, combo) {
                    Some(d) => format!("executes but {d}"),
                    None => {
                        out.labels = labels;
                        out.complexity = level;
                        out.status = SeedStatus::Repaired;
                        return Ok(out);
                    }
                },
            },
        };
        history.push(format!("attempt {attempt}: {error}"));
    }
    Err(SeedError::RepairExhausted { attempts: budget, history })
}

/// Asks the model to adapt `blueprints` to `combo` on one database,
/// verifying every answer by re-classification and execution.
pub fn generate_seed(
    combo: &Combination,
    blueprints: &[LabeledPair],
    db: &PoolEntry,
    synth: &Synth<'_>,
    cfg: &SeedConfig,
) -> Result<SeedRecord, SeedError> {
    if blueprints.is_empty() {
        return Err(SeedError::NoBlueprints);
    }
    let key = combination_key(combo);
    let id = format!("seed-{}", short_hash(&[&key]));
    let schema = serde_json::to_string(&db.schema).expect("schema serializes");
    let combination = serde_json::to_string(combo).expect("combination serializes");
    let bps = serde_json::to_string(&blueprints.iter().map(blueprint_json).collect::<Vec<_>>()).expect("blueprints serialize");
    let shape = Shape::object(&[("question", FieldType::String), ("sql", FieldType::String)]);
    let attempts = cfg.attempts.max(1);
    let mut feedback = String::new();
    for attempt in 1..=attempts {
        let b = bindings([
            ("schema", schema.clone()),
            ("combination", combination.clone()),
            ("blueprints", bps.clone()),
            ("feedback", feedback.clone()),
        ]);
        let scope = format!("seed:{key}:{}:{attempt}", db.schema.id);
        let (v, call) = match synth.gateway.complete_structured(TemplateName::SeedModification, &b, &scope, &shape) {
            Ok(x) => x,
            Err(GatewayError::Extraction { source, .. }) => {
                feedback = format!("The previous answer could not be read: {source}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut record = SeedRecord {
            id: id.clone(),
            db_id: db.schema.id.clone(),
            question: v["question"].as_str().unwrap_or_default().to_string(),
            sql: v["sql"].as_str().unwrap_or_default().to_string(),
            labels: combo.labels.clone(),
            complexity: combo.complexity_level,
            status: SeedStatus::Generated,
            blueprint_ids: blueprints.iter().map(|b| b.id.clone()).collect(),
            call_ids: vec![call],
        };
        let classified = synth.classify(&record.question, &record.sql);
        let broken = match &classified {
            Err(TaxonomyError::Sql(_)) => true,
            _ => synth.check(&db.path, &record.sql).is_err(),
        };
        if broken {
            match repair_loop(&record, combo, db, synth, cfg.repair_budget) {
                Ok(r) => return Ok(r),
                Err(SeedError::RepairExhausted { history, .. }) => {
                    feedback = format!("The statement failed and could not be repaired: {}", history.join(" | "));
                    continue;
                }
                Err(e) => return Err(e),
            }
        }
        match classified {
            Err(e) => feedback = format!("The pair could not be classified: {e}"),
            Ok((labels, level, _)) => match label_diff(&labels, level, combo) {
                Some(d) => feedback = format!("The pair does not match the target: {d}"),
                None => {
                    record.labels = labels;
                    record.complexity = level;
                    return Ok(record);
                }
            },
        }
    }
    Err(SeedError::SeedRejected {
        combination: key,
        attempts,
        diagnosis: feedback,
    })
}

/// Why no seed exists for a combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub combination: Combination,
    pub databases: Vec<String>,
    pub reason: String,
}

/// Seeds for a whole combination list, in combination order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedSet {
    pub seeds: Vec<SeedRecord>,
    pub failures: Vec<SeedFailure>,
}

/// Reuses aligned corpus pairs and generates the rest, one combination at
/// a time in parallel. `corpus_db` resolves the database a reused pair
/// belongs to; reused pairs whose database is unknown or whose SQL fails
/// there are generated instead.
#[allow(clippy::too_many_arguments)]
pub fn build_seeds(
    combos: &[Combination],
    corpus: &[LabeledPair],
    corpus_db: &(dyn Fn(&str) -> Option<PoolEntry> + Sync),
    pool: &DatabasePool,
    synth: &Synth<'_>,
    cfg: &SeedConfig,
    run_seed: u64,
) -> Result<SeedSet, SeedError> {
    if pool.is_empty() {
        return Err(SeedError::EmptyPool);
    }
    let matched = match_combinations(corpus, combos);
    let results: Vec<Result<Result<SeedRecord, SeedFailure>, SeedError>> = combos
        .par_iter()
        .enumerate()
        .map(|(i, combo)| {
            if let Some(&j) = matched.covered.get(&i) {
                let pair = &corpus[j];
                if let Some(db) = corpus_db(&pair.db_id) {
                    if synth.check(&db.path, &pair.sql).is_ok() {
                        return Ok(Ok(SeedRecord {
                            id: format!("seed-{}", short_hash(&[&combination_key(combo)])),
                            db_id: db.schema.id.clone(),
                            question: pair.question.clone(),
                            sql: pair.sql.clone(),
                            labels: pair.labels.clone(),
                            complexity: pair.complexity,
                            status: SeedStatus::Reused,
                            blueprint_ids: vec![pair.id.clone()],
                            call_ids: Vec::new(),
                        }));
                    }
                }
            }
            seed_one(combo, corpus, pool, synth, cfg, run_seed)
        })
        .collect();
    let mut set = SeedSet::default();
    for r in results {
        match r? {
            Ok(s) => set.seeds.push(s),
            Err(f) => {
                log::info!("no seed for {}: {}", f.combination.labels, f.reason);
                set.failures.push(f);
            }
        }
    }
    Ok(set)
}

fn seed_one(
    combo: &Combination,
    corpus: &[LabeledPair],
    pool: &DatabasePool,
    synth: &Synth<'_>,
    cfg: &SeedConfig,
    run_seed: u64,
) -> Result<Result<SeedRecord, SeedFailure>, SeedError> {
    let fail = |databases: Vec<String>, reason: String| SeedFailure {
        combination: combo.clone(),
        databases,
        reason,
    };
    let blueprints: Vec<LabeledPair> = retrieve_blueprints(combo, corpus, cfg.top_k).into_iter().cloned().collect();
    let mut rng = stream(run_seed, &["seed-db", &combination_key(combo)]);
    let mut tried: BTreeSet<usize> = BTreeSet::new();
    let mut names = Vec::new();
    let mut reason = String::new();
    for _ in 0..=cfg.fresh_schemas {
        if tried.len() == pool.len() {
            break;
        }
        let i = loop {
            let i = rng.random_range(0..pool.len());
            if tried.insert(i) {
                break i;
            }
        };
        let db = &pool.entries[i];
        names.push(db.schema.id.clone());
        match generate_seed(combo, &blueprints, db, synth, cfg) {
            Ok(s) => return Ok(Ok(s)),
            Err(e @ SeedError::Gateway(GatewayError::Auth(_))) => return Err(e),
            Err(e) => reason = e.to_string(),
        }
    }
    Ok(Err(fail(names, reason)))
}
