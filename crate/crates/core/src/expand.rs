//! Dual-path expansion of seeds across sampled databases, with external
//! knowledge and validation gating.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::forge::{DatabasePool, DatabaseSchema, PoolEntry};
use crate::gateway::{bindings, value_mappings, FieldType, GatewayError, Shape, TemplateName};
use crate::seed::{short_hash, stream, SeedRecord, Synth};
use crate::sql::{chained_steps, parse_sql, tokenize, Dialect, TokenKind};
use crate::taxonomy::{Combination, ComplexityLevel, TaxonomyLabels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationPath {
    SqlOriented,
    QuestionOriented,
}

impl GenerationPath {
    pub const ALL: [GenerationPath; 2] = [GenerationPath::SqlOriented, GenerationPath::QuestionOriented];

    pub fn as_str(self) -> &'static str {
        match self {
            GenerationPath::SqlOriented => "sql_oriented",
            GenerationPath::QuestionOriented => "question_oriented",
        }
    }
}

impl fmt::Display for GenerationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeKind {
    ValueMapping,
    NumericCalculation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub kind: KnowledgeKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed_id: String,
    pub path: GenerationPath,
    /// Position of the database in this seed's sampled list for the path.
    pub db_position: usize,
    /// Run seed the database sample was drawn from.
    pub run_seed: u64,
    pub call_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub db_id: String,
    pub question: String,
    pub sql: String,
    pub knowledge: Vec<KnowledgeItem>,
    pub labels: TaxonomyLabels,
    pub complexity: ComplexityLevel,
    pub provenance: Provenance,
}

/// A record held back by a validator, with the reasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedRecord {
    #[serde(flatten)]
    pub record: DatasetRecord,
    pub reasons: Vec<String>,
}

/// A (seed, database, path) item that produced no record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub seed_id: String,
    pub db_id: String,
    pub path: GenerationPath,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionConfig {
    /// Databases sampled per seed and path.
    pub databases: usize,
    pub paths: Vec<GenerationPath>,
    /// Extra semantic-validation calls after an inconsistent verdict.
    pub semantic_retries: u32,
    pub knowledge: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            databases: 50,
            paths: GenerationPath::ALL.to_vec(),
            semantic_retries: 1,
            knowledge: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expansion {
    pub records: Vec<DatasetRecord>,
    pub quarantined: Vec<QuarantinedRecord>,
    pub skipped: Vec<Skip>,
}

impl Expansion {
    pub fn path_counts(&self) -> Vec<(GenerationPath, usize)> {
        GenerationPath::ALL
            .iter()
            .map(|p| (*p, self.records.iter().filter(|r| r.provenance.path == *p).count()))
            .collect()
    }
}

/// Up to `k` pool positions drawn without replacement from a stream
/// private to this seed and path.
pub fn sample_databases(pool_len: usize, k: usize, run_seed: u64, seed_id: &str, path: GenerationPath) -> Vec<usize> {
    let mut rng = stream(run_seed, &["expand", seed_id, path.as_str()]);
    index::sample(&mut rng, pool_len, k.min(pool_len)).into_vec()
}

fn schema_json(s: &DatabaseSchema) -> String {
    serde_json::to_string(s).expect("schema serializes")
}

fn one_string(v: &Value, key: &str) -> Result<String, String> {
    v[key]
        .as_str()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| format!("empty {key}"))
}

/// Why an item produced nothing: authentication failures stop the run,
/// anything else skips the item.
enum Fail {
    Abort(GatewayError),
    Skip(String),
}

impl From<GatewayError> for Fail {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Auth(_) => Fail::Abort(e),
            other => Fail::Skip(other.to_string()),
        }
    }
}

fn ask(
    synth: &Synth<'_>,
    template: TemplateName,
    b: &std::collections::BTreeMap<String, String>,
    scope: &str,
    key: &'static str,
    calls: &mut Vec<String>,
) -> Result<String, Fail> {
    let shape = Shape::object(&[(key, FieldType::String)]);
    let (v, id) = synth.gateway.complete_structured(template, b, scope, &shape)?;
    calls.push(id);
    one_string(&v, key).map_err(|m| Fail::Skip(format!("{template}: {m}")))
}

/// SQL then question on the SQL-oriented path, question then SQL on the
/// question-oriented one.
fn generate_pair(
    seed: &SeedRecord,
    combo: &Combination,
    db: &PoolEntry,
    path: GenerationPath,
    synth: &Synth<'_>,
) -> Result<(String, String, Vec<String>), Fail> {
    let schema = schema_json(&db.schema);
    let combination = serde_json::to_string(combo).expect("combination serializes");
    let scope = format!("expand:{}:{}:{path}", seed.id, db.schema.id);
    let mut calls = Vec::new();
    let sql_call = |question: &str, calls: &mut Vec<String>| {
        let b = bindings([
            ("path", path.as_str().to_string()),
            ("schema", schema.clone()),
            ("combination", combination.clone()),
            ("reference_sql", seed.sql.clone()),
            ("question", question.to_string()),
        ]);
        ask(synth, TemplateName::SqlGeneration, &b, &scope, "sql", calls)
    };
    let question_call = |sql: &str, calls: &mut Vec<String>| {
        let b = bindings([
            ("path", path.as_str().to_string()),
            ("schema", schema.clone()),
            ("combination", combination.clone()),
            ("reference_question", seed.question.clone()),
            ("reference_sql", seed.sql.clone()),
            ("sql", sql.to_string()),
        ]);
        ask(synth, TemplateName::QuestionGeneration, &b, &scope, "question", calls)
    };
    let (question, sql) = match path {
        GenerationPath::SqlOriented => {
            let sql = sql_call("", &mut calls)?;
            (question_call(&sql, &mut calls)?, sql)
        }
        GenerationPath::QuestionOriented => {
            let question = question_call("", &mut calls)?;
            let sql = sql_call(&question, &mut calls)?;
            (question, sql)
        }
    };
    Ok((question, sql, calls))
}

/// Execution and semantic checks. Returns the failure reasons, empty when
/// the record passes.
pub fn run_validators(record: &DatasetRecord, db: &PoolEntry, synth: &Synth<'_>, retries: u32) -> (Vec<String>, Vec<String>) {
    let mut reasons = Vec::new();
    let mut calls = Vec::new();
    if let Err(e) = synth.check(&db.path, &record.sql) {
        reasons.push(format!("execution: {e}"));
    }
    let b = bindings([
        ("schema", schema_json(&db.schema)),
        ("question", record.question.clone()),
        ("sql", record.sql.clone()),
    ]);
    let shape = Shape::object(&[("verdict", FieldType::String), ("reason", FieldType::String)]);
    let mut last = String::new();
    for attempt in 1..=retries + 1 {
        let scope = format!("validate:{}:{attempt}", record.id);
        match synth.gateway.complete_structured(TemplateName::SemanticValidation, &b, &scope, &shape) {
            Ok((v, id)) => {
                calls.push(id);
                let verdict = v["verdict"].as_str().unwrap_or_default().trim().to_ascii_lowercase();
                if verdict == "consistent" {
                    last.clear();
                    break;
                }
                last = format!("semantic: {}", v["reason"].as_str().unwrap_or("inconsistent"));
            }
            Err(e) => last = format!("semantic: {e}"),
        }
    }
    if !last.is_empty() {
        reasons.push(last);
    }
    (reasons, calls)
}

/// String literals of a statement, or none when it does not tokenize.
pub fn sql_literals(sql: &str) -> BTreeSet<String> {
    tokenize(sql)
        .map(|ts| {
            ts.into_iter()
                .filter_map(|t| match t.kind {
                    TokenKind::String(s) => Some(s),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn quoted(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for q in ['\'', '"'] {
        let parts: Vec<&str> = text.split(q).collect();
        out.extend(parts.iter().skip(1).step_by(2).copied());
    }
    out
}

/// Whether a value-mapping text quotes a value found in the SQL literals,
/// the sample values or a coded column description.
fn grounded(text: &str, sql: &str, schema: &DatabaseSchema) -> bool {
    let mut known = sql_literals(sql);
    known.extend(schema.content_strings());
    for t in &schema.tables {
        for c in &t.columns {
            known.extend(value_mappings(&c.description).into_iter().map(|(code, _)| code));
        }
    }
    quoted(text).iter().any(|q| !q.is_empty() && known.contains(*q))
}

/// Knowledge items for a validated record. Value mappings must quote a
/// value present in the schema content or the SQL; calculation notes
/// require at least two chained steps. Gateway failures yield no items.
pub fn generate_knowledge(record: &DatasetRecord, schema: &DatabaseSchema, synth: &Synth<'_>) -> (Vec<KnowledgeItem>, Option<String>) {
    let b = bindings([
        ("schema", schema_json(schema)),
        ("question", record.question.clone()),
        ("sql", record.sql.clone()),
    ]);
    let shape = Shape::object(&[("knowledge", FieldType::Array)]);
    let scope = format!("knowledge:{}", record.id);
    let (v, id) = match synth.gateway.complete_structured(TemplateName::KnowledgeGeneration, &b, &scope, &shape) {
        Ok(x) => x,
        Err(e) => {
            log::warn!("knowledge for {}: {e}", record.id);
            return (Vec::new(), None);
        }
    };
    let steps = parse_sql(&record.sql, Dialect::Sqlite)
        .map(|t| chained_steps(&t, synth.analysis))
        .unwrap_or(0);
    let items = v["knowledge"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|item| serde_json::from_value::<KnowledgeItem>(item.clone()).ok())
        .filter(|k| !k.text.trim().is_empty())
        .filter(|k| match k.kind {
            KnowledgeKind::ValueMapping => grounded(&k.text, &record.sql, schema),
            KnowledgeKind::NumericCalculation => steps >= 2,
        })
        .collect();
    (items, Some(id))
}

enum Outcome {
    Emitted(DatasetRecord),
    Quarantined(QuarantinedRecord),
    Skipped(Skip),
}

fn expand_one(
    seed: &SeedRecord,
    combo: &Combination,
    path: GenerationPath,
    position: usize,
    db: &PoolEntry,
    synth: &Synth<'_>,
    cfg: &ExpansionConfig,
    run_seed: u64,
) -> Result<Outcome, GatewayError> {
    let skip = |reason: String| {
        Ok(Outcome::Skipped(Skip {
            seed_id: seed.id.clone(),
            db_id: db.schema.id.clone(),
            path,
            reason,
        }))
    };
    let (question, sql, mut calls) = match generate_pair(seed, combo, db, path, synth) {
        Ok(x) => x,
        Err(Fail::Abort(e)) => return Err(e),
        Err(Fail::Skip(reason)) => return skip(reason),
    };
    let (labels, complexity, _) = match synth.classify(&question, &sql) {
        Ok(x) => x,
        Err(e) => return skip(format!("classification: {e}")),
    };
    let mut record = DatasetRecord {
        id: format!("rec-{}", short_hash(&[&seed.id, &db.schema.id, path.as_str()])),
        db_id: db.schema.id.clone(),
        question,
        sql,
        knowledge: Vec::new(),
        labels,
        complexity,
        provenance: Provenance {
            seed_id: seed.id.clone(),
            path,
            db_position: position,
            run_seed,
            call_ids: Vec::new(),
        },
    };
    let (reasons, vcalls) = run_validators(&record, db, synth, cfg.semantic_retries);
    calls.extend(vcalls);
    if !reasons.is_empty() {
        record.provenance.call_ids = calls;
        return Ok(Outcome::Quarantined(QuarantinedRecord { record, reasons }));
    }
    if cfg.knowledge {
        let (items, id) = generate_knowledge(&record, &db.schema, synth);
        record.knowledge = items;
        calls.extend(id);
    }
    record.provenance.call_ids = calls;
    Ok(Outcome::Emitted(record))
}

/// Expands every seed along the configured paths. Output keeps seed,
/// path and sample order; exact duplicate question and SQL pairs keep
/// their first occurrence.
pub fn expand_seeds(
    seeds: &[SeedRecord],
    pool: &DatabasePool,
    synth: &Synth<'_>,
    cfg: &ExpansionConfig,
    run_seed: u64,
) -> Result<Expansion, GatewayError> {
    let mut items = Vec::new();
    for seed in seeds {
        let score = synth.taxonomy.complexity.score(&seed.labels);
        let combo = Combination {
            labels: seed.labels.clone(),
            complexity_level: seed.complexity,
            complexity_score: score,
        };
        for path in GenerationPath::ALL.into_iter().filter(|p| cfg.paths.contains(p)) {
            for (pos, i) in sample_databases(pool.len(), cfg.databases, run_seed, &seed.id, path).into_iter().enumerate() {
                items.push((seed, combo.clone(), path, pos, &pool.entries[i]));
            }
        }
    }
    let outcomes: Vec<Result<Outcome, GatewayError>> = items
        .par_iter()
        .map(|(seed, combo, path, pos, db)| expand_one(seed, combo, *path, *pos, db, synth, cfg, run_seed))
        .collect();
    let mut out = Expansion::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for o in outcomes {
        match o? {
            Outcome::Emitted(r) => {
                if seen.insert((r.question.clone(), r.sql.clone())) {
                    out.records.push(r);
                } else {
                    out.skipped.push(Skip {
                        seed_id: r.provenance.seed_id,
                        db_id: r.db_id,
                        path: r.provenance.path,
                        reason: "duplicate question and SQL".into(),
                    });
                }
            }
            Outcome::Quarantined(q) => out.quarantined.push(q),
            Outcome::Skipped(s) => out.skipped.push(s),
        }
    }
    Ok(out)
}
