//! Database forging: multi-table schemas from flat source tables, schema
//! enhancement, validation and dependency-ordered initialization.

mod init;
mod schema;
mod validate;

pub use init::{create_table_sql, initialize_database, open_with_foreign_keys, quote_ident, read_back, structural_form, to_sql_value};
pub use schema::{
    parent_map, sanitize_identifier, ColumnSchema, DataType, DatabaseSchema, ForeignKey, SourceTable, TableSchema,
};
pub use validate::{topo_order, validate_schema, CycleError, SchemaViolation};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::{bindings, FieldType, Gateway, GatewayError, Shape, TemplateName};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForgeError {
    #[error("source table '{0}' has no header or no rows")]
    EmptySource(String),
    #[error("schema for '{source_id}' rejected after {attempts} attempts: {}", .messages.join("; "))]
    SchemaRejected {
        source_id: String,
        attempts: u32,
        messages: Vec<String>,
    },
    #[error("enhancement of '{schema_id}' rejected: {}", .diff.join("; "))]
    EnhancementRejected { schema_id: String, diff: Vec<String> },
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error("row {row} of table '{table}' violates a constraint: {message}")]
    ConstraintViolation { table: String, row: usize, message: String },
    #[error("database error: {0}")]
    Database(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl From<rusqlite::Error> for ForgeError {
    fn from(e: rusqlite::Error) -> Self {
        ForgeError::Database(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeConfig {
    /// Sample rows requested per table.
    pub sample_rows: usize,
    /// Consecutive generations allowed to fail validation.
    pub attempts: u32,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        Self {
            sample_rows: 5,
            attempts: 3,
        }
    }
}

fn schema_shape() -> Shape {
    Shape::object(&[("scenario", FieldType::String), ("tables", FieldType::Array)])
}

fn parse_tables(v: &Value) -> Result<(String, Vec<TableSchema>), String> {
    let scenario = v["scenario"].as_str().unwrap_or_default().to_string();
    let tables: Vec<TableSchema> = serde_json::from_value(v["tables"].clone()).map_err(|e| format!("malformed tables: {e}"))?;
    Ok((scenario, tables))
}

/// Asks the model for a multi-table schema built around `source`.
pub fn generate_database(
    source: &SourceTable,
    gateway: &Gateway,
    cfg: &ForgeConfig,
) -> Result<DatabaseSchema, ForgeError> {
    if source.header.is_empty() || source.rows.is_empty() {
        return Err(ForgeError::EmptySource(source.id.clone()));
    }
    let b = bindings([
        ("source_table", serde_json::to_string(source).expect("source serializes")),
        ("sample_rows", cfg.sample_rows.to_string()),
    ]);
    let attempts = cfg.attempts.max(1);
    let mut messages = Vec::new();
    for attempt in 1..=attempts {
        let scope = format!("forge:{}:{attempt}", source.id);
        let parsed = match gateway.complete_structured(TemplateName::DatabaseGeneration, &b, &scope, &schema_shape()) {
            Ok((v, _)) => parse_tables(&v),
            Err(GatewayError::Extraction { source, .. }) => Err(source.to_string()),
            Err(e) => return Err(e.into()),
        };
        let (scenario, tables) = match parsed {
            Ok(x) => x,
            Err(m) => {
                messages.push(format!("attempt {attempt}: {m}"));
                continue;
            }
        };
        let mut schema = DatabaseSchema {
            id: String::new(),
            scenario,
            tables,
        };
        let violations = validate_schema(&schema);
        if violations.is_empty() {
            schema.assign_id();
            return Ok(schema);
        }
        messages.extend(violations.iter().map(|v| format!("attempt {attempt}: {v}")));
    }
    Err(ForgeError::SchemaRejected {
        source_id: source.id.clone(),
        attempts,
        messages,
    })
}

/// Post-conditions of enhancement: tables survive, column and foreign-key
/// counts never shrink, and added columns have sample values.
fn enhancement_diff(before: &DatabaseSchema, after: &mut DatabaseSchema) -> Vec<String> {
    let mut diff = Vec::new();
    for t in &before.tables {
        let Some(n) = after.table_mut(&t.name) else {
            diff.push(format!("table '{}' was dropped", t.name));
            continue;
        };
        if n.columns.len() < t.columns.len() {
            diff.push(format!(
                "table '{}' shrank from {} to {} columns",
                t.name,
                t.columns.len(),
                n.columns.len()
            ));
        }
        let width = n.columns.len();
        let nullable: Vec<bool> = n.columns.iter().map(|c| c.nullable).collect();
        for (i, row) in n.sample_rows.iter_mut().enumerate() {
            while row.len() < width {
                if nullable[row.len()] {
                    row.push(Value::Null);
                } else {
                    diff.push(format!(
                        "table '{}' row {i} lacks a value for non-nullable column '{}'",
                        t.name,
                        n.columns[row.len()].name
                    ));
                    break;
                }
            }
        }
    }
    if after.fk_edge_count() < before.fk_edge_count() {
        diff.push(format!(
            "foreign keys dropped from {} to {}",
            before.fk_edge_count(),
            after.fk_edge_count()
        ));
    }
    diff
}

/// Asks the model to add columns and refine relations, keeping everything
/// the input already has.
pub fn enhance_database(
    schema: &DatabaseSchema,
    gateway: &Gateway,
    cfg: &ForgeConfig,
) -> Result<DatabaseSchema, ForgeError> {
    let b = bindings([
        ("schema", serde_json::to_string(schema).expect("schema serializes")),
        ("sample_rows", cfg.sample_rows.to_string()),
    ]);
    let scope = format!("enhance:{}", schema.id);
    let rejected = |diff: Vec<String>| ForgeError::EnhancementRejected {
        schema_id: schema.id.clone(),
        diff,
    };
    let (v, _) = match gateway.complete_structured(TemplateName::DatabaseEnhancement, &b, &scope, &schema_shape()) {
        Ok(x) => x,
        Err(GatewayError::Extraction { source, .. }) => return Err(rejected(vec![source.to_string()])),
        Err(e) => return Err(e.into()),
    };
    let (scenario, tables) = parse_tables(&v).map_err(|m| rejected(vec![m]))?;
    let mut out = DatabaseSchema {
        id: String::new(),
        scenario: if scenario.is_empty() { schema.scenario.clone() } else { scenario },
        tables,
    };
    let mut diff = enhancement_diff(schema, &mut out);
    if diff.is_empty() {
        diff.extend(validate_schema(&out).iter().map(|v| v.to_string()));
    }
    if !diff.is_empty() {
        return Err(rejected(diff));
    }
    out.assign_id();
    Ok(out)
}

/// Reads source tables, one JSON object per line.
pub fn load_source_tables(path: &Path) -> Result<Vec<SourceTable>, ForgeError> {
    let text = std::fs::read_to_string(path).map_err(|e| ForgeError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| ForgeError::Io(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// One initialized database and its schema document.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub schema: DatabaseSchema,
    pub path: PathBuf,
}

/// Databases available for synthesis, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatabasePool {
    pub entries: Vec<PoolEntry>,
}

impl DatabasePool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PoolEntry> {
        self.entries.iter().find(|e| e.schema.id == id)
    }

    /// Loads every `<id>.json` schema in `dir` whose `<id>.sqlite` exists,
    /// ordered by id.
    pub fn load(dir: &Path) -> Result<Self, ForgeError> {
        let rd = std::fs::read_dir(dir).map_err(|e| ForgeError::Io(format!("{}: {e}", dir.display())))?;
        let mut found = BTreeMap::new();
        for entry in rd {
            let p = entry.map_err(|e| ForgeError::Io(e.to_string()))?.path();
            if p.extension().is_some_and(|x| x == "json") {
                let db = p.with_extension("sqlite");
                if !db.exists() {
                    continue;
                }
                let text = std::fs::read_to_string(&p).map_err(|e| ForgeError::Io(format!("{}: {e}", p.display())))?;
                let schema: DatabaseSchema =
                    serde_json::from_str(&text).map_err(|e| ForgeError::Io(format!("{}: {e}", p.display())))?;
                found.insert(schema.id.clone(), PoolEntry { schema, path: db });
            }
        }
        Ok(Self {
            entries: found.into_values().collect(),
        })
    }
}

/// Outcome of forging one source table.
#[derive(Debug, Clone, PartialEq)]
pub struct ForgeFailure {
    pub source_id: String,
    pub error: ForgeError,
}

fn forge_one(source: &SourceTable, gateway: &Gateway, cfg: &ForgeConfig, dir: &Path) -> Result<PoolEntry, ForgeError> {
    let base = generate_database(source, gateway, cfg)?;
    let schema = enhance_database(&base, gateway, cfg)?;
    let path = dir.join(format!("{}.sqlite", schema.id));
    initialize_database(&schema, &path)?;
    let doc = serde_json::to_string_pretty(&schema).expect("schema serializes");
    let json = dir.join(format!("{}.json", schema.id));
    std::fs::write(&json, doc).map_err(|e| ForgeError::Io(format!("{}: {e}", json.display())))?;
    Ok(PoolEntry { schema, path })
}

/// Generates, enhances and initializes one database per source table in
/// parallel. Failures are returned alongside the pool, which keeps source
/// order and drops duplicate ids.
pub fn forge_pool(
    sources: &[SourceTable],
    gateway: &Gateway,
    cfg: &ForgeConfig,
    dir: &Path,
) -> Result<(DatabasePool, Vec<ForgeFailure>), ForgeError> {
    std::fs::create_dir_all(dir).map_err(|e| ForgeError::Io(format!("{}: {e}", dir.display())))?;
    let results: Vec<Result<PoolEntry, ForgeFailure>> = sources
        .par_iter()
        .map(|s| {
            forge_one(s, gateway, cfg, dir).map_err(|error| ForgeFailure {
                source_id: s.id.clone(),
                error,
            })
        })
        .collect();
    let mut pool = DatabasePool::default();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) if pool.get(&e.schema.id).is_none() => pool.entries.push(e),
            Ok(_) => {}
            Err(f) => {
                if matches!(f.error, ForgeError::Gateway(GatewayError::Auth(_))) {
                    return Err(f.error);
                }
                log::warn!("forging '{}' failed: {}", f.source_id, f.error);
                failures.push(f);
            }
        }
    }
    Ok((pool, failures))
}
