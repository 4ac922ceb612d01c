//! Labeled corpora: loading, classification and Spider-layout ingestion.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{SeedError, Synth};
use crate::forge::{sanitize_identifier, ColumnSchema, DataType, DatabaseSchema, ForeignKey, TableSchema};
use crate::taxonomy::{ComplexityLevel, TaxonomyLabels};

/// One existing text-SQL pair with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub id: String,
    pub db_id: String,
    pub question: String,
    pub sql: String,
    pub labels: TaxonomyLabels,
    pub complexity: ComplexityLevel,
}

/// An unlabeled pair as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPair {
    #[serde(default)]
    pub id: String,
    pub db_id: String,
    pub question: String,
    #[serde(alias = "query")]
    pub sql: String,
}

/// Reads pairs from either one JSON object per line or a JSON array in
/// the Spider layout (`question`, `query`, `db_id`). Missing ids become
/// `<db_id>-<position>`.
pub fn load_pairs(path: &Path) -> Result<Vec<RawPair>, SeedError> {
    let io = |e: String| SeedError::Corpus(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    let mut pairs: Vec<RawPair> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| io(e.to_string()))?
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| io(format!("line {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?
    };
    for (i, p) in pairs.iter_mut().enumerate() {
        if p.id.is_empty() {
            p.id = format!("{}-{i}", p.db_id);
        }
    }
    Ok(pairs)
}

/// Labels every pair. Pairs that fail to parse or classify are returned
/// separately with the reason.
pub fn label_pairs(pairs: &[RawPair], synth: &Synth<'_>) -> (Vec<LabeledPair>, Vec<(String, String)>) {
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for p in pairs {
        match synth.classify(&p.question, &p.sql) {
            Ok((labels, complexity, _)) => ok.push(LabeledPair {
                id: p.id.clone(),
                db_id: p.db_id.clone(),
                question: p.question.clone(),
                sql: p.sql.clone(),
                labels,
                complexity,
            }),
            Err(e) => skipped.push((p.id.clone(), e.to_string())),
        }
    }
    (ok, skipped)
}

fn spider_type(t: &str) -> DataType {
    match t {
        "number" => DataType::Real,
        "time" => DataType::Datetime,
        "boolean" => DataType::Boolean,
        _ => DataType::Text,
    }
}

/// Converts Spider `tables.json` entries to schema documents without
/// sample rows. Column references are `[table index, name]` pairs and key
/// references are flat column indices.
pub fn spider_schemas(doc: &Value) -> Result<Vec<DatabaseSchema>, SeedError> {
    let bad = |m: &str| SeedError::Corpus(format!("spider schema: {m}"));
    let list = doc.as_array().ok_or_else(|| bad("expected an array"))?;
    let mut out = Vec::new();
    for db in list {
        let id = db["db_id"].as_str().ok_or_else(|| bad("missing db_id"))?;
        let tables: Vec<String> = serde_json::from_value(db["table_names_original"].clone()).map_err(|e| bad(&e.to_string()))?;
        let columns: Vec<(i64, String)> = serde_json::from_value(db["column_names_original"].clone()).map_err(|e| bad(&e.to_string()))?;
        let types: Vec<String> = serde_json::from_value(db["column_types"].clone()).map_err(|e| bad(&e.to_string()))?;
        let pks: Vec<Value> = serde_json::from_value(db["primary_keys"].clone()).unwrap_or_default();
        let fks: Vec<(usize, usize)> = serde_json::from_value(db["foreign_keys"].clone()).unwrap_or_default();
        let name_of = |i: usize| -> Option<(usize, String)> {
            let (t, c) = columns.get(i)?;
            (*t >= 0).then(|| (*t as usize, c.clone()))
        };
        let mut ts: Vec<TableSchema> = tables
            .iter()
            .map(|t| TableSchema {
                name: t.clone(),
                description: String::new(),
                columns: Vec::new(),
                primary_key: Vec::new(),
                foreign_keys: Vec::new(),
                sample_rows: Vec::new(),
            })
            .collect();
        for (i, (t, c)) in columns.iter().enumerate() {
            if *t < 0 {
                continue;
            }
            let table = ts.get_mut(*t as usize).ok_or_else(|| bad("column table index out of range"))?;
            table.columns.push(ColumnSchema {
                name: c.clone(),
                description: String::new(),
                data_type: spider_type(types.get(i).map(String::as_str).unwrap_or("text")),
                nullable: true,
            });
        }
        for pk in pks {
            let idx: Vec<usize> = match pk {
                Value::Number(n) => n.as_u64().map(|n| vec![n as usize]).unwrap_or_default(),
                Value::Array(a) => a.iter().filter_map(|v| v.as_u64().map(|n| n as usize)).collect(),
                _ => Vec::new(),
            };
            for i in idx {
                if let Some((t, c)) = name_of(i) {
                    ts[t].primary_key.push(c.clone());
                    if let Some(col) = ts[t].columns.iter_mut().find(|x| x.name == c) {
                        col.nullable = false;
                    }
                }
            }
        }
        for (from, to) in fks {
            if let (Some((ft, fc)), Some((tt, tc))) = (name_of(from), name_of(to)) {
                let target = tables[tt].clone();
                ts[ft].foreign_keys.push(ForeignKey {
                    columns: vec![fc],
                    references_table: target,
                    references_columns: vec![tc],
                });
            }
        }
        out.push(DatabaseSchema {
            id: sanitize_identifier(id),
            scenario: format!("Imported database {id}"),
            tables: ts,
        });
    }
    Ok(out)
}
