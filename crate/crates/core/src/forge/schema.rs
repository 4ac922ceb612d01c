//! Schema documents: tables, columns, keys and sample rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::sql::TemporalFormats;

/// Declared column types accepted by the forge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DataType {
    Integer,
    Real,
    Text,
    Numeric,
    Blob,
    Boolean,
    Date,
    Datetime,
    Json,
}

impl DataType {
    pub const ALL: [DataType; 9] = [
        DataType::Integer,
        DataType::Real,
        DataType::Text,
        DataType::Numeric,
        DataType::Blob,
        DataType::Boolean,
        DataType::Date,
        DataType::Datetime,
        DataType::Json,
    ];

    pub fn sql_name(self) -> &'static str {
        match self {
            DataType::Integer => "INTEGER",
            DataType::Real => "REAL",
            DataType::Text => "TEXT",
            DataType::Numeric => "NUMERIC",
            DataType::Blob => "BLOB",
            DataType::Boolean => "BOOLEAN",
            DataType::Date => "DATE",
            DataType::Datetime => "DATETIME",
            DataType::Json => "JSON",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, DataType::Integer | DataType::Real | DataType::Numeric)
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, DataType::Date | DataType::Datetime)
    }

    /// Whether a foreign key may connect columns of these two types.
    pub fn compatible(self, other: DataType) -> bool {
        self == other || (self.is_numeric() && other.is_numeric())
    }

    /// Whether `v` is an acceptable non-null sample value.
    pub fn accepts(self, v: &Value) -> bool {
        let formats = |fmt: &str| TemporalFormats(vec![fmt.to_string()]);
        match (self, v) {
            (_, Value::Null) => false,
            (DataType::Integer, Value::Number(n)) => n.is_i64() || n.is_u64(),
            (DataType::Real | DataType::Numeric, Value::Number(_)) => true,
            (DataType::Text, Value::String(_)) => true,
            (DataType::Blob, Value::String(s)) => s.len() % 2 == 0 && s.bytes().all(|b| b.is_ascii_hexdigit()),
            (DataType::Boolean, Value::Bool(_)) => true,
            (DataType::Boolean, Value::Number(n)) => matches!(n.as_i64(), Some(0 | 1)),
            (DataType::Date, Value::String(s)) => formats("YYYY-MM-DD").matches(s),
            (DataType::Datetime, Value::String(s)) => {
                formats("YYYY-MM-DD HH:MM:SS").matches(s) || formats("YYYY-MM-DD").matches(s)
            }
            (DataType::Json, _) => true,
            _ => false,
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.sql_name())
    }
}

impl FromStr for DataType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        DataType::ALL
            .into_iter()
            .find(|t| t.sql_name() == upper)
            .ok_or_else(|| format!("unknown data type '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub data_type: DataType,
    #[serde(default = "default_true")]
    pub nullable: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub references_table: String,
    pub references_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub columns: Vec<ColumnSchema>,
    #[serde(default)]
    pub primary_key: Vec<String>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKey>,
    /// One value per column, in column order.
    #[serde(default)]
    pub sample_rows: Vec<Vec<Value>>,
}

impl TableSchema {
    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Sample values of one column.
    pub fn column_values(&self, name: &str) -> Vec<&Value> {
        match self.column_index(name) {
            Some(i) => self.sample_rows.iter().filter_map(|r| r.get(i)).collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseSchema {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub scenario: String,
    pub tables: Vec<TableSchema>,
}

impl DatabaseSchema {
    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut TableSchema> {
        self.tables.iter_mut().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn fk_edge_count(&self) -> usize {
        self.tables.iter().map(|t| t.foreign_keys.len()).sum()
    }

    /// Content hash over everything except the id itself.
    pub fn content_id(&self) -> String {
        let mut canon = self.clone();
        canon.id.clear();
        let bytes = serde_json::to_vec(&canon).expect("schema serializes");
        let digest = hex::encode(Sha256::digest(&bytes));
        let stem = self
            .tables
            .first()
            .map(|t| sanitize_identifier(&t.name))
            .unwrap_or_else(|| "db".into());
        format!("{stem}_{}", &digest[..12])
    }

    /// Sets `id` to the content hash and returns it.
    pub fn assign_id(&mut self) -> String {
        self.id = self.content_id();
        self.id.clone()
    }

    /// Every string and numeric sample value, for referential checks.
    pub fn content_strings(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.tables {
            for row in &t.sample_rows {
                for v in row {
                    match v {
                        Value::String(s) => {
                            out.insert(s.clone());
                        }
                        Value::Number(n) => {
                            out.insert(n.to_string());
                        }
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// Compact schema text for prompts: one line per table.
    pub fn prompt_text(&self) -> String {
        let mut out = String::new();
        if !self.scenario.is_empty() {
            out.push_str(&format!("-- {}\n", self.scenario));
        }
        for t in &self.tables {
            let cols: Vec<String> = t
                .columns
                .iter()
                .map(|c| {
                    let mut s = format!("{} {}", c.name, c.data_type);
                    if !c.description.is_empty() {
                        s.push_str(&format!(" -- {}", c.description));
                    }
                    s
                })
                .collect();
            out.push_str(&format!("{}({})", t.name, cols.join(", ")));
            if !t.primary_key.is_empty() {
                out.push_str(&format!(" PK({})", t.primary_key.join(", ")));
            }
            for fk in &t.foreign_keys {
                out.push_str(&format!(
                    " FK({}) -> {}({})",
                    fk.columns.join(", "),
                    fk.references_table,
                    fk.references_columns.join(", ")
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Lowercase identifier made of `[a-z0-9_]`, never starting with a digit.
pub fn sanitize_identifier(raw: &str) -> String {
    let mut out = String::new();
    let mut last_us = false;
    for ch in raw.trim().chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
            last_us = false;
        } else if !last_us && !out.is_empty() {
            out.push('_');
            last_us = true;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() {
        out.push_str("col");
    }
    if out.as_bytes()[0].is_ascii_digit() {
        out.insert_str(0, "c_");
    }
    if crate::sql::is_reserved(&out) {
        out.push_str("_value");
    }
    out
}

/// Flat source table in the WikiSQL release layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTable {
    pub id: String,
    #[serde(default)]
    pub page_title: String,
    #[serde(default)]
    pub section_title: String,
    #[serde(default)]
    pub caption: String,
    pub header: Vec<String>,
    /// Per-column type tags, `text` or `real`.
    pub types: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl SourceTable {
    pub fn title(&self) -> &str {
        [&self.caption, &self.section_title, &self.page_title]
            .into_iter()
            .find(|s| !s.trim().is_empty())
            .map(|s| s.as_str())
            .unwrap_or(&self.id)
    }
}

/// Map from table name to its parents via foreign keys.
pub fn parent_map(schema: &DatabaseSchema) -> BTreeMap<String, BTreeSet<String>> {
    schema
        .tables
        .iter()
        .map(|t| {
            (
                t.name.clone(),
                t.foreign_keys.iter().map(|f| f.references_table.clone()).collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn type_conformance() {
        assert!(DataType::Integer.accepts(&json!(3)));
        assert!(!DataType::Integer.accepts(&json!(3.5)));
        assert!(DataType::Date.accepts(&json!("2023-04-01")));
        assert!(!DataType::Date.accepts(&json!("April")));
        assert!(DataType::Blob.accepts(&json!("00ff")));
        assert!(DataType::Json.accepts(&json!({"a": 1})));
        assert!(!DataType::Text.accepts(&Value::Null));
    }

    #[test]
    fn identifiers_are_sanitized() {
        assert_eq!(sanitize_identifier("No. of Wins"), "no_of_wins");
        assert_eq!(sanitize_identifier("2010 Pop."), "c_2010_pop");
        assert_eq!(sanitize_identifier("Order"), "order_value");
        assert_eq!(sanitize_identifier("***"), "col");
    }
}
