//! Structural validation and foreign-key ordering.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::DatabaseSchema;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemaViolation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{t}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// One directed foreign-key cycle, first table repeated at the end.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("foreign-key cycle {}", .cycle.join(" -> "))]
pub struct CycleError {
    pub cycle: Vec<String>,
}

/// Tables ordered so every referenced table precedes the tables that
/// reference it. Ties are broken by table name.
pub fn topo_order(schema: &DatabaseSchema) -> Result<Vec<String>, CycleError> {
    let names: BTreeSet<&str> = schema.tables.iter().map(|t| t.name.as_str()).collect();
    let mut parents: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut children: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for t in &schema.tables {
        let entry = parents.entry(t.name.as_str()).or_default();
        for fk in &t.foreign_keys {
            if let Some(p) = names.get(fk.references_table.as_str()) {
                entry.insert(p);
                children.entry(p).or_default().insert(t.name.as_str());
            }
        }
    }
    let mut indegree: BTreeMap<&str, usize> = parents.iter().map(|(k, v)| (*k, v.len())).collect();
    let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    let mut order = Vec::with_capacity(names.len());
    while let Some(t) = ready.pop_first() {
        order.push(t.to_string());
        for c in children.get(t).into_iter().flatten() {
            let d = indegree.get_mut(c).expect("child is a table");
            *d -= 1;
            if *d == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == names.len() {
        return Ok(order);
    }
    let placed: HashSet<&str> = order.iter().map(|s| s.as_str()).collect();
    let remaining = |t: &str| !placed.contains(t);
    // Every remaining table still has a remaining parent, so walking
    // parent edges must revisit a table.
    let start = *names.iter().find(|t| remaining(t)).expect("some table is unplaced");
    let mut path: Vec<&str> = vec![start];
    loop {
        let cur = *path.last().unwrap();
        let next = *parents[cur].iter().find(|t| remaining(t)).expect("unplaced table has an unplaced parent");
        if let Some(pos) = path.iter().position(|t| *t == next) {
            let mut cycle: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
            cycle.push(next.to_string());
            return Err(CycleError { cycle });
        }
        path.push(next);
    }
}

/// Every structural problem with `schema`; empty means valid.
pub fn validate_schema(schema: &DatabaseSchema) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    let mut push = |table: Option<&str>, message: String| {
        out.push(SchemaViolation {
            table: table.map(str::to_string),
            message,
        })
    };
    if schema.tables.is_empty() {
        push(None, "schema has no tables".into());
    }
    let mut seen = HashSet::new();
    for t in &schema.tables {
        if t.name.trim().is_empty() {
            push(None, "table with an empty name".into());
        }
        if !seen.insert(t.name.to_ascii_lowercase()) {
            push(Some(&t.name), "duplicate table name".into());
        }
    }
    for t in &schema.tables {
        let tn = Some(t.name.as_str());
        if t.columns.is_empty() {
            push(tn, "table has no columns".into());
        }
        let mut cols = HashSet::new();
        for c in &t.columns {
            if c.name.trim().is_empty() {
                push(tn, "column with an empty name".into());
            }
            if !cols.insert(c.name.to_ascii_lowercase()) {
                push(tn, format!("duplicate column '{}'", c.name));
            }
        }
        for k in &t.primary_key {
            match t.column(k) {
                None => push(tn, format!("primary-key column '{k}' does not exist")),
                Some(c) if c.nullable => push(tn, format!("primary-key column '{k}' is nullable")),
                Some(_) => {}
            }
        }
        for fk in &t.foreign_keys {
            let label = format!("foreign key ({}) -> {}", fk.columns.join(", "), fk.references_table);
            if fk.columns.is_empty() {
                push(tn, format!("{label} has no columns"));
            }
            if fk.columns.len() != fk.references_columns.len() {
                push(
                    tn,
                    format!(
                        "{label}: arity mismatch, {} local vs {} referenced columns",
                        fk.columns.len(),
                        fk.references_columns.len()
                    ),
                );
            }
            for c in &fk.columns {
                if t.column(c).is_none() {
                    push(tn, format!("{label}: local column '{c}' does not exist"));
                }
            }
            let Some(parent) = schema.table(&fk.references_table) else {
                push(tn, format!("{label}: referenced table '{}' does not exist", fk.references_table));
                continue;
            };
            for rc in &fk.references_columns {
                if parent.column(rc).is_none() {
                    push(tn, format!("{label}: referenced column '{}.{rc}' does not exist", parent.name));
                }
            }
            let same_key = fk.references_columns.len() == parent.primary_key.len()
                && fk
                    .references_columns
                    .iter()
                    .zip(&parent.primary_key)
                    .all(|(a, b)| a.eq_ignore_ascii_case(b));
            if !same_key {
                push(tn, format!("{label}: referenced columns must be the primary key of '{}'", parent.name));
            }
            for (lc, rc) in fk.columns.iter().zip(&fk.references_columns) {
                if let (Some(l), Some(r)) = (t.column(lc), parent.column(rc)) {
                    if !l.data_type.compatible(r.data_type) {
                        push(
                            tn,
                            format!("{label}: type {} of '{lc}' incompatible with {} of '{rc}'", l.data_type, r.data_type),
                        );
                    }
                }
            }
        }
        for (i, row) in t.sample_rows.iter().enumerate() {
            if row.len() != t.columns.len() {
                push(tn, format!("sample row {i} has {} values for {} columns", row.len(), t.columns.len()));
                continue;
            }
            for (c, v) in t.columns.iter().zip(row) {
                let ok = match v {
                    Value::Null => c.nullable,
                    v => c.data_type.accepts(v),
                };
                if !ok {
                    push(tn, format!("sample row {i}: value {v} does not conform to {} column '{}'", c.data_type, c.name));
                }
            }
        }
    }
    if let Err(e) = topo_order(schema) {
        push(None, e.to_string());
    }
    out
}
