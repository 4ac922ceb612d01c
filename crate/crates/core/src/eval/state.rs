//! Canonical database states and result sets.

use std::cmp::Ordering;
use std::fmt;

use rusqlite::types::{Value as SqlValue, ValueRef};
use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Scale of the grid real values are rounded to before comparison.
const REAL_GRID: f64 = 1e6;

/// Engine value in canonical encoding. Numbers share one representation
/// on a 1e-6 grid so that integer and real results compare equal and
/// equality stays transitive. `Null` orders before every other value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Canon {
    Null,
    Num(i128),
    /// Non-finite reals, by bit pattern.
    Special(u64),
    Text(String),
    Blob(Vec<u8>),
}

impl Canon {
    pub fn real(x: f64) -> Canon {
        if x.is_finite() {
            Canon::Num((x * REAL_GRID).round() as i128)
        } else {
            Canon::Special(x.to_bits())
        }
    }

    pub fn from_ref(v: ValueRef<'_>) -> Canon {
        match v {
            ValueRef::Null => Canon::Null,
            ValueRef::Integer(i) => Canon::Num(i as i128 * REAL_GRID as i128),
            ValueRef::Real(r) => Canon::real(r),
            ValueRef::Text(t) => Canon::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Canon::Blob(b.to_vec()),
        }
    }

    pub fn from_value(v: &SqlValue) -> Canon {
        Canon::from_ref(ValueRef::from(v))
    }
}

impl fmt::Display for Canon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Canon::Null => f.write_str("NULL"),
            Canon::Num(n) => write!(f, "{}", *n as f64 / REAL_GRID),
            Canon::Special(b) => write!(f, "{}", f64::from_bits(*b)),
            Canon::Text(s) => write!(f, "'{s}'"),
            Canon::Blob(b) => write!(f, "x'{}'", hex::encode(b)),
        }
    }
}

pub type CanonRow = Vec<Canon>;

pub fn canon_rows(rows: &[Vec<SqlValue>]) -> Vec<CanonRow> {
    rows.iter().map(|r| r.iter().map(Canon::from_value).collect()).collect()
}

/// Rows sorted so that equal multisets compare equal.
pub fn multiset(mut rows: Vec<CanonRow>) -> Vec<CanonRow> {
    rows.sort();
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableState {
    pub name: String,
    /// Column name, declared type, not-null flag and key position, in order.
    pub signature: Vec<(String, String, bool, i64)>,
    pub rows: Vec<CanonRow>,
}

/// Every user table with its signature and row multiset, sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseState {
    pub tables: Vec<TableState>,
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub fn snapshot_state(conn: &Connection) -> Result<DatabaseState, EvalError> {
    let db = |e: rusqlite::Error| EvalError::Io(e.to_string());
    let mut names: Vec<String> = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%'")
        .map_err(db)?
        .query_map([], |r| r.get(0))
        .map_err(db)?
        .collect::<Result<_, _>>()
        .map_err(db)?;
    names.sort();
    let mut tables = Vec::new();
    for name in names {
        let signature = conn
            .prepare(&format!("PRAGMA table_info({})", quote(&name)))
            .map_err(db)?
            .query_map([], |r| Ok((r.get::<_, String>(1)?, r.get::<_, String>(2)?.to_ascii_uppercase(), r.get::<_, bool>(3)?, r.get::<_, i64>(5)?)))
            .map_err(db)?
            .collect::<Result<Vec<_>, _>>()
            .map_err(db)?;
        let mut stmt = conn.prepare(&format!("SELECT * FROM {}", quote(&name))).map_err(db)?;
        let width = stmt.column_count();
        let mut rows = Vec::new();
        let mut q = stmt.query([]).map_err(db)?;
        while let Some(r) = q.next().map_err(db)? {
            rows.push((0..width).map(|i| r.get_ref(i).map(Canon::from_ref)).collect::<Result<Vec<_>, _>>().map_err(db)?);
        }
        tables.push(TableState {
            name,
            signature,
            rows: multiset(rows),
        });
    }
    Ok(DatabaseState { tables })
}

impl DatabaseState {
    /// Names of tables that differ, are missing or were added.
    pub fn diff(&self, other: &DatabaseState) -> Vec<String> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.tables.len() || j < other.tables.len() {
            let a = self.tables.get(i);
            let b = other.tables.get(j);
            match (a, b) {
                (Some(a), Some(b)) => match a.name.cmp(&b.name) {
                    Ordering::Equal => {
                        if a.signature != b.signature {
                            out.push(format!("{}: schema differs", a.name));
                        } else if a.rows != b.rows {
                            out.push(format!("{}: rows differ ({} vs {})", a.name, a.rows.len(), b.rows.len()));
                        }
                        i += 1;
                        j += 1;
                    }
                    Ordering::Less => {
                        out.push(format!("{}: only on the left", a.name));
                        i += 1;
                    }
                    Ordering::Greater => {
                        out.push(format!("{}: only on the right", b.name));
                        j += 1;
                    }
                },
                (Some(a), None) => {
                    out.push(format!("{}: only on the left", a.name));
                    i += 1;
                }
                (None, Some(b)) => {
                    out.push(format!("{}: only on the right", b.name));
                    j += 1;
                }
                (None, None) => break,
            }
        }
        out
    }
}
