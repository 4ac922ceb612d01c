//! Physical database creation in foreign-key order, and read-back.

use std::collections::BTreeMap;
use std::path::Path;

use rusqlite::types::Value as SqlValue;
use rusqlite::{params_from_iter, Connection};
use serde_json::Value;

use super::schema::*;
use super::validate::topo_order;
use super::ForgeError;

pub fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn quote_list(names: &[String]) -> String {
    names.iter().map(|n| quote_ident(n)).collect::<Vec<_>>().join(", ")
}

pub fn create_table_sql(t: &TableSchema) -> String {
    let mut parts: Vec<String> = t
        .columns
        .iter()
        .map(|c| {
            let mut s = format!("{} {}", quote_ident(&c.name), c.data_type.sql_name());
            if !c.nullable {
                s.push_str(" NOT NULL");
            }
            s
        })
        .collect();
    if !t.primary_key.is_empty() {
        parts.push(format!("PRIMARY KEY ({})", quote_list(&t.primary_key)));
    }
    for fk in &t.foreign_keys {
        parts.push(format!(
            "FOREIGN KEY ({}) REFERENCES {} ({})",
            quote_list(&fk.columns),
            quote_ident(&fk.references_table),
            quote_list(&fk.references_columns)
        ));
    }
    format!("CREATE TABLE {} ({})", quote_ident(&t.name), parts.join(", "))
}

/// Converts a sample value to its stored form for a column type.
pub fn to_sql_value(v: &Value, ty: DataType) -> SqlValue {
    match (v, ty) {
        (Value::Null, _) => SqlValue::Null,
        (Value::Bool(b), _) => SqlValue::Integer(*b as i64),
        (Value::String(s), DataType::Blob) => match hex::decode(s) {
            Ok(bytes) => SqlValue::Blob(bytes),
            Err(_) => SqlValue::Text(s.clone()),
        },
        (Value::String(s), _) => SqlValue::Text(s.clone()),
        (Value::Number(n), DataType::Json) => SqlValue::Text(n.to_string()),
        (Value::Number(n), _) => match n.as_i64() {
            Some(i) => SqlValue::Integer(i),
            None => SqlValue::Real(n.as_f64().unwrap_or(0.0)),
        },
        (other, _) => SqlValue::Text(other.to_string()),
    }
}

fn from_sql_value(v: SqlValue, ty: DataType) -> Value {
    match v {
        SqlValue::Null => Value::Null,
        SqlValue::Integer(i) => match ty {
            DataType::Boolean => Value::Bool(i != 0),
            _ => Value::from(i),
        },
        SqlValue::Real(f) => serde_json::Number::from_f64(f).map(Value::Number).unwrap_or(Value::Null),
        SqlValue::Text(s) => match ty {
            DataType::Json => serde_json::from_str(&s).unwrap_or(Value::String(s)),
            _ => Value::String(s),
        },
        SqlValue::Blob(b) => Value::String(hex::encode(b)),
    }
}

pub fn open_with_foreign_keys(path: &Path) -> Result<Connection, ForgeError> {
    let conn = Connection::open(path).map_err(|e| ForgeError::Io(format!("{}: {e}", path.display())))?;
    conn.pragma_update(None, "foreign_keys", true)?;
    Ok(conn)
}

/// Creates every table in foreign-key order and inserts the sample rows.
/// The file is built beside `path` and moved into place on success.
pub fn initialize_database(schema: &DatabaseSchema, path: &Path) -> Result<(), ForgeError> {
    let order = topo_order(schema)?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| ForgeError::Io(format!("{}: {e}", dir.display())))?;
    let tmp = tempfile::Builder::new()
        .prefix(".forge-")
        .suffix(".sqlite")
        .tempfile_in(dir)
        .map_err(|e| ForgeError::Io(e.to_string()))?;
    {
        let mut conn = open_with_foreign_keys(tmp.path())?;
        let tx = conn.transaction()?;
        for name in &order {
            let t = schema.table(name).expect("ordered table exists");
            tx.execute(&create_table_sql(t), [])?;
            if t.sample_rows.is_empty() {
                continue;
            }
            let placeholders = vec!["?"; t.columns.len()].join(", ");
            let cols: Vec<String> = t.columns.iter().map(|c| c.name.clone()).collect();
            let sql = format!("INSERT INTO {} ({}) VALUES ({placeholders})", quote_ident(&t.name), quote_list(&cols));
            let mut stmt = tx.prepare(&sql)?;
            for (i, row) in t.sample_rows.iter().enumerate() {
                let values = t.columns.iter().zip(row).map(|(c, v)| to_sql_value(v, c.data_type));
                stmt.execute(params_from_iter(values)).map_err(|e| ForgeError::ConstraintViolation {
                    table: t.name.clone(),
                    row: i,
                    message: e.to_string(),
                })?;
            }
        }
        tx.commit()?;
    }
    tmp.persist(path).map_err(|e| ForgeError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Reconstructs names, types, nullability, keys and rows from a file.
/// Descriptions and the scenario are not stored and come back empty.
pub fn read_back(path: &Path) -> Result<DatabaseSchema, ForgeError> {
    if !path.exists() {
        return Err(ForgeError::Io(format!("{}: no such file", path.display())));
    }
    let conn = Connection::open_with_flags(path, rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY)?;
    let mut names_stmt =
        conn.prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name")?;
    let names: Vec<String> = names_stmt.query_map([], |r| r.get(0))?.collect::<Result<_, _>>()?;
    let mut tables = Vec::new();
    for name in names {
        let mut columns = Vec::new();
        let mut pk: Vec<(i64, String)> = Vec::new();
        let mut info = conn.prepare(&format!("PRAGMA table_info({})", quote_ident(&name)))?;
        let rows = info.query_map([], |r| {
            Ok((
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, i64>(3)?,
                r.get::<_, i64>(5)?,
            ))
        })?;
        for row in rows {
            let (cname, ty, notnull, pk_pos) = row?;
            let data_type = ty.parse::<DataType>().map_err(ForgeError::Io)?;
            if pk_pos > 0 {
                pk.push((pk_pos, cname.clone()));
            }
            columns.push(ColumnSchema {
                name: cname,
                description: String::new(),
                data_type,
                nullable: notnull == 0,
            });
        }
        pk.sort();
        let mut fk_stmt = conn.prepare(&format!("PRAGMA foreign_key_list({})", quote_ident(&name)))?;
        let fk_rows = fk_stmt.query_map([], |r| {
            Ok((
                r.get::<_, i64>(0)?,
                r.get::<_, i64>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, String>(4)?,
            ))
        })?;
        let mut grouped: BTreeMap<i64, Vec<(i64, String, String, String)>> = BTreeMap::new();
        for r in fk_rows {
            let (id, seq, table, from, to) = r?;
            grouped.entry(id).or_default().push((seq, table, from, to));
        }
        let mut foreign_keys: Vec<ForeignKey> = grouped
            .into_values()
            .map(|mut parts| {
                parts.sort();
                ForeignKey {
                    columns: parts.iter().map(|p| p.2.clone()).collect(),
                    references_table: parts[0].1.clone(),
                    references_columns: parts.iter().map(|p| p.3.clone()).collect(),
                }
            })
            .collect();
        foreign_keys.sort();
        let col_list: Vec<String> = columns.iter().map(|c| quote_ident(&c.name)).collect();
        let mut data = conn.prepare(&format!(
            "SELECT {} FROM {} ORDER BY rowid",
            col_list.join(", "),
            quote_ident(&name)
        ))?;
        let types: Vec<DataType> = columns.iter().map(|c| c.data_type).collect();
        let sample_rows = data
            .query_map([], |r| {
                (0..types.len())
                    .map(|i| Ok(from_sql_value(r.get::<_, SqlValue>(i)?, types[i])))
                    .collect::<Result<Vec<_>, _>>()
            })?
            .collect::<Result<Vec<_>, _>>()?;
        tables.push(TableSchema {
            name,
            description: String::new(),
            columns,
            primary_key: pk.into_iter().map(|(_, c)| c).collect(),
            foreign_keys,
            sample_rows,
        });
    }
    Ok(DatabaseSchema {
        id: String::new(),
        scenario: String::new(),
        tables,
    })
}

/// Names, types, nullability and keys, with tables and foreign keys in a
/// canonical order. Two schemas are structurally equal iff these are.
pub fn structural_form(schema: &DatabaseSchema) -> Vec<(String, Vec<(String, DataType, bool)>, Vec<String>, Vec<ForeignKey>)> {
    let mut out: Vec<_> = schema
        .tables
        .iter()
        .map(|t| {
            let mut fks = t.foreign_keys.clone();
            fks.sort();
            (
                t.name.clone(),
                t.columns.iter().map(|c| (c.name.clone(), c.data_type, c.nullable)).collect(),
                t.primary_key.clone(),
                fks,
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
