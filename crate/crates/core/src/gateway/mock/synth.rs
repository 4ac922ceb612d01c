//! Schema documents for the mock's database generation and enhancement
//! responses.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::forge::{sanitize_identifier, DataType, DatabaseSchema, SourceTable};

const STOP: &[&str] = &["list", "of", "the", "a", "an", "and", "in", "for", "by", "on", "to", "table", "c"];

/// Short table-name stem from a source title.
pub(crate) fn noun(source: &SourceTable) -> String {
    let words: Vec<String> = sanitize_identifier(source.title())
        .split('_')
        .filter(|w| !w.is_empty() && !STOP.contains(w) && !w.chars().all(|c| c.is_ascii_digit()))
        .take(2)
        .map(str::to_string)
        .collect();
    let mut stem = words.join("_");
    stem.truncate(24);
    let stem = stem.trim_end_matches('_').to_string();
    if stem.is_empty() || stem.as_bytes()[0].is_ascii_digit() {
        format!("items_{}", sanitize_identifier(&source.id))
    } else {
        sanitize_identifier(&stem)
    }
}

fn column(name: &str, ty: DataType, description: &str, nullable: bool) -> Value {
    json!({"name": name, "description": description, "data_type": ty, "nullable": nullable})
}

fn source_value(v: &Value, real: bool) -> Value {
    match (v, real) {
        (Value::Null, _) => Value::Null,
        (Value::Number(_), true) => v.clone(),
        (Value::String(s), true) => s
            .trim()
            .replace(',', "")
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map(Value::Number)
            .unwrap_or(Value::Null),
        (Value::String(s), false) => Value::String(s.clone()),
        (other, false) => Value::String(other.to_string().trim_matches('"').to_string()),
        _ => Value::Null,
    }
}

/// Three-table schema around a source table: groups, the source rows,
/// and dated events on those rows.
pub fn generate(source: &SourceTable, n: usize) -> Value {
    let stem = noun(source);
    let main = stem.clone();
    let groups = format!("{stem}_groups");
    let events = format!("{stem}_events");
    let rows: Vec<&Vec<Value>> = source.rows.iter().take(n.max(1)).collect();

    let mut used: BTreeSet<String> = ["id", "group_id"].iter().map(|s| s.to_string()).collect();
    let mut main_cols = vec![
        column("id", DataType::Integer, &format!("Identifier of the {} entry", stem.replace('_', " ")), false),
        column("group_id", DataType::Integer, "Group the entry belongs to", true),
    ];
    let mut kinds = Vec::new();
    for (i, h) in source.header.iter().enumerate() {
        let mut name = sanitize_identifier(h);
        let base = name.clone();
        let mut k = 2;
        while used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        used.insert(name.clone());
        let real = source.types.get(i).is_some_and(|t| t.eq_ignore_ascii_case("real"));
        kinds.push(real);
        let ty = if real { DataType::Real } else { DataType::Text };
        main_cols.push(column(&name, ty, &format!("{} as listed in the source", h.trim()), true));
    }
    let group_count = rows.len().clamp(1, 3);
    let main_rows: Vec<Value> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut out = vec![json!(i + 1), json!(i % group_count + 1)];
            for (j, real) in kinds.iter().enumerate() {
                out.push(r.get(j).map(|v| source_value(v, *real)).unwrap_or(Value::Null));
            }
            Value::Array(out)
        })
        .collect();

    let first_text = kinds.iter().position(|r| !r);
    let mut names: Vec<String> = Vec::new();
    if let Some(j) = first_text {
        for r in &rows {
            if let Some(Value::String(s)) = r.get(j).map(|v| source_value(v, false)) {
                if !s.is_empty() && s.len() <= 40 && !names.contains(&s) {
                    names.push(s);
                }
            }
        }
    }
    let categories = ["primary", "secondary", "archive"];
    let group_rows: Vec<Value> = (0..group_count)
        .map(|i| {
            let name = names
                .get(i)
                .map(|s| format!("{s} group"))
                .unwrap_or_else(|| format!("Group {}", (b'A' + i as u8) as char));
            json!([i + 1, name, categories[i % 3]])
        })
        .collect();

    let numeric = kinds.iter().position(|r| *r);
    let statuses = ["open", "closed", "pending"];
    let channels = ["web", "phone", "store", "partner"];
    let event_rows: Vec<Value> = (0..rows.len())
        .map(|i| {
            let base = numeric
                .and_then(|j| rows[i].get(j))
                .map(|v| source_value(v, true))
                .and_then(|v| v.as_f64())
                .unwrap_or(10.0 * (i as f64 + 1.0));
            let amount = ((base * 1.5 + 2.25) * 100.0).round() / 100.0;
            json!([
                i + 1,
                i % rows.len() + 1,
                format!("2023-{:02}-{:02}", (i * 2) % 12 + 1, (i * 7) % 27 + 1),
                amount,
                statuses[i % 3],
                {"channel": channels[i % 4], "priority": i % 3 + 1}
            ])
        })
        .collect();

    json!({
        "scenario": format!(
            "Operations tracking built around \"{}\": {} entries organised into groups, with dated events recorded against each entry.",
            source.title(),
            stem.replace('_', " ")
        ),
        "tables": [
            {
                "name": groups,
                "description": format!("Groups of {} entries", stem.replace('_', " ")),
                "columns": [
                    column("id", DataType::Integer, "Identifier of the group", false),
                    column("name", DataType::Text, "Display name of the group", false),
                    column("category", DataType::Text, "Category of the group", true),
                ],
                "primary_key": ["id"],
                "foreign_keys": [],
                "sample_rows": group_rows,
            },
            {
                "name": main,
                "description": format!("{} entries taken from the source table", stem.replace('_', " ")),
                "columns": main_cols,
                "primary_key": ["id"],
                "foreign_keys": [{"columns": ["group_id"], "references_table": groups, "references_columns": ["id"]}],
                "sample_rows": main_rows,
            },
            {
                "name": events,
                "description": format!("Events recorded for {} entries", stem.replace('_', " ")),
                "columns": [
                    column("id", DataType::Integer, "Identifier of the event", false),
                    column("entry_id", DataType::Integer, "Entry the event refers to", true),
                    column("event_date", DataType::Date, "Day the event happened", true),
                    column("amount", DataType::Real, "Monetary amount of the event", true),
                    column("status", DataType::Text, "Event status: open = awaiting action, closed = resolved, pending = on hold", true),
                    column("details", DataType::Json, "Extra attributes as a JSON object", true),
                ],
                "primary_key": ["id"],
                "foreign_keys": [{"columns": ["entry_id"], "references_table": main, "references_columns": ["id"]}],
                "sample_rows": event_rows,
            }
        ]
    })
}

fn fresh(existing: &BTreeSet<String>, stem: &str) -> String {
    (0..)
        .map(|i| if i == 0 { stem.to_string() } else { format!("{stem}_{i}") })
        .find(|n| !existing.contains(n))
        .expect("unbounded")
}

/// The input schema with added columns and, where a child table does not
/// yet reference a root table, one added foreign key. Values for the
/// trailing `notes` columns are left out of the sample rows.
pub fn enhance(schema: &DatabaseSchema) -> Value {
    let mut out = schema.clone();
    let roots: Vec<(String, String, Vec<Value>)> = schema
        .tables
        .iter()
        .filter(|t| t.foreign_keys.is_empty() && t.primary_key.len() == 1)
        .filter_map(|t| {
            let key = &t.primary_key[0];
            let ty = t.column(key)?.data_type;
            let values: Vec<Value> = t.column_values(key).into_iter().filter(|v| !v.is_null()).cloned().collect();
            (ty == DataType::Integer && !values.is_empty()).then(|| (t.name.clone(), key.clone(), values))
        })
        .collect();
    let regions = ["CA", "NY", "TX"];
    for t in &mut out.tables {
        let mut names: BTreeSet<String> = t.columns.iter().map(|c| c.name.clone()).collect();
        let add = |t: &mut crate::forge::TableSchema, name: String, ty: DataType, desc: &str, value: &dyn Fn(usize) -> Value| {
            t.columns.push(serde_json::from_value(column(&name, ty, desc, true)).expect("column"));
            for (i, row) in t.sample_rows.iter_mut().enumerate() {
                row.push(value(i));
            }
        };
        if t.foreign_keys.is_empty() {
            let name = fresh(&names, "region_code");
            names.insert(name.clone());
            add(t, name, DataType::Text, "Region code: CA = California, NY = New York, TX = Texas", &|i| {
                json!(regions[i % 3])
            });
        } else {
            let name = fresh(&names, "recorded_on");
            names.insert(name.clone());
            add(t, name, DataType::Date, "Date the entry was recorded", &|i| {
                json!(format!("2022-{:02}-15", i % 12 + 1))
            });
            let referenced: BTreeSet<String> = t.foreign_keys.iter().map(|f| f.references_table.clone()).collect();
            if let Some((root, key, values)) = roots.iter().find(|(r, _, _)| !referenced.contains(r) && *r != t.name) {
                let name = fresh(&names, &format!("{root}_ref"));
                names.insert(name.clone());
                let values = values.clone();
                add(t, name.clone(), DataType::Integer, &format!("Related row of {root}"), &move |i| {
                    values[i % values.len()].clone()
                });
                t.foreign_keys.push(crate::forge::ForeignKey {
                    columns: vec![name],
                    references_table: root.clone(),
                    references_columns: vec![key.clone()],
                });
            }
        }
        let notes = fresh(&names, "notes");
        t.columns
            .push(serde_json::from_value(column(&notes, DataType::Text, "Free-text remarks", true)).expect("column"));
    }
    json!({"scenario": out.scenario, "tables": out.tables})
}
