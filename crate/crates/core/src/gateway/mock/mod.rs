//! Deterministic offline provider. Answers from recorded fixtures when one
//! exists for a prompt, otherwise from rules over the call's bindings.

mod compose;
mod phrase;
mod synth;

pub use compose::{compose_sql, realizes};
pub use phrase::phrase_question;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::provider::{CompletionRequest, Provider, ProviderError};
use super::template::TemplateName;
use crate::forge::{DatabaseSchema, SourceTable};
use crate::sql::{chained_steps, parse_sql, summarize, AnalysisConfig, Dialect, SqlFeatureSummary};
use crate::taxonomy::{heuristic_intent, Combination};

/// Token the mock semantic validator treats as a question/SQL mismatch.
/// The mock question writer appends it to a small, fixed share of
/// questions so the quarantine path is exercised.
pub const MISMATCH_MARKER: &str = "(unrelated)";

/// One in this many generated questions carries the mismatch marker.
const MARKER_EVERY: u64 = 19;

/// One in this many fresh seed generations carries a misspelled column.
const TYPO_EVERY: u64 = 5;

pub struct MockProvider {
    fixtures: Option<PathBuf>,
}

impl MockProvider {
    /// `fixtures` holds recorded responses at
    /// `<dir>/<template>/<sha256 of prompt>.txt`.
    pub fn new(fixtures: Option<PathBuf>) -> Self {
        Self { fixtures }
    }

    /// Path a recorded response for this prompt would live at.
    pub fn fixture_path(dir: &Path, template: TemplateName, prompt: &str) -> PathBuf {
        dir.join(template.as_str())
            .join(format!("{}.txt", hex::encode(Sha256::digest(prompt.as_bytes()))))
    }
}

impl Provider for MockProvider {
    fn id(&self) -> String {
        "mock".into()
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        if let Some(dir) = &self.fixtures {
            let p = Self::fixture_path(dir, request.template, request.prompt);
            if let Ok(text) = std::fs::read_to_string(&p) {
                return Ok(text);
            }
        }
        respond(request).map_err(ProviderError::Fatal)
    }
}

pub(crate) fn digest(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

struct Bindings<'a>(&'a std::collections::BTreeMap<String, String>);

impl Bindings<'_> {
    fn get(&self, k: &str) -> Result<&str, String> {
        self.0.get(k).map(String::as_str).ok_or_else(|| format!("mock: missing binding '{k}'"))
    }

    fn json<T: serde::de::DeserializeOwned>(&self, k: &str) -> Result<T, String> {
        serde_json::from_str(self.get(k)?).map_err(|e| format!("mock: binding '{k}' is not valid: {e}"))
    }
}

fn question_seed(schema: &DatabaseSchema, combination: &str) -> u64 {
    digest(&["question", &schema.id, combination])
}

fn with_marker(question: String, prompt: &str) -> String {
    if digest(&["marker", prompt]) % MARKER_EVERY == 0 {
        format!("{question} {MISMATCH_MARKER}")
    } else {
        question
    }
}

fn respond(req: &CompletionRequest<'_>) -> Result<String, String> {
    let b = Bindings(req.bindings);
    let out = match req.template {
        TemplateName::DatabaseGeneration => {
            let source: SourceTable = b.json("source_table")?;
            let n = b.get("sample_rows")?.trim().parse().unwrap_or(5);
            synth::generate(&source, n)
        }
        TemplateName::DatabaseEnhancement => synth::enhance(&b.json("schema")?),
        TemplateName::QuestionGeneration => {
            let schema: DatabaseSchema = b.json("schema")?;
            let combo_text = b.get("combination")?;
            let combo: Combination = b.json("combination")?;
            let intent = combo.labels.core_intent;
            let question = if b.get("path")? == "sql_oriented" {
                phrase_question(intent, b.get("sql")?, &schema, false, digest(&[req.prompt]))
            } else {
                let seed = question_seed(&schema, combo_text);
                match compose_sql(&combo.labels, &schema, seed) {
                    Some(sql) => phrase_question(intent, &sql, &schema, true, seed),
                    None => b.get("reference_question")?.to_string(),
                }
            };
            json!({ "question": with_marker(question, req.prompt) })
        }
        TemplateName::SqlGeneration => {
            let schema: DatabaseSchema = b.json("schema")?;
            let combo_text = b.get("combination")?;
            let combo: Combination = b.json("combination")?;
            let seed = if b.get("path")? == "sql_oriented" {
                digest(&["sql", &schema.id, b.get("reference_sql")?])
            } else {
                question_seed(&schema, combo_text)
            };
            let sql = compose_sql(&combo.labels, &schema, seed).unwrap_or_else(|| b.0["reference_sql"].clone());
            json!({ "sql": sql })
        }
        TemplateName::KnowledgeGeneration => {
            let schema: DatabaseSchema = b.json("schema")?;
            json!({ "knowledge": knowledge(&schema, b.get("sql")?) })
        }
        TemplateName::SeedModification => {
            let schema: DatabaseSchema = b.json("schema")?;
            let combo: Combination = b.json("combination")?;
            let feedback = b.get("feedback")?;
            let seed = digest(&["seed", &schema.id, b.get("combination")?, feedback]);
            match compose_sql(&combo.labels, &schema, seed) {
                Some(sql) => {
                    let question = phrase_question(combo.labels.core_intent, &sql, &schema, false, seed);
                    let sql = if feedback.trim().is_empty() && seed % TYPO_EVERY == 0 {
                        misspell(&sql, &schema).unwrap_or(sql)
                    } else {
                        sql
                    };
                    json!({ "question": question, "sql": sql })
                }
                None => {
                    let blueprints: Vec<Value> = b.json("blueprints")?;
                    let first = blueprints.first().cloned().unwrap_or(Value::Null);
                    json!({
                        "question": first["question"].as_str().unwrap_or("List every record."),
                        "sql": first["sql"].as_str().unwrap_or("SELECT 1"),
                    })
                }
            }
        }
        TemplateName::SeedRepair => {
            let schema: DatabaseSchema = b.json("schema")?;
            let combo: Combination = b.json("combination")?;
            let sql = b.get("sql")?;
            let error = b.get("error")?;
            let fixed = repair_column(sql, error, &schema)
                .or_else(|| compose_sql(&combo.labels, &schema, digest(&["repair", sql, error])))
                .unwrap_or_else(|| sql.to_string());
            json!({ "sql": fixed })
        }
        TemplateName::IntentClassification => {
            let summary: SqlFeatureSummary = b.json("sql_features")?;
            json!({ "intent": heuristic_intent(b.get("question")?, &summary).name() })
        }
        TemplateName::SemanticValidation => {
            if b.get("question")?.contains(MISMATCH_MARKER) {
                json!({"verdict": "inconsistent", "reason": "the question mentions content unrelated to the query"})
            } else {
                json!({"verdict": "consistent", "reason": "the query answers the question"})
            }
        }
        TemplateName::QualityJudge => judge(b.get("question")?, b.get("sql")?, b.get("criteria")?),
    };
    Ok(out.to_string())
}

/// Replaces one qualified column reference with a near miss that names
/// no column of the schema.
fn misspell(sql: &str, schema: &DatabaseSchema) -> Option<String> {
    let columns: std::collections::BTreeSet<&str> =
        schema.tables.iter().flat_map(|t| t.columns.iter().map(|c| c.name.as_str())).collect();
    let bytes = sql.as_bytes();
    let mut i = 0;
    while let Some(off) = sql[i..].find('.') {
        let start = i + off + 1;
        let end = start + sql[start..].find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(sql.len() - start);
        let name = &sql[start..end];
        if name.len() >= 4 && columns.contains(name) && bytes[start].is_ascii_alphabetic() {
            let mut wrong = name.to_string();
            wrong.remove(name.len() - 2);
            if !columns.contains(wrong.as_str()) {
                return Some(format!("{}{wrong}{}", &sql[..start], &sql[end..]));
            }
        }
        i = start;
    }
    None
}

/// Fixes a "no such column" error by the closest schema column name.
fn repair_column(sql: &str, error: &str, schema: &DatabaseSchema) -> Option<String> {
    let rest = error.split("no such column: ").nth(1)?;
    let bad: String = rest
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '.')
        .collect();
    let bad = bad.rsplit('.').next()?.to_string();
    let best = schema
        .tables
        .iter()
        .flat_map(|t| t.columns.iter().map(|c| c.name.as_str()))
        .min_by_key(|c| (strsim::levenshtein(c, &bad), *c))?;
    if best == bad {
        return None;
    }
    let mut out = String::new();
    let mut last = 0;
    let is_word = |c: char| c.is_ascii_alphanumeric() || c == '_';
    for (i, _) in sql.match_indices(&bad) {
        let before = sql[..i].chars().next_back().is_none_or(|c| !is_word(c));
        let after = sql[i + bad.len()..].chars().next().is_none_or(|c| !is_word(c));
        if before && after {
            out.push_str(&sql[last..i]);
            out.push_str(best);
            last = i + bad.len();
        }
    }
    out.push_str(&sql[last..]);
    Some(out)
}

/// Single-quoted literals in order of appearance.
fn string_literals(sql: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = sql.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\'' {
            continue;
        }
        let mut s = String::new();
        while let Some(d) = chars.next() {
            if d == '\'' {
                if chars.peek() == Some(&'\'') {
                    chars.next();
                    s.push('\'');
                } else {
                    break;
                }
            } else {
                s.push(d);
            }
        }
        out.push(s);
    }
    out
}

/// `code = meaning` pairs declared in a column description.
pub(crate) fn value_mappings(description: &str) -> Vec<(String, String)> {
    let body = description.split_once(':').map(|(_, r)| r).unwrap_or(description);
    body.split(',')
        .filter_map(|part| {
            let (code, meaning) = part.split_once('=')?;
            let (code, meaning) = (code.trim(), meaning.trim().trim_end_matches('.'));
            (!code.is_empty() && !meaning.is_empty()).then(|| (code.to_string(), meaning.to_string()))
        })
        .collect()
}

fn knowledge(schema: &DatabaseSchema, sql: &str) -> Vec<Value> {
    let mut items = Vec::new();
    let literals = string_literals(sql);
    for t in &schema.tables {
        for c in &t.columns {
            for (code, meaning) in value_mappings(&c.description) {
                if literals.contains(&code) {
                    items.push(json!({
                        "kind": "value_mapping",
                        "text": format!("'{code}' in {}.{} means {meaning}.", t.name, c.name),
                    }));
                }
            }
        }
    }
    if let Ok(tree) = parse_sql(sql, Dialect::Sqlite) {
        let steps = chained_steps(&tree, &AnalysisConfig::default());
        if steps >= 2 {
            items.push(json!({
                "kind": "numeric_calculation",
                "text": format!("The figure is derived in {steps} chained steps; each intermediate result feeds the next operation."),
            }));
        }
    }
    items
}

fn judge(question: &str, sql: &str, criteria: &str) -> Value {
    let words = question.split_whitespace().count();
    let summary = summarize(sql, &AnalysisConfig::default()).ok();
    let verdicts: Vec<Value> = criteria
        .lines()
        .filter_map(|l| l.split(':').next().map(str::trim).filter(|s| !s.is_empty()))
        .map(|name| {
            let n = name.to_ascii_lowercase();
            let (level, why) = if n.contains("grammar") {
                let ok = question.chars().next().is_some_and(char::is_uppercase)
                    && (question.trim_end().ends_with('.') || question.trim_end().ends_with('?'));
                if ok {
                    ("Excellent", "well-formed sentence")
                } else {
                    ("Average", "sentence boundaries are unclear")
                }
            } else if n.contains("relevance") {
                if words >= 6 {
                    ("Excellent", "plausible business request")
                } else {
                    ("Good", "terse request")
                }
            } else if n.contains("ambigu") {
                if words >= 8 {
                    ("Excellent", "specific wording")
                } else {
                    ("Good", "short wording leaves some room")
                }
            } else if n.contains("answer") || n.contains("adherence") {
                if question.contains(MISMATCH_MARKER) {
                    ("Poor", "question asks for something else")
                } else {
                    ("Excellent", "query answers the question")
                }
            } else if n.contains("sql efficiency") {
                match &summary {
                    Some(s) if s.subquery_count + s.join_count <= 1 => ("Excellent", "direct plan"),
                    Some(s) if s.subquery_count + s.join_count <= 3 => ("Good", "a few joins or subqueries"),
                    Some(_) => ("Average", "many joins or subqueries"),
                    None => ("Poor", "query does not parse"),
                }
            } else if n.contains("solution") {
                match &summary {
                    Some(s) if s.token_count < 40 => ("Excellent", "compact query"),
                    Some(s) if s.token_count < 90 => ("Good", "moderately long query"),
                    Some(_) => ("Average", "long query"),
                    None => ("Poor", "query does not parse"),
                }
            } else if n.contains("correct") || n.contains("schema") {
                if summary.is_some() {
                    ("Excellent", "valid against the schema")
                } else {
                    ("Poor", "query does not parse")
                }
            } else {
                ("Good", "no issues found")
            };
            json!({"criterion": name, "level": level, "explanation": why})
        })
        .collect();
    json!({ "verdicts": verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_and_mappings() {
        assert_eq!(string_literals("SELECT 'a''b', x FROM t WHERE y = 'CA'"), vec!["a'b", "CA"]);
        assert_eq!(
            value_mappings("Region code: CA = California, NY = New York"),
            vec![("CA".into(), "California".into()), ("NY".into(), "New York".into())]
        );
    }

    #[test]
    fn repair_fixes_near_miss() {
        let schema: DatabaseSchema = serde_json::from_value(json!({
            "id": "x", "scenario": "",
            "tables": [{"name": "orders", "columns": [
                {"name": "id", "data_type": "INTEGER"}, {"name": "amount", "data_type": "REAL"}]}]
        }))
        .unwrap();
        let bad = misspell("SELECT a.amount FROM orders AS a", &schema).unwrap();
        assert_eq!(bad, "SELECT a.amout FROM orders AS a");
        let fixed = repair_column(&bad, "no such column: a.amout", &schema).unwrap();
        assert_eq!(fixed, "SELECT a.amount FROM orders AS a");
    }
}
