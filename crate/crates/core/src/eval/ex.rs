//! Execution accuracy: result comparison for queries, post-state
//! comparison for data and structure changes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};

use super::state::{canon_rows, multiset, snapshot_state, DatabaseState};
use super::EvalError;
use crate::exec::{self, ExecError};
use crate::sql::ast::Statement;
use crate::sql::{parse_sql, Dialect};
use crate::taxonomy::TaxonomyLabels;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub score: u8,
    /// Why the prediction did not match, when it did not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl MatchResult {
    fn hit() -> Self {
        Self { score: 1, detail: None }
    }

    fn miss(detail: impl Into<String>) -> Self {
        Self {
            score: 0,
            detail: Some(detail.into()),
        }
    }
}

/// Whether the gold statement is a query, and whether its top level is
/// ordered. Statements the parser rejects are classified by the engine.
fn gold_shape(gold: &str, conn: &Connection) -> (bool, bool) {
    match parse_sql(gold, Dialect::Sqlite) {
        Ok(tree) => match &tree.statement {
            Statement::Select(q) => (true, !q.order_by.is_empty()),
            _ => (false, false),
        },
        Err(_) => (conn.prepare(gold).map(|s| s.readonly()).unwrap_or(false), false),
    }
}

fn open_read_only(path: &Path) -> Result<Connection, EvalError> {
    Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}

/// Runs `sql` on a private copy of `db` and returns the post-state.
fn state_after(db: &Path, sql: &str, timeout: Duration) -> Result<Result<DatabaseState, ExecError>, EvalError> {
    let dir = tempfile::tempdir().map_err(|e| EvalError::Io(e.to_string()))?;
    let copy: PathBuf = dir.path().join("copy.sqlite");
    std::fs::copy(db, &copy).map_err(|e| EvalError::Io(format!("{}: {e}", db.display())))?;
    let conn = exec::open(&copy).map_err(|e| EvalError::Io(e.to_string()))?;
    if let Err(e) = exec::run(&conn, sql, timeout) {
        return Ok(Err(e));
    }
    snapshot_state(&conn).map(Ok)
}

/// 1 when `pred` has the same effect as `gold` on `db`. Queries compare
/// result multisets by column position, or sequences when the gold query
/// is ordered. Other statements compare the states each leaves on its own
/// copy of the database.
pub fn execution_match(pred: &str, gold: &str, db: &Path, timeout: Duration) -> Result<MatchResult, EvalError> {
    let conn = open_read_only(db)?;
    let (is_query, ordered) = gold_shape(gold, &conn);
    if is_query {
        let gold_rows = exec::run(&conn, gold, timeout).map_err(|e| EvalError::GoldFailure {
            sql: gold.to_string(),
            message: e.to_string(),
        })?;
        let pred_rows = match exec::run(&conn, pred, timeout) {
            Ok(r) => r,
            Err(e) => return Ok(MatchResult::miss(format!("prediction failed: {e}"))),
        };
        let (g, p) = (canon_rows(&gold_rows), canon_rows(&pred_rows));
        let same = if ordered { g == p } else { multiset(g) == multiset(p) };
        return Ok(if same {
            MatchResult::hit()
        } else {
            MatchResult::miss(format!("results differ ({} vs {} rows)", gold_rows.len(), pred_rows.len()))
        });
    }
    drop(conn);
    let gold_state = state_after(db, gold, timeout)?.map_err(|e| EvalError::GoldFailure {
        sql: gold.to_string(),
        message: e.to_string(),
    })?;
    let pred_state = match state_after(db, pred, timeout)? {
        Ok(s) => s,
        Err(e) => return Ok(MatchResult::miss(format!("prediction failed: {e}"))),
    };
    let diff = gold_state.diff(&pred_state);
    Ok(if diff.is_empty() {
        MatchResult::hit()
    } else {
        MatchResult::miss(diff.join("; "))
    })
}

/// Taxonomy dimension to break accuracy down by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakdown {
    CoreIntent,
    StatementType,
    SyntaxStructure,
    KeyAction,
}

impl Breakdown {
    /// Groups a record belongs to. Set-valued dimensions place a record in
    /// every member's group, or in `(none)` when the set is empty.
    pub fn groups(self, labels: &TaxonomyLabels) -> Vec<String> {
        let or_none = |v: Vec<String>| if v.is_empty() { vec!["(none)".to_string()] } else { v };
        match self {
            Breakdown::CoreIntent => vec![labels.core_intent.to_string()],
            Breakdown::StatementType => vec![labels.statement_type.to_string()],
            Breakdown::SyntaxStructure => or_none(labels.syntax_structures.iter().map(|s| s.to_string()).collect()),
            Breakdown::KeyAction => or_none(labels.key_actions.iter().map(|s| s.to_string()).collect()),
        }
    }
}

/// One prediction to score.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub id: String,
    pub pred: String,
    pub gold: String,
    pub db: PathBuf,
    pub labels: Option<TaxonomyLabels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub matched: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExReport {
    pub accuracy: f64,
    pub matched: usize,
    pub total: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub breakdown: BTreeMap<String, GroupScore>,
    /// Per-id outcome, in input order.
    pub results: Vec<(String, MatchResult)>,
}

pub fn execution_accuracy(pairs: &[EvalPair], breakdown: Option<Breakdown>, timeout: Duration) -> Result<ExReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let results: Vec<MatchResult> = pairs
        .par_iter()
        .map(|p| execution_match(&p.pred, &p.gold, &p.db, timeout))
        .collect::<Result<_, _>>()?;
    let matched = results.iter().filter(|r| r.score == 1).count();
    let mut groups: BTreeMap<String, GroupScore> = BTreeMap::new();
    if let Some(dim) = breakdown {
        for (p, r) in pairs.iter().zip(&results) {
            let names = p.labels.as_ref().map(|l| dim.groups(l)).unwrap_or_else(|| vec!["(unlabeled)".into()]);
            for g in names {
                let e = groups.entry(g).or_insert(GroupScore {
                    matched: 0,
                    total: 0,
                    accuracy: 0.0,
                });
                e.total += 1;
                e.matched += r.score as usize;
            }
        }
        for g in groups.values_mut() {
            g.accuracy = g.matched as f64 / g.total as f64;
        }
    }
    Ok(ExReport {
        accuracy: matched as f64 / pairs.len() as f64,
        matched,
        total: pairs.len(),
        breakdown: groups,
        results: pairs.iter().map(|p| p.id.clone()).zip(results).collect(),
    })
}
