//! Per-query structural statistics over a corpus.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::sql::{summarize, AnalysisConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub databases: usize,
    pub sql_count: usize,
    pub tables_per_sql: f64,
    pub tokens_per_sql: f64,
    pub functions_per_sql: f64,
    pub tables: usize,
    pub tokens: usize,
    pub functions: usize,
    pub joins: usize,
    pub window_functions: usize,
    pub ctes: usize,
    pub subqueries: usize,
}

/// Sums and per-query averages over `(id, db_id, sql)` records.
pub fn corpus_stats<'a>(records: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>, cfg: &AnalysisConfig) -> Result<CorpusStats, EvalError> {
    let mut dbs = BTreeSet::new();
    let mut s = CorpusStats {
        databases: 0,
        sql_count: 0,
        tables_per_sql: 0.0,
        tokens_per_sql: 0.0,
        functions_per_sql: 0.0,
        tables: 0,
        tokens: 0,
        functions: 0,
        joins: 0,
        window_functions: 0,
        ctes: 0,
        subqueries: 0,
    };
    for (id, db, sql) in records {
        let f = summarize(sql, cfg).map_err(|e| EvalError::Parse {
            id: id.to_string(),
            message: e.to_string(),
        })?;
        dbs.insert(db.to_string());
        s.sql_count += 1;
        s.tables += f.distinct_table_count;
        s.tokens += f.token_count;
        s.functions += f.function_count;
        s.joins += f.join_count;
        s.window_functions += f.window_function_count;
        s.ctes += f.cte_count;
        s.subqueries += f.subquery_count;
    }
    if s.sql_count == 0 {
        return Err(EvalError::EmptyInput);
    }
    let n = s.sql_count as f64;
    s.databases = dbs.len();
    s.tables_per_sql = s.tables as f64 / n;
    s.tokens_per_sql = s.tokens as f64 / n;
    s.functions_per_sql = s.functions as f64 / n;
    Ok(s)
}

impl CorpusStats {
    /// Plain-text table, one statistic per line.
    pub fn table(&self) -> String {
        let rows: [(&str, String); 11] = [
            ("Databases", self.databases.to_string()),
            ("SQL", self.sql_count.to_string()),
            ("Tables per SQL", format!("{:.2}", self.tables_per_sql)),
            ("Tokens per SQL", format!("{:.2}", self.tokens_per_sql)),
            ("Functions per SQL", format!("{:.2}", self.functions_per_sql)),
            ("Joins", self.joins.to_string()),
            ("Window functions", self.window_functions.to_string()),
            ("CTEs", self.ctes.to_string()),
            ("Subqueries", self.subqueries.to_string()),
            ("Functions", self.functions.to_string()),
            ("Tokens", self.tokens.to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k:<20}{v:>10}\n")).collect()
    }
}
