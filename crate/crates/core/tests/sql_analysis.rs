use std::collections::BTreeSet;

use taxsql_core::sql::ast::{Expr, Statement};
use taxsql_core::sql::visit::{walk_tree, Visitor};
use taxsql_core::sql::{
    detect_key_actions, detect_statement_type, detect_syntax_structures, parse_sql, summarize,
    AnalysisConfig, AnalysisWarning, Dialect, SqlError, SqlTree,
};
use taxsql_core::taxonomy::{KeyAction as K, StatementType, SyntaxStructure as S};

fn parse(sql: &str) -> SqlTree {
    parse_sql(sql, Dialect::Sqlite).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

fn structures(sql: &str) -> BTreeSet<S> {
    detect_syntax_structures(&parse(sql))
}

fn actions(sql: &str) -> BTreeSet<K> {
    detect_key_actions(&parse(sql), &AnalysisConfig::default())
}

fn set<T: Ord + Copy>(items: &[T]) -> BTreeSet<T> {
    items.iter().copied().collect()
}

#[test]
fn select_one_has_no_clauses() {
    let t = parse("SELECT 1");
    assert!(matches!(t.statement, Statement::Select(_)));
    assert!(t.clauses().is_empty());
}

#[test]
fn misspelled_keyword_fails_at_offset_zero() {
    match parse_sql("SELEC 1", Dialect::Sqlite) {
        Err(SqlError::Parse(e)) => assert_eq!(e.offset, 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn parse_errors_carry_offsets() {
    match parse_sql("SELECT a FROM WHERE", Dialect::Sqlite) {
        Err(SqlError::Parse(e)) => assert_eq!(e.offset, 14),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse_sql("SELECT 1; SELECT 2", Dialect::Sqlite),
        Err(SqlError::UnsupportedFeature { .. })
    ));
    assert!(parse_sql("", Dialect::Sqlite).is_err());
}

#[derive(Default)]
struct Subqueries(Vec<bool>, Vec<usize>);

impl Visitor for Subqueries {
    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::InSubquery { subquery, .. } | Expr::Exists { subquery } | Expr::Subquery(subquery) => {
                self.0.push(subquery.correlated)
            }
            Expr::Column(c) => self.1.push(c.depth),
            _ => {}
        }
    }
}

#[test]
fn correlated_in_subquery() {
    let t = parse("SELECT a FROM t WHERE a IN (SELECT b FROM u WHERE u.k = t.k)");
    let mut v = Subqueries::default();
    walk_tree(&t, &mut v);
    assert_eq!(v.0, vec![true]);
    // a, a, b, u.k, t.k
    assert_eq!(v.1, vec![0, 0, 0, 0, 1]);
}

#[test]
fn uncorrelated_subquery() {
    let t = parse("SELECT a FROM t WHERE a IN (SELECT b FROM u WHERE u.k = 3)");
    let mut v = Subqueries::default();
    walk_tree(&t, &mut v);
    assert_eq!(v.0, vec![false]);
}

#[test]
fn statement_types() {
    let cases = [
        ("INSERT INTO t VALUES (1)", StatementType::Insert),
        ("WITH c AS (SELECT 1) SELECT * FROM c", StatementType::Select),
        ("ALTER TABLE t ADD COLUMN x INT", StatementType::Alter),
        ("UPDATE t SET a = 1", StatementType::Update),
        ("DELETE FROM t WHERE a = 1", StatementType::Delete),
        ("SELECT 1", StatementType::Select),
        ("VALUES (1), (2)", StatementType::Select),
        ("REPLACE INTO t (a) VALUES (1)", StatementType::Insert),
    ];
    for (sql, want) in cases {
        assert_eq!(detect_statement_type(&parse(sql)).unwrap(), want, "{sql}");
    }
}

#[test]
fn unsupported_statement_is_reported() {
    let t = parse("CREATE INDEX i ON t(a)");
    match detect_statement_type(&t) {
        Err(SqlError::UnsupportedStatement { verb }) => assert_eq!(verb, "CREATE INDEX"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn structure_examples() {
    assert_eq!(
        structures("SELECT a FROM t WHERE x > 5 ORDER BY a LIMIT 10 OFFSET 2"),
        set(&[S::Where, S::OrderBy, S::LimitOffset])
    );
    assert!(structures("SELECT 1").is_empty());
    assert_eq!(
        structures(
            "WITH c AS (SELECT g, COUNT(*) n FROM t GROUP BY g HAVING COUNT(*) > 1) SELECT * FROM c JOIN u ON c.g = u.g"
        ),
        set(&[S::CommonTableExpression, S::GroupBy, S::Having, S::InnerJoin])
    );
}

#[test]
fn structure_predicates_positive_and_negative() {
    let cases: &[(S, &str, &str)] = &[
        (S::Where, "SELECT a FROM t WHERE a = 1", "SELECT a FROM t"),
        (S::OrderBy, "SELECT a FROM t ORDER BY a DESC", "SELECT a, ROW_NUMBER() OVER (ORDER BY a) FROM t"),
        (S::LimitOffset, "SELECT a FROM t LIMIT 3", "SELECT a FROM t ORDER BY a"),
        (S::InnerJoin, "SELECT * FROM t INNER JOIN u ON t.k = u.k", "SELECT * FROM t LEFT JOIN u ON t.k = u.k"),
        (S::CrossJoin, "SELECT * FROM t, u", "SELECT * FROM t JOIN u ON t.k = u.k"),
        (S::OuterJoin, "SELECT * FROM t LEFT OUTER JOIN u ON t.k = u.k", "SELECT * FROM t CROSS JOIN u"),
        (S::GroupBy, "SELECT g, COUNT(*) FROM t GROUP BY g", "SELECT COUNT(*) FROM t"),
        (S::Having, "SELECT g FROM t GROUP BY g HAVING COUNT(*) > 1", "SELECT g FROM t GROUP BY g"),
        (S::Union, "SELECT a FROM t UNION SELECT a FROM u", "SELECT a FROM t INTERSECT SELECT a FROM u"),
        (S::Intersect, "SELECT a FROM t INTERSECT SELECT a FROM u", "SELECT a FROM t EXCEPT SELECT a FROM u"),
        (S::Except, "SELECT a FROM t EXCEPT SELECT a FROM u", "SELECT a FROM t UNION ALL SELECT a FROM u"),
        (S::ScalarSubquery, "SELECT a, (SELECT MAX(b) FROM u) FROM t", "SELECT a FROM t WHERE a IN (SELECT b FROM u)"),
        (
            S::CorrelatedSubquery,
            "SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u WHERE u.k = t.k)",
            "SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u WHERE u.k = 1)",
        ),
        (S::CommonTableExpression, "WITH c AS (SELECT 1 AS x) SELECT x FROM c", "SELECT x FROM (SELECT 1 AS x)"),
    ];
    for (s, pos, neg) in cases {
        assert!(structures(pos).contains(s), "{s} missing in {pos}");
        assert!(!structures(neg).contains(s), "{s} present in {neg}");
    }
}

#[test]
fn action_examples() {
    assert_eq!(actions("SELECT name FROM t WHERE name LIKE 'A%'"), set(&[K::WildcardFiltering]));
    assert_eq!(actions("SELECT CAST(x AS TEXT) FROM t"), set(&[K::Cast]));
    assert_eq!(
        actions(
            "SELECT SUM(v) OVER (PARTITION BY g), CASE WHEN v > 0 THEN 1 ELSE 0 END FROM t WHERE d >= '2021-01-01'"
        ),
        set(&[K::WindowFunction, K::ConditionJudgement, K::SpecificTime])
    );
}

#[test]
fn action_predicates_positive_and_negative() {
    let cases: &[(K, &str, &str)] = &[
        (K::SpecificTime, "SELECT * FROM t WHERE d > '2020-05-01'", "SELECT * FROM t WHERE name = 'May'"),
        (K::WildcardFiltering, "SELECT * FROM t WHERE n LIKE '%x_'", "SELECT * FROM t WHERE n LIKE 'exact'"),
        (K::TimeFunction, "SELECT strftime('%Y', d) FROM t", "SELECT upper(d) FROM t"),
        (K::JsonFunction, "SELECT json_extract(j, '$.a') FROM t", "SELECT j FROM t"),
        (K::AggregateFunction, "SELECT COUNT(*) FROM t", "SELECT MAX(a, b) FROM t"),
        (K::WindowFunction, "SELECT RANK() OVER (ORDER BY a) FROM t", "SELECT a FROM t ORDER BY a"),
        (K::StringFunction, "SELECT UPPER(n) FROM t", "SELECT ABS(n) FROM t"),
        (K::Cast, "SELECT CAST(a AS REAL) FROM t", "SELECT a + 0.0 FROM t"),
        (K::ConditionJudgement, "SELECT CASE WHEN a > 1 THEN 'x' END FROM t", "SELECT a FROM t WHERE a > 1"),
    ];
    for (k, pos, neg) in cases {
        assert!(actions(pos).contains(k), "{k} missing in {pos}");
        assert!(!actions(neg).contains(k), "{k} present in {neg}");
    }
}

#[test]
fn windowed_aggregate_is_window_only() {
    let a = actions("SELECT SUM(v) OVER () FROM t");
    assert!(a.contains(&K::WindowFunction));
    assert!(!a.contains(&K::AggregateFunction));
}

#[test]
fn json_operators_and_integer_time_args() {
    assert!(actions("SELECT j ->> '$.a' FROM t").contains(&K::JsonFunction));
    let a = actions("SELECT datetime(1092941466, 'unixepoch')");
    assert!(a.contains(&K::SpecificTime) && a.contains(&K::TimeFunction));
    assert!(actions("SELECT CURRENT_DATE").contains(&K::TimeFunction));
}

#[test]
fn unknown_functions() {
    let cfg = AnalysisConfig::default();
    let s = summarize("SELECT my_udf(a) FROM t", &cfg).unwrap();
    assert_eq!(s.warnings, vec![AnalysisWarning::UnknownFunction("my_udf".into())]);
    assert!(s.key_actions.is_empty());
    let s = summarize("SELECT 'x' || my_udf(a) FROM t", &cfg).unwrap();
    assert!(s.key_actions.contains(&K::StringFunction));
    assert!(s.warnings.is_empty());
}

#[test]
fn having_without_group_by_warns() {
    let s = summarize("SELECT COUNT(*) FROM t HAVING COUNT(*) > 1", &AnalysisConfig::default()).unwrap();
    assert!(!s.syntax_structures.contains(&S::Having));
    assert_eq!(s.warnings, vec![AnalysisWarning::HavingWithoutGroupBy]);
}

#[test]
fn summary_examples() {
    let cfg = AnalysisConfig::default();
    let s = summarize("SELECT a FROM t JOIN u ON t.k = u.k", &cfg).unwrap();
    assert_eq!((s.distinct_table_count, s.join_count), (2, 1));
    let s = summarize("SELECT COUNT(*) FROM t", &cfg).unwrap();
    assert_eq!(s.function_count, 1);
    assert!(s.key_actions.contains(&K::AggregateFunction));
    assert_eq!(s.token_count, 7);
    let s = summarize("WITH c AS (SELECT * FROM t) SELECT * FROM c", &cfg).unwrap();
    assert_eq!((s.distinct_table_count, s.cte_count), (1, 1));
}

#[test]
fn dml_structures() {
    assert!(structures("UPDATE t SET a = 1 WHERE b = 2").contains(&S::Where));
    assert!(structures("DELETE FROM t WHERE b IN (SELECT k FROM u)").contains(&S::Where));
    assert!(structures("WITH c AS (SELECT 1) DELETE FROM t WHERE a IN (SELECT * FROM c)")
        .contains(&S::CommonTableExpression));
    assert!(structures("UPDATE t SET a = (SELECT MAX(b) FROM u WHERE u.k = t.k)").contains(&S::CorrelatedSubquery));
    assert!(actions("ALTER TABLE t ADD COLUMN x INTEGER DEFAULT (CAST('0' AS INTEGER))").contains(&K::Cast));
}

const ROUND_TRIP: &[&str] = &[
    "SELECT 1",
    "SELECT DISTINCT a AS x, t.* FROM main.t AS tt WHERE NOT a IS NOT NULL AND b NOTNULL",
    "SELECT a FROM t WHERE x BETWEEN 1 AND 2 AND y NOT IN (1, 2) OR z LIKE 'a%' ESCAPE '\\'",
    "SELECT - -1, -a, ~b, a || 'x' || b, j -> '$.a', j ->> '$.b' FROM t",
    "WITH RECURSIVE c(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM c WHERE n < 5) SELECT n FROM c",
    "SELECT g, COUNT(DISTINCT a) FILTER (WHERE a > 0) FROM t GROUP BY g HAVING SUM(a) > 1 ORDER BY 2 DESC NULLS LAST LIMIT 1, 2",
    "SELECT RANK() OVER w, SUM(a) OVER (PARTITION BY g ORDER BY d ROWS BETWEEN 1 PRECEDING AND CURRENT ROW) FROM t WINDOW w AS (ORDER BY a)",
    "SELECT * FROM t NATURAL JOIN u LEFT OUTER JOIN v USING (k) CROSS JOIN w, x",
    "SELECT CASE a WHEN 1 THEN 'one' ELSE 'other' END, CAST(b AS VARCHAR(10)), IIF(c, 1, 0) FROM t",
    "SELECT (a + b) * c, (1, 2), EXISTS (SELECT 1), (SELECT 2) FROM (SELECT 1 AS a, 2 AS b, 3 AS c)",
    "INSERT OR IGNORE INTO t (a, b) SELECT a, b FROM u ON CONFLICT (a) DO UPDATE SET b = excluded.b RETURNING *",
    "INSERT INTO t DEFAULT VALUES",
    "UPDATE t SET (a, b) = (1, 2), c = s.c FROM (SELECT 1 AS c) AS s WHERE t.k = 1 RETURNING a",
    "DELETE FROM t AS x WHERE x.a = 'it''s'",
    "ALTER TABLE t ADD COLUMN c TEXT NOT NULL DEFAULT 'x' REFERENCES p (id)",
    "ALTER TABLE t RENAME COLUMN a TO b",
    "ALTER TABLE \"my table\" RENAME TO t2",
    "SELECT \"select\", x'00ff', ?1, :name, CURRENT_TIMESTAMP, a COLLATE NOCASE FROM t",
];

#[test]
fn render_round_trips() {
    for sql in ROUND_TRIP {
        let t = parse(sql);
        let text = t.to_string();
        let again = parse(&text);
        assert_eq!(t.statement, again.statement, "{sql}\n  -> {text}");
    }
}

#[test]
fn window_order_by_is_not_query_order_by() {
    assert!(!structures("SELECT ROW_NUMBER() OVER (ORDER BY a) FROM t").contains(&S::OrderBy));
}
