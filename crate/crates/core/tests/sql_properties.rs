use proptest::prelude::*;

use taxsql_core::sql::ast::Expr;
use taxsql_core::sql::visit::{walk_tree, Visitor};
use taxsql_core::sql::{
    detect_key_actions, detect_syntax_structures, parse_sql, summarize_tree, AnalysisConfig, Dialect, SqlTree,
};
use taxsql_core::taxonomy::{KeyAction, SyntaxStructure};

// ---- scope oracle ------------------------------------------------------

#[derive(Debug, Clone)]
enum Ref {
    Unqualified,
    /// Qualify with the alias of the scope this many levels up (clamped).
    Up(usize),
}

#[derive(Debug, Clone, Copy)]
enum SubKind {
    In,
    Exists,
    Scalar,
}

#[derive(Debug, Clone)]
struct Gen {
    table: usize,
    refs: Vec<Ref>,
    subs: Vec<(SubKind, Gen)>,
}

fn gen_select(depth: u32) -> BoxedStrategy<Gen> {
    let refs = prop::collection::vec(
        prop_oneof![Just(Ref::Unqualified), (0usize..4).prop_map(Ref::Up)],
        0..3,
    );
    if depth == 0 {
        return (0usize..4, refs)
            .prop_map(|(table, refs)| Gen {
                table,
                refs,
                subs: vec![],
            })
            .boxed();
    }
    let kind = prop_oneof![Just(SubKind::In), Just(SubKind::Exists), Just(SubKind::Scalar)];
    (
        0usize..4,
        refs,
        prop::collection::vec((kind, gen_select(depth - 1)), 0..3),
    )
        .prop_map(|(table, refs, subs)| Gen { table, refs, subs })
        .boxed()
}

/// Renders `g` at nesting level `level` and records, in walk order, the
/// expected correlation flag of every subquery and the expected depth of
/// every column reference.
fn render(g: &Gen, level: usize, flags: &mut Vec<bool>, depths: &mut Vec<usize>) -> (String, usize) {
    let mut conds = Vec::new();
    // Projection column binds to its own level.
    depths.push(0);
    let mut min_bound = level;
    for r in &g.refs {
        match r {
            Ref::Unqualified => {
                conds.push("c1 = 1".to_string());
                depths.push(0);
            }
            Ref::Up(k) => {
                let target = level.saturating_sub(*k);
                conds.push(format!("a{target}.c1 = 1"));
                depths.push(level - target);
                min_bound = min_bound.min(target);
            }
        }
    }
    for (kind, sub) in &g.subs {
        let slot = flags.len();
        flags.push(false);
        if matches!(kind, SubKind::In) {
            depths.push(0);
        }
        let (text, inner_min) = render(sub, level + 1, flags, depths);
        flags[slot] = inner_min < level + 1;
        min_bound = min_bound.min(inner_min);
        conds.push(match kind {
            SubKind::In => format!("a{level}.c0 IN ({text})"),
            SubKind::Exists => format!("EXISTS ({text})"),
            SubKind::Scalar => format!("({text}) > 0"),
        });
    }
    let mut sql = format!("SELECT a{level}.c0 FROM t{} AS a{level}", g.table);
    if !conds.is_empty() {
        sql.push_str(" WHERE ");
        sql.push_str(&conds.join(" AND "));
    }
    (sql, min_bound)
}

#[derive(Default)]
struct Observed {
    flags: Vec<bool>,
    depths: Vec<usize>,
}

impl Visitor for Observed {
    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::InSubquery { subquery, .. } | Expr::Exists { subquery } | Expr::Subquery(subquery) => {
                self.flags.push(subquery.correlated)
            }
            Expr::Column(c) => self.depths.push(c.depth),
            _ => {}
        }
    }
}

fn parse(sql: &str) -> SqlTree {
    parse_sql(sql, Dialect::Sqlite).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn correlation_matches_oracle(g in gen_select(2)) {
        let mut flags = Vec::new();
        let mut depths = Vec::new();
        let (sql, _) = render(&g, 0, &mut flags, &mut depths);
        let tree = parse(&sql);
        let mut seen = Observed::default();
        walk_tree(&tree, &mut seen);
        prop_assert_eq!(&seen.flags, &flags, "{}", sql);
        prop_assert_eq!(&seen.depths, &depths, "{}", sql);
        let has_corr = detect_syntax_structures(&tree).contains(&SyntaxStructure::CorrelatedSubquery);
        prop_assert_eq!(has_corr, flags.iter().any(|f| *f));
    }
}

// ---- round trip and detector properties ---------------------------------

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec!["a", "b", "t.c", "\"odd name\"", "u.d"]).prop_map(str::to_string),
        (0u32..1000).prop_map(|n| n.to_string()),
        prop::sample::select(vec!["'x'", "'2021-03-04'", "'it''s'", "'%a_'", "NULL", "?", "1.5e3"])
            .prop_map(str::to_string),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 48, 3, |inner| {
        let ops = prop::sample::select(vec![
            "+", "-", "*", "/", "%", "||", "=", "<>", "<", ">=", "AND", "OR", "IS", "IS NOT", "->>", "&", "<<",
        ]);
        prop_oneof![
            (inner.clone(), ops, inner.clone()).prop_map(|(l, o, r)| format!("{l} {o} {r}")),
            inner.clone().prop_map(|e| format!("({e})")),
            inner.clone().prop_map(|e| format!("(NOT {e})")),
            inner.clone().prop_map(|e| format!("- {e}")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, c)| format!("{a} BETWEEN ({b}) AND ({c})")),
            (inner.clone(), prop::collection::vec(inner.clone(), 1..3))
                .prop_map(|(a, l)| format!("{a} NOT IN ({})", l.join(", "))),
            (inner.clone(), inner.clone()).prop_map(|(a, p)| format!("{a} LIKE {p}")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, x, y)| format!("CASE WHEN {c} THEN {x} ELSE {y} END")),
            inner.clone().prop_map(|e| format!("CAST({e} AS INTEGER)")),
            (prop::sample::select(vec!["upper", "date", "sum", "json_extract", "coalesce"]),
                prop::collection::vec(inner.clone(), 1..3))
                .prop_map(|(f, a)| format!("{f}({})", a.join(", "))),
            inner.clone().prop_map(|e| format!("SUM({e}) OVER (PARTITION BY a ORDER BY b)")),
            inner.clone().prop_map(|e| format!("{e} IS NULL")),
            inner.prop_map(|e| format!("{e} COLLATE NOCASE")),
        ]
    })
}

fn query() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(expr(), 1..3),
        prop::option::of(expr()),
        prop::sample::select(vec![
            "t",
            "t JOIN u ON t.k = u.k",
            "t, u",
            "t LEFT JOIN u USING (k)",
            "(SELECT a, b FROM v) AS t",
        ]),
        prop::option::of(expr()),
        any::<bool>(),
        prop::option::of(expr()),
    )
        .prop_map(|(proj, filter, from, group, order, tail)| {
            let mut sql = format!("SELECT {} FROM {from}", proj.join(", "));
            if let Some(w) = filter {
                sql.push_str(&format!(" WHERE {w}"));
            }
            if let Some(g) = group {
                sql.push_str(&format!(" GROUP BY a HAVING {g}"));
            }
            if let Some(t) = tail {
                sql.push_str(&format!(" UNION SELECT {t} FROM w"));
            }
            if order {
                sql.push_str(" ORDER BY 1 DESC LIMIT 5");
            }
            sql
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn render_reparses_to_equal_tree(sql in query()) {
        let tree = parse(&sql);
        let text = tree.to_string();
        let again = parse(&text);
        prop_assert_eq!(&tree.statement, &again.statement, "{} -> {}", sql, text);
        prop_assert_eq!(text.clone(), again.to_string());
    }

    #[test]
    fn detectors_are_total_and_consistent(sql in query()) {
        let tree = parse(&sql);
        let s = summarize_tree(&tree, &AnalysisConfig::default()).unwrap();
        prop_assert_eq!(s.key_actions.contains(&KeyAction::WindowFunction), s.window_function_count > 0);
        prop_assert_eq!(
            s.syntax_structures.contains(&SyntaxStructure::CommonTableExpression),
            s.cte_count > 0
        );
        if s.syntax_structures.contains(&SyntaxStructure::Having) {
            prop_assert!(s.syntax_structures.contains(&SyntaxStructure::GroupBy));
        }
        prop_assert!(s.token_count >= 1);
    }

    #[test]
    fn wrapping_preserves_features(sql in query()) {
        let cfg = AnalysisConfig::default();
        let inner = parse(&sql);
        let outer = parse(&format!("SELECT * FROM ({sql})"));
        let (si, so) = (detect_syntax_structures(&inner), detect_syntax_structures(&outer));
        prop_assert!(si.is_subset(&so), "{:?} vs {:?}", si, so);
        prop_assert_eq!(si, so);
        prop_assert_eq!(detect_key_actions(&inner, &cfg), detect_key_actions(&outer, &cfg));
    }
}
