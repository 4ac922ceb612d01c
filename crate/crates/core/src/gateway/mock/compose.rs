//! Rule-based SQL composition: builds a statement over a schema that
//! realizes a target set of labels, checked against the detectors.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::forge::{quote_ident, DataType, DatabaseSchema, TableSchema};
use crate::sql::{is_reserved, summarize, AnalysisConfig};
use crate::taxonomy::{KeyAction as K, StatementType, SyntaxStructure as S, TaxonomyLabels};

const ATTEMPTS: u64 = 16;

/// Composes SQL whose detected statement type, structures and actions
/// equal those of `labels`. `None` when no attempt realizes them.
pub fn compose_sql(labels: &TaxonomyLabels, schema: &DatabaseSchema, seed: u64) -> Option<String> {
    let cfg = AnalysisConfig::default();
    (0..ATTEMPTS).find_map(|attempt| {
        let rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut c = Composer {
            schema,
            ss: &labels.syntax_structures,
            aa: &labels.key_actions,
            rng,
        };
        let sql = match labels.statement_type {
            StatementType::Select => c.select(),
            StatementType::Insert => c.insert(),
            StatementType::Update => c.update(),
            StatementType::Delete => c.delete(),
            StatementType::Alter => c.alter(),
        }?;
        realizes(&sql, labels, &cfg).then_some(sql)
    })
}

/// Whether the detectors find exactly the statement type, structures and
/// actions of `labels` in `sql`.
pub fn realizes(sql: &str, labels: &TaxonomyLabels, cfg: &AnalysisConfig) -> bool {
    match summarize(sql, cfg) {
        Ok(s) => {
            s.statement_type == labels.statement_type
                && s.syntax_structures == labels.syntax_structures
                && s.key_actions == labels.key_actions
        }
        Err(_) => false,
    }
}

pub(crate) fn id(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain && !is_reserved(name) {
        name.to_string()
    } else {
        quote_ident(name)
    }
}

pub(crate) fn lit(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn col(alias: &str, name: &str) -> String {
    format!("{alias}.{}", id(name))
}

struct Fk<'a> {
    col: &'a str,
    parent: &'a TableSchema,
    parent_key: &'a str,
}

/// Column roles of one table.
struct Roles<'a> {
    t: &'a TableSchema,
    key: &'a str,
    key_numeric: bool,
    nums: Vec<&'a str>,
    texts: Vec<&'a str>,
    dates: Vec<&'a str>,
    jsons: Vec<&'a str>,
    fks: Vec<Fk<'a>>,
    /// Neither key nor foreign-key columns.
    free: Vec<&'a str>,
    /// Tables holding a single-column foreign key to this one: (table, column).
    children: Vec<(&'a TableSchema, &'a str)>,
}

fn roles<'a>(schema: &'a DatabaseSchema, t: &'a TableSchema) -> Roles<'a> {
    let key = t
        .primary_key
        .first()
        .map(|s| s.as_str())
        .unwrap_or_else(|| t.columns[0].name.as_str());
    let key_numeric = t.column(key).is_some_and(|c| c.data_type.is_numeric());
    let mut fks = Vec::new();
    for fk in &t.foreign_keys {
        if fk.columns.len() == 1 {
            if let Some(parent) = schema.table(&fk.references_table) {
                fks.push(Fk {
                    col: fk.columns[0].as_str(),
                    parent,
                    parent_key: fk.references_columns[0].as_str(),
                });
            }
        }
    }
    let fk_cols: BTreeSet<&str> = t.foreign_keys.iter().flat_map(|f| f.columns.iter().map(|c| c.as_str())).collect();
    let pk_cols: BTreeSet<&str> = t.primary_key.iter().map(|c| c.as_str()).collect();
    let mut r = Roles {
        t,
        key,
        key_numeric,
        nums: vec![],
        texts: vec![],
        dates: vec![],
        jsons: vec![],
        fks,
        free: vec![],
        children: vec![],
    };
    for c in &t.columns {
        let n = c.name.as_str();
        if n == key || pk_cols.contains(n) || fk_cols.contains(n) {
            continue;
        }
        r.free.push(n);
        match c.data_type {
            d if d.is_numeric() => r.nums.push(n),
            DataType::Text => r.texts.push(n),
            DataType::Date | DataType::Datetime => r.dates.push(n),
            DataType::Json => r.jsons.push(n),
            _ => {}
        }
    }
    for other in &schema.tables {
        for fk in &other.foreign_keys {
            if fk.columns.len() == 1 && fk.references_table == t.name {
                r.children.push((other, fk.columns[0].as_str()));
            }
        }
    }
    r
}

fn first_text(t: &TableSchema, column: &str) -> Option<String> {
    t.column_values(column).into_iter().find_map(|v| v.as_str().map(str::to_string))
}

fn max_number(t: &TableSchema, column: &str) -> Option<f64> {
    t.column_values(column).into_iter().filter_map(Value::as_f64).reduce(f64::max)
}

fn median_number(t: &TableSchema, column: &str) -> Option<f64> {
    let mut v: Vec<f64> = t.column_values(column).into_iter().filter_map(Value::as_f64).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    Some(v[v.len() / 2])
}

fn number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.2}")
    }
}

/// One action or structure realized as an expression.
enum Piece {
    /// Boolean condition: goes to WHERE when present, else projected.
    Pred(String),
    /// Projected or assigned value with a result name.
    Value(String, String),
}

const CONTENT: &[S] = &[
    S::InnerJoin,
    S::OuterJoin,
    S::CrossJoin,
    S::GroupBy,
    S::Having,
    S::OrderBy,
    S::LimitOffset,
    S::Union,
    S::Intersect,
    S::Except,
];

struct Composer<'a> {
    schema: &'a DatabaseSchema,
    ss: &'a BTreeSet<S>,
    aa: &'a BTreeSet<K>,
    rng: ChaCha8Rng,
}

/// A SELECT core over one base table, before set operations and ordering.
struct Core {
    projection: Vec<String>,
    from: String,
    joins: Vec<String>,
    conds: Vec<String>,
    group_by: Option<String>,
    having: Option<String>,
}

impl Core {
    fn render(&self) -> String {
        let mut s = format!("SELECT {} FROM {}", self.projection.join(", "), self.from);
        for j in &self.joins {
            s.push(' ');
            s.push_str(j);
        }
        if !self.conds.is_empty() {
            s.push_str(" WHERE ");
            s.push_str(&self.conds.join(" AND "));
        }
        if let Some(g) = &self.group_by {
            s.push_str(" GROUP BY ");
            s.push_str(g);
        }
        if let Some(h) = &self.having {
            s.push_str(" HAVING ");
            s.push_str(h);
        }
        s
    }
}

impl<'a> Composer<'a> {
    fn has(&self, s: S) -> bool {
        self.ss.contains(&s)
    }

    fn act(&self, a: K) -> bool {
        self.aa.contains(&a)
    }

    fn pick<'b, T>(&mut self, items: &'b [T]) -> Option<&'b T> {
        items.choose(&mut self.rng)
    }

    fn suitability(&self, r: &Roles) -> i32 {
        let mut score = 0;
        let mut need = |ok: bool, w: i32| score += if ok { w } else { -w };
        for a in self.aa.iter() {
            match a {
                K::StringFunction | K::WildcardFiltering => need(!r.texts.is_empty(), 2),
                K::AggregateFunction | K::ConditionJudgement | K::Cast => need(!r.nums.is_empty(), 1),
                K::TimeFunction | K::SpecificTime => need(!r.dates.is_empty(), 3),
                K::JsonFunction => need(!r.jsons.is_empty(), 3),
                K::WindowFunction => {}
            }
        }
        if self.has(S::InnerJoin) || self.has(S::OuterJoin) || self.has(S::CorrelatedSubquery) {
            need(!r.fks.is_empty() || !r.children.is_empty(), 2);
        }
        if self.has(S::GroupBy) {
            need(!r.texts.is_empty() || !r.fks.is_empty(), 1);
        }
        score
    }

    /// A table chosen at random among the best suited ones.
    fn base(&mut self, candidates: &[&'a TableSchema]) -> Option<Roles<'a>> {
        let scored: Vec<(i32, Roles<'a>)> = candidates
            .iter()
            .map(|t| {
                let r = roles(self.schema, t);
                (self.suitability(&r), r)
            })
            .collect();
        let best = scored.iter().map(|(s, _)| *s).max()?;
        let mut top: Vec<Roles<'a>> = scored.into_iter().filter(|(s, _)| *s == best).map(|(_, r)| r).collect();
        let i = self.rng.random_range(0..top.len());
        Some(top.swap_remove(i))
    }

    fn all_tables(&self) -> Vec<&'a TableSchema> {
        self.schema.tables.iter().collect()
    }

    fn label_col<'r>(&self, r: &'r Roles) -> &'r str {
        r.texts.first().copied().unwrap_or(r.key)
    }

    fn group_col<'r>(&self, r: &'r Roles) -> &'r str {
        let preferred = r
            .texts
            .iter()
            .find(|c| ["status", "category", "type", "region", "kind"].iter().any(|p| c.contains(p)));
        preferred
            .or(r.texts.first())
            .copied()
            .or_else(|| r.fks.first().map(|f| f.col))
            .unwrap_or(r.key)
    }

    fn num_col(&mut self, r: &Roles<'a>) -> &'a str {
        match self.pick(&r.nums) {
            Some(c) => c,
            None => r.key,
        }
    }

    fn other_table(&mut self, r: &Roles<'a>) -> &'a TableSchema {
        let others: Vec<&'a TableSchema> = self.schema.tables.iter().filter(|t| t.name != r.t.name).collect();
        match self.pick(&others) {
            Some(t) => t,
            None => r.t,
        }
    }

    /// (table, its column, our column) pairs that join with `r`.
    fn relations(&self, r: &Roles<'a>) -> Vec<(&'a TableSchema, &'a str, &'a str)> {
        let mut out: Vec<(&'a TableSchema, &'a str, &'a str)> =
            r.fks.iter().map(|f| (f.parent, f.parent_key, f.col)).collect();
        out.extend(r.children.iter().map(|(t, c)| (*t, *c, r.key)));
        out
    }

    fn wildcard_pattern(&mut self, t: &TableSchema, column: &str) -> String {
        let fragment: String = first_text(t, column)
            .map(|s| s.chars().filter(|c| c.is_alphanumeric()).take(2).collect::<String>())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "a".to_string());
        match self.rng.random_range(0..3) {
            0 => lit(&format!("%{}%", fragment.to_lowercase())),
            1 => lit(&format!("{fragment}%")),
            _ => lit(&format!("%{}", fragment.chars().last().unwrap_or('a'))),
        }
    }

    fn cutoff_date(&self, t: &TableSchema, column: &str) -> String {
        let mut dates: Vec<String> = t
            .column_values(column)
            .into_iter()
            .filter_map(|v| v.as_str().map(|s| s.chars().take(10).collect()))
            .collect();
        dates.sort();
        dates.get(dates.len() / 2).cloned().unwrap_or_else(|| "2023-06-01".into())
    }

    fn json_key(&self, t: &TableSchema, column: &str) -> String {
        t.column_values(column)
            .into_iter()
            .find_map(|v| {
                let parsed: Option<Value> = match v {
                    Value::String(s) => serde_json::from_str(s).ok(),
                    Value::Object(_) => Some(v.clone()),
                    _ => None,
                };
                parsed.and_then(|p| p.as_object().and_then(|o| o.keys().next().cloned()))
            })
            .unwrap_or_else(|| "source".into())
    }

    /// An action realized against the row alias `al` of `r`.
    fn action_piece(&mut self, a: K, r: &Roles<'a>, al: &str) -> Piece {
        match a {
            K::WildcardFiltering => {
                let c = r.texts.first().copied().unwrap_or(r.key);
                let p = self.wildcard_pattern(r.t, c);
                Piece::Pred(format!("{} LIKE {p}", col(al, c)))
            }
            K::SpecificTime => match r.dates.first() {
                Some(d) => {
                    let cut = self.cutoff_date(r.t, d);
                    let op = *self.pick(&[">=", "<", ">"]).unwrap();
                    Piece::Pred(format!("{} {op} {}", col(al, d), lit(&cut)))
                }
                None => Piece::Value(lit("2024-01-01"), "reference_date".into()),
            },
            K::TimeFunction => match r.dates.first() {
                Some(d) => match self.rng.random_range(0..3) {
                    0 => Piece::Value(format!("strftime('%Y-%m', {})", col(al, d)), "period_month".into()),
                    1 => Piece::Value(format!("date({}, '+30 days')", col(al, d)), "due_date".into()),
                    _ => Piece::Value(format!("strftime('%Y', {})", col(al, d)), "period_year".into()),
                },
                None => {
                    let n = self.num_col(r);
                    Piece::Value(format!("date({}, 'unixepoch')", col(al, n)), "epoch_date".into())
                }
            },
            K::JsonFunction => match r.jsons.first() {
                Some(j) => {
                    let k = self.json_key(r.t, j);
                    Piece::Value(format!("json_extract({}, '$.{k}')", col(al, j)), format!("detail_{k}"))
                }
                None => {
                    let c = self.label_col(r).to_string();
                    Piece::Value(format!("json_object('{c}', {})", col(al, &c)), "as_json".into())
                }
            },
            K::AggregateFunction => {
                if r.nums.is_empty() || self.rng.random_bool(0.3) {
                    Piece::Value("COUNT(*)".into(), "row_count".into())
                } else {
                    let n = self.num_col(r);
                    let f = *self.pick(&["SUM", "AVG", "MAX", "MIN"]).unwrap();
                    Piece::Value(format!("{f}({})", col(al, n)), format!("{}_{n}", f.to_lowercase()))
                }
            }
            K::WindowFunction => {
                let n = self.num_col(r);
                if self.rng.random_bool(0.5) {
                    Piece::Value(format!("ROW_NUMBER() OVER (ORDER BY {})", col(al, r.key)), "row_num".into())
                } else {
                    Piece::Value(format!("RANK() OVER (ORDER BY {} DESC)", col(al, n)), "position".into())
                }
            }
            K::StringFunction => {
                let c = r.texts.first().copied().unwrap_or(r.key);
                let (f, name) = *self
                    .pick(&[("upper", "upper"), ("lower", "lower"), ("length", "length"), ("trim", "trimmed")])
                    .unwrap();
                Piece::Value(format!("{f}({})", col(al, c)), format!("{name}_{c}"))
            }
            K::Cast => {
                let n = self.num_col(r);
                let ty = *self.pick(&["TEXT", "REAL", "INTEGER"]).unwrap();
                Piece::Value(format!("CAST({} AS {ty})", col(al, n)), format!("{n}_{}", ty.to_lowercase()))
            }
            K::ConditionJudgement => match r.nums.first() {
                Some(n) => {
                    let m = median_number(r.t, n).map(number).unwrap_or_else(|| "0".into());
                    Piece::Value(
                        format!("CASE WHEN {} > {m} THEN 'high' ELSE 'low' END", col(al, n)),
                        format!("{n}_band"),
                    )
                }
                None => {
                    let c = self.label_col(r).to_string();
                    Piece::Value(
                        format!("CASE WHEN {} IS NULL THEN 'missing' ELSE 'present' END", col(al, &c)),
                        format!("{c}_state"),
                    )
                }
            },
        }
    }

    /// Subquery structures realized against `al`. `with_where` allows
    /// WHERE inside the subquery.
    fn subquery_pieces(&mut self, r: &Roles<'a>, al: &str, with_where: bool) -> Vec<Piece> {
        let scalar = self.has(S::ScalarSubquery);
        let correlated = self.has(S::CorrelatedSubquery);
        let rels = self.relations(r);
        let rel = self.pick(&rels).copied();
        let mut out = Vec::new();
        match (scalar, correlated) {
            (true, true) if with_where => {
                let (t, tcol, ours) = rel.unwrap_or((r.t, r.key, r.key));
                let shown = roles(self.schema, t);
                let shown = self.label_col(&shown).to_string();
                out.push(Piece::Value(
                    format!(
                        "(SELECT {} FROM {} AS s WHERE {} = {})",
                        col("s", &shown),
                        id(&t.name),
                        col("s", tcol),
                        col(al, ours)
                    ),
                    format!("linked_{shown}"),
                ));
            }
            (true, true) => {
                let t = rel.map(|x| x.0).unwrap_or(r.t);
                let c = self.label_col(r).to_string();
                out.push(Piece::Value(
                    format!("(SELECT {} FROM {} AS s)", col(al, &c), id(&t.name)),
                    format!("echo_{c}"),
                ));
            }
            (true, false) => {
                let t = self.other_table(r);
                let tr = roles(self.schema, t);
                let c = self.label_col(&tr).to_string();
                out.push(Piece::Value(
                    format!("(SELECT {} FROM {} AS s)", col("s", &c), id(&t.name)),
                    format!("sample_{c}"),
                ));
            }
            (false, true) if with_where => {
                let (t, tcol, ours) = rel.unwrap_or((r.t, r.key, r.key));
                let neg = if self.rng.random_bool(0.3) { "NOT " } else { "" };
                out.push(Piece::Pred(format!(
                    "{neg}EXISTS (SELECT 1 FROM {} AS s WHERE {} = {})",
                    id(&t.name),
                    col("s", tcol),
                    col(al, ours)
                )));
            }
            (false, true) => {
                let t = rel.map(|x| x.0).unwrap_or(r.t);
                out.push(Piece::Pred(format!(
                    "{} IN (SELECT {} FROM {} AS s)",
                    col(al, r.key),
                    col(al, r.key),
                    id(&t.name)
                )));
            }
            (false, false) => {}
        }
        out
    }

    fn default_pred(&mut self, r: &Roles<'a>, al: &str) -> String {
        if let Some(n) = r.nums.first() {
            if self.rng.random_bool(0.6) {
                let m = median_number(r.t, n).map(number).unwrap_or_else(|| "0".into());
                let op = *self.pick(&[">=", "<=", ">"]).unwrap();
                return format!("{} {op} {m}", col(al, n));
            }
        }
        if let Some(t) = r.texts.first() {
            if let Some(v) = first_text(r.t, t) {
                if !AnalysisConfig::default().temporal.matches(&v) && self.rng.random_bool(0.5) {
                    return format!("{} = {}", col(al, t), lit(&v));
                }
            }
        }
        format!("{} IS NOT NULL", col(al, r.key))
    }

    fn joins(&mut self, r: &Roles<'a>) -> (Vec<String>, Vec<String>) {
        let mut joins = Vec::new();
        let mut shown = Vec::new();
        let rels = self.relations(r);
        let mut used = BTreeSet::new();
        for (s, kw, alias) in [(S::InnerJoin, "JOIN", "p"), (S::OuterJoin, "LEFT JOIN", "q")] {
            if !self.has(s) {
                continue;
            }
            let fresh: Vec<_> = rels.iter().filter(|x| !used.contains(&x.0.name)).copied().collect();
            let (t, tcol, ours) = match self.pick(&fresh).or_else(|| rels.first()) {
                Some(x) => *x,
                None => (r.t, r.key, r.key),
            };
            used.insert(t.name.clone());
            joins.push(format!(
                "{kw} {} AS {alias} ON {} = {}",
                id(&t.name),
                col("a", ours),
                col(alias, tcol)
            ));
            let tr = roles(self.schema, t);
            shown.push(col(alias, self.label_col(&tr)));
        }
        if self.has(S::CrossJoin) {
            let t = self
                .schema
                .tables
                .iter()
                .filter(|t| t.name != r.t.name)
                .min_by_key(|t| (t.sample_rows.len(), t.name.clone()))
                .unwrap_or(r.t);
            joins.push(format!("CROSS JOIN {} AS x", id(&t.name)));
            let tr = roles(self.schema, t);
            shown.push(col("x", self.label_col(&tr)));
        }
        (joins, shown)
    }

    /// A full query over `r` aliased `a` realizing the content structures
    /// and the given actions. `lead` columns come first in the projection.
    /// Returns the query text without any WITH clause.
    fn query(
        &mut self,
        r: &Roles<'a>,
        from: &str,
        lead: Vec<String>,
        actions: &[K],
        mut conds: Vec<String>,
        with_where: bool,
        sub: bool,
        show_joined: bool,
    ) -> String {
        let mut projection = lead;
        let group = if self.has(S::GroupBy) {
            Some(col("a", self.group_col(r)))
        } else {
            None
        };
        if projection.is_empty() {
            projection.push(group.clone().unwrap_or_else(|| col("a", self.label_col(r))));
        }
        let (joins, shown) = self.joins(r);
        if show_joined {
            projection.extend(shown);
        }
        let mut pieces: Vec<Piece> = actions.iter().map(|a| self.action_piece(*a, r, "a")).collect();
        if sub {
            pieces.extend(self.subquery_pieces(r, "a", with_where));
        }
        let mut n = 0;
        for p in pieces {
            match p {
                Piece::Pred(e) if with_where => conds.push(e),
                Piece::Pred(e) => {
                    n += 1;
                    projection.push(format!("({e}) AS flag_{n}"));
                }
                Piece::Value(e, name) => projection.push(format!("{e} AS {}", id(&name))),
            }
        }
        if with_where && conds.is_empty() {
            conds.push(self.default_pred(r, "a"));
        }
        let having = if self.has(S::Having) {
            Some(if self.rng.random_bool(0.5) || !self.act(K::AggregateFunction) {
                format!("{} IS NOT NULL", group.clone().unwrap_or_else(|| col("a", r.key)))
            } else {
                "COUNT(*) >= 1".to_string()
            })
        } else {
            None
        };
        let core = Core {
            projection,
            from: format!("{} AS a", id(from)),
            joins,
            conds,
            group_by: group,
            having,
        };
        let arm = core.render();
        let mut text = arm.clone();
        for (s, kw) in [(S::Union, "UNION"), (S::Intersect, "INTERSECT"), (S::Except, "EXCEPT")] {
            if self.has(s) {
                text.push_str(&format!(" {kw} {arm}"));
            }
        }
        let compound = [S::Union, S::Intersect, S::Except].iter().any(|s| self.has(*s));
        if self.has(S::OrderBy) {
            let dir = *self.pick(&["", " DESC", " ASC"]).unwrap();
            if compound {
                text.push_str(&format!(" ORDER BY 1{dir}"));
            } else {
                let first = core.projection[0].split(" AS ").next().unwrap_or("1").to_string();
                text.push_str(&format!(" ORDER BY {first}{dir}"));
            }
        }
        if self.has(S::LimitOffset) {
            let n = *self.pick(&[3, 5, 10]).unwrap();
            if self.rng.random_bool(0.4) {
                text.push_str(&format!(" LIMIT {n} OFFSET {}", self.rng.random_range(1..3)));
            } else {
                text.push_str(&format!(" LIMIT {n}"));
            }
        }
        text
    }

    fn cte(&self, r: &Roles) -> Option<(String, String)> {
        self.has(S::CommonTableExpression).then(|| {
            let name = format!("{}_scope", r.t.name);
            (name.clone(), format!("WITH {} AS (SELECT * FROM {})", id(&name), id(&r.t.name)))
        })
    }

    fn with_prefix(cte: &Option<(String, String)>) -> String {
        cte.as_ref().map(|(_, w)| format!("{w} ")).unwrap_or_default()
    }

    fn select(&mut self) -> Option<String> {
        let tables = self.all_tables();
        let r = self.base(&tables)?;
        let cte = self.cte(&r);
        let from = cte.as_ref().map(|(n, _)| n.clone()).unwrap_or_else(|| r.t.name.clone());
        let actions: Vec<K> = self.aa.iter().copied().collect();
        let q = self.query(&r, &from, vec![], &actions, vec![], self.has(S::Where), true, true);
        Some(format!("{}{q}", Self::with_prefix(&cte)))
    }

    /// A constant realization of an action, for VALUES rows.
    fn constant_piece(&mut self, a: K) -> String {
        match a {
            K::WildcardFiltering => "('new entry' LIKE 'new%')".into(),
            K::SpecificTime => lit("2024-01-15"),
            K::TimeFunction => "date('2024-03-01T08:30', '+7 days')".into(),
            K::JsonFunction => "json_object('source', 'manual')".into(),
            K::StringFunction => "upper('manual entry')".into(),
            K::Cast => "CAST('42' AS INTEGER)".into(),
            K::ConditionJudgement => "CASE WHEN 2 > 1 THEN 'active' ELSE 'inactive' END".into(),
            K::AggregateFunction | K::WindowFunction => "NULL".into(),
        }
    }

    fn fresh_key(&self, r: &Roles) -> String {
        if r.key_numeric {
            number(max_number(r.t, r.key).unwrap_or(0.0).floor() + 1000.0)
        } else {
            lit(&format!("{}_new", r.t.name))
        }
    }

    fn default_value(&self, r: &Roles, column: &str) -> String {
        let c = r.t.column(column).expect("column exists");
        let sample = r.t.column_values(column).into_iter().find(|v| !v.is_null()).cloned();
        let temporal = AnalysisConfig::default().temporal;
        match c.data_type {
            d if d.is_numeric() => sample
                .and_then(|v| v.as_f64())
                .map(number)
                .unwrap_or_else(|| "0".into()),
            DataType::Boolean => "1".into(),
            DataType::Date | DataType::Datetime => {
                if self.act(K::SpecificTime) {
                    lit("2024-01-15")
                } else if c.nullable {
                    "NULL".into()
                } else {
                    lit("2024-01-15T00:00")
                }
            }
            DataType::Json => lit(r#"{"source": "manual"}"#),
            DataType::Blob => "NULL".into(),
            _ => match sample.and_then(|v| v.as_str().map(str::to_string)) {
                Some(s) if !temporal.matches(&s) => lit(&format!("{s} (new)")),
                _ => lit("new entry"),
            },
        }
    }

    /// Places `payload` expressions into the free columns of `r`, packing
    /// any excess into the last one.
    fn assign(&self, r: &Roles<'a>, payload: Vec<String>) -> Option<Vec<(&'a str, String)>> {
        if payload.is_empty() {
            return Some(vec![]);
        }
        if r.free.is_empty() {
            return None;
        }
        let mut out: Vec<(&'a str, String)> = Vec::new();
        let room = r.free.len();
        for (i, e) in payload.iter().enumerate() {
            if i < room {
                out.push((r.free[i], e.clone()));
            }
        }
        if payload.len() > room {
            let last = out.pop().expect("room >= 1");
            let mut packed = vec![last.1];
            packed.extend(payload[room..].iter().cloned());
            out.push((last.0, format!("COALESCE({})", packed.join(", "))));
        }
        Some(out)
    }

    fn insert(&mut self) -> Option<String> {
        let values_form = self.ss.iter().all(|s| *s == S::ScalarSubquery)
            && !self.act(K::AggregateFunction)
            && !self.act(K::WindowFunction);
        let tables = self.all_tables();
        let r = self.base(&tables)?;
        let cols: Vec<&str> = r.t.columns.iter().map(|c| c.name.as_str()).collect();
        let names: Vec<String> = cols.iter().map(|c| id(c)).collect();
        if values_form {
            let mut values: Vec<String> = cols.iter().map(|c| self.default_value(&r, c)).collect();
            let pos = |c: &str| cols.iter().position(|x| *x == c).expect("column exists");
            values[pos(r.key)] = self.fresh_key(&r);
            for fk in &r.fks {
                let v = match fk.parent.column_values(fk.parent_key).into_iter().find(|v| !v.is_null()) {
                    Some(Value::Number(n)) => n.to_string(),
                    Some(Value::String(s)) => lit(s),
                    _ => "NULL".into(),
                };
                values[pos(fk.col)] = v;
            }
            let mut payload: Vec<String> = Vec::new();
            let actions: Vec<K> = self.aa.iter().copied().collect();
            for a in actions {
                payload.push(self.constant_piece(a));
            }
            if self.has(S::ScalarSubquery) {
                match r.fks.first() {
                    Some(fk) => {
                        values[pos(fk.col)] =
                            format!("(SELECT {} FROM {} AS s)", col("s", fk.parent_key), id(&fk.parent.name));
                    }
                    None => {
                        let t = self.other_table(&r);
                        let tr = roles(self.schema, t);
                        payload.push(format!("(SELECT {} FROM {} AS s)", col("s", self.label_col(&tr)), id(&t.name)));
                    }
                }
            }
            let date_first = self.act(K::SpecificTime);
            let mut r2 = Roles { free: r.free.clone(), ..roles(self.schema, r.t) };
            if date_first {
                r2.free.sort_by_key(|c| !r.dates.contains(c));
            }
            for (c, e) in self.assign(&r2, payload)? {
                values[pos(c)] = e;
            }
            return Some(format!(
                "INSERT INTO {} ({}) VALUES ({})",
                id(&r.t.name),
                names.join(", "),
                values.join(", ")
            ));
        }
        let cte = self.cte(&r);
        let from = cte.as_ref().map(|(n, _)| n.clone()).unwrap_or_else(|| r.t.name.clone());
        let mut exprs: Vec<String> = cols.iter().map(|c| col("a", c)).collect();
        let pos = |c: &str| cols.iter().position(|x| *x == c).expect("column exists");
        exprs[pos(r.key)] = if r.key_numeric {
            format!("{} + 1000", col("a", r.key))
        } else {
            format!("{} || '_copy'", col("a", r.key))
        };
        let actions: Vec<K> = self.aa.iter().copied().collect();
        let with_where = self.has(S::Where);
        let mut payload = Vec::new();
        let mut extra_conds = Vec::new();
        let mut pieces: Vec<Piece> = actions.iter().map(|a| self.action_piece(*a, &r, "a")).collect();
        pieces.extend(self.subquery_pieces(&r, "a", with_where));
        for p in pieces {
            match p {
                Piece::Pred(e) if with_where => extra_conds.push(e),
                Piece::Pred(e) => payload.push(format!("({e})")),
                Piece::Value(e, _) => payload.push(e),
            }
        }
        for (c, e) in self.assign(&r, payload)? {
            exprs[pos(c)] = e;
        }
        let q = self.query(&r, &from, exprs, &[], extra_conds, with_where, false, false);
        Some(format!(
            "{}INSERT OR IGNORE INTO {} ({}) {q}",
            Self::with_prefix(&cte),
            id(&r.t.name),
            names.join(", ")
        ))
    }

    fn needs_carrier(&self) -> bool {
        CONTENT.iter().any(|s| self.has(*s))
            || self.has(S::CommonTableExpression)
            || self.act(K::AggregateFunction)
            || self.act(K::WindowFunction)
    }

    /// Carrier query over `r` projecting its key first, with aggregate and
    /// window results as named columns.
    fn carrier(&mut self, r: &Roles<'a>, from: &str) -> (String, Vec<String>) {
        let mut lead = vec![format!("{} AS {}", col("a", r.key), id(r.key))];
        let mut names = Vec::new();
        for a in [K::AggregateFunction, K::WindowFunction] {
            if self.act(a) {
                if let Piece::Value(e, name) = self.action_piece(a, r, "a") {
                    lead.push(format!("{e} AS {}", id(&name)));
                    names.push(name);
                }
            }
        }
        let q = self.query(r, from, lead, &[], vec![], false, false, false);
        (q, names)
    }

    fn row_actions(&self) -> Vec<K> {
        self.aa
            .iter()
            .copied()
            .filter(|a| !matches!(a, K::AggregateFunction | K::WindowFunction))
            .collect()
    }

    fn update(&mut self) -> Option<String> {
        let tables: Vec<&'a TableSchema> = self
            .all_tables()
            .into_iter()
            .filter(|t| !roles(self.schema, t).free.is_empty())
            .collect();
        let r = self.base(&tables)?;
        let target = r.t.name.clone();
        let al = id(&target);
        let with_where = self.has(S::Where);
        let cte = self.cte(&r);
        let mut sets: Vec<String> = Vec::new();
        let mut conds: Vec<String> = Vec::new();
        let mut from_clause = String::new();
        if self.needs_carrier() {
            let from = cte.as_ref().map(|(n, _)| n.clone()).unwrap_or_else(|| r.t.name.clone());
            let only_cte = !CONTENT.iter().any(|s| self.has(*s))
                && !self.act(K::AggregateFunction)
                && !self.act(K::WindowFunction);
            if only_cte {
                from_clause = format!(" FROM {} AS s", id(&from));
            } else {
                let (q, names) = self.carrier(&r, &from);
                from_clause = format!(" FROM ({q}) AS s");
                sets.extend(names.iter().map(|n| col("s", n)));
            }
            if with_where {
                conds.push(format!("{} = {}", col(&al, r.key), col("s", r.key)));
            }
        }
        for a in self.row_actions() {
            match self.action_piece(a, &r, &al) {
                Piece::Pred(e) if with_where => conds.push(e),
                Piece::Pred(e) => sets.push(format!("({e})")),
                Piece::Value(e, _) => sets.push(e),
            }
        }
        for p in self.subquery_pieces(&r, &al, with_where) {
            match p {
                Piece::Pred(e) if with_where => conds.push(e),
                Piece::Pred(e) => sets.push(format!("({e})")),
                Piece::Value(e, _) => sets.push(e),
            }
        }
        if with_where && conds.is_empty() {
            conds.push(self.default_pred(&r, &al));
        }
        let mut assignments: Vec<(&str, String)> = self.assign(&r, sets)?;
        if assignments.is_empty() {
            let c = *self.pick(&r.free)?;
            let e = if r.nums.contains(&c) {
                format!("{} + 1", col(&al, c))
            } else if r.texts.contains(&c) {
                format!("{} || ' (revised)'", col(&al, c))
            } else {
                col(&al, c)
            };
            assignments.push((c, e));
        }
        let rendered: Vec<String> = assignments
            .into_iter()
            .map(|(c, e)| {
                let nullable = r.t.column(c).is_none_or(|x| x.nullable);
                if nullable {
                    format!("{} = {e}", id(c))
                } else {
                    format!("{} = COALESCE({e}, {})", id(c), col(&al, c))
                }
            })
            .collect();
        let mut sql = format!("{}UPDATE {} SET {}{from_clause}", Self::with_prefix(&cte), id(&target), rendered.join(", "));
        if !conds.is_empty() {
            sql.push_str(" WHERE ");
            sql.push_str(&conds.join(" AND "));
        }
        Some(sql)
    }

    fn delete(&mut self) -> Option<String> {
        let leaves: Vec<&'a TableSchema> = self
            .all_tables()
            .into_iter()
            .filter(|t| roles(self.schema, t).children.is_empty())
            .collect();
        let r = self.base(&leaves)?;
        let al = id(&r.t.name);
        let with_where = self.has(S::Where);
        let carrier = self.needs_carrier();
        let mut cte = self.cte(&r);
        if carrier && !with_where {
            // Without a predicate, only an otherwise unused CTE can hold the carrier.
            let (name, _) = cte.clone()?;
            let body = self.carrier(&r, &r.t.name).0;
            cte = Some((name.clone(), format!("WITH {} AS ({body})", id(&name))));
        }
        let mut conds = Vec::new();
        let mut returning = Vec::new();
        if carrier && with_where {
            let from = cte.as_ref().map(|(n, _)| n.clone()).unwrap_or_else(|| r.t.name.clone());
            let only_cte = !CONTENT.iter().any(|s| self.has(*s))
                && !self.act(K::AggregateFunction)
                && !self.act(K::WindowFunction);
            let q = if only_cte {
                format!("SELECT {} FROM {} AS a", col("a", r.key), id(&from))
            } else {
                format!("SELECT {} FROM ({}) AS s", col("s", r.key), self.carrier(&r, &from).0)
            };
            conds.push(format!("{} IN ({q})", col(&al, r.key)));
        }
        for a in self.row_actions() {
            match self.action_piece(a, &r, &al) {
                Piece::Pred(e) if with_where => conds.push(e),
                Piece::Pred(e) => returning.push(format!("({e}) AS matched")),
                Piece::Value(e, name) => returning.push(format!("{e} AS {}", id(&name))),
            }
        }
        let mut n = 0;
        for p in self.subquery_pieces(&r, &al, with_where) {
            match p {
                Piece::Pred(e) if with_where => conds.push(e),
                Piece::Pred(e) => {
                    n += 1;
                    returning.push(format!("({e}) AS flag_{n}"));
                }
                Piece::Value(e, name) => returning.push(format!("{e} AS {}", id(&name))),
            }
        }
        if with_where && conds.is_empty() {
            conds.push(self.default_pred(&r, &al));
        }
        let mut sql = format!("{}DELETE FROM {}", Self::with_prefix(&cte), id(&r.t.name));
        if !conds.is_empty() {
            sql.push_str(" WHERE ");
            sql.push_str(&conds.join(" AND "));
        }
        if !returning.is_empty() {
            sql.push_str(" RETURNING ");
            sql.push_str(&returning.join(", "));
        }
        Some(sql)
    }

    fn alter(&mut self) -> Option<String> {
        if !self.ss.is_empty() || self.aa.iter().any(|a| *a != K::Cast) {
            return None;
        }
        let t = *self.pick(&self.schema.tables.iter().collect::<Vec<_>>())?;
        let r = roles(self.schema, t);
        let fresh = |stem: &str| {
            (0..)
                .map(|i| if i == 0 { stem.to_string() } else { format!("{stem}_{i}") })
                .find(|n| t.column(n).is_none())
                .expect("unbounded")
        };
        if self.act(K::Cast) {
            let c = fresh(*self.pick(&["review_score", "priority_level", "batch_size"]).unwrap());
            return Some(format!(
                "ALTER TABLE {} ADD COLUMN {} INTEGER CHECK (CAST({} AS INTEGER) >= 0)",
                id(&t.name),
                id(&c),
                id(&c)
            ));
        }
        Some(match self.rng.random_range(0..4) {
            0 | 1 => {
                let (stem, ty) = *self
                    .pick(&[("notes", "TEXT"), ("reviewed_by", "TEXT"), ("score", "REAL"), ("is_archived", "INTEGER")])
                    .unwrap();
                format!("ALTER TABLE {} ADD COLUMN {} {ty}", id(&t.name), id(&fresh(stem)))
            }
            2 if !r.free.is_empty() => {
                let c = *self.pick(&r.free).unwrap();
                format!(
                    "ALTER TABLE {} RENAME COLUMN {} TO {}",
                    id(&t.name),
                    id(c),
                    id(&fresh(&format!("{c}_label")))
                )
            }
            _ => {
                let name = (0..)
                    .map(|i| format!("{}_archive{}", t.name, if i == 0 { String::new() } else { i.to_string() }))
                    .find(|n| self.schema.table(n).is_none())
                    .expect("unbounded");
                format!("ALTER TABLE {} RENAME TO {}", id(&t.name), id(&name))
            }
        })
    }
}
