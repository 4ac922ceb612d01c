//! Taxonomy feature detectors and per-query statistics.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::error::SqlError;
use super::functions::{FunctionClass, FunctionTable};
use super::temporal::TemporalFormats;
use super::visit::{walk_tree, Visitor};
use super::{parse_sql, Dialect};
use crate::taxonomy::{KeyAction, StatementType, SyntaxStructure};

/// Function table and temporal formats used by the key-action detector.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub functions: FunctionTable,
    pub temporal: TemporalFormats,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            functions: FunctionTable::builtin().clone(),
            temporal: TemporalFormats::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnalysisWarning {
    UnknownFunction(String),
    HavingWithoutGroupBy,
}

impl fmt::Display for AnalysisWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisWarning::UnknownFunction(n) => write!(f, "unknown function '{n}'"),
            AnalysisWarning::HavingWithoutGroupBy => f.write_str("HAVING without GROUP BY"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlFeatureSummary {
    pub statement_type: StatementType,
    pub syntax_structures: BTreeSet<SyntaxStructure>,
    pub key_actions: BTreeSet<KeyAction>,
    pub distinct_table_count: usize,
    pub token_count: usize,
    pub function_count: usize,
    pub join_count: usize,
    pub window_function_count: usize,
    pub cte_count: usize,
    pub subquery_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<AnalysisWarning>,
}

pub fn detect_statement_type(tree: &SqlTree) -> Result<StatementType, SqlError> {
    match &tree.statement {
        Statement::Select(_) => Ok(StatementType::Select),
        Statement::Insert(_) => Ok(StatementType::Insert),
        Statement::Update(_) => Ok(StatementType::Update),
        Statement::Delete(_) => Ok(StatementType::Delete),
        Statement::Alter(_) => Ok(StatementType::Alter),
        Statement::Other { verb, .. } => Err(SqlError::UnsupportedStatement { verb: verb.clone() }),
    }
}

#[derive(Default)]
struct StructureDetector {
    found: BTreeSet<SyntaxStructure>,
    warnings: BTreeSet<AnalysisWarning>,
    join_count: usize,
    cte_count: usize,
    subquery_count: usize,
    tables: BTreeSet<String>,
    cte_names: HashSet<String>,
}

impl StructureDetector {
    fn subquery(&mut self, s: &Subquery) {
        self.subquery_count += 1;
        if s.correlated {
            self.found.insert(SyntaxStructure::CorrelatedSubquery);
        }
    }
}

impl Visitor for StructureDetector {
    fn query(&mut self, q: &Query) {
        if !q.order_by.is_empty() {
            self.found.insert(SyntaxStructure::OrderBy);
        }
        if q.limit.is_some() {
            self.found.insert(SyntaxStructure::LimitOffset);
        }
    }

    fn with(&mut self, w: &With) {
        self.found.insert(SyntaxStructure::CommonTableExpression);
        self.cte_count += w.ctes.len();
        self.cte_names.extend(w.ctes.iter().map(|c| c.name.lower()));
    }

    fn select(&mut self, s: &Select) {
        if s.selection.is_some() {
            self.found.insert(SyntaxStructure::Where);
        }
        if !s.group_by.is_empty() {
            self.found.insert(SyntaxStructure::GroupBy);
        }
        if s.having.is_some() {
            if s.group_by.is_empty() {
                self.warnings.insert(AnalysisWarning::HavingWithoutGroupBy);
            } else {
                self.found.insert(SyntaxStructure::Having);
            }
        }
    }

    fn set_op(&mut self, op: SetOperator, _all: bool) {
        self.found.insert(match op {
            SetOperator::Union => SyntaxStructure::Union,
            SetOperator::Intersect => SyntaxStructure::Intersect,
            SetOperator::Except => SyntaxStructure::Except,
        });
    }

    fn join(&mut self, j: &Join) {
        self.join_count += 1;
        let s = match j.op {
            JoinOperator::Comma | JoinOperator::Cross => SyntaxStructure::CrossJoin,
            JoinOperator::Left | JoinOperator::Right | JoinOperator::Full => SyntaxStructure::OuterJoin,
            JoinOperator::Inner => {
                if j.natural || !matches!(j.constraint, JoinConstraint::None) {
                    SyntaxStructure::InnerJoin
                } else {
                    SyntaxStructure::CrossJoin
                }
            }
        };
        self.found.insert(s);
    }

    fn factor(&mut self, f: &TableFactor) {
        match f {
            TableFactor::Table { name, .. } => {
                self.tables.insert(name.lower());
            }
            TableFactor::Derived { subquery, .. } => self.subquery(subquery),
            TableFactor::Function { .. } => {}
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Subquery(s) => {
                self.found.insert(SyntaxStructure::ScalarSubquery);
                self.subquery(s);
            }
            Expr::InSubquery { subquery, .. } | Expr::Exists { subquery } => self.subquery(subquery),
            _ => {}
        }
    }
}

fn run_structures(tree: &SqlTree) -> StructureDetector {
    let mut d = StructureDetector::default();
    walk_tree(tree, &mut d);
    match &tree.statement {
        Statement::Update(Update {
            selection: Some(_), ..
        })
        | Statement::Delete(Delete {
            selection: Some(_), ..
        }) => {
            d.found.insert(SyntaxStructure::Where);
        }
        _ => {}
    }
    match &tree.statement {
        Statement::Insert(i) => {
            d.tables.insert(i.table.lower());
        }
        Statement::Update(u) => {
            d.tables.insert(u.table.lower());
        }
        Statement::Delete(x) => {
            d.tables.insert(x.table.lower());
        }
        Statement::Alter(a) => {
            d.tables.insert(a.table.lower());
        }
        _ => {}
    }
    d
}

/// Syntax structures present anywhere in the tree, nested scopes included.
pub fn detect_syntax_structures(tree: &SqlTree) -> BTreeSet<SyntaxStructure> {
    run_structures(tree).found
}

struct ActionDetector<'a> {
    cfg: &'a AnalysisConfig,
    found: BTreeSet<KeyAction>,
    warnings: BTreeSet<AnalysisWarning>,
    function_count: usize,
    window_count: usize,
    /// Addresses of function calls sitting in a string-typed position.
    string_context: HashSet<usize>,
}

fn addr(call: &FunctionCall) -> usize {
    call as *const FunctionCall as usize
}

impl ActionDetector<'_> {
    fn mark_string_context(&mut self, e: &Expr) {
        let mut e = e;
        while let Expr::Nested(inner) = e {
            e = inner;
        }
        if let Expr::Function(call) = e {
            self.string_context.insert(addr(call));
        }
    }

    fn call(&mut self, call: &FunctionCall) {
        let t = &self.cfg.functions;
        let name = call.name.value.as_str();
        self.function_count += 1;
        if call.is_windowed() {
            self.window_count += 1;
            self.found.insert(KeyAction::WindowFunction);
        } else if t.has(name, FunctionClass::Aggregate) {
            // min/max with several arguments are the scalar variants.
            let scalar_minmax = (call.name.matches("min") || call.name.matches("max")) && call.args.len() >= 2;
            if !scalar_minmax {
                self.found.insert(KeyAction::AggregateFunction);
            }
        }
        if t.has(name, FunctionClass::Time) {
            self.found.insert(KeyAction::TimeFunction);
            let int_arg = call
                .args
                .exprs()
                .iter()
                .any(|a| matches!(a, Expr::Literal(Literal::Number(n)) if n.bytes().all(|b| b.is_ascii_digit())));
            if int_arg {
                self.found.insert(KeyAction::SpecificTime);
            }
        }
        if t.has(name, FunctionClass::Json) {
            self.found.insert(KeyAction::JsonFunction);
        }
        if t.has(name, FunctionClass::String) {
            self.found.insert(KeyAction::StringFunction);
            for a in call.args.exprs() {
                self.mark_string_context(a);
            }
        }
        if call.name.matches("iif") {
            self.found.insert(KeyAction::ConditionJudgement);
        }
        if !t.is_known(name) {
            if self.string_context.contains(&addr(call)) {
                self.found.insert(KeyAction::StringFunction);
            } else {
                self.warnings.insert(AnalysisWarning::UnknownFunction(call.name.lower()));
            }
        }
    }
}

impl Visitor for ActionDetector<'_> {
    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Literal(Literal::String(s)) => {
                if self.cfg.temporal.matches(s) {
                    self.found.insert(KeyAction::SpecificTime);
                }
            }
            Expr::Function(call) => self.call(call),
            Expr::Cast { .. } => {
                self.function_count += 1;
                self.found.insert(KeyAction::Cast);
            }
            Expr::Case { .. } => {
                self.found.insert(KeyAction::ConditionJudgement);
            }
            Expr::Pattern {
                op, expr, pattern, ..
            } => {
                if *op == PatternOp::Like {
                    let wildcard = match pattern.as_ref() {
                        Expr::Literal(Literal::String(p)) => p.contains('%') || p.contains('_'),
                        _ => true,
                    };
                    if wildcard {
                        self.found.insert(KeyAction::WildcardFiltering);
                    }
                }
                self.mark_string_context(expr);
                self.mark_string_context(pattern);
            }
            Expr::Binary { op, left, right } => match op {
                BinaryOp::JsonArrow | BinaryOp::JsonLongArrow => {
                    self.found.insert(KeyAction::JsonFunction);
                }
                BinaryOp::Concat => {
                    self.mark_string_context(left);
                    self.mark_string_context(right);
                }
                _ => {}
            },
            _ => {}
        }
    }
}

fn run_actions<'a>(tree: &SqlTree, cfg: &'a AnalysisConfig) -> ActionDetector<'a> {
    let mut d = ActionDetector {
        cfg,
        found: BTreeSet::new(),
        warnings: BTreeSet::new(),
        function_count: 0,
        window_count: 0,
        string_context: HashSet::new(),
    };
    walk_tree(tree, &mut d);
    d
}

/// Length of the longest chain of arithmetic operators and aggregate
/// calls nested inside one another anywhere in the tree.
pub fn chained_steps(tree: &SqlTree, cfg: &AnalysisConfig) -> usize {
    struct Chain<'a> {
        cfg: &'a AnalysisConfig,
        best: usize,
    }
    fn depth(e: &Expr, cfg: &AnalysisConfig) -> usize {
        match e {
            Expr::Binary { op, left, right } => {
                let inner = depth(left, cfg).max(depth(right, cfg));
                if op.is_arithmetic() {
                    inner + 1
                } else {
                    inner
                }
            }
            Expr::Function(call) => {
                let inner = call.args.exprs().iter().map(|a| depth(a, cfg)).max().unwrap_or(0);
                if !call.is_windowed() && cfg.functions.has(&call.name.value, FunctionClass::Aggregate) {
                    inner + 1
                } else {
                    inner
                }
            }
            Expr::Nested(x) | Expr::Unary { expr: x, .. } | Expr::Cast { expr: x, .. } => depth(x, cfg),
            _ => 0,
        }
    }
    impl Visitor for Chain<'_> {
        fn expr(&mut self, e: &Expr) {
            self.best = self.best.max(depth(e, self.cfg));
        }
    }
    let mut c = Chain { cfg, best: 0 };
    walk_tree(tree, &mut c);
    c.best
}

/// Key actions present anywhere in the tree.
pub fn detect_key_actions(tree: &SqlTree, cfg: &AnalysisConfig) -> BTreeSet<KeyAction> {
    run_actions(tree, cfg).found
}

/// Key actions plus the warnings raised while detecting them.
pub fn detect_key_actions_with_warnings(
    tree: &SqlTree,
    cfg: &AnalysisConfig,
) -> (BTreeSet<KeyAction>, Vec<AnalysisWarning>) {
    let d = run_actions(tree, cfg);
    (d.found, d.warnings.into_iter().collect())
}

/// Feature summary of an already-parsed tree.
pub fn summarize_tree(tree: &SqlTree, cfg: &AnalysisConfig) -> Result<SqlFeatureSummary, SqlError> {
    let statement_type = detect_statement_type(tree)?;
    let s = run_structures(tree);
    let a = run_actions(tree, cfg);
    let distinct_table_count = s.tables.iter().filter(|t| !s.cte_names.contains(*t)).count();
    let mut warnings: Vec<AnalysisWarning> = s.warnings.into_iter().collect();
    warnings.extend(a.warnings);
    warnings.sort();
    warnings.dedup();
    Ok(SqlFeatureSummary {
        statement_type,
        syntax_structures: s.found,
        key_actions: a.found,
        distinct_table_count,
        token_count: tree.token_count,
        function_count: a.function_count,
        join_count: s.join_count,
        window_function_count: a.window_count,
        cte_count: s.cte_count,
        subquery_count: s.subquery_count,
        warnings,
    })
}

/// Parses `sql` and summarizes it.
pub fn summarize(sql: &str, cfg: &AnalysisConfig) -> Result<SqlFeatureSummary, SqlError> {
    let tree = parse_sql(sql, Dialect::Sqlite)?;
    summarize_tree(&tree, cfg)
}
