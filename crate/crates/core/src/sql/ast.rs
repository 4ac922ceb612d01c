//! Syntax tree for a single SQL statement.
//!
//! Column references carry the scope depth they resolve to and subquery
//! nodes carry a correlation flag; both are filled in by
//! [`resolve`](super::scope::resolve) right after parsing.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Ident {
    pub value: String,
    pub quoted: bool,
}

impl Ident {
    pub fn new(value: impl Into<String>) -> Self {
        Self {
            value: value.into(),
            quoted: false,
        }
    }

    pub fn matches(&self, other: &str) -> bool {
        self.value.eq_ignore_ascii_case(other)
    }

    pub fn lower(&self) -> String {
        self.value.to_ascii_lowercase()
    }
}

/// A parsed statement plus its source token count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlTree {
    pub statement: Statement,
    #[serde(skip)]
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StatementKind {
    Select,
    Insert,
    Update,
    Delete,
    Alter,
    Other,
}

/// Optional clause tags in grammar order, used by [`SqlTree::clauses`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Clause {
    With,
    Values,
    From,
    Where,
    GroupBy,
    Having,
    Window,
    OrderBy,
    Limit,
    Returning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Statement {
    Select(Query),
    Insert(Insert),
    Update(Update),
    Delete(Delete),
    Alter(AlterTable),
    /// A recognised top-level verb outside the supported statement set,
    /// kept verbatim (e.g. `CREATE INDEX`).
    Other { verb: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct With {
    pub recursive: bool,
    pub ctes: Vec<Cte>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cte {
    pub name: Ident,
    pub columns: Vec<Ident>,
    pub query: Box<Query>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    pub with: Option<With>,
    pub body: SetExpr,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<Limit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SetOperator {
    Union,
    Intersect,
    Except,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SetExpr {
    Select(Box<Select>),
    Values(Vec<Vec<Expr>>),
    SetOp {
        op: SetOperator,
        all: bool,
        left: Box<SetExpr>,
        right: Box<SetExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Select {
    pub distinct: bool,
    pub projection: Vec<SelectItem>,
    pub from: Option<FromClause>,
    pub selection: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
    pub windows: Vec<NamedWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SelectItem {
    Wildcard,
    QualifiedWildcard(Ident),
    Expr { expr: Expr, alias: Option<Ident> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedWindow {
    pub name: Ident,
    pub spec: WindowSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FromClause {
    pub first: TableFactor,
    pub joins: Vec<Join>,
}

impl FromClause {
    pub fn factors(&self) -> impl Iterator<Item = &TableFactor> {
        std::iter::once(&self.first).chain(self.joins.iter().map(|j| &j.factor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum JoinOperator {
    /// `a, b`
    Comma,
    Cross,
    Inner,
    Left,
    Right,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Join {
    pub natural: bool,
    pub op: JoinOperator,
    /// Whether the optional `INNER`/`OUTER` keyword was written.
    pub explicit_keyword: bool,
    pub factor: TableFactor,
    pub constraint: JoinConstraint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum JoinConstraint {
    None,
    On(Expr),
    Using(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TableFactor {
    Table {
        schema: Option<Ident>,
        name: Ident,
        alias: Option<Ident>,
    },
    Derived {
        subquery: Subquery,
        alias: Option<Ident>,
    },
    Function {
        name: Ident,
        args: Vec<Expr>,
        alias: Option<Ident>,
    },
}

impl TableFactor {
    /// Name visible to column qualifiers.
    pub fn visible_name(&self) -> Option<&Ident> {
        match self {
            TableFactor::Table { name, alias, .. } => Some(alias.as_ref().unwrap_or(name)),
            TableFactor::Derived { alias, .. } => alias.as_ref(),
            TableFactor::Function { name, alias, .. } => Some(alias.as_ref().unwrap_or(name)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderItem {
    pub expr: Expr,
    pub desc: Option<bool>,
    pub nulls_first: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Limit {
    pub count: Expr,
    pub offset: Option<Expr>,
    /// `LIMIT offset, count` spelling.
    pub comma_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subquery {
    pub query: Box<Query>,
    pub correlated: bool,
}

impl Subquery {
    pub fn new(query: Query) -> Self {
        Self {
            query: Box::new(query),
            correlated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Literal {
    String(String),
    Number(String),
    Blob(String),
    Null,
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnRef {
    pub schema: Option<Ident>,
    pub table: Option<Ident>,
    pub column: Ident,
    /// Number of subquery boundaries crossed to reach the binding scope.
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
    Plus,
    BitNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    EqEq,
    NotEq,
    LtGt,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Is,
    IsNot,
    IsDistinctFrom,
    IsNotDistinctFrom,
    BitAnd,
    BitOr,
    ShiftLeft,
    ShiftRight,
    Plus,
    Minus,
    Multiply,
    Divide,
    Modulo,
    Concat,
    /// `->`
    JsonArrow,
    /// `->>`
    JsonLongArrow,
}

impl BinaryOp {
    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Plus | BinaryOp::Minus | BinaryOp::Multiply | BinaryOp::Divide | BinaryOp::Modulo
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PatternOp {
    Like,
    Glob,
    Regexp,
    Match,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FunctionArgs {
    /// `f()`
    Empty,
    /// `f(*)`
    Star,
    List(Vec<Expr>),
}

impl FunctionArgs {
    pub fn len(&self) -> usize {
        match self {
            FunctionArgs::Empty => 0,
            FunctionArgs::Star => 1,
            FunctionArgs::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exprs(&self) -> &[Expr] {
        match self {
            FunctionArgs::List(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionCall {
    pub name: Ident,
    pub distinct: bool,
    pub args: FunctionArgs,
    /// `ORDER BY` inside an aggregate call, e.g. `group_concat(x ORDER BY y)`.
    pub order_by: Vec<OrderItem>,
    pub filter: Option<Box<Expr>>,
    pub over: Option<WindowSpec>,
    /// Keyword value such as `CURRENT_DATE`, written without parentheses.
    pub bare: bool,
}

impl FunctionCall {
    pub fn is_windowed(&self) -> bool {
        self.over.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WindowSpec {
    Named(Ident),
    Inline {
        base: Option<Ident>,
        partition_by: Vec<Expr>,
        order_by: Vec<OrderItem>,
        /// Frame specification kept as normalised token text.
        frame: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Literal(Literal),
    Param(String),
    Column(ColumnRef),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Pattern {
        op: PatternOp,
        negated: bool,
        expr: Box<Expr>,
        pattern: Box<Expr>,
        escape: Option<Box<Expr>>,
    },
    Between {
        negated: bool,
        expr: Box<Expr>,
        low: Box<Expr>,
        high: Box<Expr>,
    },
    InList {
        negated: bool,
        expr: Box<Expr>,
        list: Vec<Expr>,
    },
    InSubquery {
        negated: bool,
        expr: Box<Expr>,
        subquery: Subquery,
    },
    Exists {
        subquery: Subquery,
    },
    Subquery(Subquery),
    IsNull {
        negated: bool,
        /// `ISNULL` / `NOTNULL` postfix spelling.
        postfix: bool,
        expr: Box<Expr>,
    },
    Case {
        operand: Option<Box<Expr>>,
        whens: Vec<(Expr, Expr)>,
        else_result: Option<Box<Expr>>,
    },
    Cast {
        expr: Box<Expr>,
        type_name: String,
    },
    Function(FunctionCall),
    Collate {
        expr: Box<Expr>,
        collation: Ident,
    },
    Nested(Box<Expr>),
    Tuple(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConflictAction {
    Rollback,
    Abort,
    Replace,
    Fail,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InsertSource {
    Query(Box<Query>),
    DefaultValues,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub columns: Vec<Ident>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Upsert {
    pub target: Vec<Ident>,
    pub target_where: Option<Expr>,
    /// Empty means `DO NOTHING`.
    pub assignments: Vec<Assignment>,
    pub do_nothing: bool,
    pub selection: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Insert {
    pub with: Option<With>,
    /// `REPLACE INTO` spelling.
    pub replace: bool,
    pub or: Option<ConflictAction>,
    pub table: Ident,
    pub alias: Option<Ident>,
    pub columns: Vec<Ident>,
    pub source: InsertSource,
    pub upsert: Vec<Upsert>,
    pub returning: Vec<SelectItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Update {
    pub with: Option<With>,
    pub or: Option<ConflictAction>,
    pub table: Ident,
    pub alias: Option<Ident>,
    pub assignments: Vec<Assignment>,
    pub from: Option<FromClause>,
    pub selection: Option<Expr>,
    pub returning: Vec<SelectItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delete {
    pub with: Option<With>,
    pub table: Ident,
    pub alias: Option<Ident>,
    pub selection: Option<Expr>,
    pub returning: Vec<SelectItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ColumnConstraint {
    PrimaryKey { desc: Option<bool>, autoincrement: bool },
    NotNull,
    Null,
    Unique,
    Default(Expr),
    Check(Expr),
    References { table: Ident, columns: Vec<Ident> },
    Collate(Ident),
    Generated { expr: Expr, stored: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDef {
    pub name: Ident,
    pub type_name: Option<String>,
    pub constraints: Vec<ColumnConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AlterAction {
    RenameTable(Ident),
    RenameColumn { from: Ident, to: Ident },
    AddColumn(ColumnDef),
    DropColumn(Ident),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlterTable {
    pub table: Ident,
    pub action: AlterAction,
}

impl SqlTree {
    pub fn kind(&self) -> StatementKind {
        match &self.statement {
            Statement::Select(_) => StatementKind::Select,
            Statement::Insert(_) => StatementKind::Insert,
            Statement::Update(_) => StatementKind::Update,
            Statement::Delete(_) => StatementKind::Delete,
            Statement::Alter(_) => StatementKind::Alter,
            Statement::Other { .. } => StatementKind::Other,
        }
    }

    /// Optional top-level clauses in source order; the statement's own verb
    /// clause (`SELECT`, `SET`, `DELETE FROM`) is implied. For a compound
    /// query the clauses of the first arm are reported.
    pub fn clauses(&self) -> Vec<Clause> {
        fn select_clauses(s: &Select, out: &mut Vec<Clause>) {
            if s.from.is_some() {
                out.push(Clause::From);
            }
            if s.selection.is_some() {
                out.push(Clause::Where);
            }
            if !s.group_by.is_empty() {
                out.push(Clause::GroupBy);
            }
            if s.having.is_some() {
                out.push(Clause::Having);
            }
            if !s.windows.is_empty() {
                out.push(Clause::Window);
            }
        }
        fn body_clauses(body: &SetExpr, out: &mut Vec<Clause>) {
            match body {
                SetExpr::Select(s) => select_clauses(s, out),
                SetExpr::Values(_) => out.push(Clause::Values),
                SetExpr::SetOp { left, .. } => body_clauses(left, out),
            }
        }
        fn query_clauses(q: &Query, out: &mut Vec<Clause>) {
            if q.with.is_some() {
                out.push(Clause::With);
            }
            body_clauses(&q.body, out);
            if !q.order_by.is_empty() {
                out.push(Clause::OrderBy);
            }
            if q.limit.is_some() {
                out.push(Clause::Limit);
            }
        }
        let mut out = Vec::new();
        match &self.statement {
            Statement::Select(q) => query_clauses(q, &mut out),
            Statement::Insert(i) => {
                if i.with.is_some() {
                    out.push(Clause::With);
                }
                match &i.source {
                    InsertSource::Query(q) => query_clauses(q, &mut out),
                    InsertSource::DefaultValues => out.push(Clause::Values),
                }
                if !i.returning.is_empty() {
                    out.push(Clause::Returning);
                }
            }
            Statement::Update(u) => {
                if u.with.is_some() {
                    out.push(Clause::With);
                }
                if u.from.is_some() {
                    out.push(Clause::From);
                }
                if u.selection.is_some() {
                    out.push(Clause::Where);
                }
                if !u.returning.is_empty() {
                    out.push(Clause::Returning);
                }
            }
            Statement::Delete(d) => {
                if d.with.is_some() {
                    out.push(Clause::With);
                }
                if d.selection.is_some() {
                    out.push(Clause::Where);
                }
                if !d.returning.is_empty() {
                    out.push(Clause::Returning);
                }
            }
            Statement::Alter(_) | Statement::Other { .. } => {}
        }
        out
    }
}
