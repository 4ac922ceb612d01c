//! Canonical SQL text for syntax trees. Rendering then re-parsing yields
//! an equal tree: parentheses survive as [`Expr::Nested`] and operator
//! trees are only ever produced by the parser, so no extra grouping is
//! needed.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn comma_list<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

fn paren_idents(f: &mut Formatter<'_>, idents: &[Ident]) -> fmt::Result {
    f.write_char('(')?;
    comma_list(f, idents)?;
    f.write_char(')')
}

impl Display for Ident {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.quoted {
            write!(f, "\"{}\"", self.value.replace('"', "\"\""))
        } else {
            f.write_str(&self.value)
        }
    }
}

impl Display for SqlTree {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.statement.fmt(f)
    }
}

impl Display for Statement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Select(q) => q.fmt(f),
            Statement::Insert(i) => i.fmt(f),
            Statement::Update(u) => u.fmt(f),
            Statement::Delete(d) => d.fmt(f),
            Statement::Alter(a) => a.fmt(f),
            Statement::Other { text, .. } => f.write_str(text),
        }
    }
}

impl Display for With {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("WITH ")?;
        if self.recursive {
            f.write_str("RECURSIVE ")?;
        }
        comma_list(f, &self.ctes)
    }
}

impl Display for Cte {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.columns.is_empty() {
            paren_idents(f, &self.columns)?;
        }
        write!(f, " AS ({})", self.query)
    }
}

impl Display for Query {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(w) = &self.with {
            write!(f, "{w} ")?;
        }
        write!(f, "{}", self.body)?;
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            comma_list(f, &self.order_by)?;
        }
        if let Some(l) = &self.limit {
            write!(f, " {l}")?;
        }
        Ok(())
    }
}

impl Display for Limit {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match (&self.offset, self.comma_form) {
            (Some(off), true) => write!(f, "LIMIT {off}, {}", self.count),
            (Some(off), false) => write!(f, "LIMIT {} OFFSET {off}", self.count),
            (None, _) => write!(f, "LIMIT {}", self.count),
        }
    }
}

impl Display for SetOperator {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetOperator::Union => "UNION",
            SetOperator::Intersect => "INTERSECT",
            SetOperator::Except => "EXCEPT",
        })
    }
}

impl Display for SetExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Select(s) => s.fmt(f),
            SetExpr::Values(rows) => {
                f.write_str("VALUES ")?;
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_char('(')?;
                    comma_list(f, row)?;
                    f.write_char(')')?;
                }
                Ok(())
            }
            SetExpr::SetOp {
                op,
                all,
                left,
                right,
            } => {
                write!(f, "{left} {op}")?;
                if *all {
                    f.write_str(" ALL")?;
                }
                write!(f, " {right}")
            }
        }
    }
}

impl Display for Select {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        comma_list(f, &self.projection)?;
        if let Some(from) = &self.from {
            write!(f, " FROM {from}")?;
        }
        if let Some(w) = &self.selection {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            comma_list(f, &self.group_by)?;
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        if !self.windows.is_empty() {
            f.write_str(" WINDOW ")?;
            comma_list(f, &self.windows)?;
        }
        Ok(())
    }
}

impl Display for NamedWindow {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} AS {}", self.name, self.spec)
    }
}

impl Display for SelectItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Wildcard => f.write_char('*'),
            SelectItem::QualifiedWildcard(t) => write!(f, "{t}.*"),
            SelectItem::Expr { expr, alias } => {
                write!(f, "{expr}")?;
                if let Some(a) = alias {
                    write!(f, " AS {a}")?;
                }
                Ok(())
            }
        }
    }
}

impl Display for FromClause {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.first)?;
        for j in &self.joins {
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

impl Display for Join {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.op == JoinOperator::Comma {
            return write!(f, ", {}", self.factor);
        }
        f.write_char(' ')?;
        if self.natural {
            f.write_str("NATURAL ")?;
        }
        match (self.op, self.explicit_keyword) {
            (JoinOperator::Cross, _) => f.write_str("CROSS ")?,
            (JoinOperator::Inner, true) => f.write_str("INNER ")?,
            (JoinOperator::Inner, false) | (JoinOperator::Comma, _) => {}
            (JoinOperator::Left, outer) => f.write_str(if outer { "LEFT OUTER " } else { "LEFT " })?,
            (JoinOperator::Right, outer) => f.write_str(if outer { "RIGHT OUTER " } else { "RIGHT " })?,
            (JoinOperator::Full, outer) => f.write_str(if outer { "FULL OUTER " } else { "FULL " })?,
        }
        write!(f, "JOIN {}", self.factor)?;
        match &self.constraint {
            JoinConstraint::None => Ok(()),
            JoinConstraint::On(e) => write!(f, " ON {e}"),
            JoinConstraint::Using(cols) => {
                f.write_str(" USING ")?;
                paren_idents(f, cols)
            }
        }
    }
}

fn alias_suffix(f: &mut Formatter<'_>, alias: &Option<Ident>) -> fmt::Result {
    match alias {
        Some(a) => write!(f, " AS {a}"),
        None => Ok(()),
    }
}

impl Display for TableFactor {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TableFactor::Table {
                schema,
                name,
                alias,
            } => {
                if let Some(s) = schema {
                    write!(f, "{s}.")?;
                }
                write!(f, "{name}")?;
                alias_suffix(f, alias)
            }
            TableFactor::Derived { subquery, alias } => {
                write!(f, "({})", subquery.query)?;
                alias_suffix(f, alias)
            }
            TableFactor::Function { name, args, alias } => {
                write!(f, "{name}(")?;
                comma_list(f, args)?;
                f.write_char(')')?;
                alias_suffix(f, alias)
            }
        }
    }
}

impl Display for OrderItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)?;
        match self.desc {
            Some(true) => f.write_str(" DESC")?,
            Some(false) => f.write_str(" ASC")?,
            None => {}
        }
        match self.nulls_first {
            Some(true) => f.write_str(" NULLS FIRST"),
            Some(false) => f.write_str(" NULLS LAST"),
            None => Ok(()),
        }
    }
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::String(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Literal::Number(n) => f.write_str(n),
            Literal::Blob(b) => write!(f, "X'{b}'"),
            Literal::Null => f.write_str("NULL"),
            Literal::Bool(true) => f.write_str("TRUE"),
            Literal::Bool(false) => f.write_str("FALSE"),
        }
    }
}

impl Display for ColumnRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.schema {
            write!(f, "{s}.")?;
        }
        if let Some(t) = &self.table {
            write!(f, "{t}.")?;
        }
        write!(f, "{}", self.column)
    }
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::EqEq => "==",
            BinaryOp::NotEq => "!=",
            BinaryOp::LtGt => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::Is => "IS",
            BinaryOp::IsNot => "IS NOT",
            BinaryOp::IsDistinctFrom => "IS DISTINCT FROM",
            BinaryOp::IsNotDistinctFrom => "IS NOT DISTINCT FROM",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::ShiftLeft => "<<",
            BinaryOp::ShiftRight => ">>",
            BinaryOp::Plus => "+",
            BinaryOp::Minus => "-",
            BinaryOp::Multiply => "*",
            BinaryOp::Divide => "/",
            BinaryOp::Modulo => "%",
            BinaryOp::Concat => "||",
            BinaryOp::JsonArrow => "->",
            BinaryOp::JsonLongArrow => "->>",
        }
    }
}

impl Display for PatternOp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternOp::Like => "LIKE",
            PatternOp::Glob => "GLOB",
            PatternOp::Regexp => "REGEXP",
            PatternOp::Match => "MATCH",
        })
    }
}

impl Display for FunctionCall {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if self.bare {
            return Ok(());
        }
        f.write_char('(')?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        match &self.args {
            FunctionArgs::Empty => {}
            FunctionArgs::Star => f.write_char('*')?,
            FunctionArgs::List(args) => comma_list(f, args)?,
        }
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            comma_list(f, &self.order_by)?;
        }
        f.write_char(')')?;
        if let Some(filter) = &self.filter {
            write!(f, " FILTER (WHERE {filter})")?;
        }
        if let Some(over) = &self.over {
            write!(f, " OVER {over}")?;
        }
        Ok(())
    }
}

impl Display for WindowSpec {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Named(n) => write!(f, "{n}"),
            WindowSpec::Inline {
                base,
                partition_by,
                order_by,
                frame,
            } => {
                let mut parts = Vec::new();
                if let Some(b) = base {
                    parts.push(b.to_string());
                }
                if !partition_by.is_empty() {
                    let list: Vec<String> = partition_by.iter().map(ToString::to_string).collect();
                    parts.push(format!("PARTITION BY {}", list.join(", ")));
                }
                if !order_by.is_empty() {
                    let list: Vec<String> = order_by.iter().map(ToString::to_string).collect();
                    parts.push(format!("ORDER BY {}", list.join(", ")));
                }
                if let Some(fr) = frame {
                    parts.push(fr.clone());
                }
                write!(f, "({})", parts.join(" "))
            }
        }
    }
}

fn starts_with_sign(e: &Expr) -> bool {
    match e {
        Expr::Unary {
            op: UnaryOp::Neg | UnaryOp::Plus,
            ..
        } => true,
        Expr::Binary { left, .. } => starts_with_sign(left),
        _ => false,
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(l) => l.fmt(f),
            Expr::Param(p) => f.write_str(p),
            Expr::Column(c) => c.fmt(f),
            Expr::Unary { op, expr } => match op {
                UnaryOp::Not => write!(f, "NOT {expr}"),
                UnaryOp::BitNot => write!(f, "~{expr}"),
                UnaryOp::Neg | UnaryOp::Plus => {
                    f.write_char(if *op == UnaryOp::Neg { '-' } else { '+' })?;
                    // `- -x` must not collapse into a `--` comment.
                    if starts_with_sign(expr) {
                        f.write_char(' ')?;
                    }
                    write!(f, "{expr}")
                }
            },
            Expr::Binary { op, left, right } => write!(f, "{left} {} {right}", op.symbol()),
            Expr::Pattern {
                op,
                negated,
                expr,
                pattern,
                escape,
            } => {
                write!(f, "{expr} ")?;
                if *negated {
                    f.write_str("NOT ")?;
                }
                write!(f, "{op} {pattern}")?;
                if let Some(e) = escape {
                    write!(f, " ESCAPE {e}")?;
                }
                Ok(())
            }
            Expr::Between {
                negated,
                expr,
                low,
                high,
            } => {
                let not = if *negated { "NOT " } else { "" };
                write!(f, "{expr} {not}BETWEEN {low} AND {high}")
            }
            Expr::InList {
                negated,
                expr,
                list,
            } => {
                let not = if *negated { "NOT " } else { "" };
                write!(f, "{expr} {not}IN (")?;
                comma_list(f, list)?;
                f.write_char(')')
            }
            Expr::InSubquery {
                negated,
                expr,
                subquery,
            } => {
                let not = if *negated { "NOT " } else { "" };
                write!(f, "{expr} {not}IN ({})", subquery.query)
            }
            Expr::Exists { subquery } => write!(f, "EXISTS ({})", subquery.query),
            Expr::Subquery(s) => write!(f, "({})", s.query),
            Expr::IsNull {
                negated,
                postfix,
                expr,
            } => match (postfix, negated) {
                (true, false) => write!(f, "{expr} ISNULL"),
                (true, true) => write!(f, "{expr} NOTNULL"),
                (false, _) => write!(f, "{expr} NOT NULL"),
            },
            Expr::Case {
                operand,
                whens,
                else_result,
            } => {
                f.write_str("CASE")?;
                if let Some(o) = operand {
                    write!(f, " {o}")?;
                }
                for (cond, result) in whens {
                    write!(f, " WHEN {cond} THEN {result}")?;
                }
                if let Some(e) = else_result {
                    write!(f, " ELSE {e}")?;
                }
                f.write_str(" END")
            }
            Expr::Cast { expr, type_name } => write!(f, "CAST({expr} AS {type_name})"),
            Expr::Function(call) => call.fmt(f),
            Expr::Collate { expr, collation } => write!(f, "{expr} COLLATE {collation}"),
            Expr::Nested(e) => write!(f, "({e})"),
            Expr::Tuple(items) => {
                f.write_char('(')?;
                comma_list(f, items)?;
                f.write_char(')')
            }
        }
    }
}

impl Display for ConflictAction {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictAction::Rollback => "ROLLBACK",
            ConflictAction::Abort => "ABORT",
            ConflictAction::Replace => "REPLACE",
            ConflictAction::Fail => "FAIL",
            ConflictAction::Ignore => "IGNORE",
        })
    }
}

impl Display for Assignment {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.columns.len() == 1 {
            write!(f, "{}", self.columns[0])?;
        } else {
            paren_idents(f, &self.columns)?;
        }
        write!(f, " = {}", self.value)
    }
}

fn returning(f: &mut Formatter<'_>, items: &[SelectItem]) -> fmt::Result {
    if items.is_empty() {
        return Ok(());
    }
    f.write_str(" RETURNING ")?;
    comma_list(f, items)
}

impl Display for Insert {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(w) = &self.with {
            write!(f, "{w} ")?;
        }
        if self.replace {
            f.write_str("REPLACE")?;
        } else {
            f.write_str("INSERT")?;
            if let Some(or) = self.or {
                write!(f, " OR {or}")?;
            }
        }
        write!(f, " INTO {}", self.table)?;
        alias_suffix(f, &self.alias)?;
        if !self.columns.is_empty() {
            f.write_char(' ')?;
            paren_idents(f, &self.columns)?;
        }
        match &self.source {
            InsertSource::Query(q) => write!(f, " {q}")?,
            InsertSource::DefaultValues => f.write_str(" DEFAULT VALUES")?,
        }
        for u in &self.upsert {
            f.write_str(" ON CONFLICT")?;
            if !u.target.is_empty() {
                f.write_char(' ')?;
                paren_idents(f, &u.target)?;
                if let Some(w) = &u.target_where {
                    write!(f, " WHERE {w}")?;
                }
            }
            if u.do_nothing {
                f.write_str(" DO NOTHING")?;
            } else {
                f.write_str(" DO UPDATE SET ")?;
                comma_list(f, &u.assignments)?;
                if let Some(w) = &u.selection {
                    write!(f, " WHERE {w}")?;
                }
            }
        }
        returning(f, &self.returning)
    }
}

impl Display for Update {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(w) = &self.with {
            write!(f, "{w} ")?;
        }
        f.write_str("UPDATE ")?;
        if let Some(or) = self.or {
            write!(f, "OR {or} ")?;
        }
        write!(f, "{}", self.table)?;
        alias_suffix(f, &self.alias)?;
        f.write_str(" SET ")?;
        comma_list(f, &self.assignments)?;
        if let Some(from) = &self.from {
            write!(f, " FROM {from}")?;
        }
        if let Some(w) = &self.selection {
            write!(f, " WHERE {w}")?;
        }
        returning(f, &self.returning)
    }
}

impl Display for Delete {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(w) = &self.with {
            write!(f, "{w} ")?;
        }
        write!(f, "DELETE FROM {}", self.table)?;
        alias_suffix(f, &self.alias)?;
        if let Some(w) = &self.selection {
            write!(f, " WHERE {w}")?;
        }
        returning(f, &self.returning)
    }
}

impl Display for ColumnConstraint {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ColumnConstraint::PrimaryKey {
                desc,
                autoincrement,
            } => {
                f.write_str("PRIMARY KEY")?;
                match desc {
                    Some(true) => f.write_str(" DESC")?,
                    Some(false) => f.write_str(" ASC")?,
                    None => {}
                }
                if *autoincrement {
                    f.write_str(" AUTOINCREMENT")?;
                }
                Ok(())
            }
            ColumnConstraint::NotNull => f.write_str("NOT NULL"),
            ColumnConstraint::Null => f.write_str("NULL"),
            ColumnConstraint::Unique => f.write_str("UNIQUE"),
            ColumnConstraint::Default(e) => write!(f, "DEFAULT {e}"),
            ColumnConstraint::Check(e) => write!(f, "CHECK ({e})"),
            ColumnConstraint::References { table, columns } => {
                write!(f, "REFERENCES {table}")?;
                if !columns.is_empty() {
                    f.write_char(' ')?;
                    paren_idents(f, columns)?;
                }
                Ok(())
            }
            ColumnConstraint::Collate(c) => write!(f, "COLLATE {c}"),
            ColumnConstraint::Generated { expr, stored } => {
                write!(f, "GENERATED ALWAYS AS ({expr})")?;
                if *stored {
                    f.write_str(" STORED")?;
                }
                Ok(())
            }
        }
    }
}

impl Display for ColumnDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if let Some(t) = &self.type_name {
            write!(f, " {t}")?;
        }
        for c in &self.constraints {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

impl Display for AlterTable {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "ALTER TABLE {} ", self.table)?;
        match &self.action {
            AlterAction::RenameTable(to) => write!(f, "RENAME TO {to}"),
            AlterAction::RenameColumn { from, to } => write!(f, "RENAME COLUMN {from} TO {to}"),
            AlterAction::AddColumn(def) => write!(f, "ADD COLUMN {def}"),
            AlterAction::DropColumn(c) => write!(f, "DROP COLUMN {c}"),
        }
    }
}
