//! Binds column references to query scopes without a catalog.
//!
//! A qualified reference binds to the innermost scope exposing that name
//! (alias or table). An unqualified reference binds to the innermost scope
//! that has at least one source. A subquery is correlated when any column
//! inside it binds to a scope outside it.

use super::ast::*;

#[derive(Debug, Default)]
struct Scope {
    names: Vec<String>,
}

impl Scope {
    fn add(&mut self, ident: &Ident) {
        self.names.push(ident.lower());
    }

    fn from_clause(from: &FromClause) -> Self {
        let mut s = Scope::default();
        for factor in from.factors() {
            match factor.visible_name() {
                Some(n) => s.add(n),
                // Anonymous derived tables still supply unqualified columns.
                None => s.names.push(String::new()),
            }
        }
        s
    }
}

struct Resolver {
    stack: Vec<Scope>,
}

/// Sentinel meaning "no column bound anywhere below".
const NONE: usize = usize::MAX;

/// Fills in [`ColumnRef::depth`] and [`Subquery::correlated`] across the tree.
pub fn resolve(tree: &mut SqlTree) {
    let mut r = Resolver { stack: Vec::new() };
    match &mut tree.statement {
        Statement::Select(q) => {
            r.query(q);
        }
        Statement::Insert(i) => {
            if let Some(w) = &mut i.with {
                r.with(w);
            }
            if let InsertSource::Query(q) = &mut i.source {
                r.query(q);
            }
            let mut scope = Scope::default();
            scope.add(i.alias.as_ref().unwrap_or(&i.table));
            scope.names.push("excluded".into());
            r.stack.push(scope);
            for u in &mut i.upsert {
                if let Some(e) = &mut u.target_where {
                    r.expr(e);
                }
                for a in &mut u.assignments {
                    r.expr(&mut a.value);
                }
                if let Some(e) = &mut u.selection {
                    r.expr(e);
                }
            }
            r.items(&mut i.returning);
            r.stack.pop();
        }
        Statement::Update(u) => {
            if let Some(w) = &mut u.with {
                r.with(w);
            }
            if let Some(from) = &mut u.from {
                r.derived_factors(from);
            }
            let mut scope = match &u.from {
                Some(from) => Scope::from_clause(from),
                None => Scope::default(),
            };
            scope.add(u.alias.as_ref().unwrap_or(&u.table));
            r.stack.push(scope);
            if let Some(from) = &mut u.from {
                r.join_constraints(from);
            }
            for a in &mut u.assignments {
                r.expr(&mut a.value);
            }
            if let Some(e) = &mut u.selection {
                r.expr(e);
            }
            r.items(&mut u.returning);
            r.stack.pop();
        }
        Statement::Delete(d) => {
            if let Some(w) = &mut d.with {
                r.with(w);
            }
            let mut scope = Scope::default();
            scope.add(d.alias.as_ref().unwrap_or(&d.table));
            r.stack.push(scope);
            if let Some(e) = &mut d.selection {
                r.expr(e);
            }
            r.items(&mut d.returning);
            r.stack.pop();
        }
        Statement::Alter(a) => {
            if let AlterAction::AddColumn(def) = &mut a.action {
                r.stack.push(Scope::default());
                for c in &mut def.constraints {
                    match c {
                        ColumnConstraint::Default(e)
                        | ColumnConstraint::Check(e)
                        | ColumnConstraint::Generated { expr: e, .. } => {
                            r.expr(e);
                        }
                        _ => {}
                    }
                }
                r.stack.pop();
            }
        }
        Statement::Other { .. } => {}
    }
}

impl Resolver {
    fn with(&mut self, w: &mut With) -> usize {
        let mut min = NONE;
        for cte in &mut w.ctes {
            min = min.min(self.query(&mut cte.query));
        }
        min
    }

    /// Resolves a nested query and returns the lowest stack level any
    /// column inside it bound to.
    fn subquery(&mut self, s: &mut Subquery) -> usize {
        let level = self.stack.len();
        let min = self.query(&mut s.query);
        s.correlated = min < level;
        min
    }

    fn query(&mut self, q: &mut Query) -> usize {
        let mut min = NONE;
        if let Some(w) = &mut q.with {
            min = min.min(self.with(w));
        }
        min = min.min(self.set_expr(&mut q.body));
        if !q.order_by.is_empty() || q.limit.is_some() {
            let scope = match first_select(&q.body) {
                Some(Select {
                    from: Some(from), ..
                }) => Scope::from_clause(from),
                _ => Scope::default(),
            };
            self.stack.push(scope);
            for item in &mut q.order_by {
                min = min.min(self.expr(&mut item.expr));
            }
            if let Some(l) = &mut q.limit {
                min = min.min(self.expr(&mut l.count));
                if let Some(o) = &mut l.offset {
                    min = min.min(self.expr(o));
                }
            }
            self.stack.pop();
        }
        min
    }

    fn set_expr(&mut self, body: &mut SetExpr) -> usize {
        match body {
            SetExpr::Select(s) => self.select(s),
            SetExpr::Values(rows) => {
                self.stack.push(Scope::default());
                let mut min = NONE;
                for row in rows {
                    for e in row {
                        min = min.min(self.expr(e));
                    }
                }
                self.stack.pop();
                min
            }
            SetExpr::SetOp { left, right, .. } => self.set_expr(left).min(self.set_expr(right)),
        }
    }

    /// Resolves derived tables and table-function arguments, which see the
    /// enclosing scopes but not their sibling FROM items.
    fn derived_factors(&mut self, from: &mut FromClause) -> usize {
        let mut min = NONE;
        let factors = std::iter::once(&mut from.first).chain(from.joins.iter_mut().map(|j| &mut j.factor));
        for factor in factors {
            match factor {
                TableFactor::Derived { subquery, .. } => min = min.min(self.subquery(subquery)),
                TableFactor::Function { args, .. } => {
                    for a in args {
                        min = min.min(self.expr(a));
                    }
                }
                TableFactor::Table { .. } => {}
            }
        }
        min
    }

    fn join_constraints(&mut self, from: &mut FromClause) -> usize {
        let mut min = NONE;
        for j in &mut from.joins {
            if let JoinConstraint::On(e) = &mut j.constraint {
                min = min.min(self.expr(e));
            }
        }
        min
    }

    fn select(&mut self, s: &mut Select) -> usize {
        let mut min = NONE;
        if let Some(from) = &mut s.from {
            min = min.min(self.derived_factors(from));
        }
        let scope = match &s.from {
            Some(from) => Scope::from_clause(from),
            None => Scope::default(),
        };
        self.stack.push(scope);
        if let Some(from) = &mut s.from {
            min = min.min(self.join_constraints(from));
        }
        min = min.min(self.items(&mut s.projection));
        if let Some(e) = &mut s.selection {
            min = min.min(self.expr(e));
        }
        for e in &mut s.group_by {
            min = min.min(self.expr(e));
        }
        if let Some(e) = &mut s.having {
            min = min.min(self.expr(e));
        }
        for w in &mut s.windows {
            min = min.min(self.window(&mut w.spec));
        }
        self.stack.pop();
        min
    }

    fn items(&mut self, items: &mut [SelectItem]) -> usize {
        let mut min = NONE;
        for item in items {
            if let SelectItem::Expr { expr, .. } = item {
                min = min.min(self.expr(expr));
            }
        }
        min
    }

    fn window(&mut self, w: &mut WindowSpec) -> usize {
        let mut min = NONE;
        if let WindowSpec::Inline {
            partition_by,
            order_by,
            ..
        } = w
        {
            for e in partition_by {
                min = min.min(self.expr(e));
            }
            for o in order_by {
                min = min.min(self.expr(&mut o.expr));
            }
        }
        min
    }

    fn bind(&self, c: &ColumnRef) -> usize {
        let top = self.stack.len().saturating_sub(1);
        match &c.table {
            Some(t) => {
                let name = t.lower();
                (0..self.stack.len())
                    .rev()
                    .find(|&i| self.stack[i].names.iter().any(|n| *n == name))
                    .unwrap_or(top)
            }
            None => (0..self.stack.len())
                .rev()
                .find(|&i| !self.stack[i].names.is_empty())
                .unwrap_or(top),
        }
    }

    fn expr(&mut self, e: &mut Expr) -> usize {
        match e {
            Expr::Literal(_) | Expr::Param(_) => NONE,
            Expr::Column(c) => {
                let level = self.bind(c);
                c.depth = self.stack.len().saturating_sub(1) - level;
                level
            }
            Expr::Unary { expr, .. }
            | Expr::Cast { expr, .. }
            | Expr::Collate { expr, .. }
            | Expr::IsNull { expr, .. } => self.expr(expr),
            Expr::Nested(expr) => self.expr(expr),
            Expr::Binary { left, right, .. } => self.expr(left).min(self.expr(right)),
            Expr::Pattern {
                expr,
                pattern,
                escape,
                ..
            } => {
                let mut min = self.expr(expr).min(self.expr(pattern));
                if let Some(esc) = escape {
                    min = min.min(self.expr(esc));
                }
                min
            }
            Expr::Between {
                expr, low, high, ..
            } => self.expr(expr).min(self.expr(low)).min(self.expr(high)),
            Expr::InList { expr, list, .. } => {
                let mut min = self.expr(expr);
                for item in list {
                    min = min.min(self.expr(item));
                }
                min
            }
            Expr::InSubquery { expr, subquery, .. } => self.expr(expr).min(self.subquery(subquery)),
            Expr::Exists { subquery } | Expr::Subquery(subquery) => self.subquery(subquery),
            Expr::Case {
                operand,
                whens,
                else_result,
            } => {
                let mut min = NONE;
                if let Some(o) = operand {
                    min = min.min(self.expr(o));
                }
                for (cond, result) in whens {
                    min = min.min(self.expr(cond)).min(self.expr(result));
                }
                if let Some(e) = else_result {
                    min = min.min(self.expr(e));
                }
                min
            }
            Expr::Function(call) => {
                let mut min = NONE;
                if let FunctionArgs::List(args) = &mut call.args {
                    for a in args {
                        min = min.min(self.expr(a));
                    }
                }
                for o in &mut call.order_by {
                    min = min.min(self.expr(&mut o.expr));
                }
                if let Some(f) = &mut call.filter {
                    min = min.min(self.expr(f));
                }
                if let Some(w) = &mut call.over {
                    min = min.min(self.window(w));
                }
                min
            }
            Expr::Tuple(items) => {
                let mut min = NONE;
                for item in items {
                    min = min.min(self.expr(item));
                }
                min
            }
        }
    }
}

fn first_select(body: &SetExpr) -> Option<&Select> {
    match body {
        SetExpr::Select(s) => Some(s),
        SetExpr::Values(_) => None,
        SetExpr::SetOp { left, .. } => first_select(left),
    }
}
