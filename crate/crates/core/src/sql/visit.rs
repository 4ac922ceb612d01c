//! Read-only depth-first traversal over every node of a statement,
//! including CTE bodies, derived tables, subqueries and set-operation arms.

use super::ast::*;

#[allow(unused_variables)]
pub trait Visitor {
    fn query(&mut self, q: &Query) {}
    fn select(&mut self, s: &Select) {}
    fn set_op(&mut self, op: SetOperator, all: bool) {}
    fn join(&mut self, j: &Join) {}
    fn factor(&mut self, f: &TableFactor) {}
    fn expr(&mut self, e: &Expr) {}
    fn window(&mut self, w: &WindowSpec) {}
    fn with(&mut self, w: &With) {}
}

pub fn walk_tree<V: Visitor + ?Sized>(tree: &SqlTree, v: &mut V) {
    walk_statement(&tree.statement, v);
}

pub fn walk_statement<V: Visitor + ?Sized>(stmt: &Statement, v: &mut V) {
    match stmt {
        Statement::Select(q) => walk_query(q, v),
        Statement::Insert(i) => {
            walk_with(i.with.as_ref(), v);
            if let InsertSource::Query(q) = &i.source {
                walk_query(q, v);
            }
            for u in &i.upsert {
                opt_expr(u.target_where.as_ref(), v);
                for a in &u.assignments {
                    walk_expr(&a.value, v);
                }
                opt_expr(u.selection.as_ref(), v);
            }
            walk_items(&i.returning, v);
        }
        Statement::Update(u) => {
            walk_with(u.with.as_ref(), v);
            for a in &u.assignments {
                walk_expr(&a.value, v);
            }
            if let Some(from) = &u.from {
                walk_from(from, v);
            }
            opt_expr(u.selection.as_ref(), v);
            walk_items(&u.returning, v);
        }
        Statement::Delete(d) => {
            walk_with(d.with.as_ref(), v);
            opt_expr(d.selection.as_ref(), v);
            walk_items(&d.returning, v);
        }
        Statement::Alter(a) => {
            if let AlterAction::AddColumn(def) = &a.action {
                for c in &def.constraints {
                    match c {
                        ColumnConstraint::Default(e)
                        | ColumnConstraint::Check(e)
                        | ColumnConstraint::Generated { expr: e, .. } => walk_expr(e, v),
                        _ => {}
                    }
                }
            }
        }
        Statement::Other { .. } => {}
    }
}

fn walk_with<V: Visitor + ?Sized>(w: Option<&With>, v: &mut V) {
    if let Some(w) = w {
        v.with(w);
        for cte in &w.ctes {
            walk_query(&cte.query, v);
        }
    }
}

fn opt_expr<V: Visitor + ?Sized>(e: Option<&Expr>, v: &mut V) {
    if let Some(e) = e {
        walk_expr(e, v);
    }
}

fn walk_items<V: Visitor + ?Sized>(items: &[SelectItem], v: &mut V) {
    for item in items {
        if let SelectItem::Expr { expr, .. } = item {
            walk_expr(expr, v);
        }
    }
}

pub fn walk_query<V: Visitor + ?Sized>(q: &Query, v: &mut V) {
    v.query(q);
    walk_with(q.with.as_ref(), v);
    walk_set_expr(&q.body, v);
    for o in &q.order_by {
        walk_expr(&o.expr, v);
    }
    if let Some(l) = &q.limit {
        walk_expr(&l.count, v);
        opt_expr(l.offset.as_ref(), v);
    }
}

fn walk_set_expr<V: Visitor + ?Sized>(body: &SetExpr, v: &mut V) {
    match body {
        SetExpr::Select(s) => walk_select(s, v),
        SetExpr::Values(rows) => {
            for row in rows {
                for e in row {
                    walk_expr(e, v);
                }
            }
        }
        SetExpr::SetOp {
            op,
            all,
            left,
            right,
        } => {
            v.set_op(*op, *all);
            walk_set_expr(left, v);
            walk_set_expr(right, v);
        }
    }
}

fn walk_select<V: Visitor + ?Sized>(s: &Select, v: &mut V) {
    v.select(s);
    walk_items(&s.projection, v);
    if let Some(from) = &s.from {
        walk_from(from, v);
    }
    opt_expr(s.selection.as_ref(), v);
    for e in &s.group_by {
        walk_expr(e, v);
    }
    opt_expr(s.having.as_ref(), v);
    for w in &s.windows {
        walk_window(&w.spec, v);
    }
}

fn walk_from<V: Visitor + ?Sized>(from: &FromClause, v: &mut V) {
    walk_factor(&from.first, v);
    for j in &from.joins {
        v.join(j);
        walk_factor(&j.factor, v);
        if let JoinConstraint::On(e) = &j.constraint {
            walk_expr(e, v);
        }
    }
}

fn walk_factor<V: Visitor + ?Sized>(f: &TableFactor, v: &mut V) {
    v.factor(f);
    match f {
        TableFactor::Table { .. } => {}
        TableFactor::Derived { subquery, .. } => walk_query(&subquery.query, v),
        TableFactor::Function { args, .. } => {
            for a in args {
                walk_expr(a, v);
            }
        }
    }
}

fn walk_window<V: Visitor + ?Sized>(w: &WindowSpec, v: &mut V) {
    v.window(w);
    if let WindowSpec::Inline {
        partition_by,
        order_by,
        ..
    } = w
    {
        for e in partition_by {
            walk_expr(e, v);
        }
        for o in order_by {
            walk_expr(&o.expr, v);
        }
    }
}

pub fn walk_expr<V: Visitor + ?Sized>(e: &Expr, v: &mut V) {
    v.expr(e);
    match e {
        Expr::Literal(_) | Expr::Param(_) | Expr::Column(_) => {}
        Expr::Unary { expr, .. }
        | Expr::Cast { expr, .. }
        | Expr::Collate { expr, .. }
        | Expr::IsNull { expr, .. }
        | Expr::Nested(expr) => walk_expr(expr, v),
        Expr::Binary { left, right, .. } => {
            walk_expr(left, v);
            walk_expr(right, v);
        }
        Expr::Pattern {
            expr,
            pattern,
            escape,
            ..
        } => {
            walk_expr(expr, v);
            walk_expr(pattern, v);
            if let Some(esc) = escape {
                walk_expr(esc, v);
            }
        }
        Expr::Between {
            expr, low, high, ..
        } => {
            walk_expr(expr, v);
            walk_expr(low, v);
            walk_expr(high, v);
        }
        Expr::InList { expr, list, .. } => {
            walk_expr(expr, v);
            for item in list {
                walk_expr(item, v);
            }
        }
        Expr::InSubquery { expr, subquery, .. } => {
            walk_expr(expr, v);
            walk_query(&subquery.query, v);
        }
        Expr::Exists { subquery } | Expr::Subquery(subquery) => walk_query(&subquery.query, v),
        Expr::Case {
            operand,
            whens,
            else_result,
        } => {
            if let Some(o) = operand {
                walk_expr(o, v);
            }
            for (cond, result) in whens {
                walk_expr(cond, v);
                walk_expr(result, v);
            }
            if let Some(e) = else_result {
                walk_expr(e, v);
            }
        }
        Expr::Function(call) => {
            for a in call.args.exprs() {
                walk_expr(a, v);
            }
            for o in &call.order_by {
                walk_expr(&o.expr, v);
            }
            if let Some(f) = &call.filter {
                walk_expr(f, v);
            }
            if let Some(w) = &call.over {
                walk_window(w, v);
            }
        }
        Expr::Tuple(items) => {
            for item in items {
                walk_expr(item, v);
            }
        }
    }
}
