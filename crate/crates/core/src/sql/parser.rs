//! Recursive-descent parser for the SQLite dialect subset the toolkit
//! analyses: `SELECT` (with CTEs, compounds, windows), `INSERT`, `UPDATE`,
//! `DELETE` and `ALTER TABLE`. Other top-level verbs are recognised and
//! kept verbatim so callers can report them.

use super::ast::*;
use super::error::{ParseError, SqlError};
use super::lexer::{tokenize, Token, TokenKind};

/// Words that never start an implicit alias or a bare identifier.
const RESERVED: &[&str] = &[
    "ADD", "ALL", "ALTER", "AND", "AS", "BETWEEN", "BY", "CASE", "CAST", "CHECK", "COLLATE",
    "CONSTRAINT", "CREATE", "CROSS", "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP",
    "DEFAULT", "DELETE", "DISTINCT", "DO", "DROP", "ELSE", "END", "ESCAPE", "EXCEPT", "EXISTS",
    "FILTER", "FOREIGN", "FROM", "FULL", "GLOB", "GROUP", "HAVING", "IN", "INDEXED", "INNER",
    "INSERT", "INTERSECT", "INTO", "IS", "ISNULL", "JOIN", "LEFT", "LIKE", "LIMIT", "MATCH",
    "NATURAL", "NOT", "NOTHING", "NOTNULL", "NULL", "OFFSET", "ON", "OR", "ORDER", "OUTER",
    "OVER", "PRIMARY", "REFERENCES", "REGEXP", "RETURNING", "RIGHT", "SELECT", "SET", "TABLE",
    "THEN", "TO", "UNION", "UNIQUE", "UPDATE", "USING", "VALUES", "WHEN", "WHERE", "WINDOW",
    "WITH",
];

const OTHER_VERBS: &[&str] = &[
    "CREATE", "DROP", "PRAGMA", "BEGIN", "COMMIT", "END", "ROLLBACK", "SAVEPOINT", "RELEASE",
    "VACUUM", "ANALYZE", "ATTACH", "DETACH", "REINDEX", "EXPLAIN",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

/// Parses exactly one statement (an optional trailing `;` is allowed).
pub fn parse_statement(sql: &str) -> Result<SqlTree, SqlError> {
    let tokens = tokenize(sql)?;
    let token_count = tokens.len();
    let mut p = Parser {
        sql,
        tokens,
        pos: 0,
    };
    if p.tokens.is_empty() {
        return Err(ParseError::new(0, "a statement", "end of input").into());
    }
    let statement = p.parse_statement()?;
    if p.eat_op(";") && !p.at_end() {
        return Err(SqlError::unsupported(p.offset(), "multiple statements"));
    }
    if !p.at_end() {
        return Err(p.error("end of statement").into());
    }
    Ok(SqlTree {
        statement,
        token_count,
    })
}

struct Parser<'a> {
    sql: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SqlError>;

impl<'a> Parser<'a> {
    // ---- token helpers -------------------------------------------------

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.sql.len(), |t| t.offset)
    }

    fn error(&self, expected: &str) -> ParseError {
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), |t| t.kind.to_string());
        ParseError::new(self.offset(), expected, &found)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn check_word(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(kw))
    }

    fn check_word_at(&self, n: usize, kw: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is_word(kw))
    }

    fn check_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.check_word(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.check_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, kw: &str) -> PResult<()> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.error(kw).into())
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(&format!("'{op}'")).into())
        }
    }

    fn parse_ident(&mut self) -> PResult<Ident> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Word(w)) if !is_reserved(&w) => {
                self.pos += 1;
                Ok(Ident {
                    value: w,
                    quoted: false,
                })
            }
            Some(TokenKind::QuotedIdent(s)) => {
                self.pos += 1;
                Ok(Ident {
                    value: s,
                    quoted: true,
                })
            }
            _ => Err(self.error("an identifier").into()),
        }
    }

    /// Identifier in a position where any word (even a keyword) is accepted,
    /// such as after `AS` or a dot.
    fn parse_any_ident(&mut self) -> PResult<Ident> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Word(w)) => {
                self.pos += 1;
                Ok(Ident {
                    value: w,
                    quoted: false,
                })
            }
            Some(TokenKind::QuotedIdent(s)) | Some(TokenKind::String(s)) => {
                self.pos += 1;
                Ok(Ident {
                    value: s,
                    quoted: true,
                })
            }
            _ => Err(self.error("an identifier").into()),
        }
    }

    fn parse_optional_alias(&mut self) -> PResult<Option<Ident>> {
        if self.eat_word("AS") {
            return self.parse_any_ident().map(Some);
        }
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w)) if !is_reserved(w) => self.parse_ident().map(Some),
            Some(TokenKind::QuotedIdent(_)) => self.parse_ident().map(Some),
            _ => Ok(None),
        }
    }

    fn parse_ident_list(&mut self) -> PResult<Vec<Ident>> {
        self.expect_op("(")?;
        let mut out = vec![self.parse_ident()?];
        while self.eat_op(",") {
            out.push(self.parse_ident()?);
        }
        self.expect_op(")")?;
        Ok(out)
    }

    // ---- statements ----------------------------------------------------

    fn parse_statement(&mut self) -> PResult<Statement> {
        let start = self.offset();
        if self.check_word("WITH") {
            let with = self.parse_with()?;
            return self.parse_after_with(Some(with));
        }
        if self.check_word("SELECT") || self.check_word("VALUES") {
            return Ok(Statement::Select(self.parse_query_after_with(None)?));
        }
        if self.check_word("INSERT") || self.check_word("REPLACE") {
            return self.parse_insert(None).map(Statement::Insert);
        }
        if self.check_word("UPDATE") {
            return self.parse_update(None).map(Statement::Update);
        }
        if self.check_word("DELETE") {
            return self.parse_delete(None).map(Statement::Delete);
        }
        if self.check_word("ALTER") {
            return self.parse_alter().map(Statement::Alter);
        }
        if let Some(verb) = OTHER_VERBS.iter().find(|v| self.check_word(v)) {
            let mut verb = verb.to_string();
            if matches!(verb.as_str(), "CREATE" | "DROP") {
                let mut n = 1;
                while let Some(TokenKind::Word(w)) = self.peek_at(n).map(|t| &t.kind) {
                    let up = w.to_ascii_uppercase();
                    let modifier = matches!(up.as_str(), "TEMP" | "TEMPORARY" | "UNIQUE" | "VIRTUAL");
                    verb.push(' ');
                    verb.push_str(&up);
                    if !modifier {
                        break;
                    }
                    n += 1;
                }
            }
            let mut end = self.sql.len();
            while let Some(t) = self.peek() {
                if t.is_op(";") {
                    end = t.offset;
                    break;
                }
                self.pos += 1;
            }
            let text = self.sql[start..end].trim().to_string();
            return Ok(Statement::Other { verb, text });
        }
        Err(self.error("a statement keyword").into())
    }

    fn parse_after_with(&mut self, with: Option<With>) -> PResult<Statement> {
        if self.check_word("SELECT") || self.check_word("VALUES") {
            Ok(Statement::Select(self.parse_query_after_with(with)?))
        } else if self.check_word("INSERT") || self.check_word("REPLACE") {
            self.parse_insert(with).map(Statement::Insert)
        } else if self.check_word("UPDATE") {
            self.parse_update(with).map(Statement::Update)
        } else if self.check_word("DELETE") {
            self.parse_delete(with).map(Statement::Delete)
        } else {
            Err(self.error("SELECT, INSERT, UPDATE or DELETE after WITH").into())
        }
    }

    fn parse_with(&mut self) -> PResult<With> {
        self.expect_word("WITH")?;
        let recursive = self.eat_word("RECURSIVE");
        let mut ctes: Vec<Cte> = Vec::new();
        loop {
            let name_offset = self.offset();
            let name = self.parse_ident()?;
            if ctes.iter().any(|c| c.name.value.eq_ignore_ascii_case(&name.value)) {
                return Err(ParseError::new(
                    name_offset,
                    "a unique common table expression name",
                    &name.value,
                )
                .into());
            }
            let columns = if self.check_op("(") {
                self.parse_ident_list()?
            } else {
                Vec::new()
            };
            self.expect_word("AS")?;
            if self.check_word("NOT") || self.check_word("MATERIALIZED") {
                return Err(SqlError::unsupported(self.offset(), "MATERIALIZED hint"));
            }
            self.expect_op("(")?;
            let query = self.parse_query()?;
            self.expect_op(")")?;
            ctes.push(Cte {
                name,
                columns,
                query: Box::new(query),
            });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(With { recursive, ctes })
    }

    fn parse_query(&mut self) -> PResult<Query> {
        let with = if self.check_word("WITH") {
            Some(self.parse_with()?)
        } else {
            None
        };
        self.parse_query_after_with(with)
    }

    fn parse_query_after_with(&mut self, with: Option<With>) -> PResult<Query> {
        let mut body = self.parse_select_core()?;
        loop {
            let op = if self.check_word("UNION") {
                SetOperator::Union
            } else if self.check_word("INTERSECT") {
                SetOperator::Intersect
            } else if self.check_word("EXCEPT") {
                SetOperator::Except
            } else {
                break;
            };
            self.pos += 1;
            let all = op == SetOperator::Union && self.eat_word("ALL");
            let right = self.parse_select_core()?;
            body = SetExpr::SetOp {
                op,
                all,
                left: Box::new(body),
                right: Box::new(right),
            };
        }
        let order_by = if self.check_word("ORDER") {
            self.parse_order_by()?
        } else {
            Vec::new()
        };
        let limit = if self.eat_word("LIMIT") {
            let first = self.parse_expr()?;
            if self.eat_word("OFFSET") {
                Some(Limit {
                    count: first,
                    offset: Some(self.parse_expr()?),
                    comma_form: false,
                })
            } else if self.eat_op(",") {
                Some(Limit {
                    count: self.parse_expr()?,
                    offset: Some(first),
                    comma_form: true,
                })
            } else {
                Some(Limit {
                    count: first,
                    offset: None,
                    comma_form: false,
                })
            }
        } else {
            None
        };
        Ok(Query {
            with,
            body,
            order_by,
            limit,
        })
    }

    fn parse_select_core(&mut self) -> PResult<SetExpr> {
        if self.eat_word("VALUES") {
            let mut rows = Vec::new();
            loop {
                self.expect_op("(")?;
                rows.push(self.parse_expr_list()?);
                self.expect_op(")")?;
                if !self.eat_op(",") {
                    break;
                }
            }
            return Ok(SetExpr::Values(rows));
        }
        if self.check_op("(") && (self.check_word_at(1, "SELECT") || self.check_word_at(1, "VALUES")) {
            return Err(SqlError::unsupported(self.offset(), "parenthesized compound member"));
        }
        self.expect_word("SELECT")?;
        let distinct = if self.eat_word("DISTINCT") {
            true
        } else {
            self.eat_word("ALL");
            false
        };
        let mut projection = vec![self.parse_select_item()?];
        while self.eat_op(",") {
            projection.push(self.parse_select_item()?);
        }
        let from = if self.eat_word("FROM") {
            Some(self.parse_from()?)
        } else {
            None
        };
        let selection = if self.eat_word("WHERE") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_word("GROUP") {
            self.expect_word("BY")?;
            group_by = self.parse_expr_list()?;
        }
        let having = if self.eat_word("HAVING") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut windows = Vec::new();
        if self.eat_word("WINDOW") {
            loop {
                let name = self.parse_ident()?;
                self.expect_word("AS")?;
                let spec = self.parse_window_body()?;
                windows.push(NamedWindow { name, spec });
                if !self.eat_op(",") {
                    break;
                }
            }
        }
        Ok(SetExpr::Select(Box::new(Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
            windows,
        })))
    }

    fn parse_select_item(&mut self) -> PResult<SelectItem> {
        if self.eat_op("*") {
            return Ok(SelectItem::Wildcard);
        }
        let is_qualified_star = matches!(
            self.peek().map(|t| &t.kind),
            Some(TokenKind::Word(_)) | Some(TokenKind::QuotedIdent(_))
        ) && self.peek_at(1).is_some_and(|t| t.is_op("."))
            && self.peek_at(2).is_some_and(|t| t.is_op("*"));
        if is_qualified_star {
            let name = self.parse_any_ident()?;
            self.pos += 2;
            return Ok(SelectItem::QualifiedWildcard(name));
        }
        let expr = self.parse_expr()?;
        let alias = self.parse_optional_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_returning(&mut self) -> PResult<Vec<SelectItem>> {
        if !self.eat_word("RETURNING") {
            return Ok(Vec::new());
        }
        let mut items = vec![self.parse_select_item()?];
        while self.eat_op(",") {
            items.push(self.parse_select_item()?);
        }
        Ok(items)
    }

    fn parse_from(&mut self) -> PResult<FromClause> {
        let first = self.parse_table_factor()?;
        let mut joins = Vec::new();
        loop {
            if self.eat_op(",") {
                let factor = self.parse_table_factor()?;
                joins.push(Join {
                    natural: false,
                    op: JoinOperator::Comma,
                    explicit_keyword: false,
                    factor,
                    constraint: JoinConstraint::None,
                });
                continue;
            }
            let natural = self.eat_word("NATURAL");
            let (op, explicit_keyword) = if self.eat_word("LEFT") {
                (JoinOperator::Left, self.eat_word("OUTER"))
            } else if self.eat_word("RIGHT") {
                (JoinOperator::Right, self.eat_word("OUTER"))
            } else if self.eat_word("FULL") {
                (JoinOperator::Full, self.eat_word("OUTER"))
            } else if self.eat_word("INNER") {
                (JoinOperator::Inner, true)
            } else if self.eat_word("CROSS") {
                (JoinOperator::Cross, true)
            } else if self.check_word("JOIN") {
                (JoinOperator::Inner, false)
            } else if natural {
                return Err(self.error("JOIN").into());
            } else {
                break;
            };
            self.expect_word("JOIN")?;
            let factor = self.parse_table_factor()?;
            let constraint = if self.eat_word("ON") {
                JoinConstraint::On(self.parse_expr()?)
            } else if self.eat_word("USING") {
                JoinConstraint::Using(self.parse_ident_list()?)
            } else {
                JoinConstraint::None
            };
            joins.push(Join {
                natural,
                op,
                explicit_keyword,
                factor,
                constraint,
            });
        }
        Ok(FromClause { first, joins })
    }

    fn parse_table_factor(&mut self) -> PResult<TableFactor> {
        if self.check_op("(") {
            if self.check_word_at(1, "SELECT") || self.check_word_at(1, "WITH") || self.check_word_at(1, "VALUES") {
                self.pos += 1;
                let query = self.parse_query()?;
                self.expect_op(")")?;
                let alias = self.parse_optional_alias()?;
                return Ok(TableFactor::Derived {
                    subquery: Subquery::new(query),
                    alias,
                });
            }
            return Err(SqlError::unsupported(self.offset(), "parenthesized join"));
        }
        let first = self.parse_ident()?;
        let (schema, name) = if self.eat_op(".") {
            (Some(first), self.parse_any_ident()?)
        } else {
            (None, first)
        };
        if self.eat_op("(") {
            let args = if self.check_op(")") {
                Vec::new()
            } else {
                self.parse_expr_list()?
            };
            self.expect_op(")")?;
            let alias = self.parse_optional_alias()?;
            return Ok(TableFactor::Function { name, args, alias });
        }
        let alias = self.parse_optional_alias()?;
        if self.check_word("INDEXED") || (self.check_word("NOT") && self.check_word_at(1, "INDEXED")) {
            return Err(SqlError::unsupported(self.offset(), "index hint"));
        }
        Ok(TableFactor::Table {
            schema,
            name,
            alias,
        })
    }

    fn parse_order_by(&mut self) -> PResult<Vec<OrderItem>> {
        self.expect_word("ORDER")?;
        self.expect_word("BY")?;
        let mut items = Vec::new();
        loop {
            let expr = self.parse_expr()?;
            let desc = if self.eat_word("ASC") {
                Some(false)
            } else if self.eat_word("DESC") {
                Some(true)
            } else {
                None
            };
            let nulls_first = if self.eat_word("NULLS") {
                if self.eat_word("FIRST") {
                    Some(true)
                } else {
                    self.expect_word("LAST")?;
                    Some(false)
                }
            } else {
                None
            };
            items.push(OrderItem {
                expr,
                desc,
                nulls_first,
            });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(items)
    }

    fn parse_conflict_action(&mut self) -> PResult<Option<ConflictAction>> {
        if !self.eat_word("OR") {
            return Ok(None);
        }
        let action = if self.eat_word("ROLLBACK") {
            ConflictAction::Rollback
        } else if self.eat_word("ABORT") {
            ConflictAction::Abort
        } else if self.eat_word("REPLACE") {
            ConflictAction::Replace
        } else if self.eat_word("FAIL") {
            ConflictAction::Fail
        } else if self.eat_word("IGNORE") {
            ConflictAction::Ignore
        } else {
            return Err(self.error("ROLLBACK, ABORT, REPLACE, FAIL or IGNORE").into());
        };
        Ok(Some(action))
    }

    fn parse_insert(&mut self, with: Option<With>) -> PResult<Insert> {
        let (replace, or) = if self.eat_word("REPLACE") {
            (true, None)
        } else {
            self.expect_word("INSERT")?;
            (false, self.parse_conflict_action()?)
        };
        self.expect_word("INTO")?;
        let table = self.parse_ident()?;
        if self.check_op(".") {
            return Err(SqlError::unsupported(self.offset(), "schema-qualified target"));
        }
        let alias = if self.eat_word("AS") {
            Some(self.parse_ident()?)
        } else {
            None
        };
        let columns = if self.check_op("(") {
            self.parse_ident_list()?
        } else {
            Vec::new()
        };
        let source = if self.eat_word("DEFAULT") {
            self.expect_word("VALUES")?;
            InsertSource::DefaultValues
        } else if self.check_word("VALUES") || self.check_word("SELECT") || self.check_word("WITH") {
            InsertSource::Query(Box::new(self.parse_query()?))
        } else {
            return Err(self.error("VALUES, SELECT or DEFAULT VALUES").into());
        };
        let mut upsert = Vec::new();
        while self.check_word("ON") && self.check_word_at(1, "CONFLICT") {
            self.pos += 2;
            let mut target = Vec::new();
            let mut target_where = None;
            if self.check_op("(") {
                target = self.parse_ident_list()?;
                if self.eat_word("WHERE") {
                    target_where = Some(self.parse_expr()?);
                }
            }
            self.expect_word("DO")?;
            if self.eat_word("NOTHING") {
                upsert.push(Upsert {
                    target,
                    target_where,
                    assignments: Vec::new(),
                    do_nothing: true,
                    selection: None,
                });
            } else {
                self.expect_word("UPDATE")?;
                self.expect_word("SET")?;
                let assignments = self.parse_assignments()?;
                let selection = if self.eat_word("WHERE") {
                    Some(self.parse_expr()?)
                } else {
                    None
                };
                upsert.push(Upsert {
                    target,
                    target_where,
                    assignments,
                    do_nothing: false,
                    selection,
                });
            }
        }
        let returning = self.parse_returning()?;
        Ok(Insert {
            with,
            replace,
            or,
            table,
            alias,
            columns,
            source,
            upsert,
            returning,
        })
    }

    fn parse_assignments(&mut self) -> PResult<Vec<Assignment>> {
        let mut out = Vec::new();
        loop {
            let columns = if self.check_op("(") {
                self.parse_ident_list()?
            } else {
                vec![self.parse_ident()?]
            };
            self.expect_op("=")?;
            let value = self.parse_expr()?;
            out.push(Assignment { columns, value });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(out)
    }

    fn parse_update(&mut self, with: Option<With>) -> PResult<Update> {
        self.expect_word("UPDATE")?;
        let or = self.parse_conflict_action()?;
        let table = self.parse_ident()?;
        if self.check_op(".") {
            return Err(SqlError::unsupported(self.offset(), "schema-qualified target"));
        }
        let alias = if self.eat_word("AS") {
            Some(self.parse_ident()?)
        } else {
            None
        };
        if self.check_word("INDEXED") || self.check_word("NOT") {
            return Err(SqlError::unsupported(self.offset(), "index hint"));
        }
        self.expect_word("SET")?;
        let assignments = self.parse_assignments()?;
        let from = if self.eat_word("FROM") {
            Some(self.parse_from()?)
        } else {
            None
        };
        let selection = if self.eat_word("WHERE") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let returning = self.parse_returning()?;
        if self.check_word("ORDER") || self.check_word("LIMIT") {
            return Err(SqlError::unsupported(self.offset(), "UPDATE ... ORDER BY/LIMIT"));
        }
        Ok(Update {
            with,
            or,
            table,
            alias,
            assignments,
            from,
            selection,
            returning,
        })
    }

    fn parse_delete(&mut self, with: Option<With>) -> PResult<Delete> {
        self.expect_word("DELETE")?;
        self.expect_word("FROM")?;
        let table = self.parse_ident()?;
        if self.check_op(".") {
            return Err(SqlError::unsupported(self.offset(), "schema-qualified target"));
        }
        let alias = if self.eat_word("AS") {
            Some(self.parse_ident()?)
        } else {
            None
        };
        let selection = if self.eat_word("WHERE") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let returning = self.parse_returning()?;
        if self.check_word("ORDER") || self.check_word("LIMIT") {
            return Err(SqlError::unsupported(self.offset(), "DELETE ... ORDER BY/LIMIT"));
        }
        Ok(Delete {
            with,
            table,
            alias,
            selection,
            returning,
        })
    }

    fn parse_alter(&mut self) -> PResult<AlterTable> {
        self.expect_word("ALTER")?;
        self.expect_word("TABLE")?;
        let table = self.parse_ident()?;
        if self.check_op(".") {
            return Err(SqlError::unsupported(self.offset(), "schema-qualified target"));
        }
        let action = if self.eat_word("RENAME") {
            if self.eat_word("TO") {
                AlterAction::RenameTable(self.parse_ident()?)
            } else {
                self.eat_word("COLUMN");
                let from = self.parse_ident()?;
                self.expect_word("TO")?;
                let to = self.parse_ident()?;
                AlterAction::RenameColumn { from, to }
            }
        } else if self.eat_word("ADD") {
            self.eat_word("COLUMN");
            AlterAction::AddColumn(self.parse_column_def()?)
        } else if self.eat_word("DROP") {
            self.eat_word("COLUMN");
            AlterAction::DropColumn(self.parse_ident()?)
        } else {
            return Err(self.error("RENAME, ADD or DROP").into());
        };
        Ok(AlterTable { table, action })
    }

    fn parse_column_def(&mut self) -> PResult<ColumnDef> {
        let name = self.parse_ident()?;
        let mut type_words = Vec::new();
        while let Some(TokenKind::Word(w)) = self.peek().map(|t| &t.kind) {
            if is_reserved(w) || w.eq_ignore_ascii_case("GENERATED") {
                break;
            }
            type_words.push(w.to_ascii_uppercase());
            self.pos += 1;
        }
        let mut type_name = if type_words.is_empty() {
            None
        } else {
            Some(type_words.join(" "))
        };
        if type_name.is_some() && self.eat_op("(") {
            let mut args = vec![self.parse_signed_number()?];
            if self.eat_op(",") {
                args.push(self.parse_signed_number()?);
            }
            self.expect_op(")")?;
            if let Some(t) = type_name.as_mut() {
                t.push_str(&format!("({})", args.join(", ")));
            }
        }
        let mut constraints = Vec::new();
        loop {
            if self.eat_word("CONSTRAINT") {
                self.parse_ident()?;
            }
            if self.eat_word("PRIMARY") {
                self.expect_word("KEY")?;
                let desc = if self.eat_word("ASC") {
                    Some(false)
                } else if self.eat_word("DESC") {
                    Some(true)
                } else {
                    None
                };
                self.reject_conflict_clause()?;
                let autoincrement = self.eat_word("AUTOINCREMENT");
                constraints.push(ColumnConstraint::PrimaryKey {
                    desc,
                    autoincrement,
                });
            } else if self.check_word("NOT") && self.check_word_at(1, "NULL") {
                self.pos += 2;
                self.reject_conflict_clause()?;
                constraints.push(ColumnConstraint::NotNull);
            } else if self.eat_word("NULL") {
                constraints.push(ColumnConstraint::Null);
            } else if self.eat_word("UNIQUE") {
                self.reject_conflict_clause()?;
                constraints.push(ColumnConstraint::Unique);
            } else if self.eat_word("CHECK") {
                self.expect_op("(")?;
                let e = self.parse_expr()?;
                self.expect_op(")")?;
                constraints.push(ColumnConstraint::Check(e));
            } else if self.eat_word("DEFAULT") {
                let e = if self.eat_op("(") {
                    let e = self.parse_expr()?;
                    self.expect_op(")")?;
                    Expr::Nested(Box::new(e))
                } else if self.check_op("-") || self.check_op("+") {
                    let op = if self.eat_op("-") {
                        UnaryOp::Neg
                    } else {
                        self.pos += 1;
                        UnaryOp::Plus
                    };
                    Expr::Unary {
                        op,
                        expr: Box::new(self.parse_primary()?),
                    }
                } else {
                    self.parse_primary()?
                };
                constraints.push(ColumnConstraint::Default(e));
            } else if self.eat_word("COLLATE") {
                constraints.push(ColumnConstraint::Collate(self.parse_ident()?));
            } else if self.eat_word("REFERENCES") {
                let table = self.parse_ident()?;
                let columns = if self.check_op("(") {
                    self.parse_ident_list()?
                } else {
                    Vec::new()
                };
                if self.check_word("ON") || self.check_word("MATCH") || self.check_word("DEFERRABLE") {
                    return Err(SqlError::unsupported(self.offset(), "foreign-key actions"));
                }
                constraints.push(ColumnConstraint::References { table, columns });
            } else if self.check_word("GENERATED") || self.check_word("AS") {
                if self.eat_word("GENERATED") {
                    self.expect_word("ALWAYS")?;
                }
                self.expect_word("AS")?;
                self.expect_op("(")?;
                let expr = self.parse_expr()?;
                self.expect_op(")")?;
                let stored = if self.eat_word("STORED") {
                    true
                } else {
                    self.eat_word("VIRTUAL");
                    false
                };
                constraints.push(ColumnConstraint::Generated { expr, stored });
            } else {
                break;
            }
        }
        Ok(ColumnDef {
            name,
            type_name,
            constraints,
        })
    }

    fn reject_conflict_clause(&mut self) -> PResult<()> {
        if self.check_word("ON") && self.check_word_at(1, "CONFLICT") {
            return Err(SqlError::unsupported(self.offset(), "constraint conflict clause"));
        }
        Ok(())
    }

    fn parse_signed_number(&mut self) -> PResult<String> {
        let mut s = String::new();
        if self.eat_op("-") {
            s.push('-');
        } else if self.eat_op("+") {
            s.push('+');
        }
        match self.advance().map(|t| t.kind) {
            Some(TokenKind::Number(n)) => {
                s.push_str(&n);
                Ok(s)
            }
            _ => {
                self.pos -= 1;
                Err(self.error("a number").into())
            }
        }
    }

    // ---- expressions ---------------------------------------------------

    fn parse_expr_list(&mut self) -> PResult<Vec<Expr>> {
        let mut out = vec![self.parse_expr()?];
        while self.eat_op(",") {
            out.push(self.parse_expr()?);
        }
        Ok(out)
    }

    pub fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_bp(0)
    }

    /// Pratt loop over SQLite's precedence levels. `min` is the lowest
    /// level an infix or postfix operator may have to be consumed here.
    fn parse_bp(&mut self, min: u8) -> PResult<Expr> {
        let mut left = self.parse_prefix()?;
        loop {
            if let Some((level, op)) = self.infix_op() {
                if level < min {
                    break;
                }
                self.pos += op_width(op);
                let right = self.parse_bp(level + 1)?;
                left = binary(op, left, right);
                continue;
            }
            if self.check_word("COLLATE") {
                if COLLATE_LEVEL < min {
                    break;
                }
                self.pos += 1;
                let collation = self.parse_any_ident()?;
                left = Expr::Collate {
                    expr: Box::new(left),
                    collation,
                };
                continue;
            }
            if EQUALITY_LEVEL < min {
                break;
            }
            if self.eat_word("ISNULL") {
                left = Expr::IsNull {
                    negated: false,
                    postfix: true,
                    expr: Box::new(left),
                };
                continue;
            }
            if self.eat_word("NOTNULL") {
                left = Expr::IsNull {
                    negated: true,
                    postfix: true,
                    expr: Box::new(left),
                };
                continue;
            }
            let negated = self.check_word("NOT");
            let n = usize::from(negated);
            if negated && self.check_word_at(1, "NULL") {
                self.pos += 2;
                left = Expr::IsNull {
                    negated: true,
                    postfix: false,
                    expr: Box::new(left),
                };
                continue;
            }
            if self.check_word_at(n, "IN") {
                self.pos += n + 1;
                left = self.parse_in_rhs(left, negated)?;
                continue;
            }
            if let Some(op) = self.pattern_op(n) {
                self.pos += n + 1;
                let pattern = self.parse_bp(EQUALITY_LEVEL + 1)?;
                let escape = if self.eat_word("ESCAPE") {
                    Some(Box::new(self.parse_bp(EQUALITY_LEVEL + 1)?))
                } else {
                    None
                };
                left = Expr::Pattern {
                    op,
                    negated,
                    expr: Box::new(left),
                    pattern: Box::new(pattern),
                    escape,
                };
                continue;
            }
            if self.check_word_at(n, "BETWEEN") {
                self.pos += n + 1;
                let low = self.parse_bp(EQUALITY_LEVEL + 1)?;
                self.expect_word("AND")?;
                let high = self.parse_bp(EQUALITY_LEVEL + 1)?;
                left = Expr::Between {
                    negated,
                    expr: Box::new(left),
                    low: Box::new(low),
                    high: Box::new(high),
                };
                continue;
            }
            break;
        }
        Ok(left)
    }

    fn parse_prefix(&mut self) -> PResult<Expr> {
        if self.eat_word("NOT") {
            let e = self.parse_bp(NOT_LEVEL)?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(e),
            });
        }
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Op("-")) => Some(UnaryOp::Neg),
            Some(TokenKind::Op("+")) => Some(UnaryOp::Plus),
            Some(TokenKind::Op("~")) => Some(UnaryOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let e = self.parse_bp(UNARY_LEVEL)?;
            return Ok(Expr::Unary {
                op,
                expr: Box::new(e),
            });
        }
        self.parse_primary()
    }

    /// Binary operator at the cursor with its precedence level.
    fn infix_op(&self) -> Option<(u8, BinaryOp)> {
        let t = self.peek()?;
        let op = match &t.kind {
            TokenKind::Word(w) => match w.to_ascii_uppercase().as_str() {
                "OR" => BinaryOp::Or,
                "AND" => BinaryOp::And,
                "IS" => {
                    let not = self.check_word_at(1, "NOT");
                    let n = 1 + usize::from(not);
                    let distinct = self.check_word_at(n, "DISTINCT");
                    if distinct && !self.check_word_at(n + 1, "FROM") {
                        return None;
                    }
                    match (not, distinct) {
                        (false, false) => BinaryOp::Is,
                        (true, false) => BinaryOp::IsNot,
                        (false, true) => BinaryOp::IsDistinctFrom,
                        (true, true) => BinaryOp::IsNotDistinctFrom,
                    }
                }
                _ => return None,
            },
            TokenKind::Op(o) => match *o {
                "=" => BinaryOp::Eq,
                "==" => BinaryOp::EqEq,
                "!=" => BinaryOp::NotEq,
                "<>" => BinaryOp::LtGt,
                "<" => BinaryOp::Lt,
                "<=" => BinaryOp::LtEq,
                ">" => BinaryOp::Gt,
                ">=" => BinaryOp::GtEq,
                "&" => BinaryOp::BitAnd,
                "|" => BinaryOp::BitOr,
                "<<" => BinaryOp::ShiftLeft,
                ">>" => BinaryOp::ShiftRight,
                "+" => BinaryOp::Plus,
                "-" => BinaryOp::Minus,
                "*" => BinaryOp::Multiply,
                "/" => BinaryOp::Divide,
                "%" => BinaryOp::Modulo,
                "||" => BinaryOp::Concat,
                "->" => BinaryOp::JsonArrow,
                "->>" => BinaryOp::JsonLongArrow,
                _ => return None,
            },
            _ => return None,
        };
        Some((precedence(op), op))
    }

    fn pattern_op(&self, n: usize) -> Option<PatternOp> {
        let t = self.peek_at(n)?;
        if t.is_word("LIKE") {
            Some(PatternOp::Like)
        } else if t.is_word("GLOB") {
            Some(PatternOp::Glob)
        } else if t.is_word("REGEXP") {
            Some(PatternOp::Regexp)
        } else if t.is_word("MATCH") {
            Some(PatternOp::Match)
        } else {
            None
        }
    }

    fn parse_in_rhs(&mut self, left: Expr, negated: bool) -> PResult<Expr> {
        if !self.check_op("(") {
            return Err(SqlError::unsupported(self.offset(), "IN table-name"));
        }
        self.pos += 1;
        if self.check_word("SELECT") || self.check_word("WITH") || self.check_word("VALUES") {
            let q = self.parse_query()?;
            self.expect_op(")")?;
            return Ok(Expr::InSubquery {
                negated,
                expr: Box::new(left),
                subquery: Subquery::new(q),
            });
        }
        let list = if self.check_op(")") {
            Vec::new()
        } else {
            self.parse_expr_list()?
        };
        self.expect_op(")")?;
        Ok(Expr::InList {
            negated,
            expr: Box::new(left),
            list,
        })
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("an expression").into());
        };
        match tok.kind {
            TokenKind::Number(n) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Number(n)))
            }
            TokenKind::String(s) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::Blob(b) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Blob(b)))
            }
            TokenKind::Param(p) => {
                self.pos += 1;
                Ok(Expr::Param(p))
            }
            TokenKind::Op("(") => {
                self.pos += 1;
                if self.check_word("SELECT") || self.check_word("WITH") || self.check_word("VALUES") {
                    let q = self.parse_query()?;
                    self.expect_op(")")?;
                    return Ok(Expr::Subquery(Subquery::new(q)));
                }
                let mut list = self.parse_expr_list()?;
                self.expect_op(")")?;
                if list.len() == 1 {
                    Ok(Expr::Nested(Box::new(list.remove(0))))
                } else {
                    Ok(Expr::Tuple(list))
                }
            }
            TokenKind::QuotedIdent(_) => self.parse_name_expr(),
            TokenKind::Word(w) => {
                let up = w.to_ascii_uppercase();
                match up.as_str() {
                    "NULL" => {
                        self.pos += 1;
                        Ok(Expr::Literal(Literal::Null))
                    }
                    "TRUE" | "FALSE" => {
                        self.pos += 1;
                        Ok(Expr::Literal(Literal::Bool(up == "TRUE")))
                    }
                    "CURRENT_DATE" | "CURRENT_TIME" | "CURRENT_TIMESTAMP" => {
                        self.pos += 1;
                        Ok(Expr::Function(FunctionCall {
                            name: Ident::new(up),
                            distinct: false,
                            args: FunctionArgs::Empty,
                            order_by: Vec::new(),
                            filter: None,
                            over: None,
                            bare: true,
                        }))
                    }
                    "CASE" => self.parse_case(),
                    "CAST" => {
                        self.pos += 1;
                        self.expect_op("(")?;
                        let e = self.parse_expr()?;
                        self.expect_word("AS")?;
                        let mut words = Vec::new();
                        while let Some(TokenKind::Word(w)) = self.peek().map(|t| &t.kind) {
                            words.push(w.to_ascii_uppercase());
                            self.pos += 1;
                        }
                        if words.is_empty() {
                            return Err(self.error("a type name").into());
                        }
                        let mut type_name = words.join(" ");
                        if self.eat_op("(") {
                            let mut args = vec![self.parse_signed_number()?];
                            if self.eat_op(",") {
                                args.push(self.parse_signed_number()?);
                            }
                            self.expect_op(")")?;
                            type_name.push_str(&format!("({})", args.join(", ")));
                        }
                        self.expect_op(")")?;
                        Ok(Expr::Cast {
                            expr: Box::new(e),
                            type_name,
                        })
                    }
                    "EXISTS" => {
                        self.pos += 1;
                        self.expect_op("(")?;
                        let q = self.parse_query()?;
                        self.expect_op(")")?;
                        Ok(Expr::Exists {
                            subquery: Subquery::new(q),
                        })
                    }
                    "RAISE" => Err(SqlError::unsupported(tok.offset, "RAISE")),
                    _ if is_reserved(&up) && !self.peek_at(1).is_some_and(|t| t.is_op("(")) => {
                        Err(self.error("an expression").into())
                    }
                    _ => self.parse_name_expr(),
                }
            }
            _ => Err(self.error("an expression").into()),
        }
    }

    fn parse_case(&mut self) -> PResult<Expr> {
        self.expect_word("CASE")?;
        let operand = if self.check_word("WHEN") {
            None
        } else {
            Some(Box::new(self.parse_expr()?))
        };
        let mut whens = Vec::new();
        while self.eat_word("WHEN") {
            let cond = self.parse_expr()?;
            self.expect_word("THEN")?;
            let result = self.parse_expr()?;
            whens.push((cond, result));
        }
        if whens.is_empty() {
            return Err(self.error("WHEN").into());
        }
        let else_result = if self.eat_word("ELSE") {
            Some(Box::new(self.parse_expr()?))
        } else {
            None
        };
        self.expect_word("END")?;
        Ok(Expr::Case {
            operand,
            whens,
            else_result,
        })
    }

    /// Column reference or function call starting at an identifier.
    fn parse_name_expr(&mut self) -> PResult<Expr> {
        let first = self.parse_any_ident()?;
        if self.check_op("(") {
            return self.parse_function(first);
        }
        let mut parts = vec![first];
        while self.check_op(".") {
            self.pos += 1;
            parts.push(self.parse_any_ident()?);
        }
        let column = parts.pop().expect("at least one part");
        let table = parts.pop();
        let schema = parts.pop();
        if !parts.is_empty() {
            return Err(self.error("a column reference with at most three parts").into());
        }
        Ok(Expr::Column(ColumnRef {
            schema,
            table,
            column,
            depth: 0,
        }))
    }

    fn parse_function(&mut self, name: Ident) -> PResult<Expr> {
        self.expect_op("(")?;
        let mut distinct = false;
        let mut order_by = Vec::new();
        let args = if self.eat_op(")") {
            FunctionArgs::Empty
        } else if self.check_op("*") && self.peek_at(1).is_some_and(|t| t.is_op(")")) {
            self.pos += 2;
            FunctionArgs::Star
        } else {
            distinct = self.eat_word("DISTINCT");
            let list = self.parse_expr_list()?;
            if self.check_word("ORDER") {
                order_by = self.parse_order_by()?;
            }
            self.expect_op(")")?;
            FunctionArgs::List(list)
        };
        let filter = if self.eat_word("FILTER") {
            self.expect_op("(")?;
            self.expect_word("WHERE")?;
            let e = self.parse_expr()?;
            self.expect_op(")")?;
            Some(Box::new(e))
        } else {
            None
        };
        let over = if self.eat_word("OVER") {
            if self.check_op("(") {
                Some(self.parse_window_body()?)
            } else {
                Some(WindowSpec::Named(self.parse_ident()?))
            }
        } else {
            None
        };
        Ok(Expr::Function(FunctionCall {
            name,
            distinct,
            args,
            order_by,
            filter,
            over,
            bare: false,
        }))
    }

    fn parse_window_body(&mut self) -> PResult<WindowSpec> {
        self.expect_op("(")?;
        let base = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w))
                if !["PARTITION", "ORDER", "ROWS", "RANGE", "GROUPS"]
                    .iter()
                    .any(|k| k.eq_ignore_ascii_case(w)) =>
            {
                Some(self.parse_ident()?)
            }
            _ => None,
        };
        let mut partition_by = Vec::new();
        if self.eat_word("PARTITION") {
            self.expect_word("BY")?;
            partition_by = self.parse_expr_list()?;
        }
        let order_by = if self.check_word("ORDER") {
            self.parse_order_by()?
        } else {
            Vec::new()
        };
        let frame = if self.check_word("ROWS") || self.check_word("RANGE") || self.check_word("GROUPS") {
            let mut parts = Vec::new();
            let mut depth = 0usize;
            loop {
                match self.peek() {
                    None => return Err(self.error("')'").into()),
                    Some(t) if t.is_op(")") && depth == 0 => break,
                    Some(t) => {
                        if t.is_op("(") {
                            depth += 1;
                        } else if t.is_op(")") {
                            depth -= 1;
                        }
                        parts.push(match &t.kind {
                            TokenKind::Word(w) => w.to_ascii_uppercase(),
                            other => other.to_string(),
                        });
                        self.pos += 1;
                    }
                }
            }
            Some(parts.join(" "))
        } else {
            None
        };
        self.expect_op(")")?;
        Ok(WindowSpec::Inline {
            base,
            partition_by,
            order_by,
            frame,
        })
    }
}

const OR_LEVEL: u8 = 1;
const AND_LEVEL: u8 = 2;
const NOT_LEVEL: u8 = 3;
const EQUALITY_LEVEL: u8 = 4;
const COMPARISON_LEVEL: u8 = 5;
const BITWISE_LEVEL: u8 = 6;
const ADDITIVE_LEVEL: u8 = 7;
const MULTIPLICATIVE_LEVEL: u8 = 8;
const CONCAT_LEVEL: u8 = 9;
const COLLATE_LEVEL: u8 = 10;
const UNARY_LEVEL: u8 = 11;

fn precedence(op: BinaryOp) -> u8 {
    use BinaryOp::*;
    match op {
        Or => OR_LEVEL,
        And => AND_LEVEL,
        Eq | EqEq | NotEq | LtGt | Is | IsNot | IsDistinctFrom | IsNotDistinctFrom => EQUALITY_LEVEL,
        Lt | LtEq | Gt | GtEq => COMPARISON_LEVEL,
        BitAnd | BitOr | ShiftLeft | ShiftRight => BITWISE_LEVEL,
        Plus | Minus => ADDITIVE_LEVEL,
        Multiply | Divide | Modulo => MULTIPLICATIVE_LEVEL,
        Concat | JsonArrow | JsonLongArrow => CONCAT_LEVEL,
    }
}

/// Tokens spanned by an infix operator.
fn op_width(op: BinaryOp) -> usize {
    match op {
        BinaryOp::IsNot => 2,
        BinaryOp::IsDistinctFrom => 3,
        BinaryOp::IsNotDistinctFrom => 4,
        _ => 1,
    }
}

fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
    Expr::Binary {
        op,
        left: Box::new(left),
        right: Box::new(right),
    }
}
