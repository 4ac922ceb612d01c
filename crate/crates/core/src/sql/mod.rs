//! SQL parsing and taxonomy feature extraction for the embedded-database
//! (SQLite) dialect.

pub mod ast;
mod error;
mod features;
mod functions;
mod lexer;
mod parser;
mod render;
mod scope;
mod temporal;
pub mod visit;

pub use ast::SqlTree;
pub use error::{ParseError, SqlError};
pub use features::{
    chained_steps, detect_key_actions, detect_key_actions_with_warnings, detect_statement_type, detect_syntax_structures,
    summarize, summarize_tree, AnalysisConfig, AnalysisWarning, SqlFeatureSummary,
};
pub use functions::{FunctionClass, FunctionTable};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::is_reserved;
pub use scope::resolve;
pub use temporal::TemporalFormats;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    #[default]
    Sqlite,
}

/// Parses one statement and resolves column scopes.
pub fn parse_sql(text: &str, dialect: Dialect) -> Result<SqlTree, SqlError> {
    match dialect {
        Dialect::Sqlite => {
            let mut tree = parser::parse_statement(text)?;
            scope::resolve(&mut tree);
            Ok(tree)
        }
    }
}
