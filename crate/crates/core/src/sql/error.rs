use thiserror::Error;

/// Malformed SQL, located by byte offset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub fn new(offset: usize, expected: &str, found: &str) -> Self {
        Self {
            offset,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unsupported feature at byte {offset}: {feature}")]
    UnsupportedFeature { offset: usize, feature: String },
    #[error("unsupported statement: {verb}")]
    UnsupportedStatement { verb: String },
}

impl SqlError {
    pub fn unsupported(offset: usize, feature: impl Into<String>) -> Self {
        SqlError::UnsupportedFeature {
            offset,
            feature: feature.into(),
        }
    }
}
