//! Tokenizer for the embedded-database SQL dialect.

use std::fmt;

use super::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word: keyword or unquoted identifier.
    Word(String),
    /// `"x"`, `[x]` or `` `x` `` identifier.
    QuotedIdent(String),
    /// `'...'` with `''` unescaped.
    String(String),
    Number(String),
    Blob(String),
    /// `?`, `?NNN`, `:name`, `@name`, `$name`.
    Param(String),
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the first character.
    pub offset: usize,
}

impl Token {
    pub fn is_word(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub fn is_op(&self, op: &str) -> bool {
        matches!(&self.kind, TokenKind::Op(o) if *o == op)
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "{w}"),
            TokenKind::QuotedIdent(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            TokenKind::String(s) => write!(f, "'{}'", s.replace('\'', "''")),
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::Blob(b) => write!(f, "X'{b}'"),
            TokenKind::Param(p) => write!(f, "{p}"),
            TokenKind::Op(o) => write!(f, "{o}"),
        }
    }
}

// Longest match first.
const OPERATORS: &[&str] = &[
    "->>", "||", "->", "==", "!=", "<>", "<=", ">=", "<<", ">>", "+", "-", "*", "/", "%", "=",
    "<", ">", "&", "|", "~", "(", ")", ",", ".", ";",
];

/// Splits `sql` into tokens, dropping whitespace and comments.
pub fn tokenize(sql: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let end = sql[i + 2..]
                .find("*/")
                .ok_or_else(|| ParseError::new(i, "end of block comment", "end of input"))?;
            i += end + 4;
            continue;
        }
        let start = i;
        let kind = match c {
            b'\'' => {
                let (s, next) = read_quoted(sql, i, b'\'')?;
                i = next;
                TokenKind::String(s)
            }
            b'"' | b'`' => {
                let (s, next) = read_quoted(sql, i, c)?;
                i = next;
                TokenKind::QuotedIdent(s)
            }
            b'[' => {
                let end = sql[i..]
                    .find(']')
                    .ok_or_else(|| ParseError::new(i, "']'", "end of input"))?;
                let s = sql[i + 1..i + end].to_string();
                i += end + 1;
                TokenKind::QuotedIdent(s)
            }
            b'x' | b'X' if bytes.get(i + 1) == Some(&b'\'') => {
                let (s, next) = read_quoted(sql, i + 1, b'\'')?;
                if s.len() % 2 != 0 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
                    return Err(ParseError::new(i, "hexadecimal blob literal", &s));
                }
                i = next;
                TokenKind::Blob(s)
            }
            b'0'..=b'9' => {
                let end = scan_number(bytes, i);
                let text = sql[i..end].to_string();
                i = end;
                TokenKind::Number(text)
            }
            b'.' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let end = scan_number(bytes, i);
                let text = sql[i..end].to_string();
                i = end;
                TokenKind::Number(text)
            }
            b'?' => {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                TokenKind::Param(sql[start..i].to_string())
            }
            b':' | b'@' | b'$' => {
                i += 1;
                while i < bytes.len() && is_ident_char(bytes[i]) {
                    i += 1;
                }
                if i == start + 1 {
                    return Err(ParseError::new(start, "parameter name", &sql[start..i]));
                }
                TokenKind::Param(sql[start..i].to_string())
            }
            c if is_ident_start(c) => {
                while i < bytes.len() && is_ident_char(bytes[i]) {
                    i += 1;
                }
                TokenKind::Word(sql[start..i].to_string())
            }
            _ => {
                let rest = &sql[i..];
                match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                    Some(op) => {
                        i += op.len();
                        TokenKind::Op(op)
                    }
                    None => {
                        let ch = rest.chars().next().unwrap_or('?');
                        return Err(ParseError::new(i, "a token", &ch.to_string()));
                    }
                }
            }
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    Ok(tokens)
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_' || c >= 0x80
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$' || c >= 0x80
}

fn read_quoted(sql: &str, start: usize, quote: u8) -> Result<(String, usize), ParseError> {
    let bytes = sql.as_bytes();
    let mut out = String::new();
    let mut i = start + 1;
    let mut seg = i;
    loop {
        match bytes.get(i) {
            None => {
                return Err(ParseError::new(
                    start,
                    &format!("closing {}", quote as char),
                    "end of input",
                ))
            }
            Some(&b) if b == quote => {
                out.push_str(&sql[seg..i]);
                if bytes.get(i + 1) == Some(&quote) {
                    out.push(quote as char);
                    i += 2;
                    seg = i;
                } else {
                    return Ok((out, i + 1));
                }
            }
            Some(_) => i += 1,
        }
    }
}

fn scan_number(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X')) {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
        return i;
    }
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(sql: &str) -> Vec<TokenKind> {
        tokenize(sql).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn counts_count_star() {
        assert_eq!(tokenize("SELECT COUNT(*) FROM t").unwrap().len(), 7);
    }

    #[test]
    fn strings_and_idents() {
        assert_eq!(
            kinds("'it''s' \"a b\" [c] `d`"),
            vec![
                TokenKind::String("it's".into()),
                TokenKind::QuotedIdent("a b".into()),
                TokenKind::QuotedIdent("c".into()),
                TokenKind::QuotedIdent("d".into()),
            ]
        );
    }

    #[test]
    fn operators_longest_match() {
        assert_eq!(
            kinds("a->>'$.x' || b <> c"),
            vec![
                TokenKind::Word("a".into()),
                TokenKind::Op("->>"),
                TokenKind::String("$.x".into()),
                TokenKind::Op("||"),
                TokenKind::Word("b".into()),
                TokenKind::Op("<>"),
                TokenKind::Word("c".into()),
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds("1 2.5 .5 1e3 0x1F"),
            ["1", "2.5", ".5", "1e3", "0x1F"]
                .iter()
                .map(|s| TokenKind::Number(s.to_string()))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(tokenize("SELECT -- hi\n 1 /* x */").unwrap().len(), 2);
    }

    #[test]
    fn unterminated_string_reports_offset() {
        let err = tokenize("SELECT 'abc").unwrap_err();
        assert_eq!(err.offset, 7);
    }
}
