//! Recognition of hardcoded temporal literals.
//!
//! Formats are written with the placeholders `YYYY`, `MM`, `DD`, `HH`,
//! `MI`/`MM` (minutes after a colon) and `SS`; every other character must
//! match literally. `MM` after `HH:` means minutes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemporalFormats(pub Vec<String>);

impl Default for TemporalFormats {
    fn default() -> Self {
        Self(
            ["YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS", "HH:MM:SS", "YYYY"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
    Lit(u8),
}

fn compile(format: &str) -> Vec<Field> {
    let b = format.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut seen_hour = false;
    while i < b.len() {
        let rest = &format[i..];
        if rest.starts_with("YYYY") {
            out.push(Field::Year);
            i += 4;
        } else if rest.starts_with("MM") {
            out.push(if seen_hour { Field::Minute } else { Field::Month });
            i += 2;
        } else if rest.starts_with("MI") {
            out.push(Field::Minute);
            i += 2;
        } else if rest.starts_with("DD") {
            out.push(Field::Day);
            i += 2;
        } else if rest.starts_with("HH") {
            out.push(Field::Hour);
            seen_hour = true;
            i += 2;
        } else if rest.starts_with("SS") {
            out.push(Field::Second);
            i += 2;
        } else {
            out.push(Field::Lit(b[i]));
            i += 1;
        }
    }
    out
}

fn matches_format(s: &str, fields: &[Field]) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    for f in fields {
        let width = match f {
            Field::Year => 4,
            Field::Lit(_) => 1,
            _ => 2,
        };
        if i + width > b.len() {
            return false;
        }
        let chunk = &b[i..i + width];
        match f {
            Field::Lit(c) => {
                if chunk[0] != *c {
                    return false;
                }
            }
            _ => {
                if !chunk.iter().all(u8::is_ascii_digit) {
                    return false;
                }
                let v: u32 = std::str::from_utf8(chunk).unwrap().parse().unwrap();
                let ok = match f {
                    Field::Year => (1000..=2999).contains(&v),
                    Field::Month => (1..=12).contains(&v),
                    Field::Day => (1..=31).contains(&v),
                    Field::Hour => v <= 23,
                    Field::Minute | Field::Second => v <= 59,
                    Field::Lit(_) => unreachable!(),
                };
                if !ok {
                    return false;
                }
            }
        }
        i += width;
    }
    i == b.len()
}

impl TemporalFormats {
    /// Whether a string literal's content is a hardcoded temporal value.
    pub fn matches(&self, literal: &str) -> bool {
        let s = literal.trim();
        self.0.iter().any(|f| matches_format(s, &compile(f)))
    }
}
