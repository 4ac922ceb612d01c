//! Function-name classification table.
//!
//! The table is a tab-separated text file: `name<TAB>class` per line, `#`
//! comments allowed. A name listed under several classes carries all of
//! them (e.g. `json_group_array` is both json and aggregate).

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionClass {
    Time,
    Json,
    String,
    Aggregate,
    Other,
}

impl std::str::FromStr for FunctionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "time" => Ok(FunctionClass::Time),
            "json" => Ok(FunctionClass::Json),
            "string" => Ok(FunctionClass::String),
            "aggregate" => Ok(FunctionClass::Aggregate),
            "other" => Ok(FunctionClass::Other),
            other => Err(format!("unknown function class '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionTable {
    classes: HashMap<String, BTreeSet<FunctionClass>>,
}

const DEFAULT_TSV: &str = include_str!("../../../../config/functions.tsv");

impl FunctionTable {
    /// The shipped table for the embedded-database dialect.
    pub fn builtin() -> &'static FunctionTable {
        static TABLE: OnceLock<FunctionTable> = OnceLock::new();
        TABLE.get_or_init(|| FunctionTable::parse(DEFAULT_TSV).expect("shipped function table parses"))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut classes: HashMap<String, BTreeSet<FunctionClass>> = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t').filter(|p| !p.is_empty());
            let (Some(name), Some(class), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("line {}: expected 'name<TAB>class'", lineno + 1));
            };
            let class: FunctionClass = class.parse().map_err(|e| format!("line {}: {e}", lineno + 1))?;
            classes.entry(name.trim().to_ascii_lowercase()).or_default().insert(class);
        }
        Ok(Self { classes })
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn is_known(&self, name: &str) -> bool {
        self.classes.contains_key(&name.to_ascii_lowercase())
    }

    pub fn has(&self, name: &str, class: FunctionClass) -> bool {
        self.classes
            .get(&name.to_ascii_lowercase())
            .is_some_and(|c| c.contains(&class))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_classes() {
        let t = FunctionTable::builtin();
        assert!(t.has("STRFTIME", FunctionClass::Time));
        assert!(t.has("json_extract", FunctionClass::Json));
        assert!(t.has("json_group_array", FunctionClass::Aggregate));
        assert!(t.has("upper", FunctionClass::String));
        assert!(t.has("count", FunctionClass::Aggregate));
        assert!(!t.is_known("my_udf"));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(FunctionTable::parse("foo\n").is_err());
        assert!(FunctionTable::parse("foo\tbar\n").is_err());
        assert_eq!(FunctionTable::parse("# c\nf\ttime\n").unwrap().len(), 1);
    }
}
