//! Prompt templates loaded from `<dir>/<name>.txt`.
//!
//! Placeholders are written `{name}`; `{{` and `}}` produce literal braces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    DatabaseGeneration,
    DatabaseEnhancement,
    QuestionGeneration,
    KnowledgeGeneration,
    SqlGeneration,
    SeedModification,
    SeedRepair,
    IntentClassification,
    SemanticValidation,
    QualityJudge,
}

impl TemplateName {
    pub const ALL: [TemplateName; 10] = [
        TemplateName::DatabaseGeneration,
        TemplateName::DatabaseEnhancement,
        TemplateName::QuestionGeneration,
        TemplateName::KnowledgeGeneration,
        TemplateName::SqlGeneration,
        TemplateName::SeedModification,
        TemplateName::SeedRepair,
        TemplateName::IntentClassification,
        TemplateName::SemanticValidation,
        TemplateName::QualityJudge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::DatabaseGeneration => "database_generation",
            TemplateName::DatabaseEnhancement => "database_enhancement",
            TemplateName::QuestionGeneration => "question_generation",
            TemplateName::KnowledgeGeneration => "knowledge_generation",
            TemplateName::SqlGeneration => "sql_generation",
            TemplateName::SeedModification => "seed_modification",
            TemplateName::SeedRepair => "seed_repair",
            TemplateName::IntentClassification => "intent_classification",
            TemplateName::SemanticValidation => "semantic_validation",
            TemplateName::QualityJudge => "quality_judge",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GatewayError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
    pieces: Vec<Piece>,
    placeholders: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn parse(name: TemplateName, body: &str) -> Result<Self, GatewayError> {
        let bad = |msg: String| GatewayError::TemplateSyntax {
            template: name.to_string(),
            message: msg,
        };
        let mut pieces = Vec::new();
        let mut placeholders = BTreeSet::new();
        let mut text = String::new();
        let mut chars = body.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            match c {
                '{' if chars.peek().map(|p| p.1) == Some('{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek().map(|p| p.1) == Some('}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut slot = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '}')) => break,
                            Some((_, ch)) if ch.is_ascii_alphanumeric() || ch == '_' => slot.push(ch),
                            Some((j, ch)) => return Err(bad(format!("invalid character {ch:?} in placeholder at byte {j}"))),
                            None => return Err(bad(format!("unterminated placeholder at byte {i}"))),
                        }
                    }
                    if slot.is_empty() {
                        return Err(bad(format!("empty placeholder at byte {i}")));
                    }
                    if !text.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut text)));
                    }
                    placeholders.insert(slot.clone());
                    pieces.push(Piece::Slot(slot));
                }
                '}' => return Err(bad(format!("unmatched '}}' at byte {i}"))),
                _ => text.push(c),
            }
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Ok(Self {
            name,
            body: body.to_string(),
            pieces,
            placeholders,
        })
    }

    /// Every placeholder the body declares; all are required.
    pub fn placeholders(&self) -> &BTreeSet<String> {
        &self.placeholders
    }

    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        if let Some(k) = bindings.keys().find(|k| !self.placeholders.contains(*k)) {
            return Err(GatewayError::UnknownPlaceholder {
                template: self.name.to_string(),
                name: k.clone(),
            });
        }
        if let Some(p) = self.placeholders.iter().find(|p| !bindings.contains_key(*p)) {
            return Err(GatewayError::MissingPlaceholder {
                template: self.name.to_string(),
                name: p.clone(),
            });
        }
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => out.push_str(&bindings[s]),
            }
        }
        Ok(out)
    }
}

/// The ten templates, loaded verbatim from a directory.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateName, PromptTemplate>,
}

impl TemplateSet {
    pub fn load(dir: &Path) -> Result<Self, GatewayError> {
        let mut templates = BTreeMap::new();
        for name in TemplateName::ALL {
            let path = dir.join(format!("{name}.txt"));
            let body = std::fs::read_to_string(&path).map_err(|e| GatewayError::TemplateLoad {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            templates.insert(name, PromptTemplate::parse(name, &body)?);
        }
        Ok(Self { templates })
    }

    pub fn from_templates(list: impl IntoIterator<Item = PromptTemplate>) -> Self {
        Self {
            templates: list.into_iter().map(|t| (t.name, t)).collect(),
        }
    }

    pub fn get(&self, name: TemplateName) -> Result<&PromptTemplate, GatewayError> {
        self.templates
            .get(&name)
            .ok_or_else(|| GatewayError::UnknownTemplate(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn renders_and_escapes() {
        let t = PromptTemplate::parse(TemplateName::SqlGeneration, "Schema: {schema}\nReturn {{\"sql\": ...}}").unwrap();
        let out = t.render(&bind(&[("schema", "t(a)")])).unwrap();
        assert_eq!(out, "Schema: t(a)\nReturn {\"sql\": ...}");
    }

    #[test]
    fn missing_and_unknown() {
        let t = PromptTemplate::parse(TemplateName::SqlGeneration, "{schema} {question}").unwrap();
        assert_eq!(
            t.render(&bind(&[("schema", "x")])),
            Err(GatewayError::MissingPlaceholder {
                template: "sql_generation".into(),
                name: "question".into()
            })
        );
        assert!(matches!(
            t.render(&bind(&[("schema", "x"), ("question", "q"), ("extra", "")])),
            Err(GatewayError::UnknownPlaceholder { name, .. }) if name == "extra"
        ));
    }

    #[test]
    fn syntax_errors() {
        assert!(PromptTemplate::parse(TemplateName::SqlGeneration, "{open").is_err());
        assert!(PromptTemplate::parse(TemplateName::SqlGeneration, "a } b").is_err());
        assert!(PromptTemplate::parse(TemplateName::SqlGeneration, "{a b}").is_err());
    }
}
