//! Four-level quality verdicts over ten criteria and their weighted
//! aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gateway::{bindings, FieldType, Gateway, GatewayError, Shape, TemplateName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityLevel {
    Excellent,
    Good,
    Average,
    Poor,
}

impl QualityLevel {
    pub const ALL: [QualityLevel; 4] = [QualityLevel::Excellent, QualityLevel::Good, QualityLevel::Average, QualityLevel::Poor];

    pub fn weight(self) -> f64 {
        match self {
            QualityLevel::Excellent => 1.0,
            QualityLevel::Good => 0.75,
            QualityLevel::Average => 0.5,
            QualityLevel::Poor => 0.25,
        }
    }
}

impl FromStr for QualityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "excellent" => Ok(QualityLevel::Excellent),
            "good" => Ok(QualityLevel::Good),
            "average" => Ok(QualityLevel::Average),
            "poor" => Ok(QualityLevel::Poor),
            other => Err(format!("unknown quality level '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "Real-world Relevance")]
    RealWorldRelevance,
    #[serde(rename = "Proper Grammar")]
    ProperGrammar,
    #[serde(rename = "Consistency with Database Schema")]
    SchemaConsistency,
    #[serde(rename = "Unambiguous Phrasing")]
    UnambiguousPhrasing,
    #[serde(rename = "SQL Correctness")]
    SqlCorrectness,
    #[serde(rename = "SQL Efficiency")]
    SqlEfficiency,
    #[serde(rename = "Result Alignment")]
    ResultAlignment,
    #[serde(rename = "Structural Alignment")]
    StructuralAlignment,
    #[serde(rename = "Efficiency of Solution")]
    SolutionEfficiency,
    #[serde(rename = "Answer Adherence")]
    AnswerAdherence,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::RealWorldRelevance,
        Criterion::ProperGrammar,
        Criterion::SchemaConsistency,
        Criterion::UnambiguousPhrasing,
        Criterion::SqlCorrectness,
        Criterion::SqlEfficiency,
        Criterion::ResultAlignment,
        Criterion::StructuralAlignment,
        Criterion::SolutionEfficiency,
        Criterion::AnswerAdherence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::RealWorldRelevance => "Real-world Relevance",
            Criterion::ProperGrammar => "Proper Grammar",
            Criterion::SchemaConsistency => "Consistency with Database Schema",
            Criterion::UnambiguousPhrasing => "Unambiguous Phrasing",
            Criterion::SqlCorrectness => "SQL Correctness",
            Criterion::SqlEfficiency => "SQL Efficiency",
            Criterion::ResultAlignment => "Result Alignment",
            Criterion::StructuralAlignment => "Structural Alignment",
            Criterion::SolutionEfficiency => "Efficiency of Solution",
            Criterion::AnswerAdherence => "Answer Adherence",
        }
    }

    /// One-line guidance shown to the judge.
    pub fn guidance(self) -> &'static str {
        match self {
            Criterion::RealWorldRelevance => "the question is something a real user of this database would ask",
            Criterion::ProperGrammar => "the question is grammatical and well punctuated",
            Criterion::SchemaConsistency => "the question and SQL only use what the schema contains",
            Criterion::UnambiguousPhrasing => "the question admits a single reading",
            Criterion::SqlCorrectness => "the SQL is valid and computes what the question asks",
            Criterion::SqlEfficiency => "the SQL avoids needless work",
            Criterion::ResultAlignment => "the SQL result is what the question expects",
            Criterion::StructuralAlignment => "the SQL structure mirrors the question's requirements",
            Criterion::SolutionEfficiency => "the overall solution is direct",
            Criterion::AnswerAdherence => "the answer sticks to what was asked",
        }
    }

    fn lookup(name: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityVerdict {
    pub criterion: Criterion,
    pub level: QualityLevel,
    pub explanation: String,
}

/// Weighted mean of level weights: (N_e + 0.75 N_g + 0.5 N_a + 0.25 N_p) / N.
pub fn aggregate_quality(levels: &[QualityLevel]) -> Result<f64, EvalError> {
    if levels.is_empty() {
        return Err(EvalError::EmptyGroup);
    }
    let mut counts = [0usize; 4];
    for l in levels {
        counts[*l as usize] += 1;
    }
    quality_from_counts(counts)
}

/// The same score from counts ordered Excellent, Good, Average, Poor.
pub fn quality_from_counts(counts: [usize; 4]) -> Result<f64, EvalError> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(EvalError::EmptyGroup);
    }
    let weighted: f64 = counts.iter().zip(QualityLevel::ALL).map(|(c, l)| *c as f64 * l.weight()).sum();
    Ok(weighted / n as f64)
}

fn criteria_text(only: &[Criterion]) -> String {
    only.iter().map(|c| format!("{}: {}", c.name(), c.guidance())).collect::<Vec<_>>().join("\n")
}

fn parse_verdicts(v: &serde_json::Value) -> BTreeMap<Criterion, QualityVerdict> {
    let mut out = BTreeMap::new();
    for item in v["verdicts"].as_array().into_iter().flatten() {
        let Some(c) = item["criterion"].as_str().and_then(Criterion::lookup) else {
            continue;
        };
        let Some(level) = item["level"].as_str().and_then(|s| s.parse().ok()) else {
            continue;
        };
        let explanation = item["explanation"].as_str().unwrap_or_default().trim().to_string();
        if explanation.is_empty() {
            continue;
        }
        out.entry(c).or_insert(QualityVerdict {
            criterion: c,
            level,
            explanation,
        });
    }
    out
}

/// One verdict per criterion for a question and SQL pair. Criteria
/// missing from the first answer are asked for once more.
pub fn quality_judge(id: &str, question: &str, sql: &str, schema: &str, gateway: &Gateway) -> Result<Vec<QualityVerdict>, EvalError> {
    let shape = Shape::object(&[("verdicts", FieldType::Array)]);
    let mut got: BTreeMap<Criterion, QualityVerdict> = BTreeMap::new();
    for attempt in 1..=2 {
        let missing: Vec<Criterion> = Criterion::ALL.into_iter().filter(|c| !got.contains_key(c)).collect();
        if missing.is_empty() {
            break;
        }
        let b = bindings([
            ("schema", schema.to_string()),
            ("question", question.to_string()),
            ("sql", sql.to_string()),
            ("criteria", criteria_text(&missing)),
        ]);
        match gateway.complete_structured(TemplateName::QualityJudge, &b, &format!("judge:{id}:{attempt}"), &shape) {
            Ok((v, _)) => {
                for (c, verdict) in parse_verdicts(&v) {
                    if missing.contains(&c) {
                        got.insert(c, verdict);
                    }
                }
            }
            Err(GatewayError::Extraction { source, .. }) => log::warn!("judge answer for {id} unreadable: {source}"),
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(c) = Criterion::ALL.into_iter().find(|c| !got.contains_key(c)) {
        return Err(EvalError::MissingVerdict {
            id: id.to_string(),
            criterion: c.name().to_string(),
        });
    }
    Ok(Criterion::ALL.iter().map(|c| got.remove(c).expect("checked above")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub records: usize,
    /// Score per criterion, in criterion order.
    pub scores: Vec<(Criterion, f64)>,
    pub overall: f64,
}

/// Per-criterion scores over the verdicts of many records.
pub fn quality_report(verdicts: &[Vec<QualityVerdict>]) -> Result<QualityReport, EvalError> {
    let mut by: BTreeMap<Criterion, Vec<QualityLevel>> = BTreeMap::new();
    for vs in verdicts {
        for v in vs {
            by.entry(v.criterion).or_default().push(v.level);
        }
    }
    let mut scores = Vec::new();
    for c in Criterion::ALL {
        let levels = by.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        scores.push((c, aggregate_quality(levels)?));
    }
    let overall = scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64;
    Ok(QualityReport {
        records: verdicts.len(),
        scores,
        overall,
    })
}
