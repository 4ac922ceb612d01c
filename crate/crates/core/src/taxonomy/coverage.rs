//! Per-dimension coverage ratios and category histograms.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::categories::*;
use super::TaxonomyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCoverage {
    pub dimension: String,
    pub cardinality: usize,
    pub covered: usize,
    pub ratio: f64,
    /// Every category of the dimension in canonical order, zeros included.
    pub counts: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total: usize,
    pub core_intent: DimensionCoverage,
    pub statement_type: DimensionCoverage,
    pub syntax_structure: DimensionCoverage,
    pub key_action: DimensionCoverage,
}

fn dimension<T: Copy + Eq>(name: &str, all: &[T], label: fn(T) -> &'static str, hits: &[usize]) -> DimensionCoverage {
    let covered = hits.iter().filter(|n| **n > 0).count();
    DimensionCoverage {
        dimension: name.to_string(),
        cardinality: all.len(),
        covered,
        ratio: covered as f64 / all.len() as f64,
        counts: all.iter().zip(hits).map(|(c, n)| (label(*c).to_string(), *n)).collect(),
    }
}

/// Counts each present category once per record.
pub fn coverage_report<'a>(records: impl IntoIterator<Item = &'a TaxonomyLabels>) -> Result<CoverageReport, TaxonomyError> {
    let mut intents = vec![0; CoreIntent::ALL.len()];
    let mut stmts = vec![0; StatementType::ALL.len()];
    let mut structures = vec![0; SyntaxStructure::ALL.len()];
    let mut actions = vec![0; KeyAction::ALL.len()];
    let mut total = 0;
    for r in records {
        total += 1;
        intents[CoreIntent::ALL.iter().position(|c| *c == r.core_intent).unwrap()] += 1;
        stmts[StatementType::ALL.iter().position(|c| *c == r.statement_type).unwrap()] += 1;
        for s in &r.syntax_structures {
            structures[SyntaxStructure::ALL.iter().position(|c| c == s).unwrap()] += 1;
        }
        for a in &r.key_actions {
            actions[KeyAction::ALL.iter().position(|c| c == a).unwrap()] += 1;
        }
    }
    if total == 0 {
        return Err(TaxonomyError::EmptyCorpus);
    }
    Ok(CoverageReport {
        total,
        core_intent: dimension(CoreIntent::DIMENSION, CoreIntent::ALL, CoreIntent::name, &intents),
        statement_type: dimension(StatementType::DIMENSION, StatementType::ALL, StatementType::name, &stmts),
        syntax_structure: dimension(
            SyntaxStructure::DIMENSION,
            SyntaxStructure::ALL,
            SyntaxStructure::name,
            &structures,
        ),
        key_action: dimension(KeyAction::DIMENSION, KeyAction::ALL, KeyAction::name, &actions),
    })
}

impl CoverageReport {
    pub fn dimensions(&self) -> [&DimensionCoverage; 4] {
        [&self.core_intent, &self.statement_type, &self.syntax_structure, &self.key_action]
    }

    /// Coverage ratios in one row, followed by per-category counts.
    pub fn to_text_table(&self, dataset: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>12} {:>15} {:>17} {:>11}",
            "Dataset", "Samples", "Core Intent", "Statement Type", "Syntax Structure", "Key Action"
        );
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>12.2} {:>15.2} {:>17.2} {:>11.2}",
            dataset,
            self.total,
            self.core_intent.ratio,
            self.statement_type.ratio,
            self.syntax_structure.ratio,
            self.key_action.ratio
        );
        for d in self.dimensions() {
            let _ = writeln!(out, "\n{} ({}/{} covered)", d.dimension, d.covered, d.cardinality);
            for (name, n) in &d.counts {
                let _ = writeln!(out, "  {name:<26} {n:>7}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus() {
        assert_eq!(coverage_report(&[]), Err(TaxonomyError::EmptyCorpus));
    }

    #[test]
    fn select_only_corpus() {
        let l = TaxonomyLabels::new(CoreIntent::BasicQuery, StatementType::Select, [SyntaxStructure::Where], []);
        let r = coverage_report(&[l.clone(), l]).unwrap();
        assert_eq!(r.statement_type.ratio, 0.2);
        assert_eq!(r.syntax_structure.counts[0], ("Where".to_string(), 2));
        assert!(r.to_text_table("toy").contains("0.20"));
    }
}
