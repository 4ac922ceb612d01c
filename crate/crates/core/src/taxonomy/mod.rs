//! The four-dimension category system: labels, complexity, validity,
//! enumeration, intent classification and coverage.

mod categories;
mod complexity;
mod coverage;
mod enumerate;
mod intent;
mod validity;

pub use categories::*;
pub use complexity::{complexity_of, ComplexityConfig, LevelRange, LevelRanges};
pub use coverage::{coverage_report, CoverageReport, DimensionCoverage};
pub use enumerate::{bounded_subsets, candidate_count, enumerate_combinations, Combination, EnumerationConfig, Restriction};
pub use intent::{
    classify_core_intent, classify_pair, classify_pair_default, forced_intent, heuristic_intent, intent_keywords,
    normalize_question, triggered_groups, ClassifiedPair, IntentMode,
};
pub use validity::{validate_combination, validate_with, Rule, RuleToggles, ValidityReport, Violation};

use serde::{Deserialize, Serialize};

use crate::gateway::GatewayError;
use crate::sql::SqlError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("complexity score {score} lies outside every configured level range")]
    ScoreOutOfRange { score: u32 },
    #[error("enumeration would examine {candidates} candidates, above the ceiling of {ceiling}")]
    CombinatorialLimit { candidates: u64, ceiling: u64 },
    #[error("invalid taxonomy configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Complexity weights, rule toggles and enumeration settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomyConfig {
    pub complexity: ComplexityConfig,
    pub rules: RuleToggles,
    pub enumeration: EnumerationConfig,
}

impl TaxonomyConfig {
    pub fn enumerate(&self) -> Result<Vec<Combination>, TaxonomyError> {
        enumerate_combinations(&self.complexity, &self.rules, &self.enumeration)
    }

    pub fn complexity_of(&self, labels: &TaxonomyLabels) -> Result<(u32, ComplexityLevel), TaxonomyError> {
        complexity_of(labels, &self.complexity)
    }
}
