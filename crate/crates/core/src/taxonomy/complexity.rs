//! Complexity scores and levels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::categories::*;
use super::TaxonomyError;

/// Closed score interval; `max = None` is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub min: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<u32>,
}

impl LevelRange {
    pub fn contains(&self, score: u32) -> bool {
        score >= self.min && self.max.is_none_or(|m| score <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRanges {
    pub simple: LevelRange,
    pub medium: LevelRange,
    pub hard: LevelRange,
}

impl LevelRanges {
    pub fn get(&self, level: ComplexityLevel) -> LevelRange {
        match level {
            ComplexityLevel::Simple => self.simple,
            ComplexityLevel::Medium => self.medium,
            ComplexityLevel::Hard => self.hard,
        }
    }

    pub fn level_of(&self, score: u32) -> Option<ComplexityLevel> {
        ComplexityLevel::ALL.iter().copied().find(|l| self.get(*l).contains(score))
    }
}

/// Weights per category plus level ranges. Category display names are the
/// keys in the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityConfig {
    pub core_intent: BTreeMap<CoreIntent, u32>,
    pub statement_type: BTreeMap<StatementType, u32>,
    pub syntax_structure: BTreeMap<SyntaxStructure, u32>,
    pub key_action: BTreeMap<KeyAction, u32>,
    pub levels: LevelRanges,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        use CoreIntent as I;
        use KeyAction as K;
        use StatementType as T;
        use SyntaxStructure as S;
        let core_intent = CoreIntent::ALL
            .iter()
            .map(|&i| {
                let w = match i {
                    I::BasicQuery | I::ConditionFiltering | I::SortingAndPagination | I::BasicAggregation => 1,
                    I::TimeOperation
                    | I::FormatTransformation
                    | I::SetOperation
                    | I::DataChange
                    | I::StructureChange => 2,
                    I::DistributionAnalysis
                    | I::AdvancedStatistics
                    | I::TrendAnalysis
                    | I::BusinessCalculation
                    | I::BusinessRule => 3,
                };
                (i, w)
            })
            .collect();
        let statement_type = [(T::Select, 1), (T::Update, 2), (T::Alter, 3), (T::Delete, 2), (T::Insert, 2)]
            .into_iter()
            .collect();
        let syntax_structure = SyntaxStructure::ALL
            .iter()
            .map(|&s| {
                let w = match s {
                    S::Where | S::OrderBy | S::LimitOffset => 1,
                    S::GroupBy | S::Having | S::InnerJoin => 2,
                    S::CorrelatedSubquery => 4,
                    _ => 3,
                };
                (s, w)
            })
            .collect();
        let key_action = KeyAction::ALL
            .iter()
            .map(|&k| {
                let w = match k {
                    K::SpecificTime | K::WildcardFiltering | K::StringFunction => 1,
                    K::WindowFunction | K::JsonFunction => 3,
                    _ => 2,
                };
                (k, w)
            })
            .collect();
        Self {
            core_intent,
            statement_type,
            syntax_structure,
            key_action,
            levels: LevelRanges {
                simple: LevelRange { min: 1, max: Some(4) },
                medium: LevelRange { min: 5, max: Some(8) },
                hard: LevelRange { min: 9, max: None },
            },
        }
    }
}

impl ComplexityConfig {
    /// Checks weights are complete and ≥ 1 and level ranges are ordered
    /// and disjoint.
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        fn complete<K: Ord + Copy + std::fmt::Display>(
            all: &[K],
            map: &BTreeMap<K, u32>,
            errors: &mut Vec<String>,
        ) {
            for k in all {
                match map.get(k) {
                    None => errors.push(format!("missing weight for '{k}'")),
                    Some(0) => errors.push(format!("weight for '{k}' must be >= 1")),
                    Some(_) => {}
                }
            }
        }
        let mut errors = Vec::new();
        complete(CoreIntent::ALL, &self.core_intent, &mut errors);
        complete(StatementType::ALL, &self.statement_type, &mut errors);
        complete(SyntaxStructure::ALL, &self.syntax_structure, &mut errors);
        complete(KeyAction::ALL, &self.key_action, &mut errors);
        let ranges = [self.levels.simple, self.levels.medium, self.levels.hard];
        for (name, r) in ComplexityLevel::ALL.iter().zip(ranges) {
            if r.max.is_some_and(|m| m < r.min) {
                errors.push(format!("{name} range is empty"));
            }
        }
        for (i, pair) in ranges.windows(2).enumerate() {
            match pair[0].max {
                Some(m) if m < pair[1].min => {}
                _ => errors.push(format!(
                    "{} range must end before {} begins",
                    ComplexityLevel::ALL[i],
                    ComplexityLevel::ALL[i + 1]
                )),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(TaxonomyError::InvalidConfig(errors.join("; ")))
        }
    }

    pub fn score(&self, labels: &TaxonomyLabels) -> u32 {
        let w = |v: Option<&u32>| v.copied().unwrap_or(1);
        w(self.core_intent.get(&labels.core_intent))
            + w(self.statement_type.get(&labels.statement_type))
            + labels
                .syntax_structures
                .iter()
                .map(|s| w(self.syntax_structure.get(s)))
                .sum::<u32>()
            + labels.key_actions.iter().map(|k| w(self.key_action.get(k))).sum::<u32>()
    }
}

/// Additive score of `labels` and the level whose range contains it.
pub fn complexity_of(labels: &TaxonomyLabels, config: &ComplexityConfig) -> Result<(u32, ComplexityLevel), TaxonomyError> {
    let score = config.score(labels);
    config
        .levels
        .level_of(score)
        .map(|l| (score, l))
        .ok_or(TaxonomyError::ScoreOutOfRange { score })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ComplexityConfig::default().validate().unwrap();
    }

    #[test]
    fn examples() {
        let cfg = ComplexityConfig::default();
        let l = TaxonomyLabels::new(CoreIntent::BasicQuery, StatementType::Select, [], []);
        assert_eq!(complexity_of(&l, &cfg).unwrap(), (2, ComplexityLevel::Simple));
        let l = TaxonomyLabels::new(
            CoreIntent::AdvancedStatistics,
            StatementType::Select,
            [SyntaxStructure::CorrelatedSubquery, SyntaxStructure::GroupBy],
            [KeyAction::WindowFunction],
        );
        assert_eq!(complexity_of(&l, &cfg).unwrap(), (13, ComplexityLevel::Hard));
    }

    #[test]
    fn gaps_are_out_of_range() {
        let mut cfg = ComplexityConfig::default();
        cfg.levels.hard = LevelRange { min: 20, max: Some(30) };
        cfg.validate().unwrap();
        let l = TaxonomyLabels::new(
            CoreIntent::AdvancedStatistics,
            StatementType::Select,
            [SyntaxStructure::CorrelatedSubquery, SyntaxStructure::GroupBy],
            [KeyAction::WindowFunction],
        );
        assert_eq!(complexity_of(&l, &cfg), Err(TaxonomyError::ScoreOutOfRange { score: 13 }));
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let mut cfg = ComplexityConfig::default();
        cfg.levels.medium.min = 4;
        assert!(cfg.validate().is_err());
    }
}
