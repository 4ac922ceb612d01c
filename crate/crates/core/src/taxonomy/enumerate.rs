//! Cartesian enumeration of valid label combinations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::categories::*;
use super::complexity::{complexity_of, ComplexityConfig};
use super::validity::{validate_with, RuleToggles};
use super::TaxonomyError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Combination {
    pub labels: TaxonomyLabels,
    pub complexity_level: ComplexityLevel,
    pub complexity_score: u32,
}

/// Subset of each dimension to enumerate over. An absent list means the
/// whole dimension; members keep their canonical order regardless of the
/// order given.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Restriction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_intents: Option<Vec<CoreIntent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement_types: Option<Vec<StatementType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntax_structures: Option<Vec<SyntaxStructure>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_actions: Option<Vec<KeyAction>>,
}

fn pick<T: Copy + PartialEq>(all: &[T], only: &Option<Vec<T>>) -> Vec<T> {
    match only {
        None => all.to_vec(),
        Some(keep) => all.iter().copied().filter(|x| keep.contains(x)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnumerationConfig {
    pub max_structures: usize,
    pub max_actions: usize,
    /// Upper bound on the number of candidates examined.
    pub ceiling: u64,
    #[serde(default)]
    pub restrict: Restriction,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            max_structures: 3,
            max_actions: 2,
            ceiling: 5_000_000,
            restrict: Restriction::default(),
        }
    }
}

/// All subsets of `items` with at most `cap` members, by size and then
/// lexicographically by position.
pub fn bounded_subsets<T: Copy>(items: &[T], cap: usize) -> Vec<Vec<T>> {
    fn extend<T: Copy>(items: &[T], start: usize, size: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            extend(items, i + 1, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 0..=cap.min(items.len()) {
        extend(items, 0, size, &mut Vec::new(), &mut out);
    }
    out
}

fn binomial_prefix(n: usize, cap: usize) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for k in 0..=cap.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - k) as u64) / (k as u64 + 1);
    }
    total
}

/// Number of candidates the enumeration would examine.
pub fn candidate_count(config: &EnumerationConfig) -> u64 {
    let r = &config.restrict;
    let intents = pick(CoreIntent::ALL, &r.core_intents).len() as u64;
    let stmts = pick(StatementType::ALL, &r.statement_types).len() as u64;
    let s = binomial_prefix(pick(SyntaxStructure::ALL, &r.syntax_structures).len(), config.max_structures);
    let a = binomial_prefix(pick(KeyAction::ALL, &r.key_actions).len(), config.max_actions);
    intents.saturating_mul(stmts).saturating_mul(s).saturating_mul(a)
}

/// Every valid combination in canonical order: intent, statement type,
/// structure subset, action subset.
pub fn enumerate_combinations(
    complexity: &ComplexityConfig,
    rules: &RuleToggles,
    config: &EnumerationConfig,
) -> Result<Vec<Combination>, TaxonomyError> {
    if config.max_structures < 1 || config.max_actions < 1 {
        return Err(TaxonomyError::InvalidConfig("subset caps must be at least 1".into()));
    }
    complexity.validate()?;
    let candidates = candidate_count(config);
    if candidates > config.ceiling {
        return Err(TaxonomyError::CombinatorialLimit {
            candidates,
            ceiling: config.ceiling,
        });
    }
    let r = &config.restrict;
    let intents = pick(CoreIntent::ALL, &r.core_intents);
    let stmts = pick(StatementType::ALL, &r.statement_types);
    let structure_sets = bounded_subsets(&pick(SyntaxStructure::ALL, &r.syntax_structures), config.max_structures);
    let action_sets = bounded_subsets(&pick(KeyAction::ALL, &r.key_actions), config.max_actions);
    let prefixes: Vec<(CoreIntent, StatementType)> =
        intents.iter().flat_map(|&i| stmts.iter().map(move |&s| (i, s))).collect();

    let chunks: Vec<Vec<Combination>> = prefixes
        .par_iter()
        .map(|&(intent, stmt)| {
            let mut out = Vec::new();
            for ss in &structure_sets {
                for ka in &action_sets {
                    let labels = TaxonomyLabels::new(intent, stmt, ss.iter().copied(), ka.iter().copied());
                    if !validate_with(&labels, rules).is_valid() {
                        continue;
                    }
                    if let Ok((score, level)) = complexity_of(&labels, complexity) {
                        out.push(Combination {
                            labels,
                            complexity_level: level,
                            complexity_score: score,
                        });
                    }
                }
            }
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_canonical() {
        let s = bounded_subsets(&[1, 2, 3], 2);
        assert_eq!(s, vec![vec![], vec![1], vec![2], vec![3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(binomial_prefix(3, 2), 7);
        assert_eq!(binomial_prefix(14, 3), 470);
        assert_eq!(binomial_prefix(9, 2), 46);
    }

    #[test]
    fn full_default_space_is_counted() {
        assert_eq!(candidate_count(&EnumerationConfig::default()), 14 * 5 * 470 * 46);
    }

    #[test]
    fn ceiling_is_explicit() {
        let cfg = EnumerationConfig {
            ceiling: 10,
            ..Default::default()
        };
        let err = enumerate_combinations(&ComplexityConfig::default(), &RuleToggles::default(), &cfg).unwrap_err();
        assert!(matches!(err, TaxonomyError::CombinatorialLimit { ceiling: 10, .. }));
    }
}
