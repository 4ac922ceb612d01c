//! Exact-match coverage and Jaccard blueprint retrieval.

use std::collections::{BTreeMap, BTreeSet};

use super::LabeledPair;
use crate::taxonomy::Combination;

/// |a ∩ b| / |a ∪ b|, with two empty sets counting as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Combinations split by whether some corpus pair carries exactly their
/// labels and complexity level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matched {
    /// Combination index to the index of the first aligned pair.
    pub covered: BTreeMap<usize, usize>,
    /// Indices of combinations with no aligned pair, in order.
    pub uncovered: Vec<usize>,
}

pub fn match_combinations(records: &[LabeledPair], combos: &[Combination]) -> Matched {
    let mut first: BTreeMap<(&_, _), usize> = BTreeMap::new();
    for (j, r) in records.iter().enumerate() {
        first.entry((&r.labels, r.complexity)).or_insert(j);
    }
    let mut out = Matched::default();
    for (i, c) in combos.iter().enumerate() {
        match first.get(&(&c.labels, c.complexity_level)) {
            Some(&j) => {
                out.covered.insert(i, j);
            }
            None => out.uncovered.push(i),
        }
    }
    out
}

/// The `k` pairs most similar to `combo` by Jaccard similarity of their
/// category-name sets. Equal similarities keep corpus order.
pub fn retrieve_blueprints<'a>(combo: &Combination, records: &'a [LabeledPair], k: usize) -> Vec<&'a LabeledPair> {
    let target = combo.labels.label_set();
    let mut scored: Vec<(f64, usize)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (jaccard(&target, &r.labels.label_set()), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| &records[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&'static str]) -> BTreeSet<&'static str> {
        items.iter().copied().collect()
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&["x", "y", "z"]), &set(&["y", "z", "w"])), 0.5);
        assert_eq!(jaccard(&set(&["x"]), &set(&["x"])), 1.0);
        assert_eq!(jaccard(&set(&["x"]), &set(&["y"])), 0.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
    }
}
