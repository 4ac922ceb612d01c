//! Lexical and semantic diversity of a question corpus.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EvalError;

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.8;

/// Lowercase word tokens, split on whitespace with edge punctuation
/// stripped. Tokens that are all punctuation are dropped.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|w| !w.is_empty())
}

/// Unique word tokens over total word tokens.
pub fn ttr<S: AsRef<str>>(questions: &[S]) -> Result<f64, EvalError> {
    let mut total = 0usize;
    let mut types = BTreeSet::new();
    for q in questions {
        for w in word_tokens(q.as_ref()) {
            total += 1;
            types.insert(w);
        }
    }
    if total == 0 {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(types.len() as f64 / total as f64)
}

/// Maps texts to fixed-length vectors.
pub trait Embedder: Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EvalError>;
}

/// Word counts hashed into `dim` buckets.
#[derive(Debug, Clone, Copy)]
pub struct HashedBagOfWords {
    pub dim: usize,
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        Self { dim: 1024 }
    }
}

impl Embedder for HashedBagOfWords {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EvalError> {
        if self.dim == 0 {
            return Err(EvalError::Embedder("dimension must be positive".into()));
        }
        Ok(texts
            .iter()
            .map(|t| {
                let mut v = vec![0.0; self.dim];
                for w in word_tokens(t) {
                    let h = Sha256::digest(w.as_bytes());
                    let b = u64::from_le_bytes(h[..8].try_into().expect("digest is 32 bytes"));
                    v[(b % self.dim as u64) as usize] += 1.0;
                }
                v
            })
            .collect())
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        // Two empty texts are the same text.
        return if na == nb { 1.0 } else { 0.0 };
    }
    dot / (na * nb)
}

/// Community label per vector: edges join pairs with cosine at least
/// `threshold`, and every node repeatedly takes the smallest label among
/// itself and its neighbours, visiting nodes in index order, until no
/// label changes.
pub fn cluster_labels(vectors: &[Vec<f64>], threshold: f64) -> Result<Vec<usize>, EvalError> {
    let n = vectors.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != vectors[0].len()) {
        return Err(EvalError::Embedder(format!("vector lengths differ ({} vs {})", vectors[0].len(), v.len())));
    }
    // Same arithmetic as `cosine`, skipping terms that are exactly zero.
    let norms: Vec<f64> = vectors.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let support: Vec<Vec<usize>> = vectors.iter().map(|v| (0..v.len()).filter(|&k| v[k] != 0.0).collect()).collect();
    let similar = |i: usize, j: usize| {
        let (na, nb) = (norms[i], norms[j]);
        let c = if na == 0.0 || nb == 0.0 {
            if na == nb { 1.0 } else { 0.0 }
        } else {
            support[i].iter().map(|&k| vectors[i][k] * vectors[j][k]).sum::<f64>() / (na * nb)
        };
        c >= threshold
    };
    let upper: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| (i + 1..n).filter(|&j| similar(i, j)).collect()).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, js) in upper.iter().enumerate() {
        for &j in js {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    let mut label: Vec<usize> = (0..n).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            let m = adjacency[i].iter().map(|&j| label[j]).fold(label[i], usize::min);
            if m < label[i] {
                label[i] = m;
                changed = true;
            }
        }
    }
    Ok(label)
}

pub fn semantic_clusters(questions: &[String], embedder: &dyn Embedder, threshold: f64) -> Result<usize, EvalError> {
    if questions.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let vectors = embedder.embed(questions)?;
    if vectors.len() != questions.len() {
        return Err(EvalError::Embedder(format!("{} vectors for {} texts", vectors.len(), questions.len())));
    }
    let labels = cluster_labels(&vectors, threshold)?;
    Ok(labels.into_iter().collect::<BTreeSet<_>>().len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub ttr: f64,
    pub clusters: usize,
    pub sample_size: usize,
    pub threshold: f64,
}

pub fn diversity_report(questions: &[String], embedder: &dyn Embedder, threshold: f64) -> Result<DiversityReport, EvalError> {
    Ok(DiversityReport {
        ttr: ttr(questions)?,
        clusters: semantic_clusters(questions, embedder, threshold)?,
        sample_size: questions.len(),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_strip_edge_punctuation() {
        let t: Vec<String> = word_tokens("Who's  there? (Me) -- ok.").collect();
        assert_eq!(t, ["who's", "there", "me", "ok"]);
    }

    #[test]
    fn bag_of_words_is_stable() {
        let e = HashedBagOfWords::default();
        let v = e.embed(&["a b a".into(), "A, b. a".into()]).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0].iter().sum::<f64>(), 3.0);
    }
}
