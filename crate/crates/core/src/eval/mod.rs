//! Execution accuracy, quality scoring, diversity and corpus statistics.

mod diversity;
mod ex;
mod quality;
mod state;
mod stats;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

pub use diversity::{
    cluster_labels, cosine, diversity_report, semantic_clusters, ttr, word_tokens, DiversityReport, Embedder, HashedBagOfWords,
    DEFAULT_CLUSTER_THRESHOLD,
};
pub use ex::{execution_accuracy, execution_match, Breakdown, EvalPair, ExReport, GroupScore, MatchResult};
pub use quality::{aggregate_quality, quality_from_counts, quality_judge, quality_report, Criterion, QualityLevel, QualityReport, QualityVerdict};
pub use state::{canon_rows, multiset, snapshot_state, Canon, CanonRow, DatabaseState, TableState};
pub use stats::{corpus_stats, CorpusStats};

use crate::gateway::GatewayError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Io(String),
    #[error("gold query failed: {message} [{sql}]")]
    GoldFailure { sql: String, message: String },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("quality group has no verdicts")]
    EmptyGroup,
    #[error("{id}: no verdict for '{criterion}'")]
    MissingVerdict { id: String, criterion: String },
    #[error("corpus has no word tokens")]
    EmptyCorpus,
    #[error("embedder: {0}")]
    Embedder(String),
    #[error("{id}: {message}")]
    Parse { id: String, message: String },
    #[error("no prediction for '{0}'")]
    MissingPrediction(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Reads predictions as one `{"id": .., "sql": ..}` object per line, or
/// a single JSON object mapping id to SQL.
pub fn load_predictions(path: &Path) -> Result<HashMap<String, String>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    if let Ok(map) = serde_json::from_str::<HashMap<String, String>>(&text) {
        return Ok(map);
    }
    #[derive(serde::Deserialize)]
    struct Line {
        id: String,
        #[serde(alias = "pred", alias = "query")]
        sql: String,
    }
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let l: Line = serde_json::from_str(line).map_err(|e| EvalError::Parse {
            id: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        out.insert(l.id, l.sql);
    }
    Ok(out)
}

/// Looks up the prediction for every gold id, failing on the first one
/// without a prediction.
pub fn join_predictions<'a>(gold_ids: impl IntoIterator<Item = &'a str>, preds: &HashMap<String, String>) -> Result<Vec<String>, EvalError> {
    gold_ids
        .into_iter()
        .map(|id| preds.get(id).cloned().ok_or_else(|| EvalError::MissingPrediction(id.to_string())))
        .collect()
}

/// Horizontal bar chart of per-group accuracy as an SVG document.
pub fn breakdown_svg(title: &str, groups: &BTreeMap<String, GroupScore>) -> String {
    const ROW: usize = 22;
    const LABEL: usize = 220;
    const BAR: f64 = 360.0;
    let height = 40 + ROW * groups.len();
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <text x=\"8\" y=\"20\" font-size=\"14\">{}</text>\n",
        LABEL + BAR as usize + 80,
        esc(title)
    );
    for (i, (name, g)) in groups.iter().enumerate() {
        let y = 32 + i * ROW;
        let w = g.accuracy * BAR;
        out += &format!(
            "<text x=\"8\" y=\"{}\">{}</text>\n<rect x=\"{LABEL}\" y=\"{y}\" width=\"{w:.1}\" height=\"{}\" fill=\"#4c78a8\"/>\n\
             <text x=\"{:.1}\" y=\"{}\">{:.1}% ({}/{})</text>\n",
            y + 14,
            esc(name),
            ROW - 6,
            LABEL as f64 + w + 6.0,
            y + 14,
            g.accuracy * 100.0,
            g.matched,
            g.total
        );
    }
    out + "</svg>\n"
}
