//! End-to-end synthesis run: combinations, database pool, seeds,
//! expansion and reports, written to one output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::eval::{self, DiversityReport, EvalError, HashedBagOfWords, QualityReport};
use crate::expand::{expand_seeds, Expansion, ExpansionConfig, GenerationPath};
use crate::forge::{forge_pool, initialize_database, load_source_tables, DatabasePool, DatabaseSchema, ForgeConfig, ForgeError, PoolEntry};
use crate::gateway::{Gateway, GatewayConfig, GatewayError};
use crate::seed::{build_seeds, label_pairs, load_pairs, spider_schemas, IntentSource, LabeledPair, SeedConfig, SeedError, SeedSet, Synth};
use crate::sql::{AnalysisConfig, FunctionTable};
use crate::taxonomy::{coverage_report, Combination, CoverageReport, TaxonomyConfig, TaxonomyError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

fn io(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io(format!("{}: {e}", path.display()))
}

/// Input files. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub source_tables: PathBuf,
    pub corpus: PathBuf,
    /// Schema documents for the corpus databases: one database schema
    /// per file, or a Spider-style table list.
    #[serde(default)]
    pub corpus_schemas: Vec<PathBuf>,
    /// Directory holding `<db_id>.sqlite` or `<db_id>/<db_id>.sqlite` for
    /// corpus databases. Schemas without a file here are initialized
    /// from their sample rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_db_dir: Option<PathBuf>,
    pub prompts: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub cluster_threshold: f64,
    pub embedding_dim: usize,
    /// Runs the quality judge on every emitted record.
    pub judge: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            cluster_threshold: eval::DEFAULT_CLUSTER_THRESHOLD,
            embedding_dim: HashedBagOfWords::default().dim,
            judge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub run_seed: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub intent: IntentSource,
    pub inputs: Inputs,
    #[serde(default)]
    pub taxonomy: TaxonomyConfig,
    #[serde(default)]
    pub forge: ForgeConfig,
    #[serde(default)]
    pub seed: SeedConfig,
    #[serde(default)]
    pub expansion: ExpansionConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub reports: ReportConfig,
}

fn default_seed() -> u64 {
    7
}

fn default_timeout() -> u64 {
    10
}

impl PipelineConfig {
    /// Parses a TOML config and makes its input paths absolute.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base)?;
        cfg.taxonomy.complexity.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) -> Result<(), PipelineError> {
        let abs = |p: &mut PathBuf| -> Result<(), PipelineError> {
            let joined = if p.is_absolute() { p.clone() } else { base.join(&*p) };
            *p = std::fs::canonicalize(&joined).map_err(|e| io(&joined, e))?;
            Ok(())
        };
        let i = &mut self.inputs;
        abs(&mut i.source_tables)?;
        abs(&mut i.corpus)?;
        abs(&mut i.prompts)?;
        for p in &mut i.corpus_schemas {
            abs(p)?;
        }
        if let Some(p) = &mut i.corpus_db_dir {
            abs(p)?;
        }
        if let Some(p) = &mut i.functions {
            abs(p)?;
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs.max(1))
    }

    pub fn analysis(&self) -> Result<AnalysisConfig, PipelineError> {
        let mut a = AnalysisConfig::default();
        if let Some(p) = &self.inputs.functions {
            a.functions = FunctionTable::load(p).map_err(|e| io(p, e))?;
        }
        Ok(a)
    }
}

/// Copy of `cfg` expanding only along `paths`, with the per-seed database
/// budget of the disabled paths handed to the remaining ones so that the
/// corpus size stays comparable.
pub fn ablated(cfg: &PipelineConfig, paths: &[GenerationPath]) -> PipelineConfig {
    let mut out = cfg.clone();
    let budget = cfg.expansion.databases * cfg.expansion.paths.len();
    out.expansion.paths = paths.to_vec();
    out.expansion.databases = budget.div_ceil(paths.len().max(1));
    out
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(dir, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| io(path, e))?;
    tmp.persist(path).map_err(|e| io(path, e.error))?;
    Ok(())
}

/// One JSON document per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|x| serde_json::to_string(x).expect("record serializes") + "\n").collect()
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| PipelineError::Io(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// Builds a directory under a hidden sibling name and swaps it into place
/// only once `fill` succeeds.
pub fn with_staged_dir<T>(out: &Path, fill: impl FnOnce(&Path) -> Result<T, PipelineError>) -> Result<T, PipelineError> {
    let name = out.file_name().ok_or_else(|| PipelineError::Config(format!("bad output path {}", out.display())))?;
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    let staging = parent.join(format!(".{}.partial", name.to_string_lossy()));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| io(&staging, e))?;
    }
    std::fs::create_dir_all(&staging).map_err(|e| io(&staging, e))?;
    let value = match fill(&staging) {
        Ok(v) => v,
        Err(e) => {
            let _ = std::fs::remove_dir_all(&staging);
            return Err(e);
        }
    };
    if out.exists() {
        std::fs::remove_dir_all(out).map_err(|e| io(out, e))?;
    }
    std::fs::rename(&staging, out).map_err(|e| io(out, e))?;
    Ok(value)
}

/// Everything needed to audit or replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub provider: String,
    pub run_seed: u64,
    pub config: PipelineConfig,
    /// Output files relative to the run directory.
    pub outputs: BTreeMap<String, String>,
    pub counters: BTreeMap<String, usize>,
    pub started_at: u64,
    pub finished_at: u64,
}

pub fn run_id(cfg: &PipelineConfig, provider: &str) -> String {
    let doc = serde_json::to_string(cfg).expect("config serializes");
    crate::seed::short_hash(&[&doc, provider])
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn read_schemas(path: &Path) -> Result<Vec<DatabaseSchema>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| io(path, e))?;
    if doc.is_array() {
        Ok(spider_schemas(&doc)?)
    } else {
        Ok(vec![serde_json::from_value(doc).map_err(|e| io(path, e))?])
    }
}

/// Resolves corpus databases: existing files under `corpus_db_dir` first,
/// then schemas initialized from sample rows into `dir`.
pub fn corpus_databases(inputs: &Inputs, dir: &Path) -> Result<BTreeMap<String, PoolEntry>, PipelineError> {
    let mut out = BTreeMap::new();
    for path in &inputs.corpus_schemas {
        for schema in read_schemas(path)? {
            let existing = inputs.corpus_db_dir.as_ref().and_then(|d| {
                [d.join(format!("{0}/{0}.sqlite", schema.id)), d.join(format!("{}.sqlite", schema.id))]
                    .into_iter()
                    .find(|p| p.exists())
            });
            let file = match existing {
                Some(p) => p,
                None => {
                    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
                    let p = dir.join(format!("{}.sqlite", schema.id));
                    initialize_database(&schema, &p)?;
                    p
                }
            };
            out.insert(schema.id.clone(), PoolEntry { schema, path: file });
        }
    }
    Ok(out)
}

/// Labels corpus pairs, logging the ones that cannot be classified.
pub fn labeled_corpus(path: &Path, synth: &Synth<'_>) -> Result<Vec<LabeledPair>, PipelineError> {
    let raw = load_pairs(path)?;
    let (pairs, skipped) = label_pairs(&raw, synth);
    for (id, why) in &skipped {
        log::warn!("corpus pair {id} skipped: {why}");
    }
    Ok(pairs)
}

/// Reports over emitted records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReports {
    pub coverage: CoverageReport,
    pub stats: eval::CorpusStats,
    pub diversity: DiversityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityReport>,
}

pub fn report_records(
    records: &[crate::expand::DatasetRecord],
    pool: &DatabasePool,
    gateway: &Gateway,
    analysis: &AnalysisConfig,
    cfg: &ReportConfig,
) -> Result<RunReports, PipelineError> {
    use rayon::prelude::*;
    let coverage = coverage_report(records.iter().map(|r| &r.labels))?;
    let stats = eval::corpus_stats(records.iter().map(|r| (r.id.as_str(), r.db_id.as_str(), r.sql.as_str())), analysis)?;
    let questions: Vec<String> = records.iter().map(|r| r.question.clone()).collect();
    let embedder = HashedBagOfWords { dim: cfg.embedding_dim };
    let diversity = eval::diversity_report(&questions, &embedder, cfg.cluster_threshold)?;
    let quality = if cfg.judge {
        let verdicts = records
            .par_iter()
            .map(|r| {
                let schema = pool.get(&r.db_id).map(|e| e.schema.prompt_text()).unwrap_or_default();
                eval::quality_judge(&r.id, &r.question, &r.sql, &schema, gateway)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(eval::quality_report(&verdicts)?)
    } else {
        None
    };
    Ok(RunReports {
        coverage,
        stats,
        diversity,
        quality,
    })
}

struct Outputs<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
}

impl Outputs<'_> {
    fn emit(&mut self, key: &str, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        write_atomic(&self.dir.join(rel), bytes)?;
        self.files.insert(key.to_string(), rel.to_string());
        Ok(())
    }
}

/// Result of a full run, kept in memory for callers that inspect it.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub manifest: RunManifest,
    pub combos: Vec<Combination>,
    pub seeds: SeedSet,
    pub expansion: Expansion,
    pub reports: RunReports,
}

/// Runs every stage into `out`. Nothing under `out` changes unless the
/// whole run succeeds.
pub fn run_pipeline(cfg: &PipelineConfig, gateway: &Gateway, out: &Path) -> Result<PipelineRun, PipelineError> {
    let started_at = unix_now();
    let analysis = cfg.analysis()?;
    let synth = Synth {
        gateway,
        taxonomy: &cfg.taxonomy,
        analysis: &analysis,
        intent: cfg.intent,
        timeout: cfg.timeout(),
    };
    let mut run = with_staged_dir(out, |dir| {
        let mut counters = BTreeMap::new();
        let mut out = Outputs {
            dir,
            files: BTreeMap::new(),
        };

        let combos = cfg.taxonomy.enumerate()?;
        counters.insert("combinations".into(), combos.len());
        out.emit("combinations", "combinations.jsonl", to_jsonl(&combos).as_bytes())?;

        let sources = load_source_tables(&cfg.inputs.source_tables)?;
        let (pool, forge_failures) = forge_pool(&sources, gateway, &cfg.forge, &dir.join("databases"))?;
        counters.insert("source_tables".into(), sources.len());
        counters.insert("databases".into(), pool.len());
        counters.insert("forge_failures".into(), forge_failures.len());
        out.files.insert("databases".into(), "databases".into());
        let failed: Vec<_> = forge_failures
            .iter()
            .map(|f| serde_json::json!({"source_id": f.source_id, "error": f.error.to_string()}))
            .collect();
        out.emit("forge_failures", "forge_failures.jsonl", to_jsonl(&failed).as_bytes())?;

        let corpus_dbs = corpus_databases(&cfg.inputs, &dir.join("corpus_databases"))?;
        let corpus = labeled_corpus(&cfg.inputs.corpus, &synth)?;
        counters.insert("corpus_pairs".into(), corpus.len());
        let lookup = |id: &str| corpus_dbs.get(id).cloned();
        let seeds = build_seeds(&combos, &corpus, &lookup, &pool, &synth, &cfg.seed, cfg.run_seed)?;
        counters.insert("seeds".into(), seeds.seeds.len());
        counters.insert("seed_failures".into(), seeds.failures.len());
        out.emit("seeds", "seeds.jsonl", to_jsonl(&seeds.seeds).as_bytes())?;
        out.emit("seed_failures", "seed_failures.jsonl", to_jsonl(&seeds.failures).as_bytes())?;

        let expansion = expand_seeds(&seeds.seeds, &pool, &synth, &cfg.expansion, cfg.run_seed)?;
        counters.insert("records".into(), expansion.records.len());
        counters.insert("quarantined".into(), expansion.quarantined.len());
        counters.insert("skipped".into(), expansion.skipped.len());
        for (path, n) in expansion.path_counts() {
            counters.insert(format!("records_{}", path.as_str()), n);
        }
        out.emit("dataset", "dataset.jsonl", to_jsonl(&expansion.records).as_bytes())?;
        out.emit("quarantine", "quarantine.jsonl", to_jsonl(&expansion.quarantined).as_bytes())?;
        out.emit("skipped", "skipped.jsonl", to_jsonl(&expansion.skipped).as_bytes())?;

        let reports = report_records(&expansion.records, &pool, gateway, &analysis, &cfg.reports)?;
        out.emit("coverage", "reports/coverage.json", pretty(&reports.coverage).as_bytes())?;
        out.emit("coverage_table", "reports/coverage.txt", reports.coverage.to_text_table("synthesized").as_bytes())?;
        out.emit("stats", "reports/stats.json", pretty(&reports.stats).as_bytes())?;
        out.emit("stats_table", "reports/stats.txt", reports.stats.table().as_bytes())?;
        out.emit("diversity", "reports/diversity.json", pretty(&reports.diversity).as_bytes())?;
        if let Some(q) = &reports.quality {
            out.emit("quality", "reports/quality.json", pretty(q).as_bytes())?;
        }
        out.emit("calls", "calls.jsonl", to_jsonl(&gateway.calls()).as_bytes())?;
        counters.insert("gateway_calls".into(), gateway.calls().len());

        let manifest = RunManifest {
            run_id: run_id(cfg, &gateway.provider_id()),
            provider: gateway.provider_id(),
            run_seed: cfg.run_seed,
            config: cfg.clone(),
            outputs: out.files,
            counters,
            started_at,
            finished_at: 0,
        };
        Ok(PipelineRun {
            manifest,
            combos,
            seeds,
            expansion,
            reports,
        })
    })?;
    run.manifest.finished_at = unix_now();
    run.manifest.outputs.insert("manifest".into(), "manifest.json".into());
    let doc = serde_json::to_string_pretty(&run.manifest).expect("manifest serializes");
    write_atomic(&out.join("manifest.json"), doc.as_bytes())?;
    Ok(run)
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}
