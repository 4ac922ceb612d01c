//! `taxsql`: classify, audit and synthesize text-to-SQL data.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use taxsql_core::eval::{self, Breakdown, EvalPair, HashedBagOfWords};
use taxsql_core::expand::{expand_seeds, GenerationPath};
use taxsql_core::forge::{forge_pool, load_source_tables, DatabasePool};
use taxsql_core::gateway::{Gateway, GatewayConfig, MockProvider, Provider, RemoteProvider, TemplateSet};
use taxsql_core::pipeline::{
    ablated, corpus_databases, labeled_corpus, read_jsonl, run_pipeline, to_jsonl, with_staged_dir, write_atomic, PipelineConfig, RunManifest,
};
use taxsql_core::seed::{build_seeds, label_pairs, load_pairs, IntentSource, SeedRecord, Synth};
use taxsql_core::sql::AnalysisConfig;
use taxsql_core::taxonomy::{coverage_report, Combination, TaxonomyConfig, TaxonomyLabels};

#[derive(Parser, Debug)]
#[command(name = "taxsql", version, about = "Taxonomy-guided text-to-SQL analysis and synthesis")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Prompt template directory; overrides the config.
    #[arg(long, global = true)]
    prompts_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ProviderKind::Mock)]
    provider: ProviderKind,
    /// Recorded mock responses, keyed by template and prompt hash.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Seed for every pseudo-random stream; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Per-statement execution timeout; overrides the config.
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Mock,
    Remote,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Dimension {
    CoreIntent,
    StatementType,
    SyntaxStructure,
    KeyAction,
}

impl From<Dimension> for Breakdown {
    fn from(d: Dimension) -> Self {
        match d {
            Dimension::CoreIntent => Breakdown::CoreIntent,
            Dimension::StatementType => Breakdown::StatementType,
            Dimension::SyntaxStructure => Breakdown::SyntaxStructure,
            Dimension::KeyAction => Breakdown::KeyAction,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Label question/SQL pairs with the four taxonomy dimensions.
    Classify {
        /// Pairs as JSON lines or a Spider-style JSON array.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = IntentArg::Heuristic)]
        intent: IntentArg,
    },
    /// Coverage of the taxonomy by labeled records.
    Analyze {
        input: PathBuf,
        /// Dataset name shown in the table.
        #[arg(long, default_value = "dataset")]
        name: String,
    },
    /// Valid label combinations for the configured taxonomy.
    Combos,
    /// Forge a database pool from flat source tables.
    Dbgen {
        /// Source tables as JSON lines; defaults to the config input.
        #[arg(long)]
        sources: Option<PathBuf>,
    },
    /// Build one seed per combination.
    Seed {
        /// Combination list from `combos`; defaults to enumerating.
        #[arg(long)]
        combos: Option<PathBuf>,
        /// Database pool directory from `dbgen`.
        #[arg(long)]
        databases: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Expand seeds across the pool along both generation paths.
    Expand {
        seeds: PathBuf,
        #[arg(long)]
        databases: PathBuf,
        /// Restrict expansion to these paths.
        #[arg(long, value_delimiter = ',')]
        paths: Vec<PathArg>,
    },
    /// Execution accuracy of predictions against gold records.
    Evaluate {
        /// Gold records with `id`, `db_id`, `sql` and optional `labels`.
        gold: PathBuf,
        /// Predictions as `{"id", "sql"}` lines or one id-to-SQL object.
        #[arg(long)]
        predictions: PathBuf,
        /// Directory with `<db_id>.sqlite` or `<db_id>/<db_id>.sqlite`.
        #[arg(long)]
        databases: PathBuf,
        #[arg(long, value_enum)]
        breakdown: Option<Dimension>,
        /// Bar chart of the breakdown as SVG.
        #[arg(long)]
        chart: Option<PathBuf>,
    },
    /// Ten-criterion quality scores of records.
    Quality {
        input: PathBuf,
        /// Database pool directory, used to show the judge each schema.
        #[arg(long)]
        databases: Option<PathBuf>,
    },
    /// Structural statistics and diversity of records.
    Stats {
        input: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run every stage into one output directory.
    Pipeline {
        /// Re-run the configuration recorded in a run manifest.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Expand only along these paths, with the same per-seed budget.
        #[arg(long, value_delimiter = ',')]
        paths: Vec<PathArg>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum IntentArg {
    Heuristic,
    Llm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PathArg {
    Sql,
    Question,
}

impl From<PathArg> for GenerationPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Sql => GenerationPath::SqlOriented,
            PathArg::Question => GenerationPath::QuestionOriented,
        }
    }
}

/// Settings shared by every command, from the config file and flags.
struct Env {
    cli_out: Option<PathBuf>,
    format: Format,
    config: Option<PipelineConfig>,
    taxonomy: TaxonomyConfig,
    analysis: AnalysisConfig,
    gateway: Gateway,
    run_seed: u64,
    timeout: Duration,
}

impl Env {
    fn synth(&self, intent: IntentSource) -> Synth<'_> {
        Synth {
            gateway: &self.gateway,
            taxonomy: &self.taxonomy,
            analysis: &self.analysis,
            intent,
            timeout: self.timeout,
        }
    }

    fn intent(&self) -> IntentSource {
        self.config.as_ref().map(|c| c.intent).unwrap_or_default()
    }

    fn need_config(&self) -> Result<&PipelineConfig> {
        self.config.as_ref().context("this command needs --config")
    }

    /// Writes a document to `--out` atomically, or to stdout.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.cli_out {
            Some(p) => write_atomic(p, text.as_bytes())?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn report<T: Serialize>(&self, value: &T, table: impl FnOnce() -> String) -> Result<()> {
        match self.format {
            Format::Structured => self.emit(&(serde_json::to_string_pretty(value)? + "\n")),
            Format::Text => self.emit(&table()),
        }
    }
}

fn build_gateway(cli: &Cli, prompts: &Path, cfg: GatewayConfig, timeout: Duration) -> Result<Gateway> {
    let templates = TemplateSet::load(prompts).with_context(|| format!("loading prompts from {}", prompts.display()))?;
    let provider: Box<dyn Provider> = match cli.provider {
        ProviderKind::Mock => Box::new(MockProvider::new(cli.fixtures.clone())),
        ProviderKind::Remote => {
            let request = Duration::from_secs(cfg.request_timeout_secs.max(timeout.as_secs()));
            Box::new(RemoteProvider::from_env(request)?)
        }
    };
    Ok(Gateway::new(templates, provider, cfg))
}

fn setup(cli: &Cli) -> Result<Env> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let replay = match &cli.command {
        Command::Pipeline { replay: Some(p), .. } => {
            let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
            let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("{} is not a run manifest", p.display()))?;
            Some(m.config)
        }
        _ => None,
    };
    let mut config = match (replay, &cli.config) {
        (Some(c), _) => Some(c),
        (None, Some(p)) => Some(PipelineConfig::load(p)?),
        (None, None) => None,
    };
    if let Some(c) = &mut config {
        if let Some(s) = cli.seed {
            c.run_seed = s;
        }
        if let Some(t) = cli.timeout_secs {
            c.timeout_secs = t;
        }
        if let Some(p) = &cli.prompts_dir {
            c.inputs.prompts = p.clone();
        }
    }
    let timeout = Duration::from_secs(cli.timeout_secs.or(config.as_ref().map(|c| c.timeout_secs)).unwrap_or(10).max(1));
    let prompts = cli
        .prompts_dir
        .clone()
        .or_else(|| config.as_ref().map(|c| c.inputs.prompts.clone()))
        .unwrap_or_else(|| PathBuf::from("prompts"));
    let gateway_cfg = config.as_ref().map(|c| c.gateway.clone()).unwrap_or_default();
    let gateway = build_gateway(cli, &prompts, gateway_cfg, timeout)?;
    let analysis = match &config {
        Some(c) => c.analysis()?,
        None => AnalysisConfig::default(),
    };
    Ok(Env {
        // Commands whose --out is a directory print their summary instead.
        cli_out: match cli.command {
            Command::Dbgen { .. } | Command::Expand { .. } | Command::Pipeline { .. } => None,
            _ => cli.out.clone(),
        },
        format: cli.format,
        taxonomy: config.as_ref().map(|c| c.taxonomy.clone()).unwrap_or_default(),
        analysis,
        gateway,
        run_seed: cli.seed.or(config.as_ref().map(|c| c.run_seed)).unwrap_or(7),
        timeout,
        config,
    })
}

/// Records as JSON values from JSON lines or a JSON array.
fn read_values(path: &Path) -> Result<Vec<Value>> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(&text).with_context(|| path.display().to_string())?);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn field<'a>(v: &'a Value, names: &[&str]) -> Option<&'a str> {
    names.iter().find_map(|n| v[*n].as_str())
}

fn record_id(v: &Value, i: usize) -> String {
    field(v, &["id"]).map(str::to_string).unwrap_or_else(|| format!("#{}", i + 1))
}

fn labels_of(v: &Value) -> Option<TaxonomyLabels> {
    serde_json::from_value(v["labels"].clone()).ok()
}

/// Finds a database file by id under `dir`.
fn database_file(dir: &Path, id: &str) -> Option<PathBuf> {
    [dir.join(format!("{id}.sqlite")), dir.join(id).join(format!("{id}.sqlite"))]
        .into_iter()
        .find(|p| p.exists())
}

fn load_pool(dir: &Path) -> Result<DatabasePool> {
    let pool = DatabasePool::load(dir)?;
    if pool.is_empty() {
        bail!("no databases under {}", dir.display());
    }
    Ok(pool)
}

fn run(cli: &Cli) -> Result<()> {
    let env = setup(cli)?;
    match &cli.command {
        Command::Classify { input, intent } => {
            let intent = match intent {
                IntentArg::Heuristic => IntentSource::Heuristic,
                IntentArg::Llm => IntentSource::Llm,
            };
            let raw = load_pairs(input)?;
            let (pairs, skipped) = label_pairs(&raw, &env.synth(intent));
            for (id, why) in &skipped {
                eprintln!("skipped {id}: {why}");
            }
            env.emit(&to_jsonl(&pairs))?;
            eprintln!("labeled {} of {} pairs", pairs.len(), raw.len());
        }
        Command::Analyze { input, name } => {
            let values = read_values(input)?;
            let labels: Vec<TaxonomyLabels> = values
                .iter()
                .enumerate()
                .map(|(i, v)| labels_of(v).with_context(|| format!("record {} has no labels; run classify first", record_id(v, i))))
                .collect::<Result<_>>()?;
            let report = coverage_report(&labels)?;
            env.report(&report, || report.to_text_table(name))?;
        }
        Command::Combos => {
            let combos = env.taxonomy.enumerate()?;
            env.emit(&to_jsonl(&combos))?;
            eprintln!("{} combinations", combos.len());
        }
        Command::Dbgen { sources } => {
            let sources = match sources {
                Some(p) => p.clone(),
                None => env.need_config()?.inputs.source_tables.clone(),
            };
            let out = cli.out.clone().context("dbgen needs --out DIR")?;
            let forge = env.config.as_ref().map(|c| c.forge.clone()).unwrap_or_default();
            let tables = load_source_tables(&sources)?;
            let (pool, failures) = with_staged_dir(&out, |dir| Ok(forge_pool(&tables, &env.gateway, &forge, dir)?))?;
            for f in &failures {
                eprintln!("failed {}: {}", f.source_id, f.error);
            }
            eprintln!("{} databases from {} source tables", pool.len(), tables.len());
        }
        Command::Seed { combos, databases, corpus } => {
            let cfg = env.need_config()?;
            let combos: Vec<Combination> = match combos {
                Some(p) => read_jsonl(p)?,
                None => env.taxonomy.enumerate()?,
            };
            let pool = load_pool(databases)?;
            let synth = env.synth(env.intent());
            let corpus_path = corpus.clone().unwrap_or_else(|| cfg.inputs.corpus.clone());
            let pairs = labeled_corpus(&corpus_path, &synth)?;
            let scratch = tempfile::tempdir()?;
            let corpus_dbs = corpus_databases(&cfg.inputs, scratch.path())?;
            let lookup = |id: &str| corpus_dbs.get(id).cloned();
            let set = build_seeds(&combos, &pairs, &lookup, &pool, &synth, &cfg.seed, env.run_seed)?;
            for f in &set.failures {
                eprintln!("no seed for {}: {}", f.combination.labels, f.reason);
            }
            env.emit(&to_jsonl(&set.seeds))?;
            eprintln!("{} seeds for {} combinations", set.seeds.len(), combos.len());
        }
        Command::Expand { seeds, databases, paths } => {
            let mut expansion = env.config.as_ref().map(|c| c.expansion.clone()).unwrap_or_default();
            if !paths.is_empty() {
                let chosen: Vec<GenerationPath> = paths.iter().map(|p| (*p).into()).collect();
                let budget = expansion.databases * expansion.paths.len();
                expansion.databases = budget.div_ceil(chosen.len());
                expansion.paths = chosen;
            }
            let seeds: Vec<SeedRecord> = read_jsonl(seeds)?;
            let pool = load_pool(databases)?;
            let out = cli.out.clone().context("expand needs --out DIR")?;
            let result = expand_seeds(&seeds, &pool, &env.synth(env.intent()), &expansion, env.run_seed)?;
            with_staged_dir(&out, |dir| {
                write_atomic(&dir.join("dataset.jsonl"), to_jsonl(&result.records).as_bytes())?;
                write_atomic(&dir.join("quarantine.jsonl"), to_jsonl(&result.quarantined).as_bytes())?;
                write_atomic(&dir.join("skipped.jsonl"), to_jsonl(&result.skipped).as_bytes())?;
                write_atomic(&dir.join("calls.jsonl"), to_jsonl(&env.gateway.calls()).as_bytes())?;
                Ok(())
            })?;
            eprintln!(
                "{} records, {} quarantined, {} skipped",
                result.records.len(),
                result.quarantined.len(),
                result.skipped.len()
            );
        }
        Command::Evaluate {
            gold,
            predictions,
            databases,
            breakdown,
            chart,
        } => {
            let gold = read_values(gold)?;
            let preds = eval::load_predictions(predictions)?;
            let ids: Vec<String> = gold.iter().enumerate().map(|(i, v)| record_id(v, i)).collect();
            let joined = eval::join_predictions(ids.iter().map(String::as_str), &preds)?;
            let mut pairs = Vec::new();
            for ((v, id), pred) in gold.iter().zip(&ids).zip(joined) {
                let db_id = field(v, &["db_id"]).with_context(|| format!("{id}: no db_id"))?;
                let db = database_file(databases, db_id).with_context(|| format!("{id}: database '{db_id}' not found"))?;
                pairs.push(EvalPair {
                    id: id.clone(),
                    pred,
                    gold: field(v, &["sql", "query"]).with_context(|| format!("{id}: no gold sql"))?.to_string(),
                    db,
                    labels: labels_of(v),
                });
            }
            let report = eval::execution_accuracy(&pairs, breakdown.map(Into::into), env.timeout)?;
            if let (Some(path), Some(dim)) = (chart, breakdown) {
                let title = format!("Execution accuracy by {dim:?}");
                write_atomic(path, eval::breakdown_svg(&title, &report.breakdown).as_bytes())?;
            }
            env.report(&report, || {
                let mut t = format!("EX {:.4} ({}/{})\n", report.accuracy, report.matched, report.total);
                for (g, s) in &report.breakdown {
                    t += &format!("  {g:<32}{:>8.4} ({}/{})\n", s.accuracy, s.matched, s.total);
                }
                t
            })?;
        }
        Command::Quality { input, databases } => {
            let values = read_values(input)?;
            let pool = match databases {
                Some(d) => Some(load_pool(d)?),
                None => None,
            };
            let verdicts = values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let id = record_id(v, i);
                    let question = field(v, &["question"]).with_context(|| format!("{id}: no question"))?;
                    let sql = field(v, &["sql", "query"]).with_context(|| format!("{id}: no sql"))?;
                    let schema = pool
                        .as_ref()
                        .and_then(|p| field(v, &["db_id"]).and_then(|d| p.get(d)))
                        .map(|e| e.schema.prompt_text())
                        .unwrap_or_default();
                    Ok(eval::quality_judge(&id, question, sql, &schema, &env.gateway)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let report = eval::quality_report(&verdicts)?;
            env.report(&report, || {
                let mut t: String = report.scores.iter().map(|(c, s)| format!("{:<36}{s:>8.4}\n", c.name())).collect();
                t += &format!("{:<36}{:>8.4}\n", "Overall", report.overall);
                t
            })?;
        }
        Command::Stats { input, threshold } => {
            let values = read_values(input)?;
            let rows: Vec<(String, String, String)> = values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let id = record_id(v, i);
                    let sql = field(v, &["sql", "query"]).with_context(|| format!("{id}: no sql"))?.to_string();
                    Ok((id, field(v, &["db_id"]).unwrap_or_default().to_string(), sql))
                })
                .collect::<Result<_>>()?;
            let stats = eval::corpus_stats(rows.iter().map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str())), &env.analysis)?;
            let questions: Vec<String> = values.iter().filter_map(|v| field(v, &["question"]).map(str::to_string)).collect();
            let reports = env.config.as_ref().map(|c| c.reports.clone()).unwrap_or_default();
            let embedder = HashedBagOfWords { dim: reports.embedding_dim };
            let diversity = eval::diversity_report(&questions, &embedder, threshold.unwrap_or(reports.cluster_threshold))?;
            let doc = serde_json::json!({ "stats": stats, "diversity": diversity });
            env.report(&doc, || {
                format!(
                    "{}{:<20}{:>10.4}\n{:<20}{:>10}\n",
                    stats.table(),
                    "TTR",
                    diversity.ttr,
                    "Semantic clusters",
                    diversity.clusters
                )
            })?;
        }
        Command::Pipeline { paths, .. } => {
            let mut cfg = env.need_config()?.clone();
            if !paths.is_empty() {
                let chosen: Vec<GenerationPath> = paths.iter().map(|p| (*p).into()).collect();
                cfg = ablated(&cfg, &chosen);
            }
            let out = cli.out.clone().context("pipeline needs --out DIR")?;
            let run = run_pipeline(&cfg, &env.gateway, &out)?;
            let counters: BTreeMap<_, _> = run.manifest.counters.clone();
            env.report(&run.manifest, || {
                let mut t = format!("run {} -> {}\n", run.manifest.run_id, out.display());
                for (k, v) in &counters {
                    t += &format!("  {k:<28}{v:>8}\n");
                }
                t += &format!("  {:<28}{:>8.4}\n", "ttr", run.reports.diversity.ttr);
                t
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let block = serde_json::json!({
                "error": {
                    "command": format!("{:?}", cli.command).split_whitespace().next().unwrap_or_default().trim_end_matches('{').to_lowercase(),
                    "message": e.to_string(),
                    "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
                }
            });
            eprintln!("{}", serde_json::to_string_pretty(&block).expect("error block serializes"));
            ExitCode::FAILURE
        }
    }
}
