//! Acceptance checks. Each criterion prints one PASS or FAIL line with
//! what was measured; the process fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use taxsql_core::eval::{
    aggregate_quality, cluster_labels, execution_accuracy, execution_match, semantic_clusters, ttr, Embedder, EvalPair, HashedBagOfWords,
    QualityLevel,
};
use taxsql_core::exec;
use taxsql_core::expand::DatasetRecord;
use taxsql_core::forge::{
    initialize_database, read_back, structural_form, topo_order, ColumnSchema, DataType, DatabaseSchema, ForeignKey, TableSchema,
};
use taxsql_core::pipeline::PipelineConfig;
use taxsql_core::seed::{retrieve_blueprints, LabeledPair};
use taxsql_core::sql::{summarize, AnalysisConfig, Dialect};
use taxsql_core::taxonomy::{
    classify_pair, coverage_report, enumerate_combinations, validate_combination, Combination, ComplexityConfig, ComplexityLevel,
    CoreIntent as I, EnumerationConfig, IntentMode, KeyAction as K, Restriction, RuleToggles, StatementType as T, SyntaxStructure as S,
    TaxonomyLabels,
};

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn read_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn retail(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(root().join("data/mini_corpus_schema.json")).unwrap();
    let schema: DatabaseSchema = serde_json::from_str(&text).unwrap();
    let path = dir.join("retail.sqlite");
    initialize_database(&schema, &path).unwrap();
    path
}

fn detector_fidelity() -> Outcome {
    let cases = read_lines(&root().join("data/fixtures/detector_corpus.jsonl"));
    ensure!(cases.len() == 60, "{} cases instead of 60", cases.len());
    let cfg = AnalysisConfig::default();
    let started = Instant::now();
    let mut wrong = Vec::new();
    let mut seen_structures = BTreeSet::new();
    let mut seen_actions = BTreeSet::new();
    let mut seen_types = BTreeSet::new();
    for c in &cases {
        let s = summarize(c["sql"].as_str().unwrap(), &cfg).map_err(|e| format!("{}: {e}", c["id"]))?;
        let want_t: T = serde_json::from_value(c["statement_type"].clone()).unwrap();
        let want_s: BTreeSet<S> = serde_json::from_value(c["syntax_structures"].clone()).unwrap();
        let want_k: BTreeSet<K> = serde_json::from_value(c["key_actions"].clone()).unwrap();
        if (s.statement_type, &s.syntax_structures, &s.key_actions) != (want_t, &want_s, &want_k) {
            wrong.push(c["id"].as_str().unwrap().to_string());
        }
        seen_types.insert(want_t);
        seen_structures.extend(want_s);
        seen_actions.extend(want_k);
    }
    let elapsed = started.elapsed();
    ensure!(wrong.is_empty(), "disagreements on {wrong:?}");
    ensure!(
        (seen_types.len(), seen_structures.len(), seen_actions.len()) == (5, 14, 9),
        "fixture covers {}/{}/{} categories",
        seen_types.len(),
        seen_structures.len(),
        seen_actions.len()
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("60/60 exact agreement in {elapsed:?}"))
}

fn coverage_math() -> Outcome {
    let intents = [
        I::BasicQuery,
        I::ConditionFiltering,
        I::SortingAndPagination,
        I::BasicAggregation,
        I::TimeOperation,
        I::FormatTransformation,
        I::SetOperation,
        I::DistributionAnalysis,
        I::AdvancedStatistics,
        I::BusinessCalculation,
        I::BusinessRule,
    ];
    let structures = [
        S::Where,
        S::OrderBy,
        S::LimitOffset,
        S::InnerJoin,
        S::GroupBy,
        S::Having,
        S::Union,
        S::Intersect,
        S::Except,
        S::ScalarSubquery,
    ];
    let actions = [K::WildcardFiltering, K::AggregateFunction, K::SpecificTime];
    let corpus: Vec<TaxonomyLabels> = intents
        .iter()
        .enumerate()
        .map(|(i, &intent)| TaxonomyLabels::new(intent, T::Select, [structures[i % 10], structures[(i + 3) % 10]], [actions[i % 3]]))
        .collect();
    let r = coverage_report(&corpus).map_err(|e| e.to_string())?;
    let got = [r.statement_type.ratio, r.syntax_structure.ratio, r.key_action.ratio, r.core_intent.ratio];
    let want = [0.20, 0.71, 0.33, 0.79];
    let line = format!("{:.4} / {:.4} / {:.4} / {:.4}", got[0], got[1], got[2], got[3]);
    ensure!(got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 0.005), "{line}");
    Ok(line)
}

fn quality_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let counts: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..30));
        if counts.iter().sum::<usize>() == 0 {
            continue;
        }
        let levels: Vec<QualityLevel> = counts
            .iter()
            .zip(QualityLevel::ALL)
            .flat_map(|(n, l)| std::iter::repeat_n(l, *n))
            .collect();
        let n = levels.len() as f64;
        let want = (counts[0] as f64 + 0.75 * counts[1] as f64 + 0.5 * counts[2] as f64 + 0.25 * counts[3] as f64) / n;
        let got = aggregate_quality(&levels).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs());
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    let hi = aggregate_quality(&[QualityLevel::Excellent; 9]).unwrap();
    let lo = aggregate_quality(&[QualityLevel::Poor; 9]).unwrap();
    ensure!(hi == 1.0 && lo == 0.25, "endpoints {hi} and {lo}");
    Ok(format!("10000 vectors, max deviation {worst:e}; endpoints {hi} and {lo}"))
}

fn col(name: &str, ty: DataType, nullable: bool) -> ColumnSchema {
    ColumnSchema {
        name: name.into(),
        description: String::new(),
        data_type: ty,
        nullable,
    }
}

fn random_dag(rng: &mut ChaCha8Rng) -> DatabaseSchema {
    let n = rng.random_range(1..=12);
    let mut names: Vec<String> = (0..n).map(|i| format!("t{i:02}")).collect();
    names.shuffle(rng);
    let mut tables: Vec<TableSchema> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let mut columns = vec![col("id", DataType::Integer, false), col("note", DataType::Text, true)];
        let mut foreign_keys = Vec::new();
        for f in 0..if i == 0 { 0 } else { rng.random_range(0..=3) } {
            let c = format!("fk{f}");
            columns.push(col(&c, DataType::Integer, true));
            foreign_keys.push(ForeignKey {
                columns: vec![c],
                references_table: names[rng.random_range(0..i)].clone(),
                references_columns: vec!["id".into()],
            });
        }
        let fks = foreign_keys.len();
        let sample_rows = (1..=4)
            .map(|id| {
                let mut row = vec![json!(id), json!(format!("{name}-{id}"))];
                row.extend((0..fks).map(|_| json!(rng.random_range(1..=4))));
                row
            })
            .collect();
        tables.push(TableSchema {
            name: name.clone(),
            description: String::new(),
            columns,
            primary_key: vec!["id".into()],
            foreign_keys,
            sample_rows,
        });
    }
    tables.shuffle(rng);
    DatabaseSchema {
        id: String::new(),
        scenario: String::new(),
        tables,
    }
}

fn references(schema: &DatabaseSchema, child: &str, parent: &str) -> bool {
    schema.table(child).is_some_and(|t| t.foreign_keys.iter().any(|f| f.references_table == parent))
}

fn topological_init() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cycles = 0;
    for k in 0..100 {
        let schema = random_dag(&mut rng);
        let order = topo_order(&schema).map_err(|e| format!("schema {k}: {e}"))?;
        let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        for t in &schema.tables {
            for fk in &t.foreign_keys {
                ensure!(pos[fk.references_table.as_str()] < pos[t.name.as_str()], "schema {k}: {} after {}", fk.references_table, t.name);
            }
        }
        let path = dir.path().join(format!("{k}.sqlite"));
        initialize_database(&schema, &path).map_err(|e| format!("schema {k}: {e}"))?;
        let back = read_back(&path).map_err(|e| e.to_string())?;
        ensure!(structural_form(&back) == structural_form(&schema), "schema {k}: read-back structure differs");
        for t in &schema.tables {
            ensure!(back.table(&t.name).unwrap().sample_rows == t.sample_rows, "schema {k}: rows of {} differ", t.name);
        }

        // Close a cycle: a self-loop, or a back edge from an ancestor.
        let mut cyclic = schema.clone();
        let child = order[rng.random_range(0..order.len())].clone();
        let parents: Vec<String> = cyclic.table(&child).unwrap().foreign_keys.iter().map(|f| f.references_table.clone()).collect();
        let (from, to) = match parents.choose(&mut rng) {
            Some(p) if rng.random_bool(0.7) => (p.clone(), child.clone()),
            _ => (child.clone(), child.clone()),
        };
        let t = cyclic.table_mut(&from).unwrap();
        t.columns.push(col("back", DataType::Integer, true));
        t.foreign_keys.push(ForeignKey {
            columns: vec!["back".into()],
            references_table: to,
            references_columns: vec!["id".into()],
        });
        let err = match initialize_database(&cyclic, &dir.path().join(format!("{k}-cyclic.sqlite"))) {
            Err(taxsql_core::forge::ForgeError::Cycle(e)) => e,
            other => return Err(format!("schema {k}: cycle not reported ({other:?})")),
        };
        ensure!(err.cycle.len() >= 2 && err.cycle.first() == err.cycle.last(), "schema {k}: malformed cycle {:?}", err.cycle);
        for w in err.cycle.windows(2) {
            ensure!(references(&cyclic, &w[0], &w[1]), "schema {k}: {} does not reference {}", w[0], w[1]);
        }
        cycles += 1;
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("100 schemas initialized and read back, {cycles} injected cycles named, {elapsed:?}"))
}

fn ex_semantics() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let t = Duration::from_secs(10);
    let golds: Vec<String> = read_lines(&root().join("data/mini_corpus.jsonl")).iter().map(|v| v["sql"].as_str().unwrap().to_string()).collect();
    ensure!(golds.len() >= 50, "only {} corpus queries", golds.len());
    let reflexive = golds.iter().map(|g| execution_match(g, g, &db, t).map(|m| m.score as usize)).sum::<Result<usize, _>>().map_err(|e| e.to_string())?;
    let reflexivity = reflexive as f64 / golds.len() as f64;
    ensure!(reflexivity == 1.0, "reflexivity {reflexivity}");
    let unordered = execution_match("SELECT name FROM products ORDER BY name DESC", "SELECT name FROM products", &db, t).unwrap().score;
    let update = execution_match(
        "UPDATE products SET stock = stock + 1 WHERE stock > 0",
        "UPDATE products SET stock = stock + 1",
        &db,
        t,
    )
    .unwrap()
    .score;
    ensure!(unordered == 1 && update == 0, "order-insensitive {unordered}, divergent update {update}");
    let suite = read_lines(&root().join("data/fixtures/ex_suite.jsonl"));
    let pairs: Vec<EvalPair> = suite
        .iter()
        .map(|c| EvalPair {
            id: c["id"].as_str().unwrap().into(),
            pred: c["pred"].as_str().unwrap().into(),
            gold: c["gold"].as_str().unwrap().into(),
            db: db.clone(),
            labels: None,
        })
        .collect();
    let report = execution_accuracy(&pairs, None, t).map_err(|e| e.to_string())?;
    ensure!(report.accuracy == 0.65, "suite EX {}", report.accuracy);
    Ok(format!(
        "reflexivity {reflexivity:.2} over {} queries; order-insensitive 1; divergent UPDATE 0; suite EX {:.2} ({}/{})",
        golds.len(),
        report.accuracy,
        report.matched,
        report.total
    ))
}

fn random_full_labels(rng: &mut ChaCha8Rng) -> TaxonomyLabels {
    let ss: Vec<S> = S::ALL.iter().copied().filter(|_| rng.random_bool(0.2)).collect();
    let ka: Vec<K> = K::ALL.iter().copied().filter(|_| rng.random_bool(0.2)).collect();
    TaxonomyLabels::new(*I::ALL.choose(rng).unwrap(), *T::ALL.choose(rng).unwrap(), ss, ka)
}

/// Category names of a label tuple, built from each dimension's display.
fn names(l: &TaxonomyLabels) -> BTreeSet<String> {
    let mut out = BTreeSet::from([l.core_intent.to_string(), l.statement_type.to_string()]);
    out.extend(l.syntax_structures.iter().map(|s| s.to_string()));
    out.extend(l.key_actions.iter().map(|k| k.to_string()));
    out
}

fn jaccard_retrieval() -> Outcome {
    let universe = I::ALL.len() + T::ALL.len() + S::ALL.len() + K::ALL.len();
    ensure!(universe == 42, "{universe} category names");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ties = 0;
    for round in 0..1000 {
        let n = rng.random_range(0..30);
        let records: Vec<LabeledPair> = (0..n)
            .map(|i| {
                // Repeats make ties common.
                let labels = if i > 0 && rng.random_bool(0.3) { random_full_labels(&mut ChaCha8Rng::seed_from_u64(round)) } else { random_full_labels(&mut rng) };
                LabeledPair {
                    id: format!("r{i}"),
                    db_id: String::new(),
                    question: String::new(),
                    sql: String::new(),
                    labels,
                    complexity: ComplexityLevel::Simple,
                }
            })
            .collect();
        let combo = Combination {
            labels: random_full_labels(&mut rng),
            complexity_level: ComplexityLevel::Simple,
            complexity_score: 0,
        };
        let target = names(&combo.labels);
        let mut scored: Vec<(usize, usize, usize)> = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let other = names(&r.labels);
                let inter = target.iter().filter(|x| other.contains(*x)).count();
                (inter, target.len() + other.len() - inter, i)
            })
            .collect();
        // Exact rational comparison, then corpus order.
        scored.sort_by(|a, b| (b.0 * a.1).cmp(&(a.0 * b.1)).then(a.2.cmp(&b.2)));
        ties += scored.windows(2).filter(|w| w[0].0 * w[1].1 == w[1].0 * w[0].1).count();
        let want: Vec<&str> = scored.iter().take(5).map(|s| records[s.2].id.as_str()).collect();
        let got: Vec<&str> = retrieve_blueprints(&combo, &records, 5).iter().map(|r| r.id.as_str()).collect();
        ensure!(got == want, "round {round}: {got:?} vs {want:?}");
    }
    Ok(format!("1000 corpora over 42 names, k = 5, {ties} tied neighbours ordered by corpus position"))
}

fn valid_oracle(l: &TaxonomyLabels) -> bool {
    let dml = [T::Insert, T::Update, T::Delete].contains(&l.statement_type);
    let (ss, ka) = (&l.syntax_structures, &l.key_actions);
    (l.core_intent == I::DataChange) == dml
        && (l.core_intent == I::StructureChange) == (l.statement_type == T::Alter)
        && ([I::DataChange, I::StructureChange].contains(&l.core_intent) || l.statement_type == T::Select)
        && (!ss.contains(&S::Having) || ss.contains(&S::GroupBy))
        && (l.core_intent != I::SetOperation || [S::Union, S::Intersect, S::Except].iter().any(|s| ss.contains(s)))
        && (l.core_intent != I::SortingAndPagination || ss.contains(&S::OrderBy) || ss.contains(&S::LimitOffset))
        && (![I::TimeOperation, I::TrendAnalysis].contains(&l.core_intent) || ka.contains(&K::SpecificTime) || ka.contains(&K::TimeFunction))
        && (l.statement_type != T::Alter || (ss.is_empty() && ka.iter().all(|a| *a == K::Cast)))
}

fn subsets<X: Copy>(items: &[X], cap: usize) -> Vec<Vec<X>> {
    (0u32..1 << items.len())
        .filter(|m| m.count_ones() as usize <= cap)
        .map(|m| (0..items.len()).filter(|i| m & (1 << i) != 0).map(|i| items[i]).collect())
        .collect()
}

fn enumeration() -> Outcome {
    let intents = vec![I::BasicQuery, I::SortingAndPagination, I::SetOperation, I::TimeOperation, I::DataChange, I::StructureChange];
    let types = vec![T::Select, T::Insert, T::Alter];
    let structures = vec![S::Where, S::OrderBy, S::GroupBy, S::Having, S::Union, S::LimitOffset];
    let actions = vec![K::Cast, K::SpecificTime, K::TimeFunction, K::AggregateFunction];
    let cfg = EnumerationConfig {
        max_structures: 2,
        max_actions: 2,
        ceiling: 5_000,
        restrict: Restriction {
            core_intents: Some(intents.clone()),
            statement_types: Some(types.clone()),
            syntax_structures: Some(structures.clone()),
            key_actions: Some(actions.clone()),
        },
    };
    let mut want = BTreeSet::new();
    let mut candidates = 0;
    for &i in &intents {
        for &t in &types {
            for ss in subsets(&structures, 2) {
                for ka in subsets(&actions, 2) {
                    candidates += 1;
                    let l = TaxonomyLabels::new(i, t, ss.clone(), ka);
                    if valid_oracle(&l) {
                        want.insert(l);
                    }
                }
            }
        }
    }
    ensure!(candidates <= 5_000, "{candidates} candidates");
    let got = enumerate_combinations(&ComplexityConfig::default(), &RuleToggles::default(), &cfg).map_err(|e| e.to_string())?;
    let got_set: BTreeSet<TaxonomyLabels> = got.iter().map(|c| c.labels.clone()).collect();
    ensure!(got_set.len() == got.len(), "duplicate combinations");
    ensure!(got_set == want, "{} emitted vs {} brute force", got_set.len(), want.len());
    let violating = got.iter().filter(|c| !validate_combination(&c.labels).is_valid() || !valid_oracle(&c.labels)).count();
    ensure!(violating == 0, "{violating} emitted combinations violate the rules");
    Ok(format!("{candidates} candidates, {} valid, emitted set equal, 0 violations", want.len()))
}

fn sentence(rng: &mut ChaCha8Rng, vocab: usize) -> String {
    (0..rng.random_range(1..8)).map(|_| format!("w{}", rng.random_range(0..vocab))).collect::<Vec<_>>().join(" ")
}

fn diversity_metrics() -> Outcome {
    let fixture = ttr(&["list all all users"]).map_err(|e| e.to_string())?;
    ensure!(fixture == 0.75, "fixture TTR {fixture}");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let corpus: Vec<String> = (0..10).map(|_| sentence(&mut rng, 25)).collect();
        let mut dup = corpus.clone();
        dup.push(corpus[rng.random_range(0..10)].clone());
        ensure!(ttr(&dup).unwrap() < ttr(&corpus).unwrap(), "duplicate did not lower TTR");
    }
    let e = HashedBagOfWords { dim: 1024 };
    let same = vec!["how many stores are there".to_string(); 6];
    let apart: Vec<String> = ["alpha", "bravo", "charlie", "delta", "echo"].map(String::from).to_vec();
    let two: Vec<String> = ["list stores in north", "list the stores in north", "average product price", "average price of product"]
        .map(String::from)
        .to_vec();
    let counts = (
        semantic_clusters(&same, &e, 0.8).unwrap(),
        semantic_clusters(&apart, &e, 0.8).unwrap(),
        semantic_clusters(&two, &e, 0.7).unwrap(),
    );
    ensure!(counts == (1, 5, 2), "cluster fixtures gave {counts:?}");
    for _ in 0..100 {
        let corpus: Vec<String> = (0..rng.random_range(2..30)).map(|_| sentence(&mut rng, 10)).collect();
        let v = e.embed(&corpus).unwrap();
        let mut last = 0;
        for t in [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 1.0] {
            let mut l = cluster_labels(&v, t).unwrap();
            l.sort();
            l.dedup();
            ensure!(l.len() >= last, "clusters fell from {last} to {} at threshold {t}", l.len());
            last = l.len();
        }
    }
    Ok(format!("TTR fixture {fixture}; duplicates lower TTR; clusters {counts:?}; monotone over 100 corpora"))
}

fn run_cli(out: &Path, extra: &[&str]) -> Result<Duration, String> {
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_taxsql"))
        .args(["--config", root().join("config/mini.toml").to_str().unwrap()])
        .args(["--provider", "mock", "--seed", "7", "--out", out.to_str().unwrap(), "pipeline"])
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok(started.elapsed())
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn without_timestamps(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).unwrap();
    let m = v.as_object_mut().unwrap();
    m.remove("started_at");
    m.remove("finished_at");
    v
}

fn diversity_ttr(dir: &Path) -> f64 {
    let v: Value = serde_json::from_slice(&std::fs::read(dir.join("reports/diversity.json")).unwrap()).unwrap();
    v["ttr"].as_f64().unwrap()
}

fn end_to_end(work: &Path) -> Outcome {
    let (a, b) = (work.join("run-a"), work.join("run-b"));
    let ta = run_cli(&a, &[])?;
    let tb = run_cli(&b, &[])?;
    let manifest: Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let counter = |k: &str| manifest["counters"][k].as_u64().unwrap_or(0);
    ensure!(counter("combinations") >= 30, "{} combinations", counter("combinations"));
    ensure!(counter("databases") >= 20, "{} databases", counter("databases"));

    let (fa, fb) = (files_under(&a), files_under(&b));
    ensure!(fa.keys().eq(fb.keys()), "runs produced different file sets");
    let differing: Vec<String> = fa
        .iter()
        .filter(|(p, bytes)| {
            if p.as_os_str() == "manifest.json" {
                without_timestamps(bytes) != without_timestamps(&fb[*p])
            } else {
                **bytes != fb[*p]
            }
        })
        .map(|(p, _)| p.display().to_string())
        .collect();
    ensure!(differing.is_empty(), "files differ between runs: {differing:?}");

    let cfg = PipelineConfig::load(&root().join("config/mini.toml")).map_err(|e| e.to_string())?;
    let analysis = cfg.analysis().map_err(|e| e.to_string())?;
    let records: Vec<DatasetRecord> = read_lines(&a.join("dataset.jsonl")).into_iter().map(|v| serde_json::from_value(v).unwrap()).collect();
    ensure!(records.len() >= 200, "{} records", records.len());
    let mut failures = Vec::new();
    for r in &records {
        let db = a.join("databases").join(format!("{}.sqlite", r.db_id));
        if let Err(e) = exec::check(&db, &r.sql, cfg.timeout()) {
            failures.push(format!("{}: {e}", r.id));
            continue;
        }
        match classify_pair(&r.question, &r.sql, Dialect::Sqlite, IntentMode::Heuristic, &analysis, &cfg.taxonomy.rules) {
            Ok(c) if c.labels == r.labels && cfg.taxonomy.complexity_of(&c.labels).map(|x| x.1).ok() == Some(r.complexity) => {}
            Ok(c) => failures.push(format!("{}: re-classified as {}", r.id, c.labels)),
            Err(e) => failures.push(format!("{}: {e}", r.id)),
        }
    }
    ensure!(failures.is_empty(), "{} of {} records fail: {:?}", failures.len(), records.len(), &failures[..failures.len().min(5)]);
    let slowest = ta.max(tb);
    ensure!(slowest < Duration::from_secs(300), "run took {slowest:?}");
    Ok(format!(
        "{} combinations, {} databases, {} records all re-execute and re-classify; runs byte-identical; slowest run {slowest:.1?}",
        counter("combinations"),
        counter("databases"),
        records.len()
    ))
}

fn ablation(work: &Path) -> Outcome {
    let both = work.join("run-a");
    if !both.join("reports/diversity.json").exists() {
        run_cli(&both, &[])?;
    }
    let sql_only = work.join("run-sql");
    run_cli(&sql_only, &["--paths", "sql"])?;
    let (t_both, t_sql) = (diversity_ttr(&both), diversity_ttr(&sql_only));
    ensure!(t_sql < t_both, "TTR with both paths {t_both:.4}, SQL-oriented only {t_sql:.4}");
    Ok(format!(
        "TTR both paths {t_both:.4} > SQL-oriented only {t_sql:.4} ({:.1}% lower)",
        100.0 * (t_both - t_sql) / t_both
    ))
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().unwrap();
    let w = work.path().to_path_buf();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("detector fidelity", Box::new(detector_fidelity)),
        ("coverage math", Box::new(coverage_math)),
        ("quality aggregate", Box::new(quality_oracle)),
        ("topological initialization", Box::new(topological_init)),
        ("execution accuracy", Box::new(ex_semantics)),
        ("jaccard retrieval", Box::new(jaccard_retrieval)),
        ("offline pipeline", Box::new({
            let w = w.clone();
            move || end_to_end(&w)
        })),
        ("combination enumeration", Box::new(enumeration)),
        ("diversity metrics", Box::new(diversity_metrics)),
        ("dual-path ablation", Box::new(move || ablation(&w))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
