mod common;

use std::collections::HashMap;
use std::time::Duration;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use common::{retail, root, scripted, templates};
use taxsql_core::eval::{
    aggregate_quality, cluster_labels, corpus_stats, cosine, execution_accuracy, execution_match, join_predictions, load_predictions,
    quality_from_counts, quality_judge, quality_report, semantic_clusters, ttr, word_tokens, Breakdown, Criterion, Embedder, EvalError,
    EvalPair, HashedBagOfWords, QualityLevel,
};
use taxsql_core::gateway::Gateway;
use taxsql_core::sql::AnalysisConfig;
use taxsql_core::taxonomy::classify_pair_default;

const T: Duration = Duration::from_secs(10);

#[test]
fn mini_corpus_is_reflexive() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let text = std::fs::read_to_string(root().join("data/mini_corpus.jsonl")).unwrap();
    let golds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["sql"].as_str().unwrap().to_string())
        .collect();
    assert!(golds.len() >= 50);
    for g in &golds {
        assert_eq!(execution_match(g, g, &db.path, T).unwrap().score, 1, "{g}");
    }
}

#[test]
fn unordered_gold_ignores_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let m = execution_match("SELECT name FROM products ORDER BY name DESC", "SELECT name FROM products", &db.path, T).unwrap();
    assert_eq!(m.score, 1);
    let m = execution_match("SELECT name FROM products", "SELECT name FROM products ORDER BY price", &db.path, T).unwrap();
    assert_eq!(m.score, 0);
}

#[test]
fn update_touching_fewer_rows_differs() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let gold = "UPDATE products SET stock = stock + 1";
    let pred = "UPDATE products SET stock = stock + 1 WHERE stock > 0";
    let m = execution_match(pred, gold, &db.path, T).unwrap();
    assert_eq!(m.score, 0);
    assert!(m.detail.unwrap().contains("products"));
    let before = std::fs::read(&db.path).unwrap();
    execution_match(gold, gold, &db.path, T).unwrap();
    assert_eq!(std::fs::read(&db.path).unwrap(), before, "evaluation must not touch the original");
}

#[test]
fn failing_gold_is_an_error_and_failing_pred_a_miss() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    assert!(matches!(
        execution_match("SELECT 1", "SELECT nope FROM stores", &db.path, T),
        Err(EvalError::GoldFailure { .. })
    ));
    let m = execution_match("SELECT nope FROM stores", "SELECT 1", &db.path, T).unwrap();
    assert_eq!(m.score, 0);
    assert!(m.detail.unwrap().starts_with("prediction failed"));
}

#[derive(Deserialize)]
struct ExCase {
    id: String,
    gold: String,
    pred: String,
    expected: u8,
    why: String,
}

fn ex_suite() -> Vec<ExCase> {
    let text = std::fs::read_to_string(root().join("data/fixtures/ex_suite.jsonl")).unwrap();
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn ex_suite_scores_as_labeled() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let cases = ex_suite();
    assert_eq!(cases.len(), 20);
    let pairs: Vec<EvalPair> = cases
        .iter()
        .map(|c| EvalPair {
            id: c.id.clone(),
            pred: c.pred.clone(),
            gold: c.gold.clone(),
            db: db.path.clone(),
            labels: Some(classify_pair_default(&c.why, &c.gold).unwrap().labels),
        })
        .collect();
    let report = execution_accuracy(&pairs, Some(Breakdown::StatementType), T).unwrap();
    for (c, (id, r)) in cases.iter().zip(&report.results) {
        assert_eq!(&c.id, id);
        assert_eq!(r.score, c.expected, "{}: {} ({:?})", c.id, c.why, r.detail);
    }
    assert!((report.accuracy - 0.65).abs() < 1e-12, "{}", report.accuracy);
    let (m, t) = report.breakdown.values().fold((0, 0), |(m, t), g| (m + g.matched, t + g.total));
    assert_eq!((m, t), (report.matched, report.total));
    assert!(report.breakdown.len() >= 3);

    let by_structure = execution_accuracy(&pairs, Some(Breakdown::SyntaxStructure), T).unwrap();
    assert_eq!(by_structure.accuracy, report.accuracy);
    for g in by_structure.breakdown.values() {
        assert_eq!(g.accuracy, g.matched as f64 / g.total as f64);
    }
}

#[test]
fn predictions_join_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let lines = dir.path().join("p.jsonl");
    std::fs::write(&lines, "{\"id\": \"a\", \"sql\": \"SELECT 1\"}\n\n{\"id\": \"b\", \"pred\": \"SELECT 2\"}\n").unwrap();
    let preds = load_predictions(&lines).unwrap();
    assert_eq!(join_predictions(["b", "a"], &preds).unwrap(), ["SELECT 2", "SELECT 1"]);
    assert_eq!(join_predictions(["a", "c"], &preds), Err(EvalError::MissingPrediction("c".into())));
    let object = dir.path().join("p.json");
    std::fs::write(&object, r#"{"a": "SELECT 3"}"#).unwrap();
    assert_eq!(load_predictions(&object).unwrap()["a"], "SELECT 3");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn insertion_order_does_not_change_state(
        rows in proptest::collection::vec((0i64..5, prop_oneof![Just(None), (0i64..100).prop_map(Some)], "[a-c]{0,2}"), 1..8),
        rot in 0usize..8,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sqlite");
        let conn = rusqlite::Connection::open(&path).unwrap();
        conn.execute("CREATE TABLE t (k INTEGER, v REAL, s TEXT)", []).unwrap();
        conn.execute("INSERT INTO t VALUES (9, 1.5, 'z')", []).unwrap();
        drop(conn);
        let values = |rs: &[(i64, Option<i64>, String)], real: bool| {
            rs.iter()
                .map(|(k, v, s)| {
                    let v = match (v, real) {
                        (None, _) => "NULL".to_string(),
                        (Some(v), true) => format!("{v}.0"),
                        (Some(v), false) => v.to_string(),
                    };
                    format!("({k}, {v}, '{s}')")
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut shuffled = rows.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        let gold = format!("INSERT INTO t VALUES {}", values(&rows, false));
        let pred = format!("INSERT INTO t VALUES {}", values(&shuffled, true));
        prop_assert_eq!(execution_match(&pred, &gold, &path, T).unwrap().score, 1);
        if n > 1 {
            let fewer = format!("INSERT INTO t VALUES {}", values(&rows[1..], false));
            prop_assert_eq!(execution_match(&fewer, &gold, &path, T).unwrap().score, 0);
        }
        let dup = format!("INSERT INTO t VALUES {}, {}", values(&rows, false), values(&rows[..1], false));
        prop_assert_eq!(execution_match(&dup, &gold, &path, T).unwrap().score, 0);
    }
}

/// Weighted mean of levels computed from explicit counts.
fn weighted_mean_oracle(counts: [usize; 4]) -> f64 {
    let n: usize = counts.iter().sum();
    (counts[0] as f64 + 0.75 * counts[1] as f64 + 0.5 * counts[2] as f64 + 0.25 * counts[3] as f64) / n as f64
}

#[test]
fn quality_aggregate_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let len = rng.random_range(1..40);
        let levels: Vec<QualityLevel> = (0..len).map(|_| QualityLevel::ALL[rng.random_range(0..4)]).collect();
        let mut counts = [0usize; 4];
        for l in &levels {
            counts[QualityLevel::ALL.iter().position(|x| x == l).unwrap()] += 1;
        }
        let q = aggregate_quality(&levels).unwrap();
        assert!((q - weighted_mean_oracle(counts)).abs() < 1e-12);
        assert!((q - quality_from_counts(counts).unwrap()).abs() < 1e-12);
        assert!((0.25..=1.0).contains(&q));
    }
    assert_eq!(aggregate_quality(&[QualityLevel::Excellent; 7]).unwrap(), 1.0);
    assert_eq!(aggregate_quality(&[QualityLevel::Poor; 7]).unwrap(), 0.25);
    assert_eq!(aggregate_quality(&[]), Err(EvalError::EmptyGroup));
    assert_eq!("good".parse::<QualityLevel>().unwrap(), QualityLevel::Good);
}

fn judge_answer(skip: Option<Criterion>, level: &str) -> String {
    let verdicts: Vec<_> = Criterion::ALL
        .into_iter()
        .filter(|c| Some(*c) != skip)
        .map(|c| json!({"criterion": c.name(), "level": level, "explanation": "checked"}))
        .collect();
    json!({ "verdicts": verdicts }).to_string()
}

#[test]
fn mock_judge_returns_every_criterion() {
    let gateway = Gateway::mock(templates());
    let v = quality_judge("r1", "How many stores are there?", "SELECT COUNT(*) FROM stores", "{}", &gateway).unwrap();
    let names: Vec<&str> = v.iter().map(|x| x.criterion.name()).collect();
    assert_eq!(names, Criterion::ALL.map(|c| c.name()));
    assert!(v.iter().all(|x| !x.explanation.is_empty()));
    let report = quality_report(&[v.clone(), v]).unwrap();
    assert_eq!(report.records, 2);
    assert_eq!(report.scores.len(), 10);
}

#[test]
fn judge_asks_again_for_missing_criteria() {
    let gateway = scripted(|r| {
        if r.bindings["criteria"].lines().count() == 10 {
            judge_answer(Some(Criterion::ALL[3]), "Good")
        } else {
            assert_eq!(r.bindings["criteria"].lines().count(), 1);
            judge_answer(None, "Poor")
        }
    });
    let v = quality_judge("r", "q", "SELECT 1", "{}", &gateway).unwrap();
    assert_eq!(v.len(), 10);
    assert_eq!(v[3].level, QualityLevel::Poor);
    assert_eq!(v[0].level, QualityLevel::Good);
}

#[test]
fn judge_reports_a_criterion_never_answered() {
    let gateway = scripted(|_| judge_answer(Some(Criterion::ALL[9]), "Average"));
    match quality_judge("r9", "q", "SELECT 1", "{}", &gateway) {
        Err(EvalError::MissingVerdict { id, criterion }) => {
            assert_eq!(id, "r9");
            assert_eq!(criterion, Criterion::ALL[9].name());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ttr_fixtures() {
    assert_eq!(ttr(&["list all all users"]).unwrap(), 0.75);
    assert_eq!(ttr(&["List ALL", "all, users."]).unwrap(), 0.75);
    assert_eq!(word_tokens("\"Hello,\" world!").collect::<Vec<_>>(), ["hello", "world"]);
    assert_eq!(ttr::<&str>(&[]), Err(EvalError::EmptyCorpus));
    assert_eq!(ttr(&["  ", "..."]), Err(EvalError::EmptyCorpus));
}

fn random_sentence(rng: &mut ChaCha8Rng, vocab: usize) -> String {
    let n = rng.random_range(1..8);
    (0..n).map(|_| format!("w{}", rng.random_range(0..vocab))).collect::<Vec<_>>().join(" ")
}

proptest! {
    #[test]
    fn ttr_falls_with_duplicates_and_ignores_order(seed in any::<u64>(), pick in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corpus: Vec<String> = (0..10).map(|_| random_sentence(&mut rng, 30)).collect();
        let base = ttr(&corpus).unwrap();
        prop_assert!(base > 0.0 && base <= 1.0);
        let mut dup = corpus.clone();
        dup.push(corpus[pick].clone());
        prop_assert!(ttr(&dup).unwrap() < base);
        corpus.reverse();
        prop_assert_eq!(ttr(&corpus).unwrap(), base);
    }
}

#[test]
fn cluster_fixtures() {
    let e = HashedBagOfWords { dim: 1024 };
    let same: Vec<String> = vec!["count the stores".into(); 5];
    assert_eq!(semantic_clusters(&same, &e, 0.8).unwrap(), 1);
    let apart: Vec<String> = ["alpha", "bravo", "charlie", "delta"].map(String::from).to_vec();
    assert_eq!(semantic_clusters(&apart, &e, 0.8).unwrap(), 4);
    let two: Vec<String> = [
        "list stores in north",
        "list the stores in north",
        "average product price",
        "average price of product",
    ]
    .map(String::from)
    .to_vec();
    assert_eq!(semantic_clusters(&two, &e, 0.7).unwrap(), 2);
    assert_eq!(cosine(&[0.0, 0.0], &[0.0, 0.0]), 1.0);
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 0.0]), 0.0);
}

/// Connected components by union-find over pairwise cosine edges.
fn components(v: &[Vec<f64>], threshold: f64) -> usize {
    let mut parent: Vec<usize> = (0..v.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let dot: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
            let na = v[i].iter().map(|a| a * a).sum::<f64>().sqrt();
            let nb = v[j].iter().map(|a| a * a).sum::<f64>().sqrt();
            if dot / (na * nb) >= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..v.len()).filter(|&i| find(&mut parent, i) == i).count()
}

#[test]
fn clusters_are_components_and_monotone_in_threshold() {
    let e = HashedBagOfWords { dim: 256 };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let n = rng.random_range(1..30);
        let corpus: Vec<String> = (0..n).map(|_| random_sentence(&mut rng, 12)).collect();
        let vectors = e.embed(&corpus).unwrap();
        let mut last = 0;
        for t in [0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 1.0] {
            let labels = cluster_labels(&vectors, t).unwrap();
            let mut distinct = labels.clone();
            distinct.sort();
            distinct.dedup();
            assert_eq!(distinct.len(), components(&vectors, t));
            for (i, l) in labels.iter().enumerate() {
                assert!(*l <= i, "label is the smallest member index");
            }
            assert!(distinct.len() >= last);
            last = distinct.len();
        }
    }
}

#[test]
fn corpus_stats_example() {
    let cfg = AnalysisConfig::default();
    let s = corpus_stats([("q1", "db", "SELECT a FROM t JOIN u ON t.k = u.k")], &cfg).unwrap();
    assert_eq!((s.sql_count, s.databases, s.tables, s.joins), (1, 1, 2, 1));
    assert_eq!(s.tables_per_sql, 2.0);
    let s = corpus_stats(
        [
            ("q1", "a", "SELECT COUNT(*) FROM t"),
            ("q2", "b", "WITH c AS (SELECT 1 AS x) SELECT x FROM c"),
            ("q3", "a", "SELECT ROW_NUMBER() OVER (ORDER BY a) FROM t WHERE a IN (SELECT a FROM u)"),
        ],
        &cfg,
    )
    .unwrap();
    assert_eq!((s.databases, s.sql_count, s.ctes, s.window_functions, s.subqueries), (2, 3, 1, 1, 1));
    assert!(matches!(
        corpus_stats([("bad", "a", "SELEC nothing")], &cfg),
        Err(EvalError::Parse { id, .. }) if id == "bad"
    ));
    assert_eq!(corpus_stats(std::iter::empty(), &cfg), Err(EvalError::EmptyInput));
}

#[test]
fn hashed_embedding_is_deterministic() {
    let e = HashedBagOfWords { dim: 64 };
    let a = e.embed(&["same words here".to_string()]).unwrap();
    let b = e.embed(&["here words same".to_string()]).unwrap();
    assert_eq!(a, b);
    let counts: HashMap<usize, f64> = a[0].iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
    assert!(!counts.is_empty() && counts.len() <= 3);
}
