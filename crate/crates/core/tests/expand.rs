mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use proptest::prelude::*;
use serde_json::json;

use common::{retail, root, scripted, templates};
use taxsql_core::exec;
use taxsql_core::expand::{
    expand_seeds, generate_knowledge, sample_databases, DatasetRecord, ExpansionConfig, GenerationPath, KnowledgeKind, Provenance,
};
use taxsql_core::forge::{forge_pool, load_source_tables, DatabasePool, ForgeConfig};
use taxsql_core::gateway::{Gateway, TemplateName, MISMATCH_MARKER};
use taxsql_core::seed::{label_pairs, load_pairs, IntentSource, SeedRecord, SeedStatus, Synth};
use taxsql_core::sql::AnalysisConfig;
use taxsql_core::taxonomy::TaxonomyConfig;

proptest! {
    #[test]
    fn sampling_is_without_replacement(n in 0usize..60, k in 0usize..80, run in any::<u64>(), seed in "[a-z0-9]{1,8}") {
        for path in GenerationPath::ALL {
            let s = sample_databases(n, k, run, &seed, path);
            prop_assert_eq!(s.len(), k.min(n));
            prop_assert!(s.iter().all(|&i| i < n));
            prop_assert_eq!(s.iter().collect::<BTreeSet<_>>().len(), s.len());
            prop_assert_eq!(&s, &sample_databases(n, k, run, &seed, path));
        }
    }
}

#[test]
fn paths_draw_independent_samples() {
    let a = sample_databases(50, 10, 7, "seed-x", GenerationPath::SqlOriented);
    let b = sample_databases(50, 10, 7, "seed-x", GenerationPath::QuestionOriented);
    assert_ne!(a, b);
}

struct Fixture {
    _dir: tempfile::TempDir,
    pool: DatabasePool,
    seeds: Vec<SeedRecord>,
}

fn fixture(gateway: &Gateway, synth: &Synth<'_>) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let sources = load_source_tables(&root().join("data/source_tables.jsonl")).unwrap();
    let (pool, _) = forge_pool(&sources[..6], gateway, &ForgeConfig::default(), &dir.path().join("pool")).unwrap();
    let raw = load_pairs(&root().join("data/mini_corpus.jsonl")).unwrap();
    let (pairs, _) = label_pairs(&raw, synth);
    let seeds = pairs
        .iter()
        .step_by(5)
        .map(|p| SeedRecord {
            id: format!("seed-{}", p.id),
            db_id: p.db_id.clone(),
            question: p.question.clone(),
            sql: p.sql.clone(),
            labels: p.labels.clone(),
            complexity: p.complexity,
            status: SeedStatus::Reused,
            blueprint_ids: vec![p.id.clone()],
            call_ids: vec![],
        })
        .collect();
    Fixture { _dir: dir, pool, seeds }
}

fn quoted(text: &str) -> Vec<String> {
    text.split('\'').skip(1).step_by(2).chain(text.split('"').skip(1).step_by(2)).map(str::to_string).collect()
}

#[test]
fn emitted_records_pass_every_gate() {
    let gateway = Gateway::mock(templates());
    let taxonomy = TaxonomyConfig::default();
    let analysis = AnalysisConfig::default();
    let synth = Synth {
        gateway: &gateway,
        taxonomy: &taxonomy,
        analysis: &analysis,
        intent: IntentSource::Heuristic,
        timeout: Duration::from_secs(10),
    };
    let fx = fixture(&gateway, &synth);
    let cfg = ExpansionConfig {
        databases: 4,
        ..ExpansionConfig::default()
    };
    let out = expand_seeds(&fx.seeds, &fx.pool, &synth, &cfg, 7).unwrap();
    let items = fx.seeds.len() * 2 * cfg.databases.min(fx.pool.len());
    assert_eq!(out.records.len() + out.quarantined.len() + out.skipped.len(), items);
    assert!(!out.records.is_empty());
    let counts = out.path_counts();
    assert_eq!(counts.iter().map(|c| c.1).sum::<usize>(), out.records.len());
    assert!(counts.iter().all(|c| c.1 > 0), "{counts:?}");

    let calls = gateway.calls();
    let template_of = |id: &str| calls.iter().find(|c| c.call_id == id).map(|c| c.template);
    let mut knowledge_seen = 0;
    for r in &out.records {
        let db = fx.pool.get(&r.db_id).unwrap();
        exec::check(&db.path, &r.sql, Duration::from_secs(10)).unwrap();
        let (labels, level, _) = synth.classify(&r.question, &r.sql).unwrap();
        assert_eq!((&labels, level), (&r.labels, r.complexity), "{}", r.id);
        assert!(!r.question.contains(MISMATCH_MARKER));

        let templates: Vec<TemplateName> = r.provenance.call_ids.iter().map(|id| template_of(id).expect("call resolves")).collect();
        let first_two = match r.provenance.path {
            GenerationPath::SqlOriented => [TemplateName::SqlGeneration, TemplateName::QuestionGeneration],
            GenerationPath::QuestionOriented => [TemplateName::QuestionGeneration, TemplateName::SqlGeneration],
        };
        assert_eq!(templates[..2], first_two, "{}", r.id);
        let verdicts: Vec<&str> = r
            .provenance
            .call_ids
            .iter()
            .filter_map(|id| calls.iter().find(|c| &c.call_id == id))
            .filter(|c| c.template == TemplateName::SemanticValidation)
            .map(|c| c.response.as_str())
            .collect();
        assert!(!verdicts.is_empty());
        assert!(verdicts.last().unwrap().contains("\"consistent\""), "{verdicts:?}");

        let sample = fx.seeds.iter().find(|s| s.id == r.provenance.seed_id).unwrap();
        let picks = sample_databases(fx.pool.len(), cfg.databases, 7, &sample.id, r.provenance.path);
        assert_eq!(fx.pool.entries[picks[r.provenance.db_position]].schema.id, r.db_id);

        let mut known = db.schema.content_strings();
        known.extend(quoted(&r.sql));
        for k in &r.knowledge {
            knowledge_seen += 1;
            if k.kind == KnowledgeKind::ValueMapping {
                assert!(quoted(&k.text).iter().any(|q| known.contains(q)), "{}: {}", r.id, k.text);
            }
        }
    }
    assert!(knowledge_seen > 0);
    for q in &out.quarantined {
        assert!(!q.reasons.is_empty());
        assert!(q.reasons.iter().all(|m| m.starts_with("execution:") || m.starts_with("semantic:")), "{:?}", q.reasons);
    }
    let marked = out.quarantined.iter().filter(|q| q.record.question.contains(MISMATCH_MARKER)).count();
    assert!(marked > 0);

    let pairs: BTreeSet<(&str, &str)> = out.records.iter().map(|r| (r.question.as_str(), r.sql.as_str())).collect();
    assert_eq!(pairs.len(), out.records.len());
}

#[test]
fn single_path_only_produces_that_path() {
    let gateway = Gateway::mock(templates());
    let taxonomy = TaxonomyConfig::default();
    let analysis = AnalysisConfig::default();
    let synth = Synth {
        gateway: &gateway,
        taxonomy: &taxonomy,
        analysis: &analysis,
        intent: IntentSource::Heuristic,
        timeout: Duration::from_secs(10),
    };
    let fx = fixture(&gateway, &synth);
    let cfg = ExpansionConfig {
        databases: 3,
        paths: vec![GenerationPath::QuestionOriented],
        ..ExpansionConfig::default()
    };
    let out = expand_seeds(&fx.seeds, &fx.pool, &synth, &cfg, 7).unwrap();
    assert!(!out.records.is_empty());
    assert!(out.records.iter().all(|r| r.provenance.path == GenerationPath::QuestionOriented));
}

#[test]
fn inconsistent_verdicts_quarantine_everything() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let gateway = scripted(|r| match r.template {
        TemplateName::SqlGeneration => json!({"sql": "SELECT name FROM stores WHERE region = 'North'"}).to_string(),
        TemplateName::QuestionGeneration => json!({"question": "Which stores are in the North region?"}).to_string(),
        TemplateName::SemanticValidation => json!({"verdict": "inconsistent", "reason": "wrong table"}).to_string(),
        other => panic!("unexpected {other}"),
    });
    let taxonomy = TaxonomyConfig::default();
    let analysis = AnalysisConfig::default();
    let synth = Synth {
        gateway: &gateway,
        taxonomy: &taxonomy,
        analysis: &analysis,
        intent: IntentSource::Heuristic,
        timeout: Duration::from_secs(10),
    };
    let (labels, complexity, _) = synth.classify("List stores", "SELECT name FROM stores").unwrap();
    let seed = SeedRecord {
        id: "s".into(),
        db_id: "retail".into(),
        question: "List stores".into(),
        sql: "SELECT name FROM stores".into(),
        labels,
        complexity,
        status: SeedStatus::Reused,
        blueprint_ids: vec![],
        call_ids: vec![],
    };
    let pool = DatabasePool { entries: vec![db] };
    let cfg = ExpansionConfig {
        databases: 1,
        semantic_retries: 1,
        ..ExpansionConfig::default()
    };
    let out = expand_seeds(&[seed], &pool, &synth, &cfg, 1).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(out.quarantined.len(), 2);
    for q in &out.quarantined {
        assert_eq!(q.reasons, ["semantic: wrong table"]);
        let validations = gateway
            .calls()
            .into_iter()
            .filter(|c| c.template == TemplateName::SemanticValidation && q.record.provenance.call_ids.contains(&c.call_id))
            .count();
        assert_eq!(validations, 2);
    }
}

#[test]
fn ungrounded_knowledge_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let db = retail(dir.path());
    let gateway = scripted(|_| {
        json!({"knowledge": [
            {"kind": "value_mapping", "text": "'North' is the northern region"},
            {"kind": "value_mapping", "text": "'Atlantis' is a region"},
            {"kind": "numeric_calculation", "text": "total is price times quantity"},
            {"kind": "value_mapping", "text": "  "}
        ]})
        .to_string()
    });
    let taxonomy = TaxonomyConfig::default();
    let analysis = AnalysisConfig::default();
    let synth = Synth {
        gateway: &gateway,
        taxonomy: &taxonomy,
        analysis: &analysis,
        intent: IntentSource::Heuristic,
        timeout: Duration::from_secs(10),
    };
    let (labels, complexity, _) = synth.classify("q", "SELECT name FROM stores WHERE region = 'North'").unwrap();
    let record = DatasetRecord {
        id: "r".into(),
        db_id: "retail".into(),
        question: "Which stores are in the North region?".into(),
        sql: "SELECT name FROM stores WHERE region = 'North'".into(),
        knowledge: vec![],
        labels,
        complexity,
        provenance: Provenance {
            seed_id: "s".into(),
            path: GenerationPath::SqlOriented,
            db_position: 0,
            run_seed: 0,
            call_ids: vec![],
        },
    };
    let (items, id) = generate_knowledge(&record, &db.schema, &synth);
    assert!(id.is_some());
    let texts: Vec<&str> = items.iter().map(|k| k.text.as_str()).collect();
    assert_eq!(texts, ["'North' is the northern region"]);
}
