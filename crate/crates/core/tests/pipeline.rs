mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::{root, templates};
use taxsql_core::gateway::{bindings, call_id, Gateway, TemplateName};
use taxsql_core::pipeline::{run_pipeline, with_staged_dir, write_atomic, PipelineConfig, PipelineError, RunManifest};

fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&root().join("config/mini.toml")).unwrap();
    cfg.expansion.databases = 2;
    cfg
}

fn listing(dir: &Path) -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    out.sort();
    out
}

#[test]
fn atomic_write_leaves_only_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a/b.txt");
    write_atomic(&p, b"one").unwrap();
    write_atomic(&p, b"two").unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), b"two");
    assert_eq!(listing(&dir.path().join("a")), ["b.txt"]);
}

#[test]
fn staged_dir_is_promoted_only_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("old.txt"), "previous run").unwrap();

    let err = with_staged_dir(&out, |d| {
        std::fs::write(d.join("half.txt"), "x").unwrap();
        Err::<(), _>(PipelineError::Config("boom".into()))
    });
    assert!(err.is_err());
    assert_eq!(listing(&out), ["old.txt"]);
    assert_eq!(listing(dir.path()), ["run"]);

    with_staged_dir(&out, |d| {
        std::fs::write(d.join("new.txt"), "x").unwrap();
        Ok(())
    })
    .unwrap();
    assert_eq!(listing(&out), ["new.txt"]);
    assert_eq!(listing(dir.path()), ["run"]);
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.inputs.source_tables = dir.path().join("missing.jsonl");
    let gateway = Gateway::mock(templates());
    let out = dir.path().join("run");
    assert!(run_pipeline(&cfg, &gateway, &out).is_err());
    assert!(listing(dir.path()).is_empty(), "{:?}", listing(dir.path()));
}

#[test]
fn mock_gateway_is_deterministic() {
    let b = bindings([("question", "How many stores?"), ("sql", "SELECT COUNT(*) FROM stores"), ("schema", "{}")]);
    let a = Gateway::mock(templates()).complete(TemplateName::SemanticValidation, &b, "s").unwrap();
    let g = Gateway::mock(templates());
    let first = g.complete(TemplateName::SemanticValidation, &b, "s").unwrap();
    let again = g.complete(TemplateName::SemanticValidation, &b, "s").unwrap();
    assert_eq!(a, first);
    assert_eq!(first, again);
    assert_eq!(g.calls().len(), 1);
    assert_eq!(first.call_id, call_id("s", TemplateName::SemanticValidation, &first.prompt));
    let other = g.complete(TemplateName::SemanticValidation, &b, "t").unwrap();
    assert_ne!(other.call_id, first.call_id);
}

fn outputs(dir: &Path, m: &RunManifest) -> BTreeMap<String, Vec<u8>> {
    m.outputs
        .iter()
        .filter(|(_, rel)| dir.join(rel).is_file())
        .map(|(k, rel)| (k.clone(), std::fs::read(dir.join(rel)).unwrap()))
        .collect()
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let run = run_pipeline(&small_config(), &Gateway::mock(templates()), &first).unwrap();
    let text = std::fs::read_to_string(first.join("manifest.json")).unwrap();
    let manifest: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest.run_id, run.manifest.run_id);
    assert!(manifest.finished_at >= manifest.started_at);
    for rel in manifest.outputs.values() {
        assert!(first.join(rel).exists(), "{rel}");
    }
    assert_eq!(manifest.counters["records"], run.expansion.records.len());
    assert_eq!(manifest.counters["gateway_calls"], run.manifest.counters["gateway_calls"]);

    let second = dir.path().join("second");
    let replay = run_pipeline(&manifest.config, &Gateway::mock(templates()), &second).unwrap();
    assert_eq!(replay.manifest.run_id, manifest.run_id);
    assert_eq!(replay.manifest.counters, manifest.counters);
    let (a, b) = (outputs(&first, &manifest), outputs(&second, &replay.manifest));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, bytes) in &a {
        if k != "manifest" {
            assert!(bytes == &b[k], "{k} differs");
        }
    }
    assert!(!listing(dir.path()).iter().any(|n| n.ends_with(".partial")));
}
