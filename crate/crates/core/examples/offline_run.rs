//! Runs the small offline configuration with the mock provider and prints
//! the run counters and diversity report.
//!
//! cargo run -p taxsql-core --example offline_run -- [OUT_DIR]

use std::path::{Path, PathBuf};

use taxsql_core::gateway::{Gateway, TemplateSet};
use taxsql_core::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| root.join("target/offline_run"));
    let cfg = PipelineConfig::load(&root.join("config/mini.toml"))?;
    let gateway = Gateway::mock(TemplateSet::load(&cfg.inputs.prompts)?);
    let run = run_pipeline(&cfg, &gateway, &out)?;
    for (k, v) in &run.manifest.counters {
        println!("{k:>28}  {v}");
    }
    println!("diversity: {:?}", run.reports.diversity);
    println!("output: {}", out.display());
    Ok(())
}
