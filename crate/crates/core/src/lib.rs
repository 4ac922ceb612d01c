pub mod eval;
pub mod exec;
pub mod expand;
pub mod forge;
pub mod gateway;
pub mod pipeline;
pub mod seed;
pub mod sql;
pub mod taxonomy;

pub use eval::{CorpusStats, ExReport, QualityReport};
pub use expand::{DatasetRecord, GenerationPath, KnowledgeItem, KnowledgeKind, Provenance};
pub use forge::{DatabasePool, DatabaseSchema, SourceTable};
pub use gateway::{Gateway, GatewayCall, TemplateName};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineRun, RunManifest};
pub use seed::{SeedRecord, SeedStatus};
pub use sql::{AnalysisConfig, SqlFeatureSummary};
pub use taxonomy::{
    Combination, ComplexityLevel, CoreIntent, KeyAction, StatementType, SyntaxStructure, TaxonomyConfig, TaxonomyLabels,
};
