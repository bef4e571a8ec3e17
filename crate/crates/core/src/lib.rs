pub mod geometry;
pub mod ingest;
pub mod kgstore;
pub mod relations;
pub mod synth;
pub mod query;
pub mod llm;
pub mod qa;
pub mod eval;
