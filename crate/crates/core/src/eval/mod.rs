//! Benchmark generation, outcome logs and the evaluation metrics.

mod bench;
mod metrics;
mod report;
mod run;

pub use bench::{
    answering_rules, generate_benchmark, gold_answer, load_benchmark, oracle_rules, AnswerKind, BenchCounts, Benchmark,
    BenchmarkItem, Category, Gold,
};
pub use metrics::{
    answer_accuracy, content_quality, delivery_rate, fact_check, first_number, parse_extraction, parse_score, ratio, round2,
    sparql_prepass, sparql_semantic_check, AccuracyCheck, AnswerNormalization, CheckedFact, FactReport, FactVerdict,
    MismatchReason, QualityScores, Score, SparqlCheck, SparqlVerdict, RUBRICS,
};
pub use report::{
    build_report, read_log, write_log, DescriptiveOutcome, DescriptiveSummary, FactualOutcome, FactualSummary, LogEntry, Report,
};
pub use run::{run_benchmark, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("outcome log is empty")]
    EmptyLog,
    #[error("{0}")]
    Input(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
