//! Factual and descriptive question answering over the knowledge graph.

mod descriptive;
mod factual;
mod prompt;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use descriptive::{fallback_sub_questions, parse_sub_questions, results_to_text, Context, DescriptiveOptions, DescriptiveResult};
pub use factual::{extract_query, solution_text, FactualResult, Verdict};
pub use prompt::{build_prompt, load_few_shot, FewShot, PromptBundle, CONSTRAINTS};

use crate::kgstore::Store;
use crate::llm::Gateway;

#[derive(Debug, thiserror::Error)]
pub enum QaError {
    #[error("qa config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaConfig {
    pub retry_max: usize,
    pub parallel_width: usize,
    pub facts_cap_chars: usize,
    /// Directory holding `{municipality}_{year}.png` map tiles.
    pub tiles_dir: Option<PathBuf>,
    pub search_k: usize,
    /// Rows shown to the answer call.
    pub answer_rows: usize,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self {
            retry_max: 2,
            parallel_width: 4,
            facts_cap_chars: 6000,
            tiles_dir: None,
            search_k: 3,
            answer_rows: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureStage {
    Generate,
    Parse,
    Schema,
    Validate,
    Evaluate,
    Answer,
    Compose,
}

impl FailureStage {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Generate => "generate",
            Self::Parse => "parse",
            Self::Schema => "schema",
            Self::Validate => "validate",
            Self::Evaluate => "evaluate",
            Self::Answer => "answer",
            Self::Compose => "compose",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Status {
    Delivered,
    Failed { stage: FailureStage, reason: String },
}

/// Everything a question needs; the store is only read.
#[derive(Debug, Clone, Copy)]
pub struct QaPipeline<'a> {
    pub store: &'a Store,
    pub bundle: &'a PromptBundle,
    pub gateway: &'a Gateway,
    pub config: &'a QaConfig,
}

impl<'a> QaPipeline<'a> {
    pub fn new(store: &'a Store, bundle: &'a PromptBundle, gateway: &'a Gateway, config: &'a QaConfig) -> Self {
        Self { store, bundle, gateway, config }
    }
}
