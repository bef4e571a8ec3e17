use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QaError;
use crate::kgstore::vocab::{cmo, prop};
use crate::kgstore::Store;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShot {
    pub question: String,
    pub query: String,
}

pub fn load_few_shot(path: &Path) -> Result<Vec<FewShot>, QaError> {
    let text = std::fs::read_to_string(path).map_err(|e| QaError::Config(format!("few-shot file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| QaError::Config(format!("few-shot file {}: {e}", path.display())))
}

/// Everything the query generator is told, derived from the store.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptBundle {
    pub municipalities: Vec<String>,
    pub feature_types: Vec<String>,
    pub years: Vec<i32>,
    pub schema_text: String,
    pub constraints: Vec<String>,
    pub few_shot: Vec<FewShot>,
}

pub const CONSTRAINTS: [&str; 6] = [
    "Use only the properties and relations listed in the schema; never invent predicates.",
    "When the question names a year, always bind it with `?f cmo:year <year>`; years are plain integers.",
    "Match place names against the municipality choice list with `cmo:municipality`, mapping misspellings and variants to the closest listed name.",
    "Feature types are the lowercase strings in the feature type list.",
    "Use ASK for yes/no questions, COUNT/SUM/AVG/MIN/MAX with aliases for quantities, and ORDER BY with LIMIT 1 for superlatives.",
    "Reply with the query only, without explanation or code fences.",
];

fn strings(store: &Store, p: &str) -> Vec<String> {
    let mut v: Vec<String> = store
        .distinct_objects(&cmo(p))
        .iter()
        .filter_map(|t| t.as_str().map(str::to_string))
        .collect();
    v.sort();
    v.dedup();
    v
}

pub fn build_prompt(store: &Store, few_shot: Vec<FewShot>) -> Result<PromptBundle, QaError> {
    if few_shot.is_empty() {
        return Err(QaError::Config("at least one few-shot example is required".into()));
    }
    let mut years: Vec<i32> = store
        .distinct_objects(&cmo(prop::YEAR))
        .iter()
        .filter_map(|t| t.as_i64().map(|y| y as i32))
        .collect();
    years.sort();
    years.dedup();
    Ok(PromptBundle {
        municipalities: strings(store, prop::MUNICIPALITY),
        feature_types: strings(store, prop::FEATURE_TYPE),
        years,
        schema_text: store.schema().catalog_text(),
        constraints: CONSTRAINTS.iter().map(|c| c.to_string()).collect(),
        few_shot,
    })
}

impl PromptBundle {
    /// System prompt for query generation; identical input gives identical bytes.
    pub fn system_prompt(&self) -> String {
        let mut s = String::new();
        s.push_str("You translate questions about features on historical topographic maps into SPARQL queries over a knowledge graph.\n\n");
        s.push_str("## Analysis\nIdentify the place, the feature type, the year(s) and what is asked. Choose values only from these lists.\n");
        let _ = writeln!(s, "Municipalities: {}", self.municipalities.join(", "));
        let _ = writeln!(s, "Feature types: {}", self.feature_types.join(", "));
        let years: Vec<String> = self.years.iter().map(|y| y.to_string()).collect();
        let _ = writeln!(s, "Years: {}", years.join(", "));
        s.push_str("\n## Schema\nPrefixes: cmf: <http://chronomap.local/feature/>, cmo: <http://chronomap.local/ontology#>, cmr: <http://chronomap.local/relation#>\n");
        s.push_str(&self.schema_text);
        s.push_str("\n## Rules\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "{}. {c}", i + 1);
        }
        s.push_str("\n## Examples\n");
        for ex in &self.few_shot {
            let _ = writeln!(s, "Question: {}\nQuery:\n{}\n", ex.question, ex.query.trim());
        }
        s
    }

    /// Municipality named in the question, longest match first.
    pub fn find_municipality(&self, question: &str) -> Option<&str> {
        let q = question.to_lowercase();
        let mut names: Vec<&String> = self.municipalities.iter().collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        names
            .iter()
            .find(|n| q.contains(&n.to_lowercase()))
            .or_else(|| {
                // "Barga (BE)" is also found as "Barga"
                names.iter().find(|n| {
                    let stem: String = n.split([' ', '(']).next().unwrap_or("").to_lowercase();
                    stem.len() >= 4 && q.contains(&stem)
                })
            })
            .map(|n| n.as_str())
    }

    /// A covered year named in the question.
    pub fn find_year(&self, question: &str) -> Option<i32> {
        let re = regex::Regex::new(r"\b(\d{4})\b").expect("static pattern");
        let found = re
            .captures_iter(question)
            .filter_map(|c| c[1].parse().ok())
            .find(|y| self.years.contains(y));
        found
    }
}
