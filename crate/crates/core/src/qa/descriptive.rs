use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{FactualResult, FailureStage, PromptBundle, QaPipeline, Status};
use crate::kgstore::Store;
use crate::llm::{complete, search_or_empty, ChatRequest, Part};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Context {
    Kg,
    MapImage,
    Search,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptiveOptions {
    pub use_map_image: bool,
    pub use_search: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveResult {
    pub question: String,
    pub sub_questions: Vec<FactualResult>,
    pub facts_text: String,
    pub contexts_used: Vec<Context>,
    pub answer: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

const DECOMPOSE_SYSTEM: &str = "Split the question about a place on historical maps into short factual sub-questions \
that can each be answered from the knowledge graph. Reply with one sub-question per line and nothing else.";

const COMPOSE_SYSTEM: &str = "You write descriptive answers about places on historical topographic maps. \
Ground every statement in the facts, map image or search results provided. Do not invent numbers.";

const MAX_SUB_QUESTIONS: usize = 12;

/// Sub-questions from a decomposer reply: one per line, list markers removed.
pub fn parse_sub_questions(reply: &str) -> Vec<String> {
    let marker = regex::Regex::new(r"^\s*(?:[-*\u{2022}]|\d+[.)])\s*").expect("static pattern");
    reply
        .lines()
        .map(|l| marker.replace(l, "").trim().to_string())
        .filter(|l| !l.is_empty() && !l.ends_with(':'))
        .take(MAX_SUB_QUESTIONS)
        .collect()
}

fn plural(t: &str) -> String {
    if t.ends_with('s') || t.ends_with("sh") || t.ends_with("ch") || t.ends_with('x') {
        format!("{t}es")
    } else {
        format!("{t}s")
    }
}

/// Template sub-questions: per feature type a count, a total area or length
/// and the largest feature, plus one change question against the previous year.
pub fn fallback_sub_questions(question: &str, bundle: &PromptBundle, store: &Store) -> Vec<String> {
    let place = bundle
        .find_municipality(question)
        .map_or_else(|| "the map area".to_string(), str::to_string);
    let year = bundle.find_year(question).or_else(|| bundle.years.last().copied());
    let when = year.map_or_else(String::new, |y| format!(" in {y}"));
    let mut linear: BTreeMap<String, bool> = BTreeMap::new();
    for f in store.features() {
        let e = linear.entry(f.feature_type.clone()).or_insert(true);
        if f.area_sqm.is_some() {
            *e = false;
        }
    }
    let mut out = Vec::new();
    for t in &bundle.feature_types {
        let ts = plural(t);
        let measure = if linear.get(t).copied().unwrap_or(false) { "length" } else { "area" };
        out.push(format!("How many {ts} were there in {place}{when}?"));
        out.push(format!("What was the total {measure} of {ts} in {place}{when}?"));
        out.push(format!("What was the largest {t} in {place}{when}?"));
    }
    if let Some(y) = year {
        if let Some(prev) = bundle.years.iter().rev().find(|p| **p < y) {
            out.push(format!("Which features in {place} changed between {prev} and {y}?"));
        }
    }
    out
}

/// One "Q: .. A: .." line per delivered result, dropping lines from the end
/// until the text fits in `cap` characters.
pub fn results_to_text(results: &[FactualResult], cap: usize) -> String {
    let mut lines: Vec<String> = results
        .iter()
        .filter(|r| r.delivered())
        .map(|r| format!("Q: {} A: {}", r.question.trim(), r.answer.replace('\n', " ").trim()))
        .collect();
    let len = |ls: &[String]| ls.iter().map(|l| l.chars().count()).sum::<usize>() + ls.len().saturating_sub(1);
    while !lines.is_empty() && len(&lines) > cap {
        lines.pop();
    }
    lines.join("\n")
}

impl QaPipeline<'_> {
    /// Sub-questions from the decomposer, or the templates when it fails or
    /// yields nothing.
    pub fn decompose(&self, question: &str, warnings: &mut Vec<String>) -> Vec<String> {
        let req = ChatRequest::new("decompose", DECOMPOSE_SYSTEM, format!("Question: {question}"));
        match complete(self.gateway.generator.as_ref(), &req) {
            Ok(r) => {
                let subs = parse_sub_questions(&r.text);
                if !subs.is_empty() {
                    return subs;
                }
                warnings.push("decomposer returned no sub-questions; using templates".into());
            }
            Err(e) => warnings.push(format!("decomposer failed ({e}); using templates")),
        }
        fallback_sub_questions(question, self.bundle, self.store)
    }

    fn answer_all(&self, subs: &[String]) -> Vec<FactualResult> {
        let width = self.config.parallel_width.max(1);
        let mut out = Vec::with_capacity(subs.len());
        for chunk in subs.chunks(width) {
            let results: Vec<FactualResult> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|q| s.spawn(move || self.answer_factual(q))).collect();
                handles.into_iter().map(|h| h.join().expect("sub-question thread panicked")).collect()
            });
            out.extend(results);
        }
        out
    }

    fn tile(&self, question: &str, warnings: &mut Vec<String>) -> Option<Part> {
        let Some(dir) = &self.config.tiles_dir else {
            warnings.push("map image requested but no tiles directory is configured".into());
            return None;
        };
        let (Some(m), Some(y)) = (self.bundle.find_municipality(question), self.bundle.find_year(question)) else {
            warnings.push("map image requested but the question names no municipality and year".into());
            return None;
        };
        let path = dir.join(format!("{m}_{y}.png"));
        match std::fs::read(&path) {
            Ok(data) => Some(Part::Image {
                media_type: "image/png".into(),
                data,
            }),
            Err(e) => {
                warnings.push(format!("map tile {} unavailable: {e}", path.display()));
                None
            }
        }
    }

    pub fn answer_descriptive(&self, question: &str, options: DescriptiveOptions) -> DescriptiveResult {
        let mut warnings = Vec::new();
        let subs = self.decompose(question, &mut warnings);
        let sub_results = self.answer_all(&subs);
        let facts = results_to_text(&sub_results, self.config.facts_cap_chars);
        let mut contexts = Vec::new();
        if facts.is_empty() {
            warnings.push("no sub-question was answered; composing without knowledge graph facts".into());
        } else {
            contexts.push(Context::Kg);
        }
        let mut req = ChatRequest::new(
            "compose",
            COMPOSE_SYSTEM,
            format!("Question: {question}\n\nFacts from the knowledge graph:\n{facts}"),
        );
        if options.use_map_image {
            if let Some(img) = self.tile(question, &mut warnings) {
                req = req.with_part(Part::text("Map image patch of the area:")).with_part(img);
                contexts.push(Context::MapImage);
            }
        }
        if options.use_search {
            let hits = search_or_empty(self.gateway.search.as_ref(), question, self.config.search_k, &mut warnings);
            if !hits.is_empty() {
                let mut s = String::from("Search results:");
                for (i, h) in hits.iter().enumerate() {
                    let _ = write!(s, "\n[{}] {} ({}): {}", i + 1, h.title, h.url, h.snippet);
                }
                req = req.with_part(Part::text(s));
                contexts.push(Context::Search);
            }
        }
        let (answer, status) = match complete(self.gateway.composer.as_ref(), &req) {
            Ok(r) if !r.text.trim().is_empty() => (r.text.trim().to_string(), Status::Delivered),
            Ok(_) => (
                String::new(),
                Status::Failed {
                    stage: FailureStage::Compose,
                    reason: "empty composition".into(),
                },
            ),
            Err(e) => (
                String::new(),
                Status::Failed {
                    stage: FailureStage::Compose,
                    reason: e.to_string(),
                },
            ),
        };
        DescriptiveResult {
            question: question.to_string(),
            sub_questions: sub_results,
            facts_text: facts,
            contexts_used: contexts,
            answer,
            status,
            warnings,
        }
    }
}
