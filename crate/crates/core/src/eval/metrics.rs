use serde::{Deserialize, Serialize};

use super::{AnswerKind, EvalError, Gold};
use crate::kgstore::vocab::{cmo, prop};
use crate::kgstore::Schema;
use crate::llm::{complete, ChatClient, ChatRequest};
use crate::qa::{PromptBundle, QaPipeline};
use crate::query::{parse, validate_against_schema, TermPattern};

/// Ratio rounded to the two decimals used in reports.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn delivery_rate(delivered: &[bool]) -> Result<f64, EvalError> {
    ratio(delivered.iter().filter(|d| **d).count(), delivered.len()).ok_or(EvalError::EmptyLog)
}

/// Leading phrases that read as yes or no.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnswerNormalization {
    pub affirmative: Vec<String>,
    pub negative: Vec<String>,
}

impl Default for AnswerNormalization {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            affirmative: v(&["yes", "yeah", "correct", "true", "indeed", "affirmative", "there were", "there was"]),
            negative: v(&["no", "not", "false", "incorrect", "negative", "none", "there were no", "there was no"]),
        }
    }
}

impl AnswerNormalization {
    /// Longest matching leading phrase decides.
    pub fn yes_no(&self, answer: &str) -> Option<bool> {
        let a = answer.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        let starts = |p: &String| {
            a.starts_with(p.as_str()) && a[p.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric())
        };
        let yes = self.affirmative.iter().filter(|p| starts(p)).map(String::len).max();
        let no = self.negative.iter().filter(|p| starts(p)).map(String::len).max();
        match (yes, no) {
            (Some(y), Some(n)) => Some(y > n),
            (Some(_), None) => Some(true),
            (None, Some(_)) => Some(false),
            (None, None) => None,
        }
    }
}

/// First number in the text with thousands separators removed.
pub fn first_number(text: &str) -> Option<f64> {
    let re = regex::Regex::new(r"-?\d[\d,'\u{2019}\u{202f}]*(?:\.\d+)?").expect("static pattern");
    let m = re.find(text)?;
    let digits: String = m.as_str().chars().filter(|c| c.is_ascii_digit() || *c == '.' || *c == '-').collect();
    digits.trim_end_matches('.').parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchReason {
    Unextractable,
    Mismatch,
    NoGold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyCheck {
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<MismatchReason>,
}

impl AccuracyCheck {
    fn of(ok: bool) -> Self {
        Self {
            correct: ok,
            reason: (!ok).then_some(MismatchReason::Mismatch),
        }
    }

    fn failed(reason: MismatchReason) -> Self {
        Self {
            correct: false,
            reason: Some(reason),
        }
    }
}

pub fn answer_accuracy(answer: &str, gold: &Gold, kind: AnswerKind, norm: &AnswerNormalization) -> AccuracyCheck {
    match (kind, gold) {
        (AnswerKind::Yesno, Gold::YesNo(g)) => match norm.yes_no(answer) {
            Some(a) => AccuracyCheck::of(a == *g),
            None => AccuracyCheck::failed(MismatchReason::Unextractable),
        },
        (AnswerKind::Numeric, Gold::Number(g)) => match first_number(answer) {
            Some(a) => AccuracyCheck::of((a - g).abs() <= 1e-6 * g.abs()),
            None => AccuracyCheck::failed(MismatchReason::Unextractable),
        },
        (AnswerKind::List, Gold::List(g)) => {
            let a = answer.to_lowercase();
            AccuracyCheck::of(g.iter().all(|v| a.contains(&v.to_lowercase())))
        }
        _ => AccuracyCheck::failed(MismatchReason::NoGold),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparqlVerdict {
    Correct,
    Incorrect,
    /// The judge could not be consulted; excluded from accuracy.
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparqlCheck {
    pub verdict: SparqlVerdict,
    pub rationale: String,
}

/// Structural rules checked before asking the judge.
pub fn sparql_prepass(question: &str, query: &str, schema: &Schema, bundle: &PromptBundle) -> Result<(), String> {
    let q = parse(query).map_err(|e| format!("query does not parse: {e}"))?;
    let v = validate_against_schema(&q, schema);
    if let Some(first) = v.first() {
        return Err(first.to_string());
    }
    let preds: Vec<String> = q
        .pattern
        .triples_with_paths()
        .into_iter()
        .filter_map(|(_, t)| match &t.predicate {
            TermPattern::Const(p) => p.as_iri().map(str::to_string),
            _ => None,
        })
        .collect();
    let uses = |local: &str| {
        let iri = cmo(local);
        preds.iter().any(|p| Some(p.as_str()) == iri.as_iri())
    };
    if let Some(y) = bundle.find_year(question) {
        if !uses(prop::YEAR) {
            return Err(format!("question names {y} but the query has no year constraint"));
        }
    }
    if let Some(m) = bundle.find_municipality(question) {
        if !uses(prop::MUNICIPALITY) {
            return Err(format!("question names {m} but the query has no municipality constraint"));
        }
    }
    Ok(())
}

const SPARQL_JUDGE_SYSTEM: &str = "You check whether a SPARQL query correctly interprets a question about historical map features. \
Reply with CORRECT or INCORRECT on the first line, then a one-sentence rationale.";

pub fn sparql_semantic_check(question: &str, query: &str, schema: &Schema, bundle: &PromptBundle, judge: &dyn ChatClient) -> SparqlCheck {
    if let Err(why) = sparql_prepass(question, query, schema, bundle) {
        return SparqlCheck {
            verdict: SparqlVerdict::Incorrect,
            rationale: why,
        };
    }
    let req = ChatRequest::new(
        "sparql-judge",
        format!("{SPARQL_JUDGE_SYSTEM}\n\n{}", schema.catalog_text()),
        format!("Question: {question}\nQuery:\n{query}"),
    );
    match complete(judge, &req) {
        Err(e) => SparqlCheck {
            verdict: SparqlVerdict::Error,
            rationale: e.to_string(),
        },
        Ok(r) => {
            let t = r.text.trim();
            let head = t.to_lowercase();
            let verdict = if head.starts_with("incorrect") || head.starts_with("no") {
                SparqlVerdict::Incorrect
            } else if head.starts_with("correct") || head.starts_with("yes") {
                SparqlVerdict::Correct
            } else {
                SparqlVerdict::Error
            };
            SparqlCheck {
                verdict,
                rationale: t.to_string(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactVerdict {
    Yes,
    No,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckedFact {
    pub statement: String,
    pub question: String,
    pub verdict: FactVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual_override: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactReport {
    pub answer: String,
    pub facts: Vec<CheckedFact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FactReport {
    /// yes / (yes + no); `None` when nothing was checkable.
    pub fn accuracy_auto(&self) -> Option<f64> {
        let yes = self.facts.iter().filter(|f| f.verdict == FactVerdict::Yes).count();
        let no = self.facts.iter().filter(|f| f.verdict == FactVerdict::No).count();
        ratio(yes, yes + no)
    }

    /// Manual labels where given, automatic verdicts elsewhere; `None`
    /// without any manual label.
    pub fn accuracy_manual(&self) -> Option<f64> {
        if self.facts.iter().all(|f| f.manual_override.is_none()) {
            return None;
        }
        let labels: Vec<bool> = self
            .facts
            .iter()
            .filter_map(|f| match (f.manual_override, f.verdict) {
                (Some(m), _) => Some(m),
                (None, FactVerdict::Yes) => Some(true),
                (None, FactVerdict::No) => Some(false),
                (None, FactVerdict::Error) => None,
            })
            .collect();
        ratio(labels.iter().filter(|l| **l).count(), labels.len())
    }
}

const EXTRACT_SYSTEM: &str = "Find the statements in the answer that concern map features, their properties or relations \
(types, counts, areas, lengths, years, places). For each, write one yes/no question that checks it. \
Reply with one line per statement in the form STATEMENT: <statement> | QUESTION: <question>. Reply NONE if there are none.";

pub fn parse_extraction(reply: &str) -> Vec<(String, String)> {
    let re = regex::Regex::new(r"(?i)^\s*(?:[-*]\s*|\d+[.)]\s*)?statement:\s*(.+?)\s*\|\s*question:\s*(.+?)\s*$").expect("static pattern");
    reply
        .lines()
        .filter_map(|l| re.captures(l).map(|c| (c[1].to_string(), c[2].to_string())))
        .collect()
}

/// Splits a descriptive answer into KG statements and checks each with the
/// factual pipeline.
pub fn fact_check(answer: &str, extractor: &dyn ChatClient, pipeline: &QaPipeline, norm: &AnswerNormalization) -> FactReport {
    let req = ChatRequest::new("extract", EXTRACT_SYSTEM, format!("Answer:\n{answer}"));
    let reply = match complete(extractor, &req) {
        Ok(r) => r.text,
        Err(e) => {
            return FactReport {
                answer: answer.to_string(),
                facts: vec![],
                error: Some(e.to_string()),
            }
        }
    };
    let facts = parse_extraction(&reply)
        .into_iter()
        .map(|(statement, question)| {
            let r = pipeline.answer_factual(&question);
            let verdict = if !r.delivered() {
                FactVerdict::Error
            } else if answer_accuracy(&r.answer, &Gold::YesNo(true), AnswerKind::Yesno, norm).correct {
                FactVerdict::Yes
            } else {
                FactVerdict::No
            };
            CheckedFact {
                statement,
                question,
                verdict,
                manual_override: None,
            }
        })
        .collect();
    FactReport {
        answer: answer.to_string(),
        facts,
        error: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Score {
    Value(f64),
    Error { error: String },
}

impl Score {
    pub fn value(&self) -> Option<f64> {
        match self {
            Score::Value(v) => Some(*v),
            Score::Error { .. } => None,
        }
    }
}

pub fn parse_score(reply: &str) -> Score {
    let re = regex::Regex::new(r"-?\d+(?:\.\d+)?").expect("static pattern");
    match re.find(reply).and_then(|m| m.as_str().parse::<f64>().ok()) {
        Some(v) => Score::Value(v.clamp(0.0, 1.0)),
        None => Score::Error {
            error: format!("unparseable score: {}", reply.trim().chars().take(60).collect::<String>()),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub relevance: Score,
    pub fluency: Score,
    pub informativeness: Score,
}

pub const RUBRICS: [(&str, &str); 3] = [
    ("relevance", "Rate whether the answer addresses the geospatial descriptive question."),
    ("fluency", "Rate the naturalness, fluency and readability of the answer."),
    ("informativeness", "Rate whether the answer provides informative content relevant to the question."),
];

pub fn content_quality(question: &str, answer: &str, judge: &dyn ChatClient) -> QualityScores {
    let mut scores = RUBRICS.iter().map(|(name, rubric)| {
        let req = ChatRequest::new(
            &format!("judge-{name}"),
            format!("{rubric} Reply with a single score between 0 and 1."),
            format!("Question: {question}\nAnswer: {answer}"),
        );
        match complete(judge, &req) {
            Ok(r) => parse_score(&r.text),
            Err(e) => Score::Error { error: e.to_string() },
        }
    });
    QualityScores {
        relevance: scores.next().expect("three rubrics"),
        fluency: scores.next().expect("three rubrics"),
        informativeness: scores.next().expect("three rubrics"),
    }
}
