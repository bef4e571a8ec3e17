use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{FailureStage, QaPipeline, Status};
use crate::kgstore::vocab::compact;
use crate::kgstore::{Literal, Store, Term};
use crate::llm::{complete, ChatRequest};
use crate::query::{evaluate, parse, print, to_sparql_json, validate_against_schema, Query, QueryResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Revised { query: String },
    Rejected { reason: String },
    /// The validator could not be reached or replied with something unusable;
    /// the generated query is kept.
    Unavailable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactualResult {
    pub question: String,
    /// The executed query, or the last generated text on failure.
    pub query: Option<String>,
    pub verdict: Option<Verdict>,
    /// SPARQL JSON results.
    pub solution: Option<serde_json::Value>,
    pub answer: String,
    pub status: Status,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FactualResult {
    pub fn delivered(&self) -> bool {
        self.status == Status::Delivered
    }
}

/// Pulls the query out of a reply that may wrap it in prose or code fences.
pub fn extract_query(reply: &str) -> String {
    let t = reply.trim();
    if let Some(start) = t.find("```") {
        let body = &t[start + 3..];
        let body = body.strip_prefix("sparql").unwrap_or(body);
        let end = body.find("```").unwrap_or(body.len());
        return body[..end].trim().to_string();
    }
    t.to_string()
}

fn cell_text(t: &Term) -> String {
    match t {
        Term::Iri(i) => compact(i),
        Term::Literal(Literal::String(s)) => s.to_string(),
        Term::Literal(l) => l.lexical(),
        Term::Geometry(_) => "<geometry>".into(),
    }
}

/// Text form of a solution for the answer prompt.
pub fn solution_text(r: &QueryResult, max_rows: usize) -> String {
    match r {
        QueryResult::Boolean(b) => format!("Result: {b}"),
        QueryResult::Table(t) => {
            let mut s = format!("Result ({} rows):", t.rows.len());
            for row in t.rows.iter().take(max_rows) {
                let cells: Vec<String> = t
                    .vars
                    .iter()
                    .zip(row)
                    .map(|(v, c)| format!("?{v} = {}", c.as_ref().map_or("unbound".into(), cell_text)))
                    .collect();
                let _ = write!(s, "\n{}", cells.join(", "));
            }
            if t.rows.len() > max_rows {
                let _ = write!(s, "\n... ({} more rows)", t.rows.len() - max_rows);
            }
            s
        }
    }
}

const VALIDATOR_SYSTEM: &str = "You review SPARQL queries written against the knowledge graph schema below. \
Reply ACCEPT if the query correctly answers the question. If it is wrong but fixable, reply REVISE on the first line \
followed by the corrected query. If the question cannot be answered with this schema, reply REJECT: <reason>.\n\n";

const ANSWER_SYSTEM: &str = "You answer questions about features on historical maps using knowledge graph query results. \
Reason over the rows and rank them by relevance to the question, then reply in one or two sentences. \
Start yes/no answers with Yes or No and write numbers as digits.";

enum Checked {
    Ok(Query),
    Failed(FailureStage, String),
}

fn check(text: &str, store: &Store) -> Checked {
    match parse(text) {
        Err(e) => Checked::Failed(FailureStage::Parse, e.to_string()),
        Ok(q) => {
            let v = validate_against_schema(&q, store.schema());
            if v.is_empty() {
                Checked::Ok(q)
            } else {
                let msgs: Vec<String> = v.iter().map(|v| v.to_string()).collect();
                Checked::Failed(FailureStage::Schema, msgs.join("; "))
            }
        }
    }
}

fn parse_verdict(reply: &str) -> Verdict {
    let t = reply.trim();
    let head = t.lines().next().unwrap_or("").trim().to_uppercase();
    if head.starts_with("ACCEPT") {
        Verdict::Accepted
    } else if head.starts_with("REVISE") {
        let first_len = t.lines().next().map_or(0, str::len);
        let rest = t[first_len..].trim();
        // "REVISE: SELECT ..." on one line
        let inline = t.lines().next().unwrap_or("")[6..].trim_start_matches(':').trim();
        let body = if rest.is_empty() { inline } else { rest };
        let q = extract_query(body);
        if q.is_empty() {
            Verdict::Unavailable {
                reason: "revision without a query".into(),
            }
        } else {
            Verdict::Revised { query: q }
        }
    } else if head.starts_with("REJECT") {
        Verdict::Rejected {
            reason: t[6..].trim_start_matches(':').trim().to_string(),
        }
    } else {
        Verdict::Unavailable {
            reason: format!("unrecognized verdict: {}", t.chars().take(80).collect::<String>()),
        }
    }
}

impl QaPipeline<'_> {
    fn validate(&self, question: &str, query: &str) -> Verdict {
        let req = ChatRequest::new(
            "validate",
            format!("{VALIDATOR_SYSTEM}{}", self.store.schema().catalog_text()),
            format!("Question: {question}\nQuery:\n{query}"),
        );
        match complete(self.gateway.validator.as_ref(), &req) {
            Ok(r) => parse_verdict(&r.text),
            Err(e) => Verdict::Unavailable { reason: e.to_string() },
        }
    }

    /// Validation with at most one revision that is itself re-validated.
    fn validated(&self, question: &str, text: String, q: Query, warnings: &mut Vec<String>) -> (Verdict, String, Option<Query>) {
        match self.validate(question, &text) {
            Verdict::Revised { query } => match check(&query, self.store) {
                Checked::Failed(_, why) => {
                    warnings.push(format!("revised query ignored: {why}"));
                    (Verdict::Unavailable { reason: why }, text, Some(q))
                }
                Checked::Ok(rq) => match self.validate(question, &query) {
                    Verdict::Rejected { reason } => (Verdict::Rejected { reason }, query, None),
                    Verdict::Revised { query: again } => {
                        warnings.push("second revision ignored".into());
                        let _ = again;
                        (Verdict::Revised { query: query.clone() }, query, Some(rq))
                    }
                    _ => (Verdict::Revised { query: query.clone() }, query, Some(rq)),
                },
            },
            Verdict::Rejected { reason } => (Verdict::Rejected { reason }, text, None),
            v @ Verdict::Unavailable { .. } => {
                if let Verdict::Unavailable { reason } = &v {
                    warnings.push(format!("validation skipped: {reason}"));
                }
                (v, text, Some(q))
            }
            Verdict::Accepted => (Verdict::Accepted, text, Some(q)),
        }
    }

    /// Question to query to validated query to solution to answer text,
    /// regenerating after generation, parse, schema, validation or
    /// evaluation failures.
    pub fn answer_factual(&self, question: &str) -> FactualResult {
        let max = 1 + self.config.retry_max;
        let system = self.bundle.system_prompt();
        let mut result = FactualResult {
            question: question.to_string(),
            query: None,
            verdict: None,
            solution: None,
            answer: String::new(),
            status: Status::Failed {
                stage: FailureStage::Generate,
                reason: "not attempted".into(),
            },
            attempts: 0,
            warnings: vec![],
        };
        let mut feedback = String::new();
        for attempt in 1..=max {
            result.attempts = attempt;
            let mut user = format!("Question: {question}\n(attempt {attempt} of {max})");
            user.push_str(&feedback);
            let fail = |r: &mut FactualResult, stage, reason: String| {
                r.status = Status::Failed { stage, reason };
            };
            let reply = match complete(self.gateway.generator.as_ref(), &ChatRequest::new("generate", system.clone(), user)) {
                Ok(r) => r.text,
                Err(e) => {
                    fail(&mut result, FailureStage::Generate, e.to_string());
                    feedback = format!("\nThe previous attempt failed: {e}");
                    continue;
                }
            };
            let text = extract_query(&reply);
            result.query = Some(text.clone());
            let q = match check(&text, self.store) {
                Checked::Ok(q) => q,
                Checked::Failed(stage, why) => {
                    fail(&mut result, stage, why.clone());
                    feedback = format!("\nThe previous query failed ({}): {why}\nPrevious query:\n{text}", stage.as_str());
                    continue;
                }
            };
            let (verdict, final_text, final_q) = self.validated(question, text, q, &mut result.warnings);
            result.verdict = Some(verdict.clone());
            result.query = Some(final_text.clone());
            let Some(q) = final_q else {
                let Verdict::Rejected { reason } = verdict else { unreachable!() };
                fail(&mut result, FailureStage::Validate, reason.clone());
                feedback = format!("\nThe previous query was rejected: {reason}\nPrevious query:\n{final_text}");
                continue;
            };
            let solution = match evaluate(&q, self.store) {
                Ok(ev) => ev.result,
                Err(e) => {
                    fail(&mut result, FailureStage::Evaluate, e.to_string());
                    feedback = format!("\nThe previous query failed to run: {e}\nPrevious query:\n{final_text}");
                    continue;
                }
            };
            result.solution = Some(to_sparql_json(&solution, self.store));
            let prompt = format!(
                "Question: {question}\nQuery:\n{}\n{}",
                print(&q),
                solution_text(&solution, self.config.answer_rows)
            );
            match complete(self.gateway.generator.as_ref(), &ChatRequest::new("answer", ANSWER_SYSTEM, prompt)) {
                Ok(r) if !r.text.trim().is_empty() => {
                    result.answer = r.text.trim().to_string();
                    result.status = Status::Delivered;
                }
                Ok(_) => fail(&mut result, FailureStage::Answer, "empty answer".into()),
                Err(e) => fail(&mut result, FailureStage::Answer, e.to_string()),
            }
            return result;
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_extraction() {
        assert_eq!(extract_query("```sparql\nASK { ?s ?p ?o }\n```"), "ASK { ?s ?p ?o }");
        assert_eq!(extract_query("Here:\n```\nASK {}\n``` done"), "ASK {}");
        assert_eq!(extract_query("  ASK {} "), "ASK {}");
    }

    #[test]
    fn verdicts() {
        assert_eq!(parse_verdict("accept."), Verdict::Accepted);
        assert_eq!(
            parse_verdict("REVISE\n```sparql\nASK {}\n```"),
            Verdict::Revised { query: "ASK {}".into() }
        );
        assert_eq!(parse_verdict("REVISE: ASK {}"), Verdict::Revised { query: "ASK {}".into() });
        assert_eq!(parse_verdict("REJECT: no population data"), Verdict::Rejected { reason: "no population data".into() });
        assert!(matches!(parse_verdict("looks fine"), Verdict::Unavailable { .. }));
        assert!(matches!(parse_verdict("REVISE"), Verdict::Unavailable { .. }));
    }
}
