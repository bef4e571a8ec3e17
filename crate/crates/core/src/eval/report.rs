use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{ratio, Score};
use super::{AnswerKind, Category, EvalError, FactReport, MismatchReason, QualityScores, SparqlCheck, SparqlVerdict};
use crate::qa::Context;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactualOutcome {
    pub id: String,
    pub question: String,
    pub category: Category,
    pub answer_kind: AnswerKind,
    pub delivered: bool,
    pub answer: String,
    pub query: Option<String>,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    /// Only set for delivered items.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<MismatchReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparql_auto: Option<SparqlCheck>,
    /// Filled in by a reviewer.
    #[serde(default)]
    pub sparql_manual: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveOutcome {
    pub id: String,
    pub question: String,
    /// Context combination label, e.g. "KG+Map".
    pub contexts: String,
    pub delivered: bool,
    pub answer: String,
    pub contexts_used: Vec<Context>,
    pub sub_questions: usize,
    pub facts: FactReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityScores>,
}

/// One line of the outcome log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogEntry {
    Factual(FactualOutcome),
    Descriptive(DescriptiveOutcome),
}

pub fn write_log(entries: &[LogEntry], mut out: impl Write) -> Result<(), EvalError> {
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_log(text: &str) -> Result<Vec<LogEntry>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::Input(format!("log line {}: {e}", i + 1))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactualSummary {
    pub items: usize,
    pub delivered: usize,
    pub correct: usize,
    pub sparql_correct: usize,
    /// Items with an automatic verdict other than error.
    pub sparql_judged: usize,
    pub sparql_errors: usize,
    pub sparql_manual_correct: Option<usize>,
    pub sparql_manual_judged: Option<usize>,
    pub delivery_rate: f64,
    pub accuracy: f64,
    pub sparql_accuracy_auto: Option<f64>,
    pub sparql_accuracy_manual: Option<f64>,
}

impl FactualSummary {
    pub fn from_outcomes(outcomes: &[&FactualOutcome]) -> Result<Self, EvalError> {
        let items = outcomes.len();
        if items == 0 {
            return Err(EvalError::EmptyLog);
        }
        let delivered = outcomes.iter().filter(|o| o.delivered).count();
        let correct = outcomes.iter().filter(|o| o.delivered && o.correct == Some(true)).count();
        let auto = |o: &FactualOutcome| match o.sparql_auto.as_ref().map(|c| c.verdict) {
            Some(SparqlVerdict::Correct) => Some(true),
            Some(SparqlVerdict::Error) => None,
            Some(SparqlVerdict::Incorrect) | None => Some(false),
        };
        let judged: Vec<bool> = outcomes.iter().filter_map(|o| auto(o)).collect();
        let sparql_correct = judged.iter().filter(|j| **j).count();
        let manual: Option<Vec<bool>> = outcomes
            .iter()
            .any(|o| o.sparql_manual.is_some())
            .then(|| outcomes.iter().filter_map(|o| o.sparql_manual.or_else(|| auto(o))).collect());
        let manual_correct = manual.as_ref().map(|m| m.iter().filter(|j| **j).count());
        Ok(Self {
            items,
            delivered,
            correct,
            sparql_correct,
            sparql_judged: judged.len(),
            sparql_errors: items - judged.len(),
            sparql_manual_correct: manual_correct,
            sparql_manual_judged: manual.as_ref().map(Vec::len),
            delivery_rate: delivered as f64 / items as f64,
            accuracy: correct as f64 / items as f64,
            sparql_accuracy_auto: ratio(sparql_correct, judged.len()),
            sparql_accuracy_manual: manual.and_then(|m| ratio(manual_correct.unwrap_or(0), m.len())),
        })
    }

    /// "delivery / accuracy / sparql auto / sparql manual" at two decimals.
    pub fn row(&self) -> String {
        [Some(self.delivery_rate), Some(self.accuracy), self.sparql_accuracy_auto, self.sparql_accuracy_manual]
            .iter()
            .map(|v| fmt2(*v))
            .collect::<Vec<_>>()
            .join(" / ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveSummary {
    pub contexts: String,
    pub items: usize,
    pub delivered: usize,
    pub fact_accuracy_auto: Option<f64>,
    pub fact_accuracy_manual: Option<f64>,
    /// Mean number of checked factual questions per item.
    pub factual_questions: Option<f64>,
    /// Not measured; always absent.
    pub perplexity: Option<f64>,
    pub relevance: Option<f64>,
    pub fluency: Option<f64>,
    pub informativeness: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl DescriptiveSummary {
    pub fn from_outcomes(contexts: &str, outcomes: &[&DescriptiveOutcome]) -> Self {
        let pooled = FactReport {
            answer: String::new(),
            facts: outcomes.iter().flat_map(|o| o.facts.facts.iter().cloned()).collect(),
            error: None,
        };
        let score = |f: fn(&QualityScores) -> &Score| mean(outcomes.iter().filter_map(|o| o.quality.as_ref().and_then(|q| f(q).value())));
        Self {
            contexts: contexts.to_string(),
            items: outcomes.len(),
            delivered: outcomes.iter().filter(|o| o.delivered).count(),
            fact_accuracy_auto: pooled.accuracy_auto(),
            fact_accuracy_manual: pooled.accuracy_manual(),
            factual_questions: mean(outcomes.iter().map(|o| o.facts.facts.len() as f64)),
            perplexity: None,
            relevance: score(|q| &q.relevance),
            fluency: score(|q| &q.fluency),
            informativeness: score(|q| &q.informativeness),
        }
    }

    pub fn row(&self) -> String {
        [
            fmt2(self.fact_accuracy_auto),
            fmt2(self.fact_accuracy_manual),
            self.factual_questions.map_or("n/a".into(), |v| format!("{v:.1}")),
            fmt2(self.perplexity),
            fmt2(self.relevance),
            fmt2(self.fluency),
            fmt2(self.informativeness),
        ]
        .join(" / ")
    }
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Name of the query generator the run used.
    pub generator: String,
    pub factual: Option<FactualSummary>,
    #[serde(default)]
    pub descriptive: Vec<DescriptiveSummary>,
    /// Descriptive items with no checkable fact.
    #[serde(default)]
    pub fact_check_na: usize,
}

pub fn build_report(generator: &str, log: &[LogEntry]) -> Result<Report, EvalError> {
    if log.is_empty() {
        return Err(EvalError::EmptyLog);
    }
    let factual: Vec<&FactualOutcome> = log
        .iter()
        .filter_map(|e| match e {
            LogEntry::Factual(f) => Some(f),
            _ => None,
        })
        .collect();
    let mut groups: BTreeMap<&str, Vec<&DescriptiveOutcome>> = BTreeMap::new();
    for e in log {
        if let LogEntry::Descriptive(d) = e {
            groups.entry(d.contexts.as_str()).or_default().push(d);
        }
    }
    let fact_check_na = groups
        .values()
        .flatten()
        .filter(|d| d.facts.accuracy_auto().is_none())
        .count();
    Ok(Report {
        generator: generator.to_string(),
        factual: if factual.is_empty() {
            None
        } else {
            Some(FactualSummary::from_outcomes(&factual)?)
        },
        descriptive: groups.iter().map(|(k, v)| DescriptiveSummary::from_outcomes(k, v)).collect(),
        fact_check_na,
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text tables; descriptive block omitted when empty.
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(f) = &self.factual {
            s.push_str("Factual QA\n");
            s.push_str("SPARQL Generator | Delivery Rate / Accuracy / SPARQL Accuracy (auto) / SPARQL Accuracy (manual)\n");
            let _ = writeln!(s, "{} | {}", self.generator, f.row());
            let _ = writeln!(
                s,
                "items {}, delivered {}, correct {}, sparql correct {} of {} judged, {} judge errors",
                f.items, f.delivered, f.correct, f.sparql_correct, f.sparql_judged, f.sparql_errors
            );
        }
        if !self.descriptive.is_empty() {
            if !s.is_empty() {
                s.push('\n');
            }
            s.push_str("Descriptive QA\n");
            s.push_str("Context Sources | Fact Accuracy (auto) / Fact Accuracy (manual) / Factual questions / Perplexity / Relevance / Fluency / Informativeness\n");
            for d in &self.descriptive {
                let _ = writeln!(s, "{} | {}", d.contexts, d.row());
            }
            if self.fact_check_na > 0 {
                let _ = writeln!(s, "fact accuracy n/a for {} items without checkable facts", self.fact_check_na);
            }
        }
        s
    }
}
