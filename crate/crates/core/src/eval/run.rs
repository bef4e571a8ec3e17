use serde::{Deserialize, Serialize};

use super::{
    answer_accuracy, content_quality, fact_check, sparql_semantic_check, AnswerKind, AnswerNormalization, BenchmarkItem,
    DescriptiveOutcome, FactReport, FactualOutcome, LogEntry,
};
use crate::qa::{DescriptiveOptions, QaPipeline, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub descriptive: DescriptiveOptions,
    pub width: usize,
    pub normalization: AnswerNormalization,
    pub judge_sparql: bool,
    pub judge_quality: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            descriptive: DescriptiveOptions::default(),
            width: 4,
            normalization: AnswerNormalization::default(),
            judge_sparql: true,
            judge_quality: true,
        }
    }
}

impl RunOptions {
    /// Table label for the context combination, e.g. "KG+Map".
    pub fn contexts_label(&self) -> String {
        let mut s = String::from("KG");
        if self.descriptive.use_map_image {
            s.push_str("+Map");
        }
        if self.descriptive.use_search {
            s.push_str("+Internet Search");
        }
        s
    }
}

fn run_factual(item: &BenchmarkItem, p: &QaPipeline, o: &RunOptions) -> FactualOutcome {
    let r = p.answer_factual(&item.question);
    let check = match (&item.gold_answer, r.delivered()) {
        (Some(g), true) => Some(answer_accuracy(&r.answer, g, item.answer_kind, &o.normalization)),
        _ => None,
    };
    let sparql_auto = match (&r.query, o.judge_sparql) {
        (Some(q), true) => Some(sparql_semantic_check(&item.question, q, p.store.schema(), p.bundle, p.gateway.judge.as_ref())),
        _ => None,
    };
    FactualOutcome {
        id: item.id.clone(),
        question: item.question.clone(),
        category: item.category,
        answer_kind: item.answer_kind,
        delivered: r.delivered(),
        answer: r.answer,
        query: r.query,
        attempts: r.attempts,
        failed_stage: match r.status {
            Status::Failed { stage, .. } => Some(stage.as_str().to_string()),
            Status::Delivered => None,
        },
        correct: check.map(|c| c.correct),
        reason: check.and_then(|c| c.reason),
        sparql_auto,
        sparql_manual: None,
    }
}

fn run_descriptive(item: &BenchmarkItem, p: &QaPipeline, o: &RunOptions) -> DescriptiveOutcome {
    let d = p.answer_descriptive(&item.question, o.descriptive);
    let delivered = d.status == Status::Delivered;
    let facts = if delivered {
        fact_check(&d.answer, p.gateway.judge.as_ref(), p, &o.normalization)
    } else {
        FactReport {
            answer: String::new(),
            facts: vec![],
            error: Some("answer not delivered".into()),
        }
    };
    DescriptiveOutcome {
        id: item.id.clone(),
        question: item.question.clone(),
        contexts: o.contexts_label(),
        delivered,
        quality: (delivered && o.judge_quality).then(|| content_quality(&item.question, &d.answer, p.gateway.judge.as_ref())),
        answer: d.answer,
        contexts_used: d.contexts_used,
        sub_questions: d.sub_questions.len(),
        facts,
    }
}

/// Runs every item, `width` at a time; the log keeps benchmark order.
pub fn run_benchmark(items: &[BenchmarkItem], pipeline: &QaPipeline, options: &RunOptions) -> Vec<LogEntry> {
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(options.width.max(1)) {
        let entries: Vec<LogEntry> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|it| {
                    s.spawn(move || match it.answer_kind {
                        AnswerKind::Open => LogEntry::Descriptive(run_descriptive(it, pipeline, options)),
                        _ => LogEntry::Factual(run_factual(it, pipeline, options)),
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("benchmark worker panicked")).collect()
        });
        out.extend(entries);
    }
    out
}
