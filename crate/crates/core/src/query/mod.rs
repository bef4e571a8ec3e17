//! SPARQL subset over the materialized store.

mod ast;
mod eval;
mod lexer;
mod naive;
mod parser;
mod printer;
mod results;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use eval::{evaluate, term_order, EvalStats, Evaluation, QueryResult, SolutionTable};
pub use naive::evaluate_naive;
pub use parser::parse;
pub use printer::print;
pub use results::{term_json, to_sparql_json, validate_sparql_json};

use crate::kgstore::{Schema, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {col}: found {found}{}", fmt_expected(expected))]
    Syntax {
        line: usize,
        col: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown prefix '{prefix}:' at line {line}, column {col}")]
    UnknownPrefix { prefix: String, line: usize, col: usize },
    #[error("{0}")]
    Semantic(String),
    #[error("store must be sealed before querying")]
    NotSealed,
}

fn fmt_expected(e: &[String]) -> String {
    if e.is_empty() {
        String::new()
    } else {
        format!("; expected {}", e.join(" or "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaViolation {
    pub predicate: String,
    /// 1-based element indices, descending into OPTIONAL blocks.
    pub position: Vec<usize>,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.position.iter().map(|p| p.to_string()).collect();
        write!(f, "unknown predicate <{}> in pattern {}", self.predicate, path.join("."))
    }
}

/// Constant predicates missing from the catalog; variable predicates pass.
pub fn validate_against_schema(q: &Query, schema: &Schema) -> Vec<SchemaViolation> {
    q.pattern
        .triples_with_paths()
        .into_iter()
        .filter_map(|(position, t)| {
            let TermPattern::Const(c) = &t.predicate else {
                return None;
            };
            let predicate = match c {
                Term::Iri(i) if schema.contains(i) => return None,
                Term::Iri(i) => i.to_string(),
                other => other.to_string(),
            };
            Some(SchemaViolation { predicate, position })
        })
        .collect()
}
