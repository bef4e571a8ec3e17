//! Indexed triple store over a closed predicate catalog.

mod ntriples;
mod schema;
mod store;
mod term;
pub mod vocab;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use schema::{Cardinality, PredicateDef, PropertyDef, Range, RelationDef, Schema};
pub use store::{FeatureView, IndexKind, Store, TermId, Triple};
pub use term::{is_absolute_iri, Decimal, GeomHandle, Literal, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("predicate <{predicate}> is not in the schema{}", fmt_line(*line))]
    SchemaViolation { predicate: String, line: Option<usize> },
    #[error("predicate <{predicate}> expects {expected}, got {found}")]
    TypeViolation {
        predicate: String,
        expected: &'static str,
        found: String,
    },
    #[error("store is sealed")]
    Sealed,
    #[error("store must be sealed first")]
    NotSealed,
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn fmt_line(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl StoreError {
    pub(crate) fn at_line(self, line: usize) -> StoreError {
        match self {
            StoreError::SchemaViolation { predicate, .. } => StoreError::SchemaViolation {
                predicate,
                line: Some(line),
            },
            StoreError::Parse { .. } => self,
            other => StoreError::Parse {
                line,
                message: other.to_string(),
            },
        }
    }
}
