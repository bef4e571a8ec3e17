use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::vocab::{GEO_WKT_LITERAL, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING};
use super::StoreError;

/// Finite `f64` with total equality, so decimals can live in hashed and
/// ordered collections. `-0.0` is folded into `0.0`.
#[derive(Debug, Clone, Copy)]
pub struct Decimal(f64);

impl Decimal {
    pub fn new(v: f64) -> Result<Self, StoreError> {
        if !v.is_finite() {
            return Err(StoreError::InvalidTerm(format!("decimal {v} is not finite")));
        }
        Ok(Decimal(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// xsd:decimal lexical form; always contains a '.', never an exponent.
    pub fn lexical(self) -> String {
        let s = self.0.to_string();
        if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Decimal {}

impl Hash for Decimal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    String(Arc<str>),
    Integer(i64),
    Decimal(Decimal),
    Boolean(bool),
}

impl Literal {
    pub fn string(s: impl AsRef<str>) -> Self {
        Literal::String(Arc::from(s.as_ref()))
    }

    pub fn datatype(&self) -> &'static str {
        match self {
            Literal::String(_) => XSD_STRING,
            Literal::Integer(_) => XSD_INTEGER,
            Literal::Decimal(_) => XSD_DECIMAL,
            Literal::Boolean(_) => XSD_BOOLEAN,
        }
    }

    pub fn lexical(&self) -> String {
        match self {
            Literal::String(s) => s.to_string(),
            Literal::Integer(i) => i.to_string(),
            Literal::Decimal(d) => d.lexical(),
            Literal::Boolean(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Integer(i) => Some(*i as f64),
            Literal::Decimal(d) => Some(d.get()),
            _ => None,
        }
    }

    /// Parses a lexical form for one of the supported datatypes.
    pub fn from_lexical(lexical: &str, datatype: &str) -> Result<Self, StoreError> {
        let bad = || StoreError::InvalidTerm(format!("'{lexical}' is not a valid <{datatype}>"));
        match datatype {
            XSD_STRING => Ok(Literal::string(lexical)),
            XSD_INTEGER => lexical.parse().map(Literal::Integer).map_err(|_| bad()),
            XSD_DECIMAL => {
                let v: f64 = lexical.parse().map_err(|_| bad())?;
                Decimal::new(v).map(Literal::Decimal)
            }
            XSD_BOOLEAN => match lexical {
                "true" => Ok(Literal::Boolean(true)),
                "false" => Ok(Literal::Boolean(false)),
                _ => Err(bad()),
            },
            _ => Err(StoreError::InvalidTerm(format!("unsupported datatype <{datatype}>"))),
        }
    }
}

/// Index into a store's geometry table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeomHandle(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Arc<str>),
    Literal(Literal),
    Geometry(GeomHandle),
}

impl Term {
    pub fn iri(s: impl AsRef<str>) -> Self {
        Term::Iri(Arc::from(s.as_ref()))
    }

    pub fn string(s: impl AsRef<str>) -> Self {
        Term::Literal(Literal::string(s))
    }

    pub fn integer(i: i64) -> Self {
        Term::Literal(Literal::Integer(i))
    }

    pub fn decimal(v: f64) -> Result<Self, StoreError> {
        Decimal::new(v).map(|d| Term::Literal(Literal::Decimal(d)))
    }

    pub fn boolean(b: bool) -> Self {
        Term::Literal(Literal::Boolean(b))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Term::Literal(Literal::String(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Term::Literal(Literal::Integer(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_literal().and_then(Literal::as_f64)
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "<{i}>"),
            Term::Literal(l) => f.write_str(&literal_nt(&l.lexical(), l.datatype())),
            Term::Geometry(h) => write!(f, "_:geometry{}", h.0),
        }
    }
}

/// Whether `iri` starts with a URI scheme.
pub fn is_absolute_iri(iri: &str) -> bool {
    let Some((scheme, rest)) = iri.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.is_empty()
        && !iri.contains(|c: char| c.is_whitespace() || matches!(c, '<' | '>' | '"'))
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn literal_nt(lexical: &str, datatype: &str) -> String {
    format!("\"{}\"^^<{}>", escape(lexical), datatype)
}

pub(crate) fn wkt_nt(wkt: &str) -> String {
    literal_nt(wkt, GEO_WKT_LITERAL)
}
