//! IRIs of the house ontology.

use super::Term;

pub const BASE: &str = "http://chronomap.local/";
pub const CMF: &str = "http://chronomap.local/feature/";
pub const CMO: &str = "http://chronomap.local/ontology#";
pub const CMR: &str = "http://chronomap.local/relation#";

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
pub const GEO_WKT_LITERAL: &str = "http://www.opengis.net/ont/geosparql#wktLiteral";

/// Prefixes every query may use without declaring them.
pub const DEFAULT_PREFIXES: [(&str, &str); 3] = [("cmf", CMF), ("cmo", CMO), ("cmr", CMR)];

pub fn cmo(local: &str) -> Term {
    Term::iri(format!("{CMO}{local}"))
}

pub fn cmr(local: &str) -> Term {
    Term::iri(format!("{CMR}{local}"))
}

/// `cmf:{sheet}_{year}_{type}_{seq}` with a zero-padded sequence number.
pub fn feature_iri(sheet: &str, year: i32, feature_type: &str, seq: usize) -> Term {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' })
            .collect()
    };
    Term::iri(format!(
        "{CMF}{}_{year}_{}_{seq:04}",
        clean(sheet),
        clean(feature_type)
    ))
}

/// Short `prefix:local` form when the IRI falls in a default namespace.
pub fn compact(iri: &str) -> String {
    for (prefix, ns) in DEFAULT_PREFIXES {
        if let Some(local) = iri.strip_prefix(ns) {
            return format!("{prefix}:{local}");
        }
    }
    format!("<{iri}>")
}

pub mod prop {
    pub const FEATURE_TYPE: &str = "featureType";
    pub const YEAR: &str = "year";
    pub const SHEET: &str = "sheet";
    pub const MUNICIPALITY: &str = "municipality";
    pub const AREA_SQM: &str = "areaSqm";
    pub const LENGTH_M: &str = "lengthM";
    pub const CURRENT_NAME: &str = "currentName";
    pub const OSM_ID: &str = "osmId";
    pub const WKT: &str = "wkt";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_iris() {
        assert_eq!(
            feature_iri("sheet 138", 1901, "lake", 7),
            Term::iri("http://chronomap.local/feature/sheet-138_1901_lake_0007")
        );
        assert_eq!(compact("http://chronomap.local/relation#near"), "cmr:near");
        assert_eq!(compact("http://x/y"), "<http://x/y>");
    }
}
