use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::vocab::{prop, CMO, CMR};
use super::{Literal, StoreError, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    /// Exactly one value per feature.
    Fixed,
    Optional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Range {
    String,
    Integer,
    Decimal,
    Boolean,
    /// Four-digit integer.
    Year,
    Geometry,
}

impl Range {
    pub fn admits(self, t: &Term) -> bool {
        match (self, t) {
            (Range::String, Term::Literal(Literal::String(_))) => true,
            (Range::Integer, Term::Literal(Literal::Integer(_))) => true,
            (Range::Decimal, Term::Literal(Literal::Decimal(_) | Literal::Integer(_))) => true,
            (Range::Boolean, Term::Literal(Literal::Boolean(_))) => true,
            (Range::Year, Term::Literal(Literal::Integer(y))) => (1000..=9999).contains(y),
            (Range::Geometry, Term::Geometry(_)) => true,
            _ => false,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Range::String => "string",
            Range::Integer => "integer",
            Range::Decimal => "decimal",
            Range::Boolean => "boolean",
            Range::Year => "year",
            Range::Geometry => "geometry",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub iri: String,
    pub cardinality: Cardinality,
    pub range: Range,
    /// Whether a feature may carry several values.
    #[serde(default)]
    pub multi: bool,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub iri: String,
    pub inverse: Option<String>,
    #[serde(default)]
    pub description: String,
}

/// Closed predicate catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub properties: Vec<PropertyDef>,
    pub relations: Vec<RelationDef>,
}

pub enum PredicateDef<'a> {
    Property(&'a PropertyDef),
    Relation(&'a RelationDef),
}

impl Default for Schema {
    fn default() -> Self {
        Self::chronomap()
    }
}

impl Schema {
    /// Catalog of the map-feature ontology.
    pub fn chronomap() -> Self {
        let p = |local: &str, cardinality, range, multi, description: &str| PropertyDef {
            iri: format!("{CMO}{local}"),
            cardinality,
            range,
            multi,
            description: description.to_string(),
        };
        use Cardinality::*;
        let properties = vec![
            p(prop::FEATURE_TYPE, Fixed, Range::String, false, "feature class, e.g. \"lake\""),
            p(prop::YEAR, Fixed, Range::Year, false, "map edition year"),
            p(prop::SHEET, Fixed, Range::String, false, "map sheet identifier"),
            p(prop::MUNICIPALITY, Optional, Range::String, true, "municipality the feature lies in; may repeat"),
            p(prop::AREA_SQM, Optional, Range::Integer, false, "area in square meters (areal features)"),
            p(prop::LENGTH_M, Optional, Range::Integer, false, "length in meters (linear features)"),
            p(prop::CURRENT_NAME, Optional, Range::String, false, "present-day name from the gazetteer"),
            p(prop::OSM_ID, Optional, Range::String, false, "gazetteer identifier"),
            p(prop::WKT, Optional, Range::Geometry, false, "geometry as WKT"),
        ];
        let r = |local: &str, inverse: &str, description: &str| RelationDef {
            iri: format!("{CMR}{local}"),
            inverse: Some(format!("{CMR}{inverse}")),
            description: description.to_string(),
        };
        let relations = vec![
            r("intersects", "intersects", "geometries meet within the tolerance"),
            r("touches", "touches", "meet without interior overlap"),
            r("contains", "within", "subject covers object"),
            r("within", "contains", "subject lies inside object"),
            r("crosses", "crosses", "a line passes through the other feature"),
            r("overlaps", "overlaps", "partial interior overlap"),
            r("near", "near", "disjoint but close"),
            r("northOf", "southOf", "subject lies north of object"),
            r("northEastOf", "southWestOf", "subject lies north-east of object"),
            r("eastOf", "westOf", "subject lies east of object"),
            r("southEastOf", "northWestOf", "subject lies south-east of object"),
            r("southOf", "northOf", "subject lies south of object"),
            r("southWestOf", "northEastOf", "subject lies south-west of object"),
            r("westOf", "eastOf", "subject lies west of object"),
            r("northWestOf", "southEastOf", "subject lies north-west of object"),
            r("changedTo", "changedFrom", "same type, next map year"),
            r("changedFrom", "changedTo", "same type, previous map year"),
            r("transformedTo", "transformedFrom", "different type, next map year"),
            r("transformedFrom", "transformedTo", "different type, previous map year"),
        ];
        Schema {
            properties,
            relations,
        }
    }

    pub fn lookup(&self, iri: &str) -> Option<PredicateDef<'_>> {
        if let Some(p) = self.properties.iter().find(|p| p.iri == iri) {
            return Some(PredicateDef::Property(p));
        }
        self.relations
            .iter()
            .find(|r| r.iri == iri)
            .map(PredicateDef::Relation)
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.lookup(iri).is_some()
    }

    pub fn property(&self, iri: &str) -> Option<&PropertyDef> {
        self.properties.iter().find(|p| p.iri == iri)
    }

    pub fn relation(&self, iri: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.iri == iri)
    }

    pub fn inverse_of(&self, iri: &str) -> Option<&str> {
        self.relation(iri).and_then(|r| r.inverse.as_deref())
    }

    /// Checks that inverses are declared symmetrically and IRIs are unique.
    pub fn check(&self) -> Result<(), StoreError> {
        let mut seen = HashMap::new();
        for iri in self
            .properties
            .iter()
            .map(|p| &p.iri)
            .chain(self.relations.iter().map(|r| &r.iri))
        {
            if seen.insert(iri.as_str(), ()).is_some() {
                return Err(StoreError::InvalidSchema(format!("duplicate predicate <{iri}>")));
            }
        }
        for r in &self.relations {
            if let Some(inv) = &r.inverse {
                if self.inverse_of(inv) != Some(r.iri.as_str()) {
                    return Err(StoreError::InvalidSchema(format!(
                        "<{}> names inverse <{inv}> which does not name it back",
                        r.iri
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let s: Schema = serde_json::from_str(text).map_err(|e| StoreError::InvalidSchema(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    /// Compact catalog listing for prompts, fixed properties first.
    pub fn catalog_text(&self) -> String {
        let mut out = String::new();
        let section = |out: &mut String, title: &str, card: Cardinality| {
            let _ = writeln!(out, "{title}:");
            for p in self.properties.iter().filter(|p| p.cardinality == card) {
                let _ = writeln!(
                    out,
                    "  {} ({}{}) - {}",
                    super::vocab::compact(&p.iri),
                    p.range.as_str(),
                    if p.multi { ", repeatable" } else { "" },
                    p.description
                );
            }
        };
        section(&mut out, "Fixed properties (every feature has exactly one)", Cardinality::Fixed);
        section(&mut out, "Optional properties", Cardinality::Optional);
        let _ = writeln!(out, "Relations between features (subject relation object):");
        for r in &self.relations {
            let _ = writeln!(out, "  {} - {}", super::vocab::compact(&r.iri), r.description);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_is_consistent() {
        let s = Schema::chronomap();
        s.check().unwrap();
        assert_eq!(s.inverse_of(&format!("{CMR}contains")), Some(format!("{CMR}within").as_str()));
        assert_eq!(Schema::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn asymmetric_inverse_is_rejected() {
        let mut s = Schema::chronomap();
        s.relations[2].inverse = Some(format!("{CMR}near"));
        assert!(s.check().is_err());
    }

    #[test]
    fn year_range() {
        assert!(Range::Year.admits(&Term::integer(1901)));
        assert!(!Range::Year.admits(&Term::integer(190)));
        assert!(!Range::Year.admits(&Term::string("1901")));
    }
}
