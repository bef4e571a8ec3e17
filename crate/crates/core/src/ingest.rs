//! Feature ingestion: GeoJSON collections in, ontology triples out.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{area, centroid, distance, geojson, length, Coord, Geometry};
use crate::kgstore::vocab::{cmo, feature_iri, prop};
use crate::kgstore::{Store, StoreError, Term, Triple};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed feature collection: {0}")]
    Malformed(String),
    #[error("year {0} is not a configured timestamp")]
    UnknownYear(i32),
    #[error("no municipality boundaries loaded")]
    NoBoundaries,
    #[error("duplicate municipality name {0:?}")]
    DuplicateMunicipality(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Property key holding the feature type.
    pub type_attribute: String,
    /// Property key holding a municipality's name in the boundary file.
    pub name_attribute: String,
    pub eps_m: f64,
    /// Maximum centroid distance for a gazetteer match.
    pub enrich_cap_m: f64,
    /// Accepted map years; empty accepts any four-digit year.
    pub timestamps: Vec<i32>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            type_attribute: "type".into(),
            name_attribute: "name".into(),
            eps_m: 25.0,
            enrich_cap_m: 50.0,
            timestamps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub local_id: String,
    pub feature_type: String,
    pub year: i32,
    pub sheet: String,
    pub geometry: Geometry,
    pub attributes: BTreeMap<String, String>,
    /// Position in the input collection; part of the IRI.
    pub seq: usize,
}

impl FeatureRecord {
    pub fn iri(&self) -> Term {
        feature_iri(&self.sheet, self.year, &self.feature_type, self.seq)
    }
}

#[derive(Debug, Clone)]
pub struct MunicipalityBoundary {
    pub name: String,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub class: String,
    pub name: String,
    #[serde(rename = "external-id")]
    pub external_id: String,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GazetteerMatch {
    pub name: String,
    pub external_id: String,
    pub match_distance: f64,
}

#[derive(Debug, Error)]
#[error("gazetteer unavailable: {0}")]
pub struct GazetteerError(pub String);

/// Source of present-day names for historical features.
pub trait Gazetteer: Send + Sync {
    /// Entries of `class` whose point lies within `radius` of `center`.
    fn candidates(&self, class: &str, center: Coord, radius: f64) -> Result<Vec<GazetteerEntry>, GazetteerError>;
}

/// Gazetteer backed by a JSON array of entries.
#[derive(Debug, Clone, Default)]
pub struct FixtureGazetteer {
    entries: Vec<GazetteerEntry>,
}

impl FixtureGazetteer {
    pub fn new(entries: Vec<GazetteerEntry>) -> Self {
        Self { entries }
    }

    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        let text = read(path)?;
        let entries = serde_json::from_str(&text).map_err(|e| IngestError::Malformed(e.to_string()))?;
        Ok(Self { entries })
    }
}

impl Gazetteer for FixtureGazetteer {
    fn candidates(&self, class: &str, center: Coord, radius: f64) -> Result<Vec<GazetteerEntry>, GazetteerError> {
        Ok(self
            .entries
            .iter()
            .filter(|e| e.class == class)
            .filter(|e| Coord::new(e.point[0], e.point[1]).distance(&center) <= radius)
            .cloned()
            .collect())
    }
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn features_array(text: &str) -> Result<Vec<Value>, IngestError> {
    let v: Value = serde_json::from_str(text).map_err(|e| IngestError::Malformed(e.to_string()))?;
    if v.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Malformed("not a FeatureCollection".into()));
    }
    match v.get("features") {
        Some(Value::Array(fs)) => Ok(fs.clone()),
        _ => Err(IngestError::Malformed("missing features array".into())),
    }
}

fn attribute_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

/// Municipality polygons from a GeoJSON collection.
pub fn load_boundaries(path: &Path, name_attribute: &str) -> Result<Vec<MunicipalityBoundary>, IngestError> {
    parse_boundaries(&read(path)?, name_attribute)
}

pub fn parse_boundaries(text: &str, name_attribute: &str) -> Result<Vec<MunicipalityBoundary>, IngestError> {
    let mut out: Vec<MunicipalityBoundary> = Vec::new();
    let mut seen = HashSet::new();
    for (i, f) in features_array(text)?.iter().enumerate() {
        let name = f
            .get("properties")
            .and_then(|p| p.get(name_attribute))
            .and_then(attribute_text)
            .ok_or_else(|| IngestError::Malformed(format!("boundary {i} has no {name_attribute:?}")))?;
        let geometry = geojson::from_value(f.get("geometry").unwrap_or(&Value::Null))
            .map_err(|e| IngestError::Malformed(format!("boundary {name:?}: {e}")))?;
        if !geometry.is_areal() {
            return Err(IngestError::Malformed(format!("boundary {name:?} is not areal")));
        }
        if !seen.insert(name.clone()) {
            return Err(IngestError::DuplicateMunicipality(name));
        }
        out.push(MunicipalityBoundary { name, geometry });
    }
    Ok(out)
}

/// Counts for one ingested file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct IngestStats {
    pub input: usize,
    pub ingested: usize,
    pub skipped: usize,
}

/// Collects feature records across files, then emits them into a store.
#[derive(Debug, Default)]
pub struct Ingestor {
    pub config: IngestConfig,
    records: Vec<FeatureRecord>,
    warnings: Vec<String>,
}

impl Ingestor {
    pub fn new(config: IngestConfig) -> Self {
        Self {
            config,
            records: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn ingest_features(&mut self, path: &Path, year: i32, sheet: &str) -> Result<IngestStats, IngestError> {
        let text = read(path)?;
        self.ingest_str(&text, year, sheet)
    }

    pub fn ingest_str(&mut self, text: &str, year: i32, sheet: &str) -> Result<IngestStats, IngestError> {
        if !(1000..=9999).contains(&year) || (!self.config.timestamps.is_empty() && !self.config.timestamps.contains(&year)) {
            return Err(IngestError::UnknownYear(year));
        }
        let features = features_array(text)?;
        let mut stats = IngestStats {
            input: features.len(),
            ..Default::default()
        };
        let key = self.config.type_attribute.clone();
        for (seq, f) in features.iter().enumerate() {
            let props = f.get("properties").and_then(Value::as_object);
            let ftype = props
                .and_then(|p| p.get(&key))
                .and_then(attribute_text)
                .map(|t| t.trim().to_lowercase())
                .filter(|t| !t.is_empty());
            let Some(feature_type) = ftype else {
                self.warn(format!("{sheet}/{year} feature {seq}: missing {key:?} attribute, skipped"));
                stats.skipped += 1;
                continue;
            };
            let geometry = match geojson::from_value(f.get("geometry").unwrap_or(&Value::Null)) {
                Ok(g) => g,
                Err(e) => {
                    self.warn(format!("{sheet}/{year} feature {seq}: invalid geometry ({e}), skipped"));
                    stats.skipped += 1;
                    continue;
                }
            };
            let attributes = props
                .map(|p| {
                    p.iter()
                        .filter(|(k, _)| **k != key)
                        .filter_map(|(k, v)| attribute_text(v).map(|t| (k.clone(), t)))
                        .collect()
                })
                .unwrap_or_default();
            self.records.push(FeatureRecord {
                local_id: format!("{seq:04}"),
                feature_type,
                year,
                sheet: sheet.to_string(),
                geometry,
                attributes,
                seq,
            });
            stats.ingested += 1;
        }
        Ok(stats)
    }

    /// Emits every record into `store`: fixed properties, geometry, metrics,
    /// municipalities and, with a gazetteer, current names. Returns the
    /// number of triples added.
    pub fn emit(
        &mut self,
        store: &mut Store,
        boundaries: &[MunicipalityBoundary],
        gazetteer: Option<&dyn Gazetteer>,
    ) -> Result<usize, IngestError> {
        let before = store.len();
        let records = std::mem::take(&mut self.records);
        for f in &records {
            let iri = f.iri();
            let mut triples = vec![
                Triple::new(iri.clone(), cmo(prop::FEATURE_TYPE), Term::string(&f.feature_type)),
                Triple::new(iri.clone(), cmo(prop::YEAR), Term::integer(f.year as i64)),
                Triple::new(iri.clone(), cmo(prop::SHEET), Term::string(&f.sheet)),
            ];
            let g = store.add_geometry(f.geometry.clone())?;
            triples.push(Triple::new(iri.clone(), cmo(prop::WKT), g));
            triples.extend(derive_metrics(f));
            if !boundaries.is_empty() {
                let names = assign_municipality(f, boundaries, self.config.eps_m)?;
                if names.is_empty() {
                    self.warn(format!("{}: outside every municipality", iri.as_iri().unwrap_or_default()));
                }
                for n in names {
                    triples.push(Triple::new(iri.clone(), cmo(prop::MUNICIPALITY), Term::string(n)));
                }
            }
            if let Some(client) = gazetteer {
                match enrich(f, client, self.config.enrich_cap_m) {
                    Ok(Some(m)) => {
                        triples.push(Triple::new(iri.clone(), cmo(prop::CURRENT_NAME), Term::string(&m.name)));
                        triples.push(Triple::new(iri.clone(), cmo(prop::OSM_ID), Term::string(&m.external_id)));
                    }
                    Ok(None) => {}
                    Err(e) => self.warn(format!("{}: enrichment skipped ({e})", iri.as_iri().unwrap_or_default())),
                }
            }
            for t in triples {
                store.insert(t)?;
            }
        }
        self.records = records;
        Ok(store.len() - before)
    }
}

/// Area or length triple, rounded to whole meters; nothing for points.
pub fn derive_metrics(f: &FeatureRecord) -> Vec<Triple> {
    let iri = f.iri();
    if f.geometry.is_areal() {
        let a = area(&f.geometry).expect("areal geometry");
        vec![Triple::new(iri, cmo(prop::AREA_SQM), Term::integer(a.round() as i64))]
    } else if f.geometry.is_linear() {
        let l = length(&f.geometry).expect("linear geometry");
        vec![Triple::new(iri, cmo(prop::LENGTH_M), Term::integer(l.round() as i64))]
    } else {
        Vec::new()
    }
}

/// Names of every municipality within `eps` of the feature, in boundary order.
pub fn assign_municipality(
    f: &FeatureRecord,
    boundaries: &[MunicipalityBoundary],
    eps: f64,
) -> Result<Vec<String>, IngestError> {
    if boundaries.is_empty() {
        return Err(IngestError::NoBoundaries);
    }
    let fb = f.geometry.bbox().expand(eps);
    Ok(boundaries
        .iter()
        .filter(|b| b.geometry.bbox().intersects(&fb))
        .filter(|b| distance(&f.geometry, &b.geometry) <= eps)
        .map(|b| b.name.clone())
        .collect())
}

/// Nearest same-class gazetteer entry within `cap` meters of the feature
/// centroid; ties go to the smaller external id.
pub fn enrich(f: &FeatureRecord, client: &dyn Gazetteer, cap: f64) -> Result<Option<GazetteerMatch>, GazetteerError> {
    let c = centroid(&f.geometry).expect("valid geometry has a centroid");
    let mut best: Option<GazetteerMatch> = None;
    for e in client.candidates(&f.feature_type, c, cap)? {
        if e.class != f.feature_type {
            continue;
        }
        let d = Coord::new(e.point[0], e.point[1]).distance(&c);
        if d > cap {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => d < b.match_distance || (d == b.match_distance && e.external_id < b.external_id),
        };
        if better {
            best = Some(GazetteerMatch {
                name: e.name,
                external_id: e.external_id,
                match_distance: d,
            });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn collection(features: Vec<Value>) -> String {
        json!({"type": "FeatureCollection", "features": features}).to_string()
    }

    fn feature(t: Option<&str>, geometry: Value) -> Value {
        match t {
            Some(t) => json!({"type": "Feature", "properties": {"type": t}, "geometry": geometry}),
            None => json!({"type": "Feature", "properties": {}, "geometry": geometry}),
        }
    }

    fn square(x: f64, y: f64, s: f64) -> Value {
        json!({"type": "Polygon", "coordinates": [[[x, y], [x + s, y], [x + s, y + s], [x, y + s], [x, y]]]})
    }

    fn record(t: &str, g: Geometry) -> FeatureRecord {
        FeatureRecord {
            local_id: "0000".into(),
            feature_type: t.into(),
            year: 1901,
            sheet: "s".into(),
            geometry: g,
            attributes: BTreeMap::new(),
            seq: 0,
        }
    }

    #[test]
    fn counts_and_skips() {
        let mut ing = Ingestor::default();
        let text = collection(vec![
            feature(Some("Lake"), square(0.0, 0.0, 10.0)),
            feature(Some("lake"), Value::Null),
            feature(None, square(0.0, 0.0, 1.0)),
            feature(Some("stream"), json!({"type": "LineString", "coordinates": [[0, 0], [3, 4]]})),
        ]);
        let stats = ing.ingest_str(&text, 1901, "s1").unwrap();
        assert_eq!(stats, IngestStats { input: 4, ingested: 2, skipped: 2 });
        assert_eq!(ing.warnings().len(), 2);
        assert_eq!(ing.records()[0].feature_type, "lake");
        assert_eq!(ing.records()[1].local_id, "0003");
        assert_eq!(ing.ingest_str(&collection(vec![]), 1901, "s1").unwrap().input, 0);
        assert!(matches!(ing.ingest_str("{\"type\": \"Feature\"}", 1901, "s1"), Err(IngestError::Malformed(_))));
        assert!(matches!(ing.ingest_str(&collection(vec![]), 190, "s1"), Err(IngestError::UnknownYear(190))));
    }

    #[test]
    fn metrics() {
        let holed = Geometry::polygon(
            [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)],
            vec![vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]],
        )
        .unwrap();
        let t = derive_metrics(&record("lake", holed));
        assert_eq!(t[0].predicate, cmo(prop::AREA_SQM));
        assert_eq!(t[0].object, Term::integer(12));
        let t = derive_metrics(&record("stream", Geometry::line_string([(0.0, 0.0), (3.0, 4.0)]).unwrap()));
        assert_eq!(t[0].object, Term::integer(5));
        assert!(derive_metrics(&record("well", Geometry::point(1.0, 1.0).unwrap())).is_empty());
    }

    #[test]
    fn municipalities() {
        let bounds = vec![
            MunicipalityBoundary { name: "aarberg".into(), geometry: Geometry::rect(0.0, 0.0, 1000.0, 1000.0).unwrap() },
            MunicipalityBoundary { name: "bargen".into(), geometry: Geometry::rect(1000.0, 0.0, 2000.0, 1000.0).unwrap() },
        ];
        let lake = record("lake", Geometry::rect(100.0, 100.0, 200.0, 200.0).unwrap());
        assert_eq!(assign_municipality(&lake, &bounds, 25.0).unwrap(), vec!["aarberg"]);
        let river = record("river", Geometry::line_string([(500.0, 500.0), (1500.0, 500.0)]).unwrap());
        assert_eq!(assign_municipality(&river, &bounds, 25.0).unwrap(), vec!["aarberg", "bargen"]);
        let far = record("lake", Geometry::rect(5000.0, 5000.0, 5100.0, 5100.0).unwrap());
        assert!(assign_municipality(&far, &bounds, 25.0).unwrap().is_empty());
        assert!(matches!(assign_municipality(&far, &[], 25.0), Err(IngestError::NoBoundaries)));
    }

    struct Down;

    impl Gazetteer for Down {
        fn candidates(&self, _: &str, _: Coord, _: f64) -> Result<Vec<GazetteerEntry>, GazetteerError> {
            Err(GazetteerError("connection refused".into()))
        }
    }

    #[test]
    fn enrichment() {
        let lake = record("lake", Geometry::rect(0.0, 0.0, 20.0, 20.0).unwrap());
        let entry = |id: &str, x: f64, class: &str| GazetteerEntry {
            class: class.into(),
            name: format!("name {id}"),
            external_id: id.into(),
            point: [x, 10.0],
        };
        let gz = FixtureGazetteer::new(vec![
            entry("b", 20.0, "lake"),
            entry("a", 0.0, "lake"),
            entry("c", 11.0, "forest"),
            entry("d", 510.0, "lake"),
        ]);
        let m = enrich(&lake, &gz, 50.0).unwrap().unwrap();
        assert_eq!((m.external_id.as_str(), m.match_distance), ("a", 10.0));
        let far = FixtureGazetteer::new(vec![entry("d", 510.0, "lake")]);
        assert_eq!(enrich(&lake, &far, 50.0).unwrap(), None);
        assert!(enrich(&lake, &Down, 50.0).is_err());
    }

    #[test]
    fn gazetteer_failure_is_a_warning() {
        let mut ing = Ingestor::default();
        ing.ingest_str(&collection(vec![feature(Some("lake"), square(0.0, 0.0, 10.0))]), 1901, "s1").unwrap();
        let mut store = Store::default();
        let added = ing.emit(&mut store, &[], Some(&Down)).unwrap();
        assert_eq!(added, 5);
        assert_eq!(ing.warnings().len(), 1);
    }
}
