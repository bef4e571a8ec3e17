//! Precomputed spatial and temporal relation edges between features.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{
    area, buffer, cardinal_between, centroid, distance, intersection_area_with, length_inside, overlap_ratio_with,
    relate, relate_prepared, BBox, BBoxIndex, CardinalDirection, Coord, Geometry, GeometryError, OverlapBackend,
    PreparedGeometry, Relation,
};
use crate::ingest::FeatureRecord;
use crate::kgstore::vocab::{cmr, CMR};
use crate::kgstore::{FeatureView, Store, StoreError, Term, Triple};

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("invalid relation config: {0}")]
    Config(String),
    #[error("feature {iri}: {source}")]
    Geometry { iri: String, source: GeometryError },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("provenance log: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationConfig {
    pub eps_m: f64,
    pub near_m: f64,
    pub cardinal_max_m: f64,
    pub change_iou: f64,
    pub transform_overlap: f64,
    pub timestamps: Vec<i32>,
    /// How intersection areas are measured for temporal matching.
    pub overlap: OverlapBackend,
}

impl Default for RelationConfig {
    fn default() -> Self {
        Self {
            eps_m: 25.0,
            near_m: 100.0,
            cardinal_max_m: 2000.0,
            change_iou: 0.3,
            transform_overlap: 0.5,
            timestamps: vec![1877, 1901, 1916, 1930],
            overlap: OverlapBackend::default(),
        }
    }
}

impl RelationConfig {
    pub fn validate(&self) -> Result<(), RelationError> {
        let bad = |m: String| Err(RelationError::Config(m));
        for (name, v) in [("eps_m", self.eps_m), ("near_m", self.near_m), ("cardinal_max_m", self.cardinal_max_m)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        for (name, v) in [("change_iou", self.change_iou), ("transform_overlap", self.transform_overlap)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if self.timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return bad("timestamps must be strictly increasing".into());
        }
        if let OverlapBackend::Grid { cell_m } = self.overlap {
            if !(cell_m > 0.0 && cell_m.is_finite()) {
                return bad(format!("grid cell size must be positive, got {cell_m}"));
            }
        }
        Ok(())
    }

    /// Short digest identifying the thresholds in provenance records.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// Bounding-box expansion that keeps every edge-producing pair.
    pub fn reach(&self) -> f64 {
        self.eps_m.max(self.near_m).max(self.cardinal_max_m)
    }
}

/// The parts of a feature relation computation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RelFeature {
    pub iri: String,
    pub feature_type: String,
    pub year: i32,
    pub geometry: Geometry,
}

impl From<&FeatureRecord> for RelFeature {
    fn from(f: &FeatureRecord) -> Self {
        Self {
            iri: f.iri().as_iri().unwrap_or_default().to_string(),
            feature_type: f.feature_type.clone(),
            year: f.year,
            geometry: f.geometry.clone(),
        }
    }
}

impl RelFeature {
    pub fn from_view(v: &FeatureView) -> Option<Self> {
        Some(Self {
            iri: v.iri.clone(),
            feature_type: v.feature_type.clone(),
            year: v.year,
            geometry: v.geometry.clone()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub from: String,
    pub to: String,
    /// Local name in the `cmr:` namespace.
    pub predicate: String,
    pub provenance: Provenance,
}

impl RelationEdge {
    fn new(from: &str, to: &str, predicate: &str, metric: &str, value: f64) -> Self {
        Self {
            from: from.to_string(),
            to: to.to_string(),
            predicate: predicate.to_string(),
            provenance: Provenance {
                metric: metric.to_string(),
                value,
            },
        }
    }

    pub fn predicate_iri(&self) -> String {
        format!("{CMR}{}", self.predicate)
    }

    fn key(&self) -> (&str, &str, &str) {
        (&self.from, &self.to, &self.predicate)
    }
}

/// Sorts edges by (from, to, predicate) and drops repeats.
pub fn sort_edges(edges: &mut Vec<RelationEdge>) {
    edges.sort_by(|a, b| a.key().cmp(&b.key()));
    edges.dedup_by(|a, b| a.key() == b.key());
}

pub fn cardinal_predicate(d: CardinalDirection) -> &'static str {
    match d {
        CardinalDirection::N => "northOf",
        CardinalDirection::NE => "northEastOf",
        CardinalDirection::E => "eastOf",
        CardinalDirection::SE => "southEastOf",
        CardinalDirection::S => "southOf",
        CardinalDirection::SW => "southWestOf",
        CardinalDirection::W => "westOf",
        CardinalDirection::NW => "northWestOf",
    }
}

/// A feature with everything pair computations reuse.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub feature: &'a RelFeature,
    geometry: PreparedGeometry,
    /// eps-buffer; a zero-area hull when eps is zero and the feature is not areal.
    buffered: Geometry,
    bbox: BBox,
    centroid: Coord,
}

pub fn prepare<'a>(features: &'a [RelFeature], eps: f64) -> Result<Vec<Prepared<'a>>, RelationError> {
    features
        .iter()
        .map(|f| {
            let err = |source| RelationError::Geometry {
                iri: f.iri.clone(),
                source,
            };
            let geometry = PreparedGeometry::new(f.geometry.clone(), eps).map_err(err)?;
            let buffered = match geometry.region() {
                Some(r) => r.clone(),
                None => buffer(&f.geometry, eps).map_err(err)?,
            };
            Ok(Prepared {
                feature: f,
                bbox: f.geometry.bbox(),
                centroid: centroid(&f.geometry).map_err(err)?,
                geometry,
                buffered,
            })
        })
        .collect()
}

/// Index pairs `(i, j)`, `i < j`, whose bounding boxes, each expanded by
/// `cfg.reach()`, intersect.
pub fn candidate_pairs(features: &[Prepared<'_>], cfg: &RelationConfig) -> Vec<(usize, usize)> {
    let r = cfg.reach();
    let index = BBoxIndex::new(features.iter().enumerate().map(|(i, f)| (f.bbox.expand(r), i)).collect());
    let mut pairs = Vec::new();
    for (i, f) in features.iter().enumerate() {
        for j in index.query(&f.bbox.expand(r)) {
            if j > i {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn push_both(out: &mut Vec<RelationEdge>, a: &str, b: &str, forward: &str, backward: &str, metric: &str, v: f64) {
    out.push(RelationEdge::new(a, b, forward, metric, v));
    out.push(RelationEdge::new(b, a, backward, metric, v));
}

/// Spatial edges between two features of one year, in both directions.
pub fn spatial_pair(a: &Prepared<'_>, b: &Prepared<'_>, cfg: &RelationConfig) -> Result<Vec<RelationEdge>, RelationError> {
    let (ia, ib) = (a.feature.iri.as_str(), b.feature.iri.as_str());
    let mut out = Vec::new();
    let d = distance(&a.feature.geometry, &b.feature.geometry);
    if d <= cfg.eps_m {
        let rels = relate_prepared(&a.geometry, &b.geometry).map_err(|source| RelationError::Geometry {
            iri: ia.to_string(),
            source,
        })?;
        spatial_from_relations(&mut out, ia, ib, rels, d);
    } else if d <= cfg.near_m {
        push_both(&mut out, ia, ib, "near", "near", "distance_m", d);
    }
    let cd = a.centroid.distance(&b.centroid);
    if cd <= cfg.cardinal_max_m {
        if let Ok(dir) = cardinal_between(a.centroid, b.centroid) {
            // b seen from a in direction `dir` means b lies `dir` of a
            push_both(
                &mut out,
                ib,
                ia,
                cardinal_predicate(dir),
                cardinal_predicate(dir.opposite()),
                "centroid_distance_m",
                cd,
            );
        }
    }
    Ok(out)
}

fn spatial_from_relations(out: &mut Vec<RelationEdge>, ia: &str, ib: &str, rels: crate::geometry::RelationSet, d: f64) {
    for r in rels.iter() {
        match r {
            Relation::Disjoint => {}
            Relation::Contains => push_both(out, ia, ib, "contains", "within", "distance_m", d),
            Relation::Within => push_both(out, ia, ib, "within", "contains", "distance_m", d),
            other => push_both(out, ia, ib, other.as_str(), other.as_str(), "distance_m", d),
        }
    }
}

/// Spatial edges among features of one year, restricted to candidate pairs.
pub fn compute_spatial(features: &[RelFeature], cfg: &RelationConfig) -> Result<Vec<RelationEdge>, RelationError> {
    cfg.validate()?;
    let prepared = prepare(features, cfg.eps_m)?;
    let mut edges = Vec::new();
    for (i, j) in candidate_pairs(&prepared, cfg) {
        edges.extend(spatial_pair(&prepared[i], &prepared[j], cfg)?);
    }
    sort_edges(&mut edges);
    Ok(edges)
}

/// Reference computation over every pair with unprepared predicates.
pub fn compute_spatial_brute_force(features: &[RelFeature], cfg: &RelationConfig) -> Result<Vec<RelationEdge>, RelationError> {
    let mut edges = Vec::new();
    for (i, a) in features.iter().enumerate() {
        for b in &features[i + 1..] {
            let d = distance(&a.geometry, &b.geometry);
            if d <= cfg.eps_m {
                let rels = relate(&a.geometry, &b.geometry, cfg.eps_m).map_err(|source| RelationError::Geometry {
                    iri: a.iri.clone(),
                    source,
                })?;
                spatial_from_relations(&mut edges, &a.iri, &b.iri, rels, d);
            } else if d <= cfg.near_m {
                push_both(&mut edges, &a.iri, &b.iri, "near", "near", "distance_m", d);
            }
            let (ca, cb) = (centroid(&a.geometry).unwrap(), centroid(&b.geometry).unwrap());
            if ca.distance(&cb) <= cfg.cardinal_max_m && ca != cb {
                let dir = crate::geometry::cardinal(&a.geometry, &b.geometry).unwrap();
                let v = ca.distance(&cb);
                push_both(
                    &mut edges,
                    &b.iri,
                    &a.iri,
                    cardinal_predicate(dir),
                    cardinal_predicate(dir.opposite()),
                    "centroid_distance_m",
                    v,
                );
            }
        }
    }
    sort_edges(&mut edges);
    Ok(edges)
}

/// Share of the combined length of two lines lying within `eps` of the other.
fn buffered_length_share(a: &Prepared<'_>, b: &Prepared<'_>) -> f64 {
    let (ga, gb) = (&a.feature.geometry, &b.feature.geometry);
    let la = length_inside(ga, &b.buffered).unwrap_or(0.0);
    let lb = length_inside(gb, &a.buffered).unwrap_or(0.0);
    let total = crate::geometry::length(ga).unwrap_or(0.0) + crate::geometry::length(gb).unwrap_or(0.0);
    if total > 0.0 {
        (la + lb) / total
    } else {
        0.0
    }
}

/// Share of the non-areal geometry lying within `eps` of the other one.
fn mixed_share(line_or_point: &Prepared<'_>, other: &Prepared<'_>, eps: f64) -> f64 {
    let g = &line_or_point.feature.geometry;
    match g {
        Geometry::Point(_) => {
            if distance(g, &other.feature.geometry) <= eps {
                1.0
            } else {
                0.0
            }
        }
        _ => {
            let total = crate::geometry::length(g).unwrap_or(0.0);
            if total > 0.0 {
                length_inside(g, &other.buffered).unwrap_or(0.0) / total
            } else {
                0.0
            }
        }
    }
}

/// Overlap measure between features of adjacent years: `(metric, value)`.
fn temporal_measure(
    a: &Prepared<'_>,
    b: &Prepared<'_>,
    same_type: bool,
    cfg: &RelationConfig,
) -> Result<(&'static str, f64), GeometryError> {
    let (ga, gb) = (&a.feature.geometry, &b.feature.geometry);
    match (ga.dimension(), gb.dimension()) {
        (2, 2) if same_type => Ok(("iou", overlap_ratio_with(ga, gb, cfg.overlap)?)),
        (2, 2) => {
            let smaller = area(ga)?.min(area(gb)?);
            let inter = intersection_area_with(ga, gb, cfg.overlap)?;
            Ok(("overlap_share", if smaller > 0.0 && inter > 0.0 { inter / smaller } else { 0.0 }))
        }
        (1, 1) => Ok(("buffered_length_share", buffered_length_share(a, b))),
        (0, 0) => Ok(("buffered_length_share", if distance(ga, gb) <= cfg.eps_m { 1.0 } else { 0.0 })),
        (da, db) if da < db => Ok(("buffered_length_share", mixed_share(a, b, cfg.eps_m))),
        _ => Ok(("buffered_length_share", mixed_share(b, a, cfg.eps_m))),
    }
}

fn temporal_pair(a: &Prepared<'_>, b: &Prepared<'_>, cfg: &RelationConfig, out: &mut Vec<RelationEdge>) -> Result<(), RelationError> {
    let same = a.feature.feature_type == b.feature.feature_type;
    let (metric, v) = temporal_measure(a, b, same, cfg).map_err(|source| RelationError::Geometry {
        iri: a.feature.iri.clone(),
        source,
    })?;
    let (ia, ib) = (a.feature.iri.as_str(), b.feature.iri.as_str());
    if same && v >= cfg.change_iou {
        push_both(out, ia, ib, "changedTo", "changedFrom", metric, v);
    } else if !same && v >= cfg.transform_overlap {
        push_both(out, ia, ib, "transformedTo", "transformedFrom", metric, v);
    }
    Ok(())
}

fn by_year<'a>(prepared: &'a [Prepared<'a>]) -> BTreeMap<i32, Vec<&'a Prepared<'a>>> {
    let mut m: BTreeMap<i32, Vec<&Prepared>> = BTreeMap::new();
    for p in prepared {
        m.entry(p.feature.year).or_default().push(p);
    }
    m
}

/// Change and transform edges between features of adjacent configured years.
pub fn compute_temporal(features: &[RelFeature], cfg: &RelationConfig) -> Result<Vec<RelationEdge>, RelationError> {
    cfg.validate()?;
    let prepared = prepare(features, cfg.eps_m)?;
    let years = by_year(&prepared);
    let mut edges = Vec::new();
    for w in cfg.timestamps.windows(2) {
        let (Some(older), Some(newer)) = (years.get(&w[0]), years.get(&w[1])) else {
            continue;
        };
        // any nonzero measure needs the eps-buffers to meet
        let index = BBoxIndex::new(newer.iter().enumerate().map(|(i, p)| (p.bbox.expand(cfg.eps_m), i)).collect());
        for a in older {
            for j in index.query(&a.bbox.expand(cfg.eps_m)) {
                temporal_pair(a, newer[j], cfg, &mut edges)?;
            }
        }
    }
    sort_edges(&mut edges);
    Ok(edges)
}

/// Reference computation over every cross-year pair.
pub fn compute_temporal_brute_force(features: &[RelFeature], cfg: &RelationConfig) -> Result<Vec<RelationEdge>, RelationError> {
    let prepared = prepare(features, cfg.eps_m)?;
    let mut edges = Vec::new();
    for a in &prepared {
        for b in &prepared {
            let adjacent = cfg.timestamps.windows(2).any(|w| w[0] == a.feature.year && w[1] == b.feature.year);
            if adjacent {
                temporal_pair(a, b, cfg, &mut edges)?;
            }
        }
    }
    sort_edges(&mut edges);
    Ok(edges)
}

/// Spatial edges per year plus temporal edges, sorted.
pub fn compute_all(features: &[RelFeature], cfg: &RelationConfig) -> Result<Vec<RelationEdge>, RelationError> {
    let mut per_year: BTreeMap<i32, Vec<RelFeature>> = BTreeMap::new();
    for f in features {
        per_year.entry(f.year).or_default().push(f.clone());
    }
    let mut edges = Vec::new();
    for group in per_year.values() {
        edges.extend(compute_spatial(group, cfg)?);
    }
    edges.extend(compute_temporal(features, cfg)?);
    sort_edges(&mut edges);
    Ok(edges)
}

/// Inserts every edge as a triple; returns how many were new.
pub fn materialize(edges: &[RelationEdge], store: &mut Store) -> Result<usize, RelationError> {
    let mut added = 0;
    for e in edges {
        debug_assert!(store.schema().relation(&e.predicate_iri()).is_some(), "{} not in catalog", e.predicate);
        let t = Triple::new(Term::iri(&e.from), cmr(&e.predicate), Term::iri(&e.to));
        if store.insert(t)? {
            added += 1;
        }
    }
    Ok(added)
}

/// JSON-lines provenance, one record per edge.
pub fn write_provenance(edges: &[RelationEdge], cfg: &RelationConfig, mut w: impl Write) -> Result<(), RelationError> {
    let hash = cfg.hash();
    for e in edges {
        let rec = serde_json::json!({
            "from": e.from,
            "to": e.to,
            "predicate": e.predicate,
            "metric": e.provenance.metric,
            "value": e.provenance.value,
            "config_hash": hash,
        });
        writeln!(w, "{rec}").map_err(|e| RelationError::Io(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(name: &str, t: &str, year: i32, g: Geometry) -> RelFeature {
        RelFeature {
            iri: format!("http://chronomap.local/feature/{name}"),
            feature_type: t.into(),
            year,
            geometry: g,
        }
    }

    fn has(edges: &[RelationEdge], from: &str, p: &str, to: &str) -> bool {
        edges.iter().any(|e| e.from.ends_with(from) && e.to.ends_with(to) && e.predicate == p)
    }

    #[test]
    fn far_features_are_not_candidates() {
        let fs = vec![
            feat("a", "lake", 1901, Geometry::rect(0.0, 0.0, 10.0, 10.0).unwrap()),
            feat("b", "lake", 1901, Geometry::rect(10_000.0, 0.0, 10_010.0, 10.0).unwrap()),
            feat("c", "lake", 1901, Geometry::rect(10.0, 0.0, 20.0, 10.0).unwrap()),
        ];
        let cfg = RelationConfig::default();
        let p = prepare(&fs, cfg.eps_m).unwrap();
        assert_eq!(candidate_pairs(&p, &cfg), vec![(0, 2)]);
    }

    #[test]
    fn stream_crossing_river() {
        let fs = vec![
            feat("river", "river", 1916, Geometry::rect(0.0, 0.0, 1000.0, 40.0).unwrap()),
            feat("stream", "stream", 1916, Geometry::line_string([(500.0, -300.0), (500.0, 300.0)]).unwrap()),
        ];
        let e = compute_spatial(&fs, &RelationConfig::default()).unwrap();
        for (a, b) in [("river", "stream"), ("stream", "river")] {
            assert!(has(&e, a, "intersects", b));
            assert!(has(&e, a, "crosses", b));
        }
    }

    #[test]
    fn near_and_cardinal() {
        let fs = vec![
            feat("a", "lake", 1901, Geometry::rect(0.0, 0.0, 20.0, 20.0).unwrap()),
            feat("b", "lake", 1901, Geometry::rect(100.0, 0.0, 120.0, 20.0).unwrap()),
            feat("c", "lake", 1901, Geometry::rect(0.0, 500.0, 20.0, 520.0).unwrap()),
        ];
        let e = compute_spatial(&fs, &RelationConfig::default()).unwrap();
        assert!(has(&e, "a", "near", "b") && has(&e, "b", "near", "a"));
        assert!(!has(&e, "a", "near", "c"));
        assert!(has(&e, "c", "northOf", "a") && has(&e, "a", "southOf", "c"));
        assert!(has(&e, "b", "eastOf", "a") && has(&e, "a", "westOf", "b"));
        assert!(!e.iter().any(|x| x.from == x.to));
    }

    #[test]
    fn temporal_examples() {
        let lake = Geometry::rect(0.0, 0.0, 100.0, 100.0).unwrap();
        let fs = vec![
            feat("l1877", "lake", 1877, lake.clone()),
            feat("l1901", "lake", 1901, lake.clone()),
            feat("l1916", "lake", 1916, lake.clone()),
            feat("w1901", "wetland", 1901, Geometry::rect(500.0, 0.0, 600.0, 100.0).unwrap()),
            feat("f1916", "forest", 1916, Geometry::rect(480.0, -20.0, 620.0, 120.0).unwrap()),
        ];
        let cfg = RelationConfig::default();
        let e = compute_temporal(&fs, &cfg).unwrap();
        assert!(has(&e, "l1877", "changedTo", "l1901") && has(&e, "l1901", "changedFrom", "l1877"));
        assert!(!has(&e, "l1877", "changedTo", "l1916"));
        assert!(has(&e, "w1901", "transformedTo", "f1916") && has(&e, "f1916", "transformedFrom", "w1901"));
        assert_eq!(e, compute_temporal_brute_force(&fs, &cfg).unwrap());
    }

    #[test]
    fn materialize_and_provenance() {
        let fs = vec![
            feat("a", "lake", 1901, Geometry::rect(0.0, 0.0, 20.0, 20.0).unwrap()),
            feat("b", "lake", 1901, Geometry::rect(60.0, 0.0, 80.0, 20.0).unwrap()),
        ];
        let cfg = RelationConfig::default();
        let edges = compute_spatial(&fs, &cfg).unwrap();
        let mut store = Store::default();
        assert_eq!(materialize(&[], &mut store).unwrap(), 0);
        let n = materialize(&edges, &mut store).unwrap();
        assert_eq!(n, edges.len());
        assert_eq!(materialize(&edges, &mut store).unwrap(), 0);
        assert!(store.inverse_violations().is_empty());
        let mut log = Vec::new();
        write_provenance(&edges, &cfg, &mut log).unwrap();
        let text = String::from_utf8(log).unwrap();
        assert_eq!(text.lines().count(), edges.len());
        assert!(text.contains(&cfg.hash()));
    }

    #[test]
    fn config_validation() {
        let mut cfg = RelationConfig::default();
        cfg.validate().unwrap();
        cfg.change_iou = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = RelationConfig {
            timestamps: vec![1901, 1877],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
