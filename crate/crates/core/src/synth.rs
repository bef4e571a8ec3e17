//! Seeded synthetic map layers for tests, benchmarks and demos.
//!
//! Each year holds the same number of features. Between years a feature
//! persists with a small drift, turns into another type, or is replaced.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::geometry::{geojson, Coord, Geometry, LineString, Polygon};
use crate::ingest::{FeatureRecord, IngestConfig, Ingestor, MunicipalityBoundary};
use crate::relations::{compute_all, materialize, RelFeature, RelationConfig};
use crate::kgstore::vocab::{self, prop};
use crate::kgstore::{Decimal, Literal, Store, Term, Triple};
use crate::query::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub features_per_year: usize,
    pub years: Vec<i32>,
    /// Side of the square study area in meters.
    pub extent_m: f64,
    pub sheet: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            features_per_year: 200,
            years: vec![1877, 1901, 1916, 1930],
            extent_m: 8000.0,
            sheet: "synth".into(),
        }
    }
}

const TYPES: [(&str, u32); 5] = [("lake", 25), ("forest", 25), ("wetland", 15), ("river", 10), ("stream", 25)];

fn pick_type(rng: &mut ChaCha8Rng) -> &'static str {
    let total: u32 = TYPES.iter().map(|t| t.1).sum();
    let mut roll = rng.random_range(0..total);
    for (t, w) in TYPES {
        if roll < w {
            return t;
        }
        roll -= w;
    }
    unreachable!()
}

/// Star-shaped polygon around `c`; always simple.
pub fn star_polygon(rng: &mut impl Rng, c: Coord, r_min: f64, r_max: f64) -> Polygon {
    let n = rng.random_range(5..12);
    let phase = rng.random_range(0.0..TAU);
    let ring = (0..n)
        .map(|i| {
            let a = phase + TAU * i as f64 / n as f64;
            let r = rng.random_range(r_min..r_max);
            Coord::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect();
    Polygon::new(ring, vec![]).expect("star ring is valid")
}

fn polyline(rng: &mut impl Rng, c: Coord, len: f64) -> Vec<Coord> {
    let n = rng.random_range(2..6);
    let mut heading = rng.random_range(0.0..TAU);
    let step = len / n as f64;
    let mut p = c;
    let mut out = vec![p];
    for _ in 0..n {
        heading += rng.random_range(-0.5..0.5);
        p = Coord::new(p.x + step * heading.cos(), p.y + step * heading.sin());
        out.push(p);
    }
    out
}

/// A strip of width `w` along the segment from `a` in direction `heading`.
fn strip(a: Coord, heading: f64, len: f64, w: f64) -> Polygon {
    let (dx, dy) = (heading.cos(), heading.sin());
    let (nx, ny) = (-dy * w / 2.0, dx * w / 2.0);
    let b = Coord::new(a.x + dx * len, a.y + dy * len);
    Polygon::new(
        vec![
            Coord::new(a.x + nx, a.y + ny),
            Coord::new(a.x - nx, a.y - ny),
            Coord::new(b.x - nx, b.y - ny),
            Coord::new(b.x + nx, b.y + ny),
        ],
        vec![],
    )
    .expect("strip is valid")
}

fn random_geometry(rng: &mut ChaCha8Rng, ty: &str, extent: f64) -> Geometry {
    let c = Coord::new(rng.random_range(0.0..extent), rng.random_range(0.0..extent));
    match ty {
        "stream" => {
            let len = rng.random_range(200.0..900.0);
            Geometry::LineString(LineString::new(polyline(rng, c, len)).unwrap())
        }
        "river" => Geometry::Polygon(strip(c, rng.random_range(0.0..TAU), rng.random_range(800.0..2500.0), rng.random_range(20.0..60.0))),
        "lake" => Geometry::Polygon(star_polygon(rng, c, 40.0, 250.0)),
        _ => Geometry::Polygon(star_polygon(rng, c, 80.0, 450.0)),
    }
}

fn map_coords(g: &Geometry, f: impl Fn(Coord) -> Coord) -> Geometry {
    let poly = |p: &Polygon| {
        Polygon::new(
            p.exterior().iter().copied().map(&f).collect(),
            p.interiors().iter().map(|r| r.iter().copied().map(&f).collect()).collect(),
        )
        .expect("similarity keeps rings valid")
    };
    match g {
        Geometry::Point(c) => Geometry::Point(f(*c)),
        Geometry::LineString(l) => Geometry::LineString(LineString::new(l.coords().iter().copied().map(&f).collect()).unwrap()),
        Geometry::Polygon(p) => Geometry::Polygon(poly(p)),
        Geometry::MultiPolygon(ps) => Geometry::MultiPolygon(ps.iter().map(poly).collect()),
    }
}

/// Drifts and rescales a geometry about its bounding-box center.
fn drift(rng: &mut ChaCha8Rng, g: &Geometry, max_shift: f64, scale: (f64, f64)) -> Geometry {
    let c = g.bbox().center();
    let (dx, dy) = (rng.random_range(-max_shift..max_shift), rng.random_range(-max_shift..max_shift));
    let s = rng.random_range(scale.0..scale.1);
    map_coords(g, |p| Coord::new(c.x + (p.x - c.x) * s + dx, c.y + (p.y - c.y) * s + dy))
}

fn transform_target(rng: &mut ChaCha8Rng, ty: &str) -> &'static str {
    let options: &[&'static str] = match ty {
        "wetland" => &["forest", "lake"],
        "lake" => &["wetland"],
        "forest" => &["wetland"],
        "stream" => &["river"],
        _ => &["stream"],
    };
    options[rng.random_range(0..options.len())]
}

fn retype(g: &Geometry, from: &str, to: &str, rng: &mut ChaCha8Rng) -> Geometry {
    let linear = |t: &str| t == "stream";
    match (linear(from), linear(to)) {
        (false, false) => drift(rng, g, 10.0, (0.95, 1.2)),
        (true, true) => g.clone(),
        // river strip collapses to its long axis
        (false, true) => {
            let b = g.bbox();
            Geometry::line_string([(b.min_x, b.min_y), (b.max_x, b.max_y)]).unwrap()
        }
        (true, false) => {
            let cs = match g {
                Geometry::LineString(l) => l.coords().to_vec(),
                _ => unreachable!(),
            };
            let (a, b) = (cs[0], cs[cs.len() - 1]);
            let heading = (b.y - a.y).atan2(b.x - a.x);
            Geometry::Polygon(strip(a, heading, a.distance(&b).max(50.0), 30.0))
        }
    }
}

/// Features grouped by year, each year in local-id order.
pub fn generate(cfg: &SynthConfig) -> BTreeMap<i32, Vec<FeatureRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current: Vec<(&'static str, Geometry)> = (0..cfg.features_per_year)
        .map(|_| {
            let t = pick_type(&mut rng);
            (t, random_geometry(&mut rng, t, cfg.extent_m))
        })
        .collect();
    let mut out = BTreeMap::new();
    for (k, &year) in cfg.years.iter().enumerate() {
        if k > 0 {
            current = current
                .into_iter()
                .map(|(t, g)| {
                    let roll: f64 = rng.random();
                    if roll < 0.7 {
                        (t, drift(&mut rng, &g, 15.0, (0.9, 1.1)))
                    } else if roll < 0.85 {
                        let nt = transform_target(&mut rng, t);
                        (nt, retype(&g, t, nt, &mut rng))
                    } else {
                        let nt = pick_type(&mut rng);
                        (nt, random_geometry(&mut rng, nt, cfg.extent_m))
                    }
                })
                .collect();
        }
        let records = current
            .iter()
            .enumerate()
            .map(|(seq, (t, g))| FeatureRecord {
                local_id: format!("{seq:04}"),
                feature_type: t.to_string(),
                year,
                sheet: cfg.sheet.clone(),
                geometry: g.clone(),
                attributes: BTreeMap::from([("type".to_string(), t.to_string())]),
                seq,
            })
            .collect();
        out.insert(year, records);
    }
    out
}

/// GeoJSON FeatureCollection as accepted by the ingestor.
pub fn feature_collection(records: &[FeatureRecord]) -> Value {
    let features: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({
                "type": "Feature",
                "properties": r.attributes,
                "geometry": geojson::to_value(&r.geometry),
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

pub const MUNICIPALITIES: [&str; 4] = ["Aarberg", "Bargen", "Kappelen", "Lyss"];

/// Four quadrant municipalities covering the study area.
pub fn municipality_grid(extent_m: f64) -> Vec<MunicipalityBoundary> {
    let h = extent_m / 2.0;
    let cells = [(0.0, 0.0), (h, 0.0), (0.0, h), (h, h)];
    MUNICIPALITIES
        .iter()
        .zip(cells)
        .map(|(name, (x, y))| MunicipalityBoundary {
            name: name.to_string(),
            geometry: Geometry::rect(x, y, x + h, y + h).expect("positive extent"),
        })
        .collect()
}

/// Sealed store with every synthetic layer ingested, assigned to the
/// quadrant municipalities and related under `rel`.
pub fn build_store(cfg: &SynthConfig, rel: &RelationConfig) -> Store {
    let mut ing = Ingestor::new(IngestConfig {
        eps_m: rel.eps_m,
        ..Default::default()
    });
    for (year, records) in generate(cfg) {
        ing.ingest_str(&feature_collection(&records).to_string(), year, &cfg.sheet)
            .expect("synthetic layers are valid");
    }
    let mut store = Store::default();
    ing.emit(&mut store, &municipality_grid(cfg.extent_m), None)
        .expect("synthetic layers are valid");
    let feats: Vec<RelFeature> = ing.records().iter().map(RelFeature::from).collect();
    let edges = compute_all(&feats, rel).expect("synthetic layers are valid");
    materialize(&edges, &mut store).expect("catalog relations");
    store.seal();
    store
}

/// Aarberg in 1901 with 18 forests covering 4,320,000 m² and a single
/// wetland of 29,114 m², plus a small 1877 layer.
pub fn aarberg_fixture() -> Store {
    let mut layers: BTreeMap<i32, Vec<FeatureRecord>> = BTreeMap::new();
    let mut add = |year: i32, t: &str, g: Geometry| {
        let v = layers.entry(year).or_default();
        let seq = v.len();
        v.push(FeatureRecord {
            local_id: format!("{seq:04}"),
            feature_type: t.to_string(),
            year,
            sheet: "aarberg".into(),
            geometry: g,
            attributes: BTreeMap::from([("type".to_string(), t.to_string())]),
            seq,
        });
    };
    for i in 0..18 {
        let (x, y) = ((i % 6) as f64 * 600.0, (i / 6) as f64 * 600.0);
        add(1901, "forest", Geometry::rect(x, y, x + 500.0, y + 480.0).expect("valid"));
    }
    add(1901, "wetland", Geometry::rect(4000.0, 0.0, 4100.0, 291.14).expect("valid"));
    add(1877, "forest", Geometry::rect(0.0, 0.0, 500.0, 480.0).expect("valid"));
    add(1877, "wetland", Geometry::rect(4000.0, 0.0, 4100.0, 300.0).expect("valid"));
    let mut ing = Ingestor::new(IngestConfig::default());
    for (year, records) in &layers {
        ing.ingest_str(&feature_collection(records).to_string(), *year, "aarberg")
            .expect("valid layer");
    }
    let boundary = MunicipalityBoundary {
        name: "Aarberg".into(),
        geometry: Geometry::rect(-100.0, -100.0, 5000.0, 2000.0).expect("valid"),
    };
    let mut store = Store::default();
    ing.emit(&mut store, &[boundary], None).expect("valid layer");
    let feats: Vec<RelFeature> = ing.records().iter().map(RelFeature::from).collect();
    let rel = RelationConfig {
        timestamps: vec![1877, 1901],
        ..Default::default()
    };
    materialize(&compute_all(&feats, &rel).expect("valid"), &mut store).expect("catalog relations");
    store.seal();
    store
}

const R_TYPES: [&str; 3] = ["lake", "forest", "stream"];
const R_YEARS: [i64; 3] = [1877, 1901, 1916];
const R_RELATIONS: [&str; 3] = ["near", "intersects", "northOf"];
const R_FEATURES: usize = 8;

fn r_feature(i: usize) -> Term {
    vocab::feature_iri("r", 1901, "x", i)
}

/// Random sealed store over a small term universe, at most `max_triples` triples.
pub fn random_store(rng: &mut ChaCha8Rng, max_triples: usize) -> Store {
    let mut st = Store::default();
    let n = rng.random_range(0..=max_triples);
    for _ in 0..n {
        let s = r_feature(rng.random_range(0..R_FEATURES));
        let t = match rng.random_range(0..5) {
            0 => Triple::new(s, vocab::cmo(prop::FEATURE_TYPE), Term::string(R_TYPES[rng.random_range(0..3)])),
            1 => Triple::new(s, vocab::cmo(prop::YEAR), Term::integer(R_YEARS[rng.random_range(0..3)])),
            2 => Triple::new(s, vocab::cmo(prop::AREA_SQM), Term::integer(rng.random_range(0..6) * 500)),
            3 => Triple::new(s, vocab::cmo(prop::CURRENT_NAME), Term::string(["Aare", "Lyss", ""][rng.random_range(0..3)])),
            _ => Triple::new(s, vocab::cmr(R_RELATIONS[rng.random_range(0..3)]), r_feature(rng.random_range(0..R_FEATURES))),
        };
        st.insert(t).expect("catalog triple");
    }
    st.seal();
    st
}

const ENTITY_VARS: [&str; 3] = ["a", "b", "c"];
const VALUE_VARS: [&str; 2] = ["x", "y"];

fn random_const_for(rng: &mut ChaCha8Rng, predicate: &str) -> Term {
    match predicate {
        prop::FEATURE_TYPE => Term::string(R_TYPES[rng.random_range(0..3)]),
        prop::YEAR => Term::integer(R_YEARS[rng.random_range(0..3)]),
        prop::AREA_SQM => Term::integer(rng.random_range(0..6) * 500),
        prop::CURRENT_NAME => Term::string("Aare"),
        _ => r_feature(rng.random_range(0..R_FEATURES)),
    }
}

/// Entities come from `entities`, literal values from the value variables.
fn random_pattern(rng: &mut ChaCha8Rng, entities: &[&str]) -> TriplePattern {
    let preds = [prop::FEATURE_TYPE, prop::YEAR, prop::AREA_SQM, prop::CURRENT_NAME, "near", "northOf"];
    let pred = preds[rng.random_range(0..preds.len())];
    let relation = ["near", "northOf"].contains(&pred);
    let entity = |rng: &mut ChaCha8Rng| TermPattern::Var(entities[rng.random_range(0..entities.len())].to_string());
    let predicate = if rng.random_bool(0.1) {
        TermPattern::Var("p".into())
    } else if relation {
        TermPattern::Const(vocab::cmr(pred))
    } else {
        TermPattern::Const(vocab::cmo(pred))
    };
    let subject = if rng.random_bool(0.9) { entity(rng) } else { TermPattern::Const(r_feature(rng.random_range(0..R_FEATURES))) };
    let object = if rng.random_bool(0.4) {
        TermPattern::Const(random_const_for(rng, pred))
    } else if relation {
        entity(rng)
    } else {
        TermPattern::Var(VALUE_VARS[rng.random_range(0..VALUE_VARS.len())].to_string())
    };
    TriplePattern { subject, predicate, object }
}

fn random_literal(rng: &mut ChaCha8Rng) -> Literal {
    match rng.random_range(0..6) {
        0 => Literal::String("lake".into()),
        1 => Literal::Boolean(rng.random_bool(0.5)),
        2 => Literal::Decimal(Decimal::new(rng.random_range(-20..20) as f64 * 62.5).unwrap()),
        _ => Literal::Integer(rng.random_range(-2..8) * 250),
    }
}

fn random_expr(rng: &mut ChaCha8Rng, vars: &[&str], depth: u32) -> Expr {
    let leaf = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.6) {
            Expr::Var(vars[rng.random_range(0..vars.len())].to_string())
        } else {
            Expr::Const(random_literal(rng))
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    let b = |rng: &mut _, d| Box::new(random_expr(rng, vars, d));
    match rng.random_range(0..8) {
        0 => Expr::Or(b(rng, depth - 1), b(rng, depth - 1)),
        1 => Expr::And(b(rng, depth - 1), b(rng, depth - 1)),
        2 => Expr::Not(b(rng, depth - 1)),
        3 => {
            let ops = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];
            Expr::Arith(ops[rng.random_range(0..4)], b(rng, depth - 1), b(rng, depth - 1))
        }
        4 => leaf(rng),
        _ => {
            let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
            Expr::Cmp(ops[rng.random_range(0..6)], b(rng, depth - 1), b(rng, depth - 1))
        }
    }
}

/// Random well-formed query over the [`random_store`] vocabulary.
pub fn random_query(rng: &mut ChaCha8Rng) -> Query {
    let nvars = rng.random_range(1..=2);
    let head_vars = &ENTITY_VARS[..nvars];
    let mut elements: Vec<GroupElement> = (0..rng.random_range(1..=3))
        .map(|_| GroupElement::Triple(random_pattern(rng, head_vars)))
        .collect();
    let all_vars = ["a", "b", "c", "x", "y", "p"];
    if rng.random_bool(0.3) {
        let mut inner = vec![GroupElement::Triple(random_pattern(rng, &ENTITY_VARS[..nvars + 1]))];
        if rng.random_bool(0.3) {
            inner.push(GroupElement::Filter(random_expr(rng, &all_vars, 2)));
        }
        elements.insert(rng.random_range(0..=elements.len()), GroupElement::Optional(Group { elements: inner }));
    }
    if rng.random_bool(0.4) {
        let at = rng.random_range(0..=elements.len());
        elements.insert(at, GroupElement::Filter(random_expr(rng, &all_vars, 2)));
    }
    let pattern = Group { elements };
    let bound = pattern.pattern_vars();
    if bound.is_empty() || rng.random_bool(0.15) {
        return Query { form: Form::Ask, pattern };
    }
    let pick = |rng: &mut ChaCha8Rng| bound[rng.random_range(0..bound.len())].clone();
    let mut s = Select {
        distinct: rng.random_bool(0.3),
        projection: Projection::All,
        group_by: vec![],
        order_by: vec![],
        limit: None,
        offset: None,
    };
    let mut sortable: Vec<String>;
    if rng.random_bool(0.3) {
        let mut items = vec![];
        if rng.random_bool(0.5) {
            let g = pick(rng);
            s.group_by.push(g.clone());
            items.push(SelectItem::Var(g));
        }
        for (i, func) in Aggregate::ALL.into_iter().enumerate() {
            if rng.random_bool(0.4) || (i == 0 && items.iter().all(|x| matches!(x, SelectItem::Var(_)))) {
                let arg = if func == Aggregate::Count && rng.random_bool(0.5) { None } else { Some(pick(rng)) };
                items.push(SelectItem::Agg(AggAlias { func, arg, alias: format!("agg{i}") }));
            }
        }
        sortable = items.iter().map(|i| i.name().to_string()).collect();
        s.projection = Projection::Items(items);
    } else {
        sortable = bound.clone();
        if rng.random_bool(0.7) {
            let mut vars: Vec<String> = bound.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
            if vars.is_empty() {
                vars.push(pick(rng));
            }
            s.projection = Projection::Items(vars.into_iter().map(SelectItem::Var).collect());
        }
    }
    if rng.random_bool(0.4) {
        for _ in 0..rng.random_range(1..=2) {
            let var = sortable.remove(rng.random_range(0..sortable.len()));
            s.order_by.push(OrderKey { var, descending: rng.random_bool(0.5) });
            if sortable.is_empty() {
                break;
            }
        }
    }
    if rng.random_bool(0.25) {
        s.limit = Some(rng.random_range(0..5));
    }
    if rng.random_bool(0.15) {
        s.offset = Some(rng.random_range(0..3));
    }
    Query { form: Form::Select(s), pattern }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_layers() {
        let cfg = SynthConfig {
            features_per_year: 30,
            ..Default::default()
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_eq!(a.len(), 4);
        assert!(a.values().all(|v| v.len() == 30));
        let other = generate(&SynthConfig { seed: 8, ..cfg });
        assert_ne!(a, other);
    }

    #[test]
    fn geometries_are_valid() {
        for recs in generate(&SynthConfig::default()).values() {
            for r in recs {
                r.geometry.validate().unwrap();
            }
        }
    }
}
