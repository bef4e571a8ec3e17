//! Tolerance-aware topological predicates.
//!
//! Extracted map vectors carry positional noise, so every predicate takes a
//! tolerance `eps` in meters. Two geometries intersect when they come within
//! `eps` of each other; `a` contains `b` when the `eps`-buffer of `a` covers
//! `b`; an interior overlap only counts when its area exceeds `eps²` (or its
//! length exceeds `eps` for lines).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::measure::{length_in, locate, point_segment_distance, split_segment, Location};
use super::{buffer, distance, intersection_area, Coord, Geometry, GeometryError, Result};

const ON_LINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Intersects,
    Touches,
    Contains,
    Within,
    Crosses,
    Overlaps,
    Disjoint,
}

impl Relation {
    pub const ALL: [Relation; 7] = [
        Relation::Intersects,
        Relation::Touches,
        Relation::Contains,
        Relation::Within,
        Relation::Crosses,
        Relation::Overlaps,
        Relation::Disjoint,
    ];

    /// The relation that holds with the arguments swapped.
    pub fn converse(self) -> Relation {
        match self {
            Relation::Contains => Relation::Within,
            Relation::Within => Relation::Contains,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Intersects => "intersects",
            Relation::Touches => "touches",
            Relation::Contains => "contains",
            Relation::Within => "within",
            Relation::Crosses => "crosses",
            Relation::Overlaps => "overlaps",
            Relation::Disjoint => "disjoint",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Small bit set of [`Relation`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RelationSet(u8);

impl RelationSet {
    fn bit(r: Relation) -> u8 {
        1 << Relation::ALL.iter().position(|x| *x == r).unwrap()
    }

    pub fn insert(&mut self, r: Relation) {
        self.0 |= Self::bit(r);
    }

    pub fn has(&self, r: Relation) -> bool {
        self.0 & Self::bit(r) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Relation> + '_ {
        Relation::ALL.into_iter().filter(|r| self.has(*r))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Relations holding between the arguments in reverse order.
    pub fn converse(&self) -> RelationSet {
        self.iter().map(Relation::converse).collect()
    }
}

impl FromIterator<Relation> for RelationSet {
    fn from_iter<I: IntoIterator<Item = Relation>>(iter: I) -> Self {
        let mut s = RelationSet::default();
        for r in iter {
            s.insert(r);
        }
        s
    }
}

impl fmt::Display for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Relation::as_str).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

fn midpoint(a: &Coord, b: &Coord) -> Coord {
    Coord::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
}

fn near_segments(p: &Coord, segs: &[(Coord, Coord)]) -> bool {
    segs.iter()
        .any(|(a, b)| point_segment_distance(p, a, b) <= ON_LINE_TOL)
}

/// Whether every point of `b` lies in the areal `region` (boundary included).
fn region_covers(region: &Geometry, b: &Geometry) -> bool {
    let rb = region.bbox().expand(ON_LINE_TOL);
    let bb = b.bbox();
    if bb.min_x < rb.min_x || bb.max_x > rb.max_x || bb.min_y < rb.min_y || bb.max_y > rb.max_y {
        return false;
    }
    if b.vertices().iter().any(|v| locate(v, region) == Location::Exterior) {
        return false;
    }
    let boundary = region.segments();
    for (s, e) in b.segments() {
        for (p, q) in split_segment(&s, &e, &boundary) {
            if locate(&midpoint(&p, &q), region) == Location::Exterior {
                return false;
            }
        }
    }
    if b.is_areal() {
        // a hole of the region sitting inside b leaves part of b uncovered
        for poly in region.polygons() {
            for hole in poly.interiors() {
                if hole.iter().any(|v| locate(v, b) == Location::Interior) {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether every point of `b` lies on the point or line `a`.
fn lies_on(a: &Geometry, b: &Geometry) -> bool {
    let segs = a.segments();
    if b.is_areal() && b.polygons().iter().any(|p| super::measure::polygon_area(p) > 0.0) {
        return false;
    }
    if !b.vertices().iter().all(|v| near_segments(v, &segs)) {
        return false;
    }
    b.segments().iter().all(|(s, e)| {
        split_segment(s, e, &segs)
            .iter()
            .all(|(p, q)| near_segments(&midpoint(p, q), &segs))
    })
}

/// A geometry paired with the region it covers at a fixed tolerance, so the
/// buffer is computed once per feature rather than once per pair.
#[derive(Debug, Clone)]
pub struct PreparedGeometry {
    geometry: Geometry,
    eps: f64,
    region: Option<Geometry>,
}

impl PreparedGeometry {
    pub fn new(geometry: Geometry, eps: f64) -> Result<Self> {
        if eps.is_nan() || eps < 0.0 {
            return Err(GeometryError::NegativeTolerance(eps));
        }
        geometry.validate()?;
        let region = if eps > 0.0 {
            Some(buffer(&geometry, eps)?)
        } else if geometry.is_areal() {
            Some(geometry.clone())
        } else {
            None
        };
        Ok(Self {
            geometry,
            eps,
            region,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The `eps`-buffer, or the geometry itself when `eps` is zero and it is areal.
    pub fn region(&self) -> Option<&Geometry> {
        self.region.as_ref()
    }

    /// Whether every point of `b` lies within `eps` of this geometry.
    pub fn covers(&self, b: &Geometry) -> bool {
        if let Geometry::Point(_) = b {
            return distance(&self.geometry, b) <= self.eps;
        }
        match &self.region {
            Some(region) => region_covers(region, b),
            None => lies_on(&self.geometry, b),
        }
    }
}

/// Whether the `eps`-buffer of `a` covers `b`.
pub fn covers(a: &Geometry, b: &Geometry, eps: f64) -> Result<bool> {
    Ok(PreparedGeometry::new(a.clone(), eps)?.covers(b))
}

/// Length of `a` running along `b`.
fn shared_length(a: &Geometry, b: &Geometry) -> f64 {
    let segs = b.segments();
    a.segments()
        .iter()
        .flat_map(|(s, e)| split_segment(s, e, &segs))
        .filter(|(p, q)| near_segments(&midpoint(p, q), &segs))
        .map(|(p, q)| p.distance(&q))
        .sum()
}

fn is_line_endpoint(p: &Coord, line: &Geometry) -> bool {
    let v = line.vertices();
    [v[0], v[v.len() - 1]]
        .iter()
        .any(|e| e.distance(p) <= ON_LINE_TOL)
}

/// Whether two lines meet at an isolated point interior to both.
fn lines_cross(a: &Geometry, b: &Geometry) -> bool {
    for (p1, p2) in a.segments() {
        for (q1, q2) in b.segments() {
            let r = (p2.x - p1.x, p2.y - p1.y);
            let s = (q2.x - q1.x, q2.y - q1.y);
            let denom = r.0 * s.1 - r.1 * s.0;
            if denom == 0.0 {
                continue;
            }
            let qp = (q1.x - p1.x, q1.y - p1.y);
            let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
            let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
            if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&u) {
                continue;
            }
            let x = Coord::new(p1.x + t * r.0, p1.y + t * r.1);
            if !is_line_endpoint(&x, a) && !is_line_endpoint(&x, b) {
                return true;
            }
        }
    }
    false
}

/// Relations between prepared geometries sharing one tolerance.
pub fn relate_prepared(a: &PreparedGeometry, b: &PreparedGeometry) -> Result<RelationSet> {
    let eps = a.eps;
    debug_assert_eq!(a.eps, b.eps);
    let (ga, gb) = (&a.geometry, &b.geometry);
    let mut set = RelationSet::default();
    if distance(ga, gb) > eps {
        set.insert(Relation::Disjoint);
        return Ok(set);
    }
    set.insert(Relation::Intersects);
    let contains = a.covers(gb);
    let within = b.covers(ga);
    if contains {
        set.insert(Relation::Contains);
    }
    if within {
        set.insert(Relation::Within);
    }
    if contains || within {
        return Ok(set);
    }
    match (ga.dimension(), gb.dimension()) {
        (2, 2) => {
            if intersection_area(ga, gb)? > eps * eps {
                set.insert(Relation::Overlaps);
            } else {
                set.insert(Relation::Touches);
            }
        }
        (1, 2) | (2, 1) => {
            let (line, area) = if ga.is_linear() { (ga, gb) } else { (gb, ga) };
            if length_in(line, area, true) > eps {
                set.insert(Relation::Crosses);
            } else {
                set.insert(Relation::Touches);
            }
        }
        (1, 1) => {
            let shared = shared_length(ga, gb).min(shared_length(gb, ga));
            if shared > eps {
                set.insert(Relation::Overlaps);
            } else if lines_cross(ga, gb) || lines_cross(gb, ga) {
                set.insert(Relation::Crosses);
            } else {
                set.insert(Relation::Touches);
            }
        }
        _ => set.insert(Relation::Touches),
    }
    Ok(set)
}

/// Topological relations of `a` to `b` at tolerance `eps`.
///
/// The result is internally consistent: `disjoint` excludes every other
/// relation, and `touches`, `crosses` and `overlaps` are only reported when
/// neither geometry covers the other.
pub fn relate(a: &Geometry, b: &Geometry, eps: f64) -> Result<RelationSet> {
    let pa = PreparedGeometry::new(a.clone(), eps)?;
    let pb = PreparedGeometry::new(b.clone(), eps)?;
    relate_prepared(&pa, &pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Relation::*;

    fn set(rs: &[Relation]) -> RelationSet {
        rs.iter().copied().collect()
    }

    #[test]
    fn shared_edge_touches() {
        let a = Geometry::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = Geometry::rect(1.0, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(relate(&a, &b, 0.0).unwrap(), set(&[Intersects, Touches]));
    }

    #[test]
    fn gap_versus_tolerance() {
        let a = Geometry::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = Geometry::rect(2.0, 0.0, 3.0, 1.0).unwrap();
        assert_eq!(relate(&a, &b, 0.0).unwrap(), set(&[Disjoint]));
        assert_eq!(relate(&a, &b, 1.5).unwrap(), set(&[Intersects, Touches]));
    }

    #[test]
    fn strict_containment() {
        let a = Geometry::rect(0.0, 0.0, 4.0, 4.0).unwrap();
        let b = Geometry::rect(1.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(relate(&a, &b, 0.0).unwrap(), set(&[Intersects, Contains]));
        assert_eq!(relate(&b, &a, 0.0).unwrap(), set(&[Intersects, Within]));
    }

    #[test]
    fn partial_overlap() {
        let a = Geometry::rect(0.0, 0.0, 4.0, 4.0).unwrap();
        let b = Geometry::rect(2.0, 2.0, 6.0, 6.0).unwrap();
        assert_eq!(relate(&a, &b, 0.0).unwrap(), set(&[Intersects, Overlaps]));
        // a sliver of 2 m² is below eps² = 2.25
        let sliver = Geometry::rect(3.5, 0.0, 8.0, 4.0).unwrap();
        assert_eq!(relate(&a, &sliver, 1.5).unwrap(), set(&[Intersects, Touches]));
        // at eps = 3 each square lies within the other's buffer
        assert_eq!(relate(&a, &b, 3.0).unwrap(), set(&[Intersects, Contains, Within]));
    }

    #[test]
    fn stream_crossing_river() {
        let river = Geometry::rect(0.0, 0.0, 100.0, 20.0).unwrap();
        let stream = Geometry::line_string([(50.0, -50.0), (50.0, 70.0)]).unwrap();
        assert_eq!(relate(&stream, &river, 0.0).unwrap(), set(&[Intersects, Crosses]));
        assert_eq!(relate(&river, &stream, 0.0).unwrap(), set(&[Intersects, Crosses]));
    }

    #[test]
    fn line_inside_polygon_is_within() {
        let lake = Geometry::rect(0.0, 0.0, 100.0, 100.0).unwrap();
        let stream = Geometry::line_string([(10.0, 10.0), (90.0, 90.0)]).unwrap();
        assert_eq!(relate(&lake, &stream, 0.0).unwrap(), set(&[Intersects, Contains]));
    }

    #[test]
    fn crossing_lines() {
        let a = Geometry::line_string([(0.0, 0.0), (10.0, 10.0)]).unwrap();
        let b = Geometry::line_string([(0.0, 10.0), (10.0, 0.0)]).unwrap();
        assert_eq!(relate(&a, &b, 0.0).unwrap(), set(&[Intersects, Crosses]));
        let t = Geometry::line_string([(5.0, 5.0), (5.0, 20.0)]).unwrap();
        assert_eq!(relate(&a, &t, 0.0).unwrap(), set(&[Intersects, Touches]));
        let same = Geometry::line_string([(2.0, 2.0), (8.0, 8.0)]).unwrap();
        assert_eq!(relate(&a, &same, 0.0).unwrap(), set(&[Intersects, Contains]));
    }

    #[test]
    fn points() {
        let lake = Geometry::rect(0.0, 0.0, 10.0, 10.0).unwrap();
        let well = Geometry::point(5.0, 5.0).unwrap();
        assert_eq!(relate(&lake, &well, 0.0).unwrap(), set(&[Intersects, Contains]));
        let outside = Geometry::point(12.0, 5.0).unwrap();
        assert_eq!(relate(&lake, &outside, 0.0).unwrap(), set(&[Disjoint]));
        assert_eq!(relate(&outside, &lake, 2.0).unwrap(), set(&[Intersects, Within]));
    }

    #[test]
    fn hole_prevents_cover() {
        let holed = Geometry::polygon(
            [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)],
            vec![vec![(4.0, 4.0), (6.0, 4.0), (6.0, 6.0), (4.0, 6.0)]],
        )
        .unwrap();
        let block = Geometry::rect(2.0, 2.0, 8.0, 8.0).unwrap();
        assert!(!covers(&holed, &block, 0.0).unwrap());
        assert!(covers(&holed, &block, 1.5).unwrap());
    }

    #[test]
    fn negative_tolerance_rejected() {
        let p = Geometry::point(0.0, 0.0).unwrap();
        assert!(matches!(relate(&p, &p, -1.0), Err(GeometryError::NegativeTolerance(_))));
    }
}
