//! Planar geometry kernel for map features.
//!
//! Coordinates are projected meters. Everything here is a pure function over
//! immutable values, so geometries can be shared freely between threads.

mod buffer;
mod direction;
pub mod geojson;
mod index;
mod measure;
mod overlap;
mod relate;
pub mod wkt;

use std::fmt;

use thiserror::Error;

pub use buffer::{buffer, intersection_area, ARC_SEGMENTS};
pub use direction::{bearing_degrees, cardinal, cardinal_between, CardinalDirection};
pub use index::BBoxIndex;
pub use measure::{
    area, centroid, distance, length, length_inside, point_in_areal, point_in_polygon,
};
pub use overlap::{
    intersection_area_with, overlap_ratio, overlap_ratio_with, OverlapBackend, DEFAULT_GRID_CELL_M,
};
pub use relate::{covers, relate, relate_prepared, PreparedGeometry, Relation, RelationSet};

/// Errors raised by geometry construction and operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate ({x}, {y}) is not finite")]
    NonFinite { x: f64, y: f64 },
    #[error("ring has {0} vertices, at least 4 are required")]
    RingTooShort(usize),
    #[error("line string needs at least 2 vertices, got {0}")]
    LineTooShort(usize),
    #[error("multipolygon has no parts")]
    Empty,
    #[error("{op} is not defined for {kind} geometries")]
    Unsupported { op: &'static str, kind: GeometryKind },
    #[error("buffer radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("centroids coincide, no direction can be computed")]
    NoDirection,
    #[error("WKT parse error at offset {offset}: {message}")]
    Wkt { offset: usize, message: String },
    #[error("GeoJSON geometry error: {0}")]
    GeoJson(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// A planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Coord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Coord {
    fn from((x, y): (f64, f64)) -> Self {
        Coord { x, y }
    }
}

fn check_finite(c: &Coord) -> Result<()> {
    if c.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonFinite { x: c.x, y: c.y })
    }
}

/// Closes the ring if needed and checks the vertex count.
fn close_ring(mut ring: Vec<Coord>) -> Result<Vec<Coord>> {
    for c in &ring {
        check_finite(c)?;
    }
    if let (Some(first), Some(last)) = (ring.first().copied(), ring.last().copied()) {
        if first != last {
            ring.push(first);
        }
    }
    if ring.len() < 4 {
        return Err(GeometryError::RingTooShort(ring.len()));
    }
    Ok(ring)
}

/// A polygon with one exterior ring and zero or more holes.
///
/// Rings are closed and the exterior winds counterclockwise while holes wind
/// clockwise; wrong winding is repaired on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Vec<Coord>,
    interiors: Vec<Vec<Coord>>,
}

impl Polygon {
    pub fn new(exterior: Vec<Coord>, interiors: Vec<Vec<Coord>>) -> Result<Self> {
        let mut exterior = close_ring(exterior)?;
        if measure::ring_signed_area(&exterior) < 0.0 {
            exterior.reverse();
        }
        let interiors = interiors
            .into_iter()
            .map(|ring| {
                let mut ring = close_ring(ring)?;
                if measure::ring_signed_area(&ring) > 0.0 {
                    ring.reverse();
                }
                Ok(ring)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            exterior,
            interiors,
        })
    }

    /// Axis-aligned rectangle.
    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        Self::new(
            vec![
                Coord::new(min_x, min_y),
                Coord::new(max_x, min_y),
                Coord::new(max_x, max_y),
                Coord::new(min_x, max_y),
            ],
            vec![],
        )
    }

    pub fn exterior(&self) -> &[Coord] {
        &self.exterior
    }

    pub fn interiors(&self) -> &[Vec<Coord>] {
        &self.interiors
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Coord]> {
        std::iter::once(self.exterior.as_slice()).chain(self.interiors.iter().map(Vec::as_slice))
    }
}

/// An open polyline with at least two vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LineString(Vec<Coord>);

impl LineString {
    pub fn new(coords: Vec<Coord>) -> Result<Self> {
        for c in &coords {
            check_finite(c)?;
        }
        if coords.len() < 2 {
            return Err(GeometryError::LineTooShort(coords.len()));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }
}

/// The four geometry kinds map features come in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Point,
    LineString,
    Polygon,
    MultiPolygon,
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeometryKind::Point => "point",
            GeometryKind::LineString => "linestring",
            GeometryKind::Polygon => "polygon",
            GeometryKind::MultiPolygon => "multipolygon",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coord),
    LineString(LineString),
    Polygon(Polygon),
    MultiPolygon(Vec<Polygon>),
}

impl Geometry {
    pub fn point(x: f64, y: f64) -> Result<Self> {
        let c = Coord::new(x, y);
        check_finite(&c)?;
        Ok(Geometry::Point(c))
    }

    pub fn line_string(coords: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        LineString::new(coords.into_iter().map(Coord::from).collect()).map(Geometry::LineString)
    }

    pub fn polygon(
        exterior: impl IntoIterator<Item = (f64, f64)>,
        interiors: Vec<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        Polygon::new(
            exterior.into_iter().map(Coord::from).collect(),
            interiors
                .into_iter()
                .map(|r| r.into_iter().map(Coord::from).collect())
                .collect(),
        )
        .map(Geometry::Polygon)
    }

    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        Polygon::rect(min_x, min_y, max_x, max_y).map(Geometry::Polygon)
    }

    pub fn multi_polygon(parts: Vec<Polygon>) -> Result<Self> {
        if parts.is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(Geometry::MultiPolygon(parts))
    }

    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::LineString(_) => GeometryKind::LineString,
            Geometry::Polygon(_) => GeometryKind::Polygon,
            Geometry::MultiPolygon(_) => GeometryKind::MultiPolygon,
        }
    }

    pub fn is_areal(&self) -> bool {
        matches!(self, Geometry::Polygon(_) | Geometry::MultiPolygon(_))
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Geometry::LineString(_))
    }

    /// Topological dimension: 0 for points, 1 for lines, 2 for areas.
    pub fn dimension(&self) -> u8 {
        match self {
            Geometry::Point(_) => 0,
            Geometry::LineString(_) => 1,
            Geometry::Polygon(_) | Geometry::MultiPolygon(_) => 2,
        }
    }

    /// Polygons of an areal geometry; empty for points and lines.
    pub fn polygons(&self) -> &[Polygon] {
        match self {
            Geometry::Polygon(p) => std::slice::from_ref(p),
            Geometry::MultiPolygon(ps) => ps,
            _ => &[],
        }
    }

    /// All vertices, ring closing vertices included.
    pub fn vertices(&self) -> Vec<Coord> {
        match self {
            Geometry::Point(c) => vec![*c],
            Geometry::LineString(l) => l.coords().to_vec(),
            _ => self
                .polygons()
                .iter()
                .flat_map(|p| p.rings().flat_map(|r| r.iter().copied()))
                .collect(),
        }
    }

    /// Line segments making up the geometry; a point is one degenerate segment.
    pub fn segments(&self) -> Vec<(Coord, Coord)> {
        match self {
            Geometry::Point(c) => vec![(*c, *c)],
            Geometry::LineString(l) => l.coords().windows(2).map(|w| (w[0], w[1])).collect(),
            _ => self
                .polygons()
                .iter()
                .flat_map(|p| p.rings().flat_map(|r| r.windows(2).map(|w| (w[0], w[1]))))
                .collect(),
        }
    }

    /// Checks the construction invariants; useful for values built by hand.
    pub fn validate(&self) -> Result<()> {
        for c in self.vertices() {
            check_finite(&c)?;
        }
        match self {
            Geometry::LineString(l) if l.coords().len() < 2 => {
                Err(GeometryError::LineTooShort(l.coords().len()))
            }
            Geometry::MultiPolygon(ps) if ps.is_empty() => Err(GeometryError::Empty),
            _ => Ok(()),
        }
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_coords(self.vertices().iter()).expect("geometries are never empty")
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&wkt::to_wkt(self))
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        debug_assert!(min_x <= max_x && min_y <= max_y);
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn from_coords<'a>(coords: impl IntoIterator<Item = &'a Coord>) -> Option<Self> {
        let mut it = coords.into_iter();
        let first = it.next()?;
        let mut b = BBox::new(first.x, first.y, first.x, first.y);
        for c in it {
            b.min_x = b.min_x.min(c.x);
            b.min_y = b.min_y.min(c.y);
            b.max_x = b.max_x.max(c.x);
            b.max_y = b.max_y.max(c.y);
        }
        Some(b)
    }

    pub fn expand(&self, by: f64) -> BBox {
        BBox::new(
            self.min_x - by,
            self.min_y - by,
            self.max_x + by,
            self.max_y + by,
        )
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            self.min_x.min(other.min_x),
            self.min_y.min(other.min_y),
            self.max_x.max(other.max_x),
            self.max_y.max(other.max_y),
        )
    }

    /// Closed-box intersection test; touching boxes intersect.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn contains_coord(&self, c: &Coord) -> bool {
        c.x >= self.min_x && c.x <= self.max_x && c.y >= self.min_y && c.y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Coord {
        Coord::new(
            (self.min_x + self.max_x) / 2.0,
            (self.min_y + self.max_y) / 2.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winding_is_normalized() {
        // clockwise exterior, counterclockwise hole
        let g = Geometry::polygon(
            [(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0)],
            vec![vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]],
        )
        .unwrap();
        let p = &g.polygons()[0];
        assert!(measure::ring_signed_area(p.exterior()) > 0.0);
        assert!(measure::ring_signed_area(&p.interiors()[0]) < 0.0);
        assert_eq!(p.exterior().first(), p.exterior().last());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Geometry::polygon([(0.0, 0.0), (1.0, 0.0)], vec![]),
            Err(GeometryError::RingTooShort(3))
        );
        assert!(matches!(
            Geometry::point(f64::NAN, 0.0),
            Err(GeometryError::NonFinite { .. })
        ));
        assert_eq!(
            Geometry::line_string([(0.0, 0.0)]),
            Err(GeometryError::LineTooShort(1))
        );
        assert_eq!(Geometry::multi_polygon(vec![]), Err(GeometryError::Empty));
    }

    #[test]
    fn bbox_of_line() {
        let g = Geometry::line_string([(0.0, 5.0), (3.0, -1.0)]).unwrap();
        assert_eq!(g.bbox(), BBox::new(0.0, -1.0, 3.0, 5.0));
        assert!(g.bbox().intersects(&BBox::new(3.0, 5.0, 4.0, 6.0)));
    }
}
