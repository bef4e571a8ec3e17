use super::{Coord, Geometry, GeometryError, Polygon, Result};

/// Shoelace signed area; positive for counterclockwise rings.
pub(crate) fn ring_signed_area(ring: &[Coord]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut twice = 0.0;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        twice += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    twice / 2.0
}

pub(crate) fn polygon_area(p: &Polygon) -> f64 {
    let holes: f64 = p.interiors().iter().map(|r| ring_signed_area(r).abs()).sum();
    (ring_signed_area(p.exterior()).abs() - holes).max(0.0)
}

/// Area in square meters of a polygon or multipolygon. Holes subtract.
pub fn area(g: &Geometry) -> Result<f64> {
    if !g.is_areal() {
        return Err(GeometryError::Unsupported {
            op: "area",
            kind: g.kind(),
        });
    }
    Ok(g.polygons().iter().map(polygon_area).sum())
}

/// Length in meters of a line string.
pub fn length(g: &Geometry) -> Result<f64> {
    match g {
        Geometry::LineString(l) => Ok(l.coords().windows(2).map(|w| w[0].distance(&w[1])).sum()),
        _ => Err(GeometryError::Unsupported {
            op: "length",
            kind: g.kind(),
        }),
    }
}

/// Where a point lies relative to an areal geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Location {
    Interior,
    Boundary,
    Exterior,
}

const ON_BOUNDARY_TOL: f64 = 1e-9;

pub(crate) fn locate_in_polygon(p: &Coord, poly: &Polygon) -> Location {
    let mut inside = false;
    for ring in poly.rings() {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if point_segment_distance(p, &a, &b) <= ON_BOUNDARY_TOL {
                return Location::Boundary;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
    }
    if inside {
        Location::Interior
    } else {
        Location::Exterior
    }
}

pub(crate) fn locate(p: &Coord, g: &Geometry) -> Location {
    let mut result = Location::Exterior;
    for poly in g.polygons() {
        match locate_in_polygon(p, poly) {
            Location::Interior => return Location::Interior,
            Location::Boundary => result = Location::Boundary,
            Location::Exterior => {}
        }
    }
    result
}

/// Even-odd point-in-polygon; boundary points count as inside.
pub fn point_in_polygon(p: &Coord, poly: &Polygon) -> bool {
    locate_in_polygon(p, poly) != Location::Exterior
}

/// Point-in-polygon over every part of an areal geometry; false for non-areal.
pub fn point_in_areal(p: &Coord, g: &Geometry) -> bool {
    g.polygons().iter().any(|poly| point_in_polygon(p, poly))
}

pub(crate) fn point_segment_distance(p: &Coord, a: &Coord, b: &Coord) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let foot = Coord::new(a.x + t * dx, a.y + t * dy);
    p.distance(&foot)
}

fn orient(a: &Coord, b: &Coord, c: &Coord) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: &Coord, b: &Coord, p: &Coord) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

pub(crate) fn segments_intersect(p1: &Coord, p2: &Coord, q1: &Coord, q2: &Coord) -> bool {
    let o1 = orient(p1, p2, q1);
    let o2 = orient(p1, p2, q2);
    let o3 = orient(q1, q2, p1);
    let o4 = orient(q1, q2, p2);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(p1, p2, q1))
        || (o2 == 0.0 && on_segment(p1, p2, q2))
        || (o3 == 0.0 && on_segment(q1, q2, p1))
        || (o4 == 0.0 && on_segment(q1, q2, p2))
}

pub(crate) fn segment_distance(p1: &Coord, p2: &Coord, q1: &Coord, q2: &Coord) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// Minimum Euclidean distance between two geometries; 0 when they intersect.
pub fn distance(a: &Geometry, b: &Geometry) -> f64 {
    if a.is_areal() && b.vertices().iter().any(|v| point_in_areal(v, a)) {
        return 0.0;
    }
    if b.is_areal() && a.vertices().iter().any(|v| point_in_areal(v, b)) {
        return 0.0;
    }
    let sb = b.segments();
    let mut best = f64::INFINITY;
    for (p1, p2) in a.segments() {
        for (q1, q2) in &sb {
            best = best.min(segment_distance(&p1, &p2, q1, q2));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

/// Parameters in (0, 1) at which segment `p1p2` meets segment `q1q2`.
fn split_params(p1: &Coord, p2: &Coord, q1: &Coord, q2: &Coord, out: &mut Vec<f64>) {
    let r = (p2.x - p1.x, p2.y - p1.y);
    let s = (q2.x - q1.x, q2.y - q1.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    let qp = (q1.x - p1.x, q1.y - p1.y);
    let rr = r.0 * r.0 + r.1 * r.1;
    if rr == 0.0 {
        return;
    }
    if denom == 0.0 {
        // parallel: only collinear overlaps contribute split points
        if qp.0 * r.1 - qp.1 * r.0 != 0.0 {
            return;
        }
        for q in [q1, q2] {
            let t = ((q.x - p1.x) * r.0 + (q.y - p1.y) * r.1) / rr;
            if t > 0.0 && t < 1.0 {
                out.push(t);
            }
        }
        return;
    }
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    if (0.0..=1.0).contains(&u) && t > 0.0 && t < 1.0 {
        out.push(t);
    }
}

/// Splits segment `a-b` at every crossing with `boundary` and returns the
/// resulting pieces.
pub(crate) fn split_segment(a: &Coord, b: &Coord, boundary: &[(Coord, Coord)]) -> Vec<(Coord, Coord)> {
    let mut ts = vec![0.0, 1.0];
    for (q1, q2) in boundary {
        split_params(a, b, q1, q2, &mut ts);
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let at = |t: f64| Coord::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
    ts.windows(2).map(|w| (at(w[0]), at(w[1]))).collect()
}

/// Length of the part of `line` lying in `areal`. With `interior_only` the
/// pieces running along the boundary are not counted.
pub(crate) fn length_in(line: &Geometry, areal: &Geometry, interior_only: bool) -> f64 {
    let boundary = areal.segments();
    let mut total = 0.0;
    for (a, b) in line.segments() {
        for (s, e) in split_segment(&a, &b, &boundary) {
            let mid = Coord::new((s.x + e.x) / 2.0, (s.y + e.y) / 2.0);
            let counted = match locate(&mid, areal) {
                Location::Interior => true,
                Location::Boundary => !interior_only,
                Location::Exterior => false,
            };
            if counted {
                total += s.distance(&e);
            }
        }
    }
    total
}

/// Length of a line string lying inside (or on the boundary of) an areal
/// geometry. Errors when the first argument is not linear or the second not
/// areal.
pub fn length_inside(line: &Geometry, areal: &Geometry) -> Result<f64> {
    if !line.is_linear() {
        return Err(GeometryError::Unsupported {
            op: "length_inside",
            kind: line.kind(),
        });
    }
    if !areal.is_areal() {
        return Err(GeometryError::Unsupported {
            op: "length_inside",
            kind: areal.kind(),
        });
    }
    Ok(length_in(line, areal, false))
}

/// Area-weighted centroid for areal geometries, length-weighted for lines,
/// the point itself for points.
pub fn centroid(g: &Geometry) -> Result<Coord> {
    g.validate()?;
    let origin = g.vertices()[0];
    let linear = |segs: &[(Coord, Coord)]| -> Coord {
        let mut total = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for (a, b) in segs {
            let len = a.distance(b);
            total += len;
            sx += len * ((a.x + b.x) / 2.0 - origin.x);
            sy += len * ((a.y + b.y) / 2.0 - origin.y);
        }
        if total == 0.0 {
            origin
        } else {
            Coord::new(origin.x + sx / total, origin.y + sy / total)
        }
    };
    match g {
        Geometry::Point(c) => Ok(*c),
        Geometry::LineString(_) => Ok(linear(&g.segments())),
        _ => {
            let (mut a_sum, mut cx, mut cy) = (0.0, 0.0, 0.0);
            for poly in g.polygons() {
                for ring in poly.rings() {
                    for w in ring.windows(2) {
                        let (x0, y0) = (w[0].x - origin.x, w[0].y - origin.y);
                        let (x1, y1) = (w[1].x - origin.x, w[1].y - origin.y);
                        let cross = x0 * y1 - x1 * y0;
                        a_sum += cross;
                        cx += (x0 + x1) * cross;
                        cy += (y0 + y1) * cross;
                    }
                }
            }
            if a_sum == 0.0 {
                return Ok(linear(&g.segments()));
            }
            Ok(Coord::new(
                origin.x + cx / (3.0 * a_sum),
                origin.y + cy / (3.0 * a_sum),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_with_hole() -> Geometry {
        Geometry::polygon(
            [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)],
            vec![vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]],
        )
        .unwrap()
    }

    #[test]
    fn areas() {
        let tri = Geometry::polygon([(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)], vec![]).unwrap();
        assert_eq!(area(&tri).unwrap(), 6.0);
        assert_eq!(area(&square_with_hole()).unwrap(), 12.0);
        // L-shape: 2x1 strip plus 1x1 block on top = 3
        let l = Geometry::polygon(
            [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(area(&l).unwrap(), 3.0);
        let line = Geometry::line_string([(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(area(&line), Err(GeometryError::Unsupported { .. })));
    }

    #[test]
    fn multipolygon_area_is_additive() {
        let a = Polygon::rect(0.0, 0.0, 2.0, 2.0).unwrap();
        let b = Polygon::rect(5.0, 5.0, 6.0, 8.0).unwrap();
        let m = Geometry::multi_polygon(vec![a, b]).unwrap();
        assert_eq!(area(&m).unwrap(), 7.0);
    }

    #[test]
    fn lengths() {
        let l = Geometry::line_string([(0.0, 0.0), (3.0, 4.0)]).unwrap();
        assert_eq!(length(&l).unwrap(), 5.0);
        let l = Geometry::line_string([(1.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(length(&l).unwrap(), 0.0);
        let l = Geometry::line_string([(0.0, 0.0), (3.0, 4.0), (3.0, 10.0)]).unwrap();
        assert_eq!(length(&l).unwrap(), 11.0);
        assert!(length(&square_with_hole()).is_err());
    }

    #[test]
    fn distances() {
        let p = Geometry::point(0.0, 5.0).unwrap();
        let seg = Geometry::line_string([(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(distance(&p, &seg), 5.0);
        let a = Geometry::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = Geometry::rect(1.0, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(distance(&a, &b), 0.0);
        let p1 = Geometry::point(3.0, 4.0).unwrap();
        let p2 = Geometry::point(0.0, 0.0).unwrap();
        assert_eq!(distance(&p1, &p2), 5.0);
        // a point in the hole is 1 m away from the ring
        let inner = Geometry::point(2.0, 2.0).unwrap();
        assert_eq!(distance(&inner, &square_with_hole()), 1.0);
    }

    #[test]
    fn centroids() {
        let sq = Geometry::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(centroid(&sq).unwrap(), Coord::new(0.5, 0.5));
        let seg = Geometry::line_string([(0.0, 0.0), (2.0, 0.0)]).unwrap();
        assert_eq!(centroid(&seg).unwrap(), Coord::new(1.0, 0.0));
        let tri = Geometry::polygon([(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)], vec![]).unwrap();
        let c = centroid(&tri).unwrap();
        assert!((c.x - 1.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
        assert_eq!(centroid(&square_with_hole()).unwrap(), Coord::new(2.0, 2.0));
    }

    #[test]
    fn boundary_points_are_inside() {
        let sq = Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(point_in_polygon(&Coord::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(&Coord::new(0.0, 0.0), &sq));
        assert!(!point_in_polygon(&Coord::new(1.0001, 0.5), &sq));
    }

    #[test]
    fn line_inside_polygon() {
        let sq = Geometry::rect(0.0, 0.0, 10.0, 10.0).unwrap();
        let l = Geometry::line_string([(-5.0, 5.0), (5.0, 5.0)]).unwrap();
        assert!((length_inside(&l, &sq).unwrap() - 5.0).abs() < 1e-12);
        let along = Geometry::line_string([(0.0, 0.0), (10.0, 0.0)]).unwrap();
        assert_eq!(length_in(&along, &sq, true), 0.0);
        assert_eq!(length_in(&along, &sq, false), 10.0);
    }
}
