use std::cmp::Ordering;
use std::f64::consts::PI;

use i_overlay::core::fill_rule::FillRule;
use i_overlay::core::overlay_rule::OverlayRule;
use i_overlay::float::single::SingleFloatOverlay;
use i_overlay::mesh::outline::offset::OutlineOffset;
use i_overlay::mesh::stroke::offset::StrokeOffset;
use i_overlay::mesh::style::{LineCap, LineJoin, OutlineStyle, StrokeStyle};

use super::measure::{polygon_area, ring_signed_area};
use super::{Coord, Geometry, GeometryError, Polygon, Result};

/// Arc vertices per full circle used for round joins, caps and point buffers.
pub const ARC_SEGMENTS: usize = 64;

type Shapes = Vec<Vec<Vec<[f64; 2]>>>;

fn open_ring(ring: &[Coord]) -> Vec<[f64; 2]> {
    ring[..ring.len() - 1].iter().map(|c| [c.x, c.y]).collect()
}

fn to_shapes(g: &Geometry) -> Shapes {
    g.polygons()
        .iter()
        .map(|p| p.rings().map(open_ring).collect())
        .collect()
}

fn from_shapes(shapes: Shapes) -> Option<Geometry> {
    let mut polys = Vec::new();
    for shape in shapes {
        let mut rings = shape
            .into_iter()
            .map(|r| r.into_iter().map(|[x, y]| Coord::new(x, y)).collect::<Vec<_>>())
            .filter(|r| r.len() >= 3);
        let Some(exterior) = rings.next() else {
            continue;
        };
        if let Ok(p) = Polygon::new(exterior, rings.collect()) {
            if polygon_area(&p) > 0.0 {
                polys.push(p);
            }
        }
    }
    match polys.len() {
        0 => None,
        1 => polys.pop().map(Geometry::Polygon),
        _ => Some(Geometry::MultiPolygon(polys)),
    }
}

fn circle(center: Coord, r: f64) -> Polygon {
    let ring = (0..ARC_SEGMENTS)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / ARC_SEGMENTS as f64;
            Coord::new(center.x + r * t.cos(), center.y + r * t.sin())
        })
        .collect();
    Polygon::new(ring, vec![]).expect("circle ring is valid")
}

/// Zero-area polygon tracing a point or line; what a zero-radius buffer of a
/// non-areal geometry degenerates to.
fn degenerate_hull(g: &Geometry) -> Geometry {
    let ring = match g {
        Geometry::Point(c) => vec![*c; 4],
        Geometry::LineString(l) => {
            let forth = l.coords();
            forth.iter().chain(forth.iter().rev()).copied().collect()
        }
        _ => return g.clone(),
    };
    Geometry::Polygon(Polygon::new(ring, vec![]).expect("hull ring has at least 4 vertices"))
}

/// Polygon approximating every point within `r` meters of `g`.
///
/// Arcs are approximated with [`ARC_SEGMENTS`] vertices per full circle
/// (inscribed, so the result sits slightly inside the exact buffer). A
/// radius of zero returns areal geometries unchanged.
pub fn buffer(g: &Geometry, r: f64) -> Result<Geometry> {
    g.validate()?;
    if r.is_nan() || r < 0.0 {
        return Err(GeometryError::NegativeRadius(r));
    }
    if r == 0.0 {
        return Ok(degenerate_hull(g));
    }
    let step = 2.0 * PI / ARC_SEGMENTS as f64;
    let out = match g {
        Geometry::Point(c) => return Ok(Geometry::Polygon(circle(*c, r))),
        Geometry::LineString(l) => {
            let mut path: Vec<[f64; 2]> = l.coords().iter().map(|c| [c.x, c.y]).collect();
            path.dedup();
            if path.len() < 2 {
                return Ok(Geometry::Polygon(circle(l.coords()[0], r)));
            }
            let style = StrokeStyle::new(2.0 * r)
                .line_join(LineJoin::Round(step))
                .start_cap(LineCap::Round(step))
                .end_cap(LineCap::Round(step));
            path.stroke(style, false)
        }
        _ => {
            let style = OutlineStyle::new(r).line_join(LineJoin::Round(step));
            to_shapes(g).outline(&style)
        }
    };
    Ok(from_shapes(out).unwrap_or_else(|| degenerate_hull(g)))
}

fn cmp_coords(a: &[Coord], b: &[Coord]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        let o = p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Exact area of the intersection of two areal geometries, computed by
/// polygon clipping. Symmetric in its arguments.
pub fn intersection_area(a: &Geometry, b: &Geometry) -> Result<f64> {
    for g in [a, b] {
        if !g.is_areal() {
            return Err(GeometryError::Unsupported {
                op: "intersection_area",
                kind: g.kind(),
            });
        }
    }
    if !a.bbox().intersects(&b.bbox()) {
        return Ok(0.0);
    }
    // clip in a canonical argument order so the result is bitwise symmetric
    let (first, second) = if cmp_coords(&a.vertices(), &b.vertices()) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let shapes = to_shapes(first).overlay(&to_shapes(second), OverlayRule::Intersect, FillRule::EvenOdd);
    let mut total = 0.0;
    for shape in shapes {
        for (i, ring) in shape.iter().enumerate() {
            let mut coords: Vec<Coord> = ring.iter().map(|&[x, y]| Coord::new(x, y)).collect();
            if let Some(&first) = coords.first() {
                coords.push(first);
            }
            let a = ring_signed_area(&coords).abs();
            total += if i == 0 { a } else { -a };
        }
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{area, point_in_areal};

    #[test]
    fn point_buffer_approximates_circle() {
        let g = buffer(&Geometry::point(0.0, 0.0).unwrap(), 10.0).unwrap();
        let expected = PI * 100.0;
        assert!((area(&g).unwrap() - expected).abs() / expected < 0.02);
    }

    #[test]
    fn square_buffer_matches_minkowski_area() {
        let sq = Geometry::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let g = buffer(&sq, 1.0).unwrap();
        let expected = 1.0 + 4.0 + PI;
        let got = area(&g).unwrap();
        assert!((got - expected).abs() / expected < 0.02, "got {got}");
        for v in sq.vertices() {
            assert!(point_in_areal(&v, &g));
        }
    }

    #[test]
    fn zero_radius_is_identity_for_areas() {
        let sq = Geometry::rect(0.0, 0.0, 3.0, 2.0).unwrap();
        assert_eq!(buffer(&sq, 0.0).unwrap(), sq);
        let line = Geometry::line_string([(0.0, 0.0), (2.0, 0.0)]).unwrap();
        let hull = buffer(&line, 0.0).unwrap();
        assert_eq!(area(&hull).unwrap(), 0.0);
    }

    #[test]
    fn line_buffer_is_a_capsule() {
        let line = Geometry::line_string([(0.0, 0.0), (10.0, 0.0)]).unwrap();
        let g = buffer(&line, 1.0).unwrap();
        let expected = 20.0 + PI;
        assert!((area(&g).unwrap() - expected).abs() / expected < 0.02);
    }

    #[test]
    fn negative_radius_rejected() {
        let p = Geometry::point(0.0, 0.0).unwrap();
        assert_eq!(buffer(&p, -1.0), Err(GeometryError::NegativeRadius(-1.0)));
    }

    #[test]
    fn intersection_areas() {
        let a = Geometry::rect(0.0, 0.0, 2.0, 1.0).unwrap();
        let b = Geometry::rect(1.0, 0.0, 3.0, 1.0).unwrap();
        assert!((intersection_area(&a, &b).unwrap() - 1.0).abs() < 1e-6);
        let c = Geometry::rect(2.0, 0.0, 3.0, 1.0).unwrap();
        assert!(intersection_area(&a, &c).unwrap().abs() < 1e-9);
        assert_eq!(
            intersection_area(&a, &b).unwrap(),
            intersection_area(&b, &a).unwrap()
        );
    }
}
