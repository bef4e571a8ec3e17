use std::f64::consts::PI;

use chronomap::geometry::{
    area, buffer, cardinal, covers, distance, overlap_ratio, overlap_ratio_with, relate, Geometry,
    OverlapBackend, Relation,
};
use proptest::prelude::*;

/// Star-shaped polygon: vertices at increasing angles around a center, so the
/// ring never self-intersects.
fn star() -> impl Strategy<Value = Geometry> {
    (
        0.0..200.0f64,
        0.0..200.0f64,
        prop::collection::vec((0.2..1.0f64, 5.0..40.0f64), 3..10),
    )
        .prop_map(|(cx, cy, spokes)| {
            let total: f64 = spokes.iter().map(|(w, _)| w).sum();
            let mut theta = 0.0;
            let ring: Vec<(f64, f64)> = spokes
                .iter()
                .map(|&(w, r)| {
                    theta += 2.0 * PI * w / total;
                    (cx + r * theta.cos(), cy + r * theta.sin())
                })
                .collect();
            Geometry::polygon(ring, vec![]).unwrap()
        })
}

fn line() -> impl Strategy<Value = Geometry> {
    prop::collection::vec((0.0..200.0f64, 0.0..200.0f64), 2..6)
        .prop_map(|pts| Geometry::line_string(pts).unwrap())
}

fn point() -> impl Strategy<Value = Geometry> {
    (0.0..200.0f64, 0.0..200.0f64).prop_map(|(x, y)| Geometry::point(x, y).unwrap())
}

fn any_geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![3 => star(), 2 => line(), 1 => point()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn distance_is_symmetric(a in any_geometry(), b in any_geometry()) {
        prop_assert_eq!(distance(&a, &b), distance(&b, &a));
    }

    #[test]
    fn relate_is_converse_symmetric(a in any_geometry(), b in any_geometry(), eps in 0.0..10.0f64) {
        let ab = relate(&a, &b, eps).unwrap();
        let ba = relate(&b, &a, eps).unwrap();
        prop_assert_eq!(ab, ba.converse());
        prop_assert_eq!(ab.has(Relation::Contains), ba.has(Relation::Within));
        prop_assert_eq!(ab.has(Relation::Disjoint), !ab.has(Relation::Intersects));
        if ab.has(Relation::Disjoint) {
            prop_assert_eq!(ab.len(), 1);
        }
    }

    #[test]
    fn intersects_is_monotone_in_eps(a in any_geometry(), b in any_geometry(), eps in 0.0..10.0f64, extra in 0.0..10.0f64) {
        if relate(&a, &b, eps).unwrap().has(Relation::Intersects) {
            prop_assert!(relate(&a, &b, eps + extra).unwrap().has(Relation::Intersects));
        }
    }

    #[test]
    fn overlap_ratio_is_symmetric_and_bounded(a in star(), b in star()) {
        let r = overlap_ratio(&a, &b).unwrap();
        prop_assert_eq!(r, overlap_ratio(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&r));
        let e = overlap_ratio_with(&a, &b, OverlapBackend::Exact).unwrap();
        prop_assert_eq!(e, overlap_ratio_with(&b, &a, OverlapBackend::Exact).unwrap());
    }

    #[test]
    fn cardinal_directions_oppose(a in any_geometry(), b in any_geometry()) {
        if let Ok(d) = cardinal(&a, &b) {
            prop_assert_eq!(cardinal(&b, &a).unwrap(), d.opposite());
        }
    }

    #[test]
    fn buffer_grows_and_contains(g in any_geometry(), r1 in 0.1..20.0f64, dr in 0.0..20.0f64) {
        let small = buffer(&g, r1).unwrap();
        let big = buffer(&g, r1 + dr).unwrap();
        prop_assert!(area(&small).unwrap() <= area(&big).unwrap() + 1e-9);
        prop_assert!(covers(&small, &g, 0.0).unwrap());
    }

    #[test]
    fn grid_iou_tracks_exact_on_rectangles(
        x in 0.0..100.0f64, y in 0.0..100.0f64,
        w in 300.0..1000.0f64, h in 300.0..1000.0f64,
        fx in -0.5..0.5f64, fy in -0.5..0.5f64,
    ) {
        let a = Geometry::rect(x, y, x + w, y + h).unwrap();
        let (bx, by) = (x + fx * w, y + fy * h);
        let b = Geometry::rect(bx, by, bx + w * 0.8, by + h * 1.1).unwrap();
        let grid = overlap_ratio(&a, &b).unwrap();
        let exact = overlap_ratio_with(&a, &b, OverlapBackend::Exact).unwrap();
        prop_assert!((grid - exact).abs() <= 0.02 * exact, "grid {} exact {}", grid, exact);
    }
}

#[test]
fn multipolygon_area_is_sum_of_parts() {
    let parts = [
        Geometry::rect(0.0, 0.0, 3.0, 2.0).unwrap(),
        Geometry::rect(10.0, 10.0, 14.0, 15.0).unwrap(),
    ];
    let polys = parts
        .iter()
        .map(|g| match g {
            Geometry::Polygon(p) => p.clone(),
            _ => unreachable!(),
        })
        .collect();
    let multi = Geometry::multi_polygon(polys).unwrap();
    assert_eq!(area(&multi).unwrap(), 6.0 + 20.0);
}
