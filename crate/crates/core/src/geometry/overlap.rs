use serde::{Deserialize, Serialize};

use super::{area, intersection_area, BBox, Geometry, GeometryError, Result};

/// Cell edge length of the default sampling grid, in meters.
pub const DEFAULT_GRID_CELL_M: f64 = 1.0;

/// How intersection areas are measured for overlap ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OverlapBackend {
    /// Cell-center sampling over the union bounding box.
    Grid { cell_m: f64 },
    /// Polygon clipping.
    Exact,
}

impl Default for OverlapBackend {
    fn default() -> Self {
        OverlapBackend::Grid {
            cell_m: DEFAULT_GRID_CELL_M,
        }
    }
}

/// Sorted x-intervals where the horizontal line `y` lies inside `g`
/// (even-odd rule across all rings of all parts).
fn row_intervals(g: &Geometry, y: f64) -> Vec<(f64, f64)> {
    let mut intervals = Vec::new();
    for poly in g.polygons() {
        let mut xs = Vec::new();
        for ring in poly.rings() {
            for w in ring.windows(2) {
                let (a, b) = (w[0], w[1]);
                if (a.y > y) != (b.y > y) {
                    xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        intervals.extend(xs.chunks_exact(2).map(|c| (c[0], c[1])));
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    // parts of a multipolygon may touch; merge so no cell is counted twice
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// Number of cell centers `x0 + (i + 0.5) * cell`, `0 <= i < n`, inside `[lo, hi]`.
fn centers_in(lo: f64, hi: f64, x0: f64, cell: f64, n: i64) -> i64 {
    let first = ((lo - x0) / cell - 0.5).ceil().max(0.0) as i64;
    let last = (((hi - x0) / cell - 0.5).floor() as i64).min(n - 1);
    (last - first + 1).max(0)
}

/// Sampled (|a|, |b|, |a ∩ b|) cell counts.
fn grid_counts(a: &Geometry, b: &Geometry, bbox: &BBox, cell: f64) -> (i64, i64, i64) {
    let nx = (bbox.width() / cell).ceil().max(1.0) as i64;
    let ny = (bbox.height() / cell).ceil().max(1.0) as i64;
    let (mut ca, mut cb, mut cab) = (0, 0, 0);
    for j in 0..ny {
        let y = bbox.min_y + (j as f64 + 0.5) * cell;
        let ia = row_intervals(a, y);
        let ib = row_intervals(b, y);
        ca += ia.iter().map(|&(l, h)| centers_in(l, h, bbox.min_x, cell, nx)).sum::<i64>();
        cb += ib.iter().map(|&(l, h)| centers_in(l, h, bbox.min_x, cell, nx)).sum::<i64>();
        let (mut i, mut k) = (0, 0);
        while i < ia.len() && k < ib.len() {
            let lo = ia[i].0.max(ib[k].0);
            let hi = ia[i].1.min(ib[k].1);
            if lo <= hi {
                cab += centers_in(lo, hi, bbox.min_x, cell, nx);
            }
            if ia[i].1 < ib[k].1 {
                i += 1;
            } else {
                k += 1;
            }
        }
    }
    (ca, cb, cab)
}

fn exact_ratio(a: &Geometry, b: &Geometry) -> Result<f64> {
    let inter = intersection_area(a, b)?;
    let union = area(a)? + area(b)? - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Intersection over union of two areal geometries using the default
/// 1 m sampling grid.
pub fn overlap_ratio(a: &Geometry, b: &Geometry) -> Result<f64> {
    overlap_ratio_with(a, b, OverlapBackend::default())
}

/// Intersection over union with an explicit backend. When the grid is too
/// coarse to place a single sample in either geometry the exact backend is
/// used instead.
pub fn overlap_ratio_with(a: &Geometry, b: &Geometry, backend: OverlapBackend) -> Result<f64> {
    for g in [a, b] {
        if !g.is_areal() {
            return Err(GeometryError::Unsupported {
                op: "overlap_ratio",
                kind: g.kind(),
            });
        }
    }
    match backend {
        OverlapBackend::Exact => exact_ratio(a, b),
        OverlapBackend::Grid { cell_m } => {
            if !a.bbox().intersects(&b.bbox()) {
                return Ok(0.0);
            }
            let bbox = a.bbox().union(&b.bbox());
            let (ca, cb, cab) = grid_counts(a, b, &bbox, cell_m);
            let union = ca + cb - cab;
            if ca == 0 || cb == 0 {
                return exact_ratio(a, b);
            }
            Ok(cab as f64 / union as f64)
        }
    }
}

/// Sampled intersection area, `|a ∩ b|` cells times the cell area.
fn grid_intersection_area(a: &Geometry, b: &Geometry, cell: f64) -> f64 {
    if !a.bbox().intersects(&b.bbox()) {
        return 0.0;
    }
    let bbox = a.bbox().union(&b.bbox());
    let (_, _, cab) = grid_counts(a, b, &bbox, cell);
    cab as f64 * cell * cell
}

/// Intersection area under the given backend.
pub fn intersection_area_with(a: &Geometry, b: &Geometry, backend: OverlapBackend) -> Result<f64> {
    match backend {
        OverlapBackend::Exact => intersection_area(a, b),
        OverlapBackend::Grid { cell_m } => {
            let sampled = grid_intersection_area(a, b, cell_m);
            if sampled == 0.0 && a.bbox().intersects(&b.bbox()) {
                // features smaller than a cell are never sampled
                let small = area(a)?.min(area(b)?) < cell_m * cell_m * 4.0;
                if small {
                    return intersection_area(a, b);
                }
            }
            Ok(sampled)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let a = Geometry::rect(0.0, 0.0, 2.0, 1.0).unwrap();
        let b = Geometry::rect(1.0, 0.0, 3.0, 1.0).unwrap();
        assert_eq!(overlap_ratio(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap_ratio(&a, &b).unwrap(), 1.0 / 3.0);
        let far = Geometry::rect(10.0, 10.0, 11.0, 11.0).unwrap();
        assert_eq!(overlap_ratio(&a, &far).unwrap(), 0.0);
        let line = Geometry::line_string([(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(overlap_ratio(&a, &line).is_err());
    }

    #[test]
    fn grid_matches_exact_on_rectangles() {
        let a = Geometry::rect(0.0, 0.0, 40.0, 30.0).unwrap();
        let b = Geometry::rect(10.0, 5.0, 60.0, 45.0).unwrap();
        let grid = overlap_ratio(&a, &b).unwrap();
        let exact = overlap_ratio_with(&a, &b, OverlapBackend::Exact).unwrap();
        assert!((grid - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn holes_are_excluded() {
        let holed = Geometry::polygon(
            [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)],
            vec![vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]],
        )
        .unwrap();
        let inner = Geometry::rect(1.0, 1.0, 3.0, 3.0).unwrap();
        assert_eq!(overlap_ratio(&holed, &inner).unwrap(), 0.0);
        let full = Geometry::rect(0.0, 0.0, 4.0, 4.0).unwrap();
        assert_eq!(overlap_ratio(&holed, &full).unwrap(), 12.0 / 16.0);
    }

    #[test]
    fn tiny_geometries_fall_back_to_exact() {
        let a = Geometry::rect(0.1, 0.1, 0.3, 0.3).unwrap();
        assert!((overlap_ratio(&a, &a).unwrap() - 1.0).abs() < 1e-6);
    }
}
