use std::fmt;

use serde::{Deserialize, Serialize};

use super::{centroid, Coord, Geometry, GeometryError, Result};

/// Eight compass sectors, each a half-open 45° interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CardinalDirection {
    E,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
}

impl CardinalDirection {
    /// Counterclockwise from east, matching the sector index.
    pub const ALL: [CardinalDirection; 8] = [
        CardinalDirection::E,
        CardinalDirection::NE,
        CardinalDirection::N,
        CardinalDirection::NW,
        CardinalDirection::W,
        CardinalDirection::SW,
        CardinalDirection::S,
        CardinalDirection::SE,
    ];

    fn from_index(i: usize) -> Self {
        Self::ALL[i % 8]
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|d| *d == self).unwrap()
    }

    pub fn opposite(self) -> Self {
        Self::from_index(self.index() + 4)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CardinalDirection::E => "E",
            CardinalDirection::NE => "NE",
            CardinalDirection::N => "N",
            CardinalDirection::NW => "NW",
            CardinalDirection::W => "W",
            CardinalDirection::SW => "SW",
            CardinalDirection::S => "S",
            CardinalDirection::SE => "SE",
        }
    }
}

impl fmt::Display for CardinalDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sector of a nonzero displacement. Directions in the lower half plane are
/// classified through their negation so that `d` and `-d` always land in
/// opposite sectors, whatever the rounding of `atan2`.
fn sector(dx: f64, dy: f64) -> usize {
    let upper = dy > 0.0 || (dy == 0.0 && dx > 0.0);
    let (ux, uy) = if upper { (dx, dy) } else { (-dx, -dy) };
    let theta = uy.atan2(ux).to_degrees().clamp(0.0, 180.0);
    let s = ((theta + 22.5) / 45.0).floor() as usize;
    if upper {
        s
    } else {
        s + 4
    }
}

/// Angle in degrees of the vector between centroids, in (-180, 180].
pub fn bearing_degrees(from: &Geometry, to: &Geometry) -> Result<f64> {
    let (a, b) = (centroid(from)?, centroid(to)?);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::NoDirection);
    }
    Ok(dy.atan2(dx).to_degrees())
}

/// Compass direction of `to` as seen from `from`, between centroids.
pub fn cardinal(from: &Geometry, to: &Geometry) -> Result<CardinalDirection> {
    cardinal_between(centroid(from)?, centroid(to)?)
}

/// Compass direction of point `b` as seen from point `a`.
pub fn cardinal_between(a: Coord, b: Coord) -> Result<CardinalDirection> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::NoDirection);
    }
    Ok(CardinalDirection::from_index(sector(dx, dy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CardinalDirection::*;

    fn pt(x: f64, y: f64) -> Geometry {
        Geometry::point(x, y).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(cardinal(&pt(0.0, 0.0), &pt(10.0, 1.0)).unwrap(), E);
        assert_eq!(cardinal(&pt(0.0, 0.0), &pt(0.0, 10.0)).unwrap(), N);
        assert_eq!(cardinal(&pt(0.0, 0.0), &pt(-5.0, -5.0)).unwrap(), SW);
        assert_eq!(
            cardinal(&pt(1.0, 1.0), &pt(1.0, 1.0)),
            Err(GeometryError::NoDirection)
        );
    }

    #[test]
    fn sector_edges_are_half_open() {
        let t = 22.5f64.to_radians();
        // exactly on the E/NE edge belongs to NE; mirrored edge to SW
        assert_eq!(CardinalDirection::from_index(sector(t.cos(), t.sin())), NE);
        assert_eq!(CardinalDirection::from_index(sector(-t.cos(), -t.sin())), SW);
        assert_eq!(CardinalDirection::from_index(sector(-1.0, 0.0)), W);
        assert_eq!(CardinalDirection::from_index(sector(1.0, 0.0)), E);
        assert_eq!(CardinalDirection::from_index(sector(0.0, -1.0)), S);
    }

    #[test]
    fn opposites() {
        assert_eq!(N.opposite(), S);
        assert_eq!(NE.opposite(), SW);
        assert_eq!(E.opposite(), W);
        assert_eq!(SE.opposite(), NW);
    }
}
