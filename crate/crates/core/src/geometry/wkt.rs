//! Well-known text for the four supported geometry kinds.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which
//! never switches to exponent notation, so `parse(to_wkt(g)) == g`.

use std::fmt::Write;

use super::{Coord, Geometry, GeometryError, LineString, Polygon, Result};

fn write_coords(out: &mut String, coords: &[Coord]) {
    out.push('(');
    for (i, c) in coords.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", c.x, c.y);
    }
    out.push(')');
}

fn write_polygon(out: &mut String, p: &Polygon) {
    out.push('(');
    for (i, ring) in p.rings().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_coords(out, ring);
    }
    out.push(')');
}

pub fn to_wkt(g: &Geometry) -> String {
    let mut out = String::new();
    match g {
        Geometry::Point(c) => {
            let _ = write!(out, "POINT ({} {})", c.x, c.y);
        }
        Geometry::LineString(l) => {
            out.push_str("LINESTRING ");
            write_coords(&mut out, l.coords());
        }
        Geometry::Polygon(p) => {
            out.push_str("POLYGON ");
            write_polygon(&mut out, p);
        }
        Geometry::MultiPolygon(ps) => {
            out.push_str("MULTIPOLYGON (");
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_polygon(&mut out, p);
            }
            out.push(')');
        }
    }
    out
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> GeometryError {
        GeometryError::Wkt {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        if self.peek() == Some(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{ch}'")))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        self.src[start..self.pos].to_ascii_uppercase()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..]
            .starts_with(|c: char| c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E'))
        {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| GeometryError::Wkt {
            offset: start,
            message: format!("invalid number '{text}'"),
        })?;
        if !v.is_finite() {
            return Err(GeometryError::NonFinite { x: v, y: v });
        }
        Ok(v)
    }

    fn coord(&mut self) -> Result<Coord> {
        let x = self.number()?;
        let y = self.number()?;
        Ok(Coord::new(x, y))
    }

    fn coord_list(&mut self) -> Result<Vec<Coord>> {
        self.expect('(')?;
        let mut out = vec![self.coord()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.coord()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn polygon(&mut self) -> Result<Polygon> {
        self.expect('(')?;
        let mut rings = vec![self.coord_list()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            rings.push(self.coord_list()?);
        }
        self.expect(')')?;
        let exterior = rings.remove(0);
        Polygon::new(exterior, rings)
    }

    fn geometry(&mut self) -> Result<Geometry> {
        let tag = self.word();
        let g = match tag.as_str() {
            "POINT" => {
                self.expect('(')?;
                let c = self.coord()?;
                self.expect(')')?;
                Geometry::Point(c)
            }
            "LINESTRING" => Geometry::LineString(LineString::new(self.coord_list()?)?),
            "POLYGON" => Geometry::Polygon(self.polygon()?),
            "MULTIPOLYGON" => {
                self.expect('(')?;
                let mut parts = vec![self.polygon()?];
                while self.peek() == Some(',') {
                    self.pos += 1;
                    parts.push(self.polygon()?);
                }
                self.expect(')')?;
                Geometry::MultiPolygon(parts)
            }
            "" => return Err(self.err("expected geometry keyword")),
            other => return Err(self.err(format!("unsupported geometry type {other}"))),
        };
        if self.peek().is_some() {
            return Err(self.err("trailing input"));
        }
        Ok(g)
    }
}

pub fn parse(src: &str) -> Result<Geometry> {
    let g = Parser { src, pos: 0 }.geometry()?;
    g.validate()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for src in [
            "POINT (1.5 -2)",
            "LINESTRING (0 0, 3 4, 3 10)",
            "POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 1 3, 3 3, 3 1, 1 1))",
            "MULTIPOLYGON (((0 0, 1 0, 1 1, 0 1, 0 0)), ((5 5, 6 5, 6 6, 5 6, 5 5)))",
        ] {
            let g = parse(src).unwrap();
            assert_eq!(to_wkt(&g), src);
            assert_eq!(parse(&to_wkt(&g)).unwrap(), g);
        }
    }

    #[test]
    fn no_exponent_notation() {
        let g = Geometry::point(1e21, 1e-7).unwrap();
        let text = to_wkt(&g);
        assert!(!text.contains('e'), "{text}");
        assert_eq!(parse(&text).unwrap(), g);
        let g = Geometry::point(2_600_000.123456789, 1_200_000.000000001).unwrap();
        assert_eq!(parse(&to_wkt(&g)).unwrap(), g);
    }

    #[test]
    fn lenient_case_and_spacing() {
        let g = parse("  point(1 2) ").unwrap();
        assert_eq!(g, Geometry::point(1.0, 2.0).unwrap());
    }

    #[test]
    fn errors_carry_offsets() {
        match parse("POINT (1 x)") {
            Err(GeometryError::Wkt { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("{other:?}"),
        }
        assert!(parse("CIRCLE (0 0)").is_err());
        assert!(parse("POINT (1 2) extra").is_err());
    }
}
