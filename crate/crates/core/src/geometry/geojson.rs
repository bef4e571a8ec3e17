//! GeoJSON geometry objects, as `serde_json::Value`.

use serde_json::{json, Value};

use super::{Coord, Geometry, GeometryError, LineString, Polygon, Result};

fn bad(msg: impl Into<String>) -> GeometryError {
    GeometryError::GeoJson(msg.into())
}

fn position(v: &Value) -> Result<Coord> {
    let arr = v.as_array().ok_or_else(|| bad("position must be an array"))?;
    if arr.len() < 2 {
        return Err(bad("position needs two numbers"));
    }
    let x = arr[0].as_f64().ok_or_else(|| bad("coordinate is not a number"))?;
    let y = arr[1].as_f64().ok_or_else(|| bad("coordinate is not a number"))?;
    Ok(Coord::new(x, y))
}

fn positions(v: &Value) -> Result<Vec<Coord>> {
    v.as_array()
        .ok_or_else(|| bad("expected an array of positions"))?
        .iter()
        .map(position)
        .collect()
}

fn polygon(v: &Value) -> Result<Polygon> {
    let rings = v.as_array().ok_or_else(|| bad("expected an array of rings"))?;
    let mut rings = rings.iter().map(positions).collect::<Result<Vec<_>>>()?;
    if rings.is_empty() {
        return Err(GeometryError::Empty);
    }
    let exterior = rings.remove(0);
    Polygon::new(exterior, rings)
}

/// Parses a GeoJSON geometry object. `null` is rejected with [`GeometryError::Empty`].
pub fn from_value(v: &Value) -> Result<Geometry> {
    if v.is_null() {
        return Err(GeometryError::Empty);
    }
    let kind = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("geometry has no type"))?;
    let coords = v
        .get("coordinates")
        .ok_or_else(|| bad("geometry has no coordinates"))?;
    let g = match kind {
        "Point" => Geometry::Point(position(coords)?),
        "LineString" => Geometry::LineString(LineString::new(positions(coords)?)?),
        "Polygon" => Geometry::Polygon(polygon(coords)?),
        "MultiPolygon" => {
            let parts = coords
                .as_array()
                .ok_or_else(|| bad("expected an array of polygons"))?
                .iter()
                .map(polygon)
                .collect::<Result<Vec<_>>>()?;
            Geometry::multi_polygon(parts)?
        }
        other => return Err(bad(format!("unsupported geometry type {other}"))),
    };
    g.validate()?;
    Ok(g)
}

fn ring_value(ring: &[Coord]) -> Value {
    Value::Array(ring.iter().map(|c| json!([c.x, c.y])).collect())
}

fn polygon_value(p: &Polygon) -> Value {
    Value::Array(p.rings().map(ring_value).collect())
}

pub fn to_value(g: &Geometry) -> Value {
    match g {
        Geometry::Point(c) => json!({"type": "Point", "coordinates": [c.x, c.y]}),
        Geometry::LineString(l) => json!({"type": "LineString", "coordinates": ring_value(l.coords())}),
        Geometry::Polygon(p) => json!({"type": "Polygon", "coordinates": polygon_value(p)}),
        Geometry::MultiPolygon(ps) => json!({
            "type": "MultiPolygon",
            "coordinates": ps.iter().map(polygon_value).collect::<Vec<_>>(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let v = json!({"type": "Polygon", "coordinates": [[[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0], [0.0, 0.0]]]});
        let g = from_value(&v).unwrap();
        assert_eq!(to_value(&g), v);
        let line = json!({"type": "LineString", "coordinates": [[0, 0], [3, 4]]});
        assert_eq!(from_value(&line).unwrap(), Geometry::line_string([(0.0, 0.0), (3.0, 4.0)]).unwrap());
    }

    #[test]
    fn rejects_null_and_unknown() {
        assert_eq!(from_value(&Value::Null), Err(GeometryError::Empty));
        assert!(from_value(&json!({"type": "GeometryCollection", "coordinates": []})).is_err());
        assert!(from_value(&json!({"type": "Point", "coordinates": [1]})).is_err());
    }
}
