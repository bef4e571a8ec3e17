//! Measures, topology, directions and overlap on planar geometries.

use chronomap::geometry::{area, buffer, cardinal, distance, length, overlap_ratio, relate, wkt, Geometry};

fn main() {
    let lake = Geometry::polygon([(0.0, 0.0), (400.0, 0.0), (400.0, 300.0), (0.0, 300.0)], vec![]).unwrap();
    let forest = Geometry::rect(400.0, 0.0, 900.0, 500.0).unwrap();
    let stream = Geometry::line_string([(-100.0, 150.0), (200.0, 150.0), (200.0, 700.0)]).unwrap();
    let well = Geometry::point(1200.0, 900.0).unwrap();

    println!("lake       {}", wkt::to_wkt(&lake));
    println!("area       {} m2", area(&lake).unwrap());
    println!("stream     {} m long", length(&stream).unwrap());
    println!("well gap   {:.1} m to the forest", distance(&well, &forest));
    println!("lake/forest  {}", relate(&lake, &forest, 0.0).unwrap());
    println!("stream/lake  {}", relate(&stream, &lake, 0.0).unwrap());
    println!("well lies {:?} of the lake", cardinal(&lake, &well).unwrap());
    let grown = buffer(&lake, 50.0).unwrap();
    println!("lake + 50 m buffer: {:.0} m2", area(&grown).unwrap());
    println!("overlap ratio lake vs buffered lake: {:.3}", overlap_ratio(&lake, &grown).unwrap());
}
