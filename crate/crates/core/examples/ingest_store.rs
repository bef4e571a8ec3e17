//! Ingests synthetic GeoJSON layers into a triple store and prints a sample.

use chronomap::ingest::{IngestConfig, Ingestor};
use chronomap::kgstore::Store;
use chronomap::synth::{feature_collection, generate, municipality_grid, SynthConfig};

fn main() {
    let cfg = SynthConfig { features_per_year: 12, ..Default::default() };
    let mut ing = Ingestor::new(IngestConfig::default());
    for (year, records) in generate(&cfg) {
        let text = feature_collection(&records).to_string();
        let stats = ing.ingest_str(&text, year, &cfg.sheet).unwrap();
        println!("{year}: {} features in, {} kept", stats.input, stats.ingested);
    }
    let mut store = Store::default();
    let added = ing.emit(&mut store, &municipality_grid(cfg.extent_m), None).unwrap();
    store.seal();
    println!("{added} triples");
    for line in store.dump_string().lines().filter(|l| !l.contains("wkt")).take(8) {
        println!("  {line}");
    }
    let f = &store.features()[0];
    println!("{} is a {} from {} in {:?}, {:?} m2", f.iri, f.feature_type, f.year, f.municipalities, f.area_sqm);
}
