//! Precomputes spatial and temporal relations and checks them against the
//! all-pairs computation.

use std::collections::BTreeMap;
use std::time::Instant;

use chronomap::relations::{compute_all, compute_spatial_brute_force, compute_temporal_brute_force, RelFeature, RelationConfig};
use chronomap::synth::{generate, SynthConfig};

fn main() {
    let fs: Vec<RelFeature> = generate(&SynthConfig::default()).values().flatten().map(RelFeature::from).collect();
    let cfg = RelationConfig::default();
    let start = Instant::now();
    let edges = compute_all(&fs, &cfg).unwrap();
    println!("{} features, {} edges in {:?} (config {})", fs.len(), edges.len(), start.elapsed(), cfg.hash());
    let mut by_predicate: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &edges {
        *by_predicate.entry(&e.predicate).or_default() += 1;
    }
    for (p, n) in by_predicate {
        println!("  cmr:{p:<16} {n}");
    }
    let start = Instant::now();
    let mut slow = Vec::new();
    for y in &cfg.timestamps {
        let group: Vec<_> = fs.iter().filter(|f| f.year == *y).cloned().collect();
        slow.extend(compute_spatial_brute_force(&group, &cfg).unwrap());
    }
    slow.extend(compute_temporal_brute_force(&fs, &cfg).unwrap());
    println!("all-pairs oracle: {} edges in {:?}", slow.len(), start.elapsed());
}
