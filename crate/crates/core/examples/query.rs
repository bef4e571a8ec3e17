//! SPARQL over the fixture store: a table, an ASK and the JSON results format.

use chronomap::query::{evaluate, parse, print, to_sparql_json};
use chronomap::synth::aarberg_fixture;

fn main() {
    let store = aarberg_fixture();
    let text = "SELECT ?t (COUNT(?f) AS ?n) (SUM(?a) AS ?total) WHERE {
        ?f cmo:municipality \"Aarberg\" ; cmo:year 1901 ; cmo:featureType ?t ; cmo:areaSqm ?a
    } GROUP BY ?t ORDER BY DESC(?n)";
    let q = parse(text).unwrap();
    println!("{}\n", print(&q));
    let ev = evaluate(&q, &store).unwrap();
    println!("{:#}\n", to_sparql_json(&ev.result, &store));
    let ask = parse("ASK { ?f cmo:featureType \"wetland\" ; cmo:year 1877 }").unwrap();
    println!("wetland in 1877: {:?}", evaluate(&ask, &store).unwrap().result);
    match parse("SELECT ?f WHERE { ?f cmo:year }") {
        Err(e) => println!("syntax error: {e}"),
        Ok(_) => unreachable!(),
    }
}
