//! Generates a benchmark from a synthetic store, runs it under a scripted
//! model that knows every gold query, and prints the report tables.

use std::sync::Arc;

use chronomap::eval::{build_report, generate_benchmark, oracle_rules, run_benchmark, BenchCounts, RunOptions};
use chronomap::llm::{Gateway, ScriptRule, ScriptedClient};
use chronomap::qa::{build_prompt, FewShot, QaConfig, QaPipeline};
use chronomap::relations::RelationConfig;
use chronomap::synth::{build_store, SynthConfig};

fn main() {
    let store = build_store(&SynthConfig { features_per_year: 60, ..Default::default() }, &RelationConfig::default());
    let few = vec![FewShot {
        question: "Were there lakes in Lyss in 1877?".into(),
        query: "ASK { ?f cmo:featureType \"lake\" ; cmo:municipality \"Lyss\" ; cmo:year 1877 }".into(),
    }];
    let bundle = build_prompt(&store, few).unwrap();
    let counts = BenchCounts { yesno: 8, numeric: 8, overview: 0, list: 0 };
    let items = generate_benchmark(&store, counts, 7, None).unwrap().items;
    for it in items.iter().take(4) {
        println!("{} [{:?}] {}", it.id, it.category, it.question);
    }

    // every other numeric answer is phrased wrongly, to show the metrics move
    let mut rules = vec![ScriptRule::new(r"Question: How many.*Result \(1 rows\):\n\?\w+ = (\d*[02468])$", "About a hundred.", Some("answer")).unwrap()];
    rules.extend(oracle_rules(&items));
    let gateway = Gateway::uniform(Arc::new(ScriptedClient::new(rules)));
    let cfg = QaConfig::default();
    let pipeline = QaPipeline::new(&store, &bundle, &gateway, &cfg);
    let log = run_benchmark(&items, &pipeline, &RunOptions::default());
    println!("\n{}", build_report("scripted", &log).unwrap().render());
}
