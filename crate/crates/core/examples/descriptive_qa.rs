//! Descriptive question answering: decomposition into factual sub-questions,
//! parallel answering, and composition with web search snippets.

use std::collections::BTreeMap;
use std::sync::Arc;

use chronomap::llm::{FixtureSearch, Gateway, ScriptRule, ScriptedClient, SearchResult};
use chronomap::qa::{build_prompt, DescriptiveOptions, FewShot, QaConfig, QaPipeline};
use chronomap::synth::aarberg_fixture;

fn main() {
    let store = aarberg_fixture();
    let few = vec![FewShot {
        question: "Were there lakes in Aarberg in 1877?".into(),
        query: "ASK { ?f cmo:featureType \"lake\" ; cmo:municipality \"Aarberg\" ; cmo:year 1877 }".into(),
    }];
    let bundle = build_prompt(&store, few).unwrap();
    let rule = |p: &str, r: &str, tag: &str| ScriptRule::new(p, r, Some(tag)).unwrap();
    let client = ScriptedClient::new(vec![
        rule(".*", "1. How many forests were there in Aarberg in 1901?\n2. What was the total area of wetlands in Aarberg in 1901?", "decompose"),
        rule("forests", "SELECT (COUNT(?f) AS ?n) WHERE { ?f cmo:featureType \"forest\" ; cmo:municipality \"Aarberg\" ; cmo:year 1901 }", "generate"),
        rule("wetlands", "SELECT (SUM(?a) AS ?total) WHERE { ?f cmo:featureType \"wetland\" ; cmo:municipality \"Aarberg\" ; cmo:year 1901 ; cmo:areaSqm ?a }", "generate"),
        rule(".*", "ACCEPT", "validate"),
        rule(r"\?n = (\d+)", "$1 forests.", "answer"),
        rule(r"\?total = (\d+)", "$1 square meters of wetland.", "answer"),
        rule(
            ".*",
            "In 1901 Aarberg was surrounded by 18 forest sections and a single wetland of about 29,114 square meters. The town sits on the Aare.",
            "compose",
        ),
    ]);
    let mut hits = BTreeMap::new();
    hits.insert(
        "aarberg".to_string(),
        vec![SearchResult {
            title: "Aarberg".into(),
            url: "https://example.org/aarberg".into(),
            snippet: "A small town on the Aare.".into(),
        }],
    );
    let mut gateway = Gateway::uniform(Arc::new(client));
    gateway.search = Arc::new(FixtureSearch::new(hits).unwrap());
    let cfg = QaConfig::default();
    let pipeline = QaPipeline::new(&store, &bundle, &gateway, &cfg);
    let opts = DescriptiveOptions { use_map_image: false, use_search: true };
    let r = pipeline.answer_descriptive("What was the natural environment around Aarberg like in 1901?", opts);
    println!("facts:\n{}\n", r.facts_text);
    println!("contexts: {:?}", r.contexts_used);
    println!("answer: {}", r.answer);
}
