//! Factual question answering with a scripted model: generation, validation,
//! execution and answer phrasing, including a retry after a bad query.

use std::sync::Arc;

use chronomap::llm::{Gateway, ScriptRule, ScriptedClient};
use chronomap::qa::{build_prompt, FewShot, QaConfig, QaPipeline};
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
        rule(r"attempt 1 of 3", "SELECT ?f WHERE { ?f cmo:featureType", "generate"),
        rule(
            r"how many forests",
            "```sparql\nSELECT (COUNT(?f) AS ?n) WHERE { ?f cmo:featureType \"forest\" ; cmo:municipality \"Aarberg\" ; cmo:year 1901 }\n```",
            "generate",
        ),
        rule(".*", "ACCEPT", "validate"),
        rule(r"\?n = (\d+)", "There were $1 forests in Aarberg in 1901.", "answer"),
    ]);
    let gateway = Gateway::uniform(Arc::new(client));
    let cfg = QaConfig::default();
    let pipeline = QaPipeline::new(&store, &bundle, &gateway, &cfg);
    let r = pipeline.answer_factual("How many forests were there in Aarberg in 1901?");
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
}
