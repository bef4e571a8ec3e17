//! Records scripted model exchanges to a transcript, then replays them.

use chronomap::llm::{ChatClient, ChatRequest, Recorder, ReplayClient, ScriptRule, ScriptedClient};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.jsonl");
    let scripted = ScriptedClient::new(vec![
        ScriptRule::new(r"how many (\w+)", "SELECT (COUNT(?f) AS ?n) WHERE { ?f cmo:featureType \"$1\" }", Some("generate")).unwrap(),
        ScriptRule::new(".*", "ACCEPT", Some("validate")).unwrap(),
    ]);
    let recorder = Recorder::new(scripted, &path).unwrap();
    let reqs = [
        ChatRequest::new("generate", "Write SPARQL.", "Question: How many lakes?"),
        ChatRequest::new("validate", "Check the query.", "SELECT ..."),
    ];
    for r in &reqs {
        println!("live   {:>8}: {}", r.tag, recorder.complete(r).unwrap().text);
    }
    let replay = ReplayClient::from_file(&path).unwrap();
    println!("transcript holds {} exchanges", replay.len());
    for r in &reqs {
        println!("replay {:>8}: {}", r.tag, replay.complete(r).unwrap().text);
    }
    let unseen = ChatRequest::new("generate", "Write SPARQL.", "Question: How many rivers?");
    println!("unseen request: {}", replay.complete(&unseen).unwrap_err());
}
