//! A self-contained demo dataset: synthetic map layers, municipality
//! boundaries, gazetteer, tiles, few-shot examples, a benchmark and scripted
//! model rules that answer it.

use std::fs;
use std::path::{Path, PathBuf};

use chronomap::eval::{load_benchmark, oracle_rules, AnswerKind, Gold};
use chronomap::geometry::{centroid, geojson};
use chronomap::llm::ScriptRule;
use chronomap::synth::{feature_collection, generate, municipality_grid, SynthConfig};
use serde_json::{json, Value};

use crate::cli;
use crate::error::CliError;

/// 1×1 RGB PNG.
const TILE: [u8; 69] = [
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x01,
    0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41,
    0x54, 0x78, 0x9c, 0x63, 0x38, 0x71, 0x63, 0x03, 0x00, 0x04, 0xbc, 0x02, 0x51, 0x25, 0x82, 0x89, 0x34, 0x00, 0x00, 0x00,
    0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

const FEATURES_PER_YEAR: usize = 60;
const EXTENT_M: f64 = 4000.0;

const FEW_SHOT: &str = r#"[
  {
    "question": "Were there lakes in Lyss in 1877?",
    "query": "ASK { ?f cmo:featureType \"lake\" ; cmo:municipality \"Lyss\" ; cmo:year 1877 }"
  },
  {
    "question": "How many forests were there in Bargen in 1901?",
    "query": "SELECT (COUNT(?f) AS ?n) WHERE { ?f cmo:featureType \"forest\" ; cmo:municipality \"Bargen\" ; cmo:year 1901 }"
  },
  {
    "question": "What was the total area of wetlands in Kappelen in 1916?",
    "query": "SELECT (SUM(?a) AS ?total) WHERE { ?f cmo:featureType \"wetland\" ; cmo:municipality \"Kappelen\" ; cmo:year 1916 ; cmo:areaSqm ?a }"
  },
  {
    "question": "Which lakes in Aarberg changed between 1877 and 1901?",
    "query": "SELECT ?f ?g WHERE { ?f cmo:featureType \"lake\" ; cmo:municipality \"Aarberg\" ; cmo:year 1877 ; cmr:changedTo ?g }"
  }
]
"#;

const CONFIG: &str = r#"[data]
store = "store.nt"
boundaries = "boundaries.geojson"
gazetteer = "gazetteer.json"
tiles_dir = "tiles"
few_shot = "few_shot.json"
scripted_rules = "scripted_rules.json"
search_fixture = "search.json"
provenance = "provenance.jsonl"
FEATURES
[gateway]
generator = "scripted"
validator = "scripted"
composer = "scripted"
judge = "scripted"
search = "fixture"

[bench]
seed = 7
label = "scripted"

[bench.counts]
yesno = 10
numeric = 10
overview = 2
list = 0
"#;

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::User(format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io(path))
}

fn run(config: &Path, args: &[&str]) -> Result<(), CliError> {
    let mut argv = vec!["chronomap".to_string(), "--config".into(), config.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let parsed = <cli::Cli as clap::Parser>::try_parse_from(argv).map_err(CliError::internal)?;
    cli::execute(parsed, &mut std::io::sink())
}

fn rules_json(rules: &[ScriptRule]) -> Value {
    Value::Array(
        rules
            .iter()
            .map(|r| json!({ "pattern": r.pattern.as_str(), "response": r.response, "tag": r.tag }))
            .collect(),
    )
}

/// Writes the dataset into `dir`, then runs `ingest`, `relations` and
/// `bench generate` on it. Returns the path of `config.toml`.
pub fn build_demo(dir: &Path) -> Result<PathBuf, CliError> {
    let synth = SynthConfig {
        features_per_year: FEATURES_PER_YEAR,
        extent_m: EXTENT_M,
        sheet: "s138".into(),
        ..Default::default()
    };
    for sub in ["features", "tiles"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io(&p))?;
    }

    let layers = generate(&synth);
    let mut feature_entries = String::new();
    for (year, records) in &layers {
        let name = format!("features/{}_{year}.geojson", synth.sheet);
        write(&dir.join(&name), format!("{:#}\n", feature_collection(records)))?;
        feature_entries.push_str(&format!("\n[[data.features]]\npath = \"{name}\"\nyear = {year}\nsheet = \"{}\"\n", synth.sheet));
    }

    let boundaries: Vec<Value> = municipality_grid(EXTENT_M)
        .iter()
        .map(|b| json!({ "type": "Feature", "properties": { "name": b.name }, "geometry": geojson::to_value(&b.geometry) }))
        .collect();
    write(
        &dir.join("boundaries.geojson"),
        format!("{:#}\n", json!({ "type": "FeatureCollection", "features": boundaries })),
    )?;

    // present-day names for the first few features of the latest layer
    let latest = layers.values().next_back().map(Vec::as_slice).unwrap_or_default();
    let gazetteer: Vec<Value> = latest
        .iter()
        .take(8)
        .enumerate()
        .map(|(i, r)| {
            let c = centroid(&r.geometry).expect("synthetic geometry has a centroid");
            json!({
                "class": r.feature_type,
                "name": format!("{} {}", capitalize(&r.feature_type), i + 1),
                "external-id": format!("way/{}", 1000 + i),
                "point": [c.x + 3.0, c.y - 4.0],
            })
        })
        .collect();
    write(&dir.join("gazetteer.json"), format!("{:#}\n", Value::Array(gazetteer)))?;

    for m in chronomap::synth::MUNICIPALITIES {
        for y in layers.keys() {
            write(&dir.join(format!("tiles/{m}_{y}.png")), TILE)?;
        }
    }
    write(&dir.join("few_shot.json"), FEW_SHOT)?;
    write(
        &dir.join("search.json"),
        format!(
            "{:#}\n",
            json!({
                "aarberg": [
                    { "title": "Aarberg", "url": "https://example.org/aarberg", "snippet": "A small town on the Aare, known for its wooden bridge." },
                    { "title": "Aare correction", "url": "https://example.org/aare", "snippet": "The Jura water correction rerouted the Aare in the late 19th century." }
                ],
                "lyss": [
                    { "title": "Lyss", "url": "https://example.org/lyss", "snippet": "Lyss lies in the Seeland region." }
                ]
            })
        ),
    )?;
    let rules_path = dir.join("scripted_rules.json");
    write(&rules_path, "[]\n")?;
    let config = dir.join("config.toml");
    write(&config, CONFIG.replace("FEATURES\n", &feature_entries))?;

    run(&config, &["ingest"])?;
    run(&config, &["relations"])?;
    let bench = dir.join("benchmark.json");
    run(&config, &["bench", "generate", "--out", &bench.display().to_string()])?;

    let items = load_benchmark(&fs::read_to_string(&bench).map_err(io(&bench))?).map_err(CliError::internal)?;
    let mut rules = oracle_rules(&items);
    let affirmed: Vec<&str> = items
        .iter()
        .filter(|i| i.answer_kind == AnswerKind::Yesno && i.gold_answer == Some(Gold::YesNo(true)))
        .chain(items.iter().filter(|i| i.answer_kind == AnswerKind::Numeric))
        .take(3)
        .map(|i| i.question.as_str())
        .collect();
    let r = |p: &str, resp: String, tag: &str| ScriptRule::new(p, resp, Some(tag)).expect("static pattern");
    rules.push(r(".*", affirmed.iter().map(|q| format!("- {q}\n")).collect(), "decompose"));
    rules.push(r(
        r"^Search results:\n\[1\] ([^\n]*?) \(https?://[^)]*\): ([^\n]*)",
        "The maps and the web agree on this area. $1: $2".into(),
        "compose",
    ));
    rules.push(r(
        r"Facts from the knowledge graph:\nQ: (.*?) A: ([^\n]*)",
        "The maps answer \"$1\" with: $2".into(),
        "compose",
    ));
    rules.push(r(".*", "The maps do not hold enough facts to answer this question.".into(), "compose"));
    if let Some(q) = affirmed.first() {
        rules.push(r(".*", format!("STATEMENT: {q} Yes. | QUESTION: {q}"), "extract"));
    }
    for (name, score) in [("relevance", "0.9"), ("fluency", "0.8"), ("informativeness", "0.7")] {
        rules.push(r(".*", score.into(), &format!("judge-{name}")));
    }
    write(&rules_path, format!("{:#}\n", rules_json(&rules)))?;
    Ok(config)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}
