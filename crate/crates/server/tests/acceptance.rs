//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chronomap::eval::{
    build_report, delivery_rate, fact_check, generate_benchmark, oracle_rules, round2, run_benchmark, AnswerKind,
    AnswerNormalization, BenchCounts, Category, FactualOutcome, LogEntry, RunOptions, SparqlCheck, SparqlVerdict,
};
use chronomap::geometry::{
    area, buffer, cardinal, centroid, distance, length, overlap_ratio, relate, CardinalDirection, Coord, Geometry, Relation,
    RelationSet,
};
use chronomap::kgstore::{Schema, Term};
use chronomap::llm::{Gateway, ScriptRule, ScriptedClient};
use chronomap::qa::{build_prompt, FailureStage, FewShot, QaConfig, QaPipeline, Status};
use chronomap::query::{evaluate, evaluate_naive, parse, print, validate_sparql_json, Form, Query, QueryResult};
use chronomap::relations::{
    compute_spatial, compute_spatial_brute_force, compute_temporal, compute_temporal_brute_force, RelFeature, RelationConfig,
    RelationEdge,
};
use chronomap::synth::{aarberg_fixture, build_store, generate, random_query, random_store, star_polygon, SynthConfig};
use chronomap_server::api::{router, AppState};
use chronomap_server::{demo, App, AppConfig};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rels(list: &[Relation]) -> RelationSet {
    list.iter().copied().collect()
}

fn geometry_oracle() -> Outcome {
    let start = Instant::now();
    let poly = |r: &[(f64, f64)]| Geometry::polygon(r.to_vec(), vec![]).unwrap();
    let rect = |a, b, c, d| Geometry::rect(a, b, c, d).unwrap();
    let line = |p: &[(f64, f64)]| Geometry::line_string(p.to_vec()).unwrap();
    let pt = |x, y| Geometry::point(x, y).unwrap();
    let holed = Geometry::polygon(
        [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)],
        vec![vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]],
    )
    .unwrap();
    let mut exact = 0;
    let mut eq = |what: &str, got: f64, want: f64| -> Result<(), String> {
        exact += 1;
        ensure(got == want, || format!("{what}: got {got}, want {want}"))
    };
    eq("triangle area", area(&poly(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)])).unwrap(), 6.0)?;
    eq("holed square area", area(&holed).unwrap(), 12.0)?;
    eq("L area", area(&poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)])).unwrap(), 3.0)?;
    eq("3-4-5 length", length(&line(&[(0.0, 0.0), (3.0, 4.0)])).unwrap(), 5.0)?;
    eq("degenerate length", length(&line(&[(1.0, 1.0), (1.0, 1.0)])).unwrap(), 0.0)?;
    eq("polyline length", length(&line(&[(0.0, 0.0), (3.0, 4.0), (3.0, 10.0)])).unwrap(), 11.0)?;
    eq("point-segment", distance(&pt(0.0, 5.0), &line(&[(-1.0, 0.0), (1.0, 0.0)])), 5.0)?;
    eq("touching squares", distance(&rect(0.0, 0.0, 1.0, 1.0), &rect(1.0, 0.0, 2.0, 1.0)), 0.0)?;
    eq("point-point", distance(&pt(3.0, 4.0), &pt(0.0, 0.0)), 5.0)?;
    let c = |g: &Geometry| centroid(g).unwrap();
    for (what, got, want) in [
        ("square centroid", c(&rect(0.0, 0.0, 1.0, 1.0)), Coord::new(0.5, 0.5)),
        ("segment centroid", c(&line(&[(0.0, 0.0), (2.0, 0.0)])), Coord::new(1.0, 0.0)),
        ("triangle centroid", c(&poly(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)])), Coord::new(1.0, 1.0)),
    ] {
        ensure(got.distance(&want) < 1e-12, || format!("{what}: got {got:?}"))?;
    }
    let o = pt(0.0, 0.0);
    for (to, want) in [(pt(10.0, 1.0), CardinalDirection::E), (pt(0.0, 10.0), CardinalDirection::N), (pt(-5.0, -5.0), CardinalDirection::SW)] {
        let got = cardinal(&o, &to).unwrap();
        ensure(got == want, || format!("cardinal to {to:?}: {got:?}"))?;
    }
    use Relation::*;
    let unit = rect(0.0, 0.0, 1.0, 1.0);
    for (a, b, eps, want) in [
        (&unit, rect(1.0, 0.0, 2.0, 1.0), 0.0, rels(&[Intersects, Touches])),
        (&unit, rect(2.0, 0.0, 3.0, 1.0), 0.0, rels(&[Disjoint])),
        (&unit, rect(2.0, 0.0, 3.0, 1.0), 1.5, rels(&[Intersects, Touches])),
    ] {
        let got = relate(a, &b, eps).unwrap();
        ensure(got == want, || format!("relate {b:?} eps {eps}: {got:?}"))?;
    }
    let (big, small) = (rect(0.0, 0.0, 4.0, 4.0), rect(1.0, 1.0, 2.0, 2.0));
    ensure(relate(&big, &small, 0.0).unwrap() == rels(&[Intersects, Contains]), || "containment".into())?;
    ensure(relate(&small, &big, 0.0).unwrap() == rels(&[Intersects, Within]), || "within".into())?;
    let r = overlap_ratio(&rect(0.0, 0.0, 2.0, 1.0), &rect(1.0, 0.0, 3.0, 1.0)).unwrap();
    ensure((r - 1.0 / 3.0).abs() < 1e-9, || format!("overlap 1/3: {r}"))?;
    ensure(overlap_ratio(&unit, &unit).unwrap() == 1.0, || "identical overlap".into())?;
    ensure(overlap_ratio(&unit, &rect(5.0, 5.0, 6.0, 6.0)).unwrap() == 0.0, || "disjoint overlap".into())?;

    let circle = area(&buffer(&pt(0.0, 0.0), 10.0).unwrap()).unwrap();
    let analytic = 100.0 * std::f64::consts::PI;
    ensure((circle - analytic).abs() <= 0.02 * analytic, || format!("point buffer {circle}"))?;
    let minkowski = area(&buffer(&unit, 1.0).unwrap()).unwrap();
    let analytic = 5.0 + std::f64::consts::PI;
    ensure((minkowski - analytic).abs() <= 0.02 * analytic, || format!("square buffer {minkowski}"))?;
    ensure(area(&buffer(&holed, 0.0).unwrap()).unwrap() == 12.0, || "zero buffer".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut kinds = BTreeSet::new();
    for i in 0..1000 {
        let ca = Coord::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        let cb = Coord::new(ca.x + rng.random_range(-60.0..60.0), ca.y + rng.random_range(-60.0..60.0));
        let a = Geometry::Polygon(star_polygon(&mut rng, ca, 5.0, 30.0));
        let b = Geometry::Polygon(star_polygon(&mut rng, cb, 5.0, 30.0));
        let eps = rng.random_range(0.0..5.0);
        let fail = |what: &str| format!("pair {i} ({what}): {a:?} / {b:?}");
        ensure(distance(&a, &b) == distance(&b, &a), || fail("distance symmetry"))?;
        let (ab, ba) = (relate(&a, &b, eps).unwrap(), relate(&b, &a, eps).unwrap());
        ensure(ab == ba.converse(), || fail("converse"))?;
        ensure(ab.has(Contains) == ba.has(Within), || fail("contains/within duality"))?;
        ensure(ab.has(Disjoint) != ab.has(Intersects), || fail("disjoint/intersects duality"))?;
        ensure(!ab.has(Disjoint) || ab.len() == 1, || fail("disjoint is exclusive"))?;
        let (r1, r2) = (overlap_ratio(&a, &b).unwrap(), overlap_ratio(&b, &a).unwrap());
        ensure(r1 == r2 && (0.0..=1.0).contains(&r1), || fail("overlap symmetry"))?;
        if let Ok(d) = cardinal(&a, &b) {
            ensure(cardinal(&b, &a).unwrap() == d.opposite(), || fail("cardinal opposition"))?;
        }
        kinds.extend(ab.iter());
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{exact} exact examples, buffers within 2%, 1000 random pairs ({} relation kinds seen) in {elapsed:.2?}",
        kinds.len()
    ))
}

fn edge_keys(edges: &[RelationEdge]) -> BTreeSet<(String, String, String)> {
    edges.iter().map(|e| (e.from.clone(), e.to.clone(), e.predicate.clone())).collect()
}

fn relation_oracle() -> Outcome {
    let fs: Vec<RelFeature> = generate(&SynthConfig::default()).values().flatten().map(RelFeature::from).collect();
    let cfg = RelationConfig::default();
    ensure(fs.len() == 800, || format!("{} features", fs.len()))?;
    let start = Instant::now();
    let mut fast = Vec::new();
    for year in &cfg.timestamps {
        let group: Vec<_> = fs.iter().filter(|f| f.year == *year).cloned().collect();
        fast.extend(compute_spatial(&group, &cfg).map_err(|e| e.to_string())?);
    }
    fast.extend(compute_temporal(&fs, &cfg).map_err(|e| e.to_string())?);
    let elapsed = start.elapsed();
    let mut slow = Vec::new();
    for year in &cfg.timestamps {
        let group: Vec<_> = fs.iter().filter(|f| f.year == *year).cloned().collect();
        slow.extend(compute_spatial_brute_force(&group, &cfg).map_err(|e| e.to_string())?);
    }
    slow.extend(compute_temporal_brute_force(&fs, &cfg).map_err(|e| e.to_string())?);
    let (f, s) = (edge_keys(&fast), edge_keys(&slow));
    let (extra, missing) = (f.difference(&s).count(), s.difference(&f).count());
    ensure(extra == 0 && missing == 0, || format!("{missing} missing, {extra} extra"))?;
    let schema = Schema::chronomap();
    let closed = fast
        .iter()
        .filter(|e| {
            schema.inverse_of(&e.predicate_iri()).is_some_and(|inv| {
                let local = inv.rsplit('#').next().unwrap_or_default().to_string();
                f.contains(&(e.to.clone(), e.from.clone(), local))
            })
        })
        .count();
    ensure(closed == fast.len(), || format!("inverse closure {closed}/{}", fast.len()))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{} edges, 0 missing, 0 extra, closure 100%, computed in {elapsed:.2?}", fast.len()))
}

fn bag(r: &QueryResult) -> HashMap<Vec<Option<Term>>, usize> {
    let mut m = HashMap::new();
    if let QueryResult::Table(t) = r {
        for row in &t.rows {
            *m.entry(row.clone()).or_default() += 1;
        }
    }
    m
}

fn unsliced(q: &Query) -> Query {
    let mut q = q.clone();
    if let Form::Select(s) = &mut q.form {
        s.limit = None;
        s.offset = None;
    }
    q
}

fn query_equivalence() -> Outcome {
    let mut rows = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = random_store(&mut rng, 500);
        let q = random_query(&mut rng);
        let text = print(&q);
        let reparsed = parse(&text).map_err(|e| format!("seed {seed}: {e}\n{text}"))?;
        ensure(reparsed == q && print(&reparsed) == text, || format!("seed {seed}: round trip differs\n{text}"))?;
        let full = unsliced(&q);
        let fast = evaluate(&full, &store).map_err(|e| e.to_string())?.result;
        let slow = evaluate_naive(&full, &store).map_err(|e| e.to_string())?;
        let same = match (&fast, &slow) {
            (QueryResult::Boolean(a), QueryResult::Boolean(b)) => a == b,
            _ => bag(&fast) == bag(&slow),
        };
        ensure(same, || format!("seed {seed}: row multisets differ\n{text}"))?;
        rows += fast.len();
    }
    Ok(format!("100 queries, {rows} rows, identical multisets, parse/print fixed point"))
}

fn few_shot() -> Vec<FewShot> {
    vec![FewShot {
        question: "Were there lakes in Lyss in 1877?".into(),
        query: "ASK { ?f cmo:featureType \"lake\" . ?f cmo:municipality \"Lyss\" . ?f cmo:year 1877 }".into(),
    }]
}

fn factual_pipeline() -> Outcome {
    let store = build_store(&SynthConfig { features_per_year: 60, ..Default::default() }, &RelationConfig::default());
    let bundle = build_prompt(&store, few_shot()).map_err(|e| e.to_string())?;
    let counts = BenchCounts { yesno: 10, numeric: 10, overview: 0, list: 0 };
    let items = generate_benchmark(&store, counts, 3, None).map_err(|e| e.to_string())?.items;
    ensure(items.len() == 20, || format!("{} items", items.len()))?;
    let cfg = QaConfig::default();
    let opts = RunOptions::default();
    let run = |rules: Vec<ScriptRule>| {
        let gw = Gateway::uniform(Arc::new(ScriptedClient::new(rules)));
        let p = QaPipeline::new(&store, &bundle, &gw, &cfg);
        let log = run_benchmark(&items, &p, &opts);
        let results: Vec<_> = items.iter().map(|i| p.answer_factual(&i.question)).collect();
        (build_report("scripted", &log), results)
    };
    let garbage = |pattern: &str| ScriptRule::new(pattern, "I am not sure how to write that query.", Some("generate")).unwrap();

    let (rep, _) = run(oracle_rules(&items));
    let f = rep.map_err(|e| e.to_string())?.factual.ok_or("no factual summary")?;
    ensure(f.delivery_rate == 1.0 && f.accuracy == 1.0, || format!("oracle: {}", f.row()))?;

    let mut rules = vec![garbage(r"\(attempt [12] of 3\)")];
    rules.extend(oracle_rules(&items));
    let (rep, results) = run(rules);
    let s = rep.map_err(|e| e.to_string())?.factual.ok_or("no factual summary")?;
    ensure(s.delivery_rate == 1.0, || format!("sabotage: {}", s.row()))?;
    ensure(results.iter().all(|r| r.delivered() && r.attempts == 3), || "sabotage: attempts != 3".into())?;

    let mut rules = vec![garbage(".*")];
    rules.extend(oracle_rules(&items));
    let (rep, results) = run(rules);
    let g = rep.map_err(|e| e.to_string())?.factual.ok_or("no factual summary")?;
    ensure(g.delivery_rate == 0.0, || format!("garbage: {}", g.row()))?;
    let parse_failures = results
        .iter()
        .filter(|r| matches!(&r.status, Status::Failed { stage: FailureStage::Parse, .. }))
        .count();
    ensure(parse_failures == 20, || format!("garbage: {parse_failures}/20 failed at parse"))?;
    Ok(format!(
        "oracle {:.2}/{:.2}; sabotage delivered 20/20 at attempts=3; garbage {:.2} with 20/20 stage=parse",
        f.delivery_rate, f.accuracy, g.delivery_rate
    ))
}

const PAPER_ANSWER: &str = "The town was surrounded by 18 forest sections, covering over 4 million square meters, \
and a single wetland area of about 29,114 square meters, indicating a lush natural environment.";

fn fact_check_reproduction() -> Outcome {
    let store = aarberg_fixture();
    let bundle = build_prompt(&store, few_shot()).map_err(|e| e.to_string())?;
    let q1 = "Were there 18 forest sections covering over 4 million square meters in Aarberg in 1901?";
    let q2 = "Was there a single wetland area of about 29,114 square meters in Aarberg in 1901?";
    let agg = |t: &str| {
        format!("SELECT (COUNT(?f) AS ?n) (SUM(?a) AS ?total) WHERE {{ ?f cmo:featureType \"{t}\" . ?f cmo:municipality \"Aarberg\" . ?f cmo:year 1901 . ?f cmo:areaSqm ?a }}")
    };
    let rule = |p: &str, r: String, tag: &str| ScriptRule::new(p, r, Some(tag)).unwrap();
    let client = ScriptedClient::new(vec![
        rule(
            "18 forest sections",
            format!("STATEMENT: 18 forest sections covering over 4 million square meters | QUESTION: {q1}\nSTATEMENT: a single wetland area of about 29,114 square meters | QUESTION: {q2}"),
            "extract",
        ),
        rule("18 forest sections", agg("forest"), "generate"),
        rule("single wetland", agg("wetland"), "generate"),
        rule(".*", "ACCEPT".into(), "validate"),
        rule(r"\?n = 18, \?total = ([4-9]\d{6})", "Yes, 18 forests covered $1 square meters.".into(), "answer"),
        rule(r"\?n = 1, \?total = (29[01]\d\d)\b", "Yes, one wetland of $1 square meters.".into(), "answer"),
        rule(".*", "No.".into(), "answer"),
    ]);
    let gw = Gateway::uniform(Arc::new(client));
    let cfg = QaConfig::default();
    let p = QaPipeline::new(&store, &bundle, &gw, &cfg);
    let r = fact_check(PAPER_ANSWER, gw.judge.as_ref(), &p, &AnswerNormalization::default());
    let qs: Vec<&str> = r.facts.iter().map(|f| f.question.as_str()).collect();
    ensure(qs == [q1, q2], || format!("extracted {qs:?}"))?;
    ensure(r.accuracy_auto() == Some(1.0), || format!("fact accuracy {:?}", r.accuracy_auto()))?;
    Ok("2 questions extracted verbatim, fact accuracy 1.00".into())
}

fn metric_arithmetic() -> Outcome {
    let d: Vec<bool> = (0..90).map(|i| i < 88).collect();
    let rate = round2(delivery_rate(&d).map_err(|e| e.to_string())?);
    ensure(format!("{rate:.2}") == "0.98", || format!("delivery {rate}"))?;
    let log: Vec<LogEntry> = (0..90)
        .map(|i| {
            let delivered = i < 88;
            LogEntry::Factual(FactualOutcome {
                id: format!("q{i:03}"),
                question: "q".into(),
                category: Category::Aggregate,
                answer_kind: AnswerKind::Numeric,
                delivered,
                answer: if delivered { "1".into() } else { String::new() },
                query: Some("ASK {}".into()),
                attempts: 1,
                failed_stage: None,
                correct: delivered.then_some(i < 79),
                reason: None,
                sparql_auto: Some(SparqlCheck {
                    verdict: if i < 65 { SparqlVerdict::Correct } else { SparqlVerdict::Incorrect },
                    rationale: String::new(),
                }),
                sparql_manual: (65..90).contains(&i).then_some(i < 76),
            })
        })
        .collect();
    let rep = build_report("Deepseek-Reasoner", &log).map_err(|e| e.to_string())?;
    let row = rep.factual.as_ref().ok_or("no factual summary")?.row();
    ensure(row == "0.98 / 0.88 / 0.72 / 0.84", || format!("row {row:?}"))?;
    ensure(rep.render().contains("Deepseek-Reasoner | 0.98 / 0.88 / 0.72 / 0.84\n"), || "rendered table".into())?;
    Ok(format!("88/90 -> {rate:.2}; row \"{row}\""))
}

fn chronomap(config: &Path, args: &[&str], stdin: Option<&str>) -> Result<(i32, String, String), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chronomap"));
    cmd.arg("--config").arg(config).args(args).env("RUST_LOG", "error");
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() });
    cmd.stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().map_err(|e| e.to_string())?;
    if let Some(text) = stdin {
        use std::io::Write;
        child.stdin.take().unwrap().write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    }
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    ))
}

fn read(p: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn end_to_end(dir: &Path) -> Outcome {
    let config = dir.join("config.toml");
    let base = std::fs::read_to_string(&config).map_err(|e| e.to_string())?;
    let record = dir.join("record.toml");
    std::fs::write(&record, base.replace("search = \"fixture\"", "search = \"fixture\"\nrecord = \"transcript.jsonl\""))
        .map_err(|e| e.to_string())?;
    let replay = dir.join("replay.toml");
    std::fs::write(
        &replay,
        base.replace("\"scripted\"", "\"replay\"").replace("[data]\n", "[data]\ntranscript = \"transcript.jsonl\"\n"),
    )
    .map_err(|e| e.to_string())?;
    let bench = dir.join("benchmark.json").display().to_string();
    let (code, _, err) = chronomap(&record, &["bench", "run", "--benchmark", &bench, "--out", "/dev/null"], None)?;
    ensure(code == 0, || format!("recording run exited {code}: {err}"))?;
    let mut outputs = Vec::new();
    for n in 1..=2 {
        let log = dir.join(format!("replay{n}.jsonl"));
        let report = dir.join(format!("replay{n}.json"));
        let (code, table, err) = chronomap(
            &replay,
            &["bench", "run", "--benchmark", &bench, "--out", &log.display().to_string(), "--report", &report.display().to_string()],
            None,
        )?;
        ensure(code == 0, || format!("replay run {n} exited {code}: {err}"))?;
        outputs.push((read(&log)?, read(&report)?, table));
    }
    ensure(outputs[0] == outputs[1], || "replay runs differ".into())?;
    let entries = String::from_utf8_lossy(&outputs[0].0).lines().count();
    ensure(entries == 22, || format!("{entries} log entries"))?;
    ensure(outputs[0].2.contains("| 1.00 / 1.00 /"), || format!("report:\n{}", outputs[0].2))?;
    Ok(format!("2 replay runs, {entries} outcomes, logs and reports byte-identical"))
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, String, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let ctype = res
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_string();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, ctype, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn service_contract(dir: &Path) -> Outcome {
    let config = dir.join("config.toml");
    let cfg = AppConfig::load(&config).map_err(|e| e.to_string())?;
    let app = App::load(&cfg).map_err(|e| e.to_string())?;
    let triples = app.store.len();
    let router = router(AppState::new(app, &cfg.server), &cfg.server);
    let items: Value = serde_json::from_slice(&read(&dir.join("benchmark.json"))?).map_err(|e| e.to_string())?;
    let question = items[0]["question"].as_str().ok_or("benchmark has no question")?.to_string();
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let mut checks = 0;
    rt.block_on(async {
        let (s, _, body) = call(&router, get("/health")).await;
        ensure(s == StatusCode::OK && body["status"] == "ok" && body["triples"] == triples, || format!("/health {s} {body}"))?;

        let (s, _, body) = call(&router, post("/sparql", json!({ "query": "SELECT ?f WHERE {\n  ?f cmo:year 1901 ." }))).await;
        ensure(
            s == StatusCode::BAD_REQUEST && body["code"] == "parse_error" && body["line"].is_u64() && body["column"].is_u64(),
            || format!("/sparql syntax error {s} {body}"),
        )?;

        let select = "SELECT ?f ?a WHERE { ?f cmo:featureType \"lake\" . ?f cmo:areaSqm ?a } LIMIT 5";
        let (s, ctype, body) = call(&router, post("/sparql", json!({ "query": select }))).await;
        ensure(s == StatusCode::OK && ctype.starts_with("application/sparql-results+json"), || format!("/sparql {s} {ctype}"))?;
        validate_sparql_json(&body).map_err(|e| format!("SELECT results: {e}"))?;
        ensure(body["results"]["bindings"].as_array().is_some_and(|b| b.len() == 5), || format!("bindings {body}"))?;
        let (_, _, body) = call(&router, post("/sparql", json!({ "query": "ASK { ?f cmo:featureType \"lake\" }" }))).await;
        validate_sparql_json(&body).map_err(|e| format!("ASK results: {e}"))?;

        let (s1, _, a) = call(&router, post("/qa/factual", json!({ "question": question }))).await;
        let (s2, _, b) = call(&router, post("/qa/factual", json!({ "question": question }))).await;
        ensure(s1 == StatusCode::OK && s2 == s1 && a == b && a["status"]["status"] == "delivered", || format!("/qa/factual {s1} {a}"))?;

        let (s, _, fc) = call(&router, get("/features?municipality=Aarberg&year=1901")).await;
        let feats = fc["features"].as_array().cloned().unwrap_or_default();
        ensure(s == StatusCode::OK && fc["type"] == "FeatureCollection" && !feats.is_empty(), || format!("/features {s}"))?;
        ensure(
            feats.iter().all(|f| f["properties"]["year"] == 1901 && f["properties"]["iri"].is_string() && f["geometry"]["type"].is_string()),
            || "feature properties".into(),
        )?;
        checks += 6;
        Ok::<(), String>(())
    })?;

    let (code, out, err) = chronomap(&config, &["query", "-"], Some("ASK { ?f cmo:featureType \"lake\" }"))?;
    ensure(code == 0 && out == "true\n", || format!("query -: {code} {out:?} {err}"))?;
    let (code, out, _) = chronomap(&config, &["query", "-"], Some("ASK { ?f cmo:featureType \"glacier\" }"))?;
    ensure(code == 0 && out == "false\n", || format!("query - (false): {code} {out:?}"))?;
    let missing = dir.join("no-such-config.toml");
    let (code, _, err) = chronomap(&missing, &["ingest"], None)?;
    ensure(code == 1 && err.contains(&missing.display().to_string()), || format!("missing config: {code} {err}"))?;
    let log = dir.join("scripted.jsonl");
    let bench = dir.join("benchmark.json").display().to_string();
    let (code, _, err) = chronomap(&config, &["bench", "run", "--gateway", "scripted", "--benchmark", &bench, "--out", &log.display().to_string()], None)?;
    ensure(code == 0 && log.exists(), || format!("bench run: {code} {err}"))?;
    Ok(format!("{} endpoint checks and 4 CLI checks against a {triples}-triple store", checks))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let demo_ready = demo::build_demo(dir.path()).map_err(|e| format!("demo dataset: {e}"));
    let with_demo = |f: fn(&Path) -> Outcome| demo_ready.clone().and_then(|_| f(dir.path()));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("geometry oracle suite", Box::new(geometry_oracle)),
        ("relation precomputation oracle", Box::new(relation_oracle)),
        ("query engine equivalence", Box::new(query_equivalence)),
        ("factual pipeline determinism and correctness", Box::new(factual_pipeline)),
        ("fact-check reproduction", Box::new(fact_check_reproduction)),
        ("metric arithmetic", Box::new(metric_arithmetic)),
        ("end-to-end determinism", Box::new(move || with_demo(end_to_end))),
        ("service contract", Box::new(move || with_demo(service_contract))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2?}]", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
