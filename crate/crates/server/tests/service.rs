use std::process::Command;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chronomap::llm::{ChatClient, ChatRequest, ChatResponse, Gateway, LlmError};
use chronomap_server::api::{router, AppState};
use chronomap_server::config::{Backend, ServerConfig};
use chronomap_server::{demo, App, AppConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn fixture() -> (TempDir, AppConfig) {
    let dir = tempfile::tempdir().unwrap();
    let config = demo::build_demo(dir.path()).unwrap();
    let cfg = AppConfig::load(&config).unwrap();
    (dir, cfg)
}

fn app_router(cfg: &AppConfig) -> Router {
    router(AppState::new(App::load(cfg).unwrap(), &cfg.server), &cfg.server)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn send_json(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let (s, b) = send(app, req).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_json(uri: &str, v: Value) -> Request<Body> {
    Request::post(uri).header("content-type", "application/json").body(Body::from(v.to_string())).unwrap()
}

#[tokio::test]
async fn health_lists_years_and_municipalities() {
    let (_d, cfg) = fixture();
    let (s, v) = send_json(&app_router(&cfg), get("/health")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["years"], json!([1877, 1901, 1916, 1930]));
    assert_eq!(v["municipalities"], json!(["Aarberg", "Bargen", "Kappelen", "Lyss"]));
}

#[tokio::test]
async fn sparql_accepts_raw_query_bodies() {
    let (_d, cfg) = fixture();
    let app = app_router(&cfg);
    let req = Request::post("/sparql")
        .header("content-type", "application/sparql-query")
        .body(Body::from("ASK { ?f cmo:featureType \"lake\" ; cmo:year 1877 }"))
        .unwrap();
    let (s, v) = send_json(&app, req).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({ "head": {}, "boolean": true }));

    let (s, v) = send_json(&app, post_json("/sparql", json!({ "query": "SELECT ?f WHERE { ?f nope:x 1 }" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "parse_error");
    let (s, v) = send_json(&app, post_json("/sparql", json!({ "q": 1 }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "bad_request");
    assert!(!v.to_string().contains("panicked"));
}

#[tokio::test]
async fn features_filter_and_reject_bad_years() {
    let (_d, cfg) = fixture();
    let app = app_router(&cfg);
    let (_, all) = send_json(&app, get("/features?year=1901")).await;
    let (_, lakes) = send_json(&app, get("/features?year=1901&type=lake")).await;
    let all = all["features"].as_array().unwrap().len();
    let lakes = lakes["features"].as_array().unwrap();
    assert!(!lakes.is_empty() && lakes.len() < all);
    assert!(lakes.iter().all(|f| f["properties"]["type"] == "lake" && f["properties"]["areaSqm"].is_i64()));
    let (_, none) = send_json(&app, get("/features?municipality=Nowhere")).await;
    assert_eq!(none["features"], json!([]));
    let (s, v) = send_json(&app, get("/features?year=nineteen")).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));
}

#[tokio::test]
async fn tiles_schema_and_unknown_routes() {
    let (_d, cfg) = fixture();
    let app = app_router(&cfg);
    let (s, bytes) = send(&app, get("/tiles/Aarberg/1901")).await;
    assert_eq!(s, StatusCode::OK);
    assert!(bytes.starts_with(b"\x89PNG"));
    let (s, v) = send_json(&app, get("/tiles/Aarberg/1850")).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
    let (s, v) = send_json(&app, get("/schema")).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v.to_string().contains("changedTo"));
    let (s, v) = send_json(&app, get("/nope")).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
}

#[tokio::test]
async fn descriptive_reports_contexts() {
    let (_d, cfg) = fixture();
    let app = app_router(&cfg);
    let body = json!({ "question": "Describe Aarberg in 1901", "use_map_image": true, "use_search": true });
    let (s, v) = send_json(&app, post_json("/qa/descriptive", body.clone())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["contexts_used"], json!(["kg", "map-image", "search"]));
    assert_eq!(send_json(&app, post_json("/qa/descriptive", body)).await.1, v);
}

struct Slow;

impl ChatClient for Slow {
    fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, LlmError> {
        std::thread::sleep(Duration::from_millis(1500));
        Err(LlmError::Transport("slow".into()))
    }
}

#[tokio::test]
async fn slow_models_time_out_with_the_stage() {
    let (_d, cfg) = fixture();
    let mut app = App::load(&cfg).unwrap();
    app.gateway = Gateway::uniform(Arc::new(Slow));
    let server = ServerConfig { request_timeout_secs: 1, ..cfg.server.clone() };
    let r = router(AppState::new(app, &server), &server);
    let (s, v) = send_json(&r, post_json("/qa/factual", json!({ "question": "Were there lakes in Lyss in 1877?" }))).await;
    assert_eq!(s, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(v["code"], "timeout");
    assert_eq!(v["stage"], "generate");
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_chronomap")).args(args).env("RUST_LOG", "error").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes_and_json() {
    let (dir, _) = fixture();
    let config = dir.path().join("config.toml");
    let c = config.to_str().unwrap();

    let (code, _, err) = cli(&["--config", c, "frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"), "{err}");

    let (code, out, _) = cli(&["--config", c, "--json", "qa", "factual", "Were there lakes in Lyss in 1877?", "--gateway", "offline"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"]["stage"], "generate");

    let (code, out, _) = cli(&["--config", c, "--json", "query", dir.path().join("missing.rq").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["kind"], "user");

    let (code, out, _) = cli(&["--config", c, "dump"]);
    assert_eq!(code, 0);
    assert!(out.lines().all(|l| l.ends_with(" .")));

    let (code, _, err) = cli(&["--config", c, "qa", "factual", "x", "--gateway", "replay"]);
    assert_eq!(code, 1);
    assert!(err.contains("data.transcript"), "{err}");
}

#[test]
fn relations_config_override_changes_edges() {
    let (dir, _) = fixture();
    let c = dir.path().join("config.toml");
    let c = c.to_str().unwrap();
    let edges = |extra: &[&str]| {
        let mut args = vec!["--config", c, "--json", "relations"];
        args.extend_from_slice(extra);
        let (code, out, err) = cli(&args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<Value>(&out).unwrap()["edges"].as_u64().unwrap()
    };
    let base = edges(&[]);
    assert_eq!(edges(&[]), base, "rerunning must not accumulate edges");
    let rel = dir.path().join("wide.toml");
    std::fs::write(&rel, "near_m = 400.0\n").unwrap();
    assert!(edges(&["--config", rel.to_str().unwrap()]) > base);
    std::fs::write(&rel, "near_m = -1.0\n").unwrap();
    let (code, _, _) = cli(&["--config", c, "relations", "--config", rel.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn config_rejects_unknown_keys_and_missing_paths() {
    let (dir, _) = fixture();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "[data]\nstore = \"store.nt\"\nbogus = 1\n").unwrap();
    assert_eq!(AppConfig::load(&p).unwrap_err().exit_code(), 1);
    std::fs::write(&p, "[data]\nstore = \"store.nt\"\nfew_shot = \"gone.json\"\n").unwrap();
    assert!(AppConfig::load(&p).unwrap_err().to_string().contains("gone.json"));
    std::fs::write(&p, "[data]\nstore = \"store.nt\"\n[gateway]\ngenerator = \"scripted\"\n").unwrap();
    assert!(AppConfig::load(&p).unwrap_err().to_string().contains("scripted_rules"));
    let mut ok = AppConfig::load(&dir.path().join("config.toml")).unwrap();
    assert!(ok.override_backend(Backend::Replay).is_err());
}
