//! HTTP endpoints. Every handler only reads the store.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chronomap::geometry::geojson;
use chronomap::kgstore::FeatureView;
use chronomap::llm::{ChatClient, ChatRequest, ChatResponse, Gateway, LlmError};
use chronomap::qa::{DescriptiveOptions, QaPipeline};
use chronomap::query::{evaluate, parse, to_sparql_json, QueryError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::app::App;
use crate::config::ServerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    ParseError,
    QueryError,
    NotFound,
    Timeout,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(with = "status_code")]
    pub status: StatusCode,
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

mod status_code {
    use axum::http::StatusCode;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &StatusCode, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_u16(s.as_u16())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<StatusCode, D::Error> {
        StatusCode::from_u16(u16::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl ApiError {
    pub fn new(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            stage: None,
            line: None,
            column: None,
        }
    }

    fn bad_request(m: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, ErrorCode::BadRequest, m)
    }

    fn not_found(m: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, ErrorCode::NotFound, m)
    }

    fn internal(m: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal, m)
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let (line, column) = match &e {
            QueryError::Syntax { line, col, .. } | QueryError::UnknownPrefix { line, col, .. } => (Some(*line), Some(*col)),
            _ => (None, None),
        };
        let code = if line.is_some() { ErrorCode::ParseError } else { ErrorCode::QueryError };
        Self {
            line,
            column,
            ..Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

pub struct AppState {
    pub app: Arc<App>,
    pub features: Vec<FeatureView>,
    pub tiles_dir: Option<PathBuf>,
    pub timeout: Duration,
    pub qa_slots: Arc<Semaphore>,
}

impl AppState {
    pub fn new(app: App, server: &ServerConfig) -> Self {
        let features = app.store.features();
        let slots = app.qa.parallel_width.max(1);
        Self {
            tiles_dir: app.qa.tiles_dir.clone(),
            app: Arc::new(app),
            features,
            timeout: Duration::from_secs(server.request_timeout_secs.max(1)),
            qa_slots: Arc::new(Semaphore::new(slots)),
        }
    }
}

type Shared = Arc<AppState>;

/// Records the stage of the most recent chat call and per-stage timings.
#[derive(Default)]
struct StageLog {
    current: Mutex<Option<String>>,
    timings: Mutex<BTreeMap<String, u128>>,
}

struct Tracked {
    inner: Arc<dyn ChatClient>,
    log: Arc<StageLog>,
}

impl ChatClient for Tracked {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        *self.log.current.lock().unwrap() = Some(req.tag.clone());
        let start = Instant::now();
        let r = self.inner.complete(req);
        *self.log.timings.lock().unwrap().entry(req.tag.clone()).or_default() += start.elapsed().as_millis();
        r
    }
}

fn tracked(g: &Gateway, log: &Arc<StageLog>) -> Gateway {
    let wrap = |c: &Arc<dyn ChatClient>| -> Arc<dyn ChatClient> {
        Arc::new(Tracked {
            inner: c.clone(),
            log: log.clone(),
        })
    };
    Gateway {
        generator: wrap(&g.generator),
        validator: wrap(&g.validator),
        composer: wrap(&g.composer),
        judge: wrap(&g.judge),
        search: g.search.clone(),
    }
}

/// Runs a pipeline on a blocking thread within the request timeout.
async fn run_qa<T: Send + 'static>(
    state: &Shared,
    what: &'static str,
    f: impl FnOnce(&QaPipeline) -> T + Send + 'static,
) -> Result<T, ApiError> {
    let permit = state.qa_slots.clone().acquire_owned().await.map_err(|e| ApiError::internal(e.to_string()))?;
    let app = state.app.clone();
    let log = Arc::new(StageLog::default());
    let task_log = log.clone();
    let task = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let gw = tracked(&app.gateway, &task_log);
        f(&QaPipeline::new(&app.store, &app.bundle, &gw, &app.qa))
    });
    let out = tokio::time::timeout(state.timeout, task).await;
    let timings: Vec<String> = log.timings.lock().unwrap().iter().map(|(k, v)| format!("{k}={v}ms")).collect();
    log::info!("{what} stages: {}", timings.join(" "));
    match out {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(ApiError::internal(format!("{what} worker failed: {e}"))),
        Err(_) => {
            let stage = log.current.lock().unwrap().clone().unwrap_or_else(|| "start".into());
            Err(ApiError {
                stage: Some(stage),
                ..ApiError::new(
                    StatusCode::GATEWAY_TIMEOUT,
                    ErrorCode::Timeout,
                    format!("{what} exceeded {}s", state.timeout.as_secs()),
                )
            })
        }
    }
}

async fn health(State(s): State<Shared>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "triples": s.app.store.len(),
        "years": s.app.bundle.years,
        "municipalities": s.app.bundle.municipalities,
    }))
}

#[derive(Deserialize)]
struct SparqlBody {
    query: String,
}

async fn sparql(State(s): State<Shared>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let ctype = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    let text = if ctype.starts_with("application/sparql-query") {
        String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("query is not UTF-8"))?
    } else {
        serde_json::from_slice::<SparqlBody>(&body)
            .map_err(|e| ApiError::bad_request(format!("expected {{\"query\": ...}}: {e}")))?
            .query
    };
    let q = parse(&text)?;
    let app = s.app.clone();
    let task = tokio::task::spawn_blocking(move || evaluate(&q, &app.store).map(|ev| to_sparql_json(&ev.result, &app.store)));
    let doc = match tokio::time::timeout(s.timeout, task).await {
        Ok(Ok(r)) => r?,
        Ok(Err(e)) => return Err(ApiError::internal(e.to_string())),
        Err(_) => {
            return Err(ApiError {
                stage: Some("evaluate".into()),
                ..ApiError::new(StatusCode::GATEWAY_TIMEOUT, ErrorCode::Timeout, "query evaluation timed out")
            })
        }
    };
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/sparql-results+json"))],
        doc.to_string(),
    )
        .into_response())
}

#[derive(Deserialize)]
struct FactualBody {
    question: String,
}

fn non_empty(q: &str) -> Result<String, ApiError> {
    let q = q.trim();
    if q.is_empty() {
        return Err(ApiError::bad_request("question must not be empty"));
    }
    Ok(q.to_string())
}

async fn qa_factual(State(s): State<Shared>, body: Result<Json<FactualBody>, axum::extract::rejection::JsonRejection>) -> Result<Response, ApiError> {
    let Json(b) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let q = non_empty(&b.question)?;
    let r = run_qa(&s, "factual", move |p| p.answer_factual(&q)).await?;
    Ok(Json(r).into_response())
}

#[derive(Deserialize)]
struct DescriptiveBody {
    question: String,
    #[serde(default)]
    use_map_image: bool,
    #[serde(default)]
    use_search: bool,
}

async fn qa_descriptive(
    State(s): State<Shared>,
    body: Result<Json<DescriptiveBody>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(b) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let q = non_empty(&b.question)?;
    let opts = DescriptiveOptions {
        use_map_image: b.use_map_image,
        use_search: b.use_search,
    };
    let r = run_qa(&s, "descriptive", move |p| p.answer_descriptive(&q, opts)).await?;
    Ok(Json(r).into_response())
}

#[derive(Deserialize)]
struct FeatureFilter {
    municipality: Option<String>,
    year: Option<String>,
    #[serde(rename = "type")]
    feature_type: Option<String>,
}

pub fn feature_json(v: &FeatureView) -> Value {
    let mut props = serde_json::Map::new();
    props.insert("iri".into(), json!(v.iri));
    props.insert("type".into(), json!(v.feature_type));
    props.insert("year".into(), json!(v.year));
    if let Some(a) = v.area_sqm {
        props.insert("areaSqm".into(), json!(a));
    }
    if let Some(l) = v.length_m {
        props.insert("lengthM".into(), json!(l));
    }
    if let Some(n) = &v.current_name {
        props.insert("currentName".into(), json!(n));
    }
    json!({
        "type": "Feature",
        "id": v.iri,
        "properties": props,
        "geometry": v.geometry.as_ref().map_or(Value::Null, geojson::to_value),
    })
}

async fn features(State(s): State<Shared>, Query(f): Query<FeatureFilter>) -> Result<Json<Value>, ApiError> {
    let year = match f.year.as_deref().filter(|y| !y.is_empty()) {
        Some(y) => Some(y.parse::<i32>().map_err(|_| ApiError::bad_request(format!("year must be an integer, got {y:?}")))?),
        None => None,
    };
    let muni = f.municipality.filter(|m| !m.is_empty());
    let ftype = f.feature_type.filter(|t| !t.is_empty());
    let feats: Vec<Value> = s
        .features
        .iter()
        .filter(|v| year.is_none_or(|y| v.year == y))
        .filter(|v| ftype.as_ref().is_none_or(|t| &v.feature_type == t))
        .filter(|v| muni.as_ref().is_none_or(|m| v.municipalities.contains(m)))
        .map(feature_json)
        .collect();
    Ok(Json(json!({ "type": "FeatureCollection", "features": feats })))
}

async fn schema(State(s): State<Shared>) -> Result<Response, ApiError> {
    let v: Value = serde_json::from_str(&s.app.store.schema().to_json()).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(v).into_response())
}

async fn tile(State(s): State<Shared>, Path((m, y)): Path<(String, i32)>) -> Result<Response, ApiError> {
    let dir = s.tiles_dir.as_ref().ok_or_else(|| ApiError::not_found("no tiles directory configured"))?;
    if m.contains(['/', '\\']) || m.starts_with('.') {
        return Err(ApiError::bad_request("invalid municipality name"));
    }
    let bytes = tokio::fs::read(dir.join(format!("{m}_{y}.png")))
        .await
        .map_err(|_| ApiError::not_found(format!("no tile for {m} {y}")))?;
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static("image/png"))], bytes).into_response())
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn log_requests(req: Request, next: Next) -> Response {
    let (method, uri) = (req.method().clone(), req.uri().clone());
    let start = Instant::now();
    let res = next.run(req).await;
    log::info!("{method} {uri} {} {}ms", res.status().as_u16(), start.elapsed().as_millis());
    res
}

fn cors(origins: &[String]) -> CorsLayer {
    let list: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    CorsLayer::new()
        .allow_origin(AllowOrigin::list(list))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(state: AppState, server: &ServerConfig) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sparql", post(sparql))
        .route("/qa/factual", post(qa_factual))
        .route("/qa/descriptive", post(qa_descriptive))
        .route("/features", get(features))
        .route("/schema", get(schema))
        .route("/tiles/{municipality}/{year}", get(tile))
        .fallback(fallback)
        .layer(middleware::from_fn(log_requests))
        .layer(cors(&server.cors_origins))
        .with_state(Arc::new(state))
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

pub async fn serve(app: App, server: &ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&server.bind).await?;
    log::info!("listening on {} with {} triples", listener.local_addr()?, app.store.len());
    let router = router(AppState::new(app, server), server);
    axum::serve(listener, router).with_graceful_shutdown(shutdown_signal()).await
}
