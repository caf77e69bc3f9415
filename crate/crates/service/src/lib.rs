// Copyright 2026 The DataSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Local HTTP API over the synthesis pipeline.
//!
//! Every session gets a server-assigned seed at creation. Generation always
//! uses that seed, so repeating a request in one session returns the same
//! data instead of fresh noise.

mod error;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use datasynth_core::describer::{describe, Mode, PrivacyParams};
use datasynth_core::generator::{generate, GenerationRequest};
use datasynth_core::ingest::{read_csv, AttributeOverride, DataType, LoadOptions, Table};
use datasynth_core::inspector::compare;
use datasynth_core::rng::{Purpose, Seeder};

pub use error::ApiError;
pub use session::{BusyGuard, Registry, Session, SessionData};

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_upload_bytes: usize,
    pub static_dir: Option<PathBuf>,
    pub load_options: LoadOptions,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            static_dir: None,
            load_options: LoadOptions::default(),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            registry: Arc::new(Registry::default()),
            config: Arc::new(config),
        }
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_upload_bytes;
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status).delete(delete_session))
        .route("/sessions/{id}/data", post(upload))
        .route("/sessions/{id}/describe", post(describe_session))
        .route("/sessions/{id}/generate", post(generate_session))
        .route("/sessions/{id}/description", get(get_description))
        .route("/sessions/{id}/report", get(get_report))
        .route("/sessions/{id}/synthetic.csv", get(get_synthetic))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

type ApiResult<T> = std::result::Result<T, ApiError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

#[derive(Serialize)]
struct Created {
    id: String,
}

async fn create_session(State(state): State<AppState>) -> (StatusCode, Json<Created>) {
    let id = state.registry.create();
    (StatusCode::CREATED, Json(Created { id: id.to_string() }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    #[serde(rename = "type")]
    pub data_type: DataType,
    pub categorical: bool,
    pub distinct_count: usize,
    pub missing_rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    pub columns: Vec<ColumnSummary>,
}

impl TableSummary {
    fn of(t: &Table) -> Self {
        TableSummary {
            rows: t.row_count(),
            columns: t
                .columns
                .iter()
                .map(|c| ColumnSummary {
                    name: c.name.clone(),
                    data_type: c.data_type,
                    categorical: c.categorical,
                    distinct_count: c.distinct_count,
                    missing_rate: c.missing_rate().unwrap_or(0.0),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionStatus {
    pub id: String,
    pub data: Option<TableSummary>,
    pub mode: Option<Mode>,
    pub has_description: bool,
    pub synthetic_rows: Option<usize>,
    pub busy: bool,
}

async fn session_status(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionStatus>> {
    let session = state.registry.get(&id)?;
    let data = session.lock();
    Ok(Json(SessionStatus {
        id,
        data: data.input.as_ref().map(TableSummary::of),
        mode: data.description.as_ref().map(|d| d.mode),
        has_description: data.description.is_some(),
        synthetic_rows: data.synthetic.as_ref().map(Table::row_count),
        busy: session.is_busy(),
    }))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    state.registry.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn read_upload(req: Request) -> ApiResult<Bytes> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        return Bytes::from_request(req, &()).await.map_err(|e| ApiError::from_rejection(e.status(), e.body_text()));
    }
    let mut multipart = Multipart::from_request(req, &())
        .await
        .map_err(|e| ApiError::from_rejection(e.status(), e.body_text()))?;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::from_rejection(e.status(), e.body_text()))?
    {
        if field.file_name().is_some() || field.name() == Some("file") {
            return field.bytes().await.map_err(|e| ApiError::from_rejection(e.status(), e.body_text()));
        }
    }
    Err(ApiError::bad_request("invalid_body", "multipart upload has no file field"))
}

async fn upload(State(state): State<AppState>, Path(id): Path<String>, req: Request) -> ApiResult<Json<TableSummary>> {
    let session = state.registry.get(&id)?;
    let guard = session.begin()?;
    let body = read_upload(req).await?;
    let options = state.config.load_options.clone();
    let summary = blocking(move || {
        let table = read_csv(&body[..], &options).map_err(|e| ApiError::bad_request("invalid_csv", e.to_string()))?;
        if table.columns.is_empty() || table.row_count() == 0 {
            return Err(ApiError::bad_request("invalid_csv", "the CSV has no data rows"));
        }
        let summary = TableSummary::of(&table);
        let mut data = guard.session().lock();
        *data = SessionData {
            input: Some(table),
            ..SessionData::default()
        };
        Ok(summary)
    })
    .await?;
    Ok(Json(summary))
}

fn parse_body<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

/// Privacy parameters plus overrides. Unknown fields, a `seed` included, are
/// rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescribeRequest {
    pub mode: Mode,
    pub epsilon: f64,
    pub k: usize,
    pub histogram_size: usize,
    pub categorical_threshold: usize,
    pub overrides: Vec<AttributeOverride>,
}

impl DescribeRequest {
    pub fn privacy(&self) -> PrivacyParams {
        PrivacyParams {
            epsilon: self.epsilon,
            k: self.k,
            histogram_size: self.histogram_size,
            categorical_threshold: self.categorical_threshold,
        }
    }
}

impl Default for DescribeRequest {
    fn default() -> Self {
        let p = PrivacyParams::default();
        DescribeRequest {
            mode: Mode::Correlated,
            epsilon: p.epsilon,
            k: p.k,
            histogram_size: p.histogram_size,
            categorical_threshold: p.categorical_threshold,
            overrides: Vec::new(),
        }
    }
}

async fn describe_session(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let session = state.registry.get(&id)?;
    let request: DescribeRequest = parse_body(&body)?;
    let privacy = request.privacy();
    privacy.validate().map_err(ApiError::from)?;
    let guard = session.begin()?;
    let json = blocking(move || {
        let session = guard.session();
        let mut input = session
            .lock()
            .input
            .clone()
            .ok_or_else(|| ApiError::conflict("no_data", "upload a CSV before describing"))?;
        input.reconfigure(privacy.categorical_threshold, &request.overrides)?;
        let description = describe(&input, request.mode, &privacy, session.seed())?;
        let json = description.to_json()?;
        let mut data = session.lock();
        data.described_input = Some(input);
        data.description = Some(description);
        data.synthetic = None;
        data.report = None;
        Ok(json)
    })
    .await?;
    Ok(json_response(json))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub uniform: Vec<String>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "yes")]
    pub inject_missing: bool,
}

fn yes() -> bool {
    true
}

impl Default for GenerateRequest {
    fn default() -> Self {
        GenerateRequest {
            size: None,
            uniform: Vec::new(),
            mode: None,
            inject_missing: true,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub rows: usize,
    pub mode: Mode,
}

async fn generate_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<GenerateResponse>> {
    let session = state.registry.get(&id)?;
    let request: GenerateRequest = parse_body(&body)?;
    let guard = session.begin()?;
    let response = blocking(move || {
        let session = guard.session();
        let (description, input) = {
            let data = session.lock();
            match (&data.description, &data.described_input) {
                (Some(d), Some(i)) => (d.clone(), i.clone()),
                _ => return Err(ApiError::conflict("no_description", "describe the data before generating")),
            }
        };
        let mut req = GenerationRequest::new(&description, Seeder::new(session.seed()).derive_seed(Purpose::Rows, 0))
            .uniform(request.uniform.iter().cloned())
            .inject_missing(request.inject_missing);
        req.size = request.size;
        req.mode = request.mode;
        let synthetic = generate(&req)?;
        let report = compare(&input, &synthetic, &description)?;
        let response = GenerateResponse {
            rows: synthetic.row_count(),
            mode: req.effective_mode(),
        };
        let mut data = session.lock();
        data.synthetic = Some(synthetic);
        data.report = Some(report);
        Ok(response)
    })
    .await?;
    Ok(Json(response))
}

fn json_response(json: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], json).into_response()
}

async fn get_description(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.registry.get(&id)?;
    let data = session.lock();
    let d = data
        .description
        .as_ref()
        .ok_or_else(|| ApiError::conflict("no_description", "no description yet"))?;
    Ok(json_response(d.to_json()?))
}

async fn get_report(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.registry.get(&id)?;
    let data = session.lock();
    let r = data
        .report
        .as_ref()
        .ok_or_else(|| ApiError::conflict("no_synthetic", "generate synthetic data before requesting a report"))?;
    Ok(json_response(r.to_json()?))
}

async fn get_synthetic(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.registry.get(&id)?;
    let csv = {
        let data = session.lock();
        data.synthetic
            .as_ref()
            .ok_or_else(|| ApiError::conflict("no_synthetic", "no synthetic data yet"))?
            .to_csv_string()?
    };
    Ok(Response::builder()
        .header(header::CONTENT_TYPE, "text/csv; charset=utf-8")
        .header(header::CONTENT_DISPOSITION, "attachment; filename=\"synthetic.csv\"")
        .body(Body::from(csv))
        .expect("static headers"))
}
