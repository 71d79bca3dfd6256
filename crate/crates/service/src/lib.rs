//! HTTP facade over the digest pipeline.
//!
//! | route | |
//! |---|---|
//! | `GET /api/health` | `{"status":"ok"}` |
//! | `POST /api/compose` | [`ComposeRequest`] in, [`ComposeResponse`] out |
//! | `GET /api/profile/{id}` | `{"terms": {term: weight}}` |
//! | `PUT /api/profile/{id}` | same shape, or a list of raw terms |
//!
//! Anything else falls through to the static web UI directory, when one is
//! configured.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use digestweaver::{
    compose_from, load_result_list, normalize_terms, segment_select, tokenize, Error,
    PipelineConfig, PipelineReport, Profile, ProfileStore, ResultList,
};
use futures::future::BoxFuture;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

pub const PREVIEW_CHARS: usize = 200;

/// Resolves a query string to a result list.
pub trait ResultProvider: Send + Sync {
    /// `Ok(None)` when nothing is known for the query.
    fn resolve<'a>(
        &'a self,
        query: &'a str,
    ) -> BoxFuture<'a, digestweaver::Result<Option<ResultList>>>;
}

/// Serves result lists from a directory: the query `"New  Delhi"` maps to
/// `new-delhi.json` or `new-delhi/results.json`.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    dir: PathBuf,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureProvider { dir: dir.into() }
    }

    pub fn slug(query: &str) -> String {
        query
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect::<Vec<_>>()
            .join("-")
    }

    fn candidates(&self, slug: &str) -> [PathBuf; 2] {
        [
            self.dir.join(format!("{slug}.json")),
            self.dir.join(slug).join("results.json"),
        ]
    }
}

impl ResultProvider for FixtureProvider {
    fn resolve<'a>(
        &'a self,
        query: &'a str,
    ) -> BoxFuture<'a, digestweaver::Result<Option<ResultList>>> {
        Box::pin(async move {
            let slug = Self::slug(query);
            if slug.is_empty() {
                return Ok(None);
            }
            match self.candidates(&slug).into_iter().find(|p| p.is_file()) {
                Some(path) => load_result_list(&path).map(Some),
                None => Ok(None),
            }
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    provider: Arc<dyn ResultProvider>,
    store: ProfileStore,
    defaults: Arc<PipelineConfig>,
}

impl AppState {
    pub fn new(
        provider: Arc<dyn ResultProvider>,
        store: ProfileStore,
        defaults: PipelineConfig,
    ) -> Self {
        AppState {
            provider,
            store,
            defaults: Arc::new(defaults),
        }
    }

    pub fn defaults(&self) -> &PipelineConfig {
        &self.defaults
    }
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/compose", post(handle_compose))
        .route(
            "/api/profile/{id}",
            get(handle_profile_get).put(handle_profile_put),
        )
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeRequest {
    pub query: String,
    #[serde(default = "default_profile_id")]
    pub profile_id: String,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub top_n: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

fn default_profile_id() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub source_url: String,
    pub heading: Option<String>,
    pub score: f64,
    pub query_density: f64,
    pub profile_density: f64,
    pub text_preview: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposeResponse {
    pub html: String,
    pub candidates: Vec<CandidateView>,
    pub report: PipelineReport,
}

/// An error response with a JSON `{"error": message}` body.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

/// Server defaults with the request's overrides applied.
fn request_config(defaults: &PipelineConfig, req: &ComposeRequest) -> ApiResult<PipelineConfig> {
    let mut cfg = defaults.clone();
    cfg.profile_id = req.profile_id.clone();
    if let Some(delta) = req.delta {
        cfg.score.delta = delta;
    }
    if let Some(alpha) = req.alpha {
        cfg.score.alpha = alpha;
    }
    if let Some(beta) = req.beta {
        cfg.score.beta = beta;
    }
    if let Some(top_n) = req.top_n {
        cfg.fetch.top_n = top_n;
    }
    cfg.validate()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(cfg)
}

async fn load_profile(store: &ProfileStore, id: &str) -> ApiResult<Profile> {
    let store = store.clone();
    let id = id.to_string();
    tokio::task::spawn_blocking(move || store.load(&id))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)
}

pub async fn handle_compose(
    State(state): State<AppState>,
    body: Bytes,
) -> ApiResult<Json<ComposeResponse>> {
    let req: ComposeRequest = parse_body(&body)?;
    if req.query.trim().is_empty() {
        return Err(ApiError::bad_request("query is empty"));
    }
    if req.profile_id.is_empty() {
        return Err(ApiError::bad_request("profile_id is empty"));
    }
    let cfg = request_config(&state.defaults, &req)?;
    let template = cfg.template().map_err(ApiError::internal)?;
    let list = state
        .provider
        .resolve(&req.query)
        .await
        .map_err(ApiError::internal)?
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                format!("no results for {:?}", req.query),
            )
        })?;
    let profile = load_profile(&state.store, &req.profile_id).await?;

    let (candidates, report) = segment_select(&list, &profile, &cfg)
        .await
        .map_err(ApiError::internal)?;
    let (page, report) = compose_from(&candidates, report, &template, list.query(), &cfg);
    let views = candidates
        .iter()
        .map(|w| CandidateView {
            source_url: w.segment.source_url.clone(),
            heading: w.segment.heading.clone(),
            score: w.score,
            query_density: w.query_density,
            profile_density: w.profile_density,
            text_preview: w.segment.text.chars().take(PREVIEW_CHARS).collect(),
        })
        .collect();
    Ok(Json(ComposeResponse {
        html: page.html,
        candidates: views,
        report,
    }))
}

fn terms_body(profile: &Profile) -> serde_json::Value {
    json!({ "terms": profile.term_map() })
}

pub async fn handle_profile_get(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    Ok(Json(terms_body(&load_profile(&state.store, &id).await?)))
}

/// Accepted PUT bodies.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProfileBody {
    Raw(Vec<String>),
    Wrapped { terms: TermsBody },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TermsBody {
    List(Vec<String>),
    Weighted(BTreeMap<String, f64>),
}

/// Raw strings are tokenized at weight 1.0. Weighted keys are tokenized too;
/// every token takes the key's weight, the larger one on collision.
fn profile_from_body(id: &str, body: ProfileBody) -> ApiResult<Profile> {
    let terms = match body {
        ProfileBody::Raw(raw)
        | ProfileBody::Wrapped {
            terms: TermsBody::List(raw),
        } => {
            return Ok(Profile::from_profile_terms(id, normalize_terms(&raw)));
        }
        ProfileBody::Wrapped {
            terms: TermsBody::Weighted(map),
        } => map,
    };
    let mut merged: BTreeMap<String, f64> = BTreeMap::new();
    for (raw, weight) in terms {
        if !weight.is_finite() || weight < 0.0 {
            return Err(ApiError::bad_request(format!(
                "weight of {raw:?} must be a finite non-negative number"
            )));
        }
        for token in tokenize(&raw) {
            let slot = merged.entry(token).or_insert(weight);
            *slot = slot.max(weight);
        }
    }
    Ok(Profile::from_terms(
        id,
        merged.iter().map(|(t, w)| (t.as_str(), *w)),
    ))
}

pub async fn handle_profile_put(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let profile = profile_from_body(&id, parse_body(&body)?)?;
    let store = state.store.clone();
    let saved = profile.clone();
    tokio::task::spawn_blocking(move || store.save(&saved))
        .await
        .map_err(ApiError::internal)?
        .map_err(|e| match e {
            Error::InvalidProfile(_) => ApiError::bad_request(e.to_string()),
            other => ApiError::internal(other),
        })?;
    Ok(Json(terms_body(&profile)))
}
