//! HTTP interface over a loaded [`ModelBundle`]. Every handler is read-only.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use conceptlab_core::retrieval::Method;
use conceptlab_core::{ConceptId, ItemId};
use serde::{Deserialize, Serialize};

use crate::bundle::{ModelBundle, Projection, Scope};
use crate::error::{Error, Result};
use crate::thumbnail;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub image_id: ItemId,
    pub add_attribute: String,
    pub method: String,
    pub k: usize,
    /// Items searched: "train", "val", "test" or "all" (default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub id: ItemId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub results: Vec<ScoredItem>,
    pub detected_negative: Option<String>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptInfo {
    pub concept_id: ConceptId,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemInfo {
    pub id: ItemId,
    pub description: Vec<String>,
    pub splits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOut {
    pub id: ItemId,
    pub u: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOut {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOut {
    pub concept_id: ConceptId,
    pub split: String,
    pub points: Vec<PointOut>,
    pub grid: Option<GridOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub bundle_hash: String,
}

/// Structured error body: `{"error": {"code", "message"}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, code: "not_found", message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request", message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal", message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use conceptlab_core::Error as C;
        match e {
            Error::Core(C::UnknownItem(id)) => Self::not_found(format!("unknown item {id}")),
            Error::Core(C::UnknownAttribute(a)) => Self::not_found(format!("unknown attribute id {a}")),
            Error::Core(C::UnknownConcept(c)) => Self::not_found(format!("concept {c} has no subspace")),
            Error::Core(C::EmptyGallery) => Self::bad_request("the requested split is empty"),
            other => Self::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

fn parse_scope(s: Option<&str>, default: Scope) -> Result<Scope, ApiError> {
    match s {
        None => Ok(default),
        Some(s) => Scope::parse(s).ok_or_else(|| ApiError::bad_request(format!("unknown split {s:?}"))),
    }
}

/// The `/v1/query` computation without the HTTP layer.
pub fn answer_query(b: &ModelBundle, req: &QueryRequest) -> Result<QueryResponse, ApiError> {
    let method = match req.method.as_str() {
        "baseline" => Method::Baseline,
        "concept" => Method::ConceptAware,
        m => return Err(ApiError::bad_request(format!("method must be \"baseline\" or \"concept\", got {m:?}"))),
    };
    if req.k == 0 {
        return Err(ApiError::bad_request("k must be positive"));
    }
    let vocab = &b.dataset.vocab;
    let add = vocab.id(&req.add_attribute).ok_or_else(|| ApiError::not_found(format!("unknown attribute {:?}", req.add_attribute)))?;
    let scope = parse_scope(req.split.as_deref(), Scope::All)?;
    let r = b.query(req.image_id, add, method, scope)?;
    Ok(QueryResponse {
        results: r.ranked.iter().take(req.k).map(|&(id, score)| ScoredItem { id, score }).collect(),
        detected_negative: r.negative.and_then(|a| vocab.label(a)).map(str::to_string),
        fallback: r.fallback,
    })
}

pub fn projection_out(p: &Projection) -> ProjectionOut {
    let cells = p.grid.as_ref().map(|(_, c)| c);
    ProjectionOut {
        concept_id: p.concept,
        split: p.scope.name().to_string(),
        points: p
            .points
            .iter()
            .enumerate()
            .map(|(i, &(id, [u, v]))| PointOut { id, u, v, cell: cells.and_then(|c| c[i]).map(|(r, c)| [r, c]) })
            .collect(),
        grid: p.grid.as_ref().map(|&((rows, cols), _)| GridOut { rows, cols }),
    }
}

fn parse_grid(s: &str) -> Option<(usize, usize)> {
    let (r, c) = s.split_once('x')?;
    let (r, c) = (r.parse().ok()?, c.parse().ok()?);
    ((1..=1024).contains(&r) && (1..=1024).contains(&c)).then_some((r, c))
}

type Shared = Arc<ModelBundle>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

async fn healthz(State(b): State<Shared>) -> Json<Health> {
    Json(Health { status: "ok".into(), bundle_hash: b.hash.to_string() })
}

async fn concepts(State(b): State<Shared>) -> Json<Vec<ConceptInfo>> {
    let a = &b.index.assignment;
    Json(
        a.concepts()
            .map(|c| ConceptInfo {
                concept_id: c,
                attributes: a.members(c).iter().filter_map(|&m| b.dataset.vocab.label(m)).map(str::to_string).collect(),
            })
            .collect(),
    )
}

fn item_labels(b: &ModelBundle, id: ItemId) -> Result<Vec<&str>, ApiError> {
    b.dataset.description_labels(id).map_err(|_| ApiError::not_found(format!("unknown item {id}")))
}

async fn item(State(b): State<Shared>, Path(id): Path<ItemId>) -> Result<Json<ItemInfo>, ApiError> {
    let labels = item_labels(&b, id)?;
    let split = b.dataset.splits.split_of(id).map_or("none", |s| s.name());
    Ok(Json(ItemInfo { id, description: labels.iter().map(|s| s.to_string()).collect(), splits: split.into() }))
}

async fn thumbnail(State(b): State<Shared>, Path(id): Path<ItemId>) -> Result<Response, ApiError> {
    let png = thumbnail::render(id, &item_labels(&b, id)?);
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Deserialize)]
struct ProjectionParams {
    split: Option<String>,
    grid: Option<String>,
}

async fn projection(
    State(b): State<Shared>,
    Path(concept): Path<ConceptId>,
    Query(q): Query<ProjectionParams>,
) -> Result<Json<ProjectionOut>, ApiError> {
    let scope = parse_scope(q.split.as_deref(), Scope::Split(conceptlab_core::corpus::Split::Test))?;
    let grid = match q.grid.as_deref() {
        None => None,
        Some(g) => Some(parse_grid(g).ok_or_else(|| ApiError::bad_request(format!("grid must look like 24x24, got {g:?}")))?),
    };
    blocking(move || Ok(Json(projection_out(&b.project(concept, scope, grid)?)))).await
}

async fn query(State(b): State<Shared>, Json(req): Json<QueryRequest>) -> Result<Json<QueryResponse>, ApiError> {
    blocking(move || answer_query(&b, &req).map(Json)).await
}

pub fn router(bundle: Arc<ModelBundle>) -> Router {
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/concepts", get(concepts))
        .route("/v1/items/{id}", get(item))
        .route("/v1/items/{id}/thumbnail", get(thumbnail))
        .route("/v1/subspaces/{concept_id}/projection", get(projection))
        .route("/v1/query", post(query))
        .with_state(bundle)
}

/// Serves until the listener fails or ctrl-c arrives.
pub async fn serve(bundle: Arc<ModelBundle>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::Serve(format!("bind {addr}: {e}")))?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| Error::Serve(e.to_string()))?);
    axum::serve(listener, router(bundle))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Serve(e.to_string()))
}
