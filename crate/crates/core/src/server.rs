//! Read-only HTTP/JSON API over an [`Engine`].
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET | `/api/cohort` | |
//! | GET | `/api/colormaps` | |
//! | POST | `/api/projection` | `{subjects[], axes[], k?, seed?}` |
//! | POST | `/api/brush` | `{layout_key, rect: {xmin, ymin, xmax, ymax}}` |
//! | GET | `/api/clusters/{subject}/{cluster}/summary` | |
//! | GET | `/api/clusters/{subject}/{cluster}/fingerprint` | `axes=a,b` |
//! | GET | `/api/clusters/{subject}/{cluster}/geometry` | `scalar=`, `colormap=`, `format=binary` |

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{Any, CorsLayer};

use crate::json::to_stable_vec;
use crate::model::{ClusterKey, Range};
use crate::projection::{brush_select, ProjectionError, ProjectionLayout, Rect};
use crate::session::{Engine, EngineError, ProjectionRequest};
use crate::stats::{builtin_colormaps, colormap, map_color, minmax_normalize, Rgb};

pub const PROJECTION_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("port {port} is already in use")]
    PortInUse { port: u16 },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server stopped: {0}")]
    Serve(std::io::Error),
}

struct CachedLayout {
    layout: ProjectionLayout,
    body: Vec<u8>,
}

pub struct AppState {
    engine: Engine,
    layouts: RwLock<HashMap<String, Arc<CachedLayout>>>,
    projection_timeout: Duration,
}

impl AppState {
    pub fn new(engine: Engine) -> Self {
        Self::with_timeout(engine, PROJECTION_TIMEOUT)
    }

    pub fn with_timeout(engine: Engine, projection_timeout: Duration) -> Self {
        Self { engine, layouts: RwLock::default(), projection_timeout }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }
}

type Shared = Arc<AppState>;

/// An error rendered as `{"error": "..."}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::UnknownSubject(_) | EngineError::UnknownAxis(_) => StatusCode::BAD_REQUEST,
            EngineError::Projection(ProjectionError::NoAxes) => StatusCode::BAD_REQUEST,
            EngineError::Projection(ProjectionError::BadK { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
            EngineError::UnknownCluster(_) => StatusCode::NOT_FOUND,
            EngineError::NoClusters => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
        }
        json_response(self.status, &Body { error: &self.message })
    }
}

fn json_response<T: Serialize + ?Sized>(status: StatusCode, value: &T) -> Response {
    match to_stable_vec(value) {
        Ok(body) => (status, [(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn ok_json<T: Serialize + ?Sized>(value: &T) -> Response {
    json_response(StatusCode::OK, value)
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    Router::new()
        .route("/api/cohort", get(get_cohort))
        .route("/api/colormaps", get(get_colormaps))
        .route("/api/projection", post(post_projection))
        .route("/api/brush", post(post_brush))
        .route("/api/clusters/{subject}/{cluster}/summary", get(get_summary))
        .route("/api/clusters/{subject}/{cluster}/fingerprint", get(get_fingerprint))
        .route("/api/clusters/{subject}/{cluster}/geometry", get(get_geometry))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> Result<(), ServerError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| {
        if source.kind() == std::io::ErrorKind::AddrInUse {
            ServerError::PortInUse { port: addr.port() }
        } else {
            ServerError::Bind { addr, source }
        }
    })?;
    log::info!("listening on http://{}", listener.local_addr().map_err(ServerError::Serve)?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServerError::Serve)
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Serialize)]
struct SubjectEntry<'a> {
    subject_id: &'a str,
    metadata: &'a BTreeMap<String, String>,
    cluster_ids: Vec<u32>,
}

#[derive(Serialize)]
struct CohortBody<'a> {
    subject_count: usize,
    cluster_count: usize,
    subjects: Vec<SubjectEntry<'a>>,
    fields: &'a BTreeMap<String, Range>,
}

async fn get_cohort(State(state): State<Shared>) -> Result<Response, ApiError> {
    blocking(move || {
        let engine = state.engine();
        let ranges = engine
            .cohort_ranges()
            .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
        let cohort = engine.cohort();
        let subjects = cohort
            .subjects
            .iter()
            .map(|s| SubjectEntry {
                subject_id: &s.subject_id,
                metadata: &s.metadata,
                cluster_ids: s.cluster_index.keys().copied().collect(),
            })
            .collect();
        Ok(ok_json(&CohortBody {
            subject_count: cohort.subjects.len(),
            cluster_count: cohort.cluster_count(),
            subjects,
            fields: ranges,
        }))
    })
    .await
}

async fn get_colormaps() -> Response {
    #[derive(Serialize)]
    struct Stop {
        t: f64,
        rgb: Rgb,
    }
    #[derive(Serialize)]
    struct Entry<'a> {
        name: &'a str,
        stops: Vec<Stop>,
    }
    let list: Vec<Entry> = builtin_colormaps()
        .iter()
        .map(|c| Entry { name: &c.name, stops: c.stops.iter().map(|&(t, rgb)| Stop { t, rgb }).collect() })
        .collect();
    ok_json(&list)
}

#[derive(Serialize)]
struct ProjectionBody<'a> {
    layout_key: &'a str,
    axes: &'a [String],
    k: usize,
    seed: u64,
    notices: &'a [String],
    layout: Vec<crate::projection::LayoutRecord>,
}

async fn post_projection(
    State(state): State<Shared>,
    Json(req): Json<ProjectionRequest>,
) -> Result<Response, ApiError> {
    let key = state.engine().resolve(&req).cache_key();
    if let Some(hit) = state.layouts.read().unwrap().get(&key) {
        return Ok(cached_body(hit));
    }
    let timeout = state.projection_timeout;
    let work = blocking({
        let state = Arc::clone(&state);
        let key = key.clone();
        move || {
            let out = state.engine().project(&req)?;
            let body = to_stable_vec(&ProjectionBody {
                layout_key: &key,
                axes: &out.layout.metric.axes,
                k: out.k,
                seed: out.seed,
                notices: &out.notices,
                layout: out.layout.records(),
            })
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            Ok(CachedLayout { layout: out.layout, body })
        }
    });
    let computed = tokio::time::timeout(timeout, work)
        .await
        .map_err(|_| ApiError::new(StatusCode::GATEWAY_TIMEOUT, "projection exceeded the time limit"))??;
    let entry = Arc::clone(
        state.layouts.write().unwrap().entry(key).or_insert_with(|| Arc::new(computed)),
    );
    Ok(cached_body(&entry))
}

fn cached_body(entry: &CachedLayout) -> Response {
    (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], entry.body.clone()).into_response()
}

#[derive(Deserialize)]
struct BrushRequest {
    layout_key: String,
    rect: Rect,
}

async fn post_brush(State(state): State<Shared>, Json(req): Json<BrushRequest>) -> Result<Response, ApiError> {
    let entry = state
        .layouts
        .read()
        .unwrap()
        .get(&req.layout_key)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown layout_key '{}'", req.layout_key)))?;
    let sel = brush_select(&entry.layout, req.rect).map_err(|e| ApiError::bad_request(e.to_string()))?;
    #[derive(Serialize)]
    struct Body {
        selected: Vec<ClusterKey>,
        highlighted: Vec<ClusterKey>,
    }
    Ok(ok_json(&Body {
        selected: sel.selected.into_iter().collect(),
        highlighted: sel.highlighted.into_iter().collect(),
    }))
}

fn cluster_key(state: &AppState, subject: String, cluster: &str) -> Result<ClusterKey, ApiError> {
    let cluster_id: u32 = cluster
        .parse()
        .map_err(|_| ApiError::not_found(format!("cluster '{cluster}' is not a cluster id")))?;
    let key = ClusterKey::new(subject, cluster_id);
    if state.engine().cohort().cluster_file(&key).is_none() {
        return Err(ApiError::not_found(format!("unknown cluster {key}")));
    }
    Ok(key)
}

async fn get_summary(
    State(state): State<Shared>,
    Path((subject, cluster)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let key = cluster_key(&state, subject, &cluster)?;
    blocking(move || Ok(ok_json(state.engine().summary(&key)?.as_ref()))).await
}

#[derive(Deserialize)]
struct FingerprintQuery {
    axes: Option<String>,
}

fn split_list(s: Option<&str>) -> Vec<String> {
    s.map(|s| s.split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect())
        .unwrap_or_default()
}

async fn get_fingerprint(
    State(state): State<Shared>,
    Path((subject, cluster)): Path<(String, String)>,
    Query(q): Query<FingerprintQuery>,
) -> Result<Response, ApiError> {
    let key = cluster_key(&state, subject, &cluster)?;
    let axes = split_list(q.axes.as_deref());
    blocking(move || Ok(ok_json(&state.engine().fingerprint(&key, &axes)?))).await
}

#[derive(Deserialize)]
struct GeometryQuery {
    scalar: Option<String>,
    colormap: Option<String>,
    format: Option<String>,
}

#[derive(Serialize)]
struct GeometryBody {
    subject_id: String,
    cluster_id: u32,
    fiber_count: usize,
    point_count: usize,
    /// Flat `[x, y, z, x, y, z, ...]` per fiber.
    fibers: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scalar: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    colormap: Option<String>,
    /// Flat `[r, g, b, ...]` per fiber, one triple per vertex.
    #[serde(skip_serializing_if = "Option::is_none")]
    colors: Option<Vec<Vec<u8>>>,
}

async fn get_geometry(
    State(state): State<Shared>,
    Path((subject, cluster)): Path<(String, String)>,
    Query(q): Query<GeometryQuery>,
) -> Result<Response, ApiError> {
    let key = cluster_key(&state, subject, &cluster)?;
    let binary = match q.format.as_deref() {
        None | Some("json") => false,
        Some("binary") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown format '{other}'"))),
    };
    let cmap = match (&q.scalar, q.colormap.as_deref()) {
        (None, None) => None,
        (None, Some(_)) => return Err(ApiError::bad_request("colormap given without scalar")),
        (Some(_), name) => {
            let name = name.unwrap_or("viridis");
            Some(colormap(name).ok_or_else(|| ApiError::bad_request(format!("unknown colormap '{name}'")))?)
        }
    };

    blocking(move || {
        let engine = state.engine();
        let g = engine.geometry(&key)?;
        let colors = match (&q.scalar, cmap) {
            (Some(scalar), Some(cmap)) => {
                let per_vertex: Vec<Vec<f64>> = if let Some(i) = g.scalar_index(scalar) {
                    g.fibers.iter().map(|f| f.scalars[i].clone()).collect()
                } else if let Some(i) = g.property_index(scalar) {
                    g.fibers.iter().enumerate().map(|(f, fiber)| vec![g.properties[i][f]; fiber.len()]).collect()
                } else {
                    return Err(ApiError::bad_request(format!("unknown scalar '{scalar}'")));
                };
                let range = engine
                    .cohort_ranges()?
                    .get(scalar)
                    .copied()
                    .ok_or_else(|| ApiError::bad_request(format!("no cohort range for '{scalar}'")))?;
                Some(
                    per_vertex
                        .iter()
                        .map(|vals| {
                            vals.iter()
                                .flat_map(|&v| map_color(minmax_normalize(v, range).unwrap_or(0.5), cmap))
                                .collect::<Vec<u8>>()
                        })
                        .collect::<Vec<_>>(),
                )
            }
            _ => None,
        };

        if binary {
            return Ok(binary_geometry(&g.fibers, colors.as_deref()));
        }
        Ok(ok_json(&GeometryBody {
            subject_id: key.subject_id.clone(),
            cluster_id: key.cluster_id,
            fiber_count: g.fiber_count(),
            point_count: g.point_count(),
            fibers: g.fibers.iter().map(|f| f.points.iter().flatten().copied().collect()).collect(),
            scalar: q.scalar.clone(),
            colormap: cmap.map(|c| c.name.clone()),
            colors,
        }))
    })
    .await
}

/// Little-endian framing: `u32 fiber_count`, then per fiber `u32 n_points`,
/// `n_points * 3` f32 positions and, when colored, `n_points * 3` u8 RGB.
fn binary_geometry(fibers: &[crate::model::FiberPolyline], colors: Option<&[Vec<u8>]>) -> Response {
    let mut out = Vec::new();
    out.extend_from_slice(&(fibers.len() as u32).to_le_bytes());
    for (i, f) in fibers.iter().enumerate() {
        out.extend_from_slice(&(f.len() as u32).to_le_bytes());
        for p in &f.points {
            for c in p {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        if let Some(colors) = colors {
            out.extend_from_slice(&colors[i]);
        }
    }
    let colored = if colors.is_some() { "1" } else { "0" };
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "application/octet-stream"), (header::HeaderName::from_static("x-fiberscope-colored"), colored)],
        out,
    )
        .into_response()
}
