//! HTTP endpoints over a [`WorkspaceSnapshot`]. Every handler is a pure view
//! of the loaded artifacts; nothing here writes to the workspace.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

use psc2code_core::classify::FrameVerdict;
use psc2code_core::keyframes::InformativeSet;
use psc2code_core::search::SearchError;

use crate::snapshot::{VideoView, WorkspaceSnapshot};

pub const DEFAULT_TOP: usize = 10;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            Self::NotFound(m) => (StatusCode::NOT_FOUND, m),
            Self::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            Self::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": msg }))).into_response()
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::EmptyQuery => Self::BadRequest(e.to_string()),
            SearchError::EmptyCorpus => Self::NotFound(e.to_string()),
            SearchError::Workspace(_) => Self::Internal(e.to_string()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub struct AppState {
    root: PathBuf,
    snapshot: RwLock<Arc<WorkspaceSnapshot>>,
}

impl AppState {
    pub fn new(snapshot: WorkspaceSnapshot) -> Arc<Self> {
        Arc::new(Self {
            root: snapshot.root.clone(),
            snapshot: RwLock::new(Arc::new(snapshot)),
        })
    }

    async fn current(&self) -> Arc<WorkspaceSnapshot> {
        self.snapshot.read().await.clone()
    }

    /// Re-scans the workspace. The swap waits for in-flight reads.
    pub async fn reload(&self) -> anyhow::Result<usize> {
        let root = self.root.clone();
        let fresh = tokio::task::spawn_blocking(move || WorkspaceSnapshot::load(&root)).await??;
        let n = fresh.videos.len();
        *self.snapshot.write().await = Arc::new(fresh);
        Ok(n)
    }
}

pub struct RouterOptions<'a> {
    /// Static UI assets mounted under `/app`.
    pub app_dir: Option<&'a Path>,
    /// Expose `POST /reload`.
    pub reload: bool,
}

pub fn router(state: Arc<AppState>, opts: RouterOptions<'_>) -> Router {
    let mut r = Router::new()
        .route("/videos", get(videos))
        .route("/videos/{id}/frames", get(frames))
        .route("/videos/{id}/search", get(video_search))
        .route("/videos/{id}/files", get(files))
        .route("/videos/{id}/timeline", get(timeline))
        .route("/videos/{id}/code/{t}", get(code))
        .route("/search", get(corpus_search));
    if opts.reload {
        r = r.route("/reload", post(reload));
    }
    if let Some(dir) = opts.app_dir {
        r = r.nest_service("/app", ServeDir::new(dir));
    }
    r.with_state(state)
}

fn video<'a>(snap: &'a WorkspaceSnapshot, id: &str) -> Result<&'a VideoView, ApiError> {
    snap.videos
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown video `{id}`")))
}

async fn videos(State(st): State<Arc<AppState>>) -> ApiResult<Vec<psc2code_core::VideoManifest>> {
    let snap = st.current().await;
    Ok(Json(snap.videos.values().map(|v| v.manifest.clone()).collect()))
}

#[derive(Serialize)]
struct FramesBody {
    video_id: String,
    informative: Option<InformativeSet>,
    verdicts: Vec<FrameVerdict>,
}

async fn frames(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<FramesBody> {
    let snap = st.current().await;
    let v = video(&snap, &id)?;
    Ok(Json(FramesBody {
        video_id: id,
        informative: v.informative.clone(),
        verdicts: v.verdicts.clone(),
    }))
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    q: Option<String>,
    k: Option<usize>,
}

impl SearchParams {
    fn query(&self) -> Result<&str, ApiError> {
        match self.q.as_deref().map(str::trim) {
            Some(q) if !q.is_empty() => Ok(q),
            _ => Err(ApiError::BadRequest("missing query parameter `q`".into())),
        }
    }
}

#[derive(Serialize)]
struct VideoSearchBody {
    video_id: String,
    query: String,
    frames: Vec<u32>,
}

async fn video_search(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<SearchParams>,
) -> ApiResult<VideoSearchBody> {
    let snap = st.current().await;
    let v = video(&snap, &id)?;
    let q = params.query()?;
    Ok(Json(VideoSearchBody {
        frames: v.document.frames_matching(q)?,
        video_id: id,
        query: q.to_string(),
    }))
}

fn workflow<'a>(v: &'a VideoView, id: &str) -> Result<&'a psc2code_core::workflow::Workflow, ApiError> {
    v.workflow
        .as_ref()
        .ok_or_else(|| ApiError::NotFound(format!("video `{id}` has no workflow yet")))
}

async fn files(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Vec<psc2code_core::workflow::FileCluster>> {
    let snap = st.current().await;
    let v = video(&snap, &id)?;
    Ok(Json(workflow(v, &id)?.files.clone()))
}

async fn timeline(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Vec<psc2code_core::workflow::TimelineAction>> {
    let snap = st.current().await;
    let v = video(&snap, &id)?;
    Ok(Json(workflow(v, &id)?.timeline.clone()))
}

async fn code(
    State(st): State<Arc<AppState>>,
    UrlPath((id, t)): UrlPath<(String, u32)>,
) -> ApiResult<psc2code_core::ocr::CodeSnapshot> {
    let snap = st.current().await;
    let v = video(&snap, &id)?;
    v.code
        .get(&t)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("video `{id}` has no code at t={t}")))
}

async fn corpus_search(
    State(st): State<Arc<AppState>>,
    Query(params): Query<SearchParams>,
) -> ApiResult<Vec<psc2code_core::search::SearchHit>> {
    let snap = st.current().await;
    let q = params.query()?;
    let k = params.k.unwrap_or(DEFAULT_TOP);
    if k == 0 {
        return Err(ApiError::BadRequest("k must be at least 1".into()));
    }
    let index = snap
        .index
        .as_ref()
        .ok_or_else(|| ApiError::NotFound("workspace has no indexed video".into()))?;
    Ok(Json(index.query(q, k)?))
}

async fn reload(State(st): State<Arc<AppState>>) -> Result<Json<serde_json::Value>, ApiError> {
    let n = st.reload().await.map_err(|e| ApiError::Internal(format!("{e:#}")))?;
    Ok(Json(json!({ "videos": n })))
}
