//! JSON-over-HTTP service.
//!
//! Knowledge-base and selection endpoints are pure reads. Session
//! mutations are serialized per session, persisted before they are
//! acknowledged, deduplicated by the `x-request-id` header and guarded by
//! an optional `if-match: <version>` header.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, MethodRouter};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use reqpath_core::kb::{query_activity, Activity, Criterion, KnowledgeBase, Method};
use reqpath_core::selection::{
    classify_scenario, explain_path, filter_methods, minimize_distinct, recommend_path, CriterionSet, Explanation,
    MatchMode, MinimizeMode, PathResult, SelectionRequest,
};
use reqpath_core::workflow::{Journal, NeedRecord, SessionPhase};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::{oneshot, Mutex};

use crate::config::{ConfigError, ServiceConfig};
use crate::error::{ApiError, ErrorKind};
use crate::persistence::{self, load_session, save_session, PersistError};
use crate::report::build_report;

pub const REQUEST_ID_HEADER: &str = "x-request-id";
const REPLIES_FILE: &str = "replies.json";

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(self.kind), Json(&self)).into_response()
    }
}

fn status_of(kind: ErrorKind) -> StatusCode {
    match kind {
        ErrorKind::Usage => StatusCode::BAD_REQUEST,
        ErrorKind::Domain => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorKind::Conflict => StatusCode::CONFLICT,
        ErrorKind::NotFound => StatusCode::NOT_FOUND,
        ErrorKind::ReadOnly => StatusCode::FORBIDDEN,
        ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// Body of `POST /select/path`: the path plus its explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathResponse {
    #[serde(flatten)]
    pub result: PathResult,
    pub explanation: Explanation,
}

pub fn select_path(kb: &KnowledgeBase, request: &SelectionRequest) -> Result<PathResponse, ApiError> {
    let result = recommend_path(kb, request)?;
    let explanation = explain_path(kb, &result)?;
    Ok(PathResponse { result, explanation })
}

#[derive(Debug, Clone, Deserialize)]
pub struct MinimizeRequest {
    pub activities: Vec<String>,
    pub criterion: String,
    #[serde(default)]
    pub mode: MinimizeMode,
}

#[derive(Debug, Clone, Serialize)]
struct KbSummary<'a> {
    version: &'a str,
    counts: BTreeMap<&'static str, usize>,
    criteria: &'a [Criterion],
    methods: &'a [Method],
}

/// A stored response, replayed verbatim for a repeated request id.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Reply {
    status: u16,
    body: Value,
}

impl Reply {
    fn ok(status: StatusCode, body: Value) -> Self {
        Reply {
            status: status.as_u16(),
            body,
        }
    }

    fn error(e: &ApiError) -> Self {
        Reply {
            status: status_of(e.kind).as_u16(),
            body: serde_json::to_value(e).expect("errors serialize"),
        }
    }

    fn into_response(self, version: Option<u64>) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut resp = (status, Json(self.body)).into_response();
        if let Some(v) = version {
            resp.headers_mut().insert(header::ETAG, etag(v));
        }
        resp
    }
}

struct Slot {
    journal: Journal,
    replies: BTreeMap<String, Reply>,
}

type SlotRef = Arc<Mutex<Option<Slot>>>;

struct Inner {
    kb: KnowledgeBase,
    data_dir: PathBuf,
    read_only: bool,
    clock: Clock,
    slots: Mutex<HashMap<String, SlotRef>>,
    /// Replies to `POST /sessions`, keyed by request id.
    creations: Mutex<HashMap<String, (String, Reply)>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(kb: KnowledgeBase, data_dir: impl Into<PathBuf>, read_only: bool) -> Self {
        AppState::with_clock(kb, data_dir, read_only, Arc::new(Utc::now))
    }

    pub fn with_clock(kb: KnowledgeBase, data_dir: impl Into<PathBuf>, read_only: bool, clock: Clock) -> Self {
        AppState {
            inner: Arc::new(Inner {
                kb,
                data_dir: data_dir.into(),
                read_only,
                clock,
                slots: Mutex::new(HashMap::new()),
                creations: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.inner.kb
    }

    async fn slot(&self, id: &str) -> SlotRef {
        self.inner
            .slots
            .lock()
            .await
            .entry(id.to_owned())
            .or_insert_with(|| Arc::new(Mutex::new(None)))
            .clone()
    }

    fn load_slot(&self, id: &str) -> Result<Slot, ApiError> {
        let journal = load_session(&self.inner.kb, id, &self.inner.data_dir)?;
        let path = persistence::session_dir(&self.inner.data_dir, id).join(REPLIES_FILE);
        let replies = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| {
                ApiError::from(PersistError::Corrupt {
                    id: id.to_owned(),
                    reason: format!("{REPLIES_FILE}: {e}"),
                })
            })?,
            Err(_) => BTreeMap::new(),
        };
        Ok(Slot { journal, replies })
    }

    fn store(&self, slot: &Slot) -> Result<(), ApiError> {
        save_session(&slot.journal, &self.inner.data_dir)?;
        let path = persistence::session_dir(&self.inner.data_dir, slot.journal.session().id()).join(REPLIES_FILE);
        let bytes = serde_json::to_vec(&slot.replies).expect("replies serialize");
        std::fs::write(&path, bytes).map_err(|e| ApiError::internal(format!("cannot write {}: {e}", path.display())))
    }

    /// Runs `f` against the loaded session under its per-session lock.
    async fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Slot) -> T) -> Result<T, ApiError> {
        let slot = self.slot(id).await;
        let mut guard = slot.lock().await;
        if guard.is_none() {
            *guard = Some(self.load_slot(id)?);
        }
        Ok(f(guard.as_mut().expect("slot loaded above")))
    }
}

fn etag(version: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{version}\"")).expect("digits are a valid header value")
}

fn request_id(headers: &HeaderMap) -> Result<Option<String>, ApiError> {
    match headers.get(REQUEST_ID_HEADER) {
        None => Ok(None),
        Some(v) => v
            .to_str()
            .ok()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Some(s.to_owned()))
            .ok_or_else(|| ApiError::usage(format!("`{REQUEST_ID_HEADER}` must be a non-empty ASCII string"))),
    }
}

fn expected_version(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    match headers.get(header::IF_MATCH) {
        None => Ok(None),
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| s.trim().trim_matches('"').parse().ok())
            .map(Some)
            .ok_or_else(|| ApiError::usage("`if-match` must carry a session version number")),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    let body = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}".as_slice()
    } else {
        body
    };
    serde_json::from_slice(body).map_err(|e| ApiError::invalid_body(format!("request body: {e}")))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/kb", get(kb_summary))
        .route("/kb/activities", get(list_activities))
        .route("/kb/activities/{id}", get(show_activity))
        .route("/kb/activities/{id}/scenario", get(activity_scenario))
        .route("/kb/activities/{id}/methods", get(activity_methods))
        .route("/select/path", post(post_select_path))
        .route("/select/minimize", post(post_minimize))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(show_session))
        .route("/sessions/{id}/log", get(show_log))
        .route("/sessions/{id}/checklist", get(session_checklist))
        .route("/sessions/{id}/report", get(session_report))
        .route("/sessions/{id}/requirements", op("record_requirement"))
        .route("/sessions/{id}/rationale", op("attach_rationale"))
        .route("/sessions/{id}/models", op("attach_model"))
        .route("/sessions/{id}/organize", op("organize"))
        .route("/sessions/{id}/verification", op("mark_verification"))
        .route("/sessions/{id}/conflicts", op("raise_conflict"))
        .route("/sessions/{id}/conflicts/{cid}/resolve", post(resolve_conflict))
        .route("/sessions/{id}/attestation", op("set_attestation"))
        .route("/sessions/{id}/global-validation", op("request_global_validation"))
        .route("/sessions/{id}/methods", op("assign_method"))
        .route("/sessions/{id}/advance", op("advance"))
        .fallback(|| async { ApiError::new(ErrorKind::NotFound, "no_route", "no such endpoint") })
        .with_state(state)
}

async fn kb_summary(State(st): State<AppState>) -> Response {
    let kb = st.kb();
    let counts = BTreeMap::from([
        ("criteria", kb.criteria().len()),
        ("methods", kb.methods().len()),
        ("activities", kb.activities().len()),
        ("groups", kb.groups().len()),
    ]);
    Json(KbSummary {
        version: kb.version(),
        counts,
        criteria: kb.criteria(),
        methods: kb.methods(),
    })
    .into_response()
}

async fn list_activities(State(st): State<AppState>) -> Json<Vec<Activity>> {
    Json(st.kb().activities().to_vec())
}

async fn show_activity(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(query_activity(st.kb(), &id)?).into_response())
}

async fn activity_scenario(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(classify_scenario(st.kb(), &id)?).into_response())
}

#[derive(Debug, Serialize)]
struct FilterResponse {
    activity: String,
    criteria: CriterionSet,
    mode: MatchMode,
    methods: Vec<String>,
}

/// Splits a comma-separated list, dropping empty items.
pub fn split_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

async fn activity_methods(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let kb = st.kb();
    let mode: MatchMode = match q.get("mode") {
        Some(m) => m.parse().map_err(|e: String| ApiError::new(ErrorKind::Domain, "invalid_mode", e))?,
        None => MatchMode::default(),
    };
    let ids = q.get("criteria").map(|c| split_list(c)).unwrap_or_default();
    let criteria = CriterionSet::from_ids(kb, &ids)?;
    let methods = filter_methods(kb, &id, &criteria, mode)?;
    Ok(Json(FilterResponse {
        activity: id,
        criteria,
        mode,
        methods,
    })
    .into_response())
}

async fn post_select_path(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: SelectionRequest = parse_json(&body)?;
    Ok(Json(select_path(st.kb(), &request)?).into_response())
}

async fn post_minimize(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: MinimizeRequest = parse_json(&body)?;
    let result = minimize_distinct(st.kb(), &request.activities, &request.criterion, request.mode)?;
    Ok(Json(result).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CreateBody {
    Full {
        #[serde(default)]
        id: Option<String>,
        needs: Vec<NeedRecord>,
    },
    Needs(Vec<NeedRecord>),
}

async fn list_sessions(State(st): State<AppState>) -> Result<Response, ApiError> {
    Ok(Json(persistence::list_sessions(&st.inner.data_dir)?).into_response())
}

async fn create_session(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    if st.inner.read_only {
        return Err(ApiError::read_only());
    }
    let rid = request_id(&headers)?;
    let (id, needs) = match parse_json::<CreateBody>(&body)? {
        CreateBody::Full { id, needs } => (id, needs),
        CreateBody::Needs(needs) => (None, needs),
    };
    // Holding the creation table serializes creates, so a retried request
    // cannot race its own first attempt.
    let mut creations = st.inner.creations.lock().await;
    if let Some((sid, reply)) = rid.as_ref().and_then(|r| creations.get(r)) {
        let version = st.with_session(sid, |s| s.journal.session().version()).await.ok();
        return Ok(reply.clone().into_response(version));
    }
    let id = id.unwrap_or_else(|| format!("s-{}", uuid::Uuid::new_v4().simple()));
    if !persistence::valid_session_id(&id) {
        return Err(PersistError::InvalidId(id).into());
    }
    let slot_ref = st.slot(&id).await;
    let mut guard = slot_ref.lock().await;
    if guard.is_some() || persistence::session_exists(&st.inner.data_dir, &id) {
        return Err(ApiError::new(
            ErrorKind::Conflict,
            "session_exists",
            format!("session `{id}` already exists"),
        ));
    }
    let journal = Journal::create(st.kb(), id.clone(), needs, rid.clone())?;
    let reply = Reply::ok(StatusCode::CREATED, json!({ "session": journal.session() }));
    let mut slot = Slot {
        journal,
        replies: BTreeMap::new(),
    };
    if let Some(r) = &rid {
        slot.replies.insert(r.clone(), reply.clone());
    }
    st.store(&slot)?;
    let version = slot.journal.session().version();
    *guard = Some(slot);
    if let Some(r) = rid {
        creations.insert(r, (id, reply.clone()));
    }
    Ok(reply.into_response(Some(version)))
}

async fn show_session(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    st.with_session(&id, |s| {
        let mut resp = Json(s.journal.session()).into_response();
        resp.headers_mut().insert(header::ETAG, etag(s.journal.session().version()));
        resp
    })
    .await
}

async fn show_log(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    st.with_session(&id, |s| Json(s.journal.log()).into_response()).await
}

async fn session_checklist(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    st.with_session(&id, |s| {
        let session = s.journal.session();
        if session.phase() != SessionPhase::LocalAnalysis {
            if let Some(c) = session.last_checklist() {
                return Ok(Json(c).into_response());
            }
        }
        Ok(Json(session.evaluate_checklist().map_err(ApiError::from)?).into_response())
    })
    .await?
}

async fn session_report(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let kb = st.kb();
    let path = match (q.get("criteria"), q.get("activities")) {
        (None, None) => None,
        (criteria, activities) => {
            let request = SelectionRequest {
                activities: activities.map(|a| split_list(a)).unwrap_or_default(),
                priority: criteria.map(|c| split_list(c)).unwrap_or_default(),
                ..Default::default()
            };
            Some(recommend_path(kb, &request)?)
        }
    };
    let now = (st.inner.clock)();
    let text = st
        .with_session(&id, |s| build_report(kb, Some(s.journal.session()), path.as_ref(), now))
        .await??
        .render();
    Ok(([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], text).into_response())
}

fn op(name: &'static str) -> MethodRouter<AppState> {
    post(move |State(st): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: Bytes| async move {
        mutate(st, id, headers, name, &body, None).await
    })
}

async fn resolve_conflict(
    State(st): State<AppState>,
    Path((id, cid)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    mutate(st, id, headers, "resolve_conflict", &body, Some(("conflict", cid))).await
}

/// Applies one journal command built from the request body.
async fn mutate(
    st: AppState,
    id: String,
    headers: HeaderMap,
    op: &'static str,
    body: &[u8],
    path_field: Option<(&'static str, String)>,
) -> Result<Response, ApiError> {
    if st.inner.read_only {
        return Err(ApiError::read_only());
    }
    let rid = request_id(&headers)?;
    let expected = expected_version(&headers)?;
    let mut fields: serde_json::Map<String, Value> = parse_json(body)?;
    fields.insert("op".into(), Value::from(op));
    if let Some((k, v)) = path_field {
        fields.insert(k.into(), Value::from(v));
    }
    if op == "assign_method" && !fields.contains_key("at") {
        fields.insert("at".into(), json!((st.inner.clock)()));
    }

    let kb = st.kb().clone();
    let st2 = st.clone();
    st.with_session(&id, move |slot| {
        if let Some(reply) = rid.as_ref().and_then(|r| slot.replies.get(r)) {
            return Ok(reply.clone().into_response(Some(slot.journal.session().version())));
        }
        let current = slot.journal.session().version();
        if let Some(v) = expected.filter(|&v| v != current) {
            return Err(ApiError::stale_version(v, current));
        }
        let reply = match serde_json::from_value(Value::Object(fields)) {
            Err(e) => Reply::error(&ApiError::invalid_body(format!("request body: {e}"))),
            Ok(command) => {
                let mut next = slot.journal.clone();
                match next.execute(&kb, command, rid.clone()) {
                    Ok(applied) => {
                        let body = json!({ "applied": applied, "session": next.session() });
                        let previous = std::mem::replace(&mut slot.journal, next);
                        let reply = Reply::ok(StatusCode::OK, body);
                        if let Some(r) = &rid {
                            slot.replies.insert(r.clone(), reply.clone());
                        }
                        if let Err(e) = st2.store(slot) {
                            slot.journal = previous;
                            if let Some(r) = &rid {
                                slot.replies.remove(r);
                            }
                            return Err(e);
                        }
                        return Ok(reply.into_response(Some(slot.journal.session().version())));
                    }
                    Err(e) => Reply::error(&ApiError::from(e)),
                }
            }
        };
        if let Some(r) = &rid {
            slot.replies.insert(r.clone(), reply.clone());
            st2.store(slot)?;
        }
        Ok(reply.into_response(Some(slot.journal.session().version())))
    })
    .await?
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data directory {path} is not writable: {source}")]
    DataDir { path: PathBuf, source: std::io::Error },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}

/// A running service.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

fn probe_writable(dir: &FsPath) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(probe)
}

/// Loads the catalog, checks the data directory and starts listening.
/// Refuses to start on a catalog with validation errors.
pub async fn serve(config: &ServiceConfig) -> Result<ServiceHandle, ServeError> {
    let kb = config.load_kb()?;
    if !config.read_only {
        probe_writable(&config.data_dir).map_err(|source| ServeError::DataDir {
            path: config.data_dir.clone(),
            source,
        })?;
    }
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.listen.clone(),
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind {
        addr: config.listen.clone(),
        source,
    })?;
    let app = router(AppState::new(kb, config.data_dir.clone(), config.read_only));
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServiceHandle {
        addr,
        shutdown: Some(tx),
        task,
    })
}
