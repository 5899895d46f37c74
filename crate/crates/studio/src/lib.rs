//! Session-oriented HTTP API over the pattern pipeline. Sessions live in
//! memory; results are immutable revisions.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use pattern_core::mesh::{parse_obj, SurfacePoint, TriMesh, Vec3};
use pattern_core::pattern::{run_pipeline, Config, PipelineInput};
use pattern_core::MeshError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Upload size limit (bytes).
pub const MAX_UPLOAD: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Idle,
    Computing,
    Failed { reason: String },
}

#[derive(Debug, Clone)]
pub struct Revision {
    pub number: u64,
    pub layout: String,
    pub pattern: String,
    pub svg: String,
    pub report: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stroke {
    pub id: u64,
    pub points: Vec<SurfacePoint>,
}

#[derive(Debug)]
pub struct Session {
    pub mesh: TriMesh,
    pub poses: Vec<Vec<Vec3>>,
    pub strokes: BTreeMap<u64, Vec<SurfacePoint>>,
    next_stroke: u64,
    pub config: Config,
    pub revisions: Vec<Arc<Revision>>,
    pub job: JobState,
    cancel: Arc<AtomicBool>,
}

#[derive(Debug, Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl AppState {
    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": msg.into() }),
        }
    }

    fn not_found(msg: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, msg)
    }

    fn bad_request(msg: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, msg)
    }

    fn mesh(e: MeshError) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": e.to_string(), "report": mesh_report(&e) }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn mesh_report(e: &MeshError) -> Value {
    let kind = format!("{e:?}");
    let kind = kind.split([' ', '{', '(']).next().unwrap_or_default().to_string();
    json!({ "valid": false, "kind": kind, "message": e.to_string() })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Rest mesh as OBJ text.
    pub obj: String,
    /// Extra poses as OBJ text with the same faces.
    #[serde(default)]
    pub poses: Vec<String>,
    #[serde(default)]
    pub config: Option<Value>,
}

fn load_mesh(req: &CreateSession) -> Result<(TriMesh, Vec<Vec<Vec3>>), MeshError> {
    let (v, f) = parse_obj(&req.obj)?;
    let mesh = TriMesh::new(v, f)?;
    let mut poses = Vec::with_capacity(req.poses.len());
    for (i, text) in req.poses.iter().enumerate() {
        let (v, f) = parse_obj(text)?;
        if v.len() != mesh.num_vertices() {
            return Err(MeshError::PoseMismatch {
                expected: mesh.num_vertices(),
                found: v.len(),
            });
        }
        if f.as_slice() != mesh.faces() {
            return Err(MeshError::PoseConnectivity { index: i });
        }
        poses.push(v);
    }
    Ok((mesh, poses))
}

async fn create_session(State(app): State<AppState>, Json(req): Json<CreateSession>) -> Result<Response, ApiError> {
    let (mesh, poses) = load_mesh(&req).map_err(ApiError::mesh)?;
    let config = match &req.config {
        Some(o) => Config::default().merged(o).map_err(|e| ApiError::bad_request(e.to_string()))?,
        None => Config::default(),
    };
    let id = uuid::Uuid::new_v4().to_string();
    let body = json!({
        "id": id,
        "vertices": mesh.num_vertices(),
        "faces": mesh.num_faces(),
        "boundary_loops": mesh.boundary_loops().len(),
        "genus": mesh.genus(),
        "poses": poses.len(),
    });
    let session = Session {
        mesh,
        poses,
        strokes: BTreeMap::new(),
        next_stroke: 1,
        config,
        revisions: Vec::new(),
        job: JobState::Idle,
        cancel: Arc::new(AtomicBool::new(false)),
    };
    app.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn summary(s: &Session) -> Value {
    let strokes: Vec<Stroke> = s.strokes.iter().map(|(&id, p)| Stroke { id, points: p.clone() }).collect();
    json!({
        "vertices": s.mesh.num_vertices(),
        "faces": s.mesh.num_faces(),
        "strokes": strokes,
        "config": s.config,
        "revision": s.revisions.last().map_or(0, |r| r.number),
        "job": s.job,
    })
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    let s = s.lock().unwrap();
    Ok(Json(summary(&s)))
}

async fn delete_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let s = app
        .sessions
        .lock()
        .unwrap()
        .remove(&id)
        .ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
    s.lock().unwrap().cancel.store(true, Ordering::SeqCst);
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddStroke {
    pub points: Vec<SurfacePoint>,
}

fn check_stroke(mesh: &TriMesh, points: &[SurfacePoint]) -> Result<(), ApiError> {
    if points.len() < 2 {
        return Err(ApiError::bad_request("a stroke needs at least two points"));
    }
    for (i, p) in points.iter().enumerate() {
        if p.face >= mesh.num_faces() {
            return Err(ApiError::bad_request(format!("point {i}: face {} is not on the mesh", p.face)));
        }
        if !p.is_valid(1e-6) {
            return Err(ApiError::bad_request(format!(
                "point {i}: barycentric coordinates {:?} must be non-negative and sum to 1",
                p.bary
            )));
        }
    }
    Ok(())
}

async fn add_stroke(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AddStroke>,
) -> Result<Response, ApiError> {
    let s = app.session(&id)?;
    let mut s = s.lock().unwrap();
    check_stroke(&s.mesh, &req.points)?;
    let sid = s.next_stroke;
    s.next_stroke += 1;
    s.strokes.insert(sid, req.points.clone());
    let stroke = Stroke { id: sid, points: req.points };
    Ok((StatusCode::CREATED, Json(stroke)).into_response())
}

async fn remove_stroke(
    State(app): State<AppState>,
    Path((id, sid)): Path<(String, u64)>,
) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    let mut s = s.lock().unwrap();
    s.strokes
        .remove(&sid)
        .ok_or_else(|| ApiError::not_found(format!("no stroke {sid}")))?;
    let left: Vec<u64> = s.strokes.keys().copied().collect();
    Ok(Json(json!({ "strokes": left })))
}

/// Pipeline outputs as the CLI writes them.
fn compute_revision(config: &Config, input: &PipelineInput, number: u64) -> Result<Revision, String> {
    let out = run_pipeline(config, input).map_err(|e| e.to_string())?;
    Ok(Revision {
        number,
        layout: out.document.to_json(),
        pattern: out.pattern.to_json(),
        svg: out.svg,
        report: serde_json::to_value(&out.report).map_err(|e| e.to_string())?,
    })
}

async fn compute(State(app): State<AppState>, Path(id): Path<String>, body: Option<Json<Value>>) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let (config, input, number, cancel) = {
        let mut s = handle.lock().unwrap();
        if s.job == JobState::Computing {
            return Err(ApiError::new(StatusCode::CONFLICT, "a computation is already running"));
        }
        if let Some(Json(o)) = &body {
            s.config = s.config.merged(o).map_err(|e| ApiError::bad_request(e.to_string()))?;
        }
        s.job = JobState::Computing;
        let input = PipelineInput {
            mesh: s.mesh.clone(),
            poses: s.poses.clone(),
            strokes: s.strokes.values().cloned().collect(),
        };
        let number = s.revisions.last().map_or(0, |r| r.number) + 1;
        (s.config.clone(), input, number, s.cancel.clone())
    };
    let worker = handle.clone();
    tokio::spawn(async move {
        let result = tokio::task::spawn_blocking(move || compute_revision(&config, &input, number))
            .await
            .unwrap_or_else(|e| Err(format!("worker failed: {e}")));
        if cancel.load(Ordering::SeqCst) {
            return;
        }
        let mut s = worker.lock().unwrap();
        match result {
            Ok(r) => {
                s.revisions.push(Arc::new(r));
                s.job = JobState::Idle;
            }
            Err(reason) => s.job = JobState::Failed { reason },
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "revision": number }))).into_response())
}

async fn status(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    let s = s.lock().unwrap();
    let mut v = serde_json::to_value(&s.job).expect("job state serializes");
    v["revision"] = json!(s.revisions.last().map_or(0, |r| r.number));
    Ok(Json(v))
}

fn revision(app: &AppState, id: &str, r: u64) -> Result<Arc<Revision>, ApiError> {
    let s = app.session(id)?;
    let s = s.lock().unwrap();
    s.revisions
        .iter()
        .find(|x| x.number == r)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no revision {r}")))
}

async fn get_layout(State(app): State<AppState>, Path((id, r)): Path<(String, u64)>) -> Result<Response, ApiError> {
    let rev = revision(&app, &id, r)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], rev.layout.clone()).into_response())
}

async fn get_pattern(State(app): State<AppState>, Path((id, r)): Path<(String, u64)>) -> Result<Response, ApiError> {
    let rev = revision(&app, &id, r)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], rev.pattern.clone()).into_response())
}

async fn get_report(State(app): State<AppState>, Path((id, r)): Path<(String, u64)>) -> Result<Json<Value>, ApiError> {
    Ok(Json(revision(&app, &id, r)?.report.clone()))
}

async fn get_svg(State(app): State<AppState>, Path((id, r)): Path<(String, u64)>) -> Result<Response, ApiError> {
    let rev = revision(&app, &id, r)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], rev.svg.clone()).into_response())
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/strokes", post(add_stroke))
        .route("/sessions/{id}/strokes/{sid}", delete(remove_stroke))
        .route("/sessions/{id}/compute", post(compute))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/revisions/{r}/layout", get(get_layout))
        .route("/sessions/{id}/revisions/{r}/pattern", get(get_pattern))
        .route("/sessions/{id}/revisions/{r}/report", get(get_report))
        .route("/sessions/{id}/revisions/{r}/pattern.svg", get(get_svg))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .with_state(app)
}
