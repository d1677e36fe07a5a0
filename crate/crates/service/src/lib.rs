//! Local HTTP service over the crackfield engine.
//!
//! A session holds one uploaded field, its magnitude preview and the current
//! crack. Jobs run on a small pool of workers fed by a bounded queue and are
//! polled by id.

mod error;
mod jobs;
mod preview;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use crackfield::field_io::{
    apply_mask, field_from_points, parse_points, validate_grid, GridReport, LengthUnit, MaskRegion,
    DEFAULT_GRID_TOLERANCE,
};
use crackfield::mesh::build_seam_mesh;
use crackfield::report::sha256_hex;
use crackfield::{Crack, Error, Field};

pub use error::{ApiError, ErrorPayload};
pub use jobs::{default_sweep, run_job, InputInfo, JobKind, JobOutput, JobRequest, JobStatus};
pub use preview::{magnitude_preview, MagnitudePreview};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Jobs waiting for a worker; submissions beyond it are refused.
    pub queue_capacity: usize,
    /// Worker tasks draining the queue. Zero leaves jobs queued forever.
    pub workers: usize,
    /// Largest preview edge in cells.
    pub preview_cells: usize,
    pub max_upload_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            queue_capacity: 4,
            workers: std::thread::available_parallelism().map_or(2, |n| n.get().min(4)),
            preview_cells: 512,
            max_upload_bytes: 256 << 20,
        }
    }
}

/// Field metadata returned on upload and by `GET /api/fields/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub id: String,
    pub sha256: String,
    pub units: LengthUnit,
    pub columns: usize,
    pub grid: GridReport,
    pub centre_m: [f64; 2],
    pub has_out_of_plane: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_of_flatness_m: Option<f64>,
    /// Lattice nodes without a finite measurement.
    pub unmeasured_nodes: usize,
    #[serde(default)]
    pub crack: Option<CrackEcho>,
    #[serde(default)]
    pub active_job: Option<String>,
}

/// Body of `PUT /api/fields/{id}/crack`. Either `polyline` (mouth first, tip
/// last) or `mouth` and `tip`; meters and radians.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackRequest {
    pub polyline: Option<Vec<[f64; 2]>>,
    pub tip: Option<[f64; 2]>,
    pub mouth: Option<[f64; 2]>,
    pub q_angle: Option<f64>,
    pub mask: Option<MaskRegion>,
}

/// The validated crack as it will be meshed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackEcho {
    pub crack: Crack,
    pub q_angle_rad: f64,
    /// Lattice points of the seam, mouth to tip.
    pub snapped_chain_m: Vec<[f64; 2]>,
    pub seam_pairs: usize,
    pub masked_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobAccepted {
    pub id: String,
    pub field_id: String,
    pub kind: JobKind,
    pub status: JobStatus,
}

struct Session {
    field: Arc<Field>,
    info: FieldInfo,
    input: InputInfo,
    preview: Arc<MagnitudePreview>,
    crack: RwLock<Option<CrackEcho>>,
    active_job: Mutex<Option<String>>,
}

struct JobRecord {
    id: String,
    field_id: String,
    kind: JobKind,
    status: JobStatus,
    /// Final response body, fixed once the job ends.
    body: Option<Arc<String>>,
}

impl JobRecord {
    fn accepted(&self) -> JobAccepted {
        JobAccepted {
            id: self.id.clone(),
            field_id: self.field_id.clone(),
            kind: self.kind,
            status: self.status,
        }
    }
}

struct QueuedJob {
    record: Arc<Mutex<JobRecord>>,
    session: Arc<Session>,
    crack: Crack,
    request: JobRequest,
}

struct Shared {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    jobs: RwLock<HashMap<String, Arc<Mutex<JobRecord>>>>,
    previews: Mutex<HashMap<String, Arc<MagnitudePreview>>>,
    preview_builds: AtomicUsize,
    queue: mpsc::Sender<QueuedJob>,
    // held so the queue stays open when no worker is running
    _receiver: Arc<tokio::sync::Mutex<mpsc::Receiver<QueuedJob>>>,
}

/// Handle to the service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    /// Creates the state and spawns the workers; needs a running Tokio runtime.
    pub fn new(config: ServiceConfig) -> Self {
        let (tx, rx) = mpsc::channel(config.queue_capacity.max(1));
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..config.workers {
            tokio::spawn(worker(rx.clone()));
        }
        AppState {
            shared: Arc::new(Shared {
                config,
                sessions: RwLock::default(),
                jobs: RwLock::default(),
                previews: Mutex::default(),
                preview_builds: AtomicUsize::new(0),
                queue: tx,
                _receiver: rx,
            }),
        }
    }

    /// Number of magnitude previews computed since start.
    pub fn preview_builds(&self) -> usize {
        self.shared.preview_builds.load(Ordering::SeqCst)
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.shared
            .sessions
            .read()
            .expect("session lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("field", id))
    }

    fn preview_for(&self, key: &str, field: &Field) -> Arc<MagnitudePreview> {
        let mut cache = self.shared.previews.lock().expect("preview lock");
        cache
            .entry(key.to_string())
            .or_insert_with(|| {
                self.shared.preview_builds.fetch_add(1, Ordering::SeqCst);
                Arc::new(magnitude_preview(field, self.shared.config.preview_cells))
            })
            .clone()
    }
}

async fn worker(rx: Arc<tokio::sync::Mutex<mpsc::Receiver<QueuedJob>>>) {
    loop {
        let Some(job) = rx.lock().await.recv().await else {
            return;
        };
        let (id, field_id, kind) = {
            let mut r = job.record.lock().expect("job lock");
            r.status = JobStatus::Running;
            (r.id.clone(), r.field_id.clone(), r.kind)
        };
        log::info!("job {id} started");
        let session = job.session.clone();
        let record = job.record.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            run_job(
                &job.session.field,
                &job.crack,
                &job.session.input,
                &job.request,
            )
        })
        .await;
        let (status, body) = match outcome {
            Ok(Ok(output)) => (
                JobStatus::Done,
                serde_json::json!({"id": id, "field_id": field_id, "kind": kind, "status": JobStatus::Done, "result": output}),
            ),
            Ok(Err(e)) => {
                log::warn!("job {id} failed: {e}");
                let payload = ErrorPayload::from(&e);
                (
                    JobStatus::Failed,
                    serde_json::json!({"id": id, "field_id": field_id, "kind": kind, "status": JobStatus::Failed, "error": payload}),
                )
            }
            Err(e) => {
                let payload = ErrorPayload::new("WorkerPanic", "service", e.to_string());
                (
                    JobStatus::Failed,
                    serde_json::json!({"id": id, "field_id": field_id, "kind": kind, "status": JobStatus::Failed, "error": payload}),
                )
            }
        };
        let text = serde_json::to_string(&body).expect("job body serializes");
        {
            let mut r = record.lock().expect("job lock");
            r.status = status;
            r.body = Some(Arc::new(text));
        }
        let mut active = session.active_job.lock().expect("session lock");
        if active.as_deref() == Some(id.as_str()) {
            *active = None;
        }
        log::info!("job {id} finished");
    }
}

/// The router over `state`.
pub fn app(state: AppState) -> Router {
    let limit = state.shared.config.max_upload_bytes;
    Router::new()
        .route("/api/fields", post(create_field))
        .route("/api/fields/{id}", get(get_field))
        .route("/api/fields/{id}/magnitude", get(get_magnitude))
        .route("/api/fields/{id}/crack", put(set_crack))
        .route("/api/fields/{id}/jobs", post(submit_job))
        .route("/api/jobs/{id}", get(get_job))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Refuses non-loopback addresses unless `allow_remote` is set.
pub fn check_bind(addr: SocketAddr, allow_remote: bool) -> Result<(), String> {
    if addr.ip().is_loopback() || allow_remote {
        Ok(())
    } else {
        Err(format!(
            "{addr} is not a loopback address; the service has no authentication, pass --allow-remote to bind it anyway"
        ))
    }
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    let router = app(AppState::new(config));
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

async fn upload_bytes(req: Request, state: &AppState) -> Result<Bytes, ApiError> {
    let multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !multipart {
        return Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()));
    }
    let mut form = Multipart::from_request(req, state)
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?;
    let mut first = None;
    while let Some(part) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let named = part.name() == Some("file");
        let bytes = part
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        if named {
            return Ok(bytes);
        }
        first.get_or_insert(bytes);
    }
    first.ok_or_else(|| ApiError::bad_request("multipart body has no parts"))
}

async fn create_field(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
    req: Request,
) -> Result<Response, ApiError> {
    let units: LengthUnit = match query.get("units") {
        Some(u) => u.parse().map_err(ApiError::bad_request)?,
        None => LengthUnit::Meter,
    };
    let delimiter = match query.get("delimiter").map(String::as_str) {
        None => None,
        Some("comma") | Some(",") => Some(','),
        Some("tab") | Some("\t") => Some('\t'),
        Some("space") | Some("whitespace") => Some(' '),
        Some(other) => {
            return Err(ApiError::bad_request(format!(
                "unknown delimiter '{other}'"
            )))
        }
    };
    let bytes = upload_bytes(req, &state).await?;
    let parsed = tokio::task::spawn_blocking(move || {
        let sha256 = sha256_hex(&bytes);
        let text = std::str::from_utf8(&bytes).map_err(|_| {
            Error::Field(crackfield::field_io::FieldError::MalformedRow {
                line: 0,
                reason: "body is not valid UTF-8".into(),
            })
        })?;
        let cloud = parse_points(text, units, delimiter)?;
        let grid = validate_grid(&cloud, DEFAULT_GRID_TOLERANCE)?;
        let field: Field = field_from_points(&cloud, DEFAULT_GRID_TOLERANCE)?;
        Ok::<_, Error>((sha256, cloud.columns(), grid, field))
    })
    .await
    .map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "WorkerPanic",
            e.to_string(),
        )
    })?;
    let (sha256, columns, grid, field) =
        parsed.map_err(|e| ApiError::engine(StatusCode::BAD_REQUEST, &e))?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let preview = state.preview_for(&format!("{sha256}:{units}"), &field);
    let info = FieldInfo {
        id: id.clone(),
        sha256: sha256.clone(),
        units,
        columns,
        grid,
        centre_m: field.centre,
        has_out_of_plane: field.has_out_of_plane,
        out_of_flatness_m: field.out_of_flatness,
        unmeasured_nodes: field.valid.iter().filter(|v| !**v).count(),
        crack: None,
        active_job: None,
    };
    let session = Session {
        field: Arc::new(field),
        info: info.clone(),
        input: InputInfo { sha256, units },
        preview,
        crack: RwLock::new(None),
        active_job: Mutex::new(None),
    };
    state
        .shared
        .sessions
        .write()
        .expect("session lock")
        .insert(id.clone(), Arc::new(session));
    log::info!("field {id} created ({}x{})", info.grid.nx, info.grid.ny);
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn get_field(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<FieldInfo>, ApiError> {
    let s = state.session(&id)?;
    let mut info = s.info.clone();
    info.crack = s.crack.read().expect("crack lock").clone();
    info.active_job = s.active_job.lock().expect("session lock").clone();
    Ok(Json(info))
}

async fn get_magnitude(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    Ok(Json(s.preview.as_ref()).into_response())
}

/// Checks a crack against a field and returns what will be meshed.
pub fn validate_crack(field: &Field, request: &CrackRequest) -> Result<CrackEcho, Error> {
    use crackfield::mesh::MeshError;
    let polyline = match (&request.polyline, request.mouth, request.tip) {
        (Some(p), None, tip) => {
            if tip.is_some_and(|t| p.last() != Some(&t)) {
                return Err(MeshError::InvalidCrack(
                    "tip differs from the last polyline point".into(),
                )
                .into());
            }
            p.clone()
        }
        (None, Some(m), Some(t)) => vec![m, t],
        _ => {
            return Err(MeshError::InvalidCrack(
                "give either a polyline or both mouth and tip".into(),
            )
            .into());
        }
    };
    let crack = Crack {
        polyline,
        q_angle: request.q_angle,
        mask: request.mask.clone(),
    };
    crack.validate()?;
    let masked = match &crack.mask {
        Some(region) => apply_mask(field, region)?.field,
        None => field.clone(),
    };
    let mesh = build_seam_mesh(&masked, &crack)?;
    Ok(CrackEcho {
        q_angle_rad: crack.q_angle(),
        snapped_chain_m: mesh.chain_points(),
        seam_pairs: mesh.seam_pairs.len(),
        masked_nodes: masked.masked_count(),
        crack,
    })
}

async fn set_crack(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<CrackEcho>, ApiError> {
    let s = state.session(&id)?;
    let request: CrackRequest = parse_json(&body)?;
    let field = s.field.clone();
    let echo = tokio::task::spawn_blocking(move || validate_crack(&field, &request))
        .await
        .map_err(|e| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "WorkerPanic",
                e.to_string(),
            )
        })?
        .map_err(|e| ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, &e))?;
    *s.crack.write().expect("crack lock") = Some(echo.clone());
    Ok(Json(echo))
}

async fn submit_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let request: JobRequest = parse_json(&body)?;
    request
        .material
        .to_material::<f64>()
        .map_err(|e| ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, &e.into()))?;
    let crack = s
        .crack
        .read()
        .expect("crack lock")
        .as_ref()
        .map(|c| c.crack.clone())
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "CrackNotSet",
                "set a crack before running a job",
            )
        })?;

    let mut active = s.active_job.lock().expect("session lock");
    if let Some(current) = active.as_deref() {
        let busy = state
            .shared
            .jobs
            .read()
            .expect("job lock")
            .get(current)
            .is_some_and(|r| {
                matches!(
                    r.lock().expect("job lock").status,
                    JobStatus::Queued | JobStatus::Running
                )
            });
        if busy {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "JobAlreadyRunning",
                format!("job {current} is still queued or running on this field"),
            ));
        }
    }
    let job_id = uuid::Uuid::new_v4().simple().to_string();
    let record = Arc::new(Mutex::new(JobRecord {
        id: job_id.clone(),
        field_id: id.clone(),
        kind: request.kind,
        status: JobStatus::Queued,
        body: None,
    }));
    let queued = QueuedJob {
        record: record.clone(),
        session: s.clone(),
        crack,
        request,
    };
    match state.shared.queue.try_send(queued) {
        Ok(()) => {}
        Err(mpsc::error::TrySendError::Full(_)) => {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "QueueFull",
                "the job queue is full; retry when a running job finishes",
            ));
        }
        Err(mpsc::error::TrySendError::Closed(_)) => {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "QueueClosed",
                "the service is shutting down",
            ));
        }
    }
    state
        .shared
        .jobs
        .write()
        .expect("job lock")
        .insert(job_id.clone(), record.clone());
    *active = Some(job_id);
    let accepted = record.lock().expect("job lock").accepted();
    Ok((StatusCode::ACCEPTED, Json(accepted)).into_response())
}

async fn get_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let record = state
        .shared
        .jobs
        .read()
        .expect("job lock")
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("job", &id))?;
    let r = record.lock().expect("job lock");
    Ok(match &r.body {
        Some(text) => {
            let code = if r.status == JobStatus::Failed {
                StatusCode::INTERNAL_SERVER_ERROR
            } else {
                StatusCode::OK
            };
            (
                code,
                [(header::CONTENT_TYPE, "application/json")],
                text.as_str().to_owned(),
            )
                .into_response()
        }
        None => Json(r.accepted()).into_response(),
    })
}
