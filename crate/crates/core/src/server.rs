//! HTTP control server: templates, profile storage, the device fetch endpoint
//! and live test sessions streaming telemetry over WebSocket.
//!
//! | method | path                              |                                   |
//! |--------|-----------------------------------|-----------------------------------|
//! | GET    | `/api/health`                     | liveness                          |
//! | GET    | `/api/templates`                  | the four template profiles        |
//! | GET    | `/api/objects`                    | scenario objects                  |
//! | GET    | `/api/records`                    | registry records                  |
//! | GET    | `/api/profiles/{tag_id}`          | saved profile, 404 if none        |
//! | PUT    | `/api/profiles/{tag_id}`          | save profile, 204                 |
//! | GET    | `/device/profile/{tag_id}`        | compact device encoding           |
//! | POST   | `/api/test/start`                 | start a live session              |
//! | POST   | `/api/test/stop`                  | stop it and get the outcome       |
//! | GET    | `/api/test/{session_id}/stream`   | WebSocket telemetry               |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc};
use tokio::task::JoinHandle;

use crate::device;
use crate::profile::{make_template, MotionProfile, TemplateKind, CONTROL_TICK_S};
use crate::registry::{ObjectRecord, Registry, RegistryError};
use crate::tag::TagId;
use crate::testbed::{Scenario, TaskRunner, TrajectorySample};

pub const DEFAULT_PORT: u16 = 7070;

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
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(serde_json::json!({ "error": self.message })),
        )
            .into_response()
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::InvalidTag(_) => ApiError::bad_request(e.to_string()),
            RegistryError::NotFound(_) => ApiError::not_found(e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    Running,
    Stopped,
}

/// Outcome summary returned when a session stops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub tag_id: TagId,
    pub completed: bool,
    pub t_complete: Option<f64>,
    pub t_end: f64,
    pub fault: Option<String>,
}

/// Server-to-client stream message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamMessage {
    Telemetry(TrajectorySample),
    Error { message: String },
}

/// Client-to-server stream message.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    UpdateProfile { profile: MotionProfile },
}

#[derive(Debug, Clone)]
enum StreamEvent {
    Tick(TrajectorySample),
    Closed(String),
}

enum Control {
    Update(MotionProfile),
    Stop,
}

struct TestSession {
    tag_id: TagId,
    state: SessionState,
    #[allow(dead_code)]
    profile: MotionProfile,
    #[allow(dead_code)]
    continuous: bool,
    control: mpsc::UnboundedSender<Control>,
    events: broadcast::Sender<StreamEvent>,
    task: Option<JoinHandle<SessionSummary>>,
}

pub struct AppState {
    registry: Registry,
    scenario: Scenario,
    sessions: Mutex<HashMap<String, TestSession>>,
    next_session: Mutex<u64>,
    tick: Duration,
}

impl AppState {
    pub fn new(registry: Registry, scenario: Scenario) -> Arc<Self> {
        Arc::new(AppState {
            registry,
            scenario,
            sessions: Mutex::new(HashMap::new()),
            next_session: Mutex::new(1),
            tick: Duration::from_secs_f64(CONTROL_TICK_S),
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/templates", get(templates))
        .route("/api/objects", get(objects))
        .route("/api/records", get(records))
        .route("/api/profiles/{tag_id}", get(get_profile).put(put_profile))
        .route("/device/profile/{tag_id}", get(device_profile))
        .route("/api/test/start", post(start_test))
        .route("/api/test/stop", post(stop_test))
        .route("/api/test/{session_id}/stream", get(stream))
        .with_state(state)
}

/// Binds `addr` and serves until `shutdown` resolves. Returns the bound
/// address through `on_bound` before serving.
pub async fn serve<F>(
    state: Arc<AppState>,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
    shutdown: F,
) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

fn parse_tag(s: &str) -> ApiResult<TagId> {
    TagId::parse(s).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn templates() -> Json<Vec<MotionProfile>> {
    Json(TemplateKind::ALL.iter().map(|k| make_template(*k)).collect())
}

async fn objects(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(&state.scenario.objects).expect("objects serialize"))
}

async fn records(State(state): State<Arc<AppState>>) -> ApiResult<Json<Vec<ObjectRecord>>> {
    Ok(Json(state.registry.list_records()?))
}

async fn get_profile(
    State(state): State<Arc<AppState>>,
    Path(tag): Path<String>,
) -> ApiResult<Json<MotionProfile>> {
    let tag = parse_tag(&tag)?;
    Ok(Json(state.registry.get_record(&tag)?.profile))
}

async fn put_profile(
    State(state): State<Arc<AppState>>,
    Path(tag): Path<String>,
    body: Bytes,
) -> ApiResult<StatusCode> {
    let tag = parse_tag(&tag)?;
    let profile: MotionProfile = parse_json(&body)?;
    let object = state
        .scenario
        .object(&tag)
        .map_err(|e| ApiError::not_found(e.to_string()))?;
    let record = ObjectRecord::new(tag, object.name.clone(), object.category, profile);
    let state = state.clone();
    tokio::task::spawn_blocking(move || state.registry.put_record(record))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(StatusCode::NO_CONTENT)
}

async fn device_profile(
    State(state): State<Arc<AppState>>,
    Path(tag): Path<String>,
) -> ApiResult<Response> {
    let tag = parse_tag(&tag)?;
    let record = state.registry.get_record(&tag)?;
    let bytes = device::encode(&record.profile)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

#[derive(Debug, Deserialize)]
struct StartRequest {
    tag_id: String,
    profile: Option<MotionProfile>,
    continuous: Option<bool>,
}

#[derive(Debug, Deserialize)]
struct StopRequest {
    session_id: String,
}

async fn start_test(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let req: StartRequest = parse_json(&body)?;
    let tag = parse_tag(&req.tag_id)?;
    let object = state
        .scenario
        .object(&tag)
        .map_err(|e| ApiError::not_found(e.to_string()))?
        .clone();
    let profile = match req.profile {
        Some(p) => p,
        None => state.registry.get_record(&tag)?.profile,
    };
    let continuous = req.continuous.unwrap_or(profile.continuous());
    let profile = profile.with_continuous(continuous);
    let mut runner = TaskRunner::new(&object, profile.clone(), state.scenario.motor)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let mut sessions = state.sessions.lock();
    if sessions
        .values()
        .any(|s| s.tag_id == tag && s.state == SessionState::Running)
    {
        return Err(ApiError::conflict(format!(
            "a test session is already running for {tag}"
        )));
    }
    let session_id = {
        let mut next = state.next_session.lock();
        let id = format!("s{}", *next);
        *next += 1;
        id
    };
    let (control, mut control_rx) = mpsc::unbounded_channel();
    let (events, _) = broadcast::channel(1024);
    let tx = events.clone();
    let period = state.tick;
    let summary_id = session_id.clone();
    let summary_tag = tag.clone();
    let task = tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        let mut reason = "session stopped".to_string();
        loop {
            tokio::select! {
                biased;
                msg = control_rx.recv() => match msg {
                    Some(Control::Update(p)) => runner.set_profile(p),
                    Some(Control::Stop) | None => break,
                },
                _ = interval.tick() => {
                    let sample = runner.tick();
                    let _ = tx.send(StreamEvent::Tick(sample));
                    if let Some(fault) = runner.fault() {
                        reason = format!("simulation fault: {fault}");
                        break;
                    }
                }
            }
        }
        let _ = tx.send(StreamEvent::Closed(reason));
        SessionSummary {
            session_id: summary_id,
            tag_id: summary_tag,
            completed: runner.completed_at().is_some(),
            t_complete: runner.completed_at(),
            t_end: runner.time(),
            fault: runner.fault().map(str::to_string),
        }
    });
    sessions.insert(
        session_id.clone(),
        TestSession {
            tag_id: tag.clone(),
            state: SessionState::Running,
            profile,
            continuous,
            control,
            events,
            task: Some(task),
        },
    );
    tracing::info!(%session_id, %tag, "test session started");
    Ok(Json(serde_json::json!({ "session_id": session_id })))
}

async fn stop_test(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<Json<SessionSummary>> {
    let req: StopRequest = parse_json(&body)?;
    let task = {
        let mut sessions = state.sessions.lock();
        let session = sessions
            .get_mut(&req.session_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown session {}", req.session_id)))?;
        if session.state != SessionState::Running {
            return Err(ApiError::conflict(format!(
                "session {} is not running",
                req.session_id
            )));
        }
        session.state = SessionState::Stopped;
        let _ = session.control.send(Control::Stop);
        session.task.take()
    };
    let task = task.ok_or_else(|| ApiError::conflict("session already stopping"))?;
    let summary = task
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    tracing::info!(session_id = %summary.session_id, completed = summary.completed, "test session stopped");
    Ok(Json(summary))
}

async fn stream(
    State(state): State<Arc<AppState>>,
    Path(session_id): Path<String>,
    ws: WebSocketUpgrade,
) -> ApiResult<Response> {
    let (events, control) = {
        let sessions = state.sessions.lock();
        let session = sessions
            .get(&session_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown session {session_id}")))?;
        if session.state != SessionState::Running {
            return Err(ApiError::conflict(format!("session {session_id} is not running")));
        }
        (session.events.subscribe(), session.control.clone())
    };
    Ok(ws.on_upgrade(move |socket| pump_stream(socket, events, control)))
}

fn text(msg: &StreamMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("stream messages serialize").into())
}

async fn pump_stream(
    socket: WebSocket,
    mut events: broadcast::Receiver<StreamEvent>,
    control: mpsc::UnboundedSender<Control>,
) {
    let (mut sink, mut incoming) = socket.split();
    loop {
        tokio::select! {
            event = events.recv() => match event {
                Ok(StreamEvent::Tick(sample)) => {
                    if sink.send(text(&StreamMessage::Telemetry(sample))).await.is_err() {
                        return;
                    }
                }
                Ok(StreamEvent::Closed(reason)) => {
                    let _ = sink
                        .send(Message::Close(Some(CloseFrame {
                            code: axum::extract::ws::close_code::NORMAL,
                            reason: reason.into(),
                        })))
                        .await;
                    return;
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::warn!(skipped = n, "telemetry subscriber lagging");
                }
                Err(broadcast::error::RecvError::Closed) => return,
            },
            msg = incoming.next() => match msg {
                Some(Ok(Message::Text(body))) => {
                    match serde_json::from_str::<ClientMessage>(body.as_str()) {
                        Ok(ClientMessage::UpdateProfile { profile }) => {
                            let _ = control.send(Control::Update(profile));
                        }
                        Err(e) => {
                            let reply = StreamMessage::Error { message: e.to_string() };
                            if sink.send(text(&reply)).await.is_err() {
                                return;
                            }
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
