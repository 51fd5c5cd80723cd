//! Live-session HTTP service over the recipe engine.
//!
//! `POST /sessions` opens a session, `POST /sessions/{id}/turns` plays one
//! child utterance, `GET /sessions/{id}` returns the transcript. Sessions
//! live in memory and expire after an idle period.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kidscaffold::provider::{ChatBackend, ChatMessage, ChatRequest};
use kidscaffold::recipe::{
    judging_system_text, parse_judgement, plan_reply, step, AgentReply, EngineAction, Phase, RecipeError,
    SessionState, Speaker,
};
use kidscaffold::textmetrics::{fk_grade_level, flesch_reading_ease, question_metrics, similarity, QuestionMetrics};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tokio::time::Instant;
use uuid::Uuid;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub idle_timeout: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            model_id: "gpt-4o-mini".into(),
            temperature: 0.7,
            max_output_tokens: 512,
            idle_timeout: Duration::from_secs(30 * 60),
        }
    }
}

/// Metrics of one agent turn. Similarity is measured against the child
/// utterance the turn answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnMetrics {
    pub similarity_to_child: f64,
    pub fk_reading_ease: Option<f64>,
    pub fk_grade_level: Option<f64>,
    #[serde(flatten)]
    pub questions: QuestionMetrics,
    pub latency_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnView {
    pub speaker: Speaker,
    pub text: String,
    pub timestamp: u64,
    pub action: EngineAction,
    /// Phase after the turn.
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TurnMetrics>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: Uuid,
    pub phase: Phase,
    pub fallback_count: u32,
    pub turns: Vec<TurnView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnReply {
    pub agent_text: String,
    pub action: EngineAction,
    pub phase: Phase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: Uuid,
    pub agent_text: String,
    pub action: EngineAction,
    pub phase: Phase,
}

#[derive(Debug, Deserialize)]
pub struct TurnBody {
    pub utterance: String,
}

struct Session {
    state: SessionState,
    /// Parallel to `state.transcript`.
    extras: Vec<(Phase, Option<TurnMetrics>)>,
    last_seen: Instant,
}

#[derive(Clone)]
pub struct AppState {
    backend: Arc<dyn ChatBackend>,
    options: Arc<ServeOptions>,
    sessions: Arc<std::sync::Mutex<HashMap<Uuid, Arc<Mutex<Session>>>>>,
}

enum ApiError {
    NotFound(Uuid),
    BadRequest(String),
    Provider(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(id) => (
                StatusCode::NOT_FOUND,
                serde_json::json!({"error": "session_not_found", "message": format!("no active session {id}")}),
            ),
            ApiError::BadRequest(m) => (
                StatusCode::BAD_REQUEST,
                serde_json::json!({"error": "bad_request", "message": m}),
            ),
            ApiError::Provider(m) => (
                StatusCode::BAD_GATEWAY,
                serde_json::json!({
                    "error": "provider_unavailable",
                    "message": m,
                    "retryable": true,
                    "retry_after_seconds": 2,
                }),
            ),
        };
        (status, Json(body)).into_response()
    }
}

fn now_ms() -> u64 {
    chrono::Utc::now().timestamp_millis().max(0) as u64
}

fn turn_metrics(reply: &str, child: &str, latency_seconds: f64) -> TurnMetrics {
    TurnMetrics {
        similarity_to_child: similarity(reply, child),
        fk_reading_ease: flesch_reading_ease(reply).ok(),
        fk_grade_level: fk_grade_level(reply).ok(),
        questions: question_metrics(reply),
        latency_seconds,
    }
}

fn history(state: &SessionState) -> Vec<ChatMessage> {
    state
        .transcript
        .iter()
        .map(|t| match t.speaker {
            Speaker::Child => ChatMessage::user(&t.text),
            Speaker::Agent => ChatMessage::assistant(&t.text),
        })
        .collect()
}

impl AppState {
    pub fn new(backend: Arc<dyn ChatBackend>, options: ServeOptions) -> Self {
        Self {
            backend,
            options: Arc::new(options),
            sessions: Default::default(),
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    /// Drops sessions idle for longer than the timeout.
    pub async fn sweep(&self) {
        let all: Vec<(Uuid, Arc<Mutex<Session>>)> = {
            let map = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
            map.iter().map(|(k, v)| (*k, v.clone())).collect()
        };
        let mut expired = Vec::new();
        for (id, s) in all {
            if let Ok(s) = s.try_lock() {
                if s.last_seen.elapsed() > self.options.idle_timeout {
                    expired.push(id);
                }
            }
        }
        if !expired.is_empty() {
            let mut map = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
            for id in &expired {
                map.remove(id);
            }
            tracing::debug!(count = expired.len(), "expired idle sessions");
        }
    }

    fn lookup(&self, id: Uuid) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .get(&id)
            .cloned()
            .ok_or(ApiError::NotFound(id))
    }

    fn forget(&self, id: Uuid) {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner()).remove(&id);
    }

    async fn ask(&self, system_text: String, state: &SessionState) -> Result<(String, f64), ApiError> {
        let request = ChatRequest {
            system_text: Some(system_text),
            messages: history(state),
            temperature: self.options.temperature,
            model_id: self.options.model_id.clone(),
            max_output_tokens: self.options.max_output_tokens,
            provider_meta: Default::default(),
        };
        let resp = self.backend.complete(&request).await.map_err(|e| {
            tracing::warn!(error = %e, "provider call failed");
            ApiError::Provider(e.to_string())
        })?;
        Ok((resp.text, resp.latency_seconds))
    }

    async fn play(&self, session: &mut Session, utterance: &str) -> Result<TurnReply, ApiError> {
        let now = now_ms();
        let state = &session.state;
        let (action, next, agent) = match step(state, utterance, None, now) {
            Ok((action, next)) => {
                let agent = match plan_reply(&next, action).map_err(|e| ApiError::BadRequest(e.to_string()))? {
                    AgentReply::Canned(text) => (text, 0.0),
                    AgentReply::Provider { system_text } => self.ask(system_text, &next).await?,
                };
                (action, next, agent)
            }
            Err(RecipeError::JudgementRequired(_)) => {
                // Ask the provider to judge and answer in one call; the child
                // turn is not committed until the provider succeeds.
                let mut probe = state.clone();
                probe.transcript.push(kidscaffold::recipe::TurnRecord {
                    speaker: Speaker::Child,
                    text: utterance.to_string(),
                    timestamp: now.max(state.last_timestamp()),
                    action: EngineAction::Reinforce,
                });
                let system = judging_system_text(state).map_err(|e| ApiError::BadRequest(e.to_string()))?;
                let (raw, latency) = self.ask(system, &probe).await?;
                let (verdict, text) = parse_judgement(&raw);
                if verdict.is_none() {
                    tracing::warn!("provider reply carried no judgement tag; treating the answer as incorrect");
                }
                let (action, next) = step(state, utterance, Some(verdict.unwrap_or(false)), now)
                    .map_err(|e| ApiError::BadRequest(e.to_string()))?;
                (action, next, (text, latency))
            }
            Err(e) => return Err(ApiError::BadRequest(e.to_string())),
        };
        let (text, latency) = agent;
        let next = next.with_agent_turn(text.clone(), action, now);
        session.extras.push((next.phase, None));
        session.extras.push((next.phase, Some(turn_metrics(&text, utterance, latency))));
        session.state = next;
        Ok(TurnReply {
            agent_text: text,
            action,
            phase: session.state.phase,
        })
    }
}

async fn create(State(app): State<AppState>) -> Json<CreatedSession> {
    let id = Uuid::new_v4();
    let state = SessionState::opened(now_ms());
    let opening = state.transcript[0].clone();
    let session = Session {
        extras: vec![(state.phase, None)],
        state,
        last_seen: Instant::now(),
    };
    let phase = session.state.phase;
    app.sessions
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .insert(id, Arc::new(Mutex::new(session)));
    Json(CreatedSession {
        session_id: id,
        agent_text: opening.text,
        action: opening.action,
        phase,
    })
}

async fn turn(
    State(app): State<AppState>,
    Path(id): Path<Uuid>,
    Json(body): Json<TurnBody>,
) -> Result<Json<TurnReply>, ApiError> {
    let handle = app.lookup(id)?;
    let mut session = handle.lock().await;
    if session.last_seen.elapsed() > app.options.idle_timeout {
        drop(session);
        app.forget(id);
        return Err(ApiError::NotFound(id));
    }
    if session.state.phase == Phase::Closed {
        return Err(ApiError::BadRequest("session is closed".into()));
    }
    let reply = app.play(&mut session, &body.utterance).await?;
    session.last_seen = Instant::now();
    Ok(Json(reply))
}

async fn show(State(app): State<AppState>, Path(id): Path<Uuid>) -> Result<Json<SessionView>, ApiError> {
    let handle = app.lookup(id)?;
    let mut session = handle.lock().await;
    if session.last_seen.elapsed() > app.options.idle_timeout {
        drop(session);
        app.forget(id);
        return Err(ApiError::NotFound(id));
    }
    session.last_seen = Instant::now();
    let turns = session
        .state
        .transcript
        .iter()
        .zip(&session.extras)
        .map(|(t, (phase, metrics))| TurnView {
            speaker: t.speaker,
            text: t.text.clone(),
            timestamp: t.timestamp,
            action: t.action,
            phase: *phase,
            metrics: metrics.clone(),
        })
        .collect();
    Ok(Json(SessionView {
        session_id: id,
        phase: session.state.phase,
        fallback_count: session.state.fallback_count,
        turns,
    }))
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/turns", post(turn))
        .with_state(app)
}

/// Serves until the listener fails or the process is interrupted.
pub async fn serve(listener: tokio::net::TcpListener, app: AppState) -> std::io::Result<()> {
    let sweeper = app.clone();
    let period = (app.options.idle_timeout / 2).max(Duration::from_millis(50));
    let sweep = tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.sweep().await;
        }
    });
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?addr, "serving sessions");
    let result = axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweep.abort();
    result
}
