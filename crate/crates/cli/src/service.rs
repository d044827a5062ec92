//! Live game service.
//!
//! Each session owns one [`LiveGameState`]; events are applied under the
//! session lock, and every accepted event publishes a numbered snapshot to
//! the session's broadcast channel. Real-valued payload fields are decimal
//! strings that parse back to the exact `f64`.

use std::collections::{BTreeMap, HashMap};
use std::convert::Infallible;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast;

use tflow_core::data::fmt_f64;
use tflow_core::flow::{iof, select_delta, IofResult, DEFAULT_K_TARGET};
use tflow_core::live::{LiveEvent, LiveGameState};
use tflow_core::process::DEFAULT_GRID_R;
use tflow_core::{Error, FittedModel, MatchContext, ScoreAnchor};

const STREAM_BUFFER: usize = 256;

pub struct AppState {
    models: BTreeMap<String, FittedModel>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

struct Session {
    id: String,
    state: LiveGameState,
    seq: u64,
    tx: broadcast::Sender<Arc<String>>,
}

impl AppState {
    pub fn new(models: BTreeMap<String, FittedModel>) -> Arc<Self> {
        Arc::new(AppState {
            models,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    category: String,
    message: String,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            category: "NotFound".into(),
            message,
        }
    }

    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            category: "ParseError".into(),
            message,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::IllegalSub(_) | Error::ClockExhausted | Error::NothingToUndo => {
                StatusCode::CONFLICT
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError {
            status,
            category: e.category().to_string(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "category": self.category, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

/// Accepts a JSON number or a decimal string.
fn number(v: &Value, field: &str) -> Result<f64, ApiError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    };
    x.filter(|x| x.is_finite())
        .ok_or_else(|| ApiError::bad_request(format!("`{field}` must be a number")))
}

#[derive(Deserialize)]
struct CreateSession {
    model: String,
    opponent_tfs: Value,
    #[serde(default)]
    grid_r: Option<usize>,
    #[serde(default)]
    anchor: Option<String>,
    #[serde(default)]
    theta: Option<Value>,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let model = app
        .models
        .get(&req.model)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no model `{}`", req.model)))?;
    let opponent_tfs = number(&req.opponent_tfs, "opponent_tfs")?;
    let anchor: ScoreAnchor = match req.anchor.as_deref() {
        Some(a) => a.parse()?,
        None => ScoreAnchor::Score,
    };
    let theta = req.theta.as_ref().map(|v| number(v, "theta")).transpose()?;
    let ctx = MatchContext::new(model, opponent_tfs, req.grid_r.unwrap_or(DEFAULT_GRID_R))?;
    let state = LiveGameState::new(ctx, anchor, theta)?;
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    let (tx, _) = broadcast::channel(STREAM_BUFFER);
    let session = Session {
        id: id.clone(),
        state,
        seq: 0,
        tx,
    };
    let snapshot = snapshot(&session, None);
    app.sessions
        .lock()
        .expect("session table lock")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session_id": id, "snapshot": snapshot })),
    ))
}

async fn post_event(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<LiveEvent>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(event) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let session = app.session(&id)?;
    let mut s = session.lock().expect("session lock");
    s.state.apply(event)?;
    s.seq += 1;
    let snap = snapshot(&s, None);
    // No subscribers is fine.
    let _ = s.tx.send(Arc::new(snap.to_string()));
    Ok(Json(snap))
}

#[derive(Deserialize)]
struct StateQuery {
    theta: Option<f64>,
    k_target: Option<usize>,
}

async fn get_state(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<StateQuery>,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let s = session.lock().expect("session lock");
    let fire = match (q.theta, q.k_target) {
        (None, None) => None,
        (theta, k) => {
            let path = s.state.process_path();
            let theta = match theta {
                Some(t) => t,
                None => select_delta(&path, k.unwrap_or(DEFAULT_K_TARGET))?,
            };
            Some(iof(&path, theta))
        }
    };
    Ok(Json(snapshot(&s, fire)))
}

async fn stream(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let session = app.session(&id)?;
    let (first, rx) = {
        let s = session.lock().expect("session lock");
        (snapshot(&s, None).to_string(), s.tx.subscribe())
    };
    let events = futures::stream::unfold((Some(first), rx), |(first, mut rx)| async move {
        if let Some(text) = first {
            return Some((
                Ok(Event::default().event("snapshot").data(text)),
                (None, rx),
            ));
        }
        loop {
            match rx.recv().await {
                Ok(text) => {
                    return Some((
                        Ok(Event::default().event("snapshot").data(text.as_str())),
                        (None, rx),
                    ))
                }
                // A slow reader skips ahead; sequence numbers expose the gap.
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

fn num(x: f64) -> Value {
    Value::String(fmt_f64(x))
}

fn snapshot(s: &Session, fire_override: Option<IofResult>) -> Value {
    let st = &s.state;
    let ctx = st.context();
    let stat_ids = &ctx.model.stat_ids;
    let path: Vec<Value> = st
        .path()
        .iter()
        .map(|p| {
            json!({
                "t": num(p.t),
                "a": num(p.score.a),
                "b": num(p.score.b),
                "mt": num(p.mt),
                "t_star": num(p.t_star),
                "pw": num(p.pw),
                "sensitivity": p.sensitivity.iter().map(|x| num(*x)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let last = st.path().last().expect("path starts at tip-off");
    let sensitivity: serde_json::Map<String, Value> = stat_ids
        .iter()
        .zip(&last.sensitivity)
        .map(|(id, x)| (id.clone(), num(*x)))
        .collect();
    let fire = fire_override.or_else(|| st.iof_so_far());
    let iof_value = fire.map_or(Value::Null, |f| {
        json!({
            "theta": num(f.threshold_theta),
            "steps": f.steps,
            "intervals": f.intervals().iter().map(|(a, b)| json!([num(*a), num(*b)])).collect::<Vec<_>>(),
        })
    });
    let stints: serde_json::Map<String, Value> = st
        .stints()
        .into_iter()
        .map(|(p, v)| {
            (
                p,
                v.iter().map(|(a, b)| json!([num(*a), num(*b)])).collect(),
            )
        })
        .collect();
    json!({
        "session_id": s.id,
        "seq": s.seq,
        "step": st.step(),
        "grid_r": ctx.grid_r,
        "t": num(st.time()),
        "score": { "a": num(st.score().a), "b": num(st.score().b) },
        "team_stats": st.team_stats().iter().map(|(k, v)| (k.clone(), num(*v))).collect::<serde_json::Map<_, _>>(),
        "player_stats": st.player_stats().iter().map(|(p, m)| {
            (p.clone(), Value::Object(m.iter().map(|(k, v)| (k.clone(), num(*v))).collect()))
        }).collect::<serde_json::Map<_, _>>(),
        "on_court": st.on_court().iter().collect::<Vec<_>>(),
        "stints": stints,
        "stat_ids": stat_ids,
        "current": {
            "mt": num(last.mt),
            "t_star": num(last.t_star),
            "pw": num(last.pw),
            "sensitivity": sensitivity,
        },
        "path": path,
        "iof": iof_value,
        "events_applied": st.events_applied(),
    })
}

/// Loads every `*.json` model in `dir`, keyed by file stem.
pub fn load_models(dir: &std::path::Path) -> tflow_core::Result<BTreeMap<String, FittedModel>> {
    let mut out = BTreeMap::new();
    let entries =
        std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::Io(e.to_string()))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem() {
                out.insert(
                    stem.to_string_lossy().into_owned(),
                    tflow_core::data::load_model(&path)?,
                );
            }
        }
    }
    Ok(out)
}

pub async fn serve(addr: &str, models: BTreeMap<String, FittedModel>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(models))).await
}
