//! Labeling sessions over HTTP.
//!
//! | route | |
//! |---|---|
//! | `POST /sessions` | body: a session config (empty body uses the served default); 201 `{"id", ...}` |
//! | `GET /sessions/{id}/next` | the pending query, drawing one if needed; 410 once finished |
//! | `POST /sessions/{id}/label` | body `{"id": instance, "outcome": z}` |
//! | `GET /sessions/{id}/state` | the assessment report plus `pending` and `steps` |
//!
//! With a state directory every session is kept as `<id>.config.json` plus
//! an append-only `<id>.jsonl` of steps, and reloaded on start by replaying
//! the outcomes through the engine.

mod error;
mod store;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use bayes_assess::engine::{Next, PendingQuery, Snapshot};
use bayes_assess::{build_report, Assessment, AssessmentReport, Pool, Session, SessionConfig};

pub use error::{ApiError, ErrorBody};
use store::Store;

pub type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    /// Used when `POST /sessions` has an empty body.
    pub default_config: Option<SessionConfig>,
    /// When set, every request needs `Authorization: Bearer <token>`.
    pub token: Option<String>,
    pub state_dir: Option<PathBuf>,
}

struct Live {
    session: Session,
    store: Option<store::SessionLog>,
}

struct Inner {
    pool: Pool,
    options: ServiceOptions,
    store: Option<Store>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Live>>>>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct App {
    inner: Arc<Inner>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub config_digest: String,
    pub arms: Vec<String>,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRequest {
    /// Instance id of the pending query.
    pub id: String,
    /// 0/1 for correctness, the true class otherwise.
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelResponse {
    pub step: usize,
    pub group: usize,
    pub outcome: usize,
    pub duplicate: bool,
    /// Updated posterior of the slot the label went to.
    pub posterior: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateResponse {
    pub session: String,
    pub steps: usize,
    pub pending: Option<PendingQuery>,
    #[serde(flatten)]
    pub report: AssessmentReport,
}

impl App {
    /// Loads any sessions persisted under the state directory.
    pub fn new(pool: Pool, options: ServiceOptions) -> bayes_assess::Result<Self> {
        let store = options.state_dir.clone().map(Store::open).transpose()?;
        let mut sessions = HashMap::new();
        if let Some(store) = &store {
            for (id, cfg, steps) in store.load()? {
                let assessment = Arc::new(Assessment::from_config(&pool, cfg)?);
                let seed = assessment.config().seed;
                let mut session = Session::new(assessment, seed);
                store::restore(&mut session, &steps)?;
                let log = store.append(&id)?;
                sessions.insert(
                    id,
                    Arc::new(Mutex::new(Live {
                        session,
                        store: Some(log),
                    })),
                );
            }
            log::info!("restored {} sessions", sessions.len());
        }
        Ok(App {
            inner: Arc::new(Inner {
                pool,
                options,
                store,
                sessions: RwLock::new(sessions),
            }),
        })
    }

    pub fn router(self) -> Router {
        Router::new()
            .route("/sessions", post(create_session))
            .route("/sessions/{id}/next", get(next_query))
            .route("/sessions/{id}/label", post(submit_label))
            .route("/sessions/{id}/state", get(get_state))
            .with_state(self)
    }

    fn authorize(&self, headers: &HeaderMap) -> ApiResult<()> {
        let Some(token) = &self.inner.options.token else {
            return Ok(());
        };
        let given = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given == Some(token.as_str()) {
            Ok(())
        } else {
            Err(ApiError::unauthorized())
        }
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Live>>> {
        self.inner
            .sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, app: App) -> std::io::Result<()> {
    axum::serve(listener, app.router()).await
}

fn lock(live: &Mutex<Live>) -> std::sync::MutexGuard<'_, Live> {
    live.lock().unwrap_or_else(|e| e.into_inner())
}

/// Runs CPU-bound session work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    })?
}

async fn create_session(
    State(app): State<App>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Created>)> {
    app.authorize(&headers)?;
    let cfg = if body.iter().all(u8::is_ascii_whitespace) {
        app.inner.options.default_config.clone().ok_or_else(|| {
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", "no config given and no default")
        })?
    } else {
        serde_json::from_slice::<SessionConfig>(&body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string()))?
    };
    let created = blocking(move || {
        let assessment = Arc::new(Assessment::from_config(&app.inner.pool, cfg)?);
        let id = uuid::Uuid::new_v4().simple().to_string();
        let store = match &app.inner.store {
            Some(s) => Some(s.create(&id, assessment.config())?),
            None => None,
        };
        let created = Created {
            id: id.clone(),
            config_digest: assessment.config().digest(),
            arms: assessment.arms().iter().map(|a| a.name.clone()).collect(),
            budget: assessment.config().budget.limit(),
        };
        let seed = assessment.config().seed;
        let live = Live {
            session: Session::new(assessment, seed),
            store,
        };
        app.inner
            .sessions
            .write()
            .expect("session map poisoned")
            .insert(id, Arc::new(Mutex::new(live)));
        Ok(created)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_query(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<PendingQuery>> {
    app.authorize(&headers)?;
    let live = app.session(&id)?;
    blocking(move || match lock(&live).session.next_query()? {
        Next::Query(q) => Ok(Json(q)),
        Next::Done(reason) => Err(ApiError::terminal(reason)),
    })
    .await
}

async fn submit_label(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<LabelResponse>> {
    app.authorize(&headers)?;
    let live = app.session(&id)?;
    let req: LabelRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?;
    blocking(move || {
        let mut guard = lock(&live);
        let live = &mut *guard;
        let done = live.session.submit(&req.id, req.outcome)?;
        if !done.duplicate {
            if let Some(log) = &mut live.store {
                log.push(&done.step)?;
            }
        }
        Ok(Json(LabelResponse {
            step: done.step.i,
            group: done.step.group,
            outcome: done.step.z,
            duplicate: done.duplicate,
            posterior: done.step.post,
        }))
    })
    .await
}

async fn get_state(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<StateResponse>> {
    app.authorize(&headers)?;
    let live = app.session(&id)?;
    blocking(move || {
        let guard = lock(&live);
        let s = &guard.session;
        let report = build_report(s.assessment(), s.beliefs(), s.steps().len(), s.terminal())?;
        Ok(Json(StateResponse {
            session: id,
            steps: s.steps().len(),
            pending: s.pending().cloned(),
            report,
        }))
    })
    .await
}
