//! HTTP/JSON facade over fitting, rollout and correction, with in-memory
//! named sessions.
//!
//! Endpoints:
//!
//! ```text
//! POST /sessions                      -> {id}
//! GET  /sessions/{id}                 -> inventory
//! POST /sessions/{id}/trajectories    {name, dt, samples}
//! POST /sessions/{id}/fit             {trajectory, n_basis?, gains?, tau?, name?}
//! POST /sessions/{id}/rollout         {dmp, start?, dt?, duration?, name?}
//! POST /sessions/{id}/correct         {deficient, corrective, cut, lambda?, n_basis?, gains?, name?}
//! ```
//!
//! Malformed bodies get 400, unknown sessions or names 404, rejected inputs
//! 422 and numerical failures 500. Error bodies are
//! `{"error": {"reason", "message"}}`.

pub mod api;
pub mod store;

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dmpcorr_core::dmp::DEFAULT_DT;
use dmpcorr_core::{
    correct, fit, rollout, BlendConfig, CorrectionRequest, DmpParams, ErrorClass, FitOptions,
    Trajectory,
};
use serde::de::DeserializeOwned;
use uuid::Uuid;

use api::*;
use store::{Session, SessionStore, StoreConfig};

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 32 << 20;

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: SessionStore,
}

impl AppState {
    pub fn new(config: StoreConfig) -> Self {
        Self {
            store: SessionStore::new(config),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(inventory))
        .route("/sessions/{id}/trajectories", post(upload))
        .route("/sessions/{id}/fit", post(fit_handler))
        .route("/sessions/{id}/rollout", post(rollout_handler))
        .route("/sessions/{id}/correct", post(correct_handler))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
        })
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    reason: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, reason: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            reason: reason.into(),
            message: message.into(),
        }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session `{id}`"),
        )
    }
}

impl From<dmpcorr_core::Error> for ApiError {
    fn from(e: dmpcorr_core::Error) -> Self {
        let status = match e.class() {
            ErrorClass::Data => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::Numeric | ErrorClass::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                reason: self.reason,
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

/// `Json` with every rejection reported as 400.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(rejection) => {
                let reason = match &rejection {
                    JsonRejection::MissingJsonContentType(_) => "unsupported_content_type",
                    JsonRejection::JsonSyntaxError(_) => "malformed_json",
                    JsonRejection::JsonDataError(_) => "invalid_body",
                    _ => "unreadable_body",
                };
                Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    reason,
                    rejection.body_text(),
                ))
            }
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn session_id(raw: &str) -> Result<Uuid, ApiError> {
    Uuid::parse_str(raw).map_err(|_| ApiError::unknown_session(raw))
}

fn with_session<T>(
    state: &AppState,
    raw: &str,
    f: impl FnOnce(&mut Session) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    let id = session_id(raw)?;
    state
        .store
        .with(id, f)
        .unwrap_or_else(|| Err(ApiError::unknown_session(raw)))
}

fn check_name(name: &str) -> Result<(), ApiError> {
    if name.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_argument",
            "names must be non-empty",
        ));
    }
    Ok(())
}

fn resolve_trajectory(session: &Session, r: &TrajectoryRef) -> Result<Arc<Trajectory>, ApiError> {
    match r {
        TrajectoryRef::Named(name) => session.trajectories.get(name).cloned().ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_trajectory",
                format!("no trajectory named `{name}` in this session"),
            )
        }),
        TrajectoryRef::Inline(body) => Ok(Arc::new(Trajectory::new(body.dt, &body.samples)?)),
    }
}

fn resolve_dmp(session: &Session, r: &DmpRef) -> Result<Arc<DmpParams>, ApiError> {
    match r {
        DmpRef::Named(name) => session.dmps.get(name).cloned().ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_dmp",
                format!("no DMP named `{name}` in this session"),
            )
        }),
        DmpRef::Inline(p) => {
            p.validate()?;
            Ok(Arc::new((**p).clone()))
        }
    }
}

/// Runs numerical work off the async executor.
async fn compute<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn fit_options(
    n_basis: Option<usize>,
    gains: Option<dmpcorr_core::Gains>,
    tau: Option<f64>,
) -> FitOptions {
    let mut opts = FitOptions::default();
    if let Some(n) = n_basis {
        opts.n_basis = n;
    }
    if let Some(g) = gains {
        opts.gains = g;
    }
    opts.tau = tau;
    opts
}

async fn create_session(State(state): State<AppState>) -> Json<SessionCreated> {
    Json(SessionCreated {
        id: state.store.create().to_string(),
    })
}

async fn inventory(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Inventory> {
    with_session(&state, &id, |s| {
        Ok(Json(Inventory {
            id: id.clone(),
            created_at: s.created_at,
            trajectories: s
                .trajectories
                .iter()
                .map(|(name, t)| TrajectorySummary {
                    name: name.clone(),
                    dims: t.dims(),
                    len: t.len(),
                    dt: t.dt(),
                })
                .collect(),
            dmps: s
                .dmps
                .iter()
                .map(|(name, p)| DmpSummary {
                    name: name.clone(),
                    dims: p.dims,
                    n_basis: p.n_basis,
                    tau: p.tau,
                })
                .collect(),
        }))
    })
}

async fn upload(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<UploadRequest>,
) -> ApiResult<TrajectorySummary> {
    session_id(&id)?;
    check_name(&req.name)?;
    let traj = Trajectory::new(req.dt, &req.samples)?;
    let summary = TrajectorySummary {
        name: req.name.clone(),
        dims: traj.dims(),
        len: traj.len(),
        dt: traj.dt(),
    };
    with_session(&state, &id, |s| {
        s.trajectories.insert(req.name, Arc::new(traj));
        Ok(Json(summary))
    })
}

async fn fit_handler(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<FitRequest>,
) -> ApiResult<DmpParams> {
    if let Some(name) = &req.name {
        check_name(name)?;
    }
    let demo = with_session(&state, &id, |s| resolve_trajectory(s, &req.trajectory))?;
    let opts = fit_options(req.n_basis, req.gains, req.tau);
    let params = compute(move || Ok(fit(&demo, &opts)?)).await?;
    if let Some(name) = req.name {
        with_session(&state, &id, |s| {
            s.dmps.insert(name, Arc::new(params.clone()));
            Ok(())
        })?;
    }
    Ok(Json(params))
}

async fn rollout_handler(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<RolloutRequest>,
) -> ApiResult<TrajectoryBody> {
    if let Some(name) = &req.name {
        check_name(name)?;
    }
    let params = with_session(&state, &id, |s| resolve_dmp(s, &req.dmp))?;
    let (start, dt, duration) = (req.start, req.dt, req.duration);
    let traj = compute(move || {
        let start = start.unwrap_or_else(|| params.start.clone());
        let duration = duration.unwrap_or(1.5 * params.tau);
        Ok(rollout(
            &params,
            &start,
            dt.unwrap_or(DEFAULT_DT),
            duration,
        )?)
    })
    .await?;
    let body = TrajectoryBody::from(&traj);
    if let Some(name) = req.name {
        with_session(&state, &id, |s| {
            s.trajectories.insert(name, Arc::new(traj));
            Ok(())
        })?;
    }
    Ok(Json(body))
}

async fn correct_handler(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<CorrectRequest>,
) -> ApiResult<CorrectResponse> {
    if let Some(name) = &req.name {
        check_name(name)?;
    }
    let (deficient, corrective) = with_session(&state, &id, |s| {
        Ok((
            resolve_trajectory(s, &req.deficient)?,
            resolve_trajectory(s, &req.corrective)?,
        ))
    })?;
    let blend = match req.lambda {
        Some(l) => BlendConfig::new(l)?,
        None => BlendConfig::default(),
    };
    let fit_opts = fit_options(req.n_basis, req.gains, None);
    let cut = req.cut;
    let outcome = compute(move || {
        let mut request = CorrectionRequest::new((*deficient).clone(), (*corrective).clone(), cut);
        request.blend = blend;
        request.fit = fit_opts;
        Ok(correct(&request)?)
    })
    .await?;

    let response = CorrectResponse {
        merged: TrajectoryBody::from(&outcome.merged),
        dmp: outcome.modified_dmp.clone(),
        split: Split {
            m: outcome.split.deficient_cut + 1,
            d_m: outcome.split.min_distance,
            deficient_cut: outcome.split.deficient_cut,
            corrective_cut: outcome.split.corrective_cut,
        },
        diagnostics: Diagnostics {
            junction: outcome.junction,
            objective_value: outcome.blend.objective_value,
            max_constraint_residual: outcome.blend.max_constraint_residual(),
            stationarity: outcome.blend.stationarity,
            blend_solve_time_ms: outcome.blend_solve_time.as_secs_f64() * 1e3,
        },
    };
    if let Some(name) = req.name {
        with_session(&state, &id, |s| {
            s.trajectories
                .insert(name.clone(), Arc::new(outcome.merged));
            s.dmps.insert(name, Arc::new(outcome.modified_dmp));
            Ok(())
        })?;
    }
    Ok(Json(response))
}
