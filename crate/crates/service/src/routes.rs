use std::sync::Arc;

use axum::body::to_bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use pcorder_core::data::read_csv;
use pcorder_core::ordering::OrderingMode;
use pcorder_core::report::OrderReport;
use pcorder_core::{
    Analysis, AnalysisConfig, Execution, Session, Weights, WindowProfile, WindowSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::state::{AppState, JobStatus};

pub const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

type Shared = State<Arc<AppState>>;
type ApiResult<T = Response> = Result<T, ApiError>;

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::unprocessable("malformed_query", e.body_text()))
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v)
        .map_err(|e| ApiError::unprocessable("malformed_body", e.body_text()))
}

fn to_json<T: Serialize>(v: &T) -> ApiResult<Value> {
    serde_json::to_value(v).map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "serialization",
            e.to_string(),
        )
    })
}

fn parse<T: std::str::FromStr>(raw: &str, code: &str, what: &str) -> ApiResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| ApiError::unprocessable(code, format!("invalid {what} `{raw}`")))
}

/// Query parameters shared by every endpoint that needs an analysis. Kept as
/// strings so that each malformed value maps onto its own error code.
#[derive(Debug, Default, Deserialize)]
pub struct AnalysisParams {
    pub weights: Option<String>,
    pub window: Option<String>,
    pub stride: Option<String>,
    pub seed: Option<String>,
    pub permutations: Option<String>,
}

impl AnalysisParams {
    pub fn config(&self) -> ApiResult<AnalysisConfig> {
        let window: f64 = match &self.window {
            Some(w) => parse(w, "invalid_window", "window")?,
            None => {
                return Err(ApiError::unprocessable(
                    "invalid_window",
                    "window is required",
                ))
            }
        };
        let spec = match &self.stride {
            Some(s) => WindowSpec::new(window, parse(s, "invalid_window", "stride")?)?,
            None => WindowSpec::with_window(window)?,
        };
        let seed: u64 = match &self.seed {
            Some(s) => parse(s, "invalid_seed", "seed")?,
            None => return Err(ApiError::unprocessable("missing_seed", "seed is required")),
        };
        let mut config = AnalysisConfig::new(spec, seed);
        if let Some(p) = &self.permutations {
            config = config.with_permutations(parse(p, "malformed_query", "permutations")?);
        }
        config.validate()?;
        Ok(config)
    }

    /// Parsed weights; a missing parameter means every weight is zero.
    pub fn weights(&self) -> ApiResult<Weights> {
        Ok(self.weights.as_deref().unwrap_or("").parse::<Weights>()?)
    }
}

/// Runs `f` on the analysis for `(dataset_id, config)`. When the analysis is
/// not cached and its estimated cost exceeds the sync budget, the work moves
/// to a background job and the response is `202` with the job id.
async fn with_analysis<F>(
    state: Arc<AppState>,
    dataset_id: String,
    config: AnalysisConfig,
    f: F,
) -> ApiResult
where
    F: FnOnce(&AppState, Arc<Analysis>) -> ApiResult<Value> + Send + 'static,
{
    let stored = state.dataset(&dataset_id)?;
    let work = config.estimated_invocations(stored.dataset.dims());
    let cached = state.cached(&dataset_id, &config).is_some();
    if !cached && work > state.config.max_sync_work {
        let job = state.new_job();
        let job_id = job.clone();
        tokio::task::spawn_blocking(move || {
            let out = state
                .analysis(&dataset_id, &config)
                .and_then(|a| f(&state, a));
            state.finish_job(&job, out);
        });
        let body =
            json!({ "job_id": job_id, "status": "pending", "poll": format!("/jobs/{job_id}") });
        return Ok((StatusCode::ACCEPTED, Json(body)).into_response());
    }
    let value = tokio::task::spawn_blocking(move || {
        state
            .analysis(&dataset_id, &config)
            .and_then(|a| f(&state, a))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(value).into_response())
}

#[derive(Debug, Default, Deserialize)]
pub struct UploadParams {
    pub name: Option<String>,
    /// Comma-separated column selection.
    pub columns: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadResponse {
    pub dataset_id: String,
    pub dims: Vec<String>,
    pub row_count: usize,
    pub dropped_rows: usize,
    pub skipped_columns: Vec<String>,
}

pub async fn upload(
    State(state): Shared,
    q: Result<Query<UploadParams>, QueryRejection>,
    req: Request,
) -> ApiResult<Json<UploadResponse>> {
    let mut params = query(q)?;
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let bytes = if is_multipart {
        let mut mp = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::bad_request("malformed_upload", e.body_text()))?;
        let mut csv = None;
        while let Some(field) = mp
            .next_field()
            .await
            .map_err(|e| ApiError::bad_request("malformed_upload", e.body_text()))?
        {
            let name = field.name().unwrap_or_default().to_string();
            let is_file = field.file_name().is_some() || name == "file";
            let data = field
                .bytes()
                .await
                .map_err(|e| ApiError::bad_request("malformed_upload", e.body_text()))?;
            let text = || String::from_utf8_lossy(&data).into_owned();
            match name.as_str() {
                "name" if !is_file => params.name = Some(text()),
                "columns" if !is_file => params.columns = Some(text()),
                _ if is_file && csv.is_none() => csv = Some(data),
                _ => {}
            }
        }
        csv.ok_or_else(|| ApiError::bad_request("malformed_upload", "no file field in upload"))?
    } else {
        to_bytes(req.into_body(), MAX_UPLOAD_BYTES)
            .await
            .map_err(|e| ApiError::bad_request("malformed_upload", e.to_string()))?
    };
    let columns: Option<Vec<String>> = params.columns.as_deref().map(|c| {
        c.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    });
    let name = params.name.unwrap_or_else(|| "upload".to_string());
    let report = read_csv(&name, bytes.as_ref(), columns.as_deref())?;
    let dims = report.dataset.names();
    let row_count = report.dataset.row_count();
    let dataset_id = state.add_dataset(report.dataset, report.dropped_rows);
    Ok(Json(UploadResponse {
        dataset_id,
        dims,
        row_count,
        dropped_rows: report.dropped_rows,
        skipped_columns: report.skipped_columns,
    }))
}

pub async fn matrix(
    State(state): Shared,
    Path(id): Path<String>,
    q: Result<Query<AnalysisParams>, QueryRejection>,
) -> ApiResult {
    let params = query(q)?;
    let config = params.config()?;
    let weights = params.weights()?;
    weights.require_active()?;
    with_analysis(state, id, config, move |_, a| to_json(&a.matrix(&weights)?)).await
}

#[derive(Debug, Deserialize)]
pub struct PairParams {
    pub i: Option<String>,
    pub j: Option<String>,
    #[serde(flatten)]
    pub analysis: AnalysisParams,
}

/// A profile together with the rows in each of its windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileResponse {
    #[serde(flatten)]
    pub profile: WindowProfile,
    pub member_rows: Vec<Vec<usize>>,
}

pub async fn profile(
    State(state): Shared,
    Path(id): Path<String>,
    q: Result<Query<PairParams>, QueryRejection>,
) -> ApiResult {
    let params = query(q)?;
    let axis = |v: &Option<String>, name: &str| -> ApiResult<usize> {
        match v {
            Some(s) => parse(s, "malformed_query", name),
            None => Err(ApiError::unprocessable(
                "malformed_query",
                format!("{name} is required"),
            )),
        }
    };
    let (i, j) = (axis(&params.i, "i")?, axis(&params.j, "j")?);
    let config = params.analysis.config()?;
    with_analysis(state, id, config, move |_, a| {
        let profile = a.profile(i, j)?.clone();
        let member_rows = a
            .windows(i)
            .unwrap_or_default()
            .iter()
            .map(|w| w.member_rows.clone())
            .collect();
        to_json(&ProfileResponse {
            profile,
            member_rows,
        })
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct OrderParams {
    pub mode: Option<String>,
    #[serde(flatten)]
    pub analysis: AnalysisParams,
}

pub async fn order(
    State(state): Shared,
    Path(id): Path<String>,
    q: Result<Query<OrderParams>, QueryRejection>,
) -> ApiResult {
    let params = query(q)?;
    let mode: OrderingMode = params.mode.as_deref().unwrap_or("tsp").parse()?;
    let config = params.analysis.config()?;
    let weights = params.analysis.weights()?;
    weights.require_active()?;
    with_analysis(state, id, config, move |_, a| {
        to_json(&OrderReport::build(
            &a,
            &weights,
            mode,
            Execution::default(),
        )?)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct RowParams {
    pub indices: Option<String>,
}

pub async fn rows(
    State(state): Shared,
    Path(id): Path<String>,
    q: Result<Query<RowParams>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let params = query(q)?;
    let stored = state.dataset(&id)?;
    let ds = &stored.dataset;
    let indices: Vec<usize> = match params.indices.as_deref().map(str::trim) {
        None | Some("") => (0..ds.row_count()).collect(),
        Some(list) => list
            .split(',')
            .map(|s| parse(s, "malformed_query", "row index"))
            .collect::<ApiResult<_>>()?,
    };
    let rows = indices
        .iter()
        .map(|&r| {
            ds.normalized_row(r).ok_or_else(|| {
                ApiError::bad_request("row_out_of_range", format!("row {r} out of range"))
                    .with_detail(json!({ "row": r, "row_count": ds.row_count() }))
            })
        })
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(Json(json!({ "indices": indices, "rows": rows })))
}

#[derive(Debug, Deserialize)]
pub struct StartSession {
    pub dataset_id: String,
    #[serde(default)]
    pub weights: String,
    pub window: f64,
    pub stride: Option<f64>,
    pub seed: Option<u64>,
    pub permutations: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResponse {
    pub session_id: String,
    pub state: pcorder_core::session::SessionState,
    pub matrix: pcorder_core::ScoreMatrix,
}

fn session_response(session: &Session, matrix: pcorder_core::ScoreMatrix) -> ApiResult<Value> {
    to_json(&SessionResponse {
        session_id: session.id().to_string(),
        state: session.state().clone(),
        matrix,
    })
}

pub async fn start_session(
    State(state): Shared,
    b: Result<Json<StartSession>, JsonRejection>,
) -> ApiResult {
    let req = body(b)?;
    let params = AnalysisParams {
        weights: Some(req.weights.clone()),
        window: Some(req.window.to_string()),
        stride: req.stride.map(|s| s.to_string()),
        seed: req.seed.map(|s| s.to_string()),
        permutations: req.permutations.map(|p| p.to_string()),
    };
    let config = params.config()?;
    let weights = params.weights()?;
    weights.require_active()?;
    let dataset_id = req.dataset_id.clone();
    with_analysis(state, req.dataset_id, config, move |state, a| {
        let (session, matrix) = Session::start(state.new_session_id(), dataset_id, a, weights)?;
        let out = session_response(&session, matrix)?;
        state.add_session(session);
        Ok(out)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct ChoosePair {
    pub i: usize,
    pub j: usize,
}

pub async fn choose(
    State(state): Shared,
    Path(id): Path<String>,
    b: Result<Json<ChoosePair>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let pair = body(b)?;
    let session = state.session(&id)?;
    let mut s = session.lock().unwrap();
    let matrix = s.choose_pair(pair.i, pair.j)?;
    Ok(Json(session_response(&s, matrix)?))
}

#[derive(Debug, Deserialize)]
pub struct SetWeights {
    pub weights: String,
}

pub async fn set_weights(
    State(state): Shared,
    Path(id): Path<String>,
    b: Result<Json<SetWeights>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let req = body(b)?;
    let weights: Weights = req.weights.parse()?;
    let session = state.session(&id)?;
    let mut s = session.lock().unwrap();
    let matrix = s.set_weights(weights)?;
    Ok(Json(session_response(&s, matrix)?))
}

pub async fn undo(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let mut s = session.lock().unwrap();
    let matrix = s.undo()?;
    Ok(Json(session_response(&s, matrix)?))
}

pub async fn finalize(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let s = session.lock().unwrap();
    Ok(Json(to_json(&s.finalize()?)?))
}

pub async fn job(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let status = state.job(&id)?;
    let mut v = to_json(&status)?;
    v["job_id"] = Value::String(id);
    if let JobStatus::Failed { error } = &status {
        v["http_status"] = json!(error.status);
    }
    Ok(Json(v))
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_route", "no such endpoint")
}
