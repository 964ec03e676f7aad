use std::collections::HashMap;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use amq_core::corpus::{normalize_name, GoldSet};
use amq_core::evaluation::Grid;
use amq_core::lexical::rank_lexical;
use amq_core::pipeline::{run_query, EmbeddingProvider, PipelineConfig, ProbeTable, QueryInput};
use amq_core::report::emit_reports;
use amq_core::study::run_study;
use amq_core::TermCode;

use crate::error::ApiError;
use crate::runs::{EvalRequest, EvalRun, RunStatus};
use crate::session::{new_session_id, DecisionState, ExportFormat, ReviewSession};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

const DEFAULT_SEARCH_LIMIT: usize = 20;
const MAX_SEARCH_LIMIT: usize = 1000;

pub(crate) fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/queries", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/threshold", patch(set_threshold))
        .route("/api/sessions/{id}/decisions/{code}", put(set_decision))
        .route("/api/sessions/{id}/finalize", post(finalize))
        .route("/api/sessions/{id}/export", get(export))
        .route("/api/dictionary/terms", get(search_terms))
        .route("/api/eval/runs", post(start_run))
        .route("/api/eval/runs/{id}", get(get_run))
}

/// Strict JSON body parsing: malformed JSON, wrong types and unknown
/// fields are all 400s that name the problem.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

fn session_json(s: &ReviewSession) -> serde_json::Value {
    json!({ "session": s.view() })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let input: QueryInput = parse_body(&body)?;
    input.validate().map_err(ApiError::pipeline)?;
    let st = state.clone();
    let session = blocking(move || {
        let c = st.corpus();
        let result =
            run_query(&input, &c.dictionary, &c.store, &c.probes).map_err(ApiError::pipeline)?;
        Ok::<_, ApiError>(ReviewSession::new(new_session_id(), input, result))
    })
    .await??;
    let shared = state.insert_session(session)?;
    let s = shared.lock().expect("session poisoned");
    Ok((StatusCode::CREATED, Json(session_json(&s))).into_response())
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let shared = state.session(&id)?;
    let s = shared.lock().expect("session poisoned");
    Ok(Json(session_json(&s)))
}

/// Applies `f` to a copy of the session, persists the copy, then swaps it
/// in. A failed mutation or write leaves both memory and disk unchanged.
fn mutate(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut ReviewSession) -> ApiResult<()>,
) -> ApiResult<Json<serde_json::Value>> {
    let shared = state.session(id)?;
    let mut guard = shared.lock().expect("session poisoned");
    let mut next = guard.clone();
    f(&mut next)?;
    state.persist_session(&next)?;
    *guard = next;
    Ok(Json(session_json(&guard)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdBody {
    threshold: f64,
}

async fn set_threshold(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    // look the session up first so an unknown id is a 404 whatever the body
    state.session(&id)?;
    let ThresholdBody { threshold } = parse_body(&body)?;
    mutate(&state, &id, |s| s.set_threshold(threshold))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    state: DecisionState,
}

async fn set_decision(
    State(state): State<AppState>,
    Path((id, code)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    state.session(&id)?;
    let code: u64 = code
        .parse()
        .map_err(|_| ApiError::not_found(format!("code {code:?} is not in this session")))?;
    let DecisionBody { state: decision } = parse_body(&body)?;
    mutate(&state, &id, |s| s.set_decision(TermCode(code), decision))
}

async fn finalize(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    mutate(&state, &id, ReviewSession::finalize)
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let shared = state.session(&id)?;
    if let Some(k) = params.keys().find(|k| k.as_str() != "format") {
        return Err(ApiError::bad_request(format!(
            "unknown query parameter {k:?}"
        )));
    }
    let format: ExportFormat = params
        .get("format")
        .map_or(Ok(ExportFormat::Json), |f| f.parse())?;
    let body = shared.lock().expect("session poisoned").export(format);
    let (mime, ext) = match format {
        ExportFormat::Csv => ("text/csv; charset=utf-8", "csv"),
        ExportFormat::Json => ("application/json", "json"),
    };
    Ok((
        [
            (header::CONTENT_TYPE, mime.to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"amq-{id}.{ext}\""),
            ),
        ],
        body,
    )
        .into_response())
}

#[derive(Serialize)]
struct SearchHit<'a> {
    code: TermCode,
    name: &'a str,
    group: Option<&'a str>,
    score: f64,
}

async fn search_terms(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<serde_json::Value>> {
    if let Some(k) = params.keys().find(|k| !matches!(k.as_str(), "q" | "limit")) {
        return Err(ApiError::bad_request(format!(
            "unknown query parameter {k:?}"
        )));
    }
    let q = params
        .get("q")
        .filter(|q| !normalize_name(q).is_empty())
        .ok_or_else(|| ApiError::bad_request("q must be non-empty text"))?;
    let limit = match params.get("limit") {
        None => DEFAULT_SEARCH_LIMIT,
        Some(l) => l
            .parse::<usize>()
            .ok()
            .filter(|n| (1..=MAX_SEARCH_LIMIT).contains(n))
            .ok_or_else(|| {
                ApiError::bad_request(format!("limit must be in 1..={MAX_SEARCH_LIMIT}"))
            })?,
    };
    let dict = &state.corpus().dictionary;
    let ranked = rank_lexical(q, dict).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let hits: Vec<SearchHit> = ranked
        .iter()
        .take(limit)
        .filter_map(|m| {
            let t = dict.get(m.code)?;
            Some(SearchHit {
                code: t.code,
                name: &t.name,
                group: t.group.as_deref(),
                score: m.score,
            })
        })
        .collect();
    Ok(Json(json!({ "query": q, "terms": hits })))
}

async fn start_run(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: EvalRequest = parse_body(&body)?;
    let grid = match &req.grid {
        Some(g) => g
            .parse::<Grid>()
            .map_err(|e| ApiError::bad_request(e.to_string()))?,
        None => Grid::default(),
    };
    if !req.gold_path.is_file() {
        return Err(ApiError::bad_request(format!(
            "gold_path {} is not a readable file",
            req.gold_path.display()
        )));
    }
    let probes = match &req.probes {
        Some(p) => {
            Some(ProbeTable::load(p).map_err(|e| ApiError::bad_request(format!("probes: {e}")))?)
        }
        None => None,
    };
    let now = Utc::now();
    let run = EvalRun {
        run_id: new_session_id(),
        gold_path: req.gold_path.clone(),
        config: req.clone(),
        grid: grid.to_string(),
        status: RunStatus::Running,
        artifacts: Vec::new(),
        error: None,
        created: now,
        updated: now,
    };
    let shared = state.insert_run(run.clone())?;

    let st = state.clone();
    let out_dir = state.artifacts_dir(&run.run_id);
    tokio::task::spawn_blocking(move || {
        let outcome = execute_run(&st, &req, probes.as_ref(), &grid, out_dir);
        let mut guard = shared.lock().expect("run poisoned");
        guard.finish(outcome);
        if let Err(e) = st.persist_run(&guard) {
            tracing::error!("persisting eval run {}: {e}", guard.run_id);
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "run": run }))).into_response())
}

fn execute_run(
    state: &AppState,
    req: &EvalRequest,
    probes: Option<&ProbeTable>,
    grid: &Grid,
    out_dir: PathBuf,
) -> Result<Vec<PathBuf>, String> {
    let c = state.corpus();
    let gold = GoldSet::load(&req.gold_path, &c.dictionary).map_err(|e| e.to_string())?;
    let provider: &dyn EmbeddingProvider = probes.unwrap_or(&c.probes);
    let out = run_study(
        &gold.queries,
        &c.dictionary,
        &c.store,
        provider,
        &PipelineConfig::default(),
        grid,
        req.narrow_only,
    )
    .map_err(|e| e.to_string())?;
    emit_reports(&out_dir, &out.standard, out.narrow.as_ref())
        .map_err(|e| format!("writing reports: {e}"))
}

async fn get_run(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<EvalRun>> {
    let shared = state.run(&id)?;
    let run = shared.lock().expect("run poisoned").clone();
    Ok(Json(run))
}
