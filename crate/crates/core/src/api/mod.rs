//! JSON over HTTP under `/api/v1`.

mod dto;
mod error;

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use axum::body::{Body, Bytes};
use axum::extract::{FromRequestParts, Path as UrlPath, RawQuery, Request, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;

pub use dto::{
    round4, AdvertisersBody, ClusterBody, JobReportBody, RankBody, RegionalReportBody,
};
pub use error::ApiError;

use crate::accounts::{authorize, Account, AccountId, AccountStatus, Accounts, Action, Resource};
use crate::analysis::{advertiser_report_with_images, regional_report, Gazetteer, ImageCache};
use crate::domain::{JobSpecDraft, Timestamp};
use crate::jobs::{JobId, JobManager, DEFAULT_LIST_LIMIT};
use crate::store::{AdQuery, Store};

/// Handles shared by every request.
pub struct AppState {
    pub store: Arc<Store>,
    pub accounts: Accounts,
    pub jobs: JobManager,
    pub gazetteer: Arc<Gazetteer>,
    pub images: Arc<ImageCache>,
    pub default_threshold_km: f64,
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/signup", post(signup))
        .route("/login", post(login))
        .route("/me", get(me))
        .route("/accounts", get(list_accounts))
        .route("/accounts/{id}/review", post(review))
        .route("/jobs", post(create_job).get(list_jobs))
        .route("/jobs/{id}", get(get_job).delete(delete_job))
        .route("/jobs/{id}/export.csv", get(export_csv))
        .route("/jobs/{id}/report", get(job_report))
        .route("/analysis/regions", get(regions))
        .route("/analysis/advertisers", get(advertisers))
        .route("/pages/{page_id}/image", get(page_image))
        .fallback(|| async { ApiError::not_found("no such endpoint") });
    let mut app = Router::new().nest("/api/v1", api).with_state(state);
    if let Some(dir) = static_dir {
        app = app.fallback_service(tower_http::services::ServeDir::new(dir));
    }
    app.layer(middleware::from_fn(log_request))
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let started = Instant::now();
    let resp = next.run(req).await;
    tracing::info!(
        target: "adtracker::http",
        %method,
        path,
        status = resp.status().as_u16(),
        latency_ms = started.elapsed().as_secs_f64() * 1e3,
        "request"
    );
    resp
}

/// The account behind the request's bearer token.
pub struct Principal(pub Account);

impl FromRequestParts<Shared> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(ApiError::unauthenticated)?;
        Ok(Principal(state.accounts.authenticate(token)?))
    }
}

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn query_map(raw: Option<String>) -> HashMap<String, String> {
    url::form_urlencoded::parse(raw.unwrap_or_default().as_bytes()).into_owned().collect()
}

fn parse_param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<T>> {
    match q.get(key).map(|v| v.trim()).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| ApiError::bad_request(format!("invalid {key}: {v:?}"))),
    }
}

/// Window and job filter shared by the analysis endpoints.
fn analysis_query(user: &Account, q: &HashMap<String, String>) -> ApiResult<AdQuery> {
    let start: Option<Timestamp> = parse_param(q, "start")?;
    let end: Option<Timestamp> = parse_param(q, "end")?;
    let mut query = AdQuery::for_user(user.account_id.clone());
    if start.is_some() || end.is_some() {
        let start = start.unwrap_or(Timestamp::from_epoch_seconds(i64::MIN));
        let end = end.unwrap_or(Timestamp::from_epoch_seconds(i64::MAX));
        if start > end {
            return Err(ApiError::invalid_window());
        }
        query = query.window(start, end);
    }
    if let Some(jobs) = q.get("jobs").filter(|v| !v.trim().is_empty()) {
        query = query.jobs(jobs.split(',').map(str::trim).filter(|s| !s.is_empty()).map(JobId::from));
    }
    Ok(query)
}

fn require(user: &Account, action: Action) -> ApiResult<()> {
    if authorize(user, action, Resource::None).is_allowed() {
        Ok(())
    } else {
        Err(ApiError::forbidden())
    }
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn signup(State(s): State<Shared>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: dto::SignupRequest = parse_json(&body)?;
    let account = s.accounts.sign_up(&req.email, &req.password, req.attestation())?;
    Ok((StatusCode::CREATED, Json(account)))
}

async fn login(State(s): State<Shared>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: dto::LoginRequest = parse_json(&body)?;
    Ok(Json(s.accounts.login(&req.email, &req.password)?))
}

async fn me(Principal(user): Principal) -> Json<Account> {
    Json(user)
}

async fn list_accounts(State(s): State<Shared>, Principal(user): Principal, RawQuery(raw): RawQuery) -> ApiResult<impl IntoResponse> {
    require(&user, Action::ReviewAccount)?;
    let q = query_map(raw);
    let status = match q.get("status") {
        None => None,
        Some(t) => Some(AccountStatus::from_token(t).ok_or_else(|| ApiError::bad_request(format!("invalid status: {t:?}")))?),
    };
    Ok(Json(s.store.list_accounts(status)?))
}

async fn review(
    State(s): State<Shared>,
    Principal(user): Principal,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    require(&user, Action::ReviewAccount)?;
    let req: dto::ReviewRequest = parse_json(&body)?;
    let decision = AccountStatus::from_token(&req.decision).unwrap_or(AccountStatus::Pending);
    Ok(Json(s.accounts.review(&user, &AccountId(id), decision)?))
}

async fn create_job(State(s): State<Shared>, Principal(user): Principal, body: Bytes) -> ApiResult<impl IntoResponse> {
    require(&user, Action::CreateJob)?;
    let draft: JobSpecDraft = parse_json(&body)?;
    Ok((StatusCode::CREATED, Json(s.jobs.register_job(&user, &draft)?)))
}

async fn list_jobs(State(s): State<Shared>, Principal(user): Principal, RawQuery(raw): RawQuery) -> ApiResult<impl IntoResponse> {
    let q = query_map(raw);
    let limit = parse_param(&q, "limit")?.unwrap_or(DEFAULT_LIST_LIMIT);
    let offset = parse_param(&q, "offset")?.unwrap_or(0);
    let search = q.get("query").map(String::as_str);
    Ok(Json(s.jobs.list_jobs(&user, search, limit, offset)?))
}

async fn get_job(State(s): State<Shared>, Principal(user): Principal, UrlPath(id): UrlPath<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.jobs.get_job(&user, &JobId::from(id.as_str()))?))
}

async fn delete_job(State(s): State<Shared>, Principal(user): Principal, UrlPath(id): UrlPath<String>) -> ApiResult<StatusCode> {
    s.jobs.delete_job(&user, &JobId::from(id.as_str()))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn job_report(State(s): State<Shared>, Principal(user): Principal, UrlPath(id): UrlPath<String>) -> ApiResult<impl IntoResponse> {
    let job = s.jobs.get_job(&user, &JobId::from(id.as_str()))?;
    Ok(Json(JobReportBody::from(job)))
}

async fn export_csv(State(s): State<Shared>, Principal(user): Principal, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let export = s.jobs.export_csv(&user, &JobId::from(id.as_str()))?;
    let stream = futures::stream::iter(export.chunks().map(Ok::<_, Infallible>));
    let mut resp = Body::from_stream(stream).into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("text/csv; charset=utf-8"));
    if let Ok(v) = HeaderValue::from_str(&format!("attachment; filename=\"job-{id}.csv\"")) {
        headers.insert(header::CONTENT_DISPOSITION, v);
    }
    Ok(resp)
}

async fn regions(State(s): State<Shared>, Principal(user): Principal, RawQuery(raw): RawQuery) -> ApiResult<impl IntoResponse> {
    require(&user, Action::ReadAnalysis)?;
    let q = query_map(raw);
    let threshold: f64 = parse_param(&q, "threshold_km")?.unwrap_or(s.default_threshold_km);
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(ApiError::bad_request("threshold_km must be a non-negative number"));
    }
    let query = analysis_query(&user, &q)?;
    let store = s.store.clone();
    let gazetteer = s.gazetteer.clone();
    let report = tokio::task::spawn_blocking(move || regional_report(&store, &gazetteer, &query, threshold))
        .await
        .map_err(|e| ApiError::from(crate::store::StoreError::StorageFailure(e.to_string())))??;
    Ok(Json(RegionalReportBody::from(&report)))
}

async fn advertisers(State(s): State<Shared>, Principal(user): Principal, RawQuery(raw): RawQuery) -> ApiResult<impl IntoResponse> {
    require(&user, Action::ReadAnalysis)?;
    let query = analysis_query(&user, &query_map(raw))?;
    let advertisers = advertiser_report_with_images(&s.store, &query, &s.images).await?;
    Ok(Json(AdvertisersBody { advertisers }))
}

async fn page_image(State(s): State<Shared>, Principal(user): Principal, UrlPath(page_id): UrlPath<String>) -> ApiResult<Response> {
    require(&user, Action::ReadImage)?;
    let img = s.images.fetch_profile_image(&page_id).await?;
    let content_type = HeaderValue::from_str(&img.content_type).unwrap_or(HeaderValue::from_static("application/octet-stream"));
    Ok(([(header::CONTENT_TYPE, content_type)], img.bytes).into_response())
}
