#![allow(dead_code)]

use std::sync::Arc;

use adtracker::accounts::{Account, AccountStatus, Attestation};
use adtracker::clock::ManualClock;
use adtracker::config::Config;
use adtracker::domain::Timestamp;
use adtracker::service::Service;
use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const PASSWORD: &str = "correct horse battery staple";
pub const T0: i64 = 1_700_000_000;

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub service: Service,
    pub clock: Arc<ManualClock>,
    pub app: Router,
}

pub struct Resp {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Resp {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Resp {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Resp { status, headers, body }
}

pub fn config(dir: &std::path::Path, seed: u64, n_ads: usize, page_size: u32) -> Config {
    let mut c = Config { data_dir: dir.to_path_buf(), ..Config::default() };
    c.provider.simulated_seed = seed;
    c.provider.simulated_ads = n_ads;
    c.provider.live.page_size = page_size;
    c
}

impl Harness {
    pub fn new(n_ads: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        Self::with_config(dir, |c| c.provider.simulated_ads = n_ads)
    }

    pub fn with_config(dir: tempfile::TempDir, edit: impl FnOnce(&mut Config)) -> Self {
        let mut c = config(dir.path(), 7, 60, 25);
        edit(&mut c);
        let clock = Arc::new(ManualClock::new(Timestamp::from_epoch_seconds(T0)));
        let service = Service::build_with_clock(c, clock.clone()).unwrap();
        let app = service.router();
        Harness { dir, service, clock, app }
    }

    pub async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Resp {
        call(&self.app, method, uri, token, body).await
    }

    pub async fn get(&self, uri: &str, token: Option<&str>) -> Resp {
        self.call(Method::GET, uri, token, None).await
    }

    pub fn manager(&self) -> (Account, String) {
        let accounts = &self.service.state.accounts;
        let m = accounts.bootstrap_manager("manager@example.org", PASSWORD).unwrap();
        let token = accounts.login("manager@example.org", PASSWORD).unwrap().token;
        (m, token)
    }

    /// Signs up `email` and leaves it in `status`, returning a session token.
    pub fn user(&self, email: &str, status: AccountStatus, reviewer: &Account) -> (Account, String) {
        let accounts = &self.service.state.accounts;
        let a = accounts.sign_up(email, PASSWORD, Attestation { identity_confirmed: true, developer_account: true }).unwrap();
        let a = if status == AccountStatus::Pending { a } else { accounts.review(reviewer, &a.account_id, status).unwrap() };
        let token = accounts.login(email, PASSWORD).unwrap().token;
        (a, token)
    }

    pub async fn poll_all(&self) {
        let s = self.service.state.jobs.scheduler();
        s.tick(self.clock.now_ts()).unwrap();
        s.wait_idle().await;
    }
}

pub trait NowTs {
    fn now_ts(&self) -> Timestamp;
}

impl NowTs for ManualClock {
    fn now_ts(&self) -> Timestamp {
        adtracker::clock::Clock::now(self)
    }
}

pub fn fixture_job_body(visibility: &str) -> Value {
    serde_json::json!({
        "search_term": "vote",
        "reached_countries": ["CA", "US", "GB", "BR"],
        "active_status": "ALL",
        "category": "POLITICAL_AND_ISSUE",
        "platforms": ["FACEBOOK"],
        "visibility": visibility,
    })
}

/// Every endpoint that reads or changes collected data or accounts.
pub fn data_routes(job_id: &str, page_id: &str, account_id: &str) -> Vec<(Method, String, Option<Value>)> {
    vec![
        (Method::POST, "/api/v1/jobs".into(), Some(fixture_job_body("PRIVATE"))),
        (Method::GET, "/api/v1/jobs".into(), None),
        (Method::GET, "/api/v1/jobs?query=vote".into(), None),
        (Method::GET, format!("/api/v1/jobs/{job_id}"), None),
        (Method::GET, format!("/api/v1/jobs/{job_id}/export.csv"), None),
        (Method::GET, format!("/api/v1/jobs/{job_id}/report"), None),
        (Method::DELETE, format!("/api/v1/jobs/{job_id}"), None),
        (Method::GET, "/api/v1/analysis/regions".into(), None),
        (Method::GET, format!("/api/v1/analysis/regions?jobs={job_id}&threshold_km=50"), None),
        (Method::GET, "/api/v1/analysis/advertisers".into(), None),
        (Method::GET, format!("/api/v1/pages/{page_id}/image"), None),
        (Method::GET, "/api/v1/accounts?status=PENDING".into(), None),
        (Method::POST, format!("/api/v1/accounts/{account_id}/review"), Some(serde_json::json!({"decision": "APPROVED"}))),
    ]
}
