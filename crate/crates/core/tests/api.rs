//! Every /api/v1 route against the simulated providers, in process.

mod common;

use std::sync::Arc;
use std::time::Duration;

use adtracker::accounts::{AccountStatus, Accounts};
use adtracker::analysis::{Gazetteer, ImageCache};
use adtracker::api::{router, AppState, RegionalReportBody};
use adtracker::jobs::{JobId, CSV_HEADER};
use adtracker::provider::{SimulatedGraphProvider, FIXTURE_PICTURE};
use axum::http::{header, Method, StatusCode};
use common::*;
use serde_json::json;

const PAGE: &str = "100200300401";

#[tokio::test]
async fn healthz_needs_no_session() {
    let h = Harness::new(0);
    let r = h.get("/api/v1/healthz", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json(), json!({"status": "ok"}));
    assert_eq!(h.get("/api/v1/nowhere", None).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn signup_review_login() {
    let h = Harness::new(0);
    let (_, boss) = h.manager();
    let body = json!({"email": "Alice@Example.org", "password": PASSWORD, "identity_confirmed": true, "developer_account": true});
    let r = h.call(Method::POST, "/api/v1/signup", None, Some(body.clone())).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let alice = r.json();
    assert_eq!(alice["status"], "PENDING");
    assert_eq!(alice["email"], "alice@example.org");
    assert!(alice.get("password_hash").is_none());
    let id = alice["account_id"].as_str().unwrap().to_string();

    assert_eq!(h.call(Method::POST, "/api/v1/signup", None, Some(body)).await.json()["code"], "email_taken");
    let weak = json!({"email": "b@example.org", "password": "short"});
    assert_eq!(h.call(Method::POST, "/api/v1/signup", None, Some(weak)).await.status, StatusCode::BAD_REQUEST);
    let r = h.call(Method::POST, "/api/v1/signup", None, None).await;
    assert_eq!((r.status, r.json()["code"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));

    let bad = json!({"email": "alice@example.org", "password": "wrong password!!"});
    assert_eq!(h.call(Method::POST, "/api/v1/login", None, Some(bad)).await.status, StatusCode::UNAUTHORIZED);
    let login = json!({"email": "alice@example.org", "password": PASSWORD});
    let r = h.call(Method::POST, "/api/v1/login", None, Some(login.clone())).await;
    assert_eq!(r.status, StatusCode::OK);
    let token = r.json()["token"].as_str().unwrap().to_string();
    assert_eq!(h.get("/api/v1/me", Some(&token)).await.json()["status"], "PENDING");
    assert_eq!(h.get("/api/v1/jobs", Some(&token)).await.status, StatusCode::FORBIDDEN);

    let pending = h.get("/api/v1/accounts?status=PENDING", Some(&boss)).await.json();
    assert_eq!(pending.as_array().unwrap().len(), 1);
    let review = |d: &str| json!({"decision": d});
    let uri = format!("/api/v1/accounts/{id}/review");
    assert_eq!(h.call(Method::POST, &uri, Some(&token), Some(review("APPROVED"))).await.status, StatusCode::FORBIDDEN);
    assert_eq!(h.call(Method::POST, &uri, Some(&boss), Some(review("MAYBE"))).await.json()["code"], "invalid_decision");
    let r = h.call(Method::POST, &uri, Some(&boss), Some(review("APPROVED"))).await;
    assert_eq!(r.json()["status"], "APPROVED");
    assert_eq!(h.call(Method::POST, &uri, Some(&boss), Some(review("REJECTED"))).await.json()["code"], "invalid_state");
    let r = h.call(Method::POST, "/api/v1/accounts/nobody/review", Some(&boss), Some(review("APPROVED"))).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    assert_eq!(h.get("/api/v1/jobs", Some(&token)).await.status, StatusCode::OK);
    assert_eq!(h.get("/api/v1/jobs", Some("not-a-token")).await.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn sessions_expire() {
    let h = Harness::new(0);
    let (_, boss) = h.manager();
    assert_eq!(h.get("/api/v1/me", Some(&boss)).await.status, StatusCode::OK);
    h.clock.advance(24 * 3600 + 1);
    assert_eq!(h.get("/api/v1/me", Some(&boss)).await.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn policy_gates_every_data_route() {
    let h = Harness::new(60);
    let (boss_acct, boss) = h.manager();
    let (_, pending) = h.user("p@example.org", AccountStatus::Pending, &boss_acct);
    let (_, rejected) = h.user("r@example.org", AccountStatus::Rejected, &boss_acct);
    let (target, _) = h.user("t@example.org", AccountStatus::Pending, &boss_acct);
    let job = h.call(Method::POST, "/api/v1/jobs", Some(&boss), Some(fixture_job_body("PUBLIC"))).await.json();
    let job_id = job["job_id"].as_str().unwrap();
    h.poll_all().await;

    for (method, uri, body) in data_routes(job_id, PAGE, target.account_id.as_str()) {
        let r = h.call(method.clone(), &uri, None, body.clone()).await;
        assert_eq!(r.status, StatusCode::UNAUTHORIZED, "anonymous {method} {uri}");
        for (who, token) in [("pending", &pending), ("rejected", &rejected)] {
            let r = h.call(method.clone(), &uri, Some(token), body.clone()).await;
            assert_eq!(r.status, StatusCode::FORBIDDEN, "{who} {method} {uri}");
            assert_eq!(r.json()["code"], "unauthorized");
        }
    }
    // nothing changed hands
    assert_eq!(h.get(&format!("/api/v1/jobs/{job_id}"), Some(&boss)).await.status, StatusCode::OK);
    assert_eq!(h.service.state.accounts.get(&target.account_id).unwrap().status, AccountStatus::Pending);
}

#[tokio::test]
async fn job_lifecycle_and_export() {
    let h = Harness::new(60);
    let (boss_acct, _) = h.manager();
    let (_, alice) = h.user("alice@example.org", AccountStatus::Approved, &boss_acct);
    let (_, bob) = h.user("bob@example.org", AccountStatus::Approved, &boss_acct);

    let mut invalid = fixture_job_body("PRIVATE");
    invalid["search_term"] = json!("");
    invalid["reached_countries"] = json!(["ZZ"]);
    invalid["platforms"] = json!(["MYSPACE"]);
    let r = h.call(Method::POST, "/api/v1/jobs", Some(&alice), Some(invalid)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let v = r.json();
    assert_eq!(v["code"], "invalid_spec");
    assert_eq!(
        v["violations"],
        json!([
            {"violation": "EmptySearchTerm"},
            {"violation": "UnknownCountryCode", "value": "ZZ"},
            {"violation": "UnknownEnumToken", "value": {"field": "platforms", "token": "MYSPACE"}}
        ])
    );

    let private = h.call(Method::POST, "/api/v1/jobs", Some(&alice), Some(fixture_job_body("PRIVATE"))).await;
    assert_eq!(private.status, StatusCode::CREATED);
    let private_id = private.json()["job_id"].as_str().unwrap().to_string();
    let mut public_body = fixture_job_body("PUBLIC");
    public_body["search_term"] = json!("VOTE");
    let public_id = h.call(Method::POST, "/api/v1/jobs", Some(&alice), Some(public_body)).await.json()["job_id"]
        .as_str()
        .unwrap()
        .to_string();
    h.poll_all().await;

    let report = h.get(&format!("/api/v1/jobs/{private_id}/report"), Some(&alice)).await.json();
    assert_eq!(report["state"], "ACTIVE");
    assert_eq!(report["last_report"]["pages_fetched"], 3);
    // both jobs match the same 60 ads and poll concurrently; whichever runs first inserts them
    let other = h.get(&format!("/api/v1/jobs/{public_id}/report"), Some(&alice)).await.json();
    let upsert = |r: &serde_json::Value, k: &str| r["last_report"]["upsert"][k].as_u64().unwrap();
    for r in [&report, &other] {
        assert_eq!(upsert(r, "inserted") + upsert(r, "unchanged"), 60);
    }
    assert_eq!(upsert(&report, "inserted") + upsert(&other, "inserted"), 60);

    let listed = h.get("/api/v1/jobs?query=VoT&limit=1&offset=1", Some(&alice)).await.json();
    assert_eq!(listed.as_array().unwrap().len(), 1);
    let bobs = h.get("/api/v1/jobs", Some(&bob)).await.json();
    let ids: Vec<&str> = bobs.as_array().unwrap().iter().map(|j| j["job_id"].as_str().unwrap()).collect();
    assert_eq!(ids, [public_id.as_str()]);
    assert_eq!(h.get("/api/v1/jobs?limit=lots", Some(&bob)).await.status, StatusCode::BAD_REQUEST);

    // export: byte-identical to the module export, gated by visibility
    let r = h.get(&format!("/api/v1/jobs/{public_id}/export.csv"), Some(&bob)).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers[header::CONTENT_TYPE], "text/csv; charset=utf-8");
    let alice_acct = h.service.state.store.get_account_by_email("alice@example.org").unwrap().unwrap();
    let direct = h.service.state.jobs.export_csv(&alice_acct, &JobId::from(public_id.as_str())).unwrap();
    assert_eq!(direct.row_count(), 60);
    assert_eq!(r.body, direct.to_bytes());
    assert!(r.body.starts_with(CSV_HEADER.join(",").as_bytes()));
    assert_eq!(h.get(&format!("/api/v1/jobs/{private_id}/export.csv"), Some(&bob)).await.status, StatusCode::FORBIDDEN);
    assert_eq!(h.get(&format!("/api/v1/jobs/{private_id}"), Some(&bob)).await.status, StatusCode::FORBIDDEN);

    assert_eq!(h.call(Method::DELETE, &format!("/api/v1/jobs/{public_id}"), Some(&bob), None).await.status, StatusCode::FORBIDDEN);
    assert_eq!(h.call(Method::DELETE, &format!("/api/v1/jobs/{public_id}"), Some(&alice), None).await.status, StatusCode::NO_CONTENT);
    let gone = h.get(&format!("/api/v1/jobs/{public_id}"), Some(&alice)).await;
    assert_eq!((gone.status, gone.json()["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_job")));
    assert_eq!(h.get("/api/v1/jobs/no-such-job/export.csv", Some(&alice)).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn regional_analysis() {
    let h = Harness::new(60);
    let (_, boss) = h.manager();
    let job = h.call(Method::POST, "/api/v1/jobs", Some(&boss), Some(fixture_job_body("PRIVATE"))).await.json();
    h.poll_all().await;

    let r = h.get("/api/v1/analysis/regions?start=2021-01-01T00:00:00Z&end=2020-01-01T00:00:00Z", Some(&boss)).await;
    assert_eq!((r.status, r.json()["code"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidWindow")));
    assert_eq!(h.get("/api/v1/analysis/regions?start=yesterday", Some(&boss)).await.status, StatusCode::BAD_REQUEST);
    assert_eq!(h.get("/api/v1/analysis/regions?threshold_km=-1", Some(&boss)).await.status, StatusCode::BAD_REQUEST);

    let empty = h.get("/api/v1/analysis/regions?start=1999-01-01T00:00:00Z&end=1999-12-31T00:00:00Z", Some(&boss)).await;
    assert_eq!(String::from_utf8(empty.body).unwrap(), r#"{"clusters":[],"ranks":[],"unresolved":[]}"#);

    let full: RegionalReportBody = serde_json::from_slice(&h.get("/api/v1/analysis/regions", Some(&boss)).await.body).unwrap();
    assert!(!full.ranks.is_empty());
    assert!(full.unresolved.is_empty());
    let scoped = h.get(&format!("/api/v1/analysis/regions?jobs={}", job["job_id"].as_str().unwrap()), Some(&boss)).await;
    assert_eq!(serde_json::from_slice::<RegionalReportBody>(&scoped.body).unwrap(), full);
    let other = h.get("/api/v1/analysis/regions?jobs=someone-elses", Some(&boss)).await;
    assert_eq!(serde_json::from_slice::<RegionalReportBody>(&other.body).unwrap(), RegionalReportBody::default());

    let world: RegionalReportBody =
        serde_json::from_slice(&h.get("/api/v1/analysis/regions?threshold_km=25000", Some(&boss)).await.body).unwrap();
    assert_eq!(world.clusters.len(), 1);
    assert_eq!(world.clusters[0].raw_count, 60);
    let weighted = |r: &RegionalReportBody| r.ranks.iter().map(|x| x.weighted_reach).sum::<f64>();
    assert!((world.clusters[0].weighted_reach - weighted(&world)).abs() < 1e-3);
}

#[tokio::test]
async fn advertiser_analysis_and_images() {
    let h = Harness::new(60);
    let (_, boss) = h.manager();
    h.call(Method::POST, "/api/v1/jobs", Some(&boss), Some(fixture_job_body("PRIVATE"))).await;
    h.poll_all().await;

    let body = h.get("/api/v1/analysis/advertisers", Some(&boss)).await.json();
    let rows = body["advertisers"].as_array().unwrap();
    let total: u64 = rows.iter().map(|r| r["ad_count"].as_u64().unwrap()).sum();
    assert_eq!(total, 60);
    let counts: Vec<u64> = rows.iter().map(|r| r["ad_count"].as_u64().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    for r in rows {
        assert_eq!(r["profile_image_ref"], format!("{}.bin", r["page_id"].as_str().unwrap()));
    }
    let bad = h.get("/api/v1/analysis/advertisers?start=2022-01-01T00:00:00Z&end=2021-01-01T00:00:00Z", Some(&boss)).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);

    let img = h.get(&format!("/api/v1/pages/{PAGE}/image"), Some(&boss)).await;
    assert_eq!(img.status, StatusCode::OK);
    assert_eq!(img.headers[header::CONTENT_TYPE], "image/png");
    assert_eq!(img.body, FIXTURE_PICTURE);
    assert!(h.dir.path().join("images").join(format!("{PAGE}.bin")).exists());
    let missing = h.get("/api/v1/pages/555/image", Some(&boss)).await;
    assert_eq!((missing.status, missing.json()["code"].as_str()), (StatusCode::NOT_FOUND, Some("graph_lookup_failed")));
    assert_eq!(h.get("/api/v1/pages/..%2Fsecrets/image", Some(&boss)).await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn graph_rate_limit_surfaces_as_429_and_html_is_rejected() {
    let h = Harness::new(0);
    let (_, boss) = h.manager();
    let base = &h.service.state;
    let swap = |graph: SimulatedGraphProvider| {
        let images = ImageCache::new(h.dir.path().join("alt-images"), Arc::new(graph), h.clock.clone());
        let state = Arc::new(AppState {
            store: base.store.clone(),
            accounts: Accounts::new(base.store.clone(), h.clock.clone()),
            jobs: base.jobs.clone(),
            gazetteer: Arc::new(Gazetteer::bundled()),
            images: Arc::new(images),
            default_threshold_km: 100.0,
        });
        router(state, None)
    };
    let throttled = swap(SimulatedGraphProvider::with_fixture_pages().throttled(Duration::from_secs(30)));
    let r = call(&throttled, Method::GET, &format!("/api/v1/pages/{PAGE}/image"), Some(&boss), None).await;
    assert_eq!(r.status, StatusCode::TOO_MANY_REQUESTS);
    assert_eq!(r.headers[header::RETRY_AFTER], "30");

    let html = swap(SimulatedGraphProvider::new().with_picture(PAGE, "text/html", b"<p>hi</p>".to_vec()));
    let r = call(&html, Method::GET, &format!("/api/v1/pages/{PAGE}/image"), Some(&boss), None).await;
    assert_eq!((r.status, r.json()["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_an_image")));
}

#[tokio::test]
async fn static_assets_are_served_under_root() {
    let web = tempfile::tempdir().unwrap();
    std::fs::write(web.path().join("index.html"), "<!doctype html><title>adtracker</title>").unwrap();
    let h = Harness::with_config(tempfile::tempdir().unwrap(), |c| c.static_dir = Some(web.path().to_path_buf()));
    let r = h.get("/index.html", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(String::from_utf8(r.body).unwrap().contains("adtracker"));
    assert_eq!(h.get("/", None).await.status, StatusCode::OK);
    assert_eq!(h.get("/api/v1/healthz", None).await.status, StatusCode::OK);
}
