//! HTTP client for the public ads archive endpoint.
//!
//! Wire format: `GET {base_url}/ads_archive` with the job's options as
//! query parameters and a bearer token. The JSON response carries a
//! `data` array of archive objects and a `paging` block whose `next`
//! link is present only while more results remain.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use chrono::{DateTime, NaiveDate};
use serde::Deserialize;
use serde_json::Value;

use super::{AdProvider, Backoff, Page, PageCursor, ProviderConfig, ProviderError, RateLimiter};
use crate::domain::{
    country::resolve_country, parse_insight_range, AdCategory, AdRecord, DemographicShare, Gender, InsightRange,
    JobSpec, RegionalShare, Timestamp, SENTINEL_UPPER,
};

const FIELDS: &str = "id,page_id,page_name,ad_creation_time,ad_creative_bodies,ad_creative_link_captions,\
ad_creative_link_descriptions,ad_creative_link_titles,ad_snapshot_url,spend,currency,bylines,\
ad_delivery_start_time,ad_delivery_stop_time,impressions,estimated_audience_size,delivery_by_region,\
demographic_distribution";

const DEFAULT_RATE_LIMIT_WAIT: Duration = Duration::from_secs(60);

pub struct LiveProvider {
    client: reqwest::Client,
    config: ProviderConfig,
    limiter: Arc<RateLimiter>,
    backoff: Backoff,
}

#[derive(Deserialize)]
struct ArchiveResponse {
    #[serde(default)]
    data: Vec<Value>,
    #[serde(default)]
    paging: Option<Paging>,
}

#[derive(Deserialize)]
struct Paging {
    #[serde(default)]
    cursors: Option<Cursors>,
    #[serde(default)]
    next: Option<String>,
}

#[derive(Deserialize)]
struct Cursors {
    #[serde(default)]
    after: Option<String>,
}

fn ad_type_token(category: AdCategory) -> &'static str {
    match category {
        AdCategory::PoliticalAndIssue => "POLITICAL_AND_ISSUE_ADS",
    }
}

impl LiveProvider {
    pub fn new(config: ProviderConfig, limiter: Arc<RateLimiter>) -> Self {
        let backoff = config.backoff();
        LiveProvider { client: reqwest::Client::new(), config, limiter, backoff }
    }

    fn query(&self, spec: &JobSpec, cursor: Option<&PageCursor>) -> Vec<(&'static str, String)> {
        let json_list = |items: Vec<&str>| serde_json::to_string(&items).unwrap_or_default();
        let mut q = vec![
            ("search_terms", spec.search_term.clone()),
            ("ad_reached_countries", json_list(spec.reached_countries.iter().map(String::as_str).collect())),
            ("ad_active_status", spec.active_status.token().to_string()),
            ("ad_type", ad_type_token(spec.category).to_string()),
            ("publisher_platforms", json_list(spec.platforms.iter().map(|p| p.token()).collect())),
            ("limit", self.config.page_size.to_string()),
            ("fields", FIELDS.to_string()),
        ];
        if let Some(c) = cursor {
            q.push(("after", c.as_str().to_string()));
        }
        q
    }

    async fn attempt(&self, spec: &JobSpec, cursor: Option<&PageCursor>) -> Result<Page, ProviderError> {
        self.limiter.acquire_permit().await;
        let url = format!("{}/ads_archive", self.config.base_url.trim_end_matches('/'));
        let resp = self
            .client
            .get(url)
            .bearer_auth(&self.config.access_token)
            .query(&self.query(spec, cursor))
            .send()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;

        let status = resp.status();
        let retry_after = retry_after_header(resp.headers());
        let body = resp.text().await.map_err(|e| ProviderError::Transport(e.to_string()))?;

        if !status.is_success() {
            return Err(classify_error(status.as_u16(), &body, retry_after));
        }
        let parsed: ArchiveResponse =
            serde_json::from_str(&body).map_err(|e| ProviderError::MalformedPayload(e.to_string()))?;

        let mut page = Page::default();
        for raw in &parsed.data {
            match parse_archive_record(raw, spec) {
                Ok(ad) => page.ads.push(ad),
                Err(why) => {
                    let id = raw.get("id").and_then(Value::as_str).unwrap_or("?");
                    tracing::warn!(ad_id = id, %why, "skipping malformed archive record");
                    page.malformed.push(format!("{id}: {why}"));
                }
            }
        }
        page.next = parsed
            .paging
            .filter(|p| p.next.is_some())
            .and_then(|p| p.cursors)
            .and_then(|c| c.after)
            .and_then(PageCursor::new);
        Ok(page)
    }
}

fn retry_after_header(headers: &reqwest::header::HeaderMap) -> Option<Duration> {
    headers
        .get(reqwest::header::RETRY_AFTER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map(Duration::from_secs)
}

/// The `Retry-After` hint in seconds, or a minute when absent.
pub(crate) fn retry_after(headers: &reqwest::header::HeaderMap) -> Duration {
    retry_after_header(headers).unwrap_or(DEFAULT_RATE_LIMIT_WAIT)
}

fn classify_error(status: u16, body: &str, retry_after: Option<Duration>) -> ProviderError {
    let parsed: Option<Value> = serde_json::from_str(body).ok();
    let err = parsed.as_ref().and_then(|v| v.get("error"));
    let code = err.and_then(|e| e.get("code")).and_then(Value::as_i64);
    let message = err
        .and_then(|e| e.get("message"))
        .and_then(Value::as_str)
        .unwrap_or(body)
        .to_string();
    let rate_limited = || ProviderError::RateLimited { retry_after: retry_after.unwrap_or(DEFAULT_RATE_LIMIT_WAIT) };
    match (status, code) {
        (429, _) | (_, Some(4 | 17 | 32 | 613)) => rate_limited(),
        (401 | 403, _) | (_, Some(190)) => ProviderError::AuthFailed(message),
        (500..=599, _) => ProviderError::Transport(format!("HTTP {status}: {message}")),
        _ => ProviderError::Rejected { status, message },
    }
}

#[async_trait]
impl AdProvider for LiveProvider {
    async fn fetch_page(&self, spec: &JobSpec, cursor: Option<&PageCursor>) -> Result<Page, ProviderError> {
        let mut attempt = 0;
        loop {
            match self.attempt(spec, cursor).await {
                Err(ProviderError::Transport(why)) if attempt < self.config.retry_limit => {
                    let delay = self.backoff.delay(attempt, &mut rand::thread_rng());
                    tracing::debug!(%why, ?delay, attempt, "transport error, retrying");
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

fn parse_time(text: &str) -> Result<Timestamp, String> {
    if let Ok(t) = Timestamp::parse_rfc3339(text) {
        return Ok(t);
    }
    if let Ok(dt) = DateTime::parse_from_str(text.trim(), "%Y-%m-%dT%H:%M:%S%z") {
        return Ok(Timestamp::from_epoch_seconds(dt.timestamp()));
    }
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| Timestamp::from_epoch_seconds(dt.and_utc().timestamp()))
        .ok_or_else(|| format!("bad timestamp {text:?}"))
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// First element of a list field, or the field itself if it is a string.
fn first_text(obj: &Value, list_key: &str, single_key: &str) -> Option<String> {
    obj.get(list_key)
        .and_then(Value::as_array)
        .and_then(|a| a.first())
        .and_then(as_text)
        .or_else(|| obj.get(single_key).and_then(as_text))
}

fn parse_range(v: &Value) -> Result<InsightRange, String> {
    match v {
        Value::String(s) => parse_insight_range(s).map_err(|e| e.to_string()),
        Value::Object(m) => {
            let bound = |k: &str| -> Result<Option<u64>, String> {
                match m.get(k) {
                    None | Some(Value::Null) => Ok(None),
                    Some(b) => as_text(b)
                        .and_then(|t| t.replace(',', "").parse::<u64>().ok())
                        .map(Some)
                        .ok_or_else(|| format!("bad {k}")),
                }
            };
            let lower = bound("lower_bound")?.unwrap_or(0);
            let upper = bound("upper_bound")?.unwrap_or(SENTINEL_UPPER);
            InsightRange::new(lower, upper).map_err(|e| e.to_string())
        }
        _ => Err("range is neither string nor object".into()),
    }
}

fn optional_range(obj: &Value, key: &str) -> Result<Option<InsightRange>, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => parse_range(v).map(Some).map_err(|e| format!("{key}: {e}")),
    }
}

fn optional_time(obj: &Value, key: &str) -> Result<Option<Timestamp>, String> {
    match obj.get(key).and_then(Value::as_str) {
        None => Ok(None),
        Some(s) => parse_time(s).map(Some).map_err(|e| format!("{key}: {e}")),
    }
}

/// Converts one archive object into an [`AdRecord`].
///
/// Archive percentages are fractions in `[0, 1]` and are scaled to
/// percent. A region entry without a `country` label is attributed to the
/// job's country when the job targets exactly one; otherwise the record is
/// rejected. Unknown fields are ignored.
pub fn parse_archive_record(obj: &Value, spec: &JobSpec) -> Result<AdRecord, String> {
    let required = |key: &str| obj.get(key).and_then(as_text).ok_or_else(|| format!("missing {key}"));
    let creation_time = parse_time(&required("ad_creation_time")?)?;

    let mut regional_distribution = Vec::new();
    for entry in obj.get("delivery_by_region").and_then(Value::as_array).into_iter().flatten() {
        let region = entry.get("region").and_then(Value::as_str).ok_or("region entry without name")?;
        let pct = entry.get("percentage").and_then(as_f64).ok_or("region entry without percentage")?;
        let country = match entry.get("country").and_then(Value::as_str) {
            Some(label) => resolve_country(label).ok_or_else(|| format!("unresolved country alias {label:?}"))?,
            None if spec.reached_countries.len() == 1 => spec.reached_countries[0].clone(),
            None => return Err(format!("region {region:?} has no country and the job targets several")),
        };
        regional_distribution.push(RegionalShare {
            country_code: country,
            region_name: region.to_string(),
            percentage: pct * 100.0,
        });
    }

    let mut demographic_distribution = Vec::new();
    for entry in obj.get("demographic_distribution").and_then(Value::as_array).into_iter().flatten() {
        let age = entry.get("age").and_then(Value::as_str).ok_or("demographic entry without age")?;
        let gender = entry.get("gender").and_then(Value::as_str).unwrap_or("unknown");
        let pct = entry.get("percentage").and_then(as_f64).ok_or("demographic entry without percentage")?;
        demographic_distribution.push(DemographicShare {
            age_range: age.to_string(),
            gender: Gender::from_label(gender),
            percentage: pct * 100.0,
        });
    }

    let ad = AdRecord {
        ad_id: required("id")?,
        page_id: required("page_id")?,
        page_name: obj.get("page_name").and_then(as_text).unwrap_or_default(),
        creation_time,
        body: first_text(obj, "ad_creative_bodies", "ad_creative_body").unwrap_or_default(),
        link_caption: first_text(obj, "ad_creative_link_captions", "ad_creative_link_caption"),
        link_description: first_text(obj, "ad_creative_link_descriptions", "ad_creative_link_description"),
        link_title: first_text(obj, "ad_creative_link_titles", "ad_creative_link_title"),
        snapshot_url: obj.get("ad_snapshot_url").and_then(as_text),
        spend: optional_range(obj, "spend")?,
        currency: obj.get("currency").and_then(as_text).map(|c| c.to_ascii_uppercase()),
        funded_entity: obj.get("bylines").or_else(|| obj.get("funding_entity")).and_then(as_text),
        delivery_start: optional_time(obj, "ad_delivery_start_time")?,
        delivery_stop: optional_time(obj, "ad_delivery_stop_time")?,
        impressions: optional_range(obj, "impressions")?,
        potential_reach: match optional_range(obj, "estimated_audience_size")? {
            Some(r) => Some(r),
            None => optional_range(obj, "potential_reach")?,
        },
        regional_distribution,
        demographic_distribution,
        first_seen: None,
        last_seen: None,
    };
    let violations = ad.violations();
    if violations.is_empty() {
        Ok(ad)
    } else {
        Err(violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    }
}
