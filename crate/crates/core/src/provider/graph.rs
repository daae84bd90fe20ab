//! Page profile pictures: look up the picture URL for a page, then
//! download the image bytes.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use serde::Deserialize;

use super::{Backoff, ProviderConfig, RateLimiter};

/// Bytes of the bundled fixture picture served by the simulated provider.
pub const FIXTURE_PICTURE: &[u8] = include_bytes!("../../assets/profile.png");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("no picture URL for page {0}")]
    LookupFailed(String),
    #[error("picture download failed: {0}")]
    DownloadFailed(String),
    #[error("graph endpoint rate limited; retry after {retry_after:?}")]
    RateLimited { retry_after: std::time::Duration },
}

#[async_trait]
pub trait GraphProvider: Send + Sync {
    async fn picture_url(&self, page_id: &str) -> Result<String, GraphError>;

    /// Downloads `url`, returning the reported content type and the body.
    async fn download(&self, url: &str) -> Result<(String, Vec<u8>), GraphError>;
}

/// Serves fixed pictures from memory and counts calls.
#[derive(Debug, Default)]
pub struct SimulatedGraphProvider {
    pictures: HashMap<String, (String, Vec<u8>)>,
    calls: AtomicUsize,
    latency: std::time::Duration,
    throttled: Option<std::time::Duration>,
}

impl SimulatedGraphProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every page the ad generator emits, each mapped to the fixture PNG.
    pub fn with_fixture_pages() -> Self {
        let mut g = Self::new();
        for page_id in super::simulated::fixture_page_ids() {
            g = g.with_picture(page_id, "image/png", FIXTURE_PICTURE.to_vec());
        }
        g
    }

    pub fn with_picture(mut self, page_id: &str, content_type: &str, bytes: Vec<u8>) -> Self {
        self.pictures.insert(page_id.to_string(), (content_type.to_string(), bytes));
        self
    }

    /// Answer every lookup with a rate-limit error carrying `retry_after`.
    pub fn throttled(mut self, retry_after: std::time::Duration) -> Self {
        self.throttled = Some(retry_after);
        self
    }

    /// Delay every download by `latency`.
    pub fn with_latency(mut self, latency: std::time::Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Total `picture_url` plus `download` calls served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl GraphProvider for SimulatedGraphProvider {
    async fn picture_url(&self, page_id: &str) -> Result<String, GraphError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(retry_after) = self.throttled {
            return Err(GraphError::RateLimited { retry_after });
        }
        if self.pictures.contains_key(page_id) {
            Ok(format!("sim://pictures/{page_id}"))
        } else {
            Err(GraphError::LookupFailed(page_id.to_string()))
        }
    }

    async fn download(&self, url: &str) -> Result<(String, Vec<u8>), GraphError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if !self.latency.is_zero() {
            tokio::time::sleep(self.latency).await;
        }
        url.strip_prefix("sim://pictures/")
            .and_then(|id| self.pictures.get(id))
            .cloned()
            .ok_or_else(|| GraphError::DownloadFailed(format!("no such fixture {url}")))
    }
}

/// Graph API client: `GET {base}/{page_id}/picture?redirect=0` for the
/// URL, then a plain GET of the image.
pub struct LiveGraphProvider {
    client: reqwest::Client,
    config: ProviderConfig,
    limiter: Arc<RateLimiter>,
    backoff: Backoff,
}

#[derive(Deserialize)]
struct PictureEnvelope {
    data: Option<PictureData>,
}

#[derive(Deserialize)]
struct PictureData {
    url: Option<String>,
}

impl LiveGraphProvider {
    pub fn new(config: ProviderConfig, limiter: Arc<RateLimiter>) -> Self {
        let backoff = config.backoff();
        LiveGraphProvider { client: reqwest::Client::new(), config, limiter, backoff }
    }

    async fn try_download(&self, url: &str) -> Result<(String, Vec<u8>), String> {
        let resp = self.client.get(url).send().await.map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("HTTP {}", resp.status()));
        }
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("application/octet-stream")
            .to_string();
        let bytes = resp.bytes().await.map_err(|e| e.to_string())?;
        Ok((content_type, bytes.to_vec()))
    }
}

#[async_trait]
impl GraphProvider for LiveGraphProvider {
    async fn picture_url(&self, page_id: &str) -> Result<String, GraphError> {
        let lookup_failed = |why: String| GraphError::LookupFailed(format!("{page_id}: {why}"));
        self.limiter.acquire_permit().await;
        let url = format!("{}/{}/picture", self.config.base_url.trim_end_matches('/'), page_id);
        let resp = self
            .client
            .get(url)
            .bearer_auth(&self.config.access_token)
            .query(&[("redirect", "0"), ("type", "large")])
            .send()
            .await
            .map_err(|e| lookup_failed(e.to_string()))?;
        if resp.status() == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(GraphError::RateLimited { retry_after: super::live::retry_after(resp.headers()) });
        }
        if !resp.status().is_success() {
            return Err(lookup_failed(format!("HTTP {}", resp.status())));
        }
        let envelope: PictureEnvelope = resp.json().await.map_err(|e| lookup_failed(e.to_string()))?;
        envelope
            .data
            .and_then(|d| d.url)
            .filter(|u| !u.is_empty())
            .ok_or_else(|| lookup_failed("response carried no url".into()))
    }

    async fn download(&self, url: &str) -> Result<(String, Vec<u8>), GraphError> {
        let mut attempt = 0;
        loop {
            match self.try_download(url).await {
                Ok(ok) => return Ok(ok),
                Err(why) if attempt >= self.config.retry_limit => return Err(GraphError::DownloadFailed(why)),
                Err(_) => {
                    let delay = self.backoff.delay(attempt, &mut rand::thread_rng());
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
            }
        }
    }
}
