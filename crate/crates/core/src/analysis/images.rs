use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::domain::Timestamp;
use crate::provider::{GraphError, GraphProvider};

pub const DEFAULT_IMAGE_TTL_SECS: i64 = 7 * 24 * 3600;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileImage {
    pub page_id: String,
    pub content_type: String,
    pub bytes: Vec<u8>,
    pub fetched_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("invalid page id {0:?}")]
    InvalidPageId(String),
    #[error("no profile picture for page: {0}")]
    GraphLookupFailed(String),
    #[error("profile picture download failed: {0}")]
    DownloadFailed(String),
    #[error("content type {0:?} is not an image")]
    NotAnImage(String),
    #[error("graph endpoint rate limited; retry after {0:?}")]
    RateLimited(std::time::Duration),
    #[error("image store: {0}")]
    Storage(String),
}

impl ImageError {
    pub fn kind(&self) -> &'static str {
        match self {
            ImageError::InvalidPageId(_) => "invalid_page_id",
            ImageError::GraphLookupFailed(_) => "graph_lookup_failed",
            ImageError::DownloadFailed(_) => "download_failed",
            ImageError::NotAnImage(_) => "not_an_image",
            ImageError::RateLimited(_) => "rate_limited",
            ImageError::Storage(_) => "storage_failure",
        }
    }
}

impl From<GraphError> for ImageError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::LookupFailed(m) => ImageError::GraphLookupFailed(m),
            GraphError::DownloadFailed(m) => ImageError::DownloadFailed(m),
            GraphError::RateLimited { retry_after } => ImageError::RateLimited(retry_after),
        }
    }
}

fn storage(e: impl std::fmt::Display) -> ImageError {
    ImageError::Storage(e.to_string())
}

#[derive(Serialize, Deserialize)]
struct Meta {
    content_type: String,
    fetched_at: Timestamp,
}

/// Page ids become file names, so only `[A-Za-z0-9_-]` is accepted.
pub fn is_path_safe_page_id(page_id: &str) -> bool {
    !page_id.is_empty()
        && page_id.len() <= 128
        && page_id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn is_image_mime(content_type: &str) -> bool {
    let essence = content_type.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
    essence.strip_prefix("image/").is_some_and(|sub| !sub.is_empty())
}

/// Profile pictures on disk as `<page_id>.bin` plus a `<page_id>.meta` JSON
/// sidecar. Fetches are single-flight per page.
pub struct ImageCache {
    dir: PathBuf,
    graph: Arc<dyn GraphProvider>,
    clock: Arc<dyn Clock>,
    ttl_secs: i64,
    flights: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl ImageCache {
    pub fn new(dir: impl Into<PathBuf>, graph: Arc<dyn GraphProvider>, clock: Arc<dyn Clock>) -> Self {
        ImageCache {
            dir: dir.into(),
            graph,
            clock,
            ttl_secs: DEFAULT_IMAGE_TTL_SECS,
            flights: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_ttl_secs(mut self, ttl_secs: i64) -> Self {
        self.ttl_secs = ttl_secs;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn paths(&self, page_id: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{page_id}.bin")), self.dir.join(format!("{page_id}.meta")))
    }

    /// Handle for a stored image, used in reports.
    pub fn handle(page_id: &str) -> String {
        format!("{page_id}.bin")
    }

    /// Whatever is on disk for `page_id`, regardless of age.
    pub fn cached(&self, page_id: &str) -> Option<ProfileImage> {
        if !is_path_safe_page_id(page_id) {
            return None;
        }
        let (bin, meta) = self.paths(page_id);
        let meta: Meta = serde_json::from_slice(&std::fs::read(meta).ok()?).ok()?;
        let bytes = std::fs::read(bin).ok()?;
        if bytes.is_empty() {
            return None;
        }
        Some(ProfileImage { page_id: page_id.to_string(), content_type: meta.content_type, bytes, fetched_at: meta.fetched_at })
    }

    fn fresh(&self, img: &ProfileImage) -> bool {
        self.clock.now().epoch_seconds() - img.fetched_at.epoch_seconds() < self.ttl_secs
    }

    /// Returns the cached picture while it is younger than the TTL, otherwise
    /// looks up the picture URL, downloads it and stores it.
    pub async fn fetch_profile_image(&self, page_id: &str) -> Result<ProfileImage, ImageError> {
        if !is_path_safe_page_id(page_id) {
            return Err(ImageError::InvalidPageId(page_id.to_string()));
        }
        let flight = self.flights.lock().entry(page_id.to_string()).or_default().clone();
        let _guard = flight.lock().await;
        if let Some(img) = self.cached(page_id).filter(|i| self.fresh(i)) {
            return Ok(img);
        }
        let url = self.graph.picture_url(page_id).await?;
        let (content_type, bytes) = self.graph.download(&url).await?;
        if !is_image_mime(&content_type) {
            return Err(ImageError::NotAnImage(content_type));
        }
        if bytes.is_empty() {
            return Err(ImageError::DownloadFailed(format!("empty body from {url}")));
        }
        let img = ProfileImage { page_id: page_id.to_string(), content_type, bytes, fetched_at: self.clock.now() };
        self.persist(&img)?;
        Ok(img)
    }

    fn persist(&self, img: &ProfileImage) -> Result<(), ImageError> {
        std::fs::create_dir_all(&self.dir).map_err(storage)?;
        let (bin, meta) = self.paths(&img.page_id);
        let meta_json = serde_json::to_vec(&Meta { content_type: img.content_type.clone(), fetched_at: img.fetched_at })
            .map_err(storage)?;
        for (path, data) in [(bin, img.bytes.as_slice()), (meta, meta_json.as_slice())] {
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, data).map_err(storage)?;
            std::fs::rename(&tmp, &path).map_err(storage)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;
    use crate::provider::{SimulatedGraphProvider, FIXTURE_PICTURE};
    use std::time::Duration;

    const PAGE: &str = "100200300401";

    fn setup(graph: SimulatedGraphProvider) -> (tempfile::TempDir, Arc<SimulatedGraphProvider>, Arc<ManualClock>, ImageCache) {
        let dir = tempfile::tempdir().unwrap();
        let graph = Arc::new(graph);
        let clock = Arc::new(ManualClock::new(Timestamp::from_epoch_seconds(1_700_000_000)));
        let cache = ImageCache::new(dir.path().join("images"), graph.clone(), clock.clone());
        (dir, graph, clock, cache)
    }

    #[tokio::test]
    async fn fetch_then_cache_hit_then_expiry() {
        let (_d, graph, clock, cache) = setup(SimulatedGraphProvider::with_fixture_pages());
        let img = cache.fetch_profile_image(PAGE).await.unwrap();
        assert_eq!(img.content_type, "image/png");
        assert_eq!(img.bytes, FIXTURE_PICTURE);
        assert_eq!(std::fs::read(cache.dir().join(format!("{PAGE}.bin"))).unwrap(), FIXTURE_PICTURE);
        let meta: serde_json::Value =
            serde_json::from_slice(&std::fs::read(cache.dir().join(format!("{PAGE}.meta"))).unwrap()).unwrap();
        assert_eq!(meta["content_type"], "image/png");
        assert_eq!(meta["fetched_at"], "2023-11-14T22:13:20Z");
        assert_eq!(graph.calls(), 2);

        clock.advance(DEFAULT_IMAGE_TTL_SECS - 1);
        assert_eq!(cache.fetch_profile_image(PAGE).await.unwrap(), img);
        assert_eq!(graph.calls(), 2);

        clock.advance(1);
        let again = cache.fetch_profile_image(PAGE).await.unwrap();
        assert_eq!(graph.calls(), 4);
        assert_eq!(again.fetched_at, clock.now());
    }

    #[tokio::test]
    async fn failures_are_classified() {
        let g = SimulatedGraphProvider::new()
            .with_picture("html", "text/html; charset=utf-8", b"<html></html>".to_vec())
            .with_picture("empty", "image/png", Vec::new())
            .with_picture("upper", "IMAGE/JPEG", vec![1, 2, 3]);
        let (_d, _g, _c, cache) = setup(g);
        assert!(matches!(cache.fetch_profile_image("html").await, Err(ImageError::NotAnImage(_))));
        assert!(matches!(cache.fetch_profile_image("missing").await, Err(ImageError::GraphLookupFailed(_))));
        assert!(matches!(cache.fetch_profile_image("empty").await, Err(ImageError::DownloadFailed(_))));
        assert!(matches!(cache.fetch_profile_image("../etc").await, Err(ImageError::InvalidPageId(_))));
        assert!(matches!(cache.fetch_profile_image("").await, Err(ImageError::InvalidPageId(_))));
        assert!(cache.fetch_profile_image("upper").await.is_ok());
        assert!(cache.cached("html").is_none());
    }

    #[tokio::test(flavor = "multi_thread", worker_threads = 4)]
    async fn concurrent_requests_fetch_once() {
        let g = SimulatedGraphProvider::with_fixture_pages().with_latency(Duration::from_millis(50));
        let (_d, graph, _c, cache) = setup(g);
        let cache = Arc::new(cache);
        let tasks: Vec<_> = (0..16)
            .map(|i| {
                let cache = cache.clone();
                let page = if i % 2 == 0 { PAGE } else { "100200300402" };
                tokio::spawn(async move { cache.fetch_profile_image(page).await.unwrap() })
            })
            .collect();
        for t in tasks {
            t.await.unwrap();
        }
        // one lookup and one download per distinct page
        assert_eq!(graph.calls(), 4);
    }

    #[test]
    fn mime_gate() {
        assert!(is_image_mime("image/png"));
        assert!(is_image_mime("image/svg+xml; charset=utf-8"));
        assert!(!is_image_mime("image/"));
        assert!(!is_image_mime("application/octet-stream"));
    }
}
