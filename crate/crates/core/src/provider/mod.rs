//! Access to an Ads-Library-style archive.
//!
//! [`AdProvider`] is the contract the collector depends on. Two
//! implementations ship: [`LiveProvider`] for the real HTTP archive and
//! [`SimulatedProvider`] for deterministic offline fixtures. Profile
//! pictures come through the parallel [`GraphProvider`] contract.

mod backoff;
mod graph;
mod limiter;
mod live;
mod simulated;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::domain::{ActiveStatus, AdRecord, JobSpec};

pub use backoff::Backoff;
pub use graph::{GraphError, GraphProvider, LiveGraphProvider, SimulatedGraphProvider, FIXTURE_PICTURE};
pub use limiter::{RateLimiter, WindowLimiter, WINDOW};
pub use live::{parse_archive_record, LiveProvider};
pub use simulated::{fixture_job_spec, seed_simulated, SimulatedProvider, FIXTURE_COUNTRIES, FIXTURE_KEYWORD, FIXTURE_REGIONS};

/// Opaque continuation token issued by a provider.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageCursor(String);

impl PageCursor {
    pub fn new(token: impl Into<String>) -> Option<Self> {
        let token = token.into();
        (!token.is_empty()).then_some(PageCursor(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// One page of results. Records the provider could not decode are
/// dropped from `ads` and described in `malformed`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Page {
    pub ads: Vec<AdRecord>,
    pub next: Option<PageCursor>,
    pub malformed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("rate limited, retry after {retry_after:?}")]
    RateLimited { retry_after: Duration },
    #[error("authentication failed: {0}")]
    AuthFailed(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("cursor not valid for this query: {0}")]
    InvalidCursor(String),
    #[error("request rejected ({status}): {message}")]
    Rejected { status: u16, message: String },
}

impl ProviderError {
    pub fn kind(&self) -> &'static str {
        match self {
            ProviderError::RateLimited { .. } => "rate_limited",
            ProviderError::AuthFailed(_) => "auth_failed",
            ProviderError::Transport(_) => "transport",
            ProviderError::MalformedPayload(_) => "malformed_payload",
            ProviderError::InvalidCursor(_) => "invalid_cursor",
            ProviderError::Rejected { .. } => "rejected",
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::RateLimited { .. } | ProviderError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    pub access_token: String,
    pub max_requests_per_minute: u32,
    pub page_size: u32,
    pub retry_limit: u32,
    #[serde(with = "secs_f64")]
    pub retry_base: Duration,
    #[serde(with = "secs_f64")]
    pub retry_cap: Duration,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            base_url: "https://graph.facebook.com/v19.0".into(),
            access_token: String::new(),
            max_requests_per_minute: 60,
            page_size: 100,
            retry_limit: 3,
            retry_base: Duration::from_secs(1),
            retry_cap: Duration::from_secs(60),
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=250).contains(&self.page_size) {
            return Err(format!("page_size {} outside [1, 250]", self.page_size));
        }
        if self.max_requests_per_minute == 0 {
            return Err("max_requests_per_minute must be positive".into());
        }
        url::Url::parse(&self.base_url).map_err(|e| format!("base_url: {e}"))?;
        Ok(())
    }

    pub fn backoff(&self) -> Backoff {
        Backoff { base: self.retry_base, factor: 2.0, cap: self.retry_cap }
    }
}

mod secs_f64 {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[async_trait]
pub trait AdProvider: Send + Sync {
    /// Fetches the page following `cursor` (or the first page) of ads
    /// matching `spec`. `next` is `None` exactly when results are exhausted.
    async fn fetch_page(&self, spec: &JobSpec, cursor: Option<&PageCursor>) -> Result<Page, ProviderError>;
}

/// Whether `ad` satisfies the search predicates of `spec`: keyword in any
/// text field, some reached region in a requested country, and delivery
/// status. Platforms are not part of the stored record and are left to
/// the archive.
pub fn spec_matches(spec: &JobSpec, ad: &AdRecord) -> bool {
    let term = spec.search_term.to_lowercase();
    let term_hit = ad.searchable_text().any(|t| t.to_lowercase().contains(&term));
    let country_hit = ad
        .regional_distribution
        .iter()
        .any(|share| spec.reached_countries.iter().any(|c| *c == share.country_code));
    let status_hit = match spec.active_status {
        ActiveStatus::All => true,
        ActiveStatus::Active => ad.is_active(),
        ActiveStatus::Inactive => !ad.is_active(),
    };
    term_hit && country_hit && status_hit
}
