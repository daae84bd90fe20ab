use std::time::Duration;

use crate::clock::Clock;
use crate::provider::{AdProvider, PageCursor, ProviderError};
use crate::store::{Store, StoreError, UpsertReport};

use super::{Job, JobState, PollError, PollReport};

/// Knobs for one pass over a job's result pages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleLimits {
    pub max_pages_per_cycle: u32,
    /// How many rate-limit suspensions a single cycle tolerates.
    pub max_rate_limit_waits: u32,
    /// Upper bound on any single rate-limit wait.
    pub max_rate_limit_wait: Duration,
}

impl Default for CycleLimits {
    fn default() -> Self {
        CycleLimits {
            max_pages_per_cycle: 40,
            max_rate_limit_waits: 8,
            max_rate_limit_wait: Duration::from_secs(300),
        }
    }
}

fn poll_error(kind: &str, message: impl Into<String>) -> PollError {
    PollError { kind: kind.to_string(), message: message.into() }
}

/// Pages through the archive for `job` from the first page, upserting each
/// page as one batch, and records the resulting report on the job.
///
/// Errors never escape: they end the cycle and are listed in the report.
/// A rate-limit response suspends the cycle for the hinted wait and then
/// retries the same page. If the job is deleted while a page is in flight
/// the cycle stops at that page boundary without storing it.
pub async fn run_poll_cycle(
    store: &Store,
    provider: &dyn AdProvider,
    clock: &dyn Clock,
    job: &Job,
    limits: &CycleLimits,
) -> PollReport {
    let started_at = clock.now();
    let mut upsert = UpsertReport::default();
    let mut errors = Vec::new();
    let mut pages_fetched = 0u32;
    let mut waits = 0u32;
    let mut cursor: Option<PageCursor> = None;

    if job.state != JobState::Active {
        errors.push(poll_error("cancelled", "job is not active"));
    } else {
        while pages_fetched < limits.max_pages_per_cycle {
            let page = match provider.fetch_page(&job.spec, cursor.as_ref()).await {
                Ok(page) => page,
                Err(ProviderError::RateLimited { retry_after }) if waits < limits.max_rate_limit_waits => {
                    waits += 1;
                    let wait = retry_after.min(limits.max_rate_limit_wait);
                    tracing::info!(job = %job.job_id, ?wait, "rate limited, suspending cycle");
                    tokio::time::sleep(wait).await;
                    continue;
                }
                Err(e) => {
                    errors.push(poll_error(e.kind(), e.to_string()));
                    break;
                }
            };
            pages_fetched += 1;
            for why in &page.malformed {
                errors.push(poll_error("malformed_payload", why.clone()));
            }

            match store.job_state(&job.job_id) {
                Ok(Some(JobState::Active)) => {}
                Ok(_) => {
                    errors.push(poll_error("cancelled", "job deleted during cycle"));
                    break;
                }
                Err(e) => {
                    errors.push(poll_error("storage_failure", e.to_string()));
                    break;
                }
            }
            match store.upsert_ads(&job.job_id, &page.ads, clock.now()) {
                Ok(r) => upsert.absorb(r),
                Err(StoreError::JobDeleted(_)) => {
                    errors.push(poll_error("cancelled", "job deleted during cycle"));
                    break;
                }
                Err(e) => {
                    errors.push(poll_error("storage_failure", e.to_string()));
                    break;
                }
            }

            cursor = page.next;
            if cursor.is_none() {
                break;
            }
        }
        if cursor.is_some() && pages_fetched >= limits.max_pages_per_cycle {
            tracing::info!(job = %job.job_id, pages_fetched, "page budget reached, resuming next cycle");
        }
    }

    let report = PollReport { started_at, finished_at: clock.now().max(started_at), pages_fetched, upsert, errors };
    if let Err(e) = store.record_poll(&job.job_id, &report) {
        tracing::error!(job = %job.job_id, error = %e, "could not persist poll report");
    }
    report
}
