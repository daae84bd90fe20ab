//! Rolling-window request limiter shared by everything that talks to the
//! archive.

use std::collections::VecDeque;
use std::time::Duration;

use parking_lot::Mutex;
use tokio::time::Instant;

pub const WINDOW: Duration = Duration::from_secs(60);

/// Reservation bookkeeping for a rolling 60 s window, driven by explicit
/// timestamps so it can be exercised with a mock clock.
///
/// Each reservation is granted at the earliest instant `g >= now` such that
/// no half-open 60 s interval holds more than `max_per_window` grants.
#[derive(Debug, Clone)]
pub struct WindowLimiter {
    max_per_window: usize,
    grants: VecDeque<Duration>,
}

impl WindowLimiter {
    pub fn new(max_per_window: u32) -> Self {
        assert!(max_per_window > 0, "limiter needs a positive permit count");
        WindowLimiter { max_per_window: max_per_window as usize, grants: VecDeque::new() }
    }

    /// Reserves a permit for a caller arriving at `now` (offset from an
    /// arbitrary epoch) and returns the instant the permit becomes usable.
    pub fn reserve(&mut self, now: Duration) -> Duration {
        let mut grant = now;
        if let Some(&last) = self.grants.back() {
            grant = grant.max(last);
        }
        if self.grants.len() == self.max_per_window {
            let oldest = self.grants[0];
            grant = grant.max(oldest + WINDOW);
            self.grants.pop_front();
        }
        self.grants.push_back(grant);
        grant
    }
}

/// Async permit source backed by [`WindowLimiter`] and tokio's clock.
#[derive(Debug)]
pub struct RateLimiter {
    epoch: Instant,
    state: Mutex<WindowLimiter>,
}

impl RateLimiter {
    pub fn new(max_requests_per_minute: u32) -> Self {
        RateLimiter { epoch: Instant::now(), state: Mutex::new(WindowLimiter::new(max_requests_per_minute)) }
    }

    /// Waits until issuing one more request keeps the rolling 60 s count
    /// within the limit.
    pub async fn acquire_permit(&self) {
        let now = Instant::now().saturating_duration_since(self.epoch);
        let grant = self.state.lock().reserve(now);
        if grant > now {
            tokio::time::sleep_until(self.epoch + grant).await;
        }
    }
}
