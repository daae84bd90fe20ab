use std::time::Duration;

use rand::Rng;

/// Exponential backoff with jitter: the nominal delay for attempt `n` is
/// `base * factor^n` capped at `cap`, and the actual delay is drawn
/// uniformly from the upper half of that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub factor: f64,
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff { base: Duration::from_secs(1), factor: 2.0, cap: Duration::from_secs(60) }
    }
}

impl Backoff {
    pub fn nominal(&self, attempt: u32) -> Duration {
        let scaled = self.base.as_secs_f64() * self.factor.powi(attempt.min(64) as i32);
        Duration::from_secs_f64(scaled.min(self.cap.as_secs_f64()))
    }

    pub fn delay<R: Rng + ?Sized>(&self, attempt: u32, rng: &mut R) -> Duration {
        let nominal = self.nominal(attempt);
        nominal.mul_f64(rng.gen_range(0.5..=1.0))
    }
}
