//! The rolling-window limiter that paces archive requests. A burst of 12
//! requests against a limit of 5 per minute.

use std::time::Duration;

use adtracker::provider::WindowLimiter;

fn main() {
    let mut limiter = WindowLimiter::new(5);
    for i in 0..12u64 {
        let arrival = Duration::from_secs(i * 2);
        let grant = limiter.reserve(arrival);
        println!("request {i:>2}: arrives {:>3}s, sent {:>3}s, waits {:>2}s", arrival.as_secs(), grant.as_secs(), (grant - arrival).as_secs());
    }
}
