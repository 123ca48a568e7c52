use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Default upstream request rate.
pub const REQUESTS_PER_SECOND: u32 = 2;
/// Default burst size. One token keeps every one-second window at two starts.
pub const BUCKET_CAPACITY: u32 = 1;

/// Blocking token bucket shared by every caller of one client.
///
/// Implemented as a theoretical-arrival-time schedule: each permit reserves
/// the next slot, so concurrent callers are served in lock order.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    burst: Duration,
    next: Mutex<Option<Instant>>,
}

impl Default for RateLimiter {
    fn default() -> Self {
        Self::new(BUCKET_CAPACITY, REQUESTS_PER_SECOND)
    }
}

impl RateLimiter {
    /// Panics if `capacity` or `per_second` is zero.
    pub fn new(capacity: u32, per_second: u32) -> Self {
        assert!(
            capacity > 0 && per_second > 0,
            "rate limiter needs a positive capacity and rate"
        );
        let interval = Duration::from_secs(1) / per_second;
        Self {
            interval,
            burst: interval * (capacity - 1),
            next: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Reserves a slot and returns how long the caller must wait for it.
    pub fn reserve(&self) -> Duration {
        let now = Instant::now();
        let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
        let tat = next.unwrap_or(now).max(now);
        let start = now.max(tat.checked_sub(self.burst).unwrap_or(now));
        *next = Some(tat.max(start) + self.interval);
        start - now
    }

    /// Blocks until a request may start.
    pub fn acquire(&self) {
        let wait = self.reserve();
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}
