//! Token-bucket rate limiting. Capacity bounds the burst; the refill rate
//! bounds the sustained request rate.

use std::sync::Mutex;
use std::time::{Duration, Instant};

pub struct TokenBucket {
    capacity: f64,
    tokens: f64,
    per_sec: f64,
    last_refill: Instant,
}

impl TokenBucket {
    pub fn new(capacity: usize, per_minute: f64, now: Instant) -> TokenBucket {
        let capacity = capacity.max(1) as f64;
        TokenBucket {
            capacity,
            tokens: capacity,
            per_sec: per_minute / 60.0,
            last_refill: now,
        }
    }

    /// Takes one token if available, otherwise reports how long until the
    /// next token accrues.
    pub fn try_take(&mut self, now: Instant) -> Option<Duration> {
        let dt = now.saturating_duration_since(self.last_refill).as_secs_f64();
        self.tokens = (self.tokens + dt * self.per_sec).min(self.capacity);
        self.last_refill = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            None
        } else {
            let deficit = 1.0 - self.tokens;
            Some(Duration::from_secs_f64(deficit / self.per_sec))
        }
    }
}

/// Bucket shared across worker threads; `acquire` blocks the calling worker
/// until a token is granted.
pub struct SharedThrottle {
    bucket: Mutex<TokenBucket>,
}

impl SharedThrottle {
    pub fn new(capacity: usize, per_minute: f64) -> SharedThrottle {
        SharedThrottle {
            bucket: Mutex::new(TokenBucket::new(capacity, per_minute, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut bucket = self.bucket.lock().expect("throttle lock poisoned");
                bucket.try_take(Instant::now())
            };
            match wait {
                None => return,
                Some(d) => std::thread::sleep(d),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_capacity_then_refill_rate() {
        let t0 = Instant::now();
        let mut bucket = TokenBucket::new(2, 60.0, t0); // 1 token/s
        assert!(bucket.try_take(t0).is_none());
        assert!(bucket.try_take(t0).is_none());
        let wait = bucket.try_take(t0).expect("bucket empty");
        assert!((wait.as_secs_f64() - 1.0).abs() < 1e-9);
        // after one second a single token has accrued
        let t1 = t0 + Duration::from_secs(1);
        assert!(bucket.try_take(t1).is_none());
        assert!(bucket.try_take(t1).is_some());
    }

    #[test]
    fn granted_rate_never_exceeds_limit_plus_one_burst() {
        let t0 = Instant::now();
        // 600 rpm = 10/s, burst 3
        let mut bucket = TokenBucket::new(3, 600.0, t0);
        let mut grant_times: Vec<f64> = Vec::new();
        // hammer the bucket every 5 ms for 5 simulated seconds
        for step in 0..1000 {
            let now = t0 + Duration::from_millis(step * 5);
            if bucket.try_take(now).is_none() {
                grant_times.push(step as f64 * 0.005);
            }
        }
        // in any sliding 1 s window: at most rate + burst grants
        for (i, &start) in grant_times.iter().enumerate() {
            let in_window = grant_times[i..]
                .iter()
                .take_while(|&&t| t < start + 1.0)
                .count();
            assert!(in_window <= 13, "{in_window} grants within one second");
        }
        // and the sustained throughput is close to the configured rate
        assert!(grant_times.len() as f64 <= 3.0 + 10.0 * 5.0 + 1.0);
        assert!(grant_times.len() >= 45);
    }
}
