//! Token bucket with a concurrency cap, shared by all workers.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

#[derive(Debug)]
struct State {
    in_flight: usize,
    tokens: f64,
    last: Instant,
}

#[derive(Debug)]
pub struct RateLimiter {
    max_concurrent: usize,
    per_second: f64,
    capacity: f64,
    state: Mutex<State>,
    cv: Condvar,
}

/// Held for the duration of one admitted call.
pub struct Permit<'a> {
    limiter: &'a RateLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut s = self.limiter.state.lock().unwrap_or_else(|e| e.into_inner());
        s.in_flight -= 1;
        self.limiter.cv.notify_all();
    }
}

impl RateLimiter {
    pub fn new(max_concurrent: usize, calls_per_minute: u32) -> Self {
        let max_concurrent = max_concurrent.max(1);
        let capacity = (max_concurrent as f64).max(1.0);
        Self {
            max_concurrent,
            per_second: calls_per_minute.max(1) as f64 / 60.0,
            capacity,
            state: Mutex::new(State {
                in_flight: 0,
                tokens: capacity,
                last: Instant::now(),
            }),
            cv: Condvar::new(),
        }
    }

    /// Blocks until both a concurrency slot and a token are available.
    pub fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            let now = Instant::now();
            let elapsed = now.duration_since(s.last).as_secs_f64();
            s.tokens = (s.tokens + elapsed * self.per_second).min(self.capacity);
            s.last = now;
            if s.in_flight < self.max_concurrent && s.tokens >= 1.0 {
                s.tokens -= 1.0;
                s.in_flight += 1;
                return Permit { limiter: self };
            }
            let wait = if s.tokens >= 1.0 {
                Duration::from_millis(50)
            } else {
                Duration::from_secs_f64((1.0 - s.tokens) / self.per_second)
            };
            s = self.cv.wait_timeout(s, wait).unwrap_or_else(|e| e.into_inner()).0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn caps_concurrency() {
        let limiter = Arc::new(RateLimiter::new(2, 60_000));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (l, live, peak) = (limiter.clone(), live.clone(), peak.clone());
                std::thread::spawn(move || {
                    let _p = l.acquire();
                    let n = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(n, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                    live.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
