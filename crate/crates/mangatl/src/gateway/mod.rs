//! Chat backends: live HTTP, cassette record and replay, and an in-flight
//! limiter usable with any of them.

mod cassette;
mod live;

use std::sync::{Condvar, Mutex};

pub use cassette::{
    today, Cassette, CassetteEntry, CassetteMeta, RecordingBackend, ReplayBackend, CASSETTE_FORMAT,
};
pub use live::{LiveBackend, LiveConfig, ENV_API_HEADER, ENV_API_KEY, ENV_ENDPOINT};
use mangatl_core::gateway::{LlmRequest, LlmResponse};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("no cassette entry for request {0}")]
    CassetteMiss(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cassette: {0}")]
    Cassette(String),
}

pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError>;
}

impl<F> ChatBackend for F
where
    F: Fn(&LlmRequest) -> Result<LlmResponse, GatewayError> + Send + Sync,
{
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        self(request)
    }
}

/// Caps the number of concurrent `send` calls on the wrapped backend.
pub struct Limited<B> {
    inner: B,
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl<B: ChatBackend> Limited<B> {
    pub fn new(inner: B, limit: usize) -> Self {
        Self {
            inner,
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

struct Slot<'a> {
    count: &'a Mutex<usize>,
    freed: &'a Condvar,
}

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        *self.count.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.freed.notify_one();
    }
}

impl<B: ChatBackend> ChatBackend for Limited<B> {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        {
            let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
            while *n >= self.limit {
                n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
            }
            *n += 1;
        }
        let _slot = Slot {
            count: &self.in_flight,
            freed: &self.freed,
        };
        self.inner.send(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mangatl_core::gateway::RequestSettings;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    #[test]
    fn limiter_bounds_concurrency() {
        let now = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let backend = |_: &LlmRequest| {
            let n = now.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(n, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            now.fetch_sub(1, Ordering::SeqCst);
            Ok(LlmResponse {
                text: "ok".into(),
                input_tokens: 0,
                output_tokens: 0,
                latency_ms: 0,
                backend_id: "t".into(),
            })
        };
        let limited = Limited::new(backend, 2);
        let req = LlmRequest::user(&RequestSettings::default(), "x".into(), vec![]);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| limited.send(&req).unwrap());
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert!(peak.load(Ordering::SeqCst) >= 1);
    }
}
