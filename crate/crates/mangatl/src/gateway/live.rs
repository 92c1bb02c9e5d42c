use std::time::{Duration, Instant};

use base64::Engine;
use mangatl_core::gateway::{LlmRequest, LlmResponse};
use serde_json::{json, Value};

use super::{ChatBackend, GatewayError};

pub const ENV_ENDPOINT: &str = "MANGATL_ENDPOINT";
pub const ENV_API_KEY: &str = "MANGATL_API_KEY";
pub const ENV_API_HEADER: &str = "MANGATL_API_HEADER";

#[derive(Clone)]
pub struct LiveConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub api_key: Option<String>,
    /// Header carrying the key; `Authorization` gets a `Bearer ` prefix.
    pub api_header: String,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl std::fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveConfig")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("api_header", &self.api_header)
            .field("retries", &self.retries)
            .finish()
    }
}

impl LiveConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            api_header: "Authorization".into(),
            retries: 3,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(300),
        }
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| GatewayError::Backend(format!("{ENV_ENDPOINT} is not set")))?;
        let mut cfg = Self::new(endpoint);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        if let Ok(h) = std::env::var(ENV_API_HEADER) {
            cfg.api_header = h;
        }
        Ok(cfg)
    }
}

/// Chat-completion client sending images inline as base64 data URLs.
pub struct LiveBackend {
    cfg: LiveConfig,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(cfg: LiveConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { cfg, agent }
    }
}

pub fn request_body(request: &LlmRequest) -> Value {
    let b64 = base64::engine::general_purpose::STANDARD;
    let messages: Vec<Value> = request
        .messages
        .iter()
        .map(|m| {
            let role = serde_json::to_value(m.role).expect("role serializes");
            if m.role != mangatl_core::gateway::Role::User {
                return json!({"role": role, "content": m.text});
            }
            let mut content = vec![json!({"type": "text", "text": m.text})];
            for img in &request.images {
                let url = format!(
                    "data:{};base64,{}",
                    img.format.mime(),
                    b64.encode(&img.bytes)
                );
                content.push(json!({"type": "image_url", "image_url": {"url": url}}));
            }
            json!({"role": role, "content": content})
        })
        .collect();
    json!({
        "model": request.model,
        "temperature": request.temperature,
        "max_tokens": request.max_output,
        "messages": messages,
    })
}

pub fn parse_reply(
    body: &str,
    fallback_model: &str,
    latency_ms: u64,
) -> Result<LlmResponse, GatewayError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::Backend(format!("malformed reply: {e}")))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Backend("reply has no choices[0].message.content".into()))?;
    let tokens = |p: &str| v.pointer(p).and_then(Value::as_u64).unwrap_or(0);
    Ok(LlmResponse {
        text: text.to_owned(),
        input_tokens: tokens("/usage/prompt_tokens"),
        output_tokens: tokens("/usage/completion_tokens"),
        latency_ms,
        backend_id: v
            .get("model")
            .and_then(Value::as_str)
            .unwrap_or(fallback_model)
            .to_owned(),
    })
}

fn snippet(s: &str) -> String {
    s.chars().take(200).collect()
}

impl ChatBackend for LiveBackend {
    fn send(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        request
            .validate()
            .map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
        let body = request_body(request).to_string();
        let mut last = String::new();
        for attempt in 0..=self.cfg.retries {
            if attempt > 0 {
                std::thread::sleep(self.cfg.backoff * 2u32.saturating_pow(attempt - 1));
            }
            let mut call = self
                .agent
                .post(&self.cfg.endpoint)
                .header("Content-Type", "application/json");
            if let Some(key) = &self.cfg.api_key {
                let value = if self.cfg.api_header.eq_ignore_ascii_case("authorization") {
                    format!("Bearer {key}")
                } else {
                    key.clone()
                };
                call = call.header(self.cfg.api_header.as_str(), value);
            }
            let started = Instant::now();
            match call.send(body.as_str()) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if (200..300).contains(&status) {
                        return parse_reply(
                            &text,
                            &request.model,
                            started.elapsed().as_millis() as u64,
                        );
                    }
                    last = format!("HTTP {status}: {}", snippet(&text));
                    if !(status == 408 || status == 429 || status >= 500) {
                        break;
                    }
                }
                Err(e) => last = format!("transport: {e}"),
            }
            log::warn!("chat request attempt {} failed: {last}", attempt + 1);
        }
        Err(GatewayError::Backend(last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stub::StubServer;
    use mangatl_core::gateway::{EncodedImage, ImageFormat, RequestSettings};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::{Arc, Mutex};

    fn req() -> LlmRequest {
        let img = EncodedImage {
            bytes: vec![1, 2, 3],
            format: ImageFormat::Jpeg,
            width: 1,
            height: 1,
            max_side: 8,
        };
        LlmRequest::user(&RequestSettings::default(), "translate".into(), vec![img])
    }

    const OK: &str = r#"{"model":"m-1","choices":[{"message":{"content":"[hi]"}}],"usage":{"prompt_tokens":12,"completion_tokens":4}}"#;

    fn cfg(url: String) -> LiveConfig {
        let mut c = LiveConfig::new(format!("{url}/v1/chat/completions"));
        c.backoff = Duration::from_millis(1);
        c.timeout = Duration::from_secs(10);
        c
    }

    #[test]
    fn body_carries_inline_images() {
        let b = request_body(&req());
        assert_eq!(
            b["messages"][0]["content"][1]["image_url"]["url"],
            "data:image/jpeg;base64,AQID"
        );
        assert_eq!(b["max_tokens"], 4096);
    }

    #[test]
    fn sends_key_in_configured_header() {
        let seen = Arc::new(Mutex::new(None));
        let s2 = seen.clone();
        let server = StubServer::spawn(move |r| {
            *s2.lock().unwrap() = r.header("x-api-key").map(str::to_owned);
            (200, OK.into())
        })
        .unwrap();
        let mut c = cfg(server.url());
        c.api_key = Some("sk-test".into());
        c.api_header = "x-api-key".into();
        let r = LiveBackend::new(c).send(&req()).unwrap();
        assert_eq!(r.text, "[hi]");
        assert_eq!((r.input_tokens, r.output_tokens), (12, 4));
        assert_eq!(r.backend_id, "m-1");
        assert_eq!(seen.lock().unwrap().as_deref(), Some("sk-test"));
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c2 = calls.clone();
        let server = StubServer::spawn(move |_| {
            if c2.fetch_add(1, Ordering::SeqCst) < 2 {
                (503, "{}".into())
            } else {
                (200, OK.into())
            }
        })
        .unwrap();
        assert!(LiveBackend::new(cfg(server.url())).send(&req()).is_ok());
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_retries() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c2 = calls.clone();
        let server = StubServer::spawn(move |_| {
            c2.fetch_add(1, Ordering::SeqCst);
            (500, "{}".into())
        })
        .unwrap();
        let mut c = cfg(server.url());
        c.retries = 2;
        assert!(matches!(
            LiveBackend::new(c).send(&req()),
            Err(GatewayError::Backend(_))
        ));
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c2 = calls.clone();
        let server = StubServer::spawn(move |_| {
            c2.fetch_add(1, Ordering::SeqCst);
            (401, r#"{"error":"bad key"}"#.into())
        })
        .unwrap();
        let err = LiveBackend::new(cfg(server.url()))
            .send(&req())
            .unwrap_err();
        assert!(err.to_string().contains("401"));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn debug_hides_key() {
        let mut c = LiveConfig::new("http://x");
        c.api_key = Some("sk-secret".into());
        assert!(!format!("{c:?}").contains("sk-secret"));
    }
}
