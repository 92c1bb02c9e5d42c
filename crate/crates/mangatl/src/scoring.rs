//! Client and stub for the learned-metric scoring service
//! (`POST /score {metric, items} -> {scores}`).

use std::time::Duration;

use mangatl_core::metrics::{chrf, ChrFParams, LearnedScorer, MetricError, MetricKind, ScoreItem};
use serde::{Deserialize, Serialize};

use crate::stub::StubServer;

#[derive(Serialize)]
struct ScoreRequest<'a> {
    metric: &'a str,
    items: &'a [ScoreItem],
}

#[derive(Deserialize)]
struct ScoreReply {
    scores: Vec<f64>,
}

pub struct ScoringClient {
    url: String,
    agent: ureq::Agent,
}

impl ScoringClient {
    /// `base` is the service root; requests go to `<base>/score`.
    pub fn new(base: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(600)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: format!("{}/score", base.trim_end_matches('/')),
            agent,
        }
    }
}

impl LearnedScorer for ScoringClient {
    fn score(&self, metric: MetricKind, items: &[ScoreItem]) -> Result<Vec<f64>, MetricError> {
        let body = serde_json::to_string(&ScoreRequest {
            metric: metric.name(),
            items,
        })
        .expect("request serializes");
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body.as_str())
            .map_err(|e| MetricError::Backend(format!("{}: {e}", self.url)))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| MetricError::Backend(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(MetricError::Backend(format!(
                "{} answered HTTP {status}",
                self.url
            )));
        }
        let reply: ScoreReply = serde_json::from_str(&text)
            .map_err(|e| MetricError::Protocol(format!("malformed reply: {e}")))?;
        if reply.scores.len() != items.len() {
            return Err(MetricError::Protocol(format!(
                "{} scores for {} items",
                reply.scores.len(),
                items.len()
            )));
        }
        if let Some(bad) = reply.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(MetricError::Protocol(format!(
                "score {bad} lies outside [0, 1]"
            )));
        }
        Ok(reply.scores)
    }
}

/// Behaviour of the stub scoring service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StubMode {
    /// Every item gets the same score.
    Constant(f64),
    /// Item `i` of `n` scores `i / n`.
    Index,
    /// ChrF of the item divided by 100.
    ChrfProxy,
}

fn stub_scores(mode: StubMode, items: &[ScoreItem]) -> Vec<f64> {
    let n = items.len().max(1) as f64;
    items
        .iter()
        .enumerate()
        .map(|(i, it)| match mode {
            StubMode::Constant(v) => v,
            StubMode::Index => i as f64 / n,
            StubMode::ChrfProxy => chrf(&it.hypothesis, &it.reference, &ChrFParams::default())
                .map_or(0.0, |s| s / 100.0),
        })
        .collect()
}

#[derive(Deserialize)]
struct IncomingScoreRequest {
    #[allow(dead_code)]
    metric: String,
    items: Vec<ScoreItem>,
}

/// Serves the scoring protocol on localhost until dropped.
pub fn spawn_scoring_stub(mode: StubMode) -> std::io::Result<StubServer> {
    StubServer::spawn(move |req| {
        if req.method != "POST" || req.path != "/score" {
            return (404, r#"{"error":"not found"}"#.into());
        }
        match serde_json::from_slice::<IncomingScoreRequest>(&req.body) {
            Ok(r) => (
                200,
                serde_json::json!({ "scores": stub_scores(mode, &r.items) }).to_string(),
            ),
            Err(e) => (
                400,
                serde_json::json!({ "error": e.to_string() }).to_string(),
            ),
        }
    })
}
