//! Persisted record of one approach executed over one volume.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::strategy::Approach;

pub const RUN_FORMAT: &str = "mangatl.run/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// Stopped early on a backend failure; later units were not run.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineStatus {
    Ok,
    /// Every attempt at the unit failed to parse.
    Failed,
    NotRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeKind {
    Translate,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "message")]
pub enum ExchangeOutcome {
    Ok,
    ParseError(String),
    BackendError(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
    pub backend_id: String,
}

/// One request sent to the backend and what came back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub seq: usize,
    pub unit: usize,
    pub kind: ExchangeKind,
    pub attempt: usize,
    pub request_digest: String,
    pub prompt: String,
    /// SHA-256 of each attached image, in attachment order.
    pub images: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseRecord>,
    pub outcome: ExchangeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub line_id: String,
    /// Position of the line's page in the volume.
    pub page: usize,
    /// Empty unless `status` is `ok`.
    pub text: String,
    pub status: LineStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

/// Rolling summary after a page was folded in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub page: usize,
    pub page_cursor: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTotals {
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub lines: u64,
    pub failed_lines: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRun {
    pub format: String,
    pub volume: String,
    pub volume_title: String,
    pub approach: Approach,
    pub model: String,
    pub target_lang: String,
    pub temperature: f64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette_digest: Option<String>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exchanges: Vec<Exchange>,
    pub hypotheses: Vec<Hypothesis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summaries: Vec<SummaryRecord>,
    pub totals: RunTotals,
}

impl TranslationRun {
    /// Directory name of the run: `<volume>__<approach>__<model>`.
    pub fn dir_name(&self) -> String {
        alloc::format!(
            "{}__{}__{}",
            self.volume,
            self.approach.key(),
            crate::corpus::slug(&self.model)
        )
    }

    pub fn hypothesis(&self, line_id: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.line_id == line_id)
    }

    /// Recomputes `totals` from exchanges and hypotheses.
    pub fn recount(&mut self) {
        let mut t = RunTotals {
            requests: self.exchanges.len() as u64,
            ..RunTotals::default()
        };
        for e in &self.exchanges {
            if let Some(r) = &e.response {
                t.input_tokens += r.input_tokens;
                t.output_tokens += r.output_tokens;
            }
        }
        t.lines = self.hypotheses.len() as u64;
        t.failed_lines = self
            .hypotheses
            .iter()
            .filter(|h| h.status != LineStatus::Ok)
            .count() as u64;
        self.totals = t;
    }
}
