//! Token cost accounting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::run::TranslationRun;

/// Price per token for one model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Price {
    pub input: f64,
    pub output: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub models: BTreeMap<String, Price>,
}

impl PriceTable {
    pub fn price(&self, model: &str) -> Option<Price> {
        self.models.get(model).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLine {
    pub volume: String,
    pub approach: String,
    pub model: String,
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// `None` when the table has no price for the model.
    pub cost: Option<f64>,
}

pub fn cost_report(run: &TranslationRun, prices: &PriceTable) -> CostLine {
    let mut line = CostLine {
        volume: run.volume.clone(),
        approach: String::from(run.approach.key()),
        model: run.model.clone(),
        requests: run.exchanges.len() as u64,
        input_tokens: 0,
        output_tokens: 0,
        cost: None,
    };
    for r in run.exchanges.iter().filter_map(|e| e.response.as_ref()) {
        line.input_tokens += r.input_tokens;
        line.output_tokens += r.output_tokens;
    }
    line.cost = prices
        .price(&run.model)
        .map(|p| line.input_tokens as f64 * p.input + line.output_tokens as f64 * p.output);
    line
}

/// Totals grouped by `(volume, approach, model)`.
pub fn cost_summary(runs: &[TranslationRun], prices: &PriceTable) -> Vec<CostLine> {
    let mut grouped: BTreeMap<(String, String, String), CostLine> = BTreeMap::new();
    for run in runs {
        let c = cost_report(run, prices);
        let key = (c.volume.clone(), c.approach.clone(), c.model.clone());
        match grouped.get_mut(&key) {
            Some(acc) => {
                acc.requests += c.requests;
                acc.input_tokens += c.input_tokens;
                acc.output_tokens += c.output_tokens;
                acc.cost = match (acc.cost, c.cost) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
            }
            None => {
                grouped.insert(key, c);
            }
        }
    }
    grouped.into_values().collect()
}
