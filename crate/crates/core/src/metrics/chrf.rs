//! Character n-gram F-score.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrFParams {
    pub max_n: usize,
    pub beta: f64,
    pub strip_whitespace: bool,
}

impl Default for ChrFParams {
    fn default() -> Self {
        Self {
            max_n: 6,
            beta: 2.0,
            strip_whitespace: true,
        }
    }
}

impl ChrFParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.max_n == 0 {
            return Err(MetricError::InvalidParams("max_n must be at least 1"));
        }
        if self.beta <= 0.0 || !self.beta.is_finite() {
            return Err(MetricError::InvalidParams("beta must be positive"));
        }
        Ok(())
    }
}

/// Per-order n-gram tallies: `[hyp_count, ref_count, matches]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChrFStats {
    pub orders: Vec<[u64; 3]>,
}

impl ChrFStats {
    pub fn add(&mut self, other: &ChrFStats) {
        if self.orders.len() < other.orders.len() {
            self.orders.resize(other.orders.len(), [0; 3]);
        }
        for (a, b) in self.orders.iter_mut().zip(&other.orders) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }

    /// F-beta of precision and recall averaged over the orders both sides
    /// have n-grams for, scaled to 0..100.
    pub fn score(&self, beta: f64) -> f64 {
        let mut precision = 0.0;
        let mut recall = 0.0;
        let mut effective = 0usize;
        for &[hyp, reference, matches] in &self.orders {
            if hyp > 0 && reference > 0 {
                precision += matches as f64 / hyp as f64;
                recall += matches as f64 / reference as f64;
                effective += 1;
            }
        }
        if effective == 0 {
            return 0.0;
        }
        precision /= effective as f64;
        recall /= effective as f64;
        if precision == 0.0 && recall == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall)
    }
}

fn prepare(text: &str, strip: bool) -> Vec<char> {
    if strip {
        text.chars().filter(|c| !c.is_whitespace()).collect()
    } else {
        text.chars().collect()
    }
}

fn ngrams(chars: &[char], n: usize) -> BTreeMap<&[char], u64> {
    let mut counts = BTreeMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

pub fn chrf_stats(
    hypothesis: &str,
    reference: &str,
    params: &ChrFParams,
) -> Result<ChrFStats, MetricError> {
    params.validate()?;
    let r = prepare(reference, params.strip_whitespace);
    if r.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let h = prepare(hypothesis, params.strip_whitespace);
    let orders = (1..=params.max_n)
        .map(|n| {
            let hc = ngrams(&h, n);
            let rc = ngrams(&r, n);
            let matches = hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            [hc.values().sum(), rc.values().sum(), matches]
        })
        .collect();
    Ok(ChrFStats { orders })
}

/// Sentence-level ChrF on a 0..100 scale.
pub fn chrf(hypothesis: &str, reference: &str, params: &ChrFParams) -> Result<f64, MetricError> {
    Ok(chrf_stats(hypothesis, reference, params)?.score(params.beta))
}

/// ChrF over statistics pooled across all pairs.
pub fn corpus_chrf<'a, I>(pairs: I, params: &ChrFParams) -> Result<f64, MetricError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut total = ChrFStats::default();
    for (h, r) in pairs {
        total.add(&chrf_stats(h, r, params)?);
    }
    Ok(total.score(params.beta))
}
