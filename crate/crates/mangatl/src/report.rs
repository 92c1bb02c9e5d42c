//! Comparison tables across metric reports and MQM annotation sets.

use std::collections::BTreeMap;

use mangatl_core::metrics::{mqm_score, MetricError, MetricKind, MetricReport, MqmAnnotationSet};
use mangatl_core::strategy::Approach;
use serde::Serialize;

/// Mean scores of one (approach, model) row for one target language.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Cell {
    pub lines: usize,
    pub scores: BTreeMap<MetricKind, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub approach: String,
    pub model: String,
    /// Keyed by target language.
    pub cells: BTreeMap<String, Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub languages: Vec<String>,
    pub metrics: Vec<MetricKind>,
    /// ChrF cells hold corpus-level values.
    pub corpus_chrf: bool,
    pub rows: Vec<ComparisonRow>,
}

/// Line count and per-metric (weighted sum, weight) of one cell.
type CellSums = (usize, BTreeMap<MetricKind, (f64, usize)>);

fn approach_rank(key: &str) -> usize {
    Approach::ALL
        .iter()
        .position(|a| a.key() == key)
        .unwrap_or(usize::MAX)
}

/// Groups reports by (approach, model) and target language. Cells average
/// line scores over every volume in the group; with `corpus_chrf` the ChrF
/// column averages per-volume corpus ChrF weighted by line count.
pub fn comparison_table(reports: &[MetricReport], corpus_chrf: bool) -> ComparisonTable {
    let mut languages: Vec<String> = Vec::new();
    let mut metrics: Vec<MetricKind> = Vec::new();
    let mut sums: BTreeMap<(usize, String, String), BTreeMap<String, CellSums>> = BTreeMap::new();
    for r in reports {
        if !languages.contains(&r.target_lang) {
            languages.push(r.target_lang.clone());
        }
        let key = (
            approach_rank(&r.approach),
            r.approach.clone(),
            r.model.clone(),
        );
        let cell = sums
            .entry(key)
            .or_default()
            .entry(r.target_lang.clone())
            .or_default();
        let n = r.per_volume.lines;
        cell.0 += n;
        for &m in &r.metrics {
            if !metrics.contains(&m) {
                metrics.push(m);
            }
            let v = if m == MetricKind::Chrf && corpus_chrf {
                r.per_volume.corpus_chrf
            } else {
                r.per_volume.get(m)
            };
            if let Some(v) = v {
                let e = cell.1.entry(m).or_insert((0.0, 0));
                e.0 += v * n as f64;
                e.1 += n;
            }
        }
    }
    metrics.sort();
    let rows = sums
        .into_iter()
        .map(|((_, approach, model), langs)| ComparisonRow {
            approach: Approach::ALL
                .iter()
                .find(|a| a.key() == approach)
                .map_or(approach.clone(), |a| a.label().into()),
            model,
            cells: langs
                .into_iter()
                .map(|(lang, (lines, by_metric))| {
                    let scores = by_metric
                        .into_iter()
                        .filter(|(_, (_, n))| *n > 0)
                        .map(|(m, (s, n))| (m, s / n as f64))
                        .collect();
                    (lang, Cell { lines, scores })
                })
                .collect(),
        })
        .collect();
    ComparisonTable {
        languages,
        metrics,
        corpus_chrf,
        rows,
    }
}

fn header(m: MetricKind) -> &'static str {
    match m {
        MetricKind::Chrf => "ChrF",
        MetricKind::Bertscore => "BRTS",
        MetricKind::Bleurt => "BLRT",
        MetricKind::Xcomet => "xCMT",
    }
}

fn fmt_score(m: MetricKind, v: f64) -> String {
    if m == MetricKind::Chrf {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

impl ComparisonTable {
    /// Best displayed value of a column; ties share the mark.
    fn best(&self, lang: &str, m: MetricKind) -> Option<String> {
        self.rows
            .iter()
            .filter_map(|r| r.cells.get(lang)?.scores.get(&m).copied())
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            })
            .map(|v| fmt_score(m, v))
    }

    /// Markdown table with the best value of each column in bold.
    pub fn to_markdown(&self) -> String {
        let mut head = vec!["Method".to_owned()];
        let mut rule = vec!["---".to_owned()];
        for lang in &self.languages {
            for &m in &self.metrics {
                head.push(format!("{} {}", lang.to_uppercase(), header(m)));
                rule.push("---:".into());
            }
        }
        let multi_model = self.rows.iter().any(|r| r.model != self.rows[0].model);
        let mut out = format!("| {} |\n| {} |\n", head.join(" | "), rule.join(" | "));
        for row in &self.rows {
            let name = if multi_model {
                format!("{} ({})", row.approach, row.model)
            } else {
                row.approach.clone()
            };
            let mut cells = vec![name];
            for lang in &self.languages {
                for &m in &self.metrics {
                    let v = row.cells.get(lang).and_then(|c| c.scores.get(&m)).copied();
                    cells.push(match v {
                        None => "-".into(),
                        Some(v) => {
                            let s = fmt_score(m, v);
                            if self.best(lang, m).as_deref() == Some(s.as_str()) {
                                format!("**{s}**")
                            } else {
                                s
                            }
                        }
                    });
                }
            }
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MqmRow {
    pub system: String,
    pub minor: u64,
    pub major: u64,
    pub critical: u64,
    pub word_count: u64,
    pub score: f64,
}

pub fn mqm_rows(sets: &[MqmAnnotationSet]) -> Result<Vec<MqmRow>, MetricError> {
    sets.iter()
        .map(|s| {
            let c = s.counts();
            Ok(MqmRow {
                system: s.system.clone(),
                minor: c.minor,
                major: c.major,
                critical: c.critical,
                word_count: s.word_count,
                score: mqm_score(s)?,
            })
        })
        .collect()
}

pub fn mqm_markdown(rows: &[MqmRow]) -> String {
    let mut out = String::from("| System | Minor | Major | Critical | Words | Score |\n| --- | ---: | ---: | ---: | ---: | ---: |\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {:.2} |\n",
            r.system, r.minor, r.major, r.critical, r.word_count, r.score
        ));
    }
    out
}
