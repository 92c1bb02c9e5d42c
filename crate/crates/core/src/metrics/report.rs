use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::chrf::{chrf, corpus_chrf, ChrFParams};
use super::MetricError;
use crate::corpus::Volume;
use crate::run::{LineStatus, TranslationRun};

pub const REPORT_FORMAT: &str = "mangatl.metric-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Chrf,
    Bertscore,
    Bleurt,
    Xcomet,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Chrf,
        MetricKind::Bertscore,
        MetricKind::Bleurt,
        MetricKind::Xcomet,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Chrf => "chrf",
            MetricKind::Bertscore => "bertscore",
            MetricKind::Bleurt => "bleurt",
            MetricKind::Xcomet => "xcomet",
        }
    }

    /// Learned metrics are computed by the external scoring service.
    pub fn is_learned(&self) -> bool {
        *self != MetricKind::Chrf
    }

    /// Whether the metric also reads the source sentence.
    pub fn uses_source(&self) -> bool {
        *self == MetricKind::Xcomet
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or(MetricError::InvalidParams("unknown metric"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub hypothesis: String,
    pub reference: String,
}

/// Client of a learned-metric service. Scores are returned in item order.
pub trait LearnedScorer {
    fn score(&self, metric: MetricKind, items: &[ScoreItem]) -> Result<Vec<f64>, MetricError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineScores {
    pub line_id: String,
    pub page: usize,
    pub status: LineStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chrf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleurt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xcomet: Option<f64>,
}

impl LineScores {
    pub fn get(&self, m: MetricKind) -> Option<f64> {
        match m {
            MetricKind::Chrf => self.chrf,
            MetricKind::Bertscore => self.bertscore,
            MetricKind::Bleurt => self.bleurt,
            MetricKind::Xcomet => self.xcomet,
        }
    }

    fn set(&mut self, m: MetricKind, v: f64) {
        let slot = match m {
            MetricKind::Chrf => &mut self.chrf,
            MetricKind::Bertscore => &mut self.bertscore,
            MetricKind::Bleurt => &mut self.bleurt,
            MetricKind::Xcomet => &mut self.xcomet,
        };
        *slot = Some(v);
    }
}

/// Macro averages over all lines of the volume.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeScores {
    pub lines: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chrf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleurt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xcomet: Option<f64>,
    /// ChrF over pooled n-gram statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_chrf: Option<f64>,
}

impl VolumeScores {
    pub fn get(&self, m: MetricKind) -> Option<f64> {
        match m {
            MetricKind::Chrf => self.chrf,
            MetricKind::Bertscore => self.bertscore,
            MetricKind::Bleurt => self.bleurt,
            MetricKind::Xcomet => self.xcomet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub format: String,
    pub volume: String,
    pub approach: String,
    pub model: String,
    pub target_lang: String,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette_digest: Option<String>,
    pub metrics: Vec<MetricKind>,
    pub chrf_params: ChrFParams,
    pub per_line: Vec<LineScores>,
    pub per_volume: VolumeScores,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores every line of `run` against the `lang` references of `volume`.
/// Failed lines are scored as empty hypotheses.
pub fn evaluate_run(
    run: &TranslationRun,
    volume: &Volume,
    lang: &str,
    metrics: &[MetricKind],
    params: &ChrFParams,
    scorer: Option<&dyn LearnedScorer>,
) -> Result<MetricReport, MetricError> {
    if run.volume != volume.id() {
        return Err(MetricError::Alignment(format!(
            "run is for volume '{}', not '{}'",
            run.volume,
            volume.id()
        )));
    }
    let lines: Vec<_> = volume.lines().collect();
    if lines.len() != run.hypotheses.len() {
        return Err(MetricError::Alignment(format!(
            "run holds {} hypotheses for {} lines",
            run.hypotheses.len(),
            lines.len()
        )));
    }
    let mut items = Vec::with_capacity(lines.len());
    let mut per_line = Vec::with_capacity(lines.len());
    for (line, hyp) in lines.iter().zip(&run.hypotheses) {
        if line.region.id != hyp.line_id {
            return Err(MetricError::Alignment(format!(
                "hypothesis '{}' is where line '{}' belongs",
                hyp.line_id, line.region.id
            )));
        }
        let reference = line
            .region
            .translations
            .get(lang)
            .ok_or_else(|| MetricError::MissingReference(line.region.id.clone()))?;
        let hypothesis = if hyp.status == LineStatus::Ok {
            hyp.text.clone()
        } else {
            String::new()
        };
        items.push(ScoreItem {
            source: Some(line.region.source_text.clone()),
            hypothesis,
            reference: reference.clone(),
        });
        per_line.push(LineScores {
            line_id: hyp.line_id.clone(),
            page: line.page_pos,
            status: hyp.status,
            chrf: None,
            bertscore: None,
            bleurt: None,
            xcomet: None,
        });
    }

    let mut wanted: Vec<MetricKind> = metrics.to_vec();
    wanted.sort();
    wanted.dedup();
    let mut per_volume = VolumeScores {
        lines: per_line.len(),
        ..VolumeScores::default()
    };
    for &m in &wanted {
        let scores: Vec<f64> = if m.is_learned() {
            let scorer = scorer.ok_or_else(|| {
                MetricError::Backend(format!("no scoring service configured for {m}"))
            })?;
            let batch: Vec<ScoreItem> = items
                .iter()
                .map(|i| ScoreItem {
                    source: if m.uses_source() {
                        i.source.clone()
                    } else {
                        None
                    },
                    ..i.clone()
                })
                .collect();
            let scores = scorer.score(m, &batch)?;
            if scores.len() != batch.len() {
                return Err(MetricError::Protocol(format!(
                    "{m} returned {} scores for {} items",
                    scores.len(),
                    batch.len()
                )));
            }
            if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(MetricError::Protocol(format!(
                    "{m} score {bad} lies outside [0, 1]"
                )));
            }
            scores
        } else {
            items
                .iter()
                .map(|i| chrf(&i.hypothesis, &i.reference, params))
                .collect::<Result<_, _>>()?
        };
        for (row, s) in per_line.iter_mut().zip(&scores) {
            row.set(m, *s);
        }
        let avg = mean(scores.iter().copied());
        match m {
            MetricKind::Chrf => {
                per_volume.chrf = avg;
                per_volume.corpus_chrf = Some(corpus_chrf(
                    items
                        .iter()
                        .map(|i| (i.hypothesis.as_str(), i.reference.as_str())),
                    params,
                )?);
            }
            MetricKind::Bertscore => per_volume.bertscore = avg,
            MetricKind::Bleurt => per_volume.bleurt = avg,
            MetricKind::Xcomet => per_volume.xcomet = avg,
        }
    }

    Ok(MetricReport {
        format: String::from(REPORT_FORMAT),
        volume: run.volume.clone(),
        approach: String::from(run.approach.key()),
        model: run.model.clone(),
        target_lang: String::from(lang),
        config_digest: run.config_digest.clone(),
        cassette_digest: run.cassette_digest.clone(),
        metrics: wanted,
        chrf_params: *params,
        per_line,
        per_volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BBox, Page, RegionKind, Split, TextRegion};
    use crate::run::*;
    use crate::strategy::Approach;
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use core::cell::RefCell;

    fn volume(refs: &[&str]) -> Volume {
        let regions = refs
            .iter()
            .enumerate()
            .map(|(i, r)| TextRegion {
                id: format!("l{i}"),
                bbox: BBox::new(0, 10 * i as u32, 5, 5),
                kind: RegionKind::SpeechBubble,
                source_text: format!("src {i}"),
                translations: [("en".into(), String::from(*r))]
                    .into_iter()
                    .collect::<BTreeMap<_, _>>(),
                reading_index: i,
            })
            .collect();
        Volume {
            title: "V".into(),
            language_source: "ja".into(),
            split: Split::Unsplit,
            pages: vec![Page {
                index: 0,
                image_path: "p.png".into(),
                width: 50,
                height: 50,
                panels: vec![],
                regions,
            }],
        }
    }

    fn run(hyps: &[(&str, LineStatus)]) -> TranslationRun {
        TranslationRun {
            format: RUN_FORMAT.into(),
            volume: "v".into(),
            volume_title: "V".into(),
            approach: Approach::Pbp,
            model: "m".into(),
            target_lang: "en".into(),
            temperature: 0.5,
            config_digest: "c".into(),
            cassette_digest: None,
            status: RunStatus::Complete,
            error: None,
            exchanges: vec![],
            hypotheses: hyps
                .iter()
                .enumerate()
                .map(|(i, (t, s))| Hypothesis {
                    line_id: format!("l{i}"),
                    page: 0,
                    text: String::from(*t),
                    status: *s,
                    explanation: None,
                    reasoning: None,
                })
                .collect(),
            summaries: vec![],
            totals: RunTotals::default(),
        }
    }

    #[test]
    fn perfect_run_scores_100() {
        let v = volume(&["Hello", "Bye"]);
        let r = run(&[("Hello", LineStatus::Ok), ("Bye", LineStatus::Ok)]);
        let rep = evaluate_run(
            &r,
            &v,
            "en",
            &[MetricKind::Chrf],
            &ChrFParams::default(),
            None,
        )
        .unwrap();
        assert_eq!(rep.per_volume.chrf, Some(100.0));
        assert!(rep.per_line.iter().all(|l| l.chrf == Some(100.0)));
    }

    #[test]
    fn macro_average_and_failed_lines() {
        let v = volume(&["Hello", "Bye"]);
        let r = run(&[("Hello", LineStatus::Ok), ("Bye", LineStatus::Failed)]);
        let rep = evaluate_run(
            &r,
            &v,
            "en",
            &[MetricKind::Chrf],
            &ChrFParams::default(),
            None,
        )
        .unwrap();
        assert_eq!(rep.per_volume.chrf, Some(50.0));
        assert_eq!(rep.per_line[1].chrf, Some(0.0));
    }

    #[test]
    fn misaligned_run() {
        let v = volume(&["Hello", "Bye"]);
        let r = run(&[("Hello", LineStatus::Ok)]);
        let e = evaluate_run(
            &r,
            &v,
            "en",
            &[MetricKind::Chrf],
            &ChrFParams::default(),
            None,
        );
        assert!(matches!(e, Err(MetricError::Alignment(_))));
    }

    struct Echo(RefCell<Vec<(MetricKind, Vec<ScoreItem>)>>, f64);

    impl LearnedScorer for Echo {
        fn score(&self, metric: MetricKind, items: &[ScoreItem]) -> Result<Vec<f64>, MetricError> {
            self.0.borrow_mut().push((metric, items.to_vec()));
            Ok(items.iter().map(|_| self.1).collect())
        }
    }

    #[test]
    fn learned_metrics_get_source_only_for_xcomet() {
        let v = volume(&["Hello"]);
        let r = run(&[("Hi", LineStatus::Ok)]);
        let scorer = Echo(RefCell::new(vec![]), 0.5);
        let rep = evaluate_run(
            &r,
            &v,
            "en",
            &[MetricKind::Xcomet, MetricKind::Bleurt],
            &ChrFParams::default(),
            Some(&scorer),
        )
        .unwrap();
        assert_eq!(rep.per_volume.bleurt, Some(0.5));
        let calls = scorer.0.borrow();
        assert_eq!(calls[0].0, MetricKind::Bleurt);
        assert_eq!(calls[0].1[0].source, None);
        assert_eq!(calls[1].1[0].source.as_deref(), Some("src 0"));
        let out_of_range = Echo(RefCell::new(vec![]), 1.7);
        let e = evaluate_run(
            &r,
            &v,
            "en",
            &[MetricKind::Bleurt],
            &ChrFParams::default(),
            Some(&out_of_range),
        );
        assert!(matches!(e, Err(MetricError::Protocol(_))));
    }
}
