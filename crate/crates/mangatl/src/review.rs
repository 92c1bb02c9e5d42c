//! Review bundles handed to the MQM annotation UI.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mangatl_core::corpus::BBox;
use mangatl_core::metrics::{word_count, MqmAnnotationSet, Severity, TaxonomyNode, TAXONOMY};
use mangatl_core::run::{LineStatus, TranslationRun};
use serde::{Deserialize, Serialize};

use crate::manifest::{io_err, IngestError, LoadedVolume};

pub const BUNDLE_FORMAT: &str = "mangatl.review-bundle/1";
pub const BUNDLE_FILE: &str = "bundle.json";
pub const ANNOTATION_TEMPLATE_FILE: &str = "annotations.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Run directory name.
    pub run_id: String,
    pub volume: String,
    pub volume_title: String,
    pub approach: String,
    pub model: String,
    pub target_lang: String,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundlePage {
    pub page: usize,
    /// Image path relative to the bundle file.
    pub image: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleLine {
    pub line_id: String,
    pub page: usize,
    pub image: String,
    pub bbox: BBox,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub hypothesis: String,
    pub status: LineStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewBundle {
    pub format: String,
    pub provenance: Provenance,
    pub taxonomy: serde_json::Value,
    pub severity_weights: BTreeMap<Severity, f64>,
    /// Whitespace tokens over all hypotheses.
    pub word_count: u64,
    pub pages: Vec<BundlePage>,
    pub lines: Vec<BundleLine>,
}

fn taxonomy_json() -> serde_json::Value {
    serde_json::to_value::<&[TaxonomyNode]>(&TAXONOMY).expect("taxonomy serializes")
}

/// Builds the bundle for `run`. Page images are referenced as
/// `pages/<NNN>.<ext>`, where [`export_review`] copies them.
pub fn build_bundle(
    run: &TranslationRun,
    loaded: &LoadedVolume,
) -> Result<ReviewBundle, IngestError> {
    let volume = &loaded.volume;
    if run.volume != volume.id() {
        return Err(IngestError::Format(format!(
            "run is for volume '{}', not '{}'",
            run.volume,
            volume.id()
        )));
    }
    let image_name = |pos: usize| {
        let ext = loaded
            .image_path(pos)
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("img")
            .to_ascii_lowercase();
        format!("pages/{:03}.{ext}", volume.pages[pos].index)
    };
    let mut by_id: BTreeMap<&str, &mangatl_core::run::Hypothesis> = BTreeMap::new();
    for h in &run.hypotheses {
        if by_id.insert(h.line_id.as_str(), h).is_some() {
            return Err(IngestError::Format(format!(
                "run lists line '{}' twice",
                h.line_id
            )));
        }
    }
    let mut lines = Vec::with_capacity(run.hypotheses.len());
    for l in volume.lines() {
        let h = by_id.remove(l.region.id.as_str()).ok_or_else(|| {
            IngestError::Format(format!("run has no hypothesis for line '{}'", l.region.id))
        })?;
        lines.push(BundleLine {
            line_id: l.region.id.clone(),
            page: l.page_pos,
            image: image_name(l.page_pos),
            bbox: l.region.bbox,
            source: l.region.source_text.clone(),
            reference: l.region.translations.get(&run.target_lang).cloned(),
            hypothesis: h.text.clone(),
            status: h.status,
        });
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(IngestError::Format(format!(
            "run line '{extra}' is not in the volume"
        )));
    }
    let pages = volume
        .pages
        .iter()
        .enumerate()
        .map(|(pos, p)| BundlePage {
            page: pos,
            image: image_name(pos),
            width: p.width,
            height: p.height,
        })
        .collect();
    Ok(ReviewBundle {
        format: BUNDLE_FORMAT.into(),
        provenance: Provenance {
            run_id: run.dir_name(),
            volume: run.volume.clone(),
            volume_title: run.volume_title.clone(),
            approach: run.approach.key().into(),
            model: run.model.clone(),
            target_lang: run.target_lang.clone(),
            config_digest: run.config_digest.clone(),
            cassette_digest: run.cassette_digest.clone(),
        },
        taxonomy: taxonomy_json(),
        severity_weights: Severity::ALL.iter().map(|s| (*s, s.weight())).collect(),
        word_count: lines.iter().map(|l| word_count(&l.hypothesis)).sum(),
        pages,
        lines,
    })
}

/// Empty annotation set for the bundle's system.
pub fn annotation_template(bundle: &ReviewBundle) -> MqmAnnotationSet {
    MqmAnnotationSet {
        system: bundle.provenance.run_id.clone(),
        word_count: bundle.word_count,
        annotations: Vec::new(),
        counts: None,
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

/// Writes `bundle.json`, an empty `annotations.json` and copies of the page
/// images into `out_dir`. Returns the bundle path.
pub fn export_review(
    run: &TranslationRun,
    loaded: &LoadedVolume,
    out_dir: &Path,
) -> Result<PathBuf, IngestError> {
    let bundle = build_bundle(run, loaded)?;
    let pages = out_dir.join("pages");
    fs::create_dir_all(&pages).map_err(io_err(&pages))?;
    for (pos, p) in bundle.pages.iter().enumerate() {
        let src = loaded.image_path(pos);
        let dst = out_dir.join(&p.image);
        fs::copy(&src, &dst).map_err(io_err(&src))?;
    }
    let path = out_dir.join(BUNDLE_FILE);
    fs::write(&path, pretty(&bundle)).map_err(io_err(&path))?;
    let tpl = out_dir.join(ANNOTATION_TEMPLATE_FILE);
    fs::write(&tpl, pretty(&annotation_template(&bundle))).map_err(io_err(&tpl))?;
    Ok(path)
}
