//! Run configuration, resource loading and the configuration digest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mangatl_core::corpus::{BBox, Volume};
use mangatl_core::gateway::{sha256_hex, RequestSettings};
use mangatl_core::metrics::{ChrFParams, MetricKind};
use mangatl_core::raster::AnnotationStyle;
use mangatl_core::strategy::{Approach, ExampleSet, PromptTemplates, DEFAULT_LMAX};
use serde::{Deserialize, Serialize};

use crate::imaging::{DEFAULT_MAX_SIDE, DEFAULT_QUALITY};
use crate::manifest::manifest_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendMode {
    Live,
    Record,
    #[default]
    Replay,
}

/// Rectangle blanked on one page before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMask {
    /// Page position in the volume.
    pub page: usize,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub approach: Approach,
    pub volumes: Vec<PathBuf>,
    pub target_lang: String,
    pub backend: BackendMode,
    pub cassette: Option<PathBuf>,
    pub workers: usize,
    pub retries: usize,
    pub metrics: Vec<MetricKind>,
    pub scoring_endpoint: Option<String>,
    /// Template name to replacement file.
    pub prompts: BTreeMap<String, PathBuf>,
    pub examples: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub model: String,
    pub temperature: f64,
    pub max_output: u32,
    pub lmax: u32,
    pub max_side: u32,
    pub quality: u8,
    pub style: AnnotationStyle,
    pub masks: Vec<PageMask>,
    pub chrf: ChrFParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = RequestSettings::default();
        Self {
            approach: Approach::PbpVis,
            volumes: Vec::new(),
            target_lang: "en".into(),
            backend: BackendMode::Replay,
            cassette: None,
            workers: 4,
            retries: 2,
            metrics: vec![MetricKind::Chrf],
            scoring_endpoint: None,
            prompts: BTreeMap::new(),
            examples: None,
            output_dir: PathBuf::from("runs"),
            model: s.model,
            temperature: s.temperature,
            max_output: s.max_output,
            lmax: DEFAULT_LMAX,
            max_side: DEFAULT_MAX_SIDE,
            quality: DEFAULT_QUALITY,
            style: AnnotationStyle::default(),
            masks: Vec::new(),
            chrf: ChrFParams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(src).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&src).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if matches!(self.backend, BackendMode::Replay | BackendMode::Record)
            && self.cassette.is_none()
        {
            return bad("replay and record modes need a cassette path");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        if !(1..=100).contains(&self.quality) || self.max_side == 0 {
            return bad("image quality must lie in 1..=100 and max_side be positive");
        }
        if self.lmax == 0 {
            return bad("lmax must be positive");
        }
        if self.target_lang.trim().is_empty() {
            return bad("target language is empty");
        }
        for name in self.prompts.keys() {
            if !PromptTemplates::names().any(|n| n == name) {
                return Err(ConfigError::Invalid(format!(
                    "unknown prompt template '{name}'"
                )));
            }
        }
        self.chrf
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn settings(&self) -> RequestSettings {
        RequestSettings {
            model: self.model.clone(),
            temperature: self.temperature,
            max_output: self.max_output,
        }
    }

    pub fn masks_by_page(&self) -> BTreeMap<usize, Vec<BBox>> {
        let mut m: BTreeMap<usize, Vec<BBox>> = BTreeMap::new();
        for mask in &self.masks {
            m.entry(mask.page).or_default().push(mask.bbox);
        }
        m
    }
}

/// Templates and examples a run uses, with digests of their sources.
pub struct Resources {
    pub templates: PromptTemplates,
    pub examples: ExampleSet,
    /// Template name to SHA-256 of the replacement file.
    pub template_digests: BTreeMap<String, String>,
    pub examples_digest: String,
}

pub fn load_resources(cfg: &RunConfig) -> Result<Resources, ConfigError> {
    let mut templates = PromptTemplates::builtin();
    let mut template_digests = BTreeMap::new();
    for (name, path) in &cfg.prompts {
        let src = fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.clone(),
            message: e.to_string(),
        })?;
        templates.set(name, &src).map_err(|e| ConfigError::File {
            path: path.clone(),
            message: e.to_string(),
        })?;
        template_digests.insert(name.clone(), sha256_hex(src.as_bytes()));
    }
    let examples = match &cfg.examples {
        Some(path) => {
            let src = fs::read_to_string(path).map_err(|e| ConfigError::File {
                path: path.clone(),
                message: e.to_string(),
            })?;
            ExampleSet::from_json(&src).map_err(|e| ConfigError::File {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => ExampleSet::builtin(&cfg.target_lang).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "no bundled examples for '{}'; pass an example set file",
                cfg.target_lang
            ))
        })?,
    };
    let examples_digest = sha256_hex(
        serde_json::to_string(&examples)
            .expect("examples serialize")
            .as_bytes(),
    );
    Ok(Resources {
        templates,
        examples,
        template_digests,
        examples_digest,
    })
}

#[derive(Serialize)]
struct DigestInput<'a> {
    tool: &'a str,
    approach: Approach,
    target_lang: &'a str,
    retries: usize,
    settings: RequestSettings,
    lmax: u32,
    max_side: u32,
    quality: u8,
    style: &'a AnnotationStyle,
    masks: &'a [PageMask],
    templates: &'a BTreeMap<String, String>,
    examples: &'a str,
    volume: String,
}

/// Digest of everything that determines the requests of a run. Paths,
/// worker count and backend mode are left out.
pub fn config_digest(cfg: &RunConfig, res: &Resources, volume: &Volume) -> String {
    let input = DigestInput {
        tool: concat!("mangatl/", env!("CARGO_PKG_VERSION")),
        approach: cfg.approach,
        target_lang: &cfg.target_lang,
        retries: cfg.retries,
        settings: cfg.settings(),
        lmax: cfg.lmax,
        max_side: cfg.max_side,
        quality: cfg.quality,
        style: &cfg.style,
        masks: &cfg.masks,
        templates: &res.template_digests,
        examples: &res.examples_digest,
        volume: sha256_hex(manifest_json(volume).as_bytes()),
    };
    sha256_hex(
        serde_json::to_string(&input)
            .expect("digest input serializes")
            .as_bytes(),
    )
}
