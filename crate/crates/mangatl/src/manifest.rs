//! Canonical volume manifests on disk.

use std::fs;
use std::path::{Path, PathBuf};

use mangatl_core::corpus::{CorpusError, RegionKind, Volume};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST_FORMAT: &str = "mangatl.volume/1";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing asset: {0}")]
    MissingAsset(String),
    #[error("order conflict: {0}")]
    OrderConflict(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<CorpusError> for IngestError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::OrderConflict(m) => IngestError::OrderConflict(m),
            CorpusError::Geometry(m) => IngestError::Geometry(m),
            CorpusError::Format(m) => IngestError::Format(m),
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestDoc {
    format: String,
    #[serde(flatten)]
    volume: Volume,
}

/// A volume together with the directory its image paths are relative to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedVolume {
    pub volume: Volume,
    pub base_dir: PathBuf,
}

impl LoadedVolume {
    pub fn image_path(&self, page_pos: usize) -> PathBuf {
        self.base_dir.join(&self.volume.pages[page_pos].image_path)
    }
}

/// Rewrites unknown region kinds to `free_text`, logging each one.
fn relax_region_kinds(doc: &mut Value) {
    let Some(pages) = doc.get_mut("pages").and_then(Value::as_array_mut) else {
        return;
    };
    for page in pages {
        let Some(regions) = page.get_mut("regions").and_then(Value::as_array_mut) else {
            continue;
        };
        for region in regions {
            let Some(label) = region
                .get("kind")
                .and_then(Value::as_str)
                .map(str::to_owned)
            else {
                continue;
            };
            let (kind, known) = RegionKind::from_label(&label);
            if !known {
                let id = region.get("id").and_then(Value::as_str).unwrap_or("?");
                log::warn!("region '{id}': unknown kind '{label}', treated as free_text");
            }
            region["kind"] = Value::String(kind.as_str().to_owned());
        }
    }
}

/// Parses and validates a manifest document. Image paths are not checked.
pub fn parse_manifest(src: &str) -> Result<Volume, IngestError> {
    let mut doc: Value =
        serde_json::from_str(src).map_err(|e| IngestError::Format(e.to_string()))?;
    match doc.get("format").and_then(Value::as_str) {
        Some(MANIFEST_FORMAT) => {}
        Some(other) => {
            return Err(IngestError::Format(format!(
                "unsupported manifest format '{other}'"
            )))
        }
        None => return Err(IngestError::Format("manifest lacks a 'format' tag".into())),
    }
    relax_region_kinds(&mut doc);
    let ManifestDoc { volume, .. } =
        serde_json::from_value(doc).map_err(|e| IngestError::Format(e.to_string()))?;
    let mut volume = volume;
    volume.normalize()?;
    Ok(volume)
}

/// Loads a manifest, checks that every page image exists and has the
/// declared dimensions, and normalizes the volume.
pub fn load_volume(path: &Path) -> Result<LoadedVolume, IngestError> {
    let src = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingAsset(path.display().to_string()),
        _ => IngestError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let volume = parse_manifest(&src)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = LoadedVolume { volume, base_dir };
    for (pos, page) in loaded.volume.pages.iter().enumerate() {
        let img = loaded.image_path(pos);
        if !img.is_file() {
            return Err(IngestError::MissingAsset(img.display().to_string()));
        }
        let (w, h) = image::image_dimensions(&img)
            .map_err(|e| IngestError::Format(format!("{}: {e}", img.display())))?;
        if (w, h) != (page.width, page.height) {
            return Err(IngestError::Geometry(format!(
                "page {} declares {}x{} but {} is {w}x{h}",
                page.index,
                page.width,
                page.height,
                img.display()
            )));
        }
    }
    Ok(loaded)
}

pub fn manifest_json(volume: &Volume) -> String {
    let doc = ManifestDoc {
        format: MANIFEST_FORMAT.into(),
        volume: volume.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("volume serializes");
    s.push('\n');
    s
}

pub fn save_volume(volume: &Volume, path: &Path) -> Result<(), IngestError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, manifest_json(volume)).map_err(io_err(path))
}
