//! Importer for the OpenMantra release layout: `annotation.json` at the
//! root listing books, pages, frames and texts, with page images under
//! the root.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mangatl_core::corpus::{
    openmantra_title, BBox, Page, Panel, RegionKind, Split, TextRegion, Volume,
};
use serde::Deserialize;

use crate::manifest::{io_err, IngestError, LoadedVolume};

pub const ANNOTATION_FILE: &str = "annotation.json";

#[derive(Deserialize)]
struct Book {
    book_title: String,
    pages: Vec<BookPage>,
}

#[derive(Deserialize)]
struct BookPage {
    page_index: usize,
    image_paths: BTreeMap<String, String>,
    #[serde(default)]
    frame: Vec<Rect>,
    #[serde(default)]
    text: Vec<Text>,
}

#[derive(Deserialize)]
struct Rect {
    #[serde(default)]
    id: Option<String>,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Deserialize)]
struct Text {
    #[serde(flatten)]
    rect: Rect,
    #[serde(flatten)]
    fields: BTreeMap<String, serde_json::Value>,
}

/// Rounds and clips a box to the page; `None` if nothing remains.
fn clip(r: &Rect, width: u32, height: u32) -> Option<BBox> {
    let x0 = r.x.round().clamp(0.0, width as f64) as u32;
    let y0 = r.y.round().clamp(0.0, height as f64) as u32;
    let x1 = (r.x + r.w).round().clamp(0.0, width as f64) as u32;
    let y1 = (r.y + r.h).round().clamp(0.0, height as f64) as u32;
    (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
}

fn convert_page(
    root: &Path,
    book: &str,
    p: &BookPage,
    source_lang: &str,
) -> Result<Page, IngestError> {
    let rel = p.image_paths.get(source_lang).ok_or_else(|| {
        IngestError::Format(format!(
            "{book} page {}: no '{source_lang}' image path",
            p.page_index
        ))
    })?;
    let img = root.join(rel);
    if !img.is_file() {
        return Err(IngestError::MissingAsset(img.display().to_string()));
    }
    let (width, height) = image::image_dimensions(&img)
        .map_err(|e| IngestError::Format(format!("{}: {e}", img.display())))?;
    let mut panels = Vec::new();
    for (k, f) in p.frame.iter().enumerate() {
        let id =
            f.id.clone()
                .unwrap_or_else(|| format!("{book}-p{}-f{k}", p.page_index));
        match clip(f, width, height) {
            Some(bbox) => panels.push(Panel { id, bbox }),
            None => log::warn!(
                "{book} page {}: frame {id} lies outside the image, dropped",
                p.page_index
            ),
        }
    }
    let text_key = format!("text_{source_lang}");
    let mut regions = Vec::new();
    for (k, t) in p.text.iter().enumerate() {
        let id = t
            .rect
            .id
            .clone()
            .unwrap_or_else(|| format!("{book}-p{}-t{k}", p.page_index));
        let source = t
            .fields
            .get(&text_key)
            .and_then(|v| v.as_str())
            .unwrap_or("")
            .trim()
            .to_owned();
        if source.is_empty() {
            log::warn!(
                "{book} page {}: text {id} has no {text_key}, dropped",
                p.page_index
            );
            continue;
        }
        let Some(bbox) = clip(&t.rect, width, height) else {
            return Err(IngestError::Geometry(format!(
                "{book} page {}: text {id} lies outside the image",
                p.page_index
            )));
        };
        let translations = t
            .fields
            .iter()
            .filter_map(|(k, v)| {
                let lang = k.strip_prefix("text_")?;
                (lang != source_lang)
                    .then(|| Some((lang.to_owned(), v.as_str()?.trim().to_owned())))?
            })
            .collect();
        let reading_index = regions.len();
        regions.push(TextRegion {
            id,
            bbox,
            kind: RegionKind::SpeechBubble,
            source_text: source,
            translations,
            reading_index,
        });
    }
    Ok(Page {
        index: p.page_index,
        image_path: rel.clone(),
        width,
        height,
        panels,
        regions,
    })
}

/// Converts every book under `root` into a canonical volume. Image paths
/// stay relative to `root`; texts are taken in listed order.
pub fn import_openmantra(root: &Path) -> Result<Vec<LoadedVolume>, IngestError> {
    let ann = root.join(ANNOTATION_FILE);
    if !ann.is_file() {
        return Err(IngestError::Format(format!(
            "{} has no {ANNOTATION_FILE}",
            root.display()
        )));
    }
    let src = fs::read_to_string(&ann).map_err(io_err(&ann))?;
    let books: Vec<Book> = serde_json::from_str(&src)
        .map_err(|e| IngestError::Format(format!("{}: {e}", ann.display())))?;
    if books.is_empty() {
        return Err(IngestError::Format(format!(
            "{} lists no books",
            ann.display()
        )));
    }
    let mut out = Vec::with_capacity(books.len());
    for book in &books {
        let (title, split) = match openmantra_title(&book.book_title) {
            Some(t) => (t.title.to_owned(), t.split),
            None => {
                log::warn!(
                    "unknown OpenMantra title '{}', left unsplit",
                    book.book_title
                );
                (book.book_title.clone(), Split::Unsplit)
            }
        };
        let pages = book
            .pages
            .iter()
            .map(|p| convert_page(root, &book.book_title, p, "ja"))
            .collect::<Result<Vec<_>, _>>()?;
        let mut volume = Volume {
            title,
            language_source: "ja".into(),
            split,
            pages,
        };
        volume.normalize()?;
        out.push(LoadedVolume {
            volume,
            base_dir: root.to_path_buf(),
        });
    }
    Ok(out)
}

/// Writes `loaded` as `<out_dir>/<volume id>/volume.json` with byte-exact
/// copies of its images under `pages/`.
pub fn export_volume(
    loaded: &LoadedVolume,
    out_dir: &Path,
) -> Result<std::path::PathBuf, IngestError> {
    let dir = out_dir.join(loaded.volume.id());
    let pages_dir = dir.join("pages");
    fs::create_dir_all(&pages_dir).map_err(io_err(&pages_dir))?;
    let mut volume = loaded.volume.clone();
    for (pos, page) in volume.pages.iter_mut().enumerate() {
        let src = loaded.image_path(pos);
        let ext = src
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("img")
            .to_ascii_lowercase();
        let name = format!("{:03}.{ext}", page.index);
        fs::copy(&src, pages_dir.join(&name)).map_err(io_err(&src))?;
        page.image_path = format!("pages/{name}");
    }
    let manifest = dir.join("volume.json");
    crate::manifest::save_volume(&volume, &manifest)?;
    Ok(manifest)
}
