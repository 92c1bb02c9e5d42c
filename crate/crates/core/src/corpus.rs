//! Annotated manga volumes: pages, panels, text regions and their
//! parallel translations.
//!
//! Everything here is plain data plus validation. Reading files and checking
//! that page images exist is left to the std companion crate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Axis-aligned box in page pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    /// Center in pixel units (may be fractional).
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        (self.x as u64 + self.w as u64) <= width as u64
            && (self.y as u64 + self.h as u64) <= height as u64
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64
            && px < self.right() as f64
            && py >= self.y as f64
            && py < self.bottom() as f64
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) as u64 * (y1 - y0) as u64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    SpeechBubble,
    NarrativeBox,
    FreeText,
    Sfx,
}

impl RegionKind {
    /// Maps an annotation label onto a kind. Unknown labels become
    /// `FreeText`; the second element reports whether the label was known.
    pub fn from_label(label: &str) -> (Self, bool) {
        match label {
            "speech_bubble" | "bubble" | "speech" => (Self::SpeechBubble, true),
            "narrative_box" | "narration" | "narrative" => (Self::NarrativeBox, true),
            "free_text" | "text" => (Self::FreeText, true),
            "sfx" | "sound_effect" => (Self::Sfx, true),
            _ => (Self::FreeText, false),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SpeechBubble => "speech_bubble",
            Self::NarrativeBox => "narrative_box",
            Self::FreeText => "free_text",
            Self::Sfx => "sfx",
        }
    }

    /// Bubbles and narrative boxes get cleared and numbered on annotated pages.
    pub fn is_enclosed(&self) -> bool {
        matches!(self, Self::SpeechBubble | Self::NarrativeBox)
    }
}

/// One line: the content of a speech bubble, narrative box or free text
/// cluster, together with its reference translations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    pub id: String,
    pub bbox: BBox,
    pub kind: RegionKind,
    pub source_text: String,
    #[serde(default)]
    pub translations: BTreeMap<String, String>,
    pub reading_index: usize,
}

impl TextRegion {
    pub fn is_line(&self) -> bool {
        !self.source_text.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panel {
    pub id: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub index: usize,
    /// Image location, relative to the manifest unless absolute.
    pub image_path: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub panels: Vec<Panel>,
    #[serde(default)]
    pub regions: Vec<TextRegion>,
}

impl Page {
    /// Regions that carry text, in reading order.
    pub fn lines(&self) -> impl Iterator<Item = &TextRegion> + '_ {
        self.regions.iter().filter(|r| r.is_line())
    }

    pub fn region(&self, id: &str) -> Option<&TextRegion> {
        self.regions.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Validation,
    Test,
    #[default]
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    pub title: String,
    #[serde(default = "default_source_language")]
    pub language_source: String,
    #[serde(default)]
    pub split: Split,
    pub pages: Vec<Page>,
}

fn default_source_language() -> String {
    String::from("ja")
}

/// Validation failures of the corpus model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("order conflict: {0}")]
    OrderConflict(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("format: {0}")]
    Format(String),
}

/// A line addressed by its position in the volume.
#[derive(Debug, Clone, Copy)]
pub struct LineRef<'a> {
    pub page_pos: usize,
    pub page: &'a Page,
    pub region: &'a TextRegion,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("line {line_id} has no reference translation for '{lang}'")]
    MissingReference { line_id: String, lang: String },
}

impl Volume {
    /// Checks every structural invariant and sorts pages by index and
    /// regions by reading index.
    pub fn normalize(&mut self) -> Result<(), CorpusError> {
        if self.pages.is_empty() {
            return Err(CorpusError::Format(alloc::format!(
                "volume '{}' has no pages",
                self.title
            )));
        }
        self.pages.sort_by_key(|p| p.index);
        for pair in self.pages.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(CorpusError::OrderConflict(alloc::format!(
                    "page index {} appears twice",
                    pair[0].index
                )));
            }
        }
        let mut ids = BTreeSet::new();
        for page in &mut self.pages {
            validate_page(page)?;
            page.regions.sort_by_key(|r| r.reading_index);
            for region in &page.regions {
                if !ids.insert(region.id.clone()) {
                    return Err(CorpusError::OrderConflict(alloc::format!(
                        "region id '{}' is not unique within the volume",
                        region.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Lines in global reading order: page order, then reading index.
    /// Sound effects without a transcript are not lines.
    pub fn lines(&self) -> impl Iterator<Item = LineRef<'_>> + '_ {
        self.pages.iter().enumerate().flat_map(|(page_pos, page)| {
            page.lines().map(move |region| LineRef {
                page_pos,
                page,
                region,
            })
        })
    }

    pub fn line_count(&self) -> usize {
        self.pages.iter().map(|p| p.lines().count()).sum()
    }

    pub fn find_line(&self, id: &str) -> Option<LineRef<'_>> {
        self.lines().find(|l| l.region.id == id)
    }

    /// Slug used for run directories and unit ids.
    pub fn id(&self) -> String {
        slug(&self.title)
    }

    /// `(source, reference)` pairs in global reading order. With `skip_missing`
    /// lines lacking a reference for `lang` are dropped instead of failing.
    pub fn parallel_pairs(
        &self,
        lang: &str,
        skip_missing: bool,
    ) -> Result<Vec<(String, String)>, DataError> {
        let mut out = Vec::with_capacity(self.line_count());
        for line in self.lines() {
            match line.region.translations.get(lang) {
                Some(reference) => out.push((line.region.source_text.clone(), reference.clone())),
                None if skip_missing => {}
                None => {
                    return Err(DataError::MissingReference {
                        line_id: line.region.id.clone(),
                        lang: String::from(lang),
                    })
                }
            }
        }
        Ok(out)
    }
}

fn validate_page(page: &Page) -> Result<(), CorpusError> {
    if page.width == 0 || page.height == 0 {
        return Err(CorpusError::Geometry(alloc::format!(
            "page {} has empty dimensions",
            page.index
        )));
    }
    let check = |what: &str, id: &str, b: &BBox| {
        if b.is_empty() {
            Err(CorpusError::Geometry(alloc::format!(
                "{what} '{id}' on page {} has an empty box",
                page.index
            )))
        } else if !b.fits_within(page.width, page.height) {
            Err(CorpusError::Geometry(alloc::format!(
                "{what} '{id}' on page {} lies outside the {}x{} image",
                page.index,
                page.width,
                page.height
            )))
        } else {
            Ok(())
        }
    };
    for panel in &page.panels {
        check("panel", &panel.id, &panel.bbox)?;
    }
    let n = page.regions.len();
    let mut seen = alloc::vec![false; n];
    for region in &page.regions {
        check("region", &region.id, &region.bbox)?;
        if region.kind != RegionKind::Sfx && region.source_text.trim().is_empty() {
            return Err(CorpusError::Format(alloc::format!(
                "region '{}' on page {} has no source text",
                region.id,
                page.index
            )));
        }
        let idx = region.reading_index;
        if idx >= n || seen[idx] {
            return Err(CorpusError::OrderConflict(alloc::format!(
                "reading_index {} of region '{}' on page {} is duplicated or out of range 0..{}",
                idx,
                region.id,
                page.index,
                n
            )));
        }
        seen[idx] = true;
    }
    Ok(())
}

pub fn slug(title: &str) -> String {
    let mut out = String::with_capacity(title.len());
    let mut dash = false;
    for c in title.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
            dash = false;
        } else if !dash && !out.is_empty() {
            out.push('-');
            dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        out.push_str("volume");
    }
    out
}

/// One title of the OpenMantra evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenMantraTitle {
    /// Directory/annotation key used by the released data.
    pub key: &'static str,
    pub title: &'static str,
    pub genre: &'static str,
    pub pages: usize,
    pub lines: usize,
    pub split: Split,
}

/// Per-title page and line counts with the validation/test assignment.
pub const OPENMANTRA_TITLES: [OpenMantraTitle; 5] = [
    OpenMantraTitle {
        key: "balloon_dream",
        title: "Balloon Dream",
        genre: "Romance",
        pages: 38,
        lines: 314,
        split: Split::Validation,
    },
    OpenMantraTitle {
        key: "boureisougi",
        title: "Boureisougi",
        genre: "Mystery",
        pages: 36,
        lines: 274,
        split: Split::Test,
    },
    OpenMantraTitle {
        key: "rasetugari",
        title: "Rasetugari",
        genre: "Fantasy",
        pages: 54,
        lines: 359,
        split: Split::Test,
    },
    OpenMantraTitle {
        key: "tencho_isoro",
        title: "Tencho Isoro",
        genre: "SoL",
        pages: 40,
        lines: 311,
        split: Split::Test,
    },
    OpenMantraTitle {
        key: "tojime_no_siora",
        title: "Tojime no Siora",
        genre: "Battle",
        pages: 46,
        lines: 334,
        split: Split::Validation,
    },
];

/// Looks up an OpenMantra title by annotation key or display title.
pub fn openmantra_title(name: &str) -> Option<&'static OpenMantraTitle> {
    let wanted = slug(name).replace('-', "_");
    OPENMANTRA_TITLES.iter().find(|t| t.key == wanted)
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unsplit => "unsplit",
        })
    }
}
