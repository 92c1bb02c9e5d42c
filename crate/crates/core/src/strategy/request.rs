use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::approach::{Approach, VisualContext};
use super::cod::RollingSummary;
use super::examples::{language_name, ExampleSet};
use super::plan::TranslationUnit;
use super::template::{Template, TemplateError};
use crate::corpus::{Page, Volume};
use crate::gateway::{EncodedImage, LlmRequest, RequestSettings};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequestError {
    #[error("missing asset: {0}")]
    MissingAsset(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("template '{name}': {source}")]
    Template { name: String, source: TemplateError },
    #[error("unit refers to unknown line '{0}'")]
    UnknownLine(String),
}

/// Source of the page images attached to visual requests.
pub trait ImageSource {
    /// Request-ready image of the page at `page_pos` in the volume, with
    /// bubbles replaced by reading numbers when `numbered` is set.
    fn page_image(&self, page_pos: usize, numbered: bool) -> Result<EncodedImage, RequestError>;
}

/// Source for text-only approaches; any image lookup fails.
pub struct NoImages;

impl ImageSource for NoImages {
    fn page_image(&self, page_pos: usize, _numbered: bool) -> Result<EncodedImage, RequestError> {
        Err(RequestError::MissingAsset(format!(
            "no image source for page {page_pos}"
        )))
    }
}

const BUILTIN: [(&str, &str); 10] = [
    ("lbl", include_str!("../../resources/prompts/lbl.txt")),
    ("pbp", include_str!("../../resources/prompts/pbp.txt")),
    (
        "lbl_vis",
        include_str!("../../resources/prompts/lbl_vis.txt"),
    ),
    (
        "pbp_vis",
        include_str!("../../resources/prompts/pbp_vis.txt"),
    ),
    (
        "pbp_vis_num",
        include_str!("../../resources/prompts/pbp_vis_num.txt"),
    ),
    (
        "vbp_vis_cod",
        include_str!("../../resources/prompts/vbp_vis_cod.txt"),
    ),
    (
        "vbp_vis_3p",
        include_str!("../../resources/prompts/vbp_vis_3p.txt"),
    ),
    (
        "vbp_vis_all",
        include_str!("../../resources/prompts/vbp_vis_all.txt"),
    ),
    (
        "vbv_vis",
        include_str!("../../resources/prompts/vbv_vis.txt"),
    ),
    (
        "cod_refine",
        include_str!("../../resources/prompts/cod_refine.txt"),
    ),
];

/// Prompt templates keyed by name (`lbl`, ..., `cod_refine`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    templates: BTreeMap<String, Template>,
}

impl PromptTemplates {
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, src)| {
                let t = Template::parse(src).expect("bundled templates parse");
                (String::from(*name), t)
            })
            .collect();
        Self { templates }
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    /// Replaces the template `name` with `src`.
    pub fn set(&mut self, name: &str, src: &str) -> Result<(), RequestError> {
        if !BUILTIN.iter().any(|(n, _)| *n == name) {
            return Err(RequestError::Precondition(format!(
                "unknown template '{name}'"
            )));
        }
        let t = Template::parse(src).map_err(|source| RequestError::Template {
            name: name.into(),
            source,
        })?;
        self.templates.insert(name.into(), t);
        Ok(())
    }

    pub fn render(
        &self,
        name: &str,
        values: &BTreeMap<&str, String>,
    ) -> Result<String, RequestError> {
        let t = self
            .templates
            .get(name)
            .ok_or_else(|| RequestError::Precondition(format!("unknown template '{name}'")))?;
        t.render(values).map_err(|source| RequestError::Template {
            name: name.into(),
            source,
        })
    }
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Everything a request needs besides the unit and its run-time context.
pub struct RequestContext<'a> {
    pub volume: &'a Volume,
    pub approach: Approach,
    pub target_lang: &'a str,
    pub templates: &'a PromptTemplates,
    pub examples: &'a ExampleSet,
    pub settings: &'a RequestSettings,
    pub images: &'a dyn ImageSource,
}

/// Sentence naming the target language, appended to templates that do not
/// name it. Empty for English.
pub fn language_directive(lang: &str) -> String {
    if lang == "en" {
        String::new()
    } else {
        format!(" Translate the lines into {}.", language_name(lang))
    }
}

/// `Line 1: ...` rows of a page.
pub fn format_page_lines(page: &Page) -> String {
    let mut out = String::new();
    for (i, r) in page.lines().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Line {}: {}", i + 1, r.source_text));
    }
    out
}

/// `Page k:` blocks for `pages`, numbered by position in the volume.
pub fn format_pages(volume: &Volume, pages: &[usize]) -> String {
    let blocks: Vec<String> = pages
        .iter()
        .map(|&p| format!("Page {}:\n{}", p + 1, format_page_lines(&volume.pages[p])))
        .collect();
    blocks.join("\n\n")
}

/// `Page k:` blocks of prior hypotheses for the first `count` pages.
pub fn format_translated_pages(
    volume: &Volume,
    count: usize,
    prior: &BTreeMap<String, String>,
) -> Result<String, RequestError> {
    let mut blocks = Vec::new();
    for (p, page) in volume.pages.iter().enumerate().take(count) {
        let mut block = format!("Page {}:", p + 1);
        for (i, r) in page.lines().enumerate() {
            let t = prior.get(&r.id).ok_or_else(|| {
                RequestError::Precondition(format!("no prior translation for line '{}'", r.id))
            })?;
            block.push_str(&format!("\nTranslation {}: {}", i + 1, t));
        }
        blocks.push(block);
    }
    Ok(blocks.join("\n\n"))
}

/// Builds the translation request for `unit`. `summary` must be given
/// exactly for the rolling-summary approach and `prior` exactly for the
/// approach that carries all earlier translations.
pub fn build_request(
    ctx: &RequestContext<'_>,
    unit: &TranslationUnit,
    summary: Option<&RollingSummary>,
    prior: Option<&BTreeMap<String, String>>,
) -> Result<LlmRequest, RequestError> {
    let approach = ctx.approach;
    if summary.is_some() != (approach == Approach::VbpVisCod) {
        return Err(RequestError::Precondition(format!(
            "a rolling summary is required by VBP_VIS_COD and only by it (approach {approach})"
        )));
    }
    if prior.is_some() != (approach == Approach::VbpVisAll) {
        return Err(RequestError::Precondition(format!(
            "prior translations are required by VBP_VIS_ALL and only by it (approach {approach})"
        )));
    }
    let volume = ctx.volume;
    for p in &unit.page_indices {
        if *p >= volume.pages.len() {
            return Err(RequestError::Precondition(format!(
                "unit refers to page position {p}"
            )));
        }
    }
    let focus = || {
        unit.focus_page
            .filter(|p| *p < volume.pages.len())
            .ok_or_else(|| {
                RequestError::Precondition(format!("unit {} has no focus page", unit.index))
            })
    };

    let mut v: BTreeMap<&str, String> = BTreeMap::new();
    ctx.examples.insert_into(&mut v);
    v.insert("lang", String::from(language_name(ctx.target_lang)));
    v.insert("lang_directive", language_directive(ctx.target_lang));

    match approach {
        Approach::Lbl | Approach::LblVis => {
            let [id] = unit.line_ids.as_slice() else {
                return Err(RequestError::Precondition(
                    "line units carry exactly one line".into(),
                ));
            };
            let line = volume
                .find_line(id)
                .ok_or_else(|| RequestError::UnknownLine(id.clone()))?;
            v.insert("line", line.region.source_text.clone());
        }
        Approach::Pbp => {
            v.insert("line", format_page_lines(&volume.pages[focus()?]));
        }
        Approach::PbpVis | Approach::PbpVisNum => {
            v.insert("page", format_page_lines(&volume.pages[focus()?]));
        }
        Approach::VbpVisCod => {
            v.insert("page", format_page_lines(&volume.pages[focus()?]));
            v.insert(
                "lang_summary",
                summary.map(|s| s.text.clone()).unwrap_or_default(),
            );
        }
        Approach::VbpVis3p => {
            v.insert("page", format_pages(volume, &unit.page_indices));
        }
        Approach::VbpVisAll => {
            let k = focus()?;
            v.insert("pages", format_pages(volume, &unit.page_indices));
            v.insert("no_pages", format!("{k}"));
            v.insert(
                "translated_pages",
                format_translated_pages(volume, k, prior.unwrap_or(&BTreeMap::new()))?,
            );
            v.insert("curr_page", format!("{}", k + 1));
        }
        Approach::VbvVis => {
            v.insert("pages", format_pages(volume, &unit.page_indices));
        }
    }
    let prompt = ctx.templates.render(approach.template_name(), &v)?;

    let images = match approach.row().visual {
        VisualContext::None => Vec::new(),
        VisualContext::Page => alloc::vec![ctx.images.page_image(focus()?, false)?],
        VisualContext::NumberedPage => alloc::vec![ctx.images.page_image(focus()?, true)?],
        VisualContext::ThreePages | VisualContext::Volume => unit
            .page_indices
            .iter()
            .map(|&p| ctx.images.page_image(p, false))
            .collect::<Result<_, _>>()?,
    };
    Ok(LlmRequest::user(ctx.settings, prompt, images))
}
