//! Synthetic three-page volume and a scripted model used to record the
//! fixture cassettes.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use mangatl_core::corpus::{BBox, Page, Panel, RegionKind, Split, TextRegion, Volume};
use mangatl_core::gateway::{LlmRequest, LlmResponse};
use mangatl_core::raster::{Rgb, RgbImage};
use mangatl_core::strategy::{
    plan_units, render_cod_response, render_response, Approach, DenserSummary, ExampleSet,
    ParsedLine, ParsedTranslation, PromptTemplates, TranslationUnit,
};

use crate::gateway::{CassetteMeta, GatewayError, RecordingBackend};
use crate::imaging::{save_png, DEFAULT_MAX_SIDE, DEFAULT_QUALITY};
use crate::manifest::{load_volume, save_volume};
use crate::pipeline::{run_approach, PageImages, PipelineOptions};

pub const PAGE_WIDTH: u32 = 480;
pub const PAGE_HEIGHT: u32 = 640;
pub const SCRIPTED_BACKEND: &str = "scripted";
pub const FIXTURE_DATE: &str = "2026-01-01";

/// Source line with English and Polish references.
const LINES: [(&str, &str, &str); 10] = [
    (
        "灯台の火が消えている。",
        "The lighthouse fire is out.",
        "Ogień w latarni zgasł.",
    ),
    (
        "誰かが鍵を持ち去った。",
        "Someone took the key away.",
        "Ktoś zabrał klucz.",
    ),
    (
        "嵐が来る前に戻ろう。",
        "Let's go back before the storm comes.",
        "Wróćmy, zanim nadejdzie burza.",
    ),
    (
        "船長はどこにいるの？",
        "Where is the captain?",
        "Gdzie jest kapitan?",
    ),
    (
        "地下室で見たんだ。",
        "I saw him in the cellar.",
        "Widziałem go w piwnicy.",
    ),
    (
        "その扉は開けちゃだめ！",
        "You must not open that door!",
        "Nie wolno otwierać tych drzwi!",
    ),
    ("もう遅いよ。", "It's too late now.", "Już za późno."),
    ("光が戻った…", "The light is back...", "Światło wróciło..."),
    (
        "これで船は帰れる。",
        "Now the ships can come home.",
        "Teraz statki mogą wrócić.",
    ),
    (
        "ありがとう、小さな灯台守。",
        "Thank you, little lighthouse keeper.",
        "Dziękuję, mały latarniku.",
    ),
];

struct RegionSpec {
    bbox: BBox,
    kind: RegionKind,
    /// Index into `LINES`; `None` for an untranscribed sound effect.
    line: Option<usize>,
}

fn region(x: u32, y: u32, w: u32, h: u32, line: usize) -> RegionSpec {
    RegionSpec {
        bbox: BBox::new(x, y, w, h),
        kind: RegionKind::SpeechBubble,
        line: Some(line),
    }
}

fn page_specs() -> Vec<(Vec<BBox>, Vec<RegionSpec>)> {
    vec![
        (
            vec![BBox::new(16, 16, 448, 296), BBox::new(16, 328, 448, 296)],
            vec![
                region(300, 40, 140, 90, 0),
                region(40, 150, 140, 90, 1),
                region(200, 380, 160, 80, 2),
            ],
        ),
        (
            vec![
                BBox::new(16, 16, 448, 296),
                BBox::new(248, 328, 216, 296),
                BBox::new(16, 328, 216, 296),
            ],
            vec![
                region(320, 40, 120, 80, 3),
                region(60, 60, 120, 80, 4),
                region(270, 360, 170, 90, 5),
                RegionSpec {
                    bbox: BBox::new(280, 500, 100, 60),
                    kind: RegionKind::Sfx,
                    line: None,
                },
                region(40, 380, 170, 90, 6),
            ],
        ),
        (
            vec![BBox::new(16, 16, 448, 608)],
            vec![
                region(300, 40, 140, 90, 7),
                region(150, 260, 140, 90, 8),
                region(30, 480, 140, 90, 9),
            ],
        ),
    ]
}

/// The synthetic volume, with manifest image paths `pages/NNN.png`.
pub fn synthetic_volume() -> Volume {
    let pages = page_specs()
        .into_iter()
        .enumerate()
        .map(|(p, (panels, regions))| Page {
            index: p + 1,
            image_path: format!("pages/{:03}.png", p + 1),
            width: PAGE_WIDTH,
            height: PAGE_HEIGHT,
            panels: panels
                .into_iter()
                .enumerate()
                .map(|(i, bbox)| Panel {
                    id: format!("p{}f{}", p + 1, i + 1),
                    bbox,
                })
                .collect(),
            regions: regions
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let (source, translations) = match r.line {
                        Some(l) => (
                            LINES[l].0.to_owned(),
                            [
                                ("en".to_owned(), LINES[l].1.to_owned()),
                                ("pl".to_owned(), LINES[l].2.to_owned()),
                            ]
                            .into_iter()
                            .collect(),
                        ),
                        None => (String::new(), Default::default()),
                    };
                    TextRegion {
                        id: format!("p{}r{}", p + 1, i + 1),
                        bbox: r.bbox,
                        kind: r.kind,
                        source_text: source,
                        translations,
                        reading_index: i,
                    }
                })
                .collect(),
        })
        .collect();
    Volume {
        title: "Lighthouse Keeper".into(),
        language_source: "ja".into(),
        split: Split::Test,
        pages,
    }
}

/// Page drawing: framed panels, outlined bubbles holding vertical strokes
/// that stand in for glyph columns, and gray marks for sound effects.
pub fn render_page(page: &Page) -> RgbImage {
    let mut img = RgbImage::new(page.width, page.height, Rgb::WHITE);
    for p in &page.panels {
        img.stroke_rect(&p.bbox, 3, Rgb::BLACK);
    }
    for r in &page.regions {
        let b = r.bbox;
        if r.kind == RegionKind::Sfx {
            for k in 0..4 {
                img.fill_rect(
                    &BBox::new(b.x + 8 + 22 * k, b.y + 6 + 4 * k, 12, b.h - 20),
                    Rgb([110, 110, 110]),
                );
            }
            continue;
        }
        img.stroke_rect(&b, 2, Rgb::BLACK);
        let glyphs = r.source_text.chars().count() as u32;
        let columns = glyphs.div_ceil(6).max(1);
        for c in 0..columns {
            let x = b.right() - 20 - 14 * c;
            let rows = (glyphs - 6 * c).min(6);
            for g in 0..rows {
                img.fill_rect(&BBox::new(x, b.y + 10 + 11 * g, 8, 8), Rgb([30, 30, 30]));
            }
        }
    }
    img
}

/// Reference translation with the last word dropped on some lines; fewer
/// lines are damaged for approaches later in the approach list.
pub fn scripted_translation(
    volume: &Volume,
    line_id: &str,
    lang: &str,
    approach: Approach,
) -> String {
    let pos = volume
        .lines()
        .position(|l| l.region.id == line_id)
        .expect("line belongs to the volume");
    let line = volume
        .find_line(line_id)
        .expect("line belongs to the volume");
    let reference = line
        .region
        .translations
        .get(lang)
        .cloned()
        .unwrap_or_else(|| line.region.source_text.clone());
    let rank = Approach::ALL
        .iter()
        .position(|a| *a == approach)
        .unwrap_or(0);
    let words: Vec<&str> = reference.split_whitespace().collect();
    if pos % 9 >= rank && words.len() > 1 {
        words[..words.len() - 1].join(" ")
    } else {
        reference
    }
}

fn unit_document(
    volume: &Volume,
    approach: Approach,
    lang: &str,
    unit: &TranslationUnit,
) -> ParsedTranslation {
    let line = |id: &str| {
        let mut l = ParsedLine::new(scripted_translation(volume, id, lang, approach));
        match approach {
            Approach::LblVis | Approach::PbpVis | Approach::PbpVisNum => {
                l.explanation = Some("matches the speaker in the panel".into());
            }
            Approach::VbpVis3p | Approach::VbpVisAll | Approach::VbpVisCod => {
                l.reasoning = Some("follows the previous page".into());
            }
            _ => {}
        }
        l
    };
    let page_ids = |p: usize| {
        volume.pages[p]
            .lines()
            .map(|r| r.id.clone())
            .collect::<Vec<_>>()
    };
    match approach {
        Approach::VbpVis3p | Approach::VbvVis => {
            let pages: Vec<Vec<String>> = unit.page_indices.iter().map(|&p| page_ids(p)).collect();
            ParsedTranslation {
                lines: pages.iter().flatten().map(|id| line(id)).collect(),
                page_lengths: Some(pages.iter().map(Vec::len).collect()),
                ..Default::default()
            }
        }
        Approach::VbpVisCod => {
            let n = unit.focus_page.unwrap_or(0) + 1;
            ParsedTranslation {
                lines: unit.line_ids.iter().map(|id| line(id)).collect(),
                story_source: Some(format!("{n}ページ目までの物語。")),
                story_target: Some(format!("The keeper's story up to page {n}.")),
                ..Default::default()
            }
        }
        _ => ParsedTranslation {
            lines: unit.line_ids.iter().map(|id| line(id)).collect(),
            ..Default::default()
        },
    }
}

fn tokens(text: &str) -> u64 {
    text.chars().count().div_ceil(4) as u64
}

/// Deterministic model for one approach. Translation requests are answered
/// in plan order, so the pipeline must run with a single worker.
pub fn scripted_model(
    volume: Volume,
    approach: Approach,
    lang: &str,
) -> impl Fn(&LlmRequest) -> Result<LlmResponse, GatewayError> + Send + Sync {
    let units = plan_units(&volume, approach, lang);
    let lang = lang.to_owned();
    let next_unit = AtomicUsize::new(0);
    let refines = AtomicUsize::new(0);
    move |req: &LlmRequest| {
        let prompt = req.prompt();
        let text = if prompt.contains("Denser_Summary") {
            let n = refines.fetch_add(1, Ordering::SeqCst) + 1;
            let summaries: Vec<DenserSummary> = (1..=3)
                .map(|level| DenserSummary {
                    informative_entities: serde_json::Value::String(format!("keeper; page {n}")),
                    denser_summary: format!(
                        "Summary {level} after page {n}: the keeper searches the dark lighthouse."
                    ),
                })
                .collect();
            render_cod_response(&summaries)
        } else {
            let k = next_unit.fetch_add(1, Ordering::SeqCst);
            let unit = units
                .get(k)
                .ok_or_else(|| GatewayError::Backend(format!("unplanned request {k}")))?;
            render_response(
                approach.grammar(),
                &unit_document(&volume, approach, &lang, unit),
            )
        };
        Ok(LlmResponse {
            input_tokens: tokens(prompt) + 85 * req.images.len() as u64,
            output_tokens: tokens(&text),
            text,
            latency_ms: 0,
            backend_id: SCRIPTED_BACKEND.into(),
        })
    }
}

/// Writes page images, `volume.json` and one English cassette per approach
/// under `dir`. Existing cassettes are replaced.
pub fn write_fixtures(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let volume = synthetic_volume();
    fs::create_dir_all(dir.join("pages"))?;
    for page in &volume.pages {
        save_png(&render_page(page), &dir.join(&page.image_path))?;
    }
    let manifest = dir.join("volume.json");
    save_volume(&volume, &manifest)?;
    let loaded = load_volume(&manifest)?;
    let templates = PromptTemplates::builtin();
    let examples = ExampleSet::builtin("en").expect("bundled English examples");
    let images = PageImages::new(
        &loaded,
        DEFAULT_MAX_SIDE,
        DEFAULT_QUALITY,
        Default::default(),
    );
    fs::create_dir_all(dir.join("cassettes"))?;
    for approach in Approach::ALL {
        let path = dir
            .join("cassettes")
            .join(format!("{}.json", approach.key()));
        if path.exists() {
            fs::remove_file(&path)?;
        }
        let settings = Default::default();
        let meta = CassetteMeta {
            recorded: FIXTURE_DATE.into(),
            model: mangatl_core::gateway::RequestSettings::default().model,
            backend: SCRIPTED_BACKEND.into(),
        };
        let backend = RecordingBackend::new(
            scripted_model(loaded.volume.clone(), approach, "en"),
            &path,
            meta,
        )?;
        let opts = PipelineOptions {
            approach,
            target_lang: "en".into(),
            settings,
            retries: 0,
            workers: 1,
            lmax: mangatl_core::strategy::DEFAULT_LMAX,
            config_digest: String::new(),
            cassette_digest: None,
        };
        run_approach(
            &loaded.volume,
            &images,
            &backend,
            &templates,
            &examples,
            &opts,
        )?;
    }
    Ok(())
}
