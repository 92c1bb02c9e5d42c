//! Acceptance suite: one PASS/FAIL line per primary criterion. Exits
//! nonzero when any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use mangatl::core::corpus::Volume;
use mangatl::core::gateway::LlmRequest;
use mangatl::core::layout::{
    estimate_reading_order, optics_cluster, order_disagreement, ClusterParams, Point2,
};
use mangatl::core::metrics::{
    chrf, mqm_score, ChrFParams, IssueType, MqmAnnotation, MqmAnnotationSet, Severity,
};
use mangatl::core::raster::{draw_number, number_bubbles, AnnotationStyle, Rgb, RgbImage};
use mangatl::core::strategy::{
    build_request, parse_with_grammar, plan_units, render_response, Approach, ExampleSet,
    ParseError, ParsedLine, ParsedTranslation, PromptTemplates, RequestContext, ResponseGrammar,
    RollingSummary, TextualContext, UnitKind, VisualContext,
};
use mangatl::imaging::{load_rgb, DEFAULT_MAX_SIDE, DEFAULT_QUALITY};
use mangatl::pipeline::{numbered_lines, PageImages};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

const CHRF_TOLERANCE: f64 = 1e-6;
const CHRF_BUDGET: Duration = Duration::from_secs(1);
const MQM_TOLERANCE: f64 = 0.01;
const OPTICS_INSTANCES: usize = 256;
const OPTICS_MAX_POINTS: usize = 12;
const RANDOM_LAYOUTS: usize = 200;
const E2E_REPEATS: usize = 3;
const E2E_BUDGET: Duration = Duration::from_secs(10);
const GRAMMAR_FIXTURES: usize = 100;

type Verdict = Result<String, String>;
type Check = fn() -> Verdict;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- ChrF

fn random_text(rng: &mut StdRng, alphabet: &[char], max_len: usize) -> String {
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect()
}

fn chrf_suite() -> Vec<(String, String)> {
    let mut pairs: Vec<(String, String)> = [
        ("The lighthouse fire is out.", "The lighthouse fire is out."),
        ("", "The lighthouse fire is out."),
        ("", "灯台の火が消えている。"),
        ("灯台の火が消えている。", "灯台の火が消えている。"),
        ("灯台の火は消えた", "灯台の火が消えている。"),
        ("猫が好きです", "私は猫が好きです。"),
        ("我喜欢猫", "我很喜欢猫。"),
        ("Someone took the key.", "Someone took the key away."),
        ("the the the the", "the cat sat on the mat"),
        ("a", "a"),
        ("a", "b"),
        ("ab", "a"),
        ("Where is the captain?", "Where's the captain?"),
        (
            "Nie wolno otwierać tych drzwi!",
            "Nie wolno otwierać tych drzwi!",
        ),
        ("Już za późno", "Już za późno."),
        ("  spaced   out  ", "spacedout"),
        ("ありがとう、灯台守", "ありがとう、小さな灯台守。"),
        ("もう遅いよ", "もう遅いよ。"),
        ("xyz", "灯台"),
        ("😀😀", "😀😀😀"),
    ]
    .iter()
    .map(|(h, r)| (h.to_string(), r.to_string()))
    .collect();
    let alphabet: Vec<char> = "abcde fgh.,!?灯台猫のがはいるぁあ我你好ąęź"
        .chars()
        .collect();
    let mut rng = StdRng::seed_from_u64(0xC4F);
    while pairs.len() < 50 {
        let r = random_text(&mut rng, &alphabet, 24);
        let h = if rng.random_bool(0.3) {
            r.chars().rev().collect()
        } else {
            random_text(&mut rng, &alphabet, 24)
        };
        if !r.trim().is_empty() {
            pairs.push((h, r));
        }
    }
    pairs
}

fn chrf_equivalence() -> Verdict {
    let pairs = chrf_suite();
    let p = ChrFParams::default();
    let start = Instant::now();
    let native: Vec<f64> = pairs
        .iter()
        .map(|(h, r)| chrf(h, r, &p).map_err(|e| format!("{h:?}/{r:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for ((h, r), got) in pairs.iter().zip(&native) {
        let want = oracles::chrf_oracle(h, r, p.max_n, p.beta, p.strip_whitespace)
            .ok_or("oracle rejected a pair")?;
        worst = worst.max((got - want).abs());
        if h == r {
            ensure(*got == 100.0, || format!("identical {h:?} scored {got}"))?;
        }
        if h.is_empty() {
            ensure(*got == 0.0, || format!("empty hypothesis scored {got}"))?;
        }
    }
    ensure(worst <= CHRF_TOLERANCE, || {
        format!("max deviation {worst:e}")
    })?;
    ensure(elapsed < CHRF_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} pairs, max deviation {worst:.1e}, {elapsed:?}",
        pairs.len()
    ))
}

// ----------------------------------------------------------------- MQM

fn mqm_set(minor: u64, major: u64, critical: u64, word_count: u64) -> MqmAnnotationSet {
    let ann = |severity| MqmAnnotation {
        line_id: "l".into(),
        issue_type: IssueType::Other,
        severity,
        span: None,
        note: String::new(),
    };
    let annotations = std::iter::repeat_n(ann(Severity::Minor), minor as usize)
        .chain(std::iter::repeat_n(ann(Severity::Major), major as usize))
        .chain(std::iter::repeat_n(
            ann(Severity::Critical),
            critical as usize,
        ))
        .collect();
    MqmAnnotationSet {
        system: "s".into(),
        word_count,
        annotations,
        counts: None,
    }
}

fn mqm_consistency() -> Verdict {
    // Rows as printed: minor, major, critical, score.
    let rows = [
        ("Official", 14u64, 50u64, 107u64, -1.31),
        ("GT", 5, 20, 272, -4.25),
        ("PBP-VIS", 8, 18, 160, -1.98),
    ];
    let mut details = Vec::new();
    for (name, minor, major, critical, score) in rows {
        let penalty = (5 * minor + 10 * major + 25 * critical) as f64;
        let words = (penalty / (1.0 - score)).round() as u64;
        let got = mqm_score(&mqm_set(minor, major, critical, words)).map_err(|e| e.to_string())?;
        ensure((got - score).abs() <= MQM_TOLERANCE, || {
            format!("{name}: {got:.4} vs {score}")
        })?;
        details.push(format!("{name} W={words} {got:.3}"));
    }
    let zero = mqm_score(&mqm_set(0, 0, 0, 1405)).map_err(|e| e.to_string())?;
    ensure(zero == 1.0, || format!("zero errors scored {zero}"))?;
    for words in [5u64, 50, 1405 * 5] {
        let s = mqm_score(&mqm_set(words / 5, 0, 0, words)).map_err(|e| e.to_string())?;
        ensure(s == 0.0, || {
            format!("one minor per 5 words over {words} words scored {s}")
        })?;
    }
    Ok(details.join(", "))
}

// -------------------------------------------------------------- OPTICS

fn optics_equivalence() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x0971C5);
    let mut clustered = 0;
    for i in 0..OPTICS_INSTANCES {
        let n = rng.random_range(0..=OPTICS_MAX_POINTS);
        let span = rng.random_range(5..=40u32);
        let pts: Vec<Point2> = (0..n)
            .map(|_| {
                Point2::new(
                    rng.random_range(0..span) as f64,
                    rng.random_range(0..span) as f64,
                )
            })
            .collect();
        let params = ClusterParams {
            eps: rng.random_range(1..=12u32) as f64,
            min_pts: rng.random_range(1..=4),
            min_box: 0,
        };
        let got = optics_cluster(&pts, &params).map_err(|e| e.to_string())?;
        let got = oracles::canonical(got.clusters, got.noise);
        let want = oracles::optics_oracle(&pts, params.eps, params.min_pts);
        ensure(got == want, || {
            format!("instance {i}: {got:?} vs oracle {want:?} for {params:?}")
        })?;
        clustered += usize::from(!want.0.is_empty());
    }
    Ok(format!("{OPTICS_INSTANCES} instances of at most {OPTICS_MAX_POINTS} points, {clustered} with clusters"))
}

// -------------------------------------------------------- reading order

fn reading_order() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x0DE5);
    let mut pages = 0;
    for (name, panels) in oracles::named_layouts() {
        let s = oracles::page_from_panels(&mut rng, &panels);
        let est = estimate_reading_order(&s.page);
        ensure(est.order == s.expected, || {
            format!("{name}: {:?} vs {:?}", est.order, s.expected)
        })?;
        pages += 1;
    }
    for i in 0..RANDOM_LAYOUTS {
        let s = oracles::synthetic_page(&mut rng, 600, 900, 1 + (i % 4) as u32);
        let est = estimate_reading_order(&s.page);
        ensure(est.order == s.expected, || {
            format!("random layout {i}: {:?} vs {:?}", est.order, s.expected)
        })?;
        pages += 1;
    }
    let fixture = fixture_volume();
    let rates: Vec<f64> = fixture
        .volume
        .pages
        .iter()
        .map(|p| order_disagreement(p, &estimate_reading_order(p)))
        .collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok(format!(
        "{pages} synthetic pages agree; annotated fixture pages disagreement {mean:.3} (reported)"
    ))
}

// ------------------------------------------------------ approach rows

fn lines_in_prompt(volume: &Volume, prompt: &str) -> BTreeSet<String> {
    volume
        .lines()
        .filter(|l| prompt.contains(&l.region.source_text))
        .map(|l| l.region.id.clone())
        .collect()
}

fn page_line_ids(volume: &Volume, pages: &[usize]) -> BTreeSet<String> {
    pages
        .iter()
        .flat_map(|&p| volume.pages[p].lines().map(|r| r.id.clone()))
        .collect()
}

const SUMMARY_MARKER: &str = "Rolling summary marker: the keeper lost the key.";

fn approach_conformance() -> Verdict {
    let loaded = fixture_volume();
    let volume = &loaded.volume;
    let all_pages: Vec<usize> = (0..volume.pages.len()).collect();
    let images = PageImages::new(
        &loaded,
        DEFAULT_MAX_SIDE,
        DEFAULT_QUALITY,
        AnnotationStyle::default(),
    );
    let templates = PromptTemplates::builtin();
    let examples = ExampleSet::builtin("en").unwrap();
    let settings = mangatl::config::RunConfig::default().settings();
    let mut summary = RollingSummary::new(150);
    summary.advance(SUMMARY_MARKER.into(), 0);
    let prior: BTreeMap<String, String> = volume
        .lines()
        .map(|l| (l.region.id.clone(), format!("PRIOR {}", l.region.id)))
        .collect();
    let plain_digest = |p: usize| images_digest(&images, p, false);
    let mut report = Vec::new();
    for approach in Approach::ALL {
        let row = approach.row();
        let ctx = RequestContext {
            volume,
            approach,
            target_lang: "en",
            templates: &templates,
            examples: &examples,
            settings: &settings,
            images: &images,
        };
        let units = plan_units(volume, approach, "en");
        let expected_units = match row.unit {
            UnitKind::Line => volume.line_count(),
            UnitKind::Page => volume.pages.len(),
            UnitKind::Volume => 1,
        };
        ensure(units.len() == expected_units, || {
            format!("{approach}: {} units", units.len())
        })?;
        let mut image_counts = BTreeSet::new();
        for unit in &units {
            let req: LlmRequest = build_request(
                &ctx,
                unit,
                (approach == Approach::VbpVisCod).then_some(&summary),
                (approach == Approach::VbpVisAll).then_some(&prior),
            )
            .map_err(|e| format!("{approach}: {e}"))?;
            let focus = unit.focus_page.unwrap_or(0);
            let want_images = match row.visual {
                VisualContext::None => 0,
                VisualContext::Page | VisualContext::NumberedPage => 1,
                VisualContext::ThreePages | VisualContext::Volume => 3,
            };
            ensure(req.images.len() == want_images, || {
                format!(
                    "{approach} unit {}: {} images",
                    unit.index,
                    req.images.len()
                )
            })?;
            image_counts.insert(req.images.len());
            let digests: Vec<String> = req.images.iter().map(|i| i.digest()).collect();
            match row.visual {
                VisualContext::Page => ensure(digests[0] == plain_digest(focus), || {
                    format!("{approach}: not the focus page")
                })?,
                VisualContext::NumberedPage => {
                    ensure(digests[0] == images_digest(&images, focus, true), || {
                        format!("{approach}: image not numbered")
                    })?;
                    ensure(digests[0] != plain_digest(focus), || {
                        format!("{approach}: numbered image equals the plain page")
                    })?;
                }
                VisualContext::ThreePages | VisualContext::Volume => {
                    let want: Vec<String> =
                        unit.page_indices.iter().map(|&p| plain_digest(p)).collect();
                    ensure(digests == want, || {
                        format!("{approach}: images are not the unit pages")
                    })?;
                }
                VisualContext::None => {}
            }
            let prompt = req.prompt();
            let want_lines: BTreeSet<String> = match row.textual {
                TextualContext::Line => unit.line_ids.iter().cloned().collect(),
                TextualContext::Page | TextualContext::PagePlusSummary => {
                    page_line_ids(volume, &[focus])
                }
                TextualContext::ThreePages => page_line_ids(volume, &unit.page_indices),
                TextualContext::VolumePlusTranslations | TextualContext::Volume => {
                    page_line_ids(volume, &all_pages)
                }
            };
            let got_lines = lines_in_prompt(volume, prompt);
            ensure(got_lines == want_lines, || {
                format!(
                    "{approach} unit {}: prompt carries {got_lines:?}",
                    unit.index
                )
            })?;
            if approach == Approach::VbpVisCod {
                ensure(prompt.contains(SUMMARY_MARKER), || {
                    "COD prompt lacks the rolling summary".into()
                })?;
            }
            if approach == Approach::VbpVisAll {
                for l in volume.lines() {
                    let carried = prompt.contains(&format!("PRIOR {}", l.region.id));
                    ensure(carried == (l.page_pos < focus), || {
                        format!("ALL page {focus}: prior for {} is {carried}", l.region.id)
                    })?;
                }
            }
        }
        report.push(format!(
            "{}:{}x{:?}",
            approach.label(),
            units.len(),
            image_counts
        ));
    }
    Ok(report.join(" "))
}

fn images_digest(images: &PageImages<'_>, page: usize, numbered: bool) -> String {
    use mangatl::core::strategy::ImageSource;
    images.page_image(page, numbered).unwrap().digest()
}

// -------------------------------------------------- numbered annotation

/// Tight bitmap of the pixels of `color` inside `area`.
fn ink_bitmap(img: &RgbImage, area: (u32, u32, u32, u32), color: Rgb) -> Vec<Vec<bool>> {
    let (x0, y0, w, h) = area;
    let inked = |x: u32, y: u32| img.pixel(x0 + x, y0 + y) == color;
    let cols: Vec<u32> = (0..w).filter(|&x| (0..h).any(|y| inked(x, y))).collect();
    let rows: Vec<u32> = (0..h).filter(|&y| (0..w).any(|x| inked(x, y))).collect();
    let (Some(&cx0), Some(&cx1), Some(&ry0), Some(&ry1)) =
        (cols.first(), cols.last(), rows.first(), rows.last())
    else {
        return Vec::new();
    };
    (ry0..=ry1)
        .map(|y| (cx0..=cx1).map(|x| inked(x, y)).collect())
        .collect()
}

/// Reads the number in `area` by splitting its ink into glyphs at empty
/// columns and matching each glyph against single-digit templates.
fn decode_number(
    img: &RgbImage,
    area: (u32, u32, u32, u32),
    style: &AnnotationStyle,
) -> Option<usize> {
    let (x0, y0, w, h) = area;
    let inked_col = |x: u32| (0..h).any(|y| img.pixel(x0 + x, y0 + y) == style.number_color);
    let mut glyphs = Vec::new();
    let mut x = 0;
    while x < w {
        if !inked_col(x) {
            x += 1;
            continue;
        }
        let start = x;
        while x < w && inked_col(x) {
            x += 1;
        }
        glyphs.push((x0 + start, y0, x - start, h));
    }
    let templates: Vec<Vec<Vec<bool>>> = (0..10)
        .map(|d| {
            let mut scratch = RgbImage::new(w, h, style.fill);
            let b = mangatl::core::corpus::BBox::new(0, 0, w, h);
            draw_number(&mut scratch, &b, d, style.number_color, style.font_px);
            ink_bitmap(&scratch, (0, 0, w, h), style.number_color)
        })
        .collect();
    let mut value = 0usize;
    for g in &glyphs {
        let bitmap = ink_bitmap(img, *g, style.number_color);
        value = value * 10 + templates.iter().position(|t| *t == bitmap)?;
    }
    (!glyphs.is_empty()).then_some(value)
}

fn numbered_annotation() -> Verdict {
    let loaded = fixture_volume();
    let style = AnnotationStyle::default();
    let mut decoded_pages = Vec::new();
    for (pos, page) in loaded.volume.pages.iter().enumerate() {
        let plain = load_rgb(&loaded.image_path(pos)).map_err(|e| e.to_string())?;
        let regions = numbered_lines(&page.regions);
        let numbered = number_bubbles(&plain, &regions, &style).map_err(|e| e.to_string())?;
        let targets: Vec<_> = regions.iter().filter(|r| r.kind.is_enclosed()).collect();
        for y in 0..plain.height() {
            for x in 0..plain.width() {
                let inside = targets
                    .iter()
                    .any(|r| r.bbox.contains_point(x as f64 + 0.5, y as f64 + 0.5));
                ensure(inside || plain.pixel(x, y) == numbered.pixel(x, y), || {
                    format!("page {pos}: pixel ({x}, {y}) changed")
                })?;
            }
        }
        let decoded: Vec<Option<usize>> = targets
            .iter()
            .map(|r| {
                let a = style.number_area(&r.bbox);
                decode_number(&numbered, (a.x, a.y, a.w, a.h), &style)
            })
            .collect();
        let want: Vec<Option<usize>> = (1..=targets.len()).map(Some).collect();
        ensure(decoded == want, || {
            format!("page {pos}: decoded {decoded:?}")
        })?;
        decoded_pages.push(format!("1..{}", targets.len()));
    }
    Ok(format!(
        "outside pixels unchanged; decoded {}",
        decoded_pages.join(", ")
    ))
}

// --------------------------------------------------------- determinism

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mangatl"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for run in fs::read_dir(dir).unwrap() {
        let run = run.unwrap().path();
        for f in fs::read_dir(&run).unwrap() {
            let f = f.unwrap().path();
            let key = f.strip_prefix(dir).unwrap().display().to_string();
            out.insert(key, fs::read(&f).unwrap());
        }
    }
    out
}

fn end_to_end_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let volume = fixture_dir().join("volume.json");
    let volume = volume.to_str().unwrap();
    let start = Instant::now();
    let mut first: Option<BTreeMap<String, Vec<u8>>> = None;
    for rep in 0..E2E_REPEATS {
        let out = tmp.path().join(format!("rep{rep}"));
        for approach in Approach::ALL {
            let cassette = cassette_path(approach);
            cli(&[
                "translate",
                "--volume",
                volume,
                "--approach",
                approach.key(),
                "--replay",
                cassette.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])?;
        }
        for run in fs::read_dir(&out).unwrap() {
            let run_file = run.unwrap().path().join("run.json");
            cli(&[
                "evaluate",
                "--run",
                run_file.to_str().unwrap(),
                "--volume",
                volume,
            ])?;
        }
        let got = artifacts(&out);
        match &first {
            None => {
                ensure(got.len() == 2 * Approach::ALL.len(), || {
                    format!("{} artifacts", got.len())
                })?;
                first = Some(got);
            }
            Some(f) => {
                let differing: Vec<&String> =
                    f.keys().filter(|k| got.get(*k) != f.get(*k)).collect();
                ensure(differing.is_empty() && got.len() == f.len(), || {
                    format!("repeat {rep} differs in {differing:?}")
                })?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < E2E_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{E2E_REPEATS} x 9 approaches, run.json and report.json identical, {elapsed:?}"
    ))
}

// ------------------------------------------------------------ grammars

const PLAIN: &str = "abcXYZ 019.,!?'\"ぁあん猫灯\n";
const ANY: &str = "abcXYZ 019.,!?'\"ぁあん猫灯\n\\{}[]()\t:😀ąę";

fn text(rng: &mut StdRng, alphabet: &str) -> String {
    let chars: Vec<char> = alphabet.chars().collect();
    random_text(rng, &chars, 20)
}

fn opt(rng: &mut StdRng, alphabet: &str) -> Option<String> {
    rng.random_bool(0.5).then(|| text(rng, alphabet))
}

fn grammar_fixture(rng: &mut StdRng, grammar: ResponseGrammar) -> ParsedTranslation {
    match grammar {
        ResponseGrammar::Bracketed => ParsedTranslation {
            lines: (0..rng.random_range(1..8))
                .map(|_| ParsedLine::new(text(rng, PLAIN)))
                .collect(),
            ..Default::default()
        },
        ResponseGrammar::BracketedExplained => ParsedTranslation {
            lines: (0..rng.random_range(1..8))
                .map(|_| ParsedLine {
                    explanation: opt(rng, PLAIN),
                    ..ParsedLine::new(text(rng, PLAIN))
                })
                .collect(),
            ..Default::default()
        },
        ResponseGrammar::CodDocument => ParsedTranslation {
            lines: (0..rng.random_range(0..6))
                .map(|_| ParsedLine {
                    translation: text(rng, ANY),
                    source: opt(rng, ANY),
                    speaker: opt(rng, ANY),
                    situation: opt(rng, ANY),
                    reasoning: opt(rng, ANY),
                    explanation: opt(rng, ANY),
                })
                .collect(),
            page_lengths: None,
            story_source: Some(text(rng, ANY)),
            story_target: Some(text(rng, ANY)),
        },
        ResponseGrammar::LineObjects => {
            let lengths: Vec<usize> = (0..rng.random_range(1..4))
                .map(|_| rng.random_range(0..4))
                .collect();
            let total = lengths.iter().sum();
            ParsedTranslation {
                lines: (0..total)
                    .map(|_| ParsedLine {
                        source: opt(rng, ANY),
                        reasoning: opt(rng, ANY),
                        ..ParsedLine::new(text(rng, ANY))
                    })
                    .collect(),
                page_lengths: rng.random_bool(0.5).then_some(lengths),
                ..Default::default()
            }
        }
        ResponseGrammar::ListOfLists => {
            let lengths: Vec<usize> = (0..rng.random_range(1..5))
                .map(|_| rng.random_range(0..4))
                .collect();
            let total = lengths.iter().sum();
            ParsedTranslation {
                lines: (0..total)
                    .map(|_| ParsedLine::new(text(rng, ANY)))
                    .collect(),
                page_lengths: Some(lengths),
                ..Default::default()
            }
        }
    }
}

fn grammar_round_trips() -> Verdict {
    let grammars = [
        ResponseGrammar::Bracketed,
        ResponseGrammar::BracketedExplained,
        ResponseGrammar::CodDocument,
        ResponseGrammar::LineObjects,
        ResponseGrammar::ListOfLists,
    ];
    let mut rng = StdRng::seed_from_u64(0x6A77);
    let mut mismatches = 0;
    for g in grammars {
        for i in 0..GRAMMAR_FIXTURES {
            let fixture = grammar_fixture(&mut rng, g);
            let raw = render_response(g, &fixture);
            let n = fixture.lines.len();
            let back = parse_with_grammar(&raw, g, n).map_err(|e| format!("{g:?} #{i}: {e}"))?;
            ensure(back == fixture, || {
                format!("{g:?} #{i}: {back:?} != {fixture:?}")
            })?;
            let wrong = [Some(n + 1), n.checked_sub(1), Some(n + 3)];
            for expected in wrong.into_iter().flatten() {
                match parse_with_grammar(&raw, g, expected) {
                    Err(e @ ParseError::Count { .. }) if e.is_retryable() => mismatches += 1,
                    other => return Err(format!("{g:?} #{i} with {expected} expected: {other:?}")),
                }
            }
        }
    }
    Ok(format!(
        "{} fixtures per grammar, {mismatches} count mismatches all retryable",
        GRAMMAR_FIXTURES
    ))
}

// ---------------------------------------------------------------- main

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("chrf-oracle-equivalence", chrf_equivalence),
        ("mqm-table-consistency", mqm_consistency),
        ("optics-oracle-equivalence", optics_equivalence),
        ("reading-order-synthetic", reading_order),
        ("approach-request-conformance", approach_conformance),
        ("numbered-annotation-invariants", numbered_annotation),
        ("end-to-end-determinism", end_to_end_determinism),
        ("grammar-round-trips", grammar_round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
