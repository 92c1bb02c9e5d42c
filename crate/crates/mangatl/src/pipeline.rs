//! Executes an approach over a volume against a chat backend.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use mangatl_core::corpus::{BBox, TextRegion, Volume};
use mangatl_core::gateway::{EncodedImage, LlmRequest, LlmResponse, RequestSettings};
use mangatl_core::raster::{mask_regions, number_bubbles, AnnotationStyle, Rgb};
use mangatl_core::run::{
    Exchange, ExchangeKind, ExchangeOutcome, Hypothesis, LineStatus, ResponseRecord, RunStatus,
    RunTotals, SummaryRecord, TranslationRun, RUN_FORMAT,
};
use mangatl_core::strategy::{
    build_request, cod_apply, cod_refine_request, parse_response, plan_units, Approach, ExampleSet,
    ImageSource, ParseError, ParsedLine, PromptTemplates, RequestContext, RequestError,
    RollingSummary, TranslationUnit,
};

use crate::gateway::{ChatBackend, GatewayError};
use crate::imaging::{encode_for_request, load_rgb};
use crate::manifest::LoadedVolume;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub approach: Approach,
    pub target_lang: String,
    pub settings: RequestSettings,
    /// Re-sends after a response fails to parse.
    pub retries: usize,
    /// Parallel units for the line and page approaches.
    pub workers: usize,
    pub lmax: u32,
    pub config_digest: String,
    pub cassette_digest: Option<String>,
}

/// Page images loaded from disk, optionally masked, numbered on demand and
/// encoded once per variant.
pub struct PageImages<'a> {
    loaded: &'a LoadedVolume,
    max_side: u32,
    quality: u8,
    style: AnnotationStyle,
    masks: BTreeMap<usize, Vec<BBox>>,
    cache: Mutex<HashMap<(usize, bool), EncodedImage>>,
}

impl<'a> PageImages<'a> {
    pub fn new(
        loaded: &'a LoadedVolume,
        max_side: u32,
        quality: u8,
        style: AnnotationStyle,
    ) -> Self {
        Self {
            loaded,
            max_side,
            quality,
            style,
            masks: BTreeMap::new(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Blanks `rects` on the page at position `page_pos` before encoding.
    pub fn with_masks(mut self, masks: BTreeMap<usize, Vec<BBox>>) -> Self {
        self.masks = masks;
        self
    }

    fn render(&self, page_pos: usize, numbered: bool) -> Result<EncodedImage, RequestError> {
        let page = self
            .loaded
            .volume
            .pages
            .get(page_pos)
            .ok_or_else(|| RequestError::MissingAsset(format!("page position {page_pos}")))?;
        let path = self.loaded.image_path(page_pos);
        let mut img = load_rgb(&path).map_err(|e| RequestError::MissingAsset(e.to_string()))?;
        if let Some(rects) = self.masks.get(&page_pos) {
            img = mask_regions(&img, rects, Rgb::WHITE)
                .map_err(|e| RequestError::Precondition(e.to_string()))?;
        }
        if numbered {
            img = number_bubbles(&img, &numbered_lines(&page.regions), &self.style)
                .map_err(|e| RequestError::Precondition(e.to_string()))?;
        }
        encode_for_request(&img, self.max_side, self.quality)
            .map_err(|e| RequestError::MissingAsset(e.to_string()))
    }
}

/// Lines of a page renumbered consecutively, so that drawn numbers match
/// the `Line i` labels of the prompt.
pub fn numbered_lines(regions: &[TextRegion]) -> Vec<TextRegion> {
    regions
        .iter()
        .filter(|r| r.is_line())
        .enumerate()
        .map(|(i, r)| TextRegion {
            reading_index: i,
            ..r.clone()
        })
        .collect()
}

impl ImageSource for PageImages<'_> {
    fn page_image(&self, page_pos: usize, numbered: bool) -> Result<EncodedImage, RequestError> {
        if let Some(hit) = self
            .cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&(page_pos, numbered))
        {
            return Ok(hit.clone());
        }
        let img = self.render(page_pos, numbered)?;
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert((page_pos, numbered), img.clone());
        Ok(img)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("unit {unit}: {source}")]
    Request { unit: usize, source: RequestError },
}

/// Lines a unit translated, with the page story when the grammar has one.
struct UnitResult {
    lines: Vec<ParsedLine>,
    story_target: Option<String>,
}

struct Attempts<T> {
    exchanges: Vec<Exchange>,
    /// `Ok(None)`: every attempt failed to parse.
    result: Result<Option<T>, GatewayError>,
}

fn record(r: &LlmResponse) -> ResponseRecord {
    ResponseRecord {
        text: r.text.clone(),
        input_tokens: r.input_tokens,
        output_tokens: r.output_tokens,
        latency_ms: r.latency_ms,
        backend_id: r.backend_id.clone(),
    }
}

/// Sends `request` until `parse` accepts a reply, at most `retries + 1`
/// times. Backend failures end the loop at once.
fn attempt<T>(
    backend: &dyn ChatBackend,
    request: &LlmRequest,
    unit: usize,
    kind: ExchangeKind,
    retries: usize,
    parse: impl Fn(&str) -> Result<T, ParseError>,
) -> Attempts<T> {
    let digest = request.digest();
    let images: Vec<String> = request.images.iter().map(|i| i.digest()).collect();
    let mut exchanges = Vec::new();
    for n in 0..=retries {
        let mut ex = Exchange {
            seq: 0,
            unit,
            kind,
            attempt: n,
            request_digest: digest.clone(),
            prompt: request.prompt().to_owned(),
            images: images.clone(),
            response: None,
            outcome: ExchangeOutcome::Ok,
        };
        match backend.send(request) {
            Err(e) => {
                ex.outcome = ExchangeOutcome::BackendError(e.to_string());
                exchanges.push(ex);
                return Attempts {
                    exchanges,
                    result: Err(e),
                };
            }
            Ok(resp) => {
                ex.response = Some(record(&resp));
                match parse(&resp.text) {
                    Ok(v) => {
                        exchanges.push(ex);
                        return Attempts {
                            exchanges,
                            result: Ok(Some(v)),
                        };
                    }
                    Err(e) => {
                        log::info!("unit {unit} attempt {n}: {e}");
                        ex.outcome = ExchangeOutcome::ParseError(e.to_string());
                        exchanges.push(ex);
                    }
                }
            }
        }
    }
    Attempts {
        exchanges,
        result: Ok(None),
    }
}

/// Parses a translation reply into the lines of `unit`.
fn parse_unit(
    volume: &Volume,
    approach: Approach,
    unit: &TranslationUnit,
    raw: &str,
) -> Result<UnitResult, ParseError> {
    let counts: Vec<usize> = unit
        .page_indices
        .iter()
        .map(|&p| volume.pages[p].lines().count())
        .collect();
    let parsed = match approach {
        Approach::VbpVis3p => {
            let parsed = parse_response(raw, approach, counts.iter().sum())?;
            parsed.expect_pages(&counts)?;
            let k = unit
                .page_indices
                .iter()
                .position(|&p| Some(p) == unit.focus_page)
                .unwrap_or(0);
            let lines = parsed
                .page(k)
                .map(<[ParsedLine]>::to_vec)
                .unwrap_or_default();
            return Ok(UnitResult {
                lines,
                story_target: None,
            });
        }
        Approach::VbvVis => {
            let parsed = parse_response(raw, approach, unit.line_ids.len())?;
            parsed.expect_pages(&counts)?;
            parsed
        }
        _ => parse_response(raw, approach, unit.line_ids.len())?,
    };
    Ok(UnitResult {
        lines: parsed.lines,
        story_target: parsed.story_target,
    })
}

struct UnitOutcome {
    exchanges: Vec<Exchange>,
    result: Result<Option<UnitResult>, GatewayError>,
}

fn run_unit(
    ctx: &RequestContext<'_>,
    backend: &dyn ChatBackend,
    unit: &TranslationUnit,
    retries: usize,
    summary: Option<&RollingSummary>,
    prior: Option<&BTreeMap<String, String>>,
) -> Result<UnitOutcome, PipelineError> {
    let request =
        build_request(ctx, unit, summary, prior).map_err(|source| PipelineError::Request {
            unit: unit.index,
            source,
        })?;
    let a = attempt(
        backend,
        &request,
        unit.index,
        ExchangeKind::Translate,
        retries,
        |raw| parse_unit(ctx.volume, ctx.approach, unit, raw),
    );
    Ok(UnitOutcome {
        exchanges: a.exchanges,
        result: a.result,
    })
}

/// Runs every unit of `opts.approach` over `loaded`. A backend failure
/// stops the run and yields a partial run; lines whose replies never
/// parsed are marked failed.
pub fn run_approach(
    volume: &Volume,
    images: &(dyn ImageSource + Sync),
    backend: &dyn ChatBackend,
    templates: &PromptTemplates,
    examples: &ExampleSet,
    opts: &PipelineOptions,
) -> Result<TranslationRun, PipelineError> {
    let approach = opts.approach;
    let units = plan_units(volume, approach, &opts.target_lang);
    let make_ctx = || RequestContext {
        volume,
        approach,
        target_lang: &opts.target_lang,
        templates,
        examples,
        settings: &opts.settings,
        images,
    };
    let mut exchanges: Vec<Exchange> = Vec::new();
    let mut results: BTreeMap<String, (ParsedLine, LineStatus)> = BTreeMap::new();
    let mut summaries = Vec::new();
    let mut error: Option<String> = None;

    let mut absorb = |unit: &TranslationUnit,
                      outcome: UnitOutcome,
                      exchanges: &mut Vec<Exchange>|
     -> Option<UnitResult> {
        exchanges.extend(outcome.exchanges);
        match outcome.result {
            Ok(Some(r)) => {
                for (id, line) in unit.line_ids.iter().zip(&r.lines) {
                    results.insert(id.clone(), (line.clone(), LineStatus::Ok));
                }
                Some(r)
            }
            Ok(None) => {
                for id in &unit.line_ids {
                    results.insert(id.clone(), (ParsedLine::default(), LineStatus::Failed));
                }
                None
            }
            Err(e) => {
                error.get_or_insert_with(|| e.to_string());
                None
            }
        }
    };

    if approach.is_sequential() {
        let mut summary = (approach == Approach::VbpVisCod).then(|| RollingSummary::new(opts.lmax));
        let mut prior = (approach == Approach::VbpVisAll).then(BTreeMap::<String, String>::new);
        let ctx = make_ctx();
        for unit in &units {
            let outcome = run_unit(
                &ctx,
                backend,
                unit,
                opts.retries,
                summary.as_ref(),
                prior.as_ref(),
            )?;
            let failed_backend = outcome.result.is_err();
            let result = absorb(unit, outcome, &mut exchanges);
            if failed_backend {
                break;
            }
            if let Some(prior) = prior.as_mut() {
                for (k, id) in unit.line_ids.iter().enumerate() {
                    let text = result
                        .as_ref()
                        .and_then(|r| r.lines.get(k))
                        .map(|l| l.translation.clone());
                    prior.insert(id.clone(), text.unwrap_or_default());
                }
            }
            if let (Some(s), Some(r), Some(page)) =
                (summary.as_mut(), result.as_ref(), unit.focus_page)
            {
                let observation = r.story_target.clone().unwrap_or_else(|| {
                    r.lines
                        .iter()
                        .map(|l| l.translation.as_str())
                        .collect::<Vec<_>>()
                        .join(" ")
                });
                let request = cod_refine_request(
                    templates,
                    &opts.settings,
                    s,
                    &observation,
                    &opts.target_lang,
                    opts.lmax,
                )
                .map_err(|source| PipelineError::Request {
                    unit: unit.index,
                    source,
                })?;
                let a = attempt(
                    backend,
                    &request,
                    unit.index,
                    ExchangeKind::Refine,
                    opts.retries,
                    cod_apply,
                );
                exchanges.extend(a.exchanges);
                match a.result {
                    Ok(Some(text)) => s.advance(text, page),
                    Ok(None) => {
                        log::warn!("summary refinement after page {page} failed; keeping the previous summary");
                        let kept = s.text.clone();
                        s.advance(kept, page);
                    }
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
                summaries.push(SummaryRecord {
                    page,
                    page_cursor: s.page_cursor,
                    text: s.text.clone(),
                });
            }
        }
    } else {
        let slots: Vec<Mutex<Option<Result<UnitOutcome, PipelineError>>>> =
            units.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let workers = opts.workers.clamp(1, units.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| {
                    let ctx = make_ctx();
                    loop {
                        if stop.load(Ordering::SeqCst) {
                            break;
                        }
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(unit) = units.get(i) else { break };
                        let out = run_unit(&ctx, backend, unit, opts.retries, None, None);
                        if !matches!(out, Ok(UnitOutcome { result: Ok(_), .. })) {
                            stop.store(true, Ordering::SeqCst);
                        }
                        *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(out);
                    }
                });
            }
        });
        for (unit, slot) in units.iter().zip(slots) {
            match slot.into_inner().unwrap_or_else(|e| e.into_inner()) {
                Some(out) => {
                    absorb(unit, out?, &mut exchanges);
                }
                None => continue,
            }
        }
    }

    for (seq, e) in exchanges.iter_mut().enumerate() {
        e.seq = seq;
    }
    let hypotheses = volume
        .lines()
        .map(|l| {
            let (line, status) = results
                .remove(&l.region.id)
                .unwrap_or((ParsedLine::default(), LineStatus::NotRun));
            Hypothesis {
                line_id: l.region.id.clone(),
                page: l.page_pos,
                text: if status == LineStatus::Ok {
                    line.translation
                } else {
                    String::new()
                },
                status,
                explanation: line.explanation,
                reasoning: line.reasoning,
            }
        })
        .collect();
    let mut run = TranslationRun {
        format: RUN_FORMAT.into(),
        volume: volume.id(),
        volume_title: volume.title.clone(),
        approach,
        model: opts.settings.model.clone(),
        target_lang: opts.target_lang.clone(),
        temperature: opts.settings.temperature,
        config_digest: opts.config_digest.clone(),
        cassette_digest: opts.cassette_digest.clone(),
        status: if error.is_some() {
            RunStatus::Partial
        } else {
            RunStatus::Complete
        },
        error,
        exchanges,
        hypotheses,
        summaries,
        totals: RunTotals::default(),
    };
    run.recount();
    Ok(run)
}
