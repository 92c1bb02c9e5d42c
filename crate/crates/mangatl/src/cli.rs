//! Command-line interface. Errors map to exit codes 2 (configuration),
//! 3 (backend) and 4 (data) and are printed to stderr as JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mangatl_core::corpus::BBox;
use mangatl_core::cost::{cost_summary, PriceTable};
use mangatl_core::gateway::sha256_hex;
use mangatl_core::layout::{
    cluster_boxes, estimate_reading_order, optics_cluster, order_disagreement, ClusterParams,
    Point2,
};
use mangatl_core::metrics::{
    evaluate_run, LearnedScorer, MetricError, MetricKind, MetricReport, MqmAnnotationSet,
};
use mangatl_core::raster::{draw_number, Rgb};
use mangatl_core::run::{RunStatus, TranslationRun};
use mangatl_core::strategy::Approach;
use serde::Serialize;

use crate::config::{config_digest, load_resources, BackendMode, ConfigError, PageMask, RunConfig};
use crate::gateway::{
    today, CassetteMeta, ChatBackend, GatewayError, Limited, LiveBackend, LiveConfig,
    RecordingBackend, ReplayBackend,
};
use crate::imaging::{load_rgb, save_png};
use crate::manifest::{load_volume, IngestError, LoadedVolume};
use crate::openmantra::{export_volume, import_openmantra};
use crate::pipeline::{run_approach, PageImages, PipelineError, PipelineOptions};
use crate::report::{comparison_table, mqm_markdown, mqm_rows};
use crate::review::export_review;
use crate::scoring::ScoringClient;

pub const ENV_SCORING_ENDPOINT: &str = "MANGATL_SCORING_ENDPOINT";
pub const RUN_FILE: &str = "run.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Backend,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Backend => 3,
            ErrorKind::Data => 4,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(ErrorKind::Config, e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        Self::new(ErrorKind::Data, e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        let kind = match e {
            GatewayError::Cassette(_) => ErrorKind::Config,
            _ => ErrorKind::Backend,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        let kind = match e {
            MetricError::Backend(_) | MetricError::Protocol(_) => ErrorKind::Backend,
            MetricError::InvalidParams(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        Self::new(ErrorKind::Data, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mangatl",
    version,
    about = "Manga translation with multimodal LLMs: runs, metrics and reviews"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a manifest or import an OpenMantra directory.
    Ingest(IngestArgs),
    /// Translate volumes with one approach.
    Translate(TranslateArgs),
    /// Score a run against the volume's references.
    Evaluate(EvaluateArgs),
    /// Compare metric reports across approaches.
    Report(ReportArgs),
    /// Draw estimated reading order and text clusters over page images.
    LayoutDebug(LayoutDebugArgs),
    /// Write a review bundle for MQM annotation.
    ExportReview(ExportReviewArgs),
    /// Score MQM annotation files.
    MqmScore(MqmScoreArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Volume manifest to validate.
    #[arg(long, conflicts_with = "openmantra")]
    pub manifest: Option<PathBuf>,
    /// OpenMantra release directory.
    #[arg(long)]
    pub openmantra: Option<PathBuf>,
    /// Write canonical manifests and image copies here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Volume manifest (repeatable).
    #[arg(long = "volume")]
    pub volumes: Vec<PathBuf>,
    #[arg(long, value_parser = parse_approach)]
    pub approach: Option<Approach>,
    /// Target language code.
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendMode>,
    /// Replay from this cassette.
    #[arg(long, conflicts_with_all = ["record", "cassette"])]
    pub replay: Option<PathBuf>,
    /// Call the live backend and append to this cassette.
    #[arg(long, conflicts_with = "cassette")]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub retries: Option<usize>,
    /// Word budget of the rolling summary.
    #[arg(long)]
    pub lmax: Option<u32>,
    #[arg(long)]
    pub max_side: Option<u32>,
    #[arg(long)]
    pub quality: Option<u8>,
    /// Replace a prompt template: NAME=PATH (repeatable).
    #[arg(long = "prompt", value_parser = parse_prompt)]
    pub prompts: Vec<(String, PathBuf)>,
    /// Example set JSON for the target language.
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// Blank a rectangle before encoding: PAGE:X,Y,W,H (repeatable).
    #[arg(long = "mask", value_parser = parse_mask)]
    pub masks: Vec<PageMask>,
    /// Directory receiving one subdirectory per run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run file written by `translate`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub volume: PathBuf,
    /// Reference language; defaults to the run's target language.
    #[arg(long)]
    pub lang: Option<String>,
    /// Comma-separated: chrf, bertscore, bleurt, xcomet.
    #[arg(long, value_delimiter = ',', default_value = "chrf", value_parser = parse_metric)]
    pub metrics: Vec<MetricKind>,
    /// Scoring service root; falls back to MANGATL_SCORING_ENDPOINT.
    #[arg(long)]
    pub scoring_endpoint: Option<String>,
    /// Report path; defaults to report.json beside the run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metric report files.
    pub reports: Vec<PathBuf>,
    /// Use corpus-level ChrF instead of the mean of line scores.
    #[arg(long)]
    pub corpus_chrf: bool,
    #[arg(long)]
    pub json: bool,
    /// Run files to include in a cost table.
    #[arg(long = "run")]
    pub runs: Vec<PathBuf>,
    /// Per-token prices: {"models": {"<model>": {"input": .., "output": ..}}}.
    #[arg(long)]
    pub prices: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LayoutDebugArgs {
    #[arg(long)]
    pub volume: PathBuf,
    /// Page position; all pages when omitted.
    #[arg(long)]
    pub page: Option<usize>,
    /// Directory for overlay images.
    #[arg(long)]
    pub out: PathBuf,
    /// Text element centroids: {"<page position>": [[x, y], ...]}.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = ClusterParams::default().eps)]
    pub eps: f64,
    #[arg(long, default_value_t = ClusterParams::default().min_pts)]
    pub min_pts: usize,
    #[arg(long, default_value_t = ClusterParams::default().min_box)]
    pub min_box: u32,
}

#[derive(Debug, Args)]
pub struct ExportReviewArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub volume: PathBuf,
    /// Bundle directory; defaults to `review/` beside the run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MqmScoreArgs {
    /// Annotation set files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

fn parse_approach(s: &str) -> Result<Approach, String> {
    s.parse()
        .map_err(|e: mangatl_core::strategy::approach::UnknownApproach| e.to_string())
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|_| format!("unknown metric '{s}'"))
}

fn parse_prompt(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected NAME=PATH")?;
    Ok((name.to_owned(), PathBuf::from(path)))
}

fn parse_mask(s: &str) -> Result<PageMask, String> {
    let err = || format!("expected PAGE:X,Y,W,H, got '{s}'");
    let (page, rect) = s.split_once(':').ok_or_else(err)?;
    let v: Vec<u32> = rect
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| err()))
        .collect::<Result<_, _>>()?;
    let [x, y, w, h] = v[..] else {
        return Err(err());
    };
    Ok(PageMask {
        page: page.trim().parse().map_err(|_| err())?,
        bbox: BBox::new(x, y, w, h),
    })
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, kind: ErrorKind) -> Result<T, CliError> {
    let src = fs::read_to_string(path)
        .map_err(|e| CliError::new(kind, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&src)
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))
}

/// Executes `cli`, writing human output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => ingest(a, out),
        Command::Translate(a) => translate(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Report(a) => report(a, out),
        Command::LayoutDebug(a) => layout_debug(a, out),
        Command::ExportReview(a) => review(a, out),
        Command::MqmScore(a) => mqm_score(a, out),
    }
}

fn emit(out: &mut dyn std::io::Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::new(ErrorKind::Data, format!("stdout: {e}")))
}

#[derive(Serialize)]
struct VolumeSummary<'a> {
    volume: String,
    title: &'a str,
    split: String,
    pages: usize,
    lines: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
}

fn ingest(a: IngestArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let volumes: Vec<LoadedVolume> = match (&a.manifest, &a.openmantra) {
        (Some(m), None) => vec![load_volume(m)?],
        (None, Some(root)) => import_openmantra(root)?,
        _ => {
            return Err(CliError::new(
                ErrorKind::Config,
                "pass --manifest or --openmantra",
            ))
        }
    };
    for v in &volumes {
        let manifest = match &a.out {
            Some(dir) => Some(export_volume(v, dir)?.display().to_string()),
            None => None,
        };
        let s = VolumeSummary {
            volume: v.volume.id(),
            title: &v.volume.title,
            split: v.volume.split.to_string(),
            pages: v.volume.pages.len(),
            lines: v.volume.line_count(),
            manifest,
        };
        emit(
            out,
            &format!(
                "{}\n",
                serde_json::to_string(&s).expect("summary serializes")
            ),
        )?;
    }
    Ok(())
}

fn translate_config(a: &TranslateArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if !a.volumes.is_empty() {
        cfg.volumes = a.volumes.clone();
    }
    if let Some(v) = a.approach {
        cfg.approach = v;
    } else if a.config.is_none() {
        return Err(CliError::new(
            ErrorKind::Config,
            "--approach is required without --config",
        ));
    }
    if let Some(v) = &a.lang {
        cfg.target_lang = v.clone();
    }
    if let Some(v) = a.backend {
        cfg.backend = v;
    }
    if let Some(p) = &a.replay {
        cfg.backend = BackendMode::Replay;
        cfg.cassette = Some(p.clone());
    }
    if let Some(p) = &a.record {
        cfg.backend = BackendMode::Record;
        cfg.cassette = Some(p.clone());
    }
    if let Some(p) = &a.cassette {
        cfg.cassette = Some(p.clone());
    }
    if let Some(v) = &a.model {
        cfg.model = v.clone();
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { cfg.$f = v; } )* };
    }
    take!(temperature, workers, retries, lmax, max_side, quality);
    cfg.prompts.extend(a.prompts.iter().cloned());
    if let Some(p) = &a.examples {
        cfg.examples = Some(p.clone());
    }
    cfg.masks.extend(a.masks.iter().copied());
    if let Some(p) = &a.out {
        cfg.output_dir = p.clone();
    }
    if cfg.volumes.is_empty() {
        return Err(CliError::new(ErrorKind::Config, "no volume given"));
    }
    cfg.validate()?;
    Ok(cfg)
}

enum Backend {
    Replay(ReplayBackend),
    Live(Limited<LiveBackend>),
    Record(RecordingBackend<Limited<LiveBackend>>),
}

impl Backend {
    fn open(cfg: &RunConfig) -> Result<Self, CliError> {
        let live = || -> Result<Limited<LiveBackend>, CliError> {
            let lc = LiveConfig::from_env()
                .map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
            Ok(Limited::new(LiveBackend::new(lc), cfg.workers))
        };
        let cassette = || {
            cfg.cassette
                .clone()
                .expect("validated config has a cassette")
        };
        Ok(match cfg.backend {
            BackendMode::Replay => Backend::Replay(ReplayBackend::open(&cassette())?),
            BackendMode::Live => Backend::Live(live()?),
            BackendMode::Record => {
                let meta = CassetteMeta {
                    recorded: today(),
                    model: cfg.model.clone(),
                    backend: "live".into(),
                };
                Backend::Record(RecordingBackend::new(live()?, &cassette(), meta)?)
            }
        })
    }

    fn chat(&self) -> &dyn ChatBackend {
        match self {
            Backend::Replay(b) => b,
            Backend::Live(b) => b,
            Backend::Record(b) => b,
        }
    }

    fn digest(&self, cfg: &RunConfig) -> Option<String> {
        match self {
            Backend::Replay(b) => Some(b.digest().to_owned()),
            Backend::Live(_) => None,
            Backend::Record(_) => cfg
                .cassette
                .as_ref()
                .and_then(|p| fs::read(p).ok())
                .map(|b| sha256_hex(&b)),
        }
    }
}

fn translate(a: TranslateArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let cfg = translate_config(&a)?;
    let res = load_resources(&cfg)?;
    let backend = Backend::open(&cfg)?;
    let mut partial: Option<String> = None;
    for path in &cfg.volumes {
        let loaded = load_volume(path)?;
        let images = PageImages::new(&loaded, cfg.max_side, cfg.quality, cfg.style)
            .with_masks(cfg.masks_by_page());
        let opts = PipelineOptions {
            approach: cfg.approach,
            target_lang: cfg.target_lang.clone(),
            settings: cfg.settings(),
            retries: cfg.retries,
            workers: cfg.workers,
            lmax: cfg.lmax,
            config_digest: config_digest(&cfg, &res, &loaded.volume),
            cassette_digest: backend.digest(&cfg),
        };
        let mut run = run_approach(
            &loaded.volume,
            &images,
            backend.chat(),
            &res.templates,
            &res.examples,
            &opts,
        )?;
        if matches!(backend, Backend::Record(_)) {
            run.cassette_digest = backend.digest(&cfg);
        }
        let file = cfg.output_dir.join(run.dir_name()).join(RUN_FILE);
        write_file(&file, &to_json_pretty(&run))?;
        emit(
            out,
            &format!(
                "{} requests={} lines={} failed={} status={:?}\n",
                file.display(),
                run.totals.requests,
                run.totals.lines,
                run.totals.failed_lines,
                run.status
            ),
        )?;
        if run.status == RunStatus::Partial {
            partial = Some(format!(
                "{}: {}",
                run.dir_name(),
                run.error.clone().unwrap_or_default()
            ));
            break;
        }
    }
    match partial {
        Some(msg) => Err(CliError::new(
            ErrorKind::Backend,
            format!("run stopped early: {msg}"),
        )),
        None => Ok(()),
    }
}

fn evaluate(a: EvaluateArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let run: TranslationRun = read_json(&a.run, ErrorKind::Config)?;
    let loaded = load_volume(&a.volume)?;
    let lang = a.lang.clone().unwrap_or_else(|| run.target_lang.clone());
    let client = if a.metrics.iter().any(MetricKind::is_learned) {
        let endpoint = a
            .scoring_endpoint
            .clone()
            .or_else(|| std::env::var(ENV_SCORING_ENDPOINT).ok())
            .ok_or_else(|| {
                CliError::new(ErrorKind::Config, "learned metrics need --scoring-endpoint")
            })?;
        Some(ScoringClient::new(&endpoint))
    } else {
        None
    };
    let params = Default::default();
    let report = evaluate_run(
        &run,
        &loaded.volume,
        &lang,
        &a.metrics,
        &params,
        client.as_ref().map(|c| c as &dyn LearnedScorer),
    )?;
    let file = a
        .out
        .clone()
        .unwrap_or_else(|| a.run.with_file_name(REPORT_FILE));
    write_file(&file, &to_json_pretty(&report))?;
    let summary: Vec<String> = report
        .metrics
        .iter()
        .filter_map(|m| {
            report
                .per_volume
                .get(*m)
                .map(|v| format!("{}={v:.4}", m.name()))
        })
        .collect();
    emit(out, &format!("{} {}\n", file.display(), summary.join(" ")))
}

fn report(a: ReportArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    if a.reports.is_empty() && a.runs.is_empty() {
        return Err(CliError::new(ErrorKind::Config, "no report files given"));
    }
    let reports: Vec<MetricReport> = a
        .reports
        .iter()
        .map(|p| read_json(p, ErrorKind::Config))
        .collect::<Result<_, _>>()?;
    let table = comparison_table(&reports, a.corpus_chrf);
    let costs = match &a.prices {
        Some(p) => {
            let prices: PriceTable = read_json(p, ErrorKind::Config)?;
            let runs: Vec<TranslationRun> = a
                .runs
                .iter()
                .map(|p| read_json(p, ErrorKind::Config))
                .collect::<Result<_, _>>()?;
            Some(cost_summary(&runs, &prices))
        }
        None if !a.runs.is_empty() => {
            return Err(CliError::new(ErrorKind::Config, "--run needs --prices"))
        }
        None => None,
    };
    if a.json {
        return emit(
            out,
            &to_json_pretty(&serde_json::json!({ "table": table, "costs": costs })),
        );
    }
    if !reports.is_empty() {
        emit(out, &table.to_markdown())?;
    }
    if let Some(costs) = costs {
        let mut s = String::from("\n| Volume | Approach | Model | Requests | Input tokens | Output tokens | Cost |\n| --- | --- | --- | ---: | ---: | ---: | ---: |\n");
        for c in costs {
            let cost = c.cost.map_or("-".to_owned(), |v| format!("{v:.4}"));
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {cost} |\n",
                c.volume, c.approach, c.model, c.requests, c.input_tokens, c.output_tokens
            ));
        }
        emit(out, &s)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PageLayout {
    page: usize,
    annotated: Vec<String>,
    estimated: Vec<String>,
    disagreement: f64,
    fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<Vec<BBox>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<usize>,
    overlay: String,
}

const PANEL_COLOR: Rgb = Rgb([40, 90, 220]);
const REGION_COLOR: Rgb = Rgb([220, 30, 30]);
const CLUSTER_COLOR: Rgb = Rgb([20, 160, 60]);
const NOISE_COLOR: Rgb = Rgb([200, 0, 200]);

fn layout_debug(a: LayoutDebugArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let loaded = load_volume(&a.volume)?;
    let params = ClusterParams {
        eps: a.eps,
        min_pts: a.min_pts,
        min_box: a.min_box,
    };
    params
        .validate()
        .map_err(|e| CliError::new(ErrorKind::Config, e.to_string()))?;
    let points: BTreeMap<usize, Vec<[f64; 2]>> = match &a.points {
        Some(p) => read_json(p, ErrorKind::Config)?,
        None => BTreeMap::new(),
    };
    let pages: Vec<usize> = match a.page {
        Some(p) if p < loaded.volume.pages.len() => vec![p],
        Some(p) => {
            return Err(CliError::new(
                ErrorKind::Config,
                format!("no page at position {p}"),
            ))
        }
        None => (0..loaded.volume.pages.len()).collect(),
    };
    fs::create_dir_all(&a.out)
        .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", a.out.display())))?;
    let mut summary = Vec::new();
    for pos in pages {
        let page = &loaded.volume.pages[pos];
        let estimate = estimate_reading_order(page);
        let mut img = load_rgb(&loaded.image_path(pos))
            .map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?;
        for p in &page.panels {
            img.stroke_rect(&p.bbox, 3, PANEL_COLOR);
        }
        for (k, id) in estimate.order.iter().enumerate() {
            let r = page.region(id).expect("estimated ids come from the page");
            img.stroke_rect(&r.bbox, 2, REGION_COLOR);
            let label = BBox::new(
                r.bbox.x + 2,
                r.bbox.y + 2,
                r.bbox.w.saturating_sub(4).min(40),
                r.bbox.h.saturating_sub(4).min(24),
            );
            draw_number(&mut img, &label, k + 1, REGION_COLOR, 21);
        }
        let (mut clusters, mut noise) = (None, None);
        if let Some(raw) = points.get(&pos) {
            let pts: Vec<Point2> = raw.iter().map(|[x, y]| Point2::new(*x, *y)).collect();
            let c = optics_cluster(&pts, &params)
                .map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?;
            let boxes = cluster_boxes(&c.clusters, &pts, &params);
            for b in &boxes {
                if b.fits_within(img.width(), img.height()) {
                    img.stroke_rect(b, 2, CLUSTER_COLOR);
                }
            }
            for &i in &c.noise {
                let (x, y) = (pts[i].x as u32, pts[i].y as u32);
                let dot = BBox::new(x.saturating_sub(2), y.saturating_sub(2), 5, 5);
                if dot.fits_within(img.width(), img.height()) {
                    img.fill_rect(&dot, NOISE_COLOR);
                }
            }
            noise = Some(c.noise.len());
            clusters = Some(boxes);
        }
        let overlay = a.out.join(format!("page_{:03}_layout.png", page.index));
        save_png(&img, &overlay).map_err(|e| CliError::new(ErrorKind::Data, e.to_string()))?;
        summary.push(PageLayout {
            page: pos,
            annotated: page.regions.iter().map(|r| r.id.clone()).collect(),
            disagreement: order_disagreement(page, &estimate),
            estimated: estimate.order,
            fallback: estimate.fallback,
            clusters,
            noise,
            overlay: overlay.display().to_string(),
        });
    }
    let mean = summary.iter().map(|p| p.disagreement).sum::<f64>() / summary.len().max(1) as f64;
    emit(
        out,
        &to_json_pretty(&serde_json::json!({ "pages": summary, "mean_disagreement": mean })),
    )
}

fn review(a: ExportReviewArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let run: TranslationRun = read_json(&a.run, ErrorKind::Config)?;
    let loaded = load_volume(&a.volume)?;
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| a.run.with_file_name("review"));
    let path = export_review(&run, &loaded, &dir)?;
    emit(out, &format!("{}\n", path.display()))
}

fn mqm_score(a: MqmScoreArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let sets: Vec<MqmAnnotationSet> = a
        .files
        .iter()
        .map(|p| read_json(p, ErrorKind::Config))
        .collect::<Result<_, _>>()?;
    for (set, path) in sets.iter().zip(&a.files) {
        set.validate()
            .map_err(|e| CliError::new(ErrorKind::Data, format!("{}: {e}", path.display())))?;
    }
    let rows = mqm_rows(&sets)?;
    if a.json {
        emit(out, &to_json_pretty(&rows))
    } else {
        emit(out, &mqm_markdown(&rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_syntax() {
        assert_eq!(
            parse_mask("2:1,2,3,4").unwrap(),
            PageMask {
                page: 2,
                bbox: BBox::new(1, 2, 3, 4)
            }
        );
        assert!(parse_mask("2:1,2,3").is_err());
        assert!(parse_mask("1,2,3,4").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::new(ErrorKind::Config, "").exit_code(), 2);
        assert_eq!(CliError::new(ErrorKind::Backend, "").exit_code(), 3);
        assert_eq!(CliError::new(ErrorKind::Data, "").exit_code(), 4);
        assert_eq!(
            CliError::from(GatewayError::CassetteMiss("x".into())).kind,
            ErrorKind::Backend
        );
        assert_eq!(
            CliError::from(MetricError::MissingReference("l".into())).kind,
            ErrorKind::Data
        );
    }

    #[test]
    fn error_json_shape() {
        let v: serde_json::Value =
            serde_json::from_str(&CliError::new(ErrorKind::Data, "bad").to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "data");
        assert_eq!(v["error"]["message"], "bad");
    }

    #[test]
    fn translate_requires_cassette_for_replay() {
        let cli = Cli::try_parse_from([
            "mangatl",
            "translate",
            "--volume",
            "v.json",
            "--approach",
            "LBL",
        ])
        .unwrap();
        let Command::Translate(a) = cli.command else {
            unreachable!()
        };
        assert_eq!(translate_config(&a).unwrap_err().kind, ErrorKind::Config);
    }

    #[test]
    fn approach_flag_accepts_labels() {
        let cli = Cli::try_parse_from([
            "mangatl",
            "translate",
            "--volume",
            "v",
            "--approach",
            "pbp-vis-num",
            "--replay",
            "c",
        ])
        .unwrap();
        let Command::Translate(a) = cli.command else {
            unreachable!()
        };
        let cfg = translate_config(&a).unwrap();
        assert_eq!(cfg.approach, Approach::PbpVisNum);
        assert_eq!(cfg.backend, BackendMode::Replay);
    }
}
