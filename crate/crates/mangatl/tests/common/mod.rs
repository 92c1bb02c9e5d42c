#![allow(dead_code)]

use std::path::PathBuf;

use mangatl::config::RunConfig;
use mangatl::core::run::TranslationRun;
use mangatl::core::strategy::{Approach, ExampleSet, PromptTemplates};
use mangatl::gateway::{ChatBackend, ReplayBackend};
use mangatl::imaging::{DEFAULT_MAX_SIDE, DEFAULT_QUALITY};
use mangatl::manifest::{load_volume, LoadedVolume};
use mangatl::pipeline::{run_approach, PageImages, PipelineOptions};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

pub fn fixture_volume() -> LoadedVolume {
    load_volume(&fixture_dir().join("volume.json")).unwrap()
}

pub fn cassette_path(approach: Approach) -> PathBuf {
    fixture_dir()
        .join("cassettes")
        .join(format!("{}.json", approach.key()))
}

pub fn options(approach: Approach, retries: usize, workers: usize) -> PipelineOptions {
    let cfg = RunConfig::default();
    PipelineOptions {
        approach,
        target_lang: "en".into(),
        settings: cfg.settings(),
        retries,
        workers,
        lmax: cfg.lmax,
        config_digest: "test".into(),
        cassette_digest: None,
    }
}

pub fn run_with(
    loaded: &LoadedVolume,
    backend: &dyn ChatBackend,
    opts: &PipelineOptions,
) -> TranslationRun {
    let images = PageImages::new(
        loaded,
        DEFAULT_MAX_SIDE,
        DEFAULT_QUALITY,
        Default::default(),
    );
    let examples = ExampleSet::builtin("en").unwrap();
    run_approach(
        &loaded.volume,
        &images,
        backend,
        &PromptTemplates::builtin(),
        &examples,
        opts,
    )
    .unwrap()
}

pub fn replay(approach: Approach, workers: usize) -> TranslationRun {
    let loaded = fixture_volume();
    let backend = ReplayBackend::open(&cassette_path(approach)).unwrap();
    run_with(&loaded, &backend, &options(approach, 0, workers))
}
