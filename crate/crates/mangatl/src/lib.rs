//! File formats, image codecs, chat backends, the translation pipeline,
//! scoring clients and reports around `mangatl-core`.

pub mod cli;
pub mod config;
pub mod gateway;
pub mod imaging;
pub mod manifest;
pub mod openmantra;
pub mod pipeline;
pub mod report;
pub mod review;
pub mod scoring;
pub mod stub;
pub mod synthetic;

pub use mangatl_core as core;
