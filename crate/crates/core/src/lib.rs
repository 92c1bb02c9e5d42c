//! Data model, page geometry, prompt strategies and metrics for LLM-based
//! manga translation. Free of IO; see the `mangatl` crate for files,
//! images, HTTP and the command line.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod cost;
pub mod gateway;
pub mod layout;
pub mod metrics;
pub mod raster;
pub mod run;
pub mod strategy;
