//! Pipeline, artifact formats and HTTP service around [`conceptlab_core`].
//!
//! A run goes through the stages in [`pipeline::Stage`], each reading and
//! writing files in one artifact directory. The finished directory is a
//! [`bundle::ModelBundle`], which [`service`] serves over HTTP.

pub mod artifacts;
pub mod bundle;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod format;
pub mod pipeline;
pub mod report;
pub mod service;
pub mod thumbnail;

pub use error::{Error, Result};
