//! File formats, checkpoints, reports and the command line for the
//! `lyricnet-core` popularity models.
//!
//! - [`corpus_io`]: JSONL and `LNC1` binary corpora.
//! - [`sidecar`]: `LEMB` embedding sidecars and `LTOK` token matrices.
//! - [`manifest`]: run manifests and canonical hashing.
//! - [`checkpoint`]: the `LNCKPT1` model container.
//! - [`config`]: flat `key = value` pipeline configs.
//! - [`report`]: JSON and CSV outputs.
//! - [`cli`]: the `lyricnet` subcommands.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod error;
pub mod manifest;
pub mod report;
pub mod sidecar;

pub use error::{Error, Result};
