//! Numeric core for multimodal music-popularity regression.
//!
//! Everything here is pure computation over in-memory data and builds without
//! `std` (an allocator is required). File formats, checkpoints and the command
//! line live in the companion `lyricnet` crate.
//!
//! Layout:
//!
//! - [`matrix`], [`activation`], [`network`], [`loss`], [`adam`]: dense MLPs with
//!   manual backpropagation, including tied-weight decoder layers.
//! - [`pooling`]: token-matrix pooling for lyric embeddings.
//! - [`data`]: track records, cleaning, label normalisation, stratified splits,
//!   feature assembly and the synthetic corpus generator.
//! - [`autoenc`]: the audio and lyrics autoencoders.
//! - [`fusion`]: the fusion regressor, the single-autoencoder baseline and the
//!   staged training pipeline.
//! - [`eval`]: metrics, cross-validation, modality ablations and residual reports.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod activation;
pub mod adam;
pub mod autoenc;
pub mod data;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod loss;
pub mod matrix;
pub mod network;
pub mod pooling;
pub mod seed;

pub use activation::{Activation, ActivationMode};
pub use adam::AdamState;
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use network::{Gradients, LayerSpec, NetworkParams, Trace};
