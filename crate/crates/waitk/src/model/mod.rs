//! The wait-k transformer: unidirectional encoder with exact incremental
//! extension, a decoder whose cross-attention is limited to the visible
//! source prefix, multi-path training and checkpoint averaging.

mod config;
mod math;
mod decoder;
mod encoder;
mod params;
mod training;
mod waitk;

pub use config::ModelConfig;
pub use decoder::decoder_step;
pub use encoder::{encode_full, encode_incremental, EncoderState};
pub use params::{average_checkpoints, expected_tensors, init_params, Parameters};
pub use training::{multipath_loss, multipath_loss_with, waitk_loss, waitk_loss_with, LossOptions, Pair};
pub use waitk::{visible_sources, MultipathRange, WaitK};

use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("token id {id} out of vocabulary (size {vocab})")]
    Oov { id: usize, vocab: usize },
    #[error("sequence length {len} exceeds max positions {max}")]
    PositionOverflow { len: usize, max: usize },
    #[error("target step must be >= 1")]
    InvalidTargetStep,
    #[error("visible count {visible} exceeds encoded positions {encoded}")]
    VisibleExceedsEncoded { visible: usize, encoded: usize },
    #[error("cross-attention needs at least one visible source position")]
    NoVisibleSource,
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch contains an empty source sentence")]
    EmptySource,
    #[error("parameter signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("checkpoint list is empty")]
    EmptyCheckpointList,
    #[error("invalid wait-k value: {0}")]
    InvalidWaitK(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
