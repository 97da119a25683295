//! Reproducible staged pipeline: stats, split, train-mf, prep, train-cnn,
//! evaluate.
//!
//! Commands read a shared plain-text configuration, write artifacts into a
//! lock-protected work directory and verify content digests of everything
//! they consume. Identical config and seeds reproduce byte-identical
//! artifacts.

mod commands;
mod config;
mod digest;
mod lock;

pub use commands::{
    cmd_evaluate, cmd_prep, cmd_split, cmd_stats, cmd_train_cnn, cmd_train_mf, MfScope,
    PrepOutput, SplitOutput, StatsOutput, TrainCnnOutput, TrainMfOutput,
};
pub use config::{Method, PipelineConfig};
pub use digest::{sha256_file, sha256_str};
pub use lock::WorkLock;
