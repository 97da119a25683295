//! Item cold-start rating prediction.
//!
//! A new item has no usage history, so a latent-factor recommender cannot
//! place it in factor space. This crate closes that gap by regressing item
//! factor vectors from item text descriptions:
//!
//! 1. [`corpus`] ingests a JSON-lines review file, picks one description per
//!    business (the most-voted review) and carves business-disjoint
//!    cold-start test sets.
//! 2. [`svdpp`] trains the SVD++ latent-factor model on known ratings; its
//!    item vectors are the regression targets and its user-side parameters
//!    rate cold items.
//! 3. [`textprep`] turns descriptions into padded index sequences over a
//!    word-embedding table, backfilling unknown words by edit distance or
//!    random initialization.
//! 4. [`convnet`] is the convolutional regressor (embedding lookup, 1-d
//!    convolution, max-over-time pooling, dense output) with hand-derived
//!    gradients, trained with SGD against the SVD++ item vectors.
//! 5. [`coldstart`] produces factor vectors for unseen businesses from the
//!    network, from two random-initialization baselines, or from a
//!    full-data factorization (the upper bound), and rates test reviews.
//! 6. [`eval`] computes RMSE scores and assembles the per-method,
//!    per-test-set report.
//! 7. [`pipeline`] stages the whole thing behind reproducible, digest-checked
//!    commands; the `coldrec` binary is a thin front end over it.
//!
//! Every stage is deterministic given its seed: reruns produce byte-identical
//! artifacts. See the `examples/` directory for one runnable walkthrough per
//! capability.

pub mod coldstart;
pub mod convnet;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod svdpp;
pub mod textprep;

mod binio;
mod util;

pub use error::{Error, Result};
