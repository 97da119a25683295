//! Convolutional network regressing latent-factor vectors from tokenized
//! descriptions, with hand-derived gradients.
//!
//! Layers: embedding lookup (N x embed_dim for a padded document of N
//! tokens), same-length 1-d convolution with ReLU (N x num_filters; windows
//! reaching past the last row see zero rows), max-over-time pooling
//! (num_filters), dense linear output (output_dim).
//!
//! Training minimizes the batch mean of per-sample squared errors, where a
//! sample's loss is `(1/k) Σ_o (prediction_o - target_o)^2`; the reported
//! metric is its square root (RMSE). Max-pooling routes gradient to the
//! first maximal position only; the ReLU derivative is taken as 0 at 0; the
//! padding row receives no gradient and stays exactly zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::binio;
use crate::error::{Error, Result};
use crate::textprep::{EmbeddingTable, TokenizedDoc, PAD_ROW};
use crate::util::derive_seed;

const FILTER_STREAM: u64 = 11;
const DENSE_STREAM: u64 = 12;
const SPLIT_STREAM: u64 = 13;
const EPOCH_STREAM_BASE: u64 = 5000;

/// Network and training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub embed_dim: usize,
    pub num_filters: usize,
    pub window: usize,
    pub output_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_frac: f64,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            embed_dim: 300,
            num_filters: 50,
            window: 4,
            output_dim: 20,
            learning_rate: 0.001,
            batch_size: 64,
            max_epochs: 50,
            validation_frac: 0.10,
            seed: 42,
        }
    }
}

impl CnnConfig {
    fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.num_filters == 0 || self.output_dim == 0 {
            return Err(Error::Parameter(
                "embed_dim, num_filters and output_dim must be >= 1".into(),
            ));
        }
        if self.window == 0 {
            return Err(Error::Parameter("window must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Parameter("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch_size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Parameter("max_epochs must be >= 1".into()));
        }
        if !(self.validation_frac > 0.0 && self.validation_frac < 1.0) {
            return Err(Error::Parameter("validation_frac must be in (0,1)".into()));
        }
        Ok(())
    }
}

/// The network. Owns its (trainable) embedding table.
///
/// Parameter layout: `filters[f * window * embed_dim + w * embed_dim + e]`,
/// `dense_w[o * num_filters + f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    config: CnnConfig,
    embedding: EmbeddingTable,
    filters: Vec<f64>,
    filter_bias: Vec<f64>,
    dense_w: Vec<f64>,
    dense_b: Vec<f64>,
    /// Bumped on every parameter update; caches from older versions are stale.
    version: u64,
}

/// Activations retained by [`CnnModel::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    token_ids: Vec<u32>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    pre_at_max: Vec<f64>,
    prediction: Vec<f64>,
}

impl ForwardCache {
    /// Per-filter maxima after pooling.
    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    /// Position whose window produced each filter's maximum.
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Gradients of the per-sample loss `(1/k) Σ (p - t)^2` for every parameter
/// class. Embedding gradients cover only the rows used by the document; the
/// padding row never appears.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnGradients {
    pub filters: Vec<f64>,
    pub filter_bias: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    pub embedding: BTreeMap<u32, Vec<f64>>,
}

impl CnnGradients {
    fn zeros(config: &CnnConfig) -> Self {
        Self {
            filters: vec![0.0; config.num_filters * config.window * config.embed_dim],
            filter_bias: vec![0.0; config.num_filters],
            dense_w: vec![0.0; config.output_dim * config.num_filters],
            dense_b: vec![0.0; config.output_dim],
            embedding: BTreeMap::new(),
        }
    }

    fn accumulate(&mut self, other: &CnnGradients, embed_dim: usize) {
        for (a, b) in self.filters.iter_mut().zip(&other.filters) {
            *a += b;
        }
        for (a, b) in self.filter_bias.iter_mut().zip(&other.filter_bias) {
            *a += b;
        }
        for (a, b) in self.dense_w.iter_mut().zip(&other.dense_w) {
            *a += b;
        }
        for (a, b) in self.dense_b.iter_mut().zip(&other.dense_b) {
            *a += b;
        }
        for (row, grad) in &other.embedding {
            let acc = self
                .embedding
                .entry(*row)
                .or_insert_with(|| vec![0.0; embed_dim]);
            for (a, b) in acc.iter_mut().zip(grad) {
                *a += b;
            }
        }
    }
}

/// RMSE between a prediction and its target: `sqrt(mean((p - t)^2))`.
pub fn loss(prediction: &[f64], target: &[f64]) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::Parameter(format!(
            "length mismatch: prediction {} vs target {}",
            prediction.len(),
            target.len()
        )));
    }
    if prediction.is_empty() {
        return Err(Error::Parameter("empty vectors".into()));
    }
    let sse: f64 = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / prediction.len() as f64).sqrt())
}

impl CnnModel {
    /// Seeded initialization: filters and dense weights uniform in
    /// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]`, biases zero.
    pub fn init(config: &CnnConfig, embedding: EmbeddingTable) -> Result<CnnModel> {
        config.validate()?;
        if embedding.dim() != config.embed_dim {
            return Err(Error::Parameter(format!(
                "embedding table dim {} does not match config embed_dim {}",
                embedding.dim(),
                config.embed_dim
            )));
        }
        let filter_span = config.window * config.embed_dim;
        let filter_bound = (6.0 / (filter_span + config.num_filters) as f64).sqrt();
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(config.seed, FILTER_STREAM));
        let filters = (0..config.num_filters * filter_span)
            .map(|_| rng.random_range(-filter_bound..=filter_bound))
            .collect();
        let dense_bound = (6.0 / (config.num_filters + config.output_dim) as f64).sqrt();
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(config.seed, DENSE_STREAM));
        let dense_w = (0..config.output_dim * config.num_filters)
            .map(|_| rng.random_range(-dense_bound..=dense_bound))
            .collect();
        Ok(CnnModel {
            filter_bias: vec![0.0; config.num_filters],
            dense_b: vec![0.0; config.output_dim],
            config: config.clone(),
            embedding,
            filters,
            dense_w,
            version: 0,
        })
    }

    /// Model with explicit parameters (see the struct docs for the layout).
    pub fn with_parameters(
        config: &CnnConfig,
        embedding: EmbeddingTable,
        filters: Vec<f64>,
        filter_bias: Vec<f64>,
        dense_w: Vec<f64>,
        dense_b: Vec<f64>,
    ) -> Result<CnnModel> {
        config.validate()?;
        if embedding.dim() != config.embed_dim {
            return Err(Error::Parameter("embedding dim mismatch".into()));
        }
        if filters.len() != config.num_filters * config.window * config.embed_dim {
            return Err(Error::Parameter("filters length mismatch".into()));
        }
        if filter_bias.len() != config.num_filters {
            return Err(Error::Parameter("filter_bias length mismatch".into()));
        }
        if dense_w.len() != config.output_dim * config.num_filters {
            return Err(Error::Parameter("dense_w length mismatch".into()));
        }
        if dense_b.len() != config.output_dim {
            return Err(Error::Parameter("dense_b length mismatch".into()));
        }
        Ok(CnnModel {
            config: config.clone(),
            embedding,
            filters,
            filter_bias,
            dense_w,
            dense_b,
            version: 0,
        })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn embedding(&self) -> &EmbeddingTable {
        &self.embedding
    }

    pub fn filters(&self) -> &[f64] {
        &self.filters
    }

    pub fn filter_bias(&self) -> &[f64] {
        &self.filter_bias
    }

    pub fn dense_w(&self) -> &[f64] {
        &self.dense_w
    }

    pub fn dense_b(&self) -> &[f64] {
        &self.dense_b
    }

    fn check_doc(&self, doc: &TokenizedDoc) -> Result<()> {
        if doc.true_length == 0 || doc.token_ids.is_empty() {
            return Err(Error::Parameter(format!(
                "document for `{}` is empty",
                doc.business_id
            )));
        }
        let rows = self.embedding.num_rows() as u32;
        if let Some(&bad) = doc.token_ids.iter().find(|&&t| t >= rows) {
            return Err(Error::Contract(format!(
                "document for `{}` references row {bad}, table has {rows}",
                doc.business_id
            )));
        }
        Ok(())
    }

    /// Full forward pass returning the prediction and the activations needed
    /// for [`CnnModel::backward`].
    pub fn forward(&self, doc: &TokenizedDoc) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_doc(doc)?;
        let cfg = &self.config;
        let n = doc.token_ids.len();
        let span = cfg.window * cfg.embed_dim;

        let mut pooled = vec![0.0f64; cfg.num_filters];
        let mut argmax = vec![0usize; cfg.num_filters];
        let mut pre_at_max = vec![0.0f64; cfg.num_filters];
        for f in 0..cfg.num_filters {
            let filter = &self.filters[f * span..(f + 1) * span];
            let mut best = f64::NEG_INFINITY;
            let mut best_t = 0usize;
            let mut best_pre = 0.0f64;
            for t in 0..n {
                let mut pre = self.filter_bias[f];
                for w in 0..cfg.window {
                    let r = t + w;
                    if r >= n {
                        break; // virtual zero rows contribute nothing
                    }
                    let row = self.embedding.row(doc.token_ids[r]);
                    let fw = &filter[w * cfg.embed_dim..(w + 1) * cfg.embed_dim];
                    for e in 0..cfg.embed_dim {
                        pre += row[e] * fw[e];
                    }
                }
                let c = if pre > 0.0 { pre } else { 0.0 };
                if c > best {
                    best = c;
                    best_t = t;
                    best_pre = pre;
                }
            }
            pooled[f] = best;
            argmax[f] = best_t;
            pre_at_max[f] = best_pre;
        }

        let mut prediction = self.dense_b.clone();
        for (o, out) in prediction.iter_mut().enumerate() {
            let row = &self.dense_w[o * cfg.num_filters..(o + 1) * cfg.num_filters];
            for f in 0..cfg.num_filters {
                *out += row[f] * pooled[f];
            }
        }

        let cache = ForwardCache {
            version: self.version,
            token_ids: doc.token_ids.clone(),
            pooled,
            argmax,
            pre_at_max,
            prediction: prediction.clone(),
        };
        Ok((prediction, cache))
    }

    /// Prediction only.
    pub fn predict_factors(&self, doc: &TokenizedDoc) -> Result<Vec<f64>> {
        Ok(self.forward(doc)?.0)
    }

    /// Exact gradients of `(1/k) Σ_o (prediction_o - target_o)^2` with
    /// respect to every parameter and the embedding rows used by the
    /// document. The cache must come from a forward pass on this exact model
    /// state with this exact prediction.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        prediction: &[f64],
        target: &[f64],
    ) -> Result<CnnGradients> {
        let cfg = &self.config;
        if cache.version != self.version {
            return Err(Error::Contract(format!(
                "stale forward cache: model version {} vs cache version {}",
                self.version, cache.version
            )));
        }
        if prediction != cache.prediction.as_slice() {
            return Err(Error::Contract(
                "prediction does not match the cached forward output".into(),
            ));
        }
        if target.len() != cfg.output_dim {
            return Err(Error::Parameter(format!(
                "target length {} != output_dim {}",
                target.len(),
                cfg.output_dim
            )));
        }

        let k = cfg.output_dim as f64;
        let mut grads = CnnGradients::zeros(cfg);
        let n = cache.token_ids.len();
        let span = cfg.window * cfg.embed_dim;

        // dL/dprediction
        let gout: Vec<f64> = prediction
            .iter()
            .zip(target)
            .map(|(p, t)| 2.0 * (p - t) / k)
            .collect();

        // Dense layer.
        for o in 0..cfg.output_dim {
            grads.dense_b[o] = gout[o];
            for f in 0..cfg.num_filters {
                grads.dense_w[o * cfg.num_filters + f] = gout[o] * cache.pooled[f];
            }
        }

        // Through pooling and ReLU into filters and embeddings.
        for f in 0..cfg.num_filters {
            let mut g = 0.0;
            for o in 0..cfg.output_dim {
                g += gout[o] * self.dense_w[o * cfg.num_filters + f];
            }
            if cache.pre_at_max[f] <= 0.0 {
                continue; // ReLU derivative is 0 at and below 0
            }
            grads.filter_bias[f] = g;
            let t0 = cache.argmax[f];
            for w in 0..cfg.window {
                let r = t0 + w;
                if r >= n {
                    break;
                }
                let token = cache.token_ids[r];
                let row = self.embedding.row(token);
                let fw_grad = &mut grads.filters[f * span + w * cfg.embed_dim..];
                for e in 0..cfg.embed_dim {
                    fw_grad[e] += g * row[e];
                }
                if token != PAD_ROW {
                    let fw = &self.filters[f * span + w * cfg.embed_dim
                        ..f * span + (w + 1) * cfg.embed_dim];
                    let acc = grads
                        .embedding
                        .entry(token)
                        .or_insert_with(|| vec![0.0; cfg.embed_dim]);
                    for e in 0..cfg.embed_dim {
                        acc[e] += g * fw[e];
                    }
                }
            }
        }
        Ok(grads)
    }

    /// `parameters -= scale * gradients`. The padding row is left untouched.
    fn apply_update(&mut self, grads: &CnnGradients, scale: f64) {
        for (p, g) in self.filters.iter_mut().zip(&grads.filters) {
            *p -= scale * g;
        }
        for (p, g) in self.filter_bias.iter_mut().zip(&grads.filter_bias) {
            *p -= scale * g;
        }
        for (p, g) in self.dense_w.iter_mut().zip(&grads.dense_w) {
            *p -= scale * g;
        }
        for (p, g) in self.dense_b.iter_mut().zip(&grads.dense_b) {
            *p -= scale * g;
        }
        for (row, grad) in &grads.embedding {
            if *row == PAD_ROW {
                continue;
            }
            let target = self.embedding.row_mut(*row);
            for (p, g) in target.iter_mut().zip(grad) {
                *p -= scale * g;
            }
        }
        self.version += 1;
    }
}

/// One row of the training history. Epoch 0 is the pre-training state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
}

/// Training outcome: the best-validation snapshot plus the full history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Pooled RMSE over a set of documents: `sqrt(Σ_doc Σ_o (p-t)^2 / (n*k))`.
fn pooled_rmse(model: &CnnModel, docs: &[&TokenizedDoc], targets: &BTreeMap<String, Vec<f64>>) -> Result<f64> {
    let k = model.config.output_dim;
    let mut sse = 0.0;
    for doc in docs {
        let prediction = model.predict_factors(doc)?;
        let target = &targets[&doc.business_id];
        for o in 0..k {
            let d = prediction[o] - target[o];
            sse += d * d;
        }
    }
    Ok((sse / (docs.len() * k) as f64).sqrt())
}

/// Train the network with plain minibatch SGD.
///
/// The validation set is the last `validation_frac` of a seed-shuffled copy
/// of `docs` (at least one document, fixed before training). Every epoch
/// shuffles the training documents, walks them in minibatches of
/// `batch_size` (final partial batch kept) and applies one update per batch.
/// After each epoch the pooled train and validation RMSE are recorded; the
/// returned model is the snapshot with the lowest validation RMSE
/// (earliest epoch on ties). Deterministic given the seed.
pub fn train_cnn(
    embedding: EmbeddingTable,
    docs: &[TokenizedDoc],
    targets: &BTreeMap<String, Vec<f64>>,
    config: &CnnConfig,
) -> Result<(CnnModel, TrainReport)> {
    config.validate()?;
    if docs.len() < 2 {
        return Err(Error::Parameter("need at least 2 documents to train".into()));
    }
    let missing: BTreeSet<&str> = docs
        .iter()
        .map(|d| d.business_id.as_str())
        .filter(|id| !targets.contains_key(*id))
        .collect();
    if !missing.is_empty() {
        let list: Vec<&str> = missing.into_iter().collect();
        return Err(Error::Parameter(format!(
            "documents without targets: {}",
            list.join(", ")
        )));
    }
    for (id, t) in targets {
        if t.len() != config.output_dim {
            return Err(Error::Parameter(format!(
                "target for `{id}` has length {}, expected {}",
                t.len(),
                config.output_dim
            )));
        }
    }

    // Fixed validation split: last chunk of a seed-shuffled document list.
    let mut order: Vec<usize> = (0..docs.len()).collect();
    {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(config.seed, SPLIT_STREAM));
        order.shuffle(&mut rng);
    }
    let mut n_val = ((docs.len() as f64) * config.validation_frac).floor() as usize;
    n_val = n_val.clamp(1, docs.len() - 1);
    let (train_idx, val_idx) = order.split_at(docs.len() - n_val);
    let train_docs: Vec<&TokenizedDoc> = train_idx.iter().map(|&i| &docs[i]).collect();
    let val_docs: Vec<&TokenizedDoc> = val_idx.iter().map(|&i| &docs[i]).collect();

    let mut model = CnnModel::init(config, embedding)?;
    let mut history = Vec::with_capacity(config.max_epochs + 1);
    let initial = EpochStats {
        epoch: 0,
        train_rmse: pooled_rmse(&model, &train_docs, targets)?,
        val_rmse: pooled_rmse(&model, &val_docs, targets)?,
    };
    history.push(initial);
    let mut best_epoch = 0usize;
    let mut best_val = initial.val_rmse;
    let mut best_model = model.clone();

    let mut batch_order: Vec<usize> = (0..train_docs.len()).collect();
    for epoch in 1..=config.max_epochs {
        {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
                config.seed,
                EPOCH_STREAM_BASE + epoch as u64,
            ));
            batch_order.shuffle(&mut rng);
        }
        for batch in batch_order.chunks(config.batch_size) {
            let mut acc = CnnGradients::zeros(config);
            let mut batch_sse = 0.0;
            for &di in batch {
                let doc = train_docs[di];
                let (prediction, cache) = model.forward(doc)?;
                let target = &targets[&doc.business_id];
                let sample: f64 = prediction
                    .iter()
                    .zip(target)
                    .map(|(p, t)| (p - t) * (p - t))
                    .sum();
                batch_sse += sample;
                let grads = model.backward(&cache, &prediction, target)?;
                acc.accumulate(&grads, config.embed_dim);
            }
            if !batch_sse.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "non-finite batch loss".into(),
                });
            }
            model.apply_update(&acc, config.learning_rate / batch.len() as f64);
        }

        let stats = EpochStats {
            epoch,
            train_rmse: pooled_rmse(&model, &train_docs, targets)?,
            val_rmse: pooled_rmse(&model, &val_docs, targets)?,
        };
        if !stats.train_rmse.is_finite() || !stats.val_rmse.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: "non-finite epoch RMSE".into(),
            });
        }
        history.push(stats);
        if stats.val_rmse < best_val {
            best_val = stats.val_rmse;
            best_epoch = epoch;
            best_model = model.clone();
        }
    }

    Ok((
        best_model,
        TrainReport {
            best_epoch,
            history,
        },
    ))
}

/// Write the history as CSV with header `epoch,train_rmse,val_rmse`.
pub fn write_history_csv(history: &[EpochStats], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["epoch", "train_rmse", "val_rmse"])
        .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
    for s in history {
        w.write_record([
            s.epoch.to_string(),
            s.train_rmse.to_string(),
            s.val_rmse.to_string(),
        ])
        .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const CNN_MAGIC: &[u8; 4] = b"CRCN";
const CNN_VERSION: u32 = 1;

impl CnnModel {
    /// Checkpoint: versioned header, config, embedding table, then filters,
    /// filter biases, dense weights and dense biases as 64-bit LE floats.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        binio::write_header(&mut w, CNN_MAGIC, CNN_VERSION)?;
        binio::write_u32(&mut w, self.config.embed_dim as u32)?;
        binio::write_u32(&mut w, self.config.num_filters as u32)?;
        binio::write_u32(&mut w, self.config.window as u32)?;
        binio::write_u32(&mut w, self.config.output_dim as u32)?;
        binio::write_f64(&mut w, self.config.learning_rate)?;
        binio::write_u64(&mut w, self.config.batch_size as u64)?;
        binio::write_u64(&mut w, self.config.max_epochs as u64)?;
        binio::write_f64(&mut w, self.config.validation_frac)?;
        binio::write_u64(&mut w, self.config.seed)?;
        crate::textprep::encode_table(&mut w, &self.embedding)?;
        binio::write_f64_slice(&mut w, &self.filters)?;
        binio::write_f64_slice(&mut w, &self.filter_bias)?;
        binio::write_f64_slice(&mut w, &self.dense_w)?;
        binio::write_f64_slice(&mut w, &self.dense_b)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<CnnModel> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        binio::expect_header(&mut r, CNN_MAGIC, CNN_VERSION)?;
        let config = CnnConfig {
            embed_dim: binio::read_u32(&mut r)? as usize,
            num_filters: binio::read_u32(&mut r)? as usize,
            window: binio::read_u32(&mut r)? as usize,
            output_dim: binio::read_u32(&mut r)? as usize,
            learning_rate: binio::read_f64(&mut r)?,
            batch_size: binio::read_u64(&mut r)? as usize,
            max_epochs: binio::read_u64(&mut r)? as usize,
            validation_frac: binio::read_f64(&mut r)?,
            seed: binio::read_u64(&mut r)?,
        };
        let embedding = crate::textprep::decode_table(&mut r)?;
        let span = config.num_filters * config.window * config.embed_dim;
        let filters = binio::read_f64_vec(&mut r, span)?;
        let filter_bias = binio::read_f64_vec(&mut r, config.num_filters)?;
        let dense_w = binio::read_f64_vec(&mut r, config.output_dim * config.num_filters)?;
        let dense_b = binio::read_f64_vec(&mut r, config.output_dim)?;
        CnnModel::with_parameters(&config, embedding, filters, filter_bias, dense_w, dense_b)
    }
}
