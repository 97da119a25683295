//! SVD++ latent-factor model trained with stochastic gradient descent.
//!
//! Rating rule: `r̂(u,i) = μ + b_u + b_i + q_i · (p_u + |N(u)|^{-1/2} Σ_{j∈N(u)} y_j)`
//! where `N(u)` is the set of items user `u` rated in training. One epoch
//! visits every (user, item, rating) sample once in a seeded shuffle order
//! ([`epoch_permutation`]); for each sample, with the error `e` computed from
//! the pre-update parameters:
//!
//! ```text
//! b_u += lr * (e - reg * b_u)
//! b_i += lr * (e - reg * b_i)
//! q_i += lr * (e * (p_u + |N(u)|^{-1/2} Σ y_j) - reg * q_i)
//! p_u += lr * (e * q_i_old - reg * p_u)
//! y_j += lr * (e * |N(u)|^{-1/2} * q_i_old - reg * y_j)   for each j in N(u)
//! ```
//!
//! After every epoch the full-pass training RMSE is measured. If it rose
//! relative to the previous epoch, the epoch is rolled back, the learning
//! rate halved and the epoch re-run (up to [`MAX_HALVINGS`] times, after
//! which the previous parameters are kept). The recorded per-epoch RMSE
//! sequence is therefore non-increasing, and training is fully deterministic
//! given (seed, hyperparameters, input order).

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::binio;
use crate::corpus::ReviewSet;
use crate::error::{Error, Result};
use crate::util::derive_seed;

/// Ratings are clamped to this range at evaluation time.
pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 5.0;

/// Learning-rate halvings attempted per epoch before giving up and keeping
/// the previous parameters.
pub const MAX_HALVINGS: usize = 20;

const INIT_STREAM: u64 = 1;
const EPOCH_STREAM_BASE: u64 = 1000;

/// SVD++ hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfHyper {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Factor vectors initialize uniformly in [-init_scale, init_scale];
    /// biases start at zero.
    pub init_scale: f64,
}

impl Default for MfHyper {
    fn default() -> Self {
        Self {
            factors: 20,
            learning_rate: 0.007,
            regularization: 0.02,
            epochs: 30,
            seed: 42,
            init_scale: 0.1,
        }
    }
}

impl MfHyper {
    fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::Parameter("factors must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Parameter("learning_rate must be > 0".into()));
        }
        if self.regularization < 0.0 {
            return Err(Error::Parameter("regularization must be >= 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be >= 1".into()));
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::Parameter("init_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// One (user, item, rating) training sample after de-duplication.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    user: u32,
    item: u32,
    rating: f64,
}

/// Trained SVD++ parameters. Immutable after training; safe to share across
/// threads for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct MfModel {
    hyper: MfHyper,
    global_mean: f64,
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,     // n_users * k
    item_factors: Vec<f64>,     // n_items * k  (q_i)
    implicit_factors: Vec<f64>, // n_items * k  (y_j)
    rated_items: Vec<Vec<u32>>, // N(u), ascending item index
    train_rmse: Option<f64>,
}

/// Per-epoch training trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MfHistory {
    /// Full-pass training RMSE at initialization, before any update.
    pub initial_rmse: f64,
    /// Full-pass training RMSE after each accepted epoch (non-increasing).
    pub epoch_rmse: Vec<f64>,
    /// Learning rate in effect for each accepted epoch.
    pub learning_rates: Vec<f64>,
}

/// Explicit user parameters for [`MfModel::from_parts`].
#[derive(Debug, Clone, PartialEq)]
pub struct UserParams {
    pub id: String,
    pub bias: f64,
    pub factors: Vec<f64>,
    /// Item ids this user rated (defines the implicit-feedback set).
    pub rated: Vec<String>,
}

/// Explicit item parameters for [`MfModel::from_parts`].
#[derive(Debug, Clone, PartialEq)]
pub struct ItemParams {
    pub id: String,
    pub bias: f64,
    pub factors: Vec<f64>,
    pub implicit: Vec<f64>,
}

/// Deterministic visiting order for one epoch: a seeded Fisher-Yates shuffle
/// of `0..len`, independent per (seed, epoch) pair.
pub fn epoch_permutation(seed: u64, epoch: usize, len: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, EPOCH_STREAM_BASE + epoch as u64));
    order.shuffle(&mut rng);
    order
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// De-duplicate (user, item) pairs keeping the latest-dated review (ties:
/// last occurrence), then intern ids in first-appearance order.
fn build_training(ratings: &ReviewSet) -> (Vec<String>, Vec<String>, Vec<Sample>) {
    let mut users: Vec<String> = Vec::new();
    let mut items: Vec<String> = Vec::new();
    let mut user_index: HashMap<String, u32> = HashMap::new();
    let mut item_index: HashMap<String, u32> = HashMap::new();
    // (user, item) -> kept review position
    let mut kept: HashMap<(u32, u32), usize> = HashMap::new();

    for (pos, review) in ratings.reviews().iter().enumerate() {
        let u = match user_index.get(review.user_id.as_str()) {
            Some(&u) => u,
            None => {
                let u = users.len() as u32;
                users.push(review.user_id.clone());
                user_index.insert(review.user_id.clone(), u);
                u
            }
        };
        let i = match item_index.get(review.business_id.as_str()) {
            Some(&i) => i,
            None => {
                let i = items.len() as u32;
                items.push(review.business_id.clone());
                item_index.insert(review.business_id.clone(), i);
                i
            }
        };
        let entry = kept.entry((u, i)).or_insert(pos);
        if ratings.reviews()[*entry].date <= review.date {
            *entry = pos;
        }
    }

    let mut positions: Vec<usize> = kept.values().copied().collect();
    positions.sort_unstable();
    let samples = positions
        .into_iter()
        .map(|pos| {
            let r = &ratings.reviews()[pos];
            Sample {
                user: user_index[r.user_id.as_str()],
                item: item_index[r.business_id.as_str()],
                rating: r.stars,
            }
        })
        .collect();
    (users, items, samples)
}

struct ParamSnapshot {
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    implicit_factors: Vec<f64>,
}

impl Clone for ParamSnapshot {
    fn clone(&self) -> Self {
        Self {
            user_bias: self.user_bias.clone(),
            item_bias: self.item_bias.clone(),
            user_factors: self.user_factors.clone(),
            item_factors: self.item_factors.clone(),
            implicit_factors: self.implicit_factors.clone(),
        }
    }
}

impl MfModel {
    /// Seeded pre-training state: factors uniform in [-init_scale, init_scale],
    /// biases zero, global mean set to the mean training rating.
    pub fn init(ratings: &ReviewSet, hyper: &MfHyper) -> Result<MfModel> {
        let (model, _) = Self::init_with_samples(ratings, hyper)?;
        Ok(model)
    }

    fn init_with_samples(ratings: &ReviewSet, hyper: &MfHyper) -> Result<(MfModel, Vec<Sample>)> {
        hyper.validate()?;
        if ratings.is_empty() {
            return Err(Error::Parameter(
                "cannot train on an empty review set".into(),
            ));
        }
        let (users, items, samples) = build_training(ratings);
        let k = hyper.factors;
        let n_users = users.len();
        let n_items = items.len();

        let global_mean = samples.iter().map(|s| s.rating).sum::<f64>() / samples.len() as f64;

        let mut rated: Vec<Vec<u32>> = vec![Vec::new(); n_users];
        for s in &samples {
            rated[s.user as usize].push(s.item);
        }
        for set in &mut rated {
            set.sort_unstable();
        }

        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(hyper.seed, INIT_STREAM));
        let s = hyper.init_scale;
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-s..=s)).collect()
        };
        let user_factors = draw(n_users * k);
        let item_factors = draw(n_items * k);
        let implicit_factors = draw(n_items * k);

        let user_index = users
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let item_index = items
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();

        let model = MfModel {
            hyper: hyper.clone(),
            global_mean,
            users,
            items,
            user_index,
            item_index,
            user_bias: vec![0.0; n_users],
            item_bias: vec![0.0; n_items],
            user_factors,
            item_factors,
            implicit_factors,
            rated_items: rated,
            train_rmse: None,
        };
        Ok((model, samples))
    }

    /// Assemble a model from explicit parameters (fixtures, imports).
    pub fn from_parts(
        factors: usize,
        global_mean: f64,
        users: Vec<UserParams>,
        items: Vec<ItemParams>,
    ) -> Result<MfModel> {
        if factors == 0 {
            return Err(Error::Parameter("factors must be >= 1".into()));
        }
        let item_index: HashMap<String, u32> = items
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i as u32))
            .collect();
        let mut model = MfModel {
            hyper: MfHyper {
                factors,
                ..MfHyper::default()
            },
            global_mean,
            users: Vec::new(),
            items: Vec::new(),
            user_index: HashMap::new(),
            item_index,
            user_bias: Vec::new(),
            item_bias: Vec::new(),
            user_factors: Vec::new(),
            item_factors: Vec::new(),
            implicit_factors: Vec::new(),
            rated_items: Vec::new(),
            train_rmse: None,
        };
        for u in users {
            if u.factors.len() != factors {
                return Err(Error::Parameter(format!(
                    "user `{}` factor vector has length {}, expected {factors}",
                    u.id,
                    u.factors.len()
                )));
            }
            let mut rated: Vec<u32> = Vec::with_capacity(u.rated.len());
            for item in &u.rated {
                let idx = model.item_index.get(item).ok_or_else(|| {
                    Error::Parameter(format!("user `{}` rated unknown item `{item}`", u.id))
                })?;
                rated.push(*idx);
            }
            rated.sort_unstable();
            rated.dedup();
            model
                .user_index
                .insert(u.id.clone(), model.users.len() as u32);
            model.users.push(u.id);
            model.user_bias.push(u.bias);
            model.user_factors.extend_from_slice(&u.factors);
            model.rated_items.push(rated);
        }
        for i in items {
            if i.factors.len() != factors || i.implicit.len() != factors {
                return Err(Error::Parameter(format!(
                    "item `{}` vectors must have length {factors}",
                    i.id
                )));
            }
            model.items.push(i.id);
            model.item_bias.push(i.bias);
            model.item_factors.extend_from_slice(&i.factors);
            model.implicit_factors.extend_from_slice(&i.implicit);
        }
        Ok(model)
    }

    pub fn factors(&self) -> usize {
        self.hyper.factors
    }

    pub fn hyper(&self) -> &MfHyper {
        &self.hyper
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    /// Training RMSE after the final accepted epoch (`None` before training).
    pub fn train_rmse(&self) -> Option<f64> {
        self.train_rmse
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Item ids in internal index order.
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|s| s.as_str())
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.users.iter().map(|s| s.as_str())
    }

    pub fn user_bias(&self, user_id: &str) -> Option<f64> {
        self.user_index
            .get(user_id)
            .map(|&u| self.user_bias[u as usize])
    }

    pub fn item_bias(&self, item_id: &str) -> Option<f64> {
        self.item_index
            .get(item_id)
            .map(|&i| self.item_bias[i as usize])
    }

    pub fn contains_item(&self, item_id: &str) -> bool {
        self.item_index.contains_key(item_id)
    }

    /// The trained item factor vector `q_i`, returned as stored.
    pub fn item_factors(&self, item_id: &str) -> Result<&[f64]> {
        let i = self
            .item_index
            .get(item_id)
            .ok_or_else(|| Error::NotFound(format!("item `{item_id}` not in model")))?;
        let k = self.hyper.factors;
        let start = *i as usize * k;
        Ok(&self.item_factors[start..start + k])
    }

    pub fn user_factors(&self, user_id: &str) -> Option<&[f64]> {
        let k = self.hyper.factors;
        self.user_index
            .get(user_id)
            .map(|&u| &self.user_factors[u as usize * k..(u as usize + 1) * k])
    }

    pub fn implicit_factors(&self, item_id: &str) -> Option<&[f64]> {
        let k = self.hyper.factors;
        self.item_index
            .get(item_id)
            .map(|&i| &self.implicit_factors[i as usize * k..(i as usize + 1) * k])
    }

    /// `p_u + |N(u)|^{-1/2} Σ_{j∈N(u)} y_j` for an interned user index.
    fn user_vector(&self, u: usize) -> Vec<f64> {
        let k = self.hyper.factors;
        let mut v = self.user_factors[u * k..(u + 1) * k].to_vec();
        let rated = &self.rated_items[u];
        if !rated.is_empty() {
            let norm = 1.0 / (rated.len() as f64).sqrt();
            for &j in rated {
                let y = &self.implicit_factors[j as usize * k..(j as usize + 1) * k];
                for (vf, yf) in v.iter_mut().zip(y) {
                    *vf += norm * yf;
                }
            }
        }
        v
    }

    /// Predicted rating clamped to [[`RATING_MIN`], [`RATING_MAX`]]. Unknown
    /// users fall back to `μ + b_i`.
    pub fn predict_rating(&self, user_id: &str, item_factors: &[f64], item_bias: f64) -> f64 {
        self.predict_rating_raw(user_id, item_factors, item_bias)
            .clamp(RATING_MIN, RATING_MAX)
    }

    /// Unclamped prediction.
    pub fn predict_rating_raw(&self, user_id: &str, item_factors: &[f64], item_bias: f64) -> f64 {
        assert_eq!(
            item_factors.len(),
            self.hyper.factors,
            "item factor vector length mismatch"
        );
        match self.user_index.get(user_id) {
            Some(&u) => {
                let u = u as usize;
                self.global_mean
                    + self.user_bias[u]
                    + item_bias
                    + dot(item_factors, &self.user_vector(u))
            }
            None => self.global_mean + item_bias,
        }
    }

    fn params_snapshot(&self) -> ParamSnapshot {
        ParamSnapshot {
            user_bias: self.user_bias.clone(),
            item_bias: self.item_bias.clone(),
            user_factors: self.user_factors.clone(),
            item_factors: self.item_factors.clone(),
            implicit_factors: self.implicit_factors.clone(),
        }
    }

    fn restore(&mut self, snapshot: ParamSnapshot) {
        self.user_bias = snapshot.user_bias;
        self.item_bias = snapshot.item_bias;
        self.user_factors = snapshot.user_factors;
        self.item_factors = snapshot.item_factors;
        self.implicit_factors = snapshot.implicit_factors;
    }

    fn params_finite(&self) -> bool {
        self.user_bias.iter().all(|v| v.is_finite())
            && self.item_bias.iter().all(|v| v.is_finite())
            && self.user_factors.iter().all(|v| v.is_finite())
            && self.item_factors.iter().all(|v| v.is_finite())
            && self.implicit_factors.iter().all(|v| v.is_finite())
    }

    /// One SGD pass over `samples` in the given visiting order.
    fn run_epoch(&mut self, samples: &[Sample], order: &[usize], lr: f64, reg: f64) {
        let k = self.hyper.factors;
        let mut sum_y = vec![0.0f64; k];
        let mut q_old = vec![0.0f64; k];
        for &idx in order {
            let s = samples[idx];
            let u = s.user as usize;
            let i = s.item as usize;
            let rated = &self.rated_items[u];
            let norm = 1.0 / (rated.len() as f64).sqrt();

            sum_y.iter_mut().for_each(|v| *v = 0.0);
            for &j in rated {
                let y = &self.implicit_factors[j as usize * k..(j as usize + 1) * k];
                for (acc, yf) in sum_y.iter_mut().zip(y) {
                    *acc += yf;
                }
            }
            sum_y.iter_mut().for_each(|v| *v *= norm);

            let p = &self.user_factors[u * k..(u + 1) * k];
            let q = &self.item_factors[i * k..(i + 1) * k];
            q_old.copy_from_slice(q);

            let mut pred = self.global_mean + self.user_bias[u] + self.item_bias[i];
            for f in 0..k {
                pred += q[f] * (p[f] + sum_y[f]);
            }
            let err = s.rating - pred;

            self.user_bias[u] += lr * (err - reg * self.user_bias[u]);
            self.item_bias[i] += lr * (err - reg * self.item_bias[i]);

            for f in 0..k {
                let pf = self.user_factors[u * k + f];
                self.item_factors[i * k + f] +=
                    lr * (err * (pf + sum_y[f]) - reg * self.item_factors[i * k + f]);
                self.user_factors[u * k + f] += lr * (err * q_old[f] - reg * pf);
            }
            for &j in &self.rated_items[u] {
                let j = j as usize;
                for f in 0..k {
                    let yf = self.implicit_factors[j * k + f];
                    self.implicit_factors[j * k + f] += lr * (err * norm * q_old[f] - reg * yf);
                }
            }
        }
    }

    /// Full-pass unclamped training RMSE, accumulated per user in index order.
    fn full_train_rmse(&self, samples_by_user: &[Vec<usize>], samples: &[Sample]) -> f64 {
        let k = self.hyper.factors;
        let mut sse = 0.0;
        let mut n = 0usize;
        for (u, positions) in samples_by_user.iter().enumerate() {
            if positions.is_empty() {
                continue;
            }
            let uvec = self.user_vector(u);
            for &pos in positions {
                let s = samples[pos];
                let i = s.item as usize;
                let q = &self.item_factors[i * k..(i + 1) * k];
                let pred = self.global_mean + self.user_bias[u] + self.item_bias[i] + dot(q, &uvec);
                let e = s.rating - pred;
                sse += e * e;
                n += 1;
            }
        }
        (sse / n as f64).sqrt()
    }
}

/// Train SVD++ on a rating set. Duplicate (user, item) pairs keep the
/// latest-dated review. Deterministic given (seed, hyper, input order).
pub fn train_mf(ratings: &ReviewSet, hyper: &MfHyper) -> Result<(MfModel, MfHistory)> {
    let (mut model, samples) = MfModel::init_with_samples(ratings, hyper)?;
    let mut samples_by_user: Vec<Vec<usize>> = vec![Vec::new(); model.users.len()];
    for (pos, s) in samples.iter().enumerate() {
        samples_by_user[s.user as usize].push(pos);
    }

    let mut history = MfHistory {
        initial_rmse: model.full_train_rmse(&samples_by_user, &samples),
        ..MfHistory::default()
    };
    let mut prev_rmse = history.initial_rmse;
    let mut lr = hyper.learning_rate;

    for epoch in 1..=hyper.epochs {
        let order = epoch_permutation(hyper.seed, epoch, samples.len());
        let snapshot = model.params_snapshot();
        let mut halvings = 0usize;
        loop {
            model.run_epoch(&samples, &order, lr, hyper.regularization);
            if !model.params_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "non-finite parameter after SGD pass".into(),
                });
            }
            let rmse = model.full_train_rmse(&samples_by_user, &samples);
            if !rmse.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!("non-finite training RMSE {rmse}"),
                });
            }
            if rmse <= prev_rmse {
                prev_rmse = rmse;
                break;
            }
            if halvings >= MAX_HALVINGS {
                // Keep the previous parameters; the epoch becomes a no-op.
                model.restore(snapshot);
                break;
            }
            model.restore(snapshot.clone());
            lr /= 2.0;
            halvings += 1;
        }
        history.epoch_rmse.push(prev_rmse);
        history.learning_rates.push(lr);
    }

    model.train_rmse = Some(prev_rmse);
    Ok((model, history))
}

/// RMSE of clamped predictions over a review set whose businesses all have
/// trained factors (the usage-data upper bound when the model was fit on
/// data that includes the evaluated items).
pub fn mf_rmse(model: &MfModel, ratings: &ReviewSet) -> Result<f64> {
    if ratings.is_empty() {
        return Err(Error::Parameter(
            "cannot evaluate an empty review set".into(),
        ));
    }
    let missing: BTreeSet<&str> = ratings
        .reviews()
        .iter()
        .map(|r| r.business_id.as_str())
        .filter(|id| !model.contains_item(id))
        .collect();
    if !missing.is_empty() {
        let list: Vec<&str> = missing.into_iter().collect();
        return Err(Error::NotFound(format!(
            "items without trained factors: {}",
            list.join(", ")
        )));
    }
    let mut sse = 0.0;
    for r in ratings.reviews() {
        let q = model.item_factors(&r.business_id)?;
        let b = model.item_bias(&r.business_id).unwrap_or(0.0);
        let pred = model.predict_rating(&r.user_id, q, b);
        sse += (pred - r.stars) * (pred - r.stars);
    }
    Ok((sse / ratings.len() as f64).sqrt())
}

const MF_MAGIC: &[u8; 4] = b"CRMF";
const MF_VERSION: u32 = 1;

impl MfModel {
    /// Write the checkpoint: versioned header, hyperparameters, then all
    /// parameter tables in index order (ids, biases, user factors, item
    /// factors, implicit factors, rated-item lists), floats as 64-bit LE.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        binio::write_header(&mut w, MF_MAGIC, MF_VERSION)?;
        binio::write_u32(&mut w, self.hyper.factors as u32)?;
        binio::write_f64(&mut w, self.hyper.learning_rate)?;
        binio::write_f64(&mut w, self.hyper.regularization)?;
        binio::write_u64(&mut w, self.hyper.epochs as u64)?;
        binio::write_u64(&mut w, self.hyper.seed)?;
        binio::write_f64(&mut w, self.hyper.init_scale)?;
        binio::write_f64(&mut w, self.global_mean)?;
        binio::write_f64(&mut w, self.train_rmse.unwrap_or(f64::NAN))?;
        binio::write_u64(&mut w, self.users.len() as u64)?;
        binio::write_u64(&mut w, self.items.len() as u64)?;
        for id in &self.users {
            binio::write_string(&mut w, id)?;
        }
        for id in &self.items {
            binio::write_string(&mut w, id)?;
        }
        binio::write_f64_slice(&mut w, &self.user_bias)?;
        binio::write_f64_slice(&mut w, &self.item_bias)?;
        binio::write_f64_slice(&mut w, &self.user_factors)?;
        binio::write_f64_slice(&mut w, &self.item_factors)?;
        binio::write_f64_slice(&mut w, &self.implicit_factors)?;
        for rated in &self.rated_items {
            binio::write_u32(&mut w, rated.len() as u32)?;
            for j in rated {
                binio::write_u32(&mut w, *j)?;
            }
        }
        use std::io::Write;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<MfModel> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        binio::expect_header(&mut r, MF_MAGIC, MF_VERSION)?;
        let factors = binio::read_u32(&mut r)? as usize;
        let hyper = MfHyper {
            factors,
            learning_rate: binio::read_f64(&mut r)?,
            regularization: binio::read_f64(&mut r)?,
            epochs: binio::read_u64(&mut r)? as usize,
            seed: binio::read_u64(&mut r)?,
            init_scale: binio::read_f64(&mut r)?,
        };
        let global_mean = binio::read_f64(&mut r)?;
        let train_rmse_raw = binio::read_f64(&mut r)?;
        let train_rmse = (!train_rmse_raw.is_nan()).then_some(train_rmse_raw);
        let n_users = binio::read_u64(&mut r)? as usize;
        let n_items = binio::read_u64(&mut r)? as usize;
        let mut users = Vec::with_capacity(n_users);
        for _ in 0..n_users {
            users.push(binio::read_string(&mut r)?);
        }
        let mut items = Vec::with_capacity(n_items);
        for _ in 0..n_items {
            items.push(binio::read_string(&mut r)?);
        }
        let user_bias = binio::read_f64_vec(&mut r, n_users)?;
        let item_bias = binio::read_f64_vec(&mut r, n_items)?;
        let user_factors = binio::read_f64_vec(&mut r, n_users * factors)?;
        let item_factors = binio::read_f64_vec(&mut r, n_items * factors)?;
        let implicit_factors = binio::read_f64_vec(&mut r, n_items * factors)?;
        let mut rated_items = Vec::with_capacity(n_users);
        for _ in 0..n_users {
            let n = binio::read_u32(&mut r)? as usize;
            let mut rated = Vec::with_capacity(n);
            for _ in 0..n {
                rated.push(binio::read_u32(&mut r)?);
            }
            rated_items.push(rated);
        }
        let user_index = users
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let item_index = items
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(MfModel {
            hyper,
            global_mean,
            users,
            items,
            user_index,
            item_index,
            user_bias,
            item_bias,
            user_factors,
            item_factors,
            implicit_factors,
            rated_items,
            train_rmse,
        })
    }

    /// Human-inspectable JSON export of the full model.
    pub fn to_json(&self) -> serde_json::Value {
        let k = self.hyper.factors;
        let users: serde_json::Map<String, serde_json::Value> = self
            .users
            .iter()
            .enumerate()
            .map(|(u, id)| {
                let rated: Vec<&str> = self.rated_items[u]
                    .iter()
                    .map(|&j| self.items[j as usize].as_str())
                    .collect();
                (
                    id.clone(),
                    serde_json::json!({
                        "bias": self.user_bias[u],
                        "factors": self.user_factors[u * k..(u + 1) * k],
                        "rated": rated,
                    }),
                )
            })
            .collect();
        let items: serde_json::Map<String, serde_json::Value> = self
            .items
            .iter()
            .enumerate()
            .map(|(i, id)| {
                (
                    id.clone(),
                    serde_json::json!({
                        "bias": self.item_bias[i],
                        "factors": self.item_factors[i * k..(i + 1) * k],
                        "implicit": self.implicit_factors[i * k..(i + 1) * k],
                    }),
                )
            })
            .collect();
        serde_json::json!({
            "hyper": self.hyper,
            "global_mean": self.global_mean,
            "train_rmse": self.train_rmse,
            "users": users,
            "items": items,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Review;
    use chrono::NaiveDate;

    fn review(user: &str, business: &str, stars: f64, d: &str) -> Review {
        Review {
            user_id: user.into(),
            business_id: business.into(),
            stars,
            votes: 0,
            text: String::new(),
            date: NaiveDate::parse_from_str(d, "%Y-%m-%d").unwrap(),
        }
    }

    fn single_rating_set() -> ReviewSet {
        ReviewSet::from_reviews(vec![review("u1", "b1", 4.0, "2011-01-01")]).unwrap()
    }

    fn dense_3x3() -> ReviewSet {
        let mut reviews = Vec::new();
        let stars = [[5.0, 3.0, 1.0], [4.0, 2.0, 1.0], [5.0, 4.0, 2.0]];
        for (u, row) in stars.iter().enumerate() {
            for (i, &s) in row.iter().enumerate() {
                reviews.push(review(&format!("u{u}"), &format!("b{i}"), s, "2011-01-01"));
            }
        }
        ReviewSet::from_reviews(reviews).unwrap()
    }

    #[test]
    fn fits_single_point() {
        let hyper = MfHyper {
            factors: 1,
            learning_rate: 0.05,
            regularization: 0.0,
            epochs: 200,
            seed: 1,
            init_scale: 0.01,
        };
        let (model, history) = train_mf(&single_rating_set(), &hyper).unwrap();
        let q = model.item_factors("b1").unwrap().to_vec();
        let b = model.item_bias("b1").unwrap();
        let pred = model.predict_rating("u1", &q, b);
        assert!((pred - 4.0).abs() <= 0.01, "pred {pred}");
        for w in history.epoch_rmse.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn global_mean_matches_training_mean() {
        let set = dense_3x3();
        let model = MfModel::init(&set, &MfHyper::default()).unwrap();
        let expected = set.reviews().iter().map(|r| r.stars).sum::<f64>() / set.len() as f64;
        assert!((model.global_mean() - expected).abs() < 1e-9);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let set = dense_3x3();
        let hyper = MfHyper::default();
        let a = MfModel::init(&set, &hyper).unwrap();
        let b = MfModel::init(&set, &hyper).unwrap();
        assert_eq!(a, b);
        let c = MfModel::init(&set, &MfHyper { seed: 7, ..hyper }).unwrap();
        assert_ne!(a.item_factors("b0").unwrap(), c.item_factors("b0").unwrap());
        for v in a.item_factors("b0").unwrap() {
            assert!(v.abs() <= a.hyper().init_scale);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let set = dense_3x3();
        let hyper = MfHyper {
            factors: 4,
            epochs: 10,
            ..MfHyper::default()
        };
        let (m1, h1) = train_mf(&set, &hyper).unwrap();
        let (m2, h2) = train_mf(&set, &hyper).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn empty_set_is_a_parameter_error() {
        let empty = ReviewSet::default();
        assert!(matches!(
            train_mf(&empty, &MfHyper::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn duplicate_pair_keeps_latest_date() {
        let set = ReviewSet::from_reviews(vec![
            review("u1", "b1", 2.0, "2011-01-01"),
            review("u1", "b1", 5.0, "2011-06-01"),
            review("u2", "b1", 3.0, "2011-01-01"),
        ])
        .unwrap();
        let model = MfModel::init(&set, &MfHyper::default()).unwrap();
        // mean over deduped samples: (5 + 3) / 2
        assert!((model.global_mean() - 4.0).abs() < 1e-12);
    }

    fn zero_model(k: usize, mu: f64) -> MfModel {
        MfModel::from_parts(
            k,
            mu,
            vec![UserParams {
                id: "u1".into(),
                bias: 0.0,
                factors: vec![0.0; k],
                rated: vec!["i1".into()],
            }],
            vec![
                ItemParams {
                    id: "i1".into(),
                    bias: 0.0,
                    factors: vec![0.0; k],
                    implicit: vec![0.0; k],
                },
                ItemParams {
                    id: "i2".into(),
                    bias: 0.0,
                    factors: vec![0.0; k],
                    implicit: vec![0.0; k],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn predict_zero_factors_returns_mean() {
        let model = zero_model(2, 3.7);
        let q = model.item_factors("i1").unwrap().to_vec();
        assert_eq!(model.predict_rating("u1", &q, 0.0), 3.7);
        // Unknown users fall back to mu + item bias.
        assert_eq!(model.predict_rating("nobody", &q, 0.5), 4.2);
    }

    #[test]
    fn predict_clamps_to_rating_range() {
        let model = zero_model(1, 5.9);
        assert_eq!(model.predict_rating("u1", &[0.0], 0.0), 5.0);
        assert_eq!(model.predict_rating_raw("u1", &[0.0], 0.0), 5.9);
        assert_eq!(model.predict_rating("u1", &[0.0], -10.0), 1.0);
    }

    #[test]
    fn item_factors_unknown_item_errors() {
        let set = single_rating_set();
        let model = MfModel::init(&set, &MfHyper::default()).unwrap();
        assert!(matches!(model.item_factors("nope"), Err(Error::NotFound(_))));
        assert_eq!(model.item_factors("b1").unwrap().len(), 20);
    }

    #[test]
    fn mf_rmse_hand_fixture() {
        // Zero-parameter model with mu = 3: predictions are all 3.0, so
        // stars 4 and 5 give errors 1 and 2 -> sqrt((1 + 4) / 2).
        let model = zero_model(2, 3.0);
        let set = ReviewSet::from_reviews(vec![
            review("u1", "i1", 4.0, "2011-01-01"),
            review("u1", "i2", 5.0, "2011-01-02"),
        ])
        .unwrap();
        let rmse = mf_rmse(&model, &set).unwrap();
        assert!((rmse - 2.5f64.sqrt()).abs() < 1e-12);

        let missing =
            ReviewSet::from_reviews(vec![review("u1", "zzz", 4.0, "2011-01-01")]).unwrap();
        match mf_rmse(&model, &missing) {
            Err(Error::NotFound(msg)) => assert!(msg.contains("zzz")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mf_rmse_zero_for_exact_model() {
        let hyper = MfHyper {
            factors: 1,
            learning_rate: 0.05,
            regularization: 0.0,
            epochs: 300,
            seed: 3,
            init_scale: 0.01,
        };
        let set = single_rating_set();
        let (model, _) = train_mf(&set, &hyper).unwrap();
        assert!(mf_rmse(&model, &set).unwrap() < 0.01);
    }

    /// Central-difference check of the SGD update direction on a k=3 toy
    /// model. The single-sample objective is
    /// `e^2 + reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2 + sum_j |y_j|^2)`;
    /// one update step at unit learning rate must equal `-1/2` times its
    /// gradient.
    #[test]
    fn sgd_step_matches_finite_differences() {
        let set = ReviewSet::from_reviews(vec![
            review("u0", "b0", 4.0, "2011-01-01"),
            review("u0", "b1", 2.0, "2011-01-02"),
            review("u1", "b1", 5.0, "2011-01-03"),
        ])
        .unwrap();
        let hyper = MfHyper {
            factors: 3,
            learning_rate: 1.0,
            regularization: 0.3,
            epochs: 1,
            seed: 5,
            init_scale: 0.4,
        };
        let (model0, samples) = MfModel::init_with_samples(&set, &hyper).unwrap();
        let sample = samples[0];
        let reg = hyper.regularization;
        let k = 3usize;
        let u = sample.user as usize;
        let i = sample.item as usize;

        let loss = move |m: &MfModel| {
            let pred = m.global_mean
                + m.user_bias[u]
                + m.item_bias[i]
                + dot(&m.item_factors[i * k..(i + 1) * k], &m.user_vector(u));
            let e = sample.rating - pred;
            let mut l = e * e;
            l += reg * (m.user_bias[u] * m.user_bias[u] + m.item_bias[i] * m.item_bias[i]);
            let p = &m.user_factors[u * k..(u + 1) * k];
            l += reg * dot(p, p);
            let q = &m.item_factors[i * k..(i + 1) * k];
            l += reg * dot(q, q);
            for &j in &m.rated_items[u] {
                let j = j as usize;
                let y = &m.implicit_factors[j * k..(j + 1) * k];
                l += reg * dot(y, y);
            }
            l
        };

        let mut stepped = model0.clone();
        stepped.run_epoch(&samples[0..1], &[0], 1.0, reg);

        let h = 1e-6;
        let mut checked = 0usize;
        let mut check = |get: &dyn Fn(&MfModel) -> f64,
                         set_val: &dyn Fn(&mut MfModel, f64)| {
            let x0 = get(&model0);
            let mut plus = model0.clone();
            set_val(&mut plus, x0 + h);
            let mut minus = model0.clone();
            set_val(&mut minus, x0 - h);
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let analytic_step = get(&stepped) - x0; // lr = 1
            let expected = -0.5 * fd;
            let denom = expected.abs().max(1e-8);
            assert!(
                (analytic_step - expected).abs() / denom <= 1e-5,
                "step {analytic_step} vs -grad/2 {expected}"
            );
            checked += 1;
        };

        check(&move |m| m.user_bias[u], &move |m, v| m.user_bias[u] = v);
        check(&move |m| m.item_bias[i], &move |m, v| m.item_bias[i] = v);
        for f in 0..k {
            check(&move |m| m.user_factors[u * 3 + f], &move |m, v| {
                m.user_factors[u * 3 + f] = v
            });
            check(&move |m| m.item_factors[i * 3 + f], &move |m, v| {
                m.item_factors[i * 3 + f] = v
            });
        }
        for &j in &model0.rated_items[u] {
            let j = j as usize;
            for f in 0..k {
                check(&move |m| m.implicit_factors[j * 3 + f], &move |m, v| {
                    m.implicit_factors[j * 3 + f] = v
                });
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn checkpoint_round_trip() {
        let (model, _) = train_mf(
            &dense_3x3(),
            &MfHyper {
                factors: 4,
                epochs: 5,
                ..MfHyper::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mf.ck");
        model.save(&path).unwrap();
        let loaded = MfModel::load(&path).unwrap();
        assert_eq!(model, loaded);
        let json = model.to_json();
        assert_eq!(json["global_mean"].as_f64().unwrap(), model.global_mean());
    }
}
