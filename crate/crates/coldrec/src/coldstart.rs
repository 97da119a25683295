//! Factor vectors for unseen businesses and the end-to-end rating of
//! cold-start test sets.
//!
//! A business with no usage history gets its factor vector from one of four
//! sources: the trained network, one of two random baselines drawn from the
//! trained factor bounds, or a full-data factorization (the upper bound).
//! Cold items carry zero item bias under every method except the upper
//! bound, whose items were part of the factorization.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::convnet::CnnModel;
use crate::corpus::ReviewSet;
use crate::error::{Error, Result};
use crate::svdpp::MfModel;
use crate::textprep::TokenizedDoc;
use crate::util::derive_seed;

/// Extrema of the trained item factor matrix, globally and per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorBounds {
    pub global_min: f64,
    pub global_max: f64,
    pub col_min: Vec<f64>,
    pub col_max: Vec<f64>,
}

impl FactorBounds {
    pub fn factors(&self) -> usize {
        self.col_min.len()
    }
}

/// Extrema over all trained item factor vectors of `model`.
pub fn compute_bounds(model: &MfModel) -> Result<FactorBounds> {
    if model.num_items() == 0 {
        return Err(Error::Parameter("model has no trained items".into()));
    }
    let k = model.factors();
    let mut bounds = FactorBounds {
        global_min: f64::INFINITY,
        global_max: f64::NEG_INFINITY,
        col_min: vec![f64::INFINITY; k],
        col_max: vec![f64::NEG_INFINITY; k],
    };
    let ids: Vec<&str> = model.item_ids().collect();
    for id in ids {
        let q = model.item_factors(id)?;
        for (j, &v) in q.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Contract(format!(
                    "non-finite factor for item `{id}`"
                )));
            }
            bounds.col_min[j] = bounds.col_min[j].min(v);
            bounds.col_max[j] = bounds.col_max[j].max(v);
            bounds.global_min = bounds.global_min.min(v);
            bounds.global_max = bounds.global_max.max(v);
        }
    }
    Ok(bounds)
}

/// Every component i.i.d. uniform over the global interval.
pub fn random1_factors(bounds: &FactorBounds, rng: &mut impl Rng) -> Vec<f64> {
    (0..bounds.factors())
        .map(|_| rng.random_range(bounds.global_min..=bounds.global_max))
        .collect()
}

/// Component `j` i.i.d. uniform over its own column interval.
pub fn random2_factors(bounds: &FactorBounds, rng: &mut impl Rng) -> Vec<f64> {
    (0..bounds.factors())
        .map(|j| rng.random_range(bounds.col_min[j]..=bounds.col_max[j]))
        .collect()
}

/// Where test-item factor vectors come from.
#[derive(Debug, Clone, Copy)]
pub enum FactorSource<'a> {
    /// Network prediction from the business description.
    Cnn(&'a CnnModel),
    /// Uniform draw over the global factor interval.
    Random1(&'a FactorBounds),
    /// Uniform draw over per-column factor intervals.
    Random2(&'a FactorBounds),
    /// Factors (and item bias) from a factorization that included the items.
    Oracle(&'a MfModel),
}

impl FactorSource<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            FactorSource::Cnn(_) => "cnn",
            FactorSource::Random1(_) => "random1",
            FactorSource::Random2(_) => "random2",
            FactorSource::Oracle(_) => "oracle",
        }
    }
}

/// Rate every review of `test`. Businesses are visited in ascending id order
/// and each business gets exactly one factor vector per call (random sources
/// draw once per business), so all reviews of a business share the factors.
/// User-side parameters come from `mf`. Returns (review position, predicted
/// rating) sorted by position.
pub fn rate_test_set(
    test: &ReviewSet,
    mf: &MfModel,
    source: &FactorSource<'_>,
    descriptions: &HashMap<String, TokenizedDoc>,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, f64)>> {
    let businesses = test.business_ids_sorted();

    // Fail fast, listing every unsatisfiable business.
    let mut missing: Vec<&str> = Vec::new();
    match source {
        FactorSource::Cnn(_) => {
            for b in &businesses {
                if !descriptions.contains_key(*b) {
                    missing.push(b);
                }
            }
            if !missing.is_empty() {
                return Err(Error::NotFound(format!(
                    "businesses without prepared descriptions: {}",
                    missing.join(", ")
                )));
            }
        }
        FactorSource::Oracle(full) => {
            for b in &businesses {
                if !full.contains_item(b) {
                    missing.push(b);
                }
            }
            if !missing.is_empty() {
                return Err(Error::NotFound(format!(
                    "businesses missing from the full-data factorization: {}",
                    missing.join(", ")
                )));
            }
        }
        FactorSource::Random1(_) | FactorSource::Random2(_) => {}
    }

    let mut out = Vec::with_capacity(test.len());
    for business in businesses {
        let (factors, bias) = match source {
            FactorSource::Cnn(model) => {
                let doc = &descriptions[business];
                (model.predict_factors(doc)?, 0.0)
            }
            FactorSource::Random1(bounds) => (random1_factors(bounds, rng), 0.0),
            FactorSource::Random2(bounds) => (random2_factors(bounds, rng), 0.0),
            FactorSource::Oracle(full) => (
                full.item_factors(business)?.to_vec(),
                full.item_bias(business).unwrap_or(0.0),
            ),
        };
        for &pos in test.business_reviews(business).unwrap_or(&[]) {
            let review = &test.reviews()[pos];
            let rating = mf.predict_rating(&review.user_id, &factors, bias);
            out.push((pos, rating));
        }
    }
    out.sort_unstable_by_key(|(pos, _)| *pos);
    Ok(out)
}

/// RMSE of a rated test set against the recorded stars.
pub fn rated_rmse(test: &ReviewSet, rated: &[(usize, f64)]) -> Result<f64> {
    if rated.is_empty() {
        return Err(Error::Parameter("no predictions to score".into()));
    }
    let mut sse = 0.0;
    for &(pos, predicted) in rated {
        let actual = test.reviews()[pos].stars;
        sse += (predicted - actual) * (predicted - actual);
    }
    Ok((sse / rated.len() as f64).sqrt())
}

/// Which random baseline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Random1,
    Random2,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Random1 => "random1",
            BaselineKind::Random2 => "random2",
        }
    }
}

/// Seed for trial `trial` derived from the master seed. Trials are
/// independent streams; results do not depend on execution interleaving.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    derive_seed(master_seed, 0x7472_6961_6c00_0000 ^ trial)
}

/// Mean and population variance of the RMSE over `n_runs` independent
/// seeded baseline draws on one test set. Bounds come from `mf`'s trained
/// item factors.
pub fn run_baseline_trials(
    test: &ReviewSet,
    mf: &MfModel,
    kind: BaselineKind,
    n_runs: usize,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if n_runs == 0 {
        return Err(Error::Parameter("n_runs must be >= 1".into()));
    }
    let bounds = compute_bounds(mf)?;
    let descriptions = HashMap::new();
    let mut scores = Vec::with_capacity(n_runs);
    for trial in 0..n_runs {
        let mut rng = ChaCha20Rng::seed_from_u64(trial_seed(master_seed, trial as u64));
        let source = match kind {
            BaselineKind::Random1 => FactorSource::Random1(&bounds),
            BaselineKind::Random2 => FactorSource::Random2(&bounds),
        };
        let rated = rate_test_set(test, mf, &source, &descriptions, &mut rng)?;
        scores.push(rated_rmse(test, &rated)?);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let variance = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
        / scores.len() as f64;
    Ok((mean, variance))
}

/// One baseline trial evaluated on both test sets with a single draw stream,
/// so the combined score reuses exactly the per-set draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTrial {
    pub sse1: f64,
    pub n1: usize,
    pub sse2: f64,
    pub n2: usize,
}

impl PairedTrial {
    pub fn rmse1(&self) -> f64 {
        (self.sse1 / self.n1 as f64).sqrt()
    }

    pub fn rmse2(&self) -> f64 {
        (self.sse2 / self.n2 as f64).sqrt()
    }

    pub fn rmse_combined(&self) -> f64 {
        ((self.sse1 + self.sse2) / (self.n1 + self.n2) as f64).sqrt()
    }
}

/// Run `n_runs` baseline trials over both test sets. Within a trial the two
/// sets share one RNG stream (test1 first), one draw per business.
pub fn run_baseline_trials_paired(
    test1: &ReviewSet,
    test2: &ReviewSet,
    mf: &MfModel,
    kind: BaselineKind,
    n_runs: usize,
    master_seed: u64,
) -> Result<Vec<PairedTrial>> {
    if n_runs == 0 {
        return Err(Error::Parameter("n_runs must be >= 1".into()));
    }
    let bounds = compute_bounds(mf)?;
    let descriptions = HashMap::new();
    let mut trials = Vec::with_capacity(n_runs);
    for trial in 0..n_runs {
        let mut rng = ChaCha20Rng::seed_from_u64(trial_seed(master_seed, trial as u64));
        let source = match kind {
            BaselineKind::Random1 => FactorSource::Random1(&bounds),
            BaselineKind::Random2 => FactorSource::Random2(&bounds),
        };
        let rated1 = rate_test_set(test1, mf, &source, &descriptions, &mut rng)?;
        let rated2 = rate_test_set(test2, mf, &source, &descriptions, &mut rng)?;
        let sse = |test: &ReviewSet, rated: &[(usize, f64)]| {
            rated
                .iter()
                .map(|&(pos, p)| {
                    let a = test.reviews()[pos].stars;
                    (p - a) * (p - a)
                })
                .sum::<f64>()
        };
        trials.push(PairedTrial {
            sse1: sse(test1, &rated1),
            n1: rated1.len(),
            sse2: sse(test2, &rated2),
            n2: rated2.len(),
        });
    }
    Ok(trials)
}
