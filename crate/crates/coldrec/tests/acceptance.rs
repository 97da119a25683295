//! Acceptance suite. Each test prints one `criterion <id>: PASS/FAIL` line.
//!
//! Criteria 1-8 are property checks that run at desk scale. Criteria 9-12
//! need the real review corpus (and the 300-d pretrained vectors); they skip
//! with a notice unless `COLDREC_YELP_REVIEWS` (and for 12,
//! `COLDREC_GLOVE`) point at the data files.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use coldrec::coldstart::{random1_factors, FactorBounds};
use coldrec::convnet::{CnnConfig, CnnModel};
use coldrec::corpus::{self, Review, ReviewSet, SplitParams};
use coldrec::eval::EvalReport;
use coldrec::pipeline::{self, Method, MfScope, PipelineConfig};
use coldrec::svdpp::{self, MfHyper};
use coldrec::textprep::{bounded_edit_distance, edit_distance, EmbeddingTable, TokenizedDoc};

fn check(id: &str, pass: bool, detail: String) {
    println!(
        "criterion {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn skip(id: &str, reason: &str) {
    println!("criterion {id}: SKIPPED ({reason})");
}

// ---------------------------------------------------------------------------
// 1. Edit distance agrees exactly with a naive full-matrix DP oracle.

fn naive_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        dp[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = dp[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }
    dp[a.len()][b.len()]
}

#[test]
fn criterion_1_edit_distance_oracle_equivalence() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let mut token = |max_len: usize| -> String {
        let len = rng.random_range(0..=max_len);
        (0..len)
            .map(|_| char::from(b'a' + rng.random_range(0..8u8)))
            .collect()
    };
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let a = token(12);
        let b = token(12);
        let expected = naive_edit_distance(&a, &b);
        if edit_distance(&a, &b) != expected {
            mismatches += 1;
        }
        let bounded = bounded_edit_distance(&a, &b, 2);
        let bounded_expected = (expected <= 2).then_some(expected);
        if bounded != bounded_expected {
            mismatches += 1;
        }
    }
    check(
        "1",
        mismatches == 0,
        format!("{mismatches} mismatches over 1000 random pairs, zero tolerance"),
    );
}

// ---------------------------------------------------------------------------
// 2. CNN gradients match central finite differences on a tiny net.

#[test]
fn criterion_2_cnn_gradient_check() {
    let cfg = CnnConfig {
        embed_dim: 3,
        num_filters: 2,
        window: 2,
        output_dim: 2,
        learning_rate: 0.01,
        batch_size: 4,
        max_epochs: 1,
        validation_frac: 0.25,
        seed: 1,
    };
    let table = EmbeddingTable::from_rows(
        3,
        vec![
            ("a".into(), vec![0.31, -0.64, 0.95]),
            ("b".into(), vec![-0.22, 0.87, 0.14]),
            ("c".into(), vec![0.73, 0.41, -0.58]),
        ],
    )
    .unwrap();
    let filters = vec![
        0.11, -0.32, 0.25, 0.44, 0.05, -0.17, -0.21, 0.13, 0.37, -0.08, 0.29, 0.16,
    ];
    let filter_bias = vec![0.03, -0.02];
    let dense_w = vec![0.6, -0.4, 0.2, 0.5];
    let dense_b = vec![0.01, -0.07];
    let doc = TokenizedDoc {
        business_id: "b".into(),
        token_ids: vec![1, 2, 3, 0],
        true_length: 3,
    };
    let target = vec![0.9, -0.3];

    let build = |f: &[f64], fb: &[f64], dw: &[f64], db: &[f64], t: EmbeddingTable| {
        CnnModel::with_parameters(&cfg, t, f.to_vec(), fb.to_vec(), dw.to_vec(), db.to_vec())
            .unwrap()
    };
    let sample_loss = |m: &CnnModel| {
        let p = m.predict_factors(&doc).unwrap();
        p.iter()
            .zip(&target)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / cfg.output_dim as f64
    };

    let model = build(&filters, &filter_bias, &dense_w, &dense_b, table.clone());
    let (out, cache) = model.forward(&doc).unwrap();
    let grads = model.backward(&cache, &out, &target).unwrap();

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut measure = |analytic: f64, fd: f64| {
        let rel = (analytic - fd).abs() / fd.abs().max(1e-8);
        worst = worst.max(rel);
    };

    for i in 0..filters.len() {
        let (mut plus, mut minus) = (filters.clone(), filters.clone());
        plus[i] += h;
        minus[i] -= h;
        let fd = (sample_loss(&build(&plus, &filter_bias, &dense_w, &dense_b, table.clone()))
            - sample_loss(&build(&minus, &filter_bias, &dense_w, &dense_b, table.clone())))
            / (2.0 * h);
        measure(grads.filters[i], fd);
    }
    for i in 0..filter_bias.len() {
        let (mut plus, mut minus) = (filter_bias.clone(), filter_bias.clone());
        plus[i] += h;
        minus[i] -= h;
        let fd = (sample_loss(&build(&filters, &plus, &dense_w, &dense_b, table.clone()))
            - sample_loss(&build(&filters, &minus, &dense_w, &dense_b, table.clone())))
            / (2.0 * h);
        measure(grads.filter_bias[i], fd);
    }
    for i in 0..dense_w.len() {
        let (mut plus, mut minus) = (dense_w.clone(), dense_w.clone());
        plus[i] += h;
        minus[i] -= h;
        let fd = (sample_loss(&build(&filters, &filter_bias, &plus, &dense_b, table.clone()))
            - sample_loss(&build(&filters, &filter_bias, &minus, &dense_b, table.clone())))
            / (2.0 * h);
        measure(grads.dense_w[i], fd);
    }
    for i in 0..dense_b.len() {
        let (mut plus, mut minus) = (dense_b.clone(), dense_b.clone());
        plus[i] += h;
        minus[i] -= h;
        let fd = (sample_loss(&build(&filters, &filter_bias, &dense_w, &plus, table.clone()))
            - sample_loss(&build(&filters, &filter_bias, &dense_w, &minus, table.clone())))
            / (2.0 * h);
        measure(grads.dense_b[i], fd);
    }
    for (&row, grad) in &grads.embedding {
        for e in 0..cfg.embed_dim {
            let eval = |delta: f64| {
                let mut t = table.clone();
                let mut rows: Vec<f64> = t.row(row).to_vec();
                rows[e] += delta;
                // Rebuild the table with the perturbed row.
                let mut entries = Vec::new();
                for token in ["a", "b", "c"] {
                    let r = t.lookup(token).unwrap();
                    let v = if r == row { rows.clone() } else { t.row(r).to_vec() };
                    entries.push((token.to_string(), v));
                }
                t = EmbeddingTable::from_rows(3, entries).unwrap();
                sample_loss(&build(&filters, &filter_bias, &dense_w, &dense_b, t))
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            measure(grad[e], fd);
        }
    }
    check(
        "2",
        worst <= 1e-4,
        format!("worst relative error {worst:.2e}, tolerance 1e-4, all parameter classes"),
    );
}

// ---------------------------------------------------------------------------
// 3. Shape contract: N tokens -> N x 50 conv positions -> 50 pooled -> 20 out.

#[test]
fn criterion_3_shape_contract() {
    let cfg = CnnConfig::default(); // 300-d embeddings, 50 filters, window 4, 20 outputs
    let table = EmbeddingTable::from_rows(
        300,
        vec![("w".into(), (0..300).map(|i| (i as f64) / 300.0 - 0.5).collect())],
    )
    .unwrap();
    let model = CnnModel::init(&cfg, table).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for n in [4usize, 17, 256] {
        let doc = TokenizedDoc {
            business_id: "b".into(),
            token_ids: vec![1; n],
            true_length: n,
        };
        let (out, cache) = model.forward(&doc).unwrap();
        let pooled_ok = cache.pooled().len() == 50;
        let out_ok = out.len() == 20;
        let positions_ok = cache.argmax().len() == 50 && cache.argmax().iter().all(|&t| t < n);
        ok &= pooled_ok && out_ok && positions_ok;
        detail.push_str(&format!("N={n}: pooled 50={pooled_ok} out 20={out_ok} positions<{n}={positions_ok}; "));
    }
    check("3", ok, detail.trim_end_matches("; ").to_string());
}

// ---------------------------------------------------------------------------
// 4. SVD++ on a noisy rank-3 matrix: held-in RMSE <= 0.15 within 30 epochs,
//    and per-epoch training loss matches a brute-force loop oracle to 1e-9.

fn rank3_ratings() -> ReviewSet {
    let mut rng = ChaCha20Rng::seed_from_u64(314);
    let normal = Normal::new(0.0, 0.1).unwrap();
    let users: Vec<[f64; 3]> = (0..50)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
        .collect();
    let items: Vec<[f64; 3]> = (0..40)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
        .collect();
    let mut reviews = Vec::new();
    for (u, uv) in users.iter().enumerate() {
        for (i, iv) in items.iter().enumerate() {
            let dot: f64 = (0..3).map(|d| uv[d] * iv[d]).sum();
            let stars = (3.0 + dot + normal.sample(&mut rng)).clamp(1.0, 5.0);
            reviews.push(Review {
                user_id: format!("u{u:02}"),
                business_id: format!("i{i:02}"),
                stars,
                votes: 0,
                text: String::new(),
                date: chrono::NaiveDate::from_ymd_opt(2012, 1, 1 + (u % 28) as u32).unwrap(),
            });
        }
    }
    ReviewSet::from_reviews(reviews).unwrap()
}

/// Brute-force SVD++ loop: same update equations, same seeded visiting
/// order, same halving-with-rollback schedule, written independently over
/// id-keyed tables.
struct LoopOracle {
    mu: f64,
    bu: HashMap<String, f64>,
    bi: HashMap<String, f64>,
    p: HashMap<String, Vec<f64>>,
    q: HashMap<String, Vec<f64>>,
    y: HashMap<String, Vec<f64>>,
    rated: HashMap<String, Vec<String>>, // user -> item ids, model index order
}

impl LoopOracle {
    fn predict(&self, user: &str, item: &str) -> f64 {
        let rated = &self.rated[user];
        let norm = 1.0 / (rated.len() as f64).sqrt();
        let k = self.p[user].len();
        let mut sum_y = vec![0.0; k];
        for j in rated {
            for (acc, v) in sum_y.iter_mut().zip(&self.y[j]) {
                *acc += v;
            }
        }
        for v in &mut sum_y {
            *v *= norm;
        }
        let mut pred = self.mu + self.bu[user] + self.bi[item];
        for f in 0..k {
            pred += self.q[item][f] * (self.p[user][f] + sum_y[f]);
        }
        pred
    }

    fn epoch(&mut self, samples: &[(String, String, f64)], order: &[usize], lr: f64, reg: f64) {
        for &idx in order {
            let (user, item, rating) = &samples[idx];
            let rated = self.rated[user].clone();
            let norm = 1.0 / (rated.len() as f64).sqrt();
            let k = self.p[user].len();
            let mut sum_y = vec![0.0; k];
            for j in &rated {
                for (acc, v) in sum_y.iter_mut().zip(&self.y[j]) {
                    *acc += v;
                }
            }
            for v in &mut sum_y {
                *v *= norm;
            }
            let mut pred = self.mu + self.bu[user] + self.bi[item];
            for f in 0..k {
                pred += self.q[item][f] * (self.p[user][f] + sum_y[f]);
            }
            let err = rating - pred;
            *self.bu.get_mut(user).unwrap() += lr * (err - reg * self.bu[user]);
            *self.bi.get_mut(item).unwrap() += lr * (err - reg * self.bi[item]);
            let q_old = self.q[item].clone();
            for f in 0..k {
                let pf = self.p[user][f];
                self.q.get_mut(item).unwrap()[f] +=
                    lr * (err * (pf + sum_y[f]) - reg * self.q[item][f]);
                self.p.get_mut(user).unwrap()[f] += lr * (err * q_old[f] - reg * pf);
            }
            for j in &rated {
                let yj = self.y.get_mut(j).unwrap();
                for f in 0..k {
                    yj[f] += lr * (err * norm * q_old[f] - reg * yj[f]);
                }
            }
        }
    }

    fn rmse(&self, by_user: &[(String, Vec<(String, f64)>)]) -> f64 {
        let mut sse = 0.0;
        let mut n = 0usize;
        for (user, items) in by_user {
            for (item, rating) in items {
                let e = rating - self.predict(user, item);
                sse += e * e;
                n += 1;
            }
        }
        (sse / n as f64).sqrt()
    }

    fn snapshot(&self) -> (HashMap<String, f64>, HashMap<String, f64>, HashMap<String, Vec<f64>>, HashMap<String, Vec<f64>>, HashMap<String, Vec<f64>>) {
        (
            self.bu.clone(),
            self.bi.clone(),
            self.p.clone(),
            self.q.clone(),
            self.y.clone(),
        )
    }
}

#[test]
fn criterion_4_svdpp_synthetic_recovery_and_loop_oracle() {
    let set = rank3_ratings();
    let hyper = MfHyper {
        factors: 3,
        learning_rate: 0.02,
        regularization: 0.01,
        epochs: 30,
        seed: 77,
        init_scale: 0.1,
    };
    let (model, history) = svdpp::train_mf(&set, &hyper).unwrap();
    let held_in = svdpp::mf_rmse(&model, &set).unwrap();

    // Build the oracle from the seeded initialization state.
    let init = coldrec::svdpp::MfModel::init(&set, &hyper).unwrap();
    let item_order: Vec<String> = init.item_ids().map(str::to_string).collect();
    let item_rank: HashMap<&str, usize> = item_order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut oracle = LoopOracle {
        mu: init.global_mean(),
        bu: init
            .user_ids()
            .map(|u| (u.to_string(), init.user_bias(u).unwrap()))
            .collect(),
        bi: item_order
            .iter()
            .map(|i| (i.clone(), init.item_bias(i).unwrap()))
            .collect(),
        p: init
            .user_ids()
            .map(|u| (u.to_string(), init.user_factors(u).unwrap().to_vec()))
            .collect(),
        q: item_order
            .iter()
            .map(|i| (i.clone(), init.item_factors(i).unwrap().to_vec()))
            .collect(),
        y: item_order
            .iter()
            .map(|i| (i.clone(), init.implicit_factors(i).unwrap().to_vec()))
            .collect(),
        rated: HashMap::new(),
    };
    // N(u) in model index order; the fixture has no duplicate pairs, so the
    // sample list is the review list in file order.
    let samples: Vec<(String, String, f64)> = set
        .reviews()
        .iter()
        .map(|r| (r.user_id.clone(), r.business_id.clone(), r.stars))
        .collect();
    for (user, item, _) in &samples {
        oracle
            .rated
            .entry(user.clone())
            .or_default()
            .push(item.clone());
    }
    for items in oracle.rated.values_mut() {
        items.sort_by_key(|i| item_rank[i.as_str()]);
    }
    let by_user: Vec<(String, Vec<(String, f64)>)> = init
        .user_ids()
        .map(|u| {
            (
                u.to_string(),
                samples
                    .iter()
                    .filter(|(user, _, _)| user == u)
                    .map(|(_, i, r)| (i.clone(), *r))
                    .collect(),
            )
        })
        .collect();

    let mut prev = oracle.rmse(&by_user);
    let mut lr = hyper.learning_rate;
    let mut oracle_history = Vec::new();
    for epoch in 1..=hyper.epochs {
        let order = svdpp::epoch_permutation(hyper.seed, epoch, samples.len());
        let snap = oracle.snapshot();
        let mut halvings = 0usize;
        loop {
            oracle.epoch(&samples, &order, lr, hyper.regularization);
            let rmse = oracle.rmse(&by_user);
            if rmse <= prev {
                prev = rmse;
                break;
            }
            if halvings >= svdpp::MAX_HALVINGS {
                let (bu, bi, p, q, y) = snap;
                oracle.bu = bu;
                oracle.bi = bi;
                oracle.p = p;
                oracle.q = q;
                oracle.y = y;
                break;
            }
            let (bu, bi, p, q, y) = snap.clone();
            oracle.bu = bu;
            oracle.bi = bi;
            oracle.p = p;
            oracle.q = q;
            oracle.y = y;
            lr /= 2.0;
            halvings += 1;
        }
        oracle_history.push(prev);
    }

    let mut worst: f64 = 0.0;
    for (a, b) in history.epoch_rmse.iter().zip(&oracle_history) {
        worst = worst.max((a - b).abs());
    }
    let monotone = history
        .epoch_rmse
        .windows(2)
        .all(|w| w[1] <= w[0]);
    check(
        "4",
        held_in <= 0.15
            && history.epoch_rmse.len() == oracle_history.len()
            && worst <= 1e-9
            && monotone,
        format!(
            "held-in RMSE {held_in:.4} (<= 0.15), loop-oracle max epoch gap {worst:.2e} (<= 1e-9), monotone={monotone}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5-7. One shared end-to-end run of the staged pipeline on the synthetic
//      corpus, plus a second run for byte-identity.

struct E2e {
    _source_dir: tempfile::TempDir,
    work_a: tempfile::TempDir,
    work_b: tempfile::TempDir,
    report: EvalReport,
}

static E2E: OnceLock<E2e> = OnceLock::new();

fn run_pipeline(cfg: &PipelineConfig) -> EvalReport {
    pipeline::cmd_stats(cfg).unwrap();
    pipeline::cmd_split(cfg).unwrap();
    pipeline::cmd_train_mf(cfg, MfScope::Train).unwrap();
    pipeline::cmd_train_mf(cfg, MfScope::Full).unwrap();
    pipeline::cmd_prep(cfg).unwrap();
    pipeline::cmd_train_cnn(cfg).unwrap();
    pipeline::cmd_evaluate(
        cfg,
        &[Method::Cnn, Method::Random1, Method::Random2, Method::Oracle],
    )
    .unwrap()
}

fn e2e() -> &'static E2e {
    E2E.get_or_init(|| {
        let source_dir = tempfile::tempdir().unwrap();
        let (reviews, embeddings) = common::write_synthetic_corpus(source_dir.path());
        let work_a = tempfile::tempdir().unwrap();
        let work_b = tempfile::tempdir().unwrap();
        let cfg_a = common::base_config(work_a.path(), &reviews, &embeddings);
        let report = run_pipeline(&cfg_a);
        let cfg_b = common::base_config(work_b.path(), &reviews, &embeddings);
        let report_b = run_pipeline(&cfg_b);
        assert_eq!(report, report_b);
        E2e {
            _source_dir: source_dir,
            work_a,
            work_b,
            report,
        }
    })
}

#[test]
fn criterion_5_end_to_end_ordering() {
    let report = &e2e().report;
    let combined = |name: &str| report.methods[name].combined.as_ref().unwrap().rmse;
    let (oracle, cnn, r2, r1) = (
        combined("oracle"),
        combined("cnn"),
        combined("random2"),
        combined("random1"),
    );
    check(
        "5",
        oracle < cnn && cnn < r2 && r2 <= r1,
        format!("oracle {oracle:.4} < cnn {cnn:.4} < random2 {r2:.4} <= random1 {r1:.4}"),
    );
}

#[test]
fn criterion_6_combined_column_identity() {
    let report = &e2e().report;
    let mut worst: f64 = 0.0;
    let mut rows = 0usize;
    for method in report.methods.values() {
        // The identity is exact for pooled (deterministic) rows; stochastic
        // rows are validated per trial when the report is built, which would
        // have failed construction on a violation.
        if let (Some(e1), Some(e2), Some(ec)) = (&method.test1, &method.test2, &method.combined) {
            if e1.variance.is_some() {
                continue;
            }
            let lhs = ec.rmse * ec.rmse * (e1.n_reviews + e2.n_reviews) as f64;
            let rhs = e1.rmse * e1.rmse * e1.n_reviews as f64
                + e2.rmse * e2.rmse * e2.n_reviews as f64;
            worst = worst.max((lhs - rhs).abs());
            rows += 1;
        }
    }
    check(
        "6",
        rows >= 2 && worst <= 1e-9,
        format!("max |lhs-rhs| {worst:.2e} over {rows} pooled rows, tolerance 1e-9"),
    );
}

#[test]
fn criterion_7_rerun_byte_identity() {
    let e2e = e2e();
    let list = |dir: &std::path::Path| -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let names_a = list(e2e.work_a.path());
    let names_b = list(e2e.work_b.path());
    let mut identical = names_a == names_b;
    let mut compared = 0usize;
    let mut first_diff = String::new();
    if identical {
        for name in &names_a {
            let a = std::fs::read(e2e.work_a.path().join(name)).unwrap();
            let b = std::fs::read(e2e.work_b.path().join(name)).unwrap();
            if a != b {
                identical = false;
                first_diff = name.clone();
                break;
            }
            compared += 1;
        }
    }
    check(
        "7",
        identical,
        if identical {
            format!("{compared} artifacts byte-identical across independent reruns")
        } else {
            format!("artifact mismatch: {first_diff}")
        },
    );
}

// ---------------------------------------------------------------------------
// 8. Monte-Carlo sanity of the global-interval baseline.

#[test]
fn criterion_8_monte_carlo_baseline_sanity() {
    let bounds = FactorBounds {
        global_min: -1.0,
        global_max: 1.0,
        col_min: vec![-1.0; 20],
        col_max: vec![1.0; 20],
    };
    let mut rng = ChaCha20Rng::seed_from_u64(4242);
    let mut sums = vec![0.0f64; 20];
    for _ in 0..10_000 {
        for (s, v) in sums.iter_mut().zip(random1_factors(&bounds, &mut rng)) {
            *s += v;
        }
    }
    let worst = sums
        .iter()
        .map(|s| (s / 10_000.0).abs())
        .fold(0.0f64, f64::max);
    check(
        "8",
        worst <= 0.05,
        format!("worst |component mean| {worst:.4} over 10000 draws, tolerance 0.05"),
    );
}

// ---------------------------------------------------------------------------
// 9-12. Dataset-gated tier.

fn yelp_reviews() -> Option<PathBuf> {
    std::env::var("COLDREC_YELP_REVIEWS")
        .ok()
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
}

fn glove_vectors() -> Option<PathBuf> {
    std::env::var("COLDREC_GLOVE")
        .ok()
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
}

#[test]
fn criterion_9_corpus_counts() {
    let Some(path) = yelp_reviews() else {
        skip("9", "set COLDREC_YELP_REVIEWS to the review JSON-lines file");
        return;
    };
    let set = corpus::load_reviews(&path).unwrap();
    check(
        "9",
        set.len() == 229_907
            && set.distinct_users() == 45_981
            && set.distinct_businesses() == 11_537,
        format!(
            "{} reviews / {} users / {} businesses (expected 229907/45981/11537)",
            set.len(),
            set.distinct_users(),
            set.distinct_businesses()
        ),
    );
}

#[test]
fn criterion_10_split_sizes() {
    let Some(path) = yelp_reviews() else {
        skip("10", "set COLDREC_YELP_REVIEWS to the review JSON-lines file");
        return;
    };
    let set = corpus::load_reviews(&path).unwrap();
    let idx = corpus::split_indices(&set, &SplitParams::default()).unwrap();
    let (train, t1, t2) = (idx.train.len(), idx.test1.len(), idx.test2.len());
    let ok = (t1 as i64 - 5_625).abs() <= 300
        && (t2 as i64 - 45_582).abs() <= 300
        && (train as i64 - 178_424).abs() <= 300;
    check(
        "10",
        ok,
        format!("train {train} / test1 {t1} / test2 {t2} (targets 178424/5625/45582 ± 300)"),
    );
}

#[test]
fn criterion_11_random_baseline_rows() {
    let Some(path) = yelp_reviews() else {
        skip("11", "set COLDREC_YELP_REVIEWS to the review JSON-lines file");
        return;
    };
    let set = corpus::load_reviews(&path).unwrap();
    let split = corpus::split_dataset(&set, &SplitParams::default()).unwrap();
    let (mf, _) = svdpp::train_mf(&split.train, &MfHyper::default()).unwrap();

    use coldrec::coldstart::{run_baseline_trials_paired, BaselineKind};
    let mut results = Vec::new();
    for (kind, expected) in [
        (BaselineKind::Random1, [2.2070, 1.8309, 1.8753]),
        (BaselineKind::Random2, [1.8990, 1.5659, 1.6054]),
    ] {
        let trials =
            run_baseline_trials_paired(&split.test1, &split.test2, &mf, kind, 100, 42).unwrap();
        let mean = |f: &dyn Fn(&coldrec::coldstart::PairedTrial) -> f64| {
            trials.iter().map(|t| f(t)).sum::<f64>() / trials.len() as f64
        };
        let got = [
            mean(&|t| t.rmse1()),
            mean(&|t| t.rmse2()),
            mean(&|t| t.rmse_combined()),
        ];
        results.push((kind.name(), got, expected));
    }
    let ok = results
        .iter()
        .all(|(_, got, exp)| got.iter().zip(exp).all(|(g, e)| (g - e).abs() <= 0.05));
    let detail = results
        .iter()
        .map(|(name, got, exp)| {
            format!(
                "{name}: {:.4}/{:.4}/{:.4} vs {:.4}/{:.4}/{:.4}",
                got[0], got[1], got[2], exp[0], exp[1], exp[2]
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    check("11", ok, format!("{detail} (tolerance ±0.05)"));
}

#[test]
fn criterion_12_headline_quality_bounds() {
    let (Some(reviews), Some(glove)) = (yelp_reviews(), glove_vectors()) else {
        skip(
            "12",
            "set COLDREC_YELP_REVIEWS and COLDREC_GLOVE to the data files",
        );
        return;
    };
    let source = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.reviews = reviews;
    cfg.embeddings = glove;
    cfg.embeddings_dim = 300;
    cfg.work_dir = work.path().to_path_buf();
    drop(source);

    pipeline::cmd_split(&cfg).unwrap();
    pipeline::cmd_train_mf(&cfg, MfScope::Train).unwrap();
    pipeline::cmd_train_mf(&cfg, MfScope::Full).unwrap();
    pipeline::cmd_prep(&cfg).unwrap();
    pipeline::cmd_train_cnn(&cfg).unwrap();
    let report = pipeline::cmd_evaluate(
        &cfg,
        &[Method::Cnn, Method::Random1, Method::Random2, Method::Oracle],
    )
    .unwrap();

    let combined = |name: &str| report.methods[name].combined.as_ref().unwrap().rmse;
    let (cnn, oracle, r1, r2) = (
        combined("cnn"),
        combined("oracle"),
        combined("random1"),
        combined("random2"),
    );
    check(
        "12",
        cnn <= 1.35 && cnn < r1 && cnn < r2 && oracle <= 0.75,
        format!(
            "cnn {cnn:.4} (<= 1.35, < random1 {r1:.4}, < random2 {r2:.4}); upper bound {oracle:.4} (<= 0.75)"
        ),
    );
}
