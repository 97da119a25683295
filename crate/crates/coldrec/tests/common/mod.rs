//! Shared fixtures for integration tests: a synthetic 100-business review
//! corpus whose descriptions encode the items' true preference vectors, plus
//! a matching pretrained-embedding file and pipeline configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use coldrec::pipeline::PipelineConfig;

pub const USERS: usize = 60;
pub const BUSINESSES: usize = 100;

/// True 3-d preference vectors behind the synthetic ratings. Each business
/// description spells out its vector as quantization tokens (`f<dim>b<bin>`),
/// so a description-to-factors regressor has signal to learn from.
pub fn write_synthetic_corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let user_vecs: Vec<[f64; 3]> = (0..USERS)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
        .collect();
    let item_vecs: Vec<[f64; 3]> = (0..BUSINESSES)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
        .collect();

    let mut reviews = String::new();
    for (b, item_vec) in item_vecs.iter().enumerate() {
        let n_reviews = 6 + ((b * 7919) % 30);
        let mut signal = String::new();
        for (d, &w) in item_vec.iter().enumerate() {
            let bin = (((w + 1.0) / 2.0) * 8.0).floor().clamp(0.0, 7.0) as usize;
            let _ = write!(signal, "f{d}b{bin} ");
        }
        // One business exercises the unknown-token fallback paths.
        let text = if b == 7 {
            format!("good place {signal}xqzzkw")
        } else {
            format!("good place {signal}food")
        };
        for j in 0..n_reviews {
            let u = (b + j * 13) % USERS;
            let noise = rng.random_range(-0.15..=0.15);
            let dot: f64 = (0..3).map(|d| user_vecs[u][d] * item_vec[d]).sum();
            let stars = (3.0 + dot + noise).clamp(1.0, 5.0);
            let votes = if j == 0 { 7 } else { j % 4 };
            let line = serde_json::json!({
                "user_id": format!("user{u:03}"),
                "business_id": format!("biz{b:03}"),
                "stars": stars,
                "votes": {"useful": votes, "funny": 0, "cool": 0},
                "text": text,
                "date": format!("2012-{:02}-{:02}", 1 + j % 12, 1 + (b + j) % 28),
            });
            reviews.push_str(&line.to_string());
            reviews.push('\n');
        }
    }
    let reviews_path = dir.join("reviews.json");
    std::fs::write(&reviews_path, reviews).unwrap();

    let mut vocab: Vec<String> = Vec::new();
    for d in 0..3 {
        for bin in 0..8 {
            vocab.push(format!("f{d}b{bin}"));
        }
    }
    for word in ["good", "place", "food", "nice", "service"] {
        vocab.push(word.to_string());
    }
    let mut embeddings = String::new();
    for token in &vocab {
        let comps: Vec<String> = (0..8)
            .map(|_| format!("{:.6}", rng.random_range(-0.5..=0.5)))
            .collect();
        let _ = writeln!(embeddings, "{token} {}", comps.join(" "));
    }
    let embeddings_path = dir.join("embeddings.txt");
    std::fs::write(&embeddings_path, embeddings).unwrap();

    (reviews_path, embeddings_path)
}

/// Desk-scale pipeline configuration for the synthetic corpus.
pub fn base_config(work_dir: &Path, reviews: &Path, embeddings: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.reviews = reviews.to_path_buf();
    cfg.embeddings = embeddings.to_path_buf();
    cfg.embeddings_dim = 8;
    cfg.work_dir = work_dir.to_path_buf();
    cfg.mf.factors = 3;
    cfg.mf.learning_rate = 0.015;
    cfg.mf.epochs = 25;
    cfg.mf.seed = 11;
    cfg.cnn_num_filters = 32;
    cfg.cnn_window = 2;
    cfg.cnn_learning_rate = 0.15;
    cfg.cnn_batch_size = 16;
    cfg.cnn_max_epochs = 80;
    cfg.cnn_seed = 5;
    cfg.prep_seed = 3;
    cfg.eval_runs = 100;
    cfg.eval_seed = 17;
    cfg
}
