//! The staged pipeline commands.
//!
//! Each command writes its artifacts plus a JSON sidecar recording the
//! digests of its config section and inputs. Downstream commands re-check
//! those digests, so editing the reviews file or a config parameter after a
//! stage ran surfaces as a staleness error naming the stage to re-run.
//! Sidecars contain no timestamps; a rerun with unchanged inputs is
//! byte-identical.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::coldstart::{
    compute_bounds, rate_test_set, trial_seed, FactorSource,
};
use crate::convnet::{self, CnnConfig, CnnModel};
use crate::corpus::{
    self, load_reviews_with, review_distribution, select_description, split_indices, Axis,
    ReviewSet,
};
use crate::error::{Error, Result};
use crate::eval::{
    build_report, EvalReport, MethodOutcome, ReportMeta, SetEval, TrialEval,
};
use crate::svdpp::{self, MfModel};
use crate::textprep::{self, load_embeddings, prepare_docs, TokenizedDoc};

use super::config::{Method, PipelineConfig};
use super::digest::{sha256_file, sha256_str};
use super::lock::WorkLock;

/// Static description of a stage: display name, sidecar file and the config
/// prefixes its outputs depend on.
struct Stage {
    name: &'static str,
    meta_file: &'static str,
    prefixes: &'static [&'static str],
}

const INPUT_PREFIXES: &[&str] = &["reviews", "fields", "corpus.lenient"];

const STATS: Stage = Stage {
    name: "stats",
    meta_file: "stats.meta.json",
    prefixes: INPUT_PREFIXES,
};
const SPLIT: Stage = Stage {
    name: "split",
    meta_file: "split.meta.json",
    prefixes: &["reviews", "fields", "corpus", "split.jsonl"],
};
const TRAIN_MF: Stage = Stage {
    name: "train-mf",
    meta_file: "mf_train.meta.json",
    prefixes: &["reviews", "fields", "corpus", "split.jsonl", "mf"],
};
const TRAIN_MF_FULL: Stage = Stage {
    name: "train-mf --full",
    meta_file: "mf_full.meta.json",
    prefixes: &["reviews", "fields", "corpus.lenient", "mf"],
};
const PREP: Stage = Stage {
    name: "prep",
    meta_file: "prep.meta.json",
    prefixes: &[
        "reviews",
        "fields",
        "corpus.lenient",
        "embeddings",
        "embeddings_dim",
        "prep",
    ],
};
const TRAIN_CNN: Stage = Stage {
    name: "train-cnn",
    meta_file: "cnn.meta.json",
    prefixes: &[
        "reviews",
        "fields",
        "corpus",
        "split.jsonl",
        "embeddings",
        "embeddings_dim",
        "prep",
        "mf",
        "cnn",
    ],
};
const EVALUATE: Stage = Stage {
    name: "evaluate",
    meta_file: "evaluate.meta.json",
    prefixes: &[
        "reviews",
        "fields",
        "corpus",
        "split.jsonl",
        "embeddings",
        "embeddings_dim",
        "prep",
        "mf",
        "cnn",
        "eval",
        "report.timestamps",
    ],
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FileStamp {
    path: String,
    digest: String,
}

/// Artifact sidecar: who produced what from which inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArtifactMeta {
    command: String,
    config_digest: String,
    seeds: BTreeMap<String, u64>,
    inputs: BTreeMap<String, FileStamp>,
    /// Artifact file name (relative to the work dir) -> content digest.
    outputs: BTreeMap<String, String>,
}

impl ArtifactMeta {
    fn new(stage: &Stage, cfg: &PipelineConfig) -> Self {
        ArtifactMeta {
            command: stage.name.to_string(),
            config_digest: sha256_str(&cfg.section_text(stage.prefixes)),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Record a source file by canonical absolute path.
    fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let canonical = std::fs::canonicalize(path).map_err(|e| Error::io(path, e))?;
        self.inputs.insert(
            name.to_string(),
            FileStamp {
                path: canonical.display().to_string(),
                digest: sha256_file(&canonical)?,
            },
        );
        Ok(())
    }

    /// Record a predecessor artifact by bare file name; it resolves against
    /// whatever work directory is current at validation time.
    fn record_artifact_input(&mut self, name: &str, work_dir: &Path, file: &str) -> Result<()> {
        self.inputs.insert(
            name.to_string(),
            FileStamp {
                path: file.to_string(),
                digest: sha256_file(&work_dir.join(file))?,
            },
        );
        Ok(())
    }

    fn record_output(&mut self, work_dir: &Path, file: &str) -> Result<()> {
        self.outputs
            .insert(file.to_string(), sha256_file(&work_dir.join(file))?);
        Ok(())
    }

    fn write(&self, work_dir: &Path, stage: &Stage) -> Result<()> {
        let path = work_dir.join(stage.meta_file);
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Contract(format!("sidecar serialization: {e}")))?;
        std::fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Load and validate a stage's sidecar: the stage must have run, with the
/// current config section, on the current inputs, and its artifacts must be
/// intact.
fn require_stage(cfg: &PipelineConfig, work_dir: &Path, stage: &Stage) -> Result<ArtifactMeta> {
    let meta_path = work_dir.join(stage.meta_file);
    if !meta_path.exists() {
        return Err(Error::MissingArtifact {
            artifact: stage.meta_file.to_string(),
            command: format!("coldrec {}", stage.name),
        });
    }
    let body = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: ArtifactMeta = serde_json::from_str(&body)
        .map_err(|e| Error::Stale(format!("unreadable sidecar {}: {e}", meta_path.display())))?;

    let current = sha256_str(&cfg.section_text(stage.prefixes));
    if meta.config_digest != current {
        return Err(Error::Stale(format!(
            "configuration relevant to `{}` changed since it ran; rerun `coldrec {}`",
            stage.name, stage.name
        )));
    }
    for (name, stamp) in &meta.inputs {
        let raw = PathBuf::from(&stamp.path);
        let path = if raw.is_absolute() {
            raw
        } else {
            work_dir.join(&raw)
        };
        if !path.exists() {
            return Err(Error::Stale(format!(
                "input `{name}` ({}) of `{}` no longer exists",
                stamp.path, stage.name
            )));
        }
        if sha256_file(&path)? != stamp.digest {
            return Err(Error::Stale(format!(
                "input `{name}` ({}) changed since `{}` ran; rerun `coldrec {}`",
                stamp.path, stage.name, stage.name
            )));
        }
    }
    for (file, digest) in &meta.outputs {
        let path = work_dir.join(file);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                artifact: file.clone(),
                command: format!("coldrec {}", stage.name),
            });
        }
        if &sha256_file(&path)? != digest {
            return Err(Error::Stale(format!(
                "artifact `{file}` was modified after `{}` wrote it; rerun `coldrec {}`",
                stage.name, stage.name
            )));
        }
    }
    Ok(meta)
}

fn load_corpus(cfg: &PipelineConfig) -> Result<ReviewSet> {
    let fields = cfg.field_map()?;
    let (set, report) = load_reviews_with(&cfg.reviews, &fields, cfg.parse_mode())?;
    if report.skipped_lines > 0 {
        log::warn!("skipped {} malformed review lines", report.skipped_lines);
    }
    Ok(set)
}

fn record_corpus_inputs(meta: &mut ArtifactMeta, cfg: &PipelineConfig) -> Result<()> {
    meta.record_input("reviews", &cfg.reviews)?;
    if let Some(fields) = &cfg.fields_file {
        meta.record_input("fields", fields)?;
    }
    Ok(())
}

pub struct StatsOutput {
    pub users_csv: PathBuf,
    pub businesses_csv: PathBuf,
    pub distinct_users: usize,
    pub distinct_businesses: usize,
}

/// Emit per-user and per-business review-count histograms.
pub fn cmd_stats(cfg: &PipelineConfig) -> Result<StatsOutput> {
    let work_dir = cfg.work_dir.clone();
    let _lock = WorkLock::acquire(&work_dir)?;
    let set = load_corpus(cfg)?;

    let users = review_distribution(&set, Axis::User);
    let businesses = review_distribution(&set, Axis::Business);
    let users_csv = work_dir.join("users_histogram.csv");
    let businesses_csv = work_dir.join("businesses_histogram.csv");
    corpus::write_histogram_csv(&users, &users_csv)?;
    corpus::write_histogram_csv(&businesses, &businesses_csv)?;

    let mut meta = ArtifactMeta::new(&STATS, cfg);
    record_corpus_inputs(&mut meta, cfg)?;
    meta.record_output(&work_dir, "users_histogram.csv")?;
    meta.record_output(&work_dir, "businesses_histogram.csv")?;
    meta.write(&work_dir, &STATS)?;

    Ok(StatsOutput {
        users_csv,
        businesses_csv,
        distinct_users: users.len(),
        distinct_businesses: businesses.len(),
    })
}

fn split_file_names(cfg: &PipelineConfig) -> [&'static str; 3] {
    if cfg.split_jsonl {
        ["split_train.jsonl", "split_test1.jsonl", "split_test2.jsonl"]
    } else {
        ["split_train.idx", "split_test1.idx", "split_test2.idx"]
    }
}

pub struct SplitOutput {
    pub files: [PathBuf; 3],
    pub sizes: (usize, usize, usize),
}

/// Compute the cold-start split and write the three manifests.
pub fn cmd_split(cfg: &PipelineConfig) -> Result<SplitOutput> {
    let work_dir = cfg.work_dir.clone();
    let _lock = WorkLock::acquire(&work_dir)?;
    let set = load_corpus(cfg)?;
    let idx = split_indices(&set, &cfg.split)?;

    let names = split_file_names(cfg);
    let files = [
        work_dir.join(names[0]),
        work_dir.join(names[1]),
        work_dir.join(names[2]),
    ];
    let parts = [&idx.train, &idx.test1, &idx.test2];
    for (file, part) in files.iter().zip(parts) {
        if cfg.split_jsonl {
            set.subset(part).write_jsonl(file)?;
        } else {
            corpus::write_index_manifest(part, file)?;
        }
    }

    let mut meta = ArtifactMeta::new(&SPLIT, cfg);
    record_corpus_inputs(&mut meta, cfg)?;
    for name in names {
        meta.record_output(&work_dir, name)?;
    }
    meta.write(&work_dir, &SPLIT)?;

    Ok(SplitOutput {
        files,
        sizes: (idx.train.len(), idx.test1.len(), idx.test2.len()),
    })
}

/// Load one split part, honoring the manifest format.
fn load_split_part(cfg: &PipelineConfig, part: usize) -> Result<ReviewSet> {
    let name = split_file_names(cfg)[part];
    let path = cfg.work_dir.join(name);
    if cfg.split_jsonl {
        let (set, _) = load_reviews_with(
            &path,
            &corpus::FieldMap::default(),
            corpus::ParseMode::Strict,
        )?;
        Ok(set)
    } else {
        let positions = corpus::read_index_manifest(&path)?;
        let set = load_corpus(cfg)?;
        Ok(set.subset(&positions))
    }
}

/// Which ratings feed the factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfScope {
    /// Train-split reviews only (the deployable model).
    Train,
    /// The whole corpus, test items included (the upper-bound model).
    Full,
}

pub struct TrainMfOutput {
    pub checkpoint: PathBuf,
    pub train_rmse: f64,
    pub epochs_recorded: usize,
}

/// Train SVD++ and write its checkpoint.
pub fn cmd_train_mf(cfg: &PipelineConfig, scope: MfScope) -> Result<TrainMfOutput> {
    let work_dir = cfg.work_dir.clone();
    let _lock = WorkLock::acquire(&work_dir)?;

    let (stage, ck_name, ratings) = match scope {
        MfScope::Train => {
            require_stage(cfg, &work_dir, &SPLIT)?;
            (&TRAIN_MF, "mf_train.ck", load_split_part(cfg, 0)?)
        }
        MfScope::Full => (&TRAIN_MF_FULL, "mf_full.ck", load_corpus(cfg)?),
    };

    let (model, history) = svdpp::train_mf(&ratings, &cfg.mf)?;
    let checkpoint = work_dir.join(ck_name);
    model.save(&checkpoint)?;
    let json_name = ck_name.replace(".ck", ".json");
    if cfg.mf_export_json {
        let path = work_dir.join(&json_name);
        let body = serde_json::to_string_pretty(&model.to_json())
            .map_err(|e| Error::Contract(format!("model export: {e}")))?;
        std::fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))?;
    }

    let mut meta = ArtifactMeta::new(stage, cfg);
    record_corpus_inputs(&mut meta, cfg)?;
    if scope == MfScope::Train {
        meta.record_artifact_input("split_train", &work_dir, split_file_names(cfg)[0])?;
    }
    meta.seeds.insert("mf".into(), cfg.mf.seed);
    meta.record_output(&work_dir, ck_name)?;
    if cfg.mf_export_json {
        meta.record_output(&work_dir, &json_name)?;
    }
    meta.write(&work_dir, stage)?;

    Ok(TrainMfOutput {
        checkpoint,
        train_rmse: model.train_rmse().unwrap_or(f64::NAN),
        epochs_recorded: history.epoch_rmse.len(),
    })
}

pub struct PrepOutput {
    pub docs_file: PathBuf,
    pub num_docs: usize,
    pub padded_len: usize,
    pub aliases: usize,
    pub random_rows: usize,
}

/// Select one description per business, tokenize, resolve against the
/// embedding table and persist the padded documents plus the extended table.
pub fn cmd_prep(cfg: &PipelineConfig) -> Result<PrepOutput> {
    let work_dir = cfg.work_dir.clone();
    let _lock = WorkLock::acquire(&work_dir)?;
    let set = load_corpus(cfg)?;

    let mut table = load_embeddings(&cfg.embeddings, cfg.embeddings_dim)?;
    let descriptions: Vec<(String, String)> = set
        .business_ids_sorted()
        .into_iter()
        .map(|id| {
            select_description(&set, id).map(|review| (id.to_string(), review.text.clone()))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.prep_seed);
    let docs = prepare_docs(&descriptions, &mut table, &mut rng, &cfg.prep_options())?;
    let docs_file = work_dir.join("docs.bin");
    textprep::save_docs(&docs_file, &docs, &table)?;

    let mut meta = ArtifactMeta::new(&PREP, cfg);
    record_corpus_inputs(&mut meta, cfg)?;
    meta.record_input("embeddings", &cfg.embeddings)?;
    meta.seeds.insert("prep".into(), cfg.prep_seed);
    meta.record_output(&work_dir, "docs.bin")?;
    meta.write(&work_dir, &PREP)?;

    let counts = table.origin_counts();
    Ok(PrepOutput {
        docs_file,
        num_docs: docs.len(),
        padded_len: docs.first().map(|d| d.token_ids.len()).unwrap_or(0),
        aliases: counts.alias,
        random_rows: counts.random,
    })
}

pub struct TrainCnnOutput {
    pub checkpoint: PathBuf,
    pub history_csv: PathBuf,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
}

fn cnn_config(cfg: &PipelineConfig, embed_dim: usize, output_dim: usize) -> CnnConfig {
    CnnConfig {
        embed_dim,
        num_filters: cfg.cnn_num_filters,
        window: cfg.cnn_window,
        output_dim,
        learning_rate: cfg.cnn_learning_rate,
        batch_size: cfg.cnn_batch_size,
        max_epochs: cfg.cnn_max_epochs,
        validation_frac: cfg.cnn_validation_frac,
        seed: cfg.cnn_seed,
    }
}

/// Train the description-to-factors network against the train-split SVD++
/// item vectors.
pub fn cmd_train_cnn(cfg: &PipelineConfig) -> Result<TrainCnnOutput> {
    let work_dir = cfg.work_dir.clone();
    let _lock = WorkLock::acquire(&work_dir)?;
    require_stage(cfg, &work_dir, &PREP)?;
    require_stage(cfg, &work_dir, &TRAIN_MF)?;

    let (docs, table) = textprep::load_docs(&work_dir.join("docs.bin"))?;
    let mf = MfModel::load(&work_dir.join("mf_train.ck"))?;

    // Only businesses with trained factors (train-split businesses) have
    // regression targets; cold businesses are what we later predict.
    let mut train_docs = Vec::new();
    let mut targets = BTreeMap::new();
    for doc in docs {
        if mf.contains_item(&doc.business_id) {
            targets.insert(
                doc.business_id.clone(),
                mf.item_factors(&doc.business_id)?.to_vec(),
            );
            train_docs.push(doc);
        }
    }

    let config = cnn_config(cfg, table.dim(), mf.factors());
    let (model, report) = convnet::train_cnn(table, &train_docs, &targets, &config)?;
    let checkpoint = work_dir.join("cnn.ck");
    model.save(&checkpoint)?;
    let history_csv = work_dir.join("cnn_history.csv");
    convnet::write_history_csv(&report.history, &history_csv)?;

    let mut meta = ArtifactMeta::new(&TRAIN_CNN, cfg);
    meta.record_artifact_input("docs", &work_dir, "docs.bin")?;
    meta.record_artifact_input("mf_train", &work_dir, "mf_train.ck")?;
    meta.seeds.insert("cnn".into(), cfg.cnn_seed);
    meta.record_output(&work_dir, "cnn.ck")?;
    meta.record_output(&work_dir, "cnn_history.csv")?;
    meta.write(&work_dir, &TRAIN_CNN)?;

    Ok(TrainCnnOutput {
        checkpoint,
        history_csv,
        best_epoch: report.best_epoch,
        best_val_rmse: report.history[report.best_epoch].val_rmse,
    })
}

fn set_eval(test: &ReviewSet, rated: &[(usize, f64)]) -> SetEval {
    let sse = rated
        .iter()
        .map(|&(pos, p)| {
            let a = test.reviews()[pos].stars;
            (p - a) * (p - a)
        })
        .sum();
    SetEval {
        sse,
        n: rated.len(),
    }
}

/// Evaluate any subset of methods on the cold-start test sets and write the
/// report (CSV + JSON; the rendered table is returned for display).
pub fn cmd_evaluate(cfg: &PipelineConfig, methods: &[Method]) -> Result<EvalReport> {
    if methods.is_empty() {
        return Err(Error::Parameter("no methods selected".into()));
    }
    let work_dir = cfg.work_dir.clone();
    let _lock = WorkLock::acquire(&work_dir)?;
    require_stage(cfg, &work_dir, &SPLIT)?;

    let test1 = load_split_part(cfg, 1)?;
    let test2 = load_split_part(cfg, 2)?;
    if test1.is_empty() && test2.is_empty() {
        return Err(Error::Parameter(
            "the split produced no test reviews; nothing to evaluate".into(),
        ));
    }

    let needs_train_model = methods
        .iter()
        .any(|m| matches!(m, Method::Cnn | Method::Random1 | Method::Random2));
    let mf_train = if needs_train_model {
        require_stage(cfg, &work_dir, &TRAIN_MF)?;
        Some(MfModel::load(&work_dir.join("mf_train.ck"))?)
    } else {
        None
    };
    let mf_full = if methods.contains(&Method::Oracle) {
        require_stage(cfg, &work_dir, &TRAIN_MF_FULL)?;
        Some(MfModel::load(&work_dir.join("mf_full.ck"))?)
    } else {
        None
    };
    let cnn_assets = if methods.contains(&Method::Cnn) {
        require_stage(cfg, &work_dir, &TRAIN_CNN)?;
        require_stage(cfg, &work_dir, &PREP)?;
        let model = CnnModel::load(&work_dir.join("cnn.ck"))?;
        let (docs, _) = textprep::load_docs(&work_dir.join("docs.bin"))?;
        let map: HashMap<String, TokenizedDoc> = docs
            .into_iter()
            .map(|d| (d.business_id.clone(), d))
            .collect();
        Some((model, map))
    } else {
        None
    };

    let empty_docs = HashMap::new();
    let mut results: BTreeMap<String, MethodOutcome> = BTreeMap::new();
    let mut trial_dumps: Vec<(String, Vec<f64>)> = Vec::new();

    for method in methods {
        match method {
            Method::Cnn => {
                let (model, docs) = cnn_assets.as_ref().expect("loaded above");
                let mf = mf_train.as_ref().expect("loaded above");
                let source = FactorSource::Cnn(model);
                let mut rng = ChaCha20Rng::seed_from_u64(0);
                let eval1 = (!test1.is_empty())
                    .then(|| {
                        rate_test_set(&test1, mf, &source, docs, &mut rng)
                            .map(|r| set_eval(&test1, &r))
                    })
                    .transpose()?;
                let eval2 = (!test2.is_empty())
                    .then(|| {
                        rate_test_set(&test2, mf, &source, docs, &mut rng)
                            .map(|r| set_eval(&test2, &r))
                    })
                    .transpose()?;
                results.insert(
                    "cnn".into(),
                    MethodOutcome::Deterministic {
                        test1: eval1,
                        test2: eval2,
                    },
                );
            }
            Method::Oracle => {
                let full = mf_full.as_ref().expect("loaded above");
                let source = FactorSource::Oracle(full);
                let mut rng = ChaCha20Rng::seed_from_u64(0);
                let eval1 = (!test1.is_empty())
                    .then(|| {
                        rate_test_set(&test1, full, &source, &empty_docs, &mut rng)
                            .map(|r| set_eval(&test1, &r))
                    })
                    .transpose()?;
                let eval2 = (!test2.is_empty())
                    .then(|| {
                        rate_test_set(&test2, full, &source, &empty_docs, &mut rng)
                            .map(|r| set_eval(&test2, &r))
                    })
                    .transpose()?;
                results.insert(
                    "oracle".into(),
                    MethodOutcome::Deterministic {
                        test1: eval1,
                        test2: eval2,
                    },
                );
            }
            Method::Random1 | Method::Random2 => {
                let mf = mf_train.as_ref().expect("loaded above");
                let bounds = compute_bounds(mf)?;
                if cfg.eval_runs == 0 {
                    return Err(Error::Parameter("eval.runs must be >= 1".into()));
                }
                let mut trials = Vec::with_capacity(cfg.eval_runs);
                let mut dump_scores = Vec::with_capacity(cfg.eval_runs);
                for trial in 0..cfg.eval_runs {
                    let mut rng =
                        ChaCha20Rng::seed_from_u64(trial_seed(cfg.eval_seed, trial as u64));
                    let source = match method {
                        Method::Random1 => FactorSource::Random1(&bounds),
                        _ => FactorSource::Random2(&bounds),
                    };
                    let eval1 = (!test1.is_empty())
                        .then(|| {
                            rate_test_set(&test1, mf, &source, &empty_docs, &mut rng)
                                .map(|r| set_eval(&test1, &r))
                        })
                        .transpose()?;
                    let eval2 = (!test2.is_empty())
                        .then(|| {
                            rate_test_set(&test2, mf, &source, &empty_docs, &mut rng)
                                .map(|r| set_eval(&test2, &r))
                        })
                        .transpose()?;
                    let pooled = match (&eval1, &eval2) {
                        (Some(a), Some(b)) => SetEval {
                            sse: a.sse + b.sse,
                            n: a.n + b.n,
                        },
                        (Some(a), None) => *a,
                        (None, Some(b)) => *b,
                        (None, None) => unreachable!("at least one set is non-empty"),
                    };
                    dump_scores.push(pooled.rmse());
                    trials.push(TrialEval {
                        test1: eval1,
                        test2: eval2,
                    });
                }
                results.insert(
                    method.name().into(),
                    MethodOutcome::Stochastic { trials },
                );
                if cfg.eval_dump_trials {
                    trial_dumps.push((method.name().to_string(), dump_scores));
                }
            }
        }
    }

    let mut metadata = ReportMeta {
        config_digest: Some(sha256_str(&cfg.section_text(EVALUATE.prefixes))),
        n_runs: methods
            .iter()
            .any(|m| matches!(m, Method::Random1 | Method::Random2))
            .then_some(cfg.eval_runs),
        ..ReportMeta::default()
    };
    metadata.seeds.insert("prep".into(), cfg.prep_seed);
    metadata.seeds.insert("mf".into(), cfg.mf.seed);
    metadata.seeds.insert("cnn".into(), cfg.cnn_seed);
    metadata.seeds.insert("eval".into(), cfg.eval_seed);
    if cfg.report_timestamps {
        metadata.generated_at = Some(chrono::Utc::now().to_rfc3339());
    }

    let report = build_report(results, metadata)?;
    report.write_csv(&work_dir.join("report.csv"))?;
    report.write_json(&work_dir.join("report.json"))?;

    let mut meta = ArtifactMeta::new(&EVALUATE, cfg);
    record_corpus_inputs(&mut meta, cfg)?;
    meta.seeds.insert("eval".into(), cfg.eval_seed);
    meta.record_output(&work_dir, "report.csv")?;
    meta.record_output(&work_dir, "report.json")?;
    for (name, scores) in &trial_dumps {
        let file = format!("trials_{name}.csv");
        let path = work_dir.join(&file);
        let mut writer = csv::Writer::from_path(&path)
            .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
        writer
            .write_record(["trial", "rmse"])
            .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
        for (i, score) in scores.iter().enumerate() {
            writer
                .write_record([i.to_string(), score.to_string()])
                .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
        }
        writer.flush().map_err(|e| Error::io(&path, e))?;
        meta.record_output(&work_dir, &file)?;
    }
    meta.write(&work_dir, &EVALUATE)?;

    Ok(report)
}
