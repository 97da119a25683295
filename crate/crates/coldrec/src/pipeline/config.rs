//! Plain-text key-value pipeline configuration.
//!
//! Format: one `key = value` per line, `#` comments, unknown keys rejected.
//! Every seed has an explicit constant default; nothing derives from the
//! clock. The canonical rendering (sorted keys, normalized values) is what
//! gets digested into artifact sidecars, so a changed parameter is detected
//! as staleness by downstream commands.

use std::path::{Path, PathBuf};

use crate::corpus::{FieldMap, ParseMode, SplitParams};
use crate::error::{Error, Result};
use crate::svdpp::MfHyper;
use crate::textprep::PrepOptions;

/// Which methods `evaluate` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Cnn,
    Random1,
    Random2,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cnn => "cnn",
            Method::Random1 => "random1",
            Method::Random2 => "random2",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s.trim() {
            "cnn" => Ok(Method::Cnn),
            "random1" => Ok(Method::Random1),
            "random2" => Ok(Method::Random2),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Parameter(format!(
                "unknown method `{other}` (expected cnn, random1, random2 or oracle)"
            ))),
        }
    }
}

/// Full pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub reviews: PathBuf,
    pub embeddings: PathBuf,
    pub embeddings_dim: usize,
    pub work_dir: PathBuf,
    /// Optional field-name remapping file for the review loader.
    pub fields_file: Option<PathBuf>,
    pub lenient: bool,

    pub split: SplitParams,
    /// Emit split manifests as JSON-lines review files instead of index lists.
    pub split_jsonl: bool,

    pub prep_max_doc_len: usize, // 0 = uncapped
    pub prep_seed: u64,

    pub mf: MfHyper,
    pub mf_export_json: bool,

    pub cnn_num_filters: usize,
    pub cnn_window: usize,
    pub cnn_learning_rate: f64,
    pub cnn_batch_size: usize,
    pub cnn_max_epochs: usize,
    pub cnn_validation_frac: f64,
    pub cnn_seed: u64,

    pub eval_runs: usize,
    pub eval_seed: u64,
    pub eval_methods: Vec<Method>,
    pub eval_dump_trials: bool,

    /// Include a wall-clock timestamp in report metadata. Off by default so
    /// reruns are byte-identical.
    pub report_timestamps: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            reviews: PathBuf::from("reviews.json"),
            embeddings: PathBuf::from("embeddings.txt"),
            embeddings_dim: 300,
            work_dir: PathBuf::from("work"),
            fields_file: None,
            lenient: false,
            split: SplitParams::default(),
            split_jsonl: false,
            prep_max_doc_len: 1000,
            prep_seed: 42,
            mf: MfHyper::default(),
            mf_export_json: false,
            cnn_num_filters: 50,
            cnn_window: 4,
            cnn_learning_rate: 0.001,
            cnn_batch_size: 64,
            cnn_max_epochs: 50,
            cnn_validation_frac: 0.10,
            cnn_seed: 42,
            eval_runs: 100,
            eval_seed: 42,
            eval_methods: vec![Method::Cnn, Method::Random1, Method::Random2, Method::Oracle],
            eval_dump_trials: false,
            report_timestamps: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, Some(path))
    }

    pub fn parse(content: &str, origin: Option<&Path>) -> Result<Self> {
        let path = origin.unwrap_or_else(|| Path::new("<config>"));
        let mut cfg = PipelineConfig::default();
        for (i, raw) in content.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, lineno, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Apply a single `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse::<T>()
                .map_err(|e| Error::Parameter(format!("bad value for `{key}`: {e}")))
        }
        match key {
            "reviews" => self.reviews = PathBuf::from(value),
            "embeddings" => self.embeddings = PathBuf::from(value),
            "embeddings_dim" => self.embeddings_dim = num(key, value)?,
            "work_dir" => self.work_dir = PathBuf::from(value),
            "fields" => {
                self.fields_file = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "corpus.lenient" => self.lenient = num(key, value)?,
            "corpus.test1_frac" => self.split.test1_frac = num(key, value)?,
            "corpus.test2_lo" => self.split.test2_band.0 = num(key, value)?,
            "corpus.test2_hi" => self.split.test2_band.1 = num(key, value)?,
            "corpus.min_votes" => self.split.min_votes = num(key, value)?,
            "split.jsonl" => self.split_jsonl = num(key, value)?,
            "prep.max_doc_len" => self.prep_max_doc_len = num(key, value)?,
            "prep.seed" => self.prep_seed = num(key, value)?,
            "mf.factors" => self.mf.factors = num(key, value)?,
            "mf.learning_rate" => self.mf.learning_rate = num(key, value)?,
            "mf.regularization" => self.mf.regularization = num(key, value)?,
            "mf.epochs" => self.mf.epochs = num(key, value)?,
            "mf.seed" => self.mf.seed = num(key, value)?,
            "mf.init_scale" => self.mf.init_scale = num(key, value)?,
            "mf.export_json" => self.mf_export_json = num(key, value)?,
            "cnn.num_filters" => self.cnn_num_filters = num(key, value)?,
            "cnn.window" => self.cnn_window = num(key, value)?,
            "cnn.learning_rate" => self.cnn_learning_rate = num(key, value)?,
            "cnn.batch_size" => self.cnn_batch_size = num(key, value)?,
            "cnn.max_epochs" => self.cnn_max_epochs = num(key, value)?,
            "cnn.validation_frac" => self.cnn_validation_frac = num(key, value)?,
            "cnn.seed" => self.cnn_seed = num(key, value)?,
            "eval.runs" => self.eval_runs = num(key, value)?,
            "eval.seed" => self.eval_seed = num(key, value)?,
            "eval.methods" => {
                let mut methods = Vec::new();
                for part in value.split(',').filter(|s| !s.trim().is_empty()) {
                    methods.push(Method::parse(part)?);
                }
                methods.sort_unstable();
                methods.dedup();
                if methods.is_empty() {
                    return Err(Error::Parameter("eval.methods must not be empty".into()));
                }
                self.eval_methods = methods;
            }
            "eval.dump_trials" => self.eval_dump_trials = num(key, value)?,
            "report.timestamps" => self.report_timestamps = num(key, value)?,
            other => {
                return Err(Error::Parameter(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Set every stage seed at once (the `--seed` override).
    pub fn override_all_seeds(&mut self, seed: u64) {
        self.prep_seed = seed;
        self.mf.seed = seed;
        self.cnn_seed = seed;
        self.eval_seed = seed;
    }

    pub fn parse_mode(&self) -> ParseMode {
        if self.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }

    pub fn field_map(&self) -> Result<FieldMap> {
        match &self.fields_file {
            Some(path) => FieldMap::from_file(path),
            None => Ok(FieldMap::default()),
        }
    }

    pub fn prep_options(&self) -> PrepOptions {
        PrepOptions {
            max_len: (self.prep_max_doc_len > 0).then_some(self.prep_max_doc_len),
        }
    }

    /// Canonical `key = value` lines, sorted by key. The work directory is
    /// excluded: relocating artifacts must not invalidate them.
    pub fn canonical_lines(&self) -> Vec<(String, String)> {
        let methods: Vec<&str> = self.eval_methods.iter().map(|m| m.name()).collect();
        let mut lines: Vec<(String, String)> = vec![
            ("reviews".into(), self.reviews.display().to_string()),
            ("embeddings".into(), self.embeddings.display().to_string()),
            ("embeddings_dim".into(), self.embeddings_dim.to_string()),
            (
                "fields".into(),
                self.fields_file
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("corpus.lenient".into(), self.lenient.to_string()),
            ("corpus.test1_frac".into(), self.split.test1_frac.to_string()),
            ("corpus.test2_lo".into(), self.split.test2_band.0.to_string()),
            ("corpus.test2_hi".into(), self.split.test2_band.1.to_string()),
            ("corpus.min_votes".into(), self.split.min_votes.to_string()),
            ("split.jsonl".into(), self.split_jsonl.to_string()),
            ("prep.max_doc_len".into(), self.prep_max_doc_len.to_string()),
            ("prep.seed".into(), self.prep_seed.to_string()),
            ("mf.factors".into(), self.mf.factors.to_string()),
            ("mf.learning_rate".into(), self.mf.learning_rate.to_string()),
            ("mf.regularization".into(), self.mf.regularization.to_string()),
            ("mf.epochs".into(), self.mf.epochs.to_string()),
            ("mf.seed".into(), self.mf.seed.to_string()),
            ("mf.init_scale".into(), self.mf.init_scale.to_string()),
            ("mf.export_json".into(), self.mf_export_json.to_string()),
            ("cnn.num_filters".into(), self.cnn_num_filters.to_string()),
            ("cnn.window".into(), self.cnn_window.to_string()),
            ("cnn.learning_rate".into(), self.cnn_learning_rate.to_string()),
            ("cnn.batch_size".into(), self.cnn_batch_size.to_string()),
            ("cnn.max_epochs".into(), self.cnn_max_epochs.to_string()),
            (
                "cnn.validation_frac".into(),
                self.cnn_validation_frac.to_string(),
            ),
            ("cnn.seed".into(), self.cnn_seed.to_string()),
            ("eval.runs".into(), self.eval_runs.to_string()),
            ("eval.seed".into(), self.eval_seed.to_string()),
            ("eval.methods".into(), methods.join(",")),
            ("eval.dump_trials".into(), self.eval_dump_trials.to_string()),
            (
                "report.timestamps".into(),
                self.report_timestamps.to_string(),
            ),
        ];
        lines.sort();
        lines
    }

    /// Canonical rendering of the keys matching any of `prefixes`.
    pub fn section_text(&self, prefixes: &[&str]) -> String {
        let mut out = String::new();
        for (key, value) in self.canonical_lines() {
            let hit = prefixes
                .iter()
                .any(|p| key == *p || key.starts_with(&format!("{p}.")));
            if hit {
                out.push_str(&key);
                out.push_str(" = ");
                out.push_str(&value);
                out.push('\n');
            }
        }
        out
    }
}
