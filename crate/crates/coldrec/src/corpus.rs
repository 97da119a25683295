//! Review corpus: ingestion, description selection, cold-start splits and
//! distribution statistics.
//!
//! The input is a JSON-lines file, one review object per line (the Yelp
//! academic dataset schema). Field names are remappable through a plain-text
//! key-value config so other dumps can be loaded without conversion.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One review record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub user_id: String,
    pub business_id: String,
    pub stars: f64,
    /// Total votes this review received from other users.
    pub votes: u64,
    pub text: String,
    pub date: NaiveDate,
}

impl Review {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if self.business_id.is_empty() {
            return Err("empty business_id".into());
        }
        if !(1.0..=5.0).contains(&self.stars) {
            return Err(format!("stars {} outside [1,5]", self.stars));
        }
        Ok(())
    }
}

/// Immutable review corpus with per-user and per-business position indexes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReviewSet {
    reviews: Vec<Review>,
    by_business: HashMap<String, Vec<usize>>,
    by_user: HashMap<String, Vec<usize>>,
}

impl ReviewSet {
    /// Build a set from records, validating each review's invariants.
    pub fn from_reviews(reviews: Vec<Review>) -> Result<Self> {
        for (i, r) in reviews.iter().enumerate() {
            r.validate()
                .map_err(|m| Error::Parameter(format!("review {i}: {m}")))?;
        }
        Ok(Self::index(reviews))
    }

    fn index(reviews: Vec<Review>) -> Self {
        let mut by_business: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_user: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, r) in reviews.iter().enumerate() {
            by_business.entry(r.business_id.clone()).or_default().push(i);
            by_user.entry(r.user_id.clone()).or_default().push(i);
        }
        Self {
            reviews,
            by_business,
            by_user,
        }
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn distinct_users(&self) -> usize {
        self.by_user.len()
    }

    pub fn distinct_businesses(&self) -> usize {
        self.by_business.len()
    }

    /// Positions of all reviews of `business_id`, in file order.
    pub fn business_reviews(&self, business_id: &str) -> Option<&[usize]> {
        self.by_business.get(business_id).map(|v| v.as_slice())
    }

    pub fn user_reviews(&self, user_id: &str) -> Option<&[usize]> {
        self.by_user.get(user_id).map(|v| v.as_slice())
    }

    /// Business ids in ascending order. Deterministic iteration order for
    /// anything that draws or rates per business.
    pub fn business_ids_sorted(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.by_business.keys().map(|s| s.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    /// New set holding clones of the reviews at `positions` (in the given order).
    pub fn subset(&self, positions: &[usize]) -> ReviewSet {
        let reviews = positions.iter().map(|&i| self.reviews[i].clone()).collect();
        Self::index(reviews)
    }

    /// Write the set back out as JSON lines. Loading the result reproduces
    /// an identical set (votes are stored as their summed total).
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for r in &self.reviews {
            let line = serde_json::to_string(r)
                .map_err(|e| Error::Contract(format!("serialize review: {e}")))?;
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Field-name mapping from the JSON records to [`Review`] fields, plus the
/// vote-aggregation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub user_id: String,
    pub business_id: String,
    pub stars: String,
    pub votes: String,
    pub text: String,
    pub date: String,
    /// Vote categories to sum. Empty means: sum every category present.
    pub vote_keys: Vec<String>,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            user_id: "user_id".into(),
            business_id: "business_id".into(),
            stars: "stars".into(),
            votes: "votes".into(),
            text: "text".into(),
            date: "date".into(),
            vote_keys: Vec::new(),
        }
    }
}

impl FieldMap {
    /// Load a mapping from a plain-text `key = value` file. Unknown keys are
    /// rejected. `vote_keys` takes a comma-separated list.
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = FieldMap::default();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "user_id" => map.user_id = value.into(),
                "business_id" => map.business_id = value.into(),
                "stars" => map.stars = value.into(),
                "votes" => map.votes = value.into(),
                "text" => map.text = value.into(),
                "date" => map.date = value.into(),
                "vote_keys" => {
                    map.vote_keys = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                }
                other => {
                    return Err(Error::parse(path, lineno + 1, format!("unknown key `{other}`")))
                }
            }
        }
        Ok(map)
    }
}

/// Strict fails on the first malformed line; lenient skips and counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

/// Per-load bookkeeping (lenient mode only).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub skipped_lines: usize,
}

/// Load a JSON-lines review file with the default field map, strict mode.
pub fn load_reviews(path: &Path) -> Result<ReviewSet> {
    load_reviews_with(path, &FieldMap::default(), ParseMode::Strict).map(|(set, _)| set)
}

/// Load a JSON-lines review file.
///
/// Each line must be one JSON object. The votes field may be an object of
/// named counts (summed according to `fields.vote_keys`) or a plain
/// non-negative number.
pub fn load_reviews_with(
    path: &Path,
    fields: &FieldMap,
    mode: ParseMode,
) -> Result<(ReviewSet, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut reviews = Vec::new();
    let mut report = LoadReport::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_review_line(&line, fields) {
            Ok(review) => reviews.push(review),
            Err(message) => match mode {
                ParseMode::Strict => return Err(Error::parse(path, lineno, message)),
                ParseMode::Lenient => {
                    log::warn!("{}:{lineno}: skipped review: {message}", path.display());
                    report.skipped_lines += 1;
                }
            },
        }
    }
    Ok((ReviewSet::index(reviews), report))
}

fn parse_review_line(line: &str, fields: &FieldMap) -> std::result::Result<Review, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    let obj = value.as_object().ok_or("line is not a json object")?;

    let get = |key: &str| obj.get(key).ok_or_else(|| format!("missing field `{key}`"));

    let user_id = get(&fields.user_id)?
        .as_str()
        .ok_or("user_id is not a string")?
        .to_string();
    let business_id = get(&fields.business_id)?
        .as_str()
        .ok_or("business_id is not a string")?
        .to_string();
    let stars = get(&fields.stars)?.as_f64().ok_or("stars is not a number")?;
    let votes = parse_votes(get(&fields.votes)?, &fields.vote_keys)?;
    let text = get(&fields.text)?
        .as_str()
        .ok_or("text is not a string")?
        .to_string();
    let date_str = get(&fields.date)?.as_str().ok_or("date is not a string")?;
    let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d")
        .map_err(|e| format!("bad date `{date_str}`: {e}"))?;

    let review = Review {
        user_id,
        business_id,
        stars,
        votes,
        text,
        date,
    };
    review.validate()?;
    Ok(review)
}

fn parse_votes(
    value: &serde_json::Value,
    vote_keys: &[String],
) -> std::result::Result<u64, String> {
    match value {
        serde_json::Value::Number(n) => n
            .as_u64()
            .ok_or_else(|| format!("votes {n} is not a non-negative integer")),
        serde_json::Value::Object(map) => {
            let mut total = 0u64;
            if vote_keys.is_empty() {
                for (k, v) in map {
                    total += v
                        .as_u64()
                        .ok_or_else(|| format!("vote category `{k}` is not a non-negative integer"))?;
                }
            } else {
                for key in vote_keys {
                    if let Some(v) = map.get(key) {
                        total += v.as_u64().ok_or_else(|| {
                            format!("vote category `{key}` is not a non-negative integer")
                        })?;
                    }
                }
            }
            Ok(total)
        }
        other => Err(format!("votes is neither a number nor an object: {other}")),
    }
}

/// The review serving as a business's description: maximal votes, ties broken
/// by earliest date, then smallest user_id.
pub fn select_description<'a>(set: &'a ReviewSet, business_id: &str) -> Result<&'a Review> {
    let positions = set
        .business_reviews(business_id)
        .ok_or_else(|| Error::NotFound(format!("business `{business_id}` has no reviews")))?;
    let best = positions
        .iter()
        .map(|&i| &set.reviews[i])
        .min_by(|a, b| {
            b.votes
                .cmp(&a.votes) // max votes first
                .then(a.date.cmp(&b.date)) // then earliest date
                .then(a.user_id.cmp(&b.user_id)) // then smallest user
        })
        .expect("non-empty positions");
    Ok(best)
}

/// Split parameters. Fractions refer to the review-count-descending business
/// ranking: test set 1 takes the bottom `test1_frac`, test set 2 the
/// `(test2_band.0, test2_band.1]` band from the top. A business enters its
/// test set only if at least one of its reviews has `votes >= min_votes`;
/// otherwise its reviews stay in the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub test1_frac: f64,
    pub test2_band: (f64, f64),
    pub min_votes: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self {
            test1_frac: 0.15,
            test2_band: (0.05, 0.10),
            min_votes: 5,
        }
    }
}

impl SplitParams {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.test2_band;
        if !(self.test1_frac > 0.0 && self.test1_frac < 1.0) {
            return Err(Error::Parameter(format!(
                "test1_frac {} outside (0,1)",
                self.test1_frac
            )));
        }
        if !(lo >= 0.0 && lo < hi && hi < 1.0) {
            return Err(Error::Parameter(format!(
                "test2_band ({lo},{hi}) must satisfy 0 <= lo < hi < 1"
            )));
        }
        if hi + self.test1_frac > 1.0 {
            return Err(Error::Parameter(format!(
                "test bands overlap: test2 reaches {hi} from the top while test1 covers the bottom {}",
                self.test1_frac
            )));
        }
        Ok(())
    }
}

/// Review positions of each part, each sorted ascending. The three parts
/// partition `0..set.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test1: Vec<usize>,
    pub test2: Vec<usize>,
}

/// Materialized cold-start split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: ReviewSet,
    pub test1: ReviewSet,
    pub test2: ReviewSet,
}

/// Compute the split as review positions without materializing sets.
pub fn split_indices(set: &ReviewSet, params: &SplitParams) -> Result<SplitIndices> {
    params.validate()?;
    if set.is_empty() {
        return Err(Error::Parameter("cannot split an empty review set".into()));
    }

    // Review-count-descending ranking, ties by business_id ascending.
    let mut ranking: Vec<(&str, usize)> = set
        .by_business
        .iter()
        .map(|(id, positions)| (id.as_str(), positions.len()))
        .collect();
    ranking.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let n = ranking.len();
    let band_lo = (n as f64 * params.test2_band.0).floor() as usize;
    let band_hi = (n as f64 * params.test2_band.1).floor() as usize;
    let bottom = (n as f64 * params.test1_frac).floor() as usize;

    let eligible = |business: &str| {
        set.by_business[business]
            .iter()
            .any(|&i| set.reviews[i].votes >= params.min_votes)
    };

    let mut test1_businesses = BTreeSet::new();
    for &(id, _) in &ranking[n - bottom..] {
        if eligible(id) {
            test1_businesses.insert(id);
        }
    }
    let mut test2_businesses = BTreeSet::new();
    for &(id, _) in &ranking[band_lo..band_hi] {
        if eligible(id) {
            test2_businesses.insert(id);
        }
    }

    let mut out = SplitIndices::default();
    for (i, r) in set.reviews.iter().enumerate() {
        if test1_businesses.contains(r.business_id.as_str()) {
            out.test1.push(i);
        } else if test2_businesses.contains(r.business_id.as_str()) {
            out.test2.push(i);
        } else {
            out.train.push(i);
        }
    }
    Ok(out)
}

/// Split the corpus into train / test1 / test2 review sets.
pub fn split_dataset(set: &ReviewSet, params: &SplitParams) -> Result<Split> {
    let idx = split_indices(set, params)?;
    let split = Split {
        train: set.subset(&idx.train),
        test1: set.subset(&idx.test1),
        test2: set.subset(&idx.test2),
    };
    debug_assert!(split.check_disjoint());
    Ok(split)
}

impl Split {
    /// True when no business id is shared between train and either test set,
    /// nor between the two test sets.
    pub fn check_disjoint(&self) -> bool {
        let train: BTreeSet<_> = self.train.by_business.keys().collect();
        let t1: BTreeSet<_> = self.test1.by_business.keys().collect();
        let t2: BTreeSet<_> = self.test2.by_business.keys().collect();
        train.is_disjoint(&t1) && train.is_disjoint(&t2) && t1.is_disjoint(&t2)
    }
}

/// Histogram axis for [`review_distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    User,
    Business,
}

/// Per-entity review counts, sorted by count descending then id ascending.
pub fn review_distribution(set: &ReviewSet, axis: Axis) -> Vec<(String, usize)> {
    let index = match axis {
        Axis::User => &set.by_user,
        Axis::Business => &set.by_business,
    };
    let mut rows: Vec<(String, usize)> = index
        .iter()
        .map(|(id, positions)| (id.clone(), positions.len()))
        .collect();
    rows.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows
}

/// Write a histogram as CSV with header `entity_id,count`.
pub fn write_histogram_csv(rows: &[(String, usize)], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["entity_id", "count"])
        .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
    for (id, count) in rows {
        w.write_record([id.as_str(), &count.to_string()])
            .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write split manifests as one review position per line.
pub fn write_index_manifest(positions: &[usize], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in positions {
        writeln!(w, "{p}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a manifest written by [`write_index_manifest`].
pub fn read_index_manifest(path: &Path) -> Result<Vec<usize>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(path, i + 1, format!("bad index: {e}")))
        })
        .collect()
}
