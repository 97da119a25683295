//! Description pre-processing: tokenization, the word-embedding table and
//! padded token-index sequences.
//!
//! Unknown words are resolved against the pretrained vocabulary by
//! Levenshtein distance (threshold 2); words with no close match get a fresh
//! row drawn uniformly from [-0.25, 0.25]. Every document is padded with the
//! reserved all-zeros row 0 up to the corpus-wide maximum length.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::binio;
use crate::error::{Error, Result};

/// Row index reserved for padding; its vector is all zeros and never trains.
pub const PAD_ROW: u32 = 0;

/// How a vocabulary entry obtained its row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenOrigin {
    /// Loaded from the pretrained vector file.
    Pretrained,
    /// Mapped onto a pretrained row via edit distance <= 2.
    Alias,
    /// Fresh randomly initialized row.
    Random,
}

/// Counts of vocabulary entries by origin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OriginCounts {
    pub pretrained: usize,
    pub alias: usize,
    pub random: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct VocabEntry {
    row: u32,
    origin: TokenOrigin,
}

/// Token -> row lookup over a dense row-major matrix of embedding vectors.
///
/// Row 0 is the padding vector. Rows loaded from file keep their file order
/// starting at row 1; fallback rows are appended in resolution order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    rows: Vec<f64>, // n_rows * dim
    vocab: HashMap<String, VocabEntry>,
    /// Pretrained tokens bucketed by character length, each bucket sorted;
    /// candidate pool for the edit-distance fallback.
    length_buckets: BTreeMap<usize, Vec<String>>,
}

impl EmbeddingTable {
    /// Empty table holding only the padding row.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("embedding dim must be >= 1".into()));
        }
        Ok(Self {
            dim,
            rows: vec![0.0; dim],
            vocab: HashMap::new(),
            length_buckets: BTreeMap::new(),
        })
    }

    /// Table with the given pretrained rows (fixtures, synthetic corpora).
    pub fn from_rows(dim: usize, entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut table = Self::new(dim)?;
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Parameter(format!(
                    "row for `{token}` has length {}, expected {dim}",
                    vector.len()
                )));
            }
            if table.vocab.contains_key(&token) {
                return Err(Error::Parameter(format!("duplicate token `{token}`")));
            }
            table.insert_pretrained(token, &vector);
        }
        for bucket in table.length_buckets.values_mut() {
            bucket.sort_unstable();
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn row(&self, index: u32) -> &[f64] {
        let i = index as usize * self.dim;
        &self.rows[i..i + self.dim]
    }

    pub(crate) fn row_mut(&mut self, index: u32) -> &mut [f64] {
        let i = index as usize * self.dim;
        &mut self.rows[i..i + self.dim]
    }

    /// Row index for a token already in the vocabulary.
    pub fn lookup(&self, token: &str) -> Option<u32> {
        self.vocab.get(token).map(|e| e.row)
    }

    pub fn token_origin(&self, token: &str) -> Option<TokenOrigin> {
        self.vocab.get(token).map(|e| e.origin)
    }

    pub fn origin_counts(&self) -> OriginCounts {
        let mut counts = OriginCounts::default();
        for entry in self.vocab.values() {
            match entry.origin {
                TokenOrigin::Pretrained => counts.pretrained += 1,
                TokenOrigin::Alias => counts.alias += 1,
                TokenOrigin::Random => counts.random += 1,
            }
        }
        counts
    }

    fn push_row(&mut self, vector: &[f64]) -> u32 {
        debug_assert_eq!(vector.len(), self.dim);
        let row = self.num_rows() as u32;
        self.rows.extend_from_slice(vector);
        row
    }

    fn insert_pretrained(&mut self, token: String, vector: &[f64]) {
        let row = self.push_row(vector);
        self.length_buckets
            .entry(token.chars().count())
            .or_default()
            .push(token.clone());
        self.vocab.insert(
            token,
            VocabEntry {
                row,
                origin: TokenOrigin::Pretrained,
            },
        );
    }

    /// Closest pretrained token within edit distance 2, if any. Ties are
    /// broken by smallest distance, then lexicographically smallest token.
    fn closest_pretrained(&self, token: &str) -> Option<(&str, usize)> {
        let len = token.chars().count();
        let mut best: Option<(usize, &str)> = None;
        let lo = len.saturating_sub(2);
        for (_, bucket) in self.length_buckets.range(lo..=len + 2) {
            for candidate in bucket {
                if let Some(d) = bounded_edit_distance(token, candidate, 2) {
                    let better = match best {
                        None => true,
                        Some((bd, bt)) => d < bd || (d == bd && candidate.as_str() < bt),
                    };
                    if better {
                        best = Some((d, candidate));
                    }
                }
            }
        }
        best.map(|(d, t)| (t, d))
    }
}

/// Lowercase and split on any non-alphanumeric character, dropping empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Load a pretrained vector file: one token followed by `dim` decimal reals
/// per line, whitespace-separated. Duplicate tokens keep the first row.
pub fn load_embeddings(path: &Path, dim: usize) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut table = EmbeddingTable::new(dim)?;
    let mut vector = vec![0.0f64; dim];
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts
            .next()
            .ok_or_else(|| Error::parse(path, lineno, "empty line"))?;
        let mut count = 0usize;
        for part in parts {
            if count < dim {
                vector[count] = part.parse::<f64>().map_err(|e| {
                    Error::parse(path, lineno, format!("bad component `{part}`: {e}"))
                })?;
            }
            count += 1;
        }
        if count != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {dim} components, found {count}"),
            ));
        }
        if table.vocab.contains_key(token) {
            log::warn!(
                "{}:{lineno}: duplicate token `{token}`, keeping first",
                path.display()
            );
            continue;
        }
        table.insert_pretrained(token.to_string(), &vector);
    }
    // Canonical bucket order: lookups scan candidates in sorted order and the
    // on-disk form round-trips to an identical table.
    for bucket in table.length_buckets.values_mut() {
        bucket.sort_unstable();
    }
    Ok(table)
}

/// Levenshtein distance with unit-cost insert/delete/substitute.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    // Two-row DP over the shorter string.
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Banded Levenshtein: `Some(d)` when `d <= max`, `None` otherwise.
/// Exact within the threshold; cells outside the |i-j| <= max band cannot
/// belong to a path of cost <= max.
pub fn bounded_edit_distance(a: &str, b: &str, max: usize) -> Option<usize> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    if a.is_empty() || b.is_empty() {
        let d = a.len().max(b.len());
        return (d <= max).then_some(d);
    }
    let big = max + 1;
    let mut prev: Vec<usize> = (0..=b.len())
        .map(|j| if j <= max { j } else { big })
        .collect();
    let mut cur = vec![big; b.len() + 1];
    for i in 1..=a.len() {
        let lo = i.saturating_sub(max).max(1);
        let hi = (i + max).min(b.len());
        cur[lo - 1] = if lo == 1 { i } else { big };
        let mut row_min = cur[lo - 1];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let del = if prev[j] < big { prev[j] + 1 } else { big };
            let ins = if cur[j - 1] < big { cur[j - 1] + 1 } else { big };
            cur[j] = sub.min(del).min(ins).min(big);
            row_min = row_min.min(cur[j]);
        }
        if hi < b.len() {
            cur[hi + 1] = big;
        }
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[b.len()];
    (d <= max).then_some(d)
}

/// Resolve a token to a table row, extending the table when needed:
/// vocabulary hit, else closest pretrained token within edit distance 2
/// (recorded as an alias), else a fresh row uniform in [-0.25, 0.25].
pub fn resolve_token(table: &mut EmbeddingTable, token: &str, rng: &mut impl Rng) -> Result<u32> {
    if token.is_empty() {
        return Err(Error::Parameter("cannot resolve an empty token".into()));
    }
    if let Some(row) = table.lookup(token) {
        return Ok(row);
    }
    if let Some((closest, _)) = table.closest_pretrained(token) {
        let row = table.vocab[closest].row;
        table.vocab.insert(
            token.to_string(),
            VocabEntry {
                row,
                origin: TokenOrigin::Alias,
            },
        );
        return Ok(row);
    }
    let vector: Vec<f64> = (0..table.dim)
        .map(|_| rng.random_range(-0.25..=0.25))
        .collect();
    let row = table.push_row(&vector);
    table.vocab.insert(
        token.to_string(),
        VocabEntry {
            row,
            origin: TokenOrigin::Random,
        },
    );
    Ok(row)
}

/// A description as embedding-row indexes, padded to the corpus maximum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub business_id: String,
    pub token_ids: Vec<u32>,
    pub true_length: usize,
}

/// Options for [`prepare_docs`]. `max_len = None` reproduces the plain
/// longest-description rule; the default caps documents at 1000 tokens so a
/// single pathological review cannot blow up the padded corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepOptions {
    pub max_len: Option<usize>,
}

impl Default for PrepOptions {
    fn default() -> Self {
        Self {
            max_len: Some(1000),
        }
    }
}

/// Tokenize and resolve every description, then pad all documents to the
/// length of the longest one. Resolution runs in document order, token order,
/// so random fallback rows are deterministic given the rng seed.
pub fn prepare_docs(
    descriptions: &[(String, String)],
    table: &mut EmbeddingTable,
    rng: &mut impl Rng,
    options: &PrepOptions,
) -> Result<Vec<TokenizedDoc>> {
    if let Some(0) = options.max_len {
        return Err(Error::Parameter("max_len must be >= 1".into()));
    }
    let mut docs: Vec<TokenizedDoc> = Vec::with_capacity(descriptions.len());
    let mut empty: Vec<&str> = Vec::new();
    for (business_id, text) in descriptions {
        let mut tokens = tokenize(text);
        if tokens.is_empty() {
            empty.push(business_id);
            continue;
        }
        if let Some(cap) = options.max_len {
            tokens.truncate(cap);
        }
        let mut token_ids = Vec::with_capacity(tokens.len());
        for token in &tokens {
            token_ids.push(resolve_token(table, token, rng)?);
        }
        docs.push(TokenizedDoc {
            business_id: business_id.clone(),
            true_length: token_ids.len(),
            token_ids,
        });
    }
    if !empty.is_empty() {
        empty.sort_unstable();
        return Err(Error::Parameter(format!(
            "descriptions with no tokens for businesses: {}",
            empty.join(", ")
        )));
    }
    let padded_len = docs.iter().map(|d| d.true_length).max().unwrap_or(0);
    for doc in &mut docs {
        doc.token_ids.resize(padded_len, PAD_ROW);
    }
    Ok(docs)
}

const DOCS_MAGIC: &[u8; 4] = b"CRDS";
const DOCS_VERSION: u32 = 1;

pub(crate) fn encode_table(w: &mut impl Write, table: &EmbeddingTable) -> Result<()> {
    binio::write_u32(w, table.dim as u32)?;
    binio::write_u64(w, table.num_rows() as u64)?;
    binio::write_f64_slice(w, &table.rows)?;
    let mut entries: Vec<(&String, &VocabEntry)> = table.vocab.iter().collect();
    entries.sort_unstable_by_key(|(token, _)| token.as_str());
    binio::write_u64(w, entries.len() as u64)?;
    for (token, entry) in entries {
        binio::write_string(w, token)?;
        binio::write_u32(w, entry.row)?;
        binio::write_u8(
            w,
            match entry.origin {
                TokenOrigin::Pretrained => 0,
                TokenOrigin::Alias => 1,
                TokenOrigin::Random => 2,
            },
        )?;
    }
    Ok(())
}

pub(crate) fn decode_table(r: &mut impl Read) -> Result<EmbeddingTable> {
    let dim = binio::read_u32(r)? as usize;
    if dim == 0 {
        return Err(Error::Contract("table dim must be >= 1".into()));
    }
    let n_rows = binio::read_u64(r)? as usize;
    let rows = binio::read_f64_vec(r, n_rows * dim)?;
    let n_entries = binio::read_u64(r)? as usize;
    let mut vocab = HashMap::with_capacity(n_entries);
    let mut length_buckets: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for _ in 0..n_entries {
        let token = binio::read_string(r)?;
        let row = binio::read_u32(r)?;
        let origin = match binio::read_u8(r)? {
            0 => TokenOrigin::Pretrained,
            1 => TokenOrigin::Alias,
            2 => TokenOrigin::Random,
            other => return Err(Error::Contract(format!("unknown token origin tag {other}"))),
        };
        if origin == TokenOrigin::Pretrained {
            length_buckets
                .entry(token.chars().count())
                .or_default()
                .push(token.clone());
        }
        vocab.insert(token, VocabEntry { row, origin });
    }
    // Entries arrive token-sorted, which keeps the buckets sorted too; sort
    // anyway so lookup determinism never depends on file order.
    for bucket in length_buckets.values_mut() {
        bucket.sort_unstable();
    }
    Ok(EmbeddingTable {
        dim,
        rows,
        vocab,
        length_buckets,
    })
}

/// Persist prepared documents together with the (possibly extended) table.
pub fn save_docs(path: &Path, docs: &[TokenizedDoc], table: &EmbeddingTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    binio::write_header(&mut w, DOCS_MAGIC, DOCS_VERSION)?;
    encode_table(&mut w, table)?;
    let padded_len = docs.first().map(|d| d.token_ids.len()).unwrap_or(0);
    binio::write_u64(&mut w, docs.len() as u64)?;
    binio::write_u32(&mut w, padded_len as u32)?;
    for doc in docs {
        binio::write_string(&mut w, &doc.business_id)?;
        binio::write_u32(&mut w, doc.true_length as u32)?;
        for id in &doc.token_ids {
            binio::write_u32(&mut w, *id)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load a file written by [`save_docs`].
pub fn load_docs(path: &Path) -> Result<(Vec<TokenizedDoc>, EmbeddingTable)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    binio::expect_header(&mut r, DOCS_MAGIC, DOCS_VERSION)?;
    let table = decode_table(&mut r)?;
    let n_docs = binio::read_u64(&mut r)? as usize;
    let padded_len = binio::read_u32(&mut r)? as usize;
    let mut docs = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let business_id = binio::read_string(&mut r)?;
        let true_length = binio::read_u32(&mut r)? as usize;
        let mut token_ids = Vec::with_capacity(padded_len);
        for _ in 0..padded_len {
            token_ids.push(binio::read_u32(&mut r)?);
        }
        docs.push(TokenizedDoc {
            business_id,
            token_ids,
            true_length,
        });
    }
    Ok((docs, table))
}
