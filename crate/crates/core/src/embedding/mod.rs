//! Dense word-embedding storage and the two on-disk formats it is read from.

mod glove;
mod word2vec;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub use glove::{load_glove_text, save_glove_text};
pub use word2vec::{load_word2vec_binary, save_word2vec_binary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    /// `<token> <f1> ... <fd>` per line.
    GloveText,
    /// `<n> <d>\n` header followed by `token ` + d little-endian f32 values.
    Word2vecBinary,
}

impl EmbeddingFormat {
    pub fn name(self) -> &'static str {
        match self {
            EmbeddingFormat::GloveText => "glove-text",
            EmbeddingFormat::Word2vecBinary => "word2vec-binary",
        }
    }
}

/// Vocabulary plus an `n × d` row-major matrix of finite values.
///
/// Stores are never mutated once built; every transform in this crate
/// returns a new store with the same vocabulary in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    dim: usize,
    normalized: bool,
    zero_rows: Vec<bool>,
    duplicates_dropped: usize,
}

/// A borrowed row of a store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordVector<'a> {
    pub word: &'a str,
    pub index: usize,
    pub values: &'a [f64],
}

/// Incremental construction used by the loaders. Duplicate tokens keep
/// their first vector.
#[derive(Debug)]
pub struct StoreBuilder {
    store: EmbeddingStore,
}

impl StoreBuilder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be at least 1".into()));
        }
        Ok(Self {
            store: EmbeddingStore {
                words: Vec::new(),
                index: HashMap::new(),
                data: Vec::new(),
                dim,
                normalized: false,
                zero_rows: Vec::new(),
                duplicates_dropped: 0,
            },
        })
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        let mut b = Self::new(dim)?;
        b.store.words.reserve(capacity);
        b.store.index.reserve(capacity);
        b.store.data.reserve(capacity * dim);
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.store.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.words.is_empty()
    }

    /// Returns `Ok(false)` when the token was already present.
    pub fn push(&mut self, word: impl Into<String>, values: &[f64]) -> Result<bool> {
        let word = word.into();
        if values.len() != self.store.dim {
            return Err(Error::DimensionMismatch {
                expected: self.store.dim,
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite component {bad} in vector for {word:?}"
            )));
        }
        if self.store.index.contains_key(&word) {
            self.store.duplicates_dropped += 1;
            return Ok(false);
        }
        let idx = self.store.words.len();
        self.store.index.insert(word.clone(), idx);
        self.store.words.push(word);
        self.store.data.extend_from_slice(values);
        self.store.zero_rows.push(false);
        Ok(true)
    }

    pub fn finish(self) -> EmbeddingStore {
        self.store
    }
}

impl EmbeddingStore {
    /// Build a store from `(word, vector)` pairs, keeping first occurrences.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut b = StoreBuilder::new(dim)?;
        for (w, v) in rows {
            b.push(w, &v)?;
        }
        Ok(b.finish())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Number of repeated tokens skipped while loading.
    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Exact, case-sensitive lookup.
    pub fn vector(&self, word: &str) -> Option<WordVector<'_>> {
        self.index_of(word).map(|index| WordVector {
            word: &self.words[index],
            index,
            values: self.row(index),
        })
    }

    /// True when the row was all zeros at normalization time.
    pub fn is_zero_row(&self, index: usize) -> bool {
        self.zero_rows[index]
    }

    pub fn zero_row_count(&self) -> usize {
        self.zero_rows.iter().filter(|z| **z).count()
    }

    /// Scale every nonzero row to unit Euclidean norm. Zero rows are kept
    /// and flagged.
    pub fn normalize_all(&self) -> EmbeddingStore {
        let mut out = self.clone();
        let dim = self.dim;
        for (i, row) in out.data.chunks_exact_mut(dim).enumerate() {
            let n = linalg::norm(row);
            if n == 0.0 {
                out.zero_rows[i] = true;
            } else {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        out.normalized = true;
        out
    }

    pub(crate) fn row_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn set_normalized(&mut self, normalized: bool) {
        self.normalized = normalized;
    }
}

pub fn load(path: impl AsRef<Path>, format: EmbeddingFormat, limit: Option<usize>) -> Result<EmbeddingStore> {
    match format {
        EmbeddingFormat::GloveText => load_glove_text(path, limit),
        EmbeddingFormat::Word2vecBinary => load_word2vec_binary(path, limit),
    }
}

pub fn save(store: &EmbeddingStore, path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<()> {
    match format {
        EmbeddingFormat::GloveText => save_glove_text(store, path),
        EmbeddingFormat::Word2vecBinary => save_word2vec_binary(store, path),
    }
}

fn check_token(word: &str) -> Result<()> {
    if word.is_empty() || word.contains([' ', '\n', '\r']) {
        return Err(Error::InvalidInput(format!(
            "token {word:?} cannot be written: empty or contains whitespace separators"
        )));
    }
    Ok(())
}

pub(crate) fn log_summary(path: &Path, format: EmbeddingFormat, store: &EmbeddingStore) {
    log::info!(
        "embedding loaded path={} format={} words={} dim={} dropped_duplicates={}",
        path.display(),
        format.name(),
        store.len(),
        store.dim(),
        store.duplicates_dropped()
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_scales_to_unit_and_flags_zero_rows() {
        let s = EmbeddingStore::from_rows(2, vec![("a", vec![3.0, 4.0]), ("z", vec![0.0, 0.0])]).unwrap();
        let n = s.normalize_all();
        assert_eq!(n.row(0), &[0.6, 0.8]);
        assert_eq!(n.row(1), &[0.0, 0.0]);
        assert!(n.is_zero_row(1));
        assert!(!n.is_zero_row(0));
        assert!(n.is_normalized());
        assert!(!s.is_normalized());
    }

    #[test]
    fn lookup_is_case_sensitive() {
        let s = EmbeddingStore::from_rows(2, vec![("Church", vec![1.0, 0.0])]).unwrap();
        assert!(s.vector("Church").is_some());
        assert!(s.vector("church").is_none());
        let v = s.vector("Church").unwrap();
        assert_eq!(v.values, &[1.0, 0.0]);
        assert_eq!(v.index, 0);
    }

    #[test]
    fn builder_keeps_first_duplicate_and_rejects_bad_rows() {
        let mut b = StoreBuilder::new(2).unwrap();
        assert!(b.push("a", &[1.0, 2.0]).unwrap());
        assert!(!b.push("a", &[9.0, 9.0]).unwrap());
        assert!(b.push("b", &[1.0]).is_err());
        assert!(b.push("c", &[f64::NAN, 0.0]).is_err());
        let s = b.finish();
        assert_eq!(s.len(), 1);
        assert_eq!(s.row(0), &[1.0, 2.0]);
        assert_eq!(s.duplicates_dropped(), 1);
        assert!(StoreBuilder::new(0).is_err());
    }
}
