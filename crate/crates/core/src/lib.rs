//! Multiclass bias measurement and removal for pre-trained word embeddings.
//!
//! The crate is organised around an immutable [`EmbeddingStore`]:
//!
//! - [`embedding`] loads and saves GloVe text and word2vec binary files.
//! - [`lexicon`] describes a bias class (subclasses with target terms,
//!   equality sets and attribute sets) and resolves it against a store.
//! - [`metrics`] holds the cosine-geometry measures: WEAT, MAC, analogy
//!   scoring and nearest neighbours.
//! - [`rnsb`] trains a sentiment classifier and measures relative negative
//!   sentiment bias, with a Welch t-test for comparing runs.
//! - [`debias`] implements hard debiasing, SoftWEAT and conceptor debiasing.
//! - [`report`] and [`cli`] bundle everything into audit reports and the
//!   `fairvec` command line.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod debias;
pub mod embedding;
pub mod error;
pub mod lexicon;
pub(crate) mod linalg;
pub mod metrics;
pub mod report;
pub mod rnsb;
pub mod synthetic;

pub use embedding::{EmbeddingFormat, EmbeddingStore, WordVector};
pub use error::{Error, Result};
pub use lexicon::{BiasLexicon, ResolvedLexicon};
