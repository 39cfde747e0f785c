//! Post-processing debiasing methods. Each takes a store and a resolved
//! lexicon and returns a new store with the same vocabulary.

pub mod conceptor;
pub mod hard;
pub mod softweat;

use serde::{Deserialize, Serialize};

pub use conceptor::{apply_negated, compute_conceptor, conceptor_debias, correlation_matrix, Conceptor};
pub use hard::{equalize, hard_debias, identify_bias_subspace, neutralize, BiasSubspace, HardDebiasOutcome};
pub use softweat::{softweat_debias, SoftWeatConfig, SoftWeatOutcome, SoftWeatPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DebiasMethod {
    Hard,
    Softweat,
    Conceptor,
}

impl DebiasMethod {
    pub fn name(self) -> &'static str {
        match self {
            DebiasMethod::Hard => "hard",
            DebiasMethod::Softweat => "softweat",
            DebiasMethod::Conceptor => "conceptor",
        }
    }
}

/// Deterministic sign for an eigen/singular vector: largest-magnitude
/// component positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
