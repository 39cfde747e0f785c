//! Relative negative sentiment bias: a logistic sentiment classifier is
//! trained on the embedding, identity terms are scored for negative
//! sentiment, and the divergence of the resulting distribution from
//! uniform is reported.

mod classifier;
mod ttest;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::lexicon::{lookup_term, ResolvedLexicon};

pub use classifier::{
    fit_logistic, loss_gradient, negative_probability, regularized_log_loss, sigmoid, train_sentiment_classifier,
    LogisticModel, TrainingConfig, MIN_WORDS_PER_CLASS,
};
pub use ttest::{one_tailed_t_test, TTestResult};

/// Positive and negative sentiment words, lowercased and disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    positive: Vec<String>,
    negative: Vec<String>,
    surface: HashMap<String, String>,
}

impl SentimentLexicon {
    /// Words appearing in both lists are removed from both.
    pub fn new<S: AsRef<str>>(positive: &[S], negative: &[S]) -> Result<Self> {
        let mut surface = HashMap::new();
        let mut canon = |words: &[S]| -> Vec<String> {
            let mut seen = HashSet::new();
            words
                .iter()
                .map(|w| w.as_ref().trim())
                .filter(|w| !w.is_empty())
                .filter_map(|w| {
                    let lower = w.to_lowercase();
                    if lower != w {
                        surface.entry(lower.clone()).or_insert_with(|| w.to_string());
                    }
                    seen.insert(lower.clone()).then_some(lower)
                })
                .collect()
        };
        let pos = canon(positive);
        let neg = canon(negative);
        let pos_set: HashSet<&String> = pos.iter().collect();
        let overlap: HashSet<String> = neg.iter().filter(|w| pos_set.contains(w)).cloned().collect();
        if !overlap.is_empty() {
            log::warn!("{} words appear in both sentiment lists and were removed", overlap.len());
        }
        let positive: Vec<String> = pos.into_iter().filter(|w| !overlap.contains(w)).collect();
        let negative: Vec<String> = neg.into_iter().filter(|w| !overlap.contains(w)).collect();
        if positive.is_empty() || negative.is_empty() {
            return Err(Error::InvalidInput("sentiment lexicon needs positive and negative words".into()));
        }
        Ok(Self {
            positive,
            negative,
            surface,
        })
    }

    /// Read two word-per-line files; empty lines and lines starting with
    /// `;` are skipped.
    pub fn load(positive: impl AsRef<Path>, negative: impl AsRef<Path>) -> Result<Self> {
        let read = |p: &Path| -> Result<Vec<String>> {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(parse_word_list(&text))
        };
        Self::new(&read(positive.as_ref())?, &read(negative.as_ref())?)
    }

    /// The general-purpose lists bundled with the crate.
    pub fn bundled() -> Self {
        Self::new(
            &parse_word_list(include_str!("../../data/sentiment/positive.txt")),
            &parse_word_list(include_str!("../../data/sentiment/negative.txt")),
        )
        .expect("bundled sentiment lists are valid")
    }

    pub fn positive(&self) -> &[String] {
        &self.positive
    }

    pub fn negative(&self) -> &[String] {
        &self.negative
    }

    /// Row indices of the in-vocabulary positive and negative words.
    pub fn resolve(&self, store: &EmbeddingStore) -> (Vec<usize>, Vec<usize>) {
        let find = |ws: &[String]| -> Vec<usize> {
            let mut seen = HashSet::new();
            ws.iter()
                .filter_map(|w| lookup_term(store, w, self.surface.get(w).map_or(w, String::as_str)))
                .map(|t| t.index)
                .filter(|i| seen.insert(*i))
                .collect()
        };
        (find(&self.positive), find(&self.negative))
    }
}

fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with(';'))
        .map(str::to_string)
        .collect()
}

/// How identity-term probabilities become the distribution compared to uniform.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionMode {
    /// One entry per subclass: the mean probability over its target terms.
    #[default]
    PerSubclass,
    /// One entry per target term.
    PerTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubclassDistribution {
    pub per_subclass_negative_prob: Vec<(String, f64)>,
    pub distribution: Vec<(String, f64)>,
}

pub fn subclass_distribution(
    model: &LogisticModel,
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    mode: DistributionMode,
) -> Result<SubclassDistribution> {
    let mut per_subclass = Vec::with_capacity(lexicon.subclasses.len());
    let mut per_term = Vec::new();
    for s in &lexicon.subclasses {
        if s.targets.is_empty() {
            return Err(Error::EmptySet(format!("subclass {:?} has no target terms", s.name)));
        }
        let mut sum = 0.0;
        for t in &s.targets {
            let p = negative_probability(model, store.row(t.index))?;
            sum += p;
            per_term.push((format!("{}/{}", s.name, t.word), p));
        }
        per_subclass.push((s.name.clone(), sum / s.targets.len() as f64));
    }
    let raw = match mode {
        DistributionMode::PerSubclass => &per_subclass,
        DistributionMode::PerTerm => &per_term,
    };
    let total: f64 = raw.iter().map(|(_, p)| p).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all negative-sentiment probabilities are zero".into()));
    }
    let distribution = raw.iter().map(|(k, p)| (k.clone(), p / total)).collect();
    Ok(SubclassDistribution {
        per_subclass_negative_prob: per_subclass,
        distribution,
    })
}

/// `KL(P ‖ U)` in nats, with `0 · ln 0 = 0`.
pub fn kl_from_uniform(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::InvalidInput("empty distribution".into()));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidInput("distribution entries must be finite and non-negative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("distribution sums to {total}, not 1")));
    }
    let k = p.len() as f64;
    let kl: f64 = p.iter().filter(|x| **x > 0.0).map(|x| x * (x * k).ln()).sum();
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnsbConfig {
    pub runs: usize,
    pub base_seed: u64,
    pub training: TrainingConfig,
    pub mode: DistributionMode,
}

impl Default for RnsbConfig {
    fn default() -> Self {
        Self {
            runs: 20,
            base_seed: 0,
            training: TrainingConfig::default(),
            mode: DistributionMode::PerSubclass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnsbRun {
    pub seed: u64,
    pub kl: f64,
    pub test_accuracy: f64,
    pub converged: bool,
    pub per_subclass_negative_prob: Vec<f64>,
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnsbResult {
    /// Mean KL over runs.
    pub kl: f64,
    /// Sample standard deviation of the per-run KL (0 for a single run).
    pub kl_std: f64,
    pub runs: usize,
    pub per_subclass_negative_prob: Vec<(String, f64)>,
    pub distribution: Vec<(String, f64)>,
    pub mean_test_accuracy: f64,
    pub config: RnsbConfig,
    pub per_run: Vec<RnsbRun>,
}

impl RnsbResult {
    pub fn per_run_kl(&self) -> Vec<f64> {
        self.per_run.iter().map(|r| r.kl).collect()
    }
}

fn run_once(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    sentiment: &SentimentLexicon,
    seed: u64,
    config: &RnsbConfig,
) -> Result<(RnsbRun, SubclassDistribution)> {
    let model = train_sentiment_classifier(store, sentiment, seed, &config.training)?;
    let dist = subclass_distribution(&model, store, lexicon, config.mode)?;
    let p: Vec<f64> = dist.distribution.iter().map(|(_, v)| *v).collect();
    let kl = kl_from_uniform(&p)?;
    Ok((
        RnsbRun {
            seed,
            kl,
            test_accuracy: model.test_accuracy,
            converged: model.converged,
            per_subclass_negative_prob: dist.per_subclass_negative_prob.iter().map(|(_, v)| *v).collect(),
            distribution: p,
        },
        dist,
    ))
}

/// Average RNSB over `config.runs` classifiers seeded
/// `base_seed, base_seed + 1, ...`.
pub fn rnsb(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    sentiment: &SentimentLexicon,
    config: &RnsbConfig,
) -> Result<RnsbResult> {
    if config.runs == 0 {
        return Err(Error::InvalidInput("RNSB needs at least one run".into()));
    }
    let outcomes: Vec<(RnsbRun, SubclassDistribution)> = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| run_once(store, lexicon, sentiment, config.base_seed.wrapping_add(i), config))
        .collect::<Result<_>>()?;

    let runs = outcomes.len() as f64;
    let kls: Vec<f64> = outcomes.iter().map(|(r, _)| r.kl).collect();
    let kl = kls.iter().sum::<f64>() / runs;
    let kl_std = if outcomes.len() > 1 {
        (kls.iter().map(|k| (k - kl).powi(2)).sum::<f64>() / (runs - 1.0)).sqrt()
    } else {
        0.0
    };

    let (_, first) = &outcomes[0];
    let average = |labels: &[(String, f64)], pick: &dyn Fn(&RnsbRun) -> &Vec<f64>| -> Vec<(String, f64)> {
        labels
            .iter()
            .enumerate()
            .map(|(j, (k, _))| (k.clone(), outcomes.iter().map(|(r, _)| pick(r)[j]).sum::<f64>() / runs))
            .collect()
    };
    let per_subclass_negative_prob = average(&first.per_subclass_negative_prob, &|r| &r.per_subclass_negative_prob);
    let distribution = average(&first.distribution, &|r| &r.distribution);
    let mean_test_accuracy = outcomes.iter().map(|(r, _)| r.test_accuracy).sum::<f64>() / runs;
    let unconverged = outcomes.iter().filter(|(r, _)| !r.converged).count();
    if unconverged > 0 {
        log::warn!(
            "{unconverged}/{} sentiment classifiers hit the epoch limit before the gradient tolerance",
            outcomes.len()
        );
    }

    Ok(RnsbResult {
        kl,
        kl_std,
        runs: outcomes.len(),
        per_subclass_negative_prob,
        distribution,
        mean_test_accuracy,
        config: *config,
        per_run: outcomes.into_iter().map(|(r, _)| r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_cases() {
        assert_eq!(kl_from_uniform(&[1.0 / 3.0; 3]).unwrap(), 0.0);
        assert_eq!(kl_from_uniform(&[0.25; 4]).unwrap(), 0.0);
        assert_abs_diff_eq!(kl_from_uniform(&[0.5, 0.25, 0.25]).unwrap(), 0.0588915178281917, epsilon = 1e-12);
        assert_abs_diff_eq!(kl_from_uniform(&[1.0, 0.0, 0.0]).unwrap(), 3f64.ln(), epsilon = 1e-15);
        assert!(kl_from_uniform(&[0.5, 0.6]).is_err());
        assert!(kl_from_uniform(&[1.5, -0.5]).is_err());
        assert!(kl_from_uniform(&[]).is_err());
    }

    #[test]
    fn sentiment_lists() {
        let lex = SentimentLexicon::new(&["Good", "nice", "bad"], &["bad", "awful"]).unwrap();
        assert_eq!(lex.positive(), &["good", "nice"]);
        assert_eq!(lex.negative(), &["awful"]);
        assert!(SentimentLexicon::new(&["a"], &["a"]).is_err());
        let parsed = parse_word_list("; comment\n\nfoo\r\n bar \n;x\n");
        assert_eq!(parsed, vec!["foo", "bar"]);
        let bundled = SentimentLexicon::bundled();
        assert!(bundled.positive().len() >= 50 && bundled.negative().len() >= 50);
    }
}
