//! Seeded synthetic corpora with a known bias structure, for examples,
//! tests and benchmarking without multi-gigabyte downloads.
//!
//! Every corpus uses the same vocabulary layout:
//!
//! | words                      | role                                 |
//! |----------------------------|--------------------------------------|
//! | `{subclass}_t{j}`          | target terms of each subclass        |
//! | `eq{k}_{subclass}`         | equality set `k`                     |
//! | `pleasant{k}`, `unpleasant{k}` | the two attribute sets           |
//! | `pos{k}`, `neg{k}`         | sentiment training words             |
//! | `filler{k}`                | everything else                      |
//!
//! In the planted corpus axes 0 and 1 form the bias plane (subclass
//! centres 120° apart), axis 2 carries sentiment, axis 3 is shared by all
//! targets and the remaining axes hold per-word noise. Target `j` of every
//! subclass shares the same noise, so the subclasses differ only inside the
//! bias plane (and along the sentiment axis when a shift is requested).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingStore, StoreBuilder};
use crate::error::Result;
use crate::lexicon::{AttributeSet, BiasLexicon, EqualitySet, Subclass};
use crate::rnsb::SentimentLexicon;

pub const SUBCLASSES: [&str; 3] = ["alpha", "beta", "gamma"];

const BIAS_AXES: usize = 2;
const SENTIMENT_AXIS: usize = 2;
const SHARED_AXIS: usize = 3;
const STRUCTURED_AXES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBiasConfig {
    pub dim: usize,
    pub targets_per_subclass: usize,
    pub equality_sets: usize,
    pub attribute_words: usize,
    pub sentiment_words: usize,
    pub filler_words: usize,
    /// How far pleasant words lean toward the first subclass and unpleasant
    /// words toward the second.
    pub bias_strength: f64,
    /// Norm of the per-target noise shared across subclasses.
    pub target_spread: f64,
    /// Displacement of one subclass's targets toward negative sentiment.
    pub sentiment_shift: f64,
    /// Which subclass receives `sentiment_shift`.
    pub shifted_subclass: usize,
    pub seed: u64,
}

impl Default for PlantedBiasConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            targets_per_subclass: 8,
            equality_sets: 8,
            attribute_words: 8,
            sentiment_words: 40,
            filler_words: 400,
            bias_strength: 0.4,
            target_spread: 0.75,
            sentiment_shift: 0.0,
            shifted_subclass: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub store: EmbeddingStore,
    pub lexicon: BiasLexicon,
    pub sentiment: SentimentLexicon,
}

struct Names {
    targets: Vec<Vec<String>>,
    equality: Vec<Vec<String>>,
    pleasant: Vec<String>,
    unpleasant: Vec<String>,
    positive: Vec<String>,
    negative: Vec<String>,
    filler: Vec<String>,
}

impl Names {
    fn new(c: &PlantedBiasConfig) -> Self {
        let list = |prefix: &str, n: usize| (0..n).map(|k| format!("{prefix}{k}")).collect::<Vec<_>>();
        Self {
            targets: SUBCLASSES
                .iter()
                .map(|s| (0..c.targets_per_subclass).map(|j| format!("{s}_t{j}")).collect())
                .collect(),
            equality: (0..c.equality_sets)
                .map(|k| SUBCLASSES.iter().map(|s| format!("eq{k}_{s}")).collect())
                .collect(),
            pleasant: list("pleasant", c.attribute_words),
            unpleasant: list("unpleasant", c.attribute_words),
            positive: list("pos", c.sentiment_words),
            negative: list("neg", c.sentiment_words),
            filler: list("filler", c.filler_words),
        }
    }

    fn lexicon(&self) -> Result<BiasLexicon> {
        BiasLexicon::new(
            "synthetic",
            SUBCLASSES
                .iter()
                .zip(&self.targets)
                .map(|(s, t)| Subclass {
                    name: s.to_string(),
                    targets: t.clone(),
                })
                .collect(),
            self.equality.iter().map(|e| EqualitySet { terms: e.clone() }).collect(),
            vec![
                AttributeSet {
                    name: "pleasant".into(),
                    words: self.pleasant.clone(),
                },
                AttributeSet {
                    name: "unpleasant".into(),
                    words: self.unpleasant.clone(),
                },
            ],
        )
    }

    fn sentiment(&self) -> Result<SentimentLexicon> {
        SentimentLexicon::new(&self.positive, &self.negative)
    }
}

/// A Gaussian vector confined to the noise axes, scaled to norm `scale`.
fn noise(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for x in &mut v[STRUCTURED_AXES..] {
        *x = rng.sample(StandardNormal);
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x *= scale / n);
    v
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

/// Centre of subclass `i` in the bias plane (unit norm).
pub fn subclass_centre(dim: usize, i: usize) -> Vec<f64> {
    let angle = 2.0 * std::f64::consts::PI * i as f64 / SUBCLASSES.len() as f64;
    let mut c = vec![0.0; dim];
    c[0] = angle.cos();
    c[1] = angle.sin();
    c
}

/// Store with a planted bias: subclass clusters in a 2-d bias plane and
/// attribute sets tilted toward two of them. Rows are unit length.
pub fn planted_bias(config: &PlantedBiasConfig) -> Result<SyntheticCorpus> {
    let d = config.dim;
    assert!(d > STRUCTURED_AXES + BIAS_AXES, "dimension too small for the planted layout");
    let names = Names::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = StoreBuilder::with_capacity(d, 3 * config.targets_per_subclass + config.filler_words + 128)?;
    let push = |b: &mut StoreBuilder, w: &str, mut v: Vec<f64>| -> Result<()> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        b.push(w, &v).map(|_| ())
    };

    let centres: Vec<Vec<f64>> = (0..SUBCLASSES.len()).map(|i| subclass_centre(d, i)).collect();
    let mut shared = vec![0.0; d];
    shared[SHARED_AXIS] = 0.5;
    let mut negative_dir = vec![0.0; d];
    negative_dir[SENTIMENT_AXIS] = -1.0;

    let target_noise: Vec<Vec<f64>> = (0..config.targets_per_subclass)
        .map(|_| noise(&mut rng, d, config.target_spread))
        .collect();
    for (i, words) in names.targets.iter().enumerate() {
        for (w, eps) in words.iter().zip(&target_noise) {
            let mut v = centres[i].clone();
            axpy(&mut v, 1.0, &shared);
            axpy(&mut v, 1.0, eps);
            if i == config.shifted_subclass {
                axpy(&mut v, config.sentiment_shift, &negative_dir);
            }
            push(&mut b, w, v)?;
        }
    }
    for set in &names.equality {
        let s = noise(&mut rng, d, 1.0);
        for (i, w) in set.iter().enumerate() {
            let mut v = centres[i].clone();
            axpy(&mut v, 1.0, &s);
            push(&mut b, w, v)?;
        }
    }
    for (words, lean) in [(&names.pleasant, &centres[0]), (&names.unpleasant, &centres[1])] {
        for w in words {
            let mut v = noise(&mut rng, d, 1.0);
            axpy(&mut v, config.bias_strength, lean);
            push(&mut b, w, v)?;
        }
    }
    for (words, sign) in [(&names.positive, -1.0), (&names.negative, 1.0)] {
        for w in words {
            let mut v = noise(&mut rng, d, 0.8);
            axpy(&mut v, sign, &negative_dir);
            push(&mut b, w, v)?;
        }
    }
    for w in &names.filler {
        let mut v: Vec<f64> = (0..d).map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
        axpy(&mut v, 1.0, &noise(&mut rng, d, 1.0));
        push(&mut b, w, v)?;
    }

    Ok(SyntheticCorpus {
        store: b.finish(),
        lexicon: names.lexicon()?,
        sentiment: names.sentiment()?,
    })
}

/// Same vocabulary as [`planted_bias`], but every row is an independent
/// isotropic Gaussian draw: a store with no bias to find.
pub fn isotropic(config: &PlantedBiasConfig) -> Result<SyntheticCorpus> {
    let names = Names::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let words = names
        .targets
        .iter()
        .chain(&names.equality)
        .flatten()
        .chain(&names.pleasant)
        .chain(&names.unpleasant)
        .chain(&names.positive)
        .chain(&names.negative)
        .chain(&names.filler);
    let store = EmbeddingStore::from_rows(
        config.dim,
        words
            .map(|w| (w.clone(), (0..config.dim).map(|_| rng.sample(StandardNormal)).collect()))
            .collect::<Vec<(String, Vec<f64>)>>(),
    )?;
    Ok(SyntheticCorpus {
        store,
        lexicon: names.lexicon()?,
        sentiment: names.sentiment()?,
    })
}

/// `n` words `w0..` with independent standard-normal components.
pub fn random_store(n: usize, dim: usize, seed: u64) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingStore::from_rows(
        dim,
        (0..n)
            .map(|i| (format!("w{i}"), (0..dim).map(|_| rng.sample(StandardNormal)).collect()))
            .collect::<Vec<(String, Vec<f64>)>>(),
    )
    .expect("generated rows are finite and unique")
}
