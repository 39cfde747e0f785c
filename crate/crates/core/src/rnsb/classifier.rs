//! Binary logistic regression trained by full-batch gradient descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SentimentLexicon;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Minimum number of in-vocabulary words per polarity.
pub const MIN_WORDS_PER_CLASS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Fraction of the shuffled words used for training.
    pub split_ratio: f64,
    /// Training stops early once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-3,
            epochs: 1000,
            split_ratio: 0.8,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub epochs_run: usize,
    pub converged: bool,
    /// Regularized training loss before each update and after the last one.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log-loss plus `l2 / 2 · ‖w‖²`; labels are 0 or 1, the bias is not
/// penalised.
pub fn regularized_log_loss(weights: &[f64], bias: f64, xs: &[&[f64]], ys: &[f64], l2: f64) -> f64 {
    let data: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let z = dot(weights, x) + bias;
            softplus(z) - y * z
        })
        .sum::<f64>()
        / xs.len() as f64;
    data + 0.5 * l2 * dot(weights, weights)
}

/// Analytic gradient of [`regularized_log_loss`] with respect to
/// `(weights, bias)`.
pub fn loss_gradient(weights: &[f64], bias: f64, xs: &[&[f64]], ys: &[f64], l2: f64) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = sigmoid(dot(weights, x) + bias) - y;
        for (g, xi) in gw.iter_mut().zip(x.iter()) {
            *g += r * xi;
        }
        gb += r;
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (gw, gb / n)
}

fn accuracy(weights: &[f64], bias: f64, xs: &[&[f64]], ys: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let correct = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| (sigmoid(dot(weights, x) + bias) >= 0.5) == (**y >= 0.5))
        .count();
    correct as f64 / xs.len() as f64
}

/// Gradient descent from zero weights on the full batch.
pub fn fit_logistic(xs: &[&[f64]], ys: &[f64], config: &TrainingConfig) -> LogisticModel {
    let dim = xs.first().map_or(0, |x| x.len());
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut loss_history = Vec::with_capacity(config.epochs + 1);
    let mut converged = false;
    let mut epochs_run = 0;
    for _ in 0..config.epochs {
        loss_history.push(regularized_log_loss(&w, b, xs, ys, config.l2));
        let (gw, gb) = loss_gradient(&w, b, xs, ys, config.l2);
        let gnorm = (dot(&gw, &gw) + gb * gb).sqrt();
        if gnorm < config.tolerance {
            converged = true;
            break;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= config.learning_rate * g;
        }
        b -= config.learning_rate * gb;
        epochs_run += 1;
    }
    loss_history.push(regularized_log_loss(&w, b, xs, ys, config.l2));
    let train_accuracy = accuracy(&w, b, xs, ys);
    LogisticModel {
        weights: w,
        bias: b,
        train_accuracy,
        test_accuracy: train_accuracy,
        train_size: xs.len(),
        test_size: 0,
        epochs_run,
        converged,
        loss_history,
    }
}

/// Train on a seeded shuffle of the sentiment words (negative = label 1)
/// and record held-out accuracy.
pub fn train_sentiment_classifier(
    store: &EmbeddingStore,
    lexicon: &SentimentLexicon,
    seed: u64,
    config: &TrainingConfig,
) -> Result<LogisticModel> {
    if !(config.split_ratio > 0.0 && config.split_ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split ratio must lie in (0, 1), got {}",
            config.split_ratio
        )));
    }
    let (pos, neg) = lexicon.resolve(store);
    if pos.len() < MIN_WORDS_PER_CLASS || neg.len() < MIN_WORDS_PER_CLASS {
        return Err(Error::Resolution(format!(
            "sentiment lexicon needs at least {MIN_WORDS_PER_CLASS} in-vocabulary words per class, found {} positive and {} negative",
            pos.len(),
            neg.len()
        )));
    }
    let mut examples: Vec<(usize, f64)> = pos
        .iter()
        .map(|&i| (i, 0.0))
        .chain(neg.iter().map(|&i| (i, 1.0)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    examples.shuffle(&mut rng);

    let n_train = ((examples.len() as f64) * config.split_ratio).round() as usize;
    let n_train = n_train.clamp(1, examples.len() - 1);
    let (train, test) = examples.split_at(n_train);
    let split = |part: &[(usize, f64)]| -> (Vec<&[f64]>, Vec<f64>) {
        part.iter().map(|&(i, y)| (store.row(i), y)).unzip()
    };
    let (train_x, train_y) = split(train);
    let (test_x, test_y) = split(test);

    let mut model = fit_logistic(&train_x, &train_y, config);
    if !model.converged {
        log::debug!(
            "sentiment classifier (seed {seed}) stopped after {} epochs without reaching gradient tolerance {}",
            model.epochs_run,
            config.tolerance
        );
    }
    model.test_accuracy = accuracy(&model.weights, model.bias, &test_x, &test_y);
    model.test_size = test_x.len();
    Ok(model)
}

/// `sigmoid(w·x + b)`, the predicted probability of negative sentiment.
pub fn negative_probability(model: &LogisticModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.len(),
        });
    }
    Ok(sigmoid(dot(&model.weights, x) + model.bias))
}
