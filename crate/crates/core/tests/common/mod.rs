//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the metric code under test.
#![allow(dead_code)]

use fairvec::lexicon::{AttributeSet, BiasLexicon, EqualitySet, Subclass};
use fairvec::EmbeddingStore;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussians(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| gaussian(rng, d)).collect()
}

pub fn slices(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

pub fn oracle_cos(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    uv / (uu.sqrt() * vv.sqrt())
}

fn oracle_s(w: &[f64], a1: &[Vec<f64>], a2: &[Vec<f64>]) -> f64 {
    let mut m1 = 0.0;
    for a in a1 {
        m1 += oracle_cos(w, a);
    }
    let mut m2 = 0.0;
    for a in a2 {
        m2 += oracle_cos(w, a);
    }
    m1 / a1.len() as f64 - m2 / a2.len() as f64
}

/// `(statistic, effect size)` by direct summation.
pub fn oracle_weat(t1: &[Vec<f64>], t2: &[Vec<f64>], a1: &[Vec<f64>], a2: &[Vec<f64>]) -> (f64, f64) {
    let s1: Vec<f64> = t1.iter().map(|w| oracle_s(w, a1, a2)).collect();
    let s2: Vec<f64> = t2.iter().map(|w| oracle_s(w, a1, a2)).collect();
    let mut stat = 0.0;
    for x in &s1 {
        stat += x;
    }
    for x in &s2 {
        stat -= x;
    }
    let mean1 = s1.iter().sum::<f64>() / s1.len() as f64;
    let mean2 = s2.iter().sum::<f64>() / s2.len() as f64;
    let all: Vec<f64> = s1.iter().chain(&s2).copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / all.len() as f64;
    (stat, (mean1 - mean2) / var.sqrt())
}

/// Mean over every (target word, attribute set) of the mean cosine distance.
pub fn oracle_mac(targets: &[Vec<Vec<f64>>], attributes: &[Vec<Vec<f64>>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0.0;
    for t_set in targets {
        for t in t_set {
            for a_set in attributes {
                let mut s = 0.0;
                for a in a_set {
                    s += 1.0 - oracle_cos(t, a);
                }
                total += s / a_set.len() as f64;
                count += 1.0;
            }
        }
    }
    total / count
}

/// Haar-ish random orthogonal matrix from the QR of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|x| if x < 0.0 { -1.0 } else { 1.0 }));
    q * signs
}

pub fn rotate(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..v.len()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

pub fn store_of(rows: Vec<(String, Vec<f64>)>) -> EmbeddingStore {
    let d = rows[0].1.len();
    EmbeddingStore::from_rows(d, rows).unwrap()
}

/// A lexicon of class `test` with the given groups.
pub fn lexicon_of(subclasses: &[(&str, Vec<String>)], equality: &[Vec<String>], attributes: &[(&str, Vec<String>)]) -> BiasLexicon {
    BiasLexicon::new(
        "test",
        subclasses
            .iter()
            .map(|(n, t)| Subclass {
                name: n.to_string(),
                targets: t.clone(),
            })
            .collect(),
        equality.iter().map(|e| EqualitySet { terms: e.clone() }).collect(),
        attributes
            .iter()
            .map(|(n, w)| AttributeSet {
                name: n.to_string(),
                words: w.clone(),
            })
            .collect(),
    )
    .unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Welch one-tailed reference values `(a, b, t, df, p)` computed offline
/// with an arbitrary-precision statistics package.
#[allow(clippy::excessive_precision)]
pub const WELCH_REFERENCE: [(&[f64], &[f64], f64, f64, f64); 10] = [
    (&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0], 1.5491933384829668, 2.9411764705882353, 0.11044042024704796),
    (
        &[0.12, 0.15, 0.11, 0.14, 0.13],
        &[0.01, 0.02, 0.015, 0.005, 0.012],
        15.678606408031732,
        4.986142181853755,
        9.803031519107029e-6,
    ),
    (
        &[1.0, 1.1, 0.9, 1.05],
        &[1.0, 1.2, 0.8, 1.1, 0.95, 1.02],
        0.011914052274091703,
        7.999804163500106,
        0.49539297376195375,
    ),
    (
        &[5.5, 6.1, 5.9, 6.3, 5.7, 6.0, 5.8],
        &[6.2, 6.4, 6.1, 6.6],
        -2.8465424181483331,
        7.4135549320094954,
        0.98832145684973448,
    ),
    (&[0.3, 0.35], &[0.1, 0.5], 0.12403473458920836, 1.0312423724676592, 0.46048443201647326),
    (
        &[10.0, 12.0, 9.0, 11.0, 13.0, 10.0, 12.0, 11.0],
        &[9.0, 8.0, 10.0, 9.0, 7.0, 9.0],
        3.7264781867217954,
        11.933600845009026,
        0.0014595257634869028,
    ),
    (
        &[0.0123, 0.0098, 0.0141, 0.0110, 0.0135, 0.0127, 0.0102, 0.0119, 0.0131, 0.0108],
        &[0.0101, 0.0095, 0.0112, 0.0089, 0.0104, 0.0099, 0.0107, 0.0093, 0.0110, 0.0097],
        3.61784928338717,
        13.519151116657981,
        0.0014729095384608017,
    ),
    (&[3.0, 3.0, 4.0], &[1.0, 5.0, 9.0, 2.0], -0.50155682784630852, 3.2043128401866958, 0.67578606495181173),
    (
        &[-1.5, -0.5, 0.5, 1.5],
        &[-2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
        -0.5,
        7.9411764705882353,
        0.68468328315262644,
    ),
    (
        &[100.2, 99.8, 100.5],
        &[100.1, 100.0, 99.9, 100.3, 100.2],
        0.31046021028253235,
        2.4975981147466501,
        0.39013186961941346,
    ),
];
