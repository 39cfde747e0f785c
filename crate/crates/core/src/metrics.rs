//! Cosine-geometry bias measures: WEAT, MAC, analogy scoring and
//! nearest-neighbour search.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::lexicon::ResolvedLexicon;
use crate::linalg::{dot, norm, sub};

/// Pooled standard deviations below this are treated as zero.
const MIN_POOLED_STD: f64 = 1e-12;

/// Borrowed vectors with their words, the unit all metrics operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSet<'a> {
    pub name: String,
    pub words: Vec<String>,
    pub vectors: Vec<&'a [f64]>,
}

impl<'a> WordSet<'a> {
    pub fn new(words: Vec<String>, vectors: Vec<&'a [f64]>) -> Self {
        assert_eq!(words.len(), vectors.len(), "one word per vector");
        Self {
            name: String::new(),
            words,
            vectors,
        }
    }

    /// Vectors labelled `{prefix}0`, `{prefix}1`, ...
    pub fn anonymous(prefix: &str, vectors: Vec<&'a [f64]>) -> Self {
        let words = (0..vectors.len()).map(|i| format!("{prefix}{i}")).collect();
        Self {
            name: prefix.to_string(),
            words,
            vectors,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Cosine similarity. Zero vectors give 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(cos_counted(u, v, &mut 0))
}

#[inline]
fn cos_counted(u: &[f64], v: &[f64], degenerate: &mut usize) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        *degenerate += 1;
        return 0.0;
    }
    dot(u, v) / (nu * nv)
}

fn check_dims(dim: usize, sets: &[&WordSet<'_>]) -> Result<()> {
    for set in sets {
        if let Some(v) = set.vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
    }
    Ok(())
}

fn mean_cos(w: &[f64], set: &[&[f64]], degenerate: &mut usize) -> f64 {
    set.iter().map(|a| cos_counted(w, a, degenerate)).sum::<f64>() / set.len() as f64
}

/// Mean cosine of `w` to `a1` minus mean cosine to `a2`.
pub fn assoc_s(w: &[f64], a1: &[&[f64]], a2: &[&[f64]]) -> Result<f64> {
    if a1.is_empty() || a2.is_empty() {
        return Err(Error::EmptySet("attribute set".into()));
    }
    if let Some(v) = a1.iter().chain(a2).find(|v| v.len() != w.len()) {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: v.len(),
        });
    }
    let mut deg = 0;
    Ok(mean_cos(w, a1, &mut deg) - mean_cos(w, a2, &mut deg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    /// Sum of associations over the first target set minus the sum over the second.
    pub statistic: f64,
    /// Difference of mean associations over the population standard
    /// deviation of all associations.
    pub effect_size: f64,
    pub per_word_assoc: Vec<(String, f64)>,
    pub degenerate_pairs: usize,
}

pub fn weat(t1: &WordSet<'_>, t2: &WordSet<'_>, a1: &WordSet<'_>, a2: &WordSet<'_>) -> Result<WeatResult> {
    for (set, label) in [(t1, "first target set"), (t2, "second target set"), (a1, "first attribute set"), (a2, "second attribute set")] {
        if set.is_empty() {
            return Err(Error::EmptySet(format!("WEAT {label}")));
        }
    }
    let dim = t1.vectors[0].len();
    check_dims(dim, &[t1, t2, a1, a2])?;

    let mut degenerate = 0;
    let mut per_word_assoc = Vec::with_capacity(t1.len() + t2.len());
    let mut assoc = |set: &WordSet<'_>| -> Vec<f64> {
        set.vectors
            .iter()
            .zip(&set.words)
            .map(|(w, word)| {
                let s = mean_cos(w, &a1.vectors, &mut degenerate) - mean_cos(w, &a2.vectors, &mut degenerate);
                per_word_assoc.push((word.clone(), s));
                s
            })
            .collect()
    };
    let s1 = assoc(t1);
    let s2 = assoc(t2);

    let sum1: f64 = s1.iter().sum();
    let sum2: f64 = s2.iter().sum();
    let statistic = sum1 - sum2;
    let mean1 = sum1 / s1.len() as f64;
    let mean2 = sum2 / s2.len() as f64;

    let n = (s1.len() + s2.len()) as f64;
    let pooled_mean = (sum1 + sum2) / n;
    let sq = |xs: &[f64]| xs.iter().map(|s| (s - pooled_mean).powi(2)).sum::<f64>();
    let var = (sq(&s1) + sq(&s2)) / n;
    let std = var.sqrt();
    if !(std >= MIN_POOLED_STD) {
        return Err(Error::Degenerate(
            "WEAT associations have zero spread; effect size is undefined".into(),
        ));
    }

    Ok(WeatResult {
        statistic,
        effect_size: (mean1 - mean2) / std,
        per_word_assoc,
        degenerate_pairs: degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacPair {
    pub target_set: String,
    pub attribute_set: String,
    /// Mean cosine distance of the set's targets to the attribute set.
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacResult {
    /// Mean cosine distance over every (target, attribute set) pair, in [0, 2].
    pub mac: f64,
    pub per_pair: Vec<MacPair>,
    pub degenerate_pairs: usize,
}

impl MacResult {
    /// `|1 - MAC|`, zero for an unbiased embedding.
    pub fn deviation(&self) -> f64 {
        (1.0 - self.mac).abs()
    }
}

pub fn mac(targets: &[WordSet<'_>], attributes: &[WordSet<'_>]) -> Result<MacResult> {
    if targets.is_empty() || attributes.is_empty() {
        return Err(Error::EmptySet("MAC needs at least one target set and one attribute set".into()));
    }
    if let Some(s) = targets.iter().chain(attributes).find(|s| s.is_empty()) {
        return Err(Error::EmptySet(format!("MAC set {:?}", s.name)));
    }
    let dim = targets[0].vectors[0].len();
    check_dims(dim, &targets.iter().chain(attributes).collect::<Vec<_>>())?;

    let mut degenerate = 0;
    let mut total = 0.0;
    let mut count = 0usize;
    let mut per_pair = Vec::with_capacity(targets.len() * attributes.len());
    for t_set in targets {
        for a_set in attributes {
            let mut pair_sum = 0.0;
            for t in &t_set.vectors {
                let s_mac = 1.0 - mean_cos(t, &a_set.vectors, &mut degenerate);
                pair_sum += s_mac;
                total += s_mac;
                count += 1;
            }
            per_pair.push(MacPair {
                target_set: t_set.name.clone(),
                attribute_set: a_set.name.clone(),
                mean_distance: pair_sum / t_set.len() as f64,
            });
        }
    }
    Ok(MacResult {
        mac: total / count as f64,
        per_pair,
        degenerate_pairs: degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatCombination {
    pub target_a: String,
    pub target_b: String,
    pub attribute_a: String,
    pub attribute_b: String,
    pub result: WeatResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatSummary {
    /// Mean of |effect size| over all combinations.
    pub aggregate: f64,
    pub combinations: Vec<WeatCombination>,
}

/// WEAT for every unordered pair of target sets crossed with every
/// unordered pair of attribute sets.
pub fn weat_all_pairs_sets(targets: &[WordSet<'_>], attributes: &[WordSet<'_>]) -> Result<WeatSummary> {
    if targets.len() < 2 || attributes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "WEAT over all pairs needs at least 2 target sets and 2 attribute sets, got {} and {}",
            targets.len(),
            attributes.len()
        )));
    }
    let mut combinations = Vec::new();
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            for a in 0..attributes.len() {
                for b in a + 1..attributes.len() {
                    let result = weat(&targets[i], &targets[j], &attributes[a], &attributes[b])?;
                    combinations.push(WeatCombination {
                        target_a: targets[i].name.clone(),
                        target_b: targets[j].name.clone(),
                        attribute_a: attributes[a].name.clone(),
                        attribute_b: attributes[b].name.clone(),
                        result,
                    });
                }
            }
        }
    }
    let aggregate =
        combinations.iter().map(|c| c.result.effect_size.abs()).sum::<f64>() / combinations.len() as f64;
    Ok(WeatSummary {
        aggregate,
        combinations,
    })
}

pub fn weat_all_pairs(store: &EmbeddingStore, lexicon: &ResolvedLexicon) -> Result<WeatSummary> {
    weat_all_pairs_sets(&named_targets(store, lexicon), &named_attributes(store, lexicon))
}

pub fn mac_lexicon(store: &EmbeddingStore, lexicon: &ResolvedLexicon) -> Result<MacResult> {
    mac(&named_targets(store, lexicon), &named_attributes(store, lexicon))
}

fn named_targets<'a>(store: &'a EmbeddingStore, lexicon: &ResolvedLexicon) -> Vec<WordSet<'a>> {
    lexicon
        .target_sets(store)
        .into_iter()
        .zip(&lexicon.subclasses)
        .map(|(s, sub)| s.named(&sub.name))
        .collect()
}

fn named_attributes<'a>(store: &'a EmbeddingStore, lexicon: &ResolvedLexicon) -> Vec<WordSet<'a>> {
    lexicon
        .attribute_sets_of(store)
        .into_iter()
        .zip(&lexicon.attribute_sets)
        .map(|(s, a)| s.named(&a.name))
        .collect()
}

/// "a is to b as x is to y", scored by the cosine of `a - b` and `x - y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyScore {
    pub a: String,
    pub b: String,
    pub x: String,
    pub y: String,
    pub score: f64,
}

/// Score from raw vectors: zero when `‖x - y‖ > delta` or either
/// difference vector vanishes.
pub fn analogy_score_vectors(a: &[f64], b: &[f64], x: &[f64], y: &[f64], delta: f64) -> f64 {
    let ab = sub(a, b);
    let xy = sub(x, y);
    let n_xy = norm(&xy);
    if n_xy > delta {
        return 0.0;
    }
    let n_ab = norm(&ab);
    if n_xy == 0.0 || n_ab == 0.0 {
        return 0.0;
    }
    (dot(&ab, &xy) / (n_ab * n_xy)).clamp(-1.0, 1.0)
}

pub fn score_analogy(store: &EmbeddingStore, a: &str, b: &str, x: &str, y: &str, delta: f64) -> Result<AnalogyScore> {
    let get = |w: &str| {
        store
            .vector(w)
            .map(|v| v.values)
            .ok_or_else(|| Error::OutOfVocabulary(w.to_string()))
    };
    let score = analogy_score_vectors(get(a)?, get(b)?, get(x)?, get(y)?, delta);
    Ok(AnalogyScore {
        a: a.into(),
        b: b.into(),
        x: x.into(),
        y: y.into(),
        score,
    })
}

fn analogy_order(p: &AnalogyScore, q: &AnalogyScore) -> Ordering {
    q.score
        .total_cmp(&p.score)
        .then_with(|| (&p.a, &p.b, &p.x, &p.y).cmp(&(&q.a, &q.b, &q.x, &q.y)))
}

/// Score every `(a, b, x, y)` with `a` from `left`, `x` from `right` and
/// `b != y` from `attribute_vocab`; keep `|score| >= min_score`, best first.
/// Words missing from the store are skipped.
pub fn enumerate_analogies(
    store: &EmbeddingStore,
    left: &[String],
    right: &[String],
    attribute_vocab: &[String],
    delta: f64,
    min_score: f64,
) -> Vec<AnalogyScore> {
    let present = |ws: &[String]| -> Vec<(String, &[f64])> {
        let mut seen = HashSet::new();
        ws.iter()
            .filter(|w| seen.insert(w.as_str()))
            .filter_map(|w| store.vector(w).map(|v| (w.clone(), v.values)))
            .collect()
    };
    let left = present(left);
    let right = present(right);
    let attrs = present(attribute_vocab);

    let mut out: Vec<AnalogyScore> = left
        .par_iter()
        .flat_map_iter(|(a, av)| {
            let mut local = Vec::new();
            for (x, xv) in &right {
                if a == x {
                    continue;
                }
                for (b, bv) in &attrs {
                    for (y, yv) in &attrs {
                        if b == y {
                            continue;
                        }
                        let score = analogy_score_vectors(av, bv, xv, yv, delta);
                        if score.abs() >= min_score {
                            local.push(AnalogyScore {
                                a: a.clone(),
                                b: b.clone(),
                                x: x.clone(),
                                y: y.clone(),
                                score,
                            });
                        }
                    }
                }
            }
            local
        })
        .collect();
    out.sort_by(analogy_order);
    out
}

/// Top-`n` rows by cosine to row `query`, skipping the query and `exclude`.
/// Ties go to the lower vocabulary index.
pub fn nearest_by_index(store: &EmbeddingStore, query: usize, n: usize, exclude: &HashSet<usize>) -> Vec<(usize, f64)> {
    if n == 0 {
        return Vec::new();
    }
    let q = store.row(query);
    let qn = norm(q);
    let score = |i: usize| -> f64 {
        let r = store.row(i);
        let rn = norm(r);
        if qn == 0.0 || rn == 0.0 {
            0.0
        } else {
            dot(q, r) / (qn * rn)
        }
    };
    let better = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));

    let top_k = |range: std::ops::Range<usize>| -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
        for i in range {
            if i == query || exclude.contains(&i) {
                continue;
            }
            let cand = (i, score(i));
            if best.len() == n && better(&cand, &best[n - 1]) != Ordering::Less {
                continue;
            }
            let pos = best.partition_point(|b| better(b, &cand) == Ordering::Less);
            best.insert(pos, cand);
            best.truncate(n);
        }
        best
    };

    const CHUNK: usize = 8192;
    let len = store.len();
    let mut merged: Vec<(usize, f64)> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| top_k(c * CHUNK..((c + 1) * CHUNK).min(len)))
        .collect();
    merged.sort_by(better);
    merged.truncate(n);
    merged
}

pub fn nearest_neighbors(
    store: &EmbeddingStore,
    word: &str,
    n: usize,
    exclude: &HashSet<String>,
) -> Result<Vec<(String, f64)>> {
    let query = store
        .index_of(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    let exclude: HashSet<usize> = exclude.iter().filter_map(|w| store.index_of(w)).collect();
    Ok(nearest_by_index(store, query, n, &exclude)
        .into_iter()
        .map(|(i, c)| (store.word(i).to_string(), c))
        .collect())
}
