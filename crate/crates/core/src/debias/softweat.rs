//! SoftWEAT: each subclass's target set is grown with nearest neighbours
//! and translated, as a block, toward a point in the null space of the
//! attribute words it is biased against.
//!
//! The translation moves the expanded set's centroid `t̄` to `‖t̄‖ · v` for a
//! null-space direction `v`, keeping offsets inside the set:
//! `x' = x + λ (‖t̄‖ v - t̄)`. The candidate `v` (both signs of the first
//! few null-space basis vectors) with the lowest resulting mean |WEAT
//! effect size| wins.

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canonical_sign;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::lexicon::ResolvedLexicon;
use crate::linalg::{mean_of, norm};
use crate::metrics::{nearest_by_index, weat, WordSet};

const NULL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftWeatConfig {
    pub lambda: f64,
    /// Minimum WEAT effect size for an attribute set to count as biased.
    pub threshold: f64,
    /// Nearest neighbours added per target term.
    pub neighbors: usize,
    /// Null-space basis vectors tried (each with both signs).
    pub max_basis: usize,
}

impl Default for SoftWeatConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            threshold: 0.5,
            neighbors: 5,
            max_basis: 10,
        }
    }
}

/// A WEAT combination that flagged the subclass as biased toward
/// `attribute_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedPair {
    pub other_subclass: usize,
    pub attribute_a: usize,
    pub attribute_b: usize,
    pub effect_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub basis_index: usize,
    pub sign: f64,
    /// Mean |effect size| over the selected pairs after the tentative move.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftWeatPlan {
    pub subclass: String,
    pub expanded: Vec<String>,
    pub expanded_indices: Vec<usize>,
    pub selected_attributes: Vec<String>,
    pub selected_pairs: Vec<SelectedPair>,
    pub null_space_dim: usize,
    pub candidates: Vec<CandidateScore>,
    /// Index into `candidates`; `None` when the subclass was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<usize>,
    /// Full (λ = 1) displacement applied to every expanded vector.
    pub translation: Vec<f64>,
}

impl SoftWeatPlan {
    pub fn is_skipped(&self) -> bool {
        self.chosen.is_none()
    }
}

/// Targets of one subclass plus the `n` nearest neighbours of each, never
/// including a word in `exclude`. Targets come first, then neighbours in
/// discovery order.
pub fn expand_targets(store: &EmbeddingStore, targets: &[usize], n: usize, exclude: &HashSet<usize>) -> Vec<usize> {
    let mut seen: HashSet<usize> = targets.iter().copied().collect();
    let mut out: Vec<usize> = Vec::with_capacity(targets.len() * (n + 1));
    let mut dedup = HashSet::new();
    out.extend(targets.iter().copied().filter(|t| dedup.insert(*t)));
    let mut skip = exclude.clone();
    skip.extend(targets.iter().copied());
    for &t in targets {
        for (i, _) in nearest_by_index(store, t, n, &skip) {
            if seen.insert(i) {
                out.push(i);
            }
        }
    }
    out
}

/// WEAT combinations `(T_subclass, T_other, A_a, A_b)` whose effect size
/// exceeds `threshold`; `A_a` is the attribute set the subclass leans to.
pub fn select_biased_attributes(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    subclass: usize,
    threshold: f64,
) -> Vec<SelectedPair> {
    select_with(lexicon, subclass, threshold, &|i| store.row(i))
}

fn select_with<'a>(
    lexicon: &ResolvedLexicon,
    subclass: usize,
    threshold: f64,
    row: &dyn Fn(usize) -> &'a [f64],
) -> Vec<SelectedPair> {
    let mut out = Vec::new();
    let t_sub = set_of(lexicon.subclasses[subclass].targets.iter().map(|t| t.index), row);
    for (j, other) in lexicon.subclasses.iter().enumerate() {
        if j == subclass {
            continue;
        }
        let t_other = set_of(other.targets.iter().map(|t| t.index), row);
        for a in 0..lexicon.attribute_sets.len() {
            for b in 0..lexicon.attribute_sets.len() {
                if a == b {
                    continue;
                }
                let sa = set_of(lexicon.attribute_sets[a].words.iter().map(|t| t.index), row);
                let sb = set_of(lexicon.attribute_sets[b].words.iter().map(|t| t.index), row);
                if let Ok(r) = weat(&t_sub, &t_other, &sa, &sb) {
                    if r.effect_size > threshold {
                        out.push(SelectedPair {
                            other_subclass: j,
                            attribute_a: a,
                            attribute_b: b,
                            effect_size: r.effect_size,
                        });
                    }
                }
            }
        }
    }
    out
}

fn set_of<'a>(idx: impl Iterator<Item = usize>, row: &dyn Fn(usize) -> &'a [f64]) -> WordSet<'a> {
    WordSet::anonymous("w", idx.map(row).collect())
}

/// Orthonormal basis of `{v : M v = 0}` for the rows of `M`.
pub fn null_space_basis(rows: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let first = rows.first().ok_or_else(|| Error::EmptySet("null space of an empty matrix".into()))?;
    let d = first.len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    // Pad to at least d rows so the SVD returns a full right basis.
    let m = rows.len().max(d);
    let mat = DMatrix::from_fn(m, d, |i, j| rows.get(i).map_or(0.0, |r| r[j]));
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s_max = svd.singular_values.max();
    let tol = NULL_TOLERANCE * s_max.max(1.0);
    let basis: Vec<Vec<f64>> = (0..d)
        .filter(|&i| svd.singular_values[i] < tol)
        .map(|i| {
            let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
            let n = norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            canonical_sign(&mut v);
            v
        })
        .collect();
    if basis.is_empty() {
        return Err(Error::EmptyNullSpace(format!(
            "{} attribute vectors span all {d} dimensions; use fewer attribute words or reduce dimensionality",
            rows.len()
        )));
    }
    Ok(basis)
}

/// Displacement at λ = 1 that moves the set's centroid to `‖t̄‖ · direction`.
pub fn translation_for(store: &EmbeddingStore, expanded: &[usize], direction: &[f64]) -> Vec<f64> {
    let rows: Vec<&[f64]> = expanded.iter().map(|&i| store.row(i)).collect();
    let centroid = mean_of(&rows, store.dim());
    let c = norm(&centroid);
    direction.iter().zip(&centroid).map(|(v, t)| c * v - t).collect()
}

fn mean_abs_effect(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    subclass: usize,
    pairs: &[SelectedPair],
    moved: &HashMap<usize, Vec<f64>>,
) -> f64 {
    let row = |i: usize| -> &[f64] { moved.get(&i).map_or_else(|| store.row(i), Vec::as_slice) };
    let set = |idx: &mut dyn Iterator<Item = usize>| WordSet::anonymous("w", idx.map(row).collect());
    let t_sub = set(&mut lexicon.subclasses[subclass].targets.iter().map(|t| t.index));
    let mut total = 0.0;
    let mut count = 0;
    for p in pairs {
        let t_other = set(&mut lexicon.subclasses[p.other_subclass].targets.iter().map(|t| t.index));
        let a = set(&mut lexicon.attribute_sets[p.attribute_a].words.iter().map(|t| t.index));
        let b = set(&mut lexicon.attribute_sets[p.attribute_b].words.iter().map(|t| t.index));
        if let Ok(r) = weat(&t_sub, &t_other, &a, &b) {
            total += r.effect_size.abs();
            count += 1;
        }
    }
    if count == 0 {
        f64::INFINITY
    } else {
        total / count as f64
    }
}

/// Score each `±basis[i]` candidate at the given λ and return the scores
/// and the index of the best one (first on ties).
pub fn choose_translation(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    subclass: usize,
    expanded: &[usize],
    pairs: &[SelectedPair],
    basis: &[Vec<f64>],
    lambda: f64,
) -> (Vec<CandidateScore>, usize) {
    let candidates: Vec<(usize, f64)> = (0..basis.len()).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
    let scores: Vec<CandidateScore> = candidates
        .par_iter()
        .map(|&(i, sign)| {
            let dir: Vec<f64> = basis[i].iter().map(|x| sign * x).collect();
            let shift = translation_for(store, expanded, &dir);
            let moved: HashMap<usize, Vec<f64>> = expanded
                .iter()
                .map(|&w| (w, store.row(w).iter().zip(&shift).map(|(x, s)| x + lambda * s).collect()))
                .collect();
            CandidateScore {
                basis_index: i,
                sign,
                score: mean_abs_effect(store, lexicon, subclass, pairs, &moved),
            }
        })
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, c)| if c.score < scores[best].score { i } else { best });
    (scores, best)
}

/// Build the plan for one subclass against the current store.
pub fn plan_subclass(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    subclass: usize,
    config: &SoftWeatConfig,
    exclude: &HashSet<usize>,
) -> Result<SoftWeatPlan> {
    let sub = &lexicon.subclasses[subclass];
    let targets: Vec<usize> = sub.targets.iter().map(|t| t.index).collect();
    let expanded = expand_targets(store, &targets, config.neighbors, exclude);

    let pairs = select_biased_attributes(store, lexicon, subclass, config.threshold);
    let mut attr_idx: Vec<usize> = pairs.iter().map(|p| p.attribute_a).collect();
    attr_idx.sort_unstable();
    attr_idx.dedup();

    let mut plan = SoftWeatPlan {
        subclass: sub.name.clone(),
        expanded: expanded.iter().map(|&i| store.word(i).to_string()).collect(),
        expanded_indices: expanded.clone(),
        selected_attributes: attr_idx.iter().map(|&a| lexicon.attribute_sets[a].name.clone()).collect(),
        selected_pairs: pairs,
        null_space_dim: 0,
        candidates: Vec::new(),
        chosen: None,
        translation: vec![0.0; store.dim()],
    };
    if attr_idx.is_empty() {
        log::info!("softweat: subclass {:?} is not biased above threshold {}; skipped", sub.name, config.threshold);
        return Ok(plan);
    }

    let attr_rows: Vec<&[f64]> = attr_idx
        .iter()
        .flat_map(|&a| lexicon.attribute_sets[a].words.iter().map(|t| store.row(t.index)))
        .collect();
    let mut basis = null_space_basis(&attr_rows)?;
    plan.null_space_dim = basis.len();
    basis.truncate(config.max_basis.max(1));

    let (candidates, best) = choose_translation(
        store,
        lexicon,
        subclass,
        &expanded,
        &plan.selected_pairs,
        &basis,
        config.lambda,
    );
    let c = &candidates[best];
    let dir: Vec<f64> = basis[c.basis_index].iter().map(|x| c.sign * x).collect();
    plan.translation = translation_for(store, &expanded, &dir);
    plan.candidates = candidates;
    plan.chosen = Some(best);
    Ok(plan)
}

/// `x + λ · translation` for every expanded word; all other rows are copied
/// unchanged.
pub fn apply_plan(store: &EmbeddingStore, plan: &SoftWeatPlan, lambda: f64) -> EmbeddingStore {
    let mut out = store.clone();
    if plan.is_skipped() || lambda == 0.0 {
        return out;
    }
    for &i in &plan.expanded_indices {
        out.row_mut(i)
            .iter_mut()
            .zip(&plan.translation)
            .for_each(|(x, t)| *x += lambda * t);
    }
    out.set_normalized(false);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftWeatOutcome {
    pub store: EmbeddingStore,
    pub plans: Vec<SoftWeatPlan>,
}

/// Plan and apply each subclass in lexicon order. A word claimed by an
/// earlier subclass's expanded set is not reused by a later one.
pub fn softweat_debias(store: &EmbeddingStore, lexicon: &ResolvedLexicon, config: &SoftWeatConfig) -> Result<SoftWeatOutcome> {
    if !config.lambda.is_finite() || config.lambda < 0.0 {
        return Err(Error::InvalidInput(format!("lambda must be finite and non-negative, got {}", config.lambda)));
    }
    let mut current = store.clone();
    let mut claimed: HashSet<usize> = HashSet::new();
    let mut plans = Vec::with_capacity(lexicon.subclasses.len());
    for s in 0..lexicon.subclasses.len() {
        let mut exclude = claimed.clone();
        for (j, other) in lexicon.subclasses.iter().enumerate() {
            if j != s {
                exclude.extend(other.targets.iter().map(|t| t.index));
            }
        }
        let plan = plan_subclass(&current, lexicon, s, config, &exclude)?;
        current = apply_plan(&current, &plan, config.lambda);
        claimed.extend(plan.expanded_indices.iter().copied());
        plans.push(plan);
    }
    Ok(SoftWeatOutcome { store: current, plans })
}
