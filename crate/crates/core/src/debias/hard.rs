//! Multiclass hard debiasing: find the bias subspace from equality sets,
//! strip it from neutral words, then re-centre each equality set so its
//! members differ only inside the subspace.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canonical_sign;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::lexicon::ResolvedLexicon;
use crate::linalg::{dot, mean_of, norm, project, sub};

/// Neutral words whose residual falls below this are left untouched.
const MIN_RESIDUAL: f64 = 1e-10;

/// Orthonormal rows spanning the bias directions, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSubspace {
    pub basis: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl BiasSubspace {
    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        project(v, &self.basis)
    }
}

/// PCA of the deviations of every equality-set member from its set's mean.
pub fn identify_bias_subspace(equality_sets: &[Vec<&[f64]>], k: usize) -> Result<BiasSubspace> {
    let first = equality_sets
        .iter()
        .find_map(|s| s.first())
        .ok_or_else(|| Error::EmptySet("no equality sets".into()))?;
    let dim = first.len();
    if k == 0 || k > dim {
        return Err(Error::InvalidInput(format!("bias subspace size k={k} must lie in [1, {dim}]")));
    }

    let mut diffs: Vec<Vec<f64>> = Vec::new();
    for set in equality_sets.iter().filter(|s| !s.is_empty()) {
        if let Some(v) = set.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        let center = mean_of(set, dim);
        diffs.extend(set.iter().map(|e| sub(e, &center)));
    }
    let scale = equality_sets.iter().flatten().map(|v| norm(v)).fold(0.0, f64::max).max(1.0);
    if diffs.iter().all(|d| norm(d) <= 1e-12 * scale) {
        return Err(Error::Degenerate(
            "every equality-set member equals its set centre; no bias direction".into(),
        ));
    }

    let n = diffs.len() as f64;
    let rows: Vec<&[f64]> = diffs.iter().map(Vec::as_slice).collect();
    let global = mean_of(&rows, dim);
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for d in &diffs {
        let c: Vec<f64> = d.iter().zip(&global).map(|(x, m)| x - m).collect();
        for i in 0..dim {
            if c[i] == 0.0 {
                continue;
            }
            for j in i..dim {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > top * 1e-10).count();
    let k_eff = if k > rank {
        log::warn!("bias subspace: requested k={k} exceeds the rank {rank} of the equality-set deviations; using k={rank}");
        rank
    } else {
        k
    };

    let mut basis = Vec::with_capacity(k_eff);
    let mut explained_variance = Vec::with_capacity(k_eff);
    for &i in &order[..k_eff] {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        canonical_sign(&mut v);
        basis.push(v);
        explained_variance.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(BiasSubspace {
        basis,
        explained_variance,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NeutralizeReport {
    pub neutralized: usize,
    pub preserved: usize,
    /// Neutral words lying (numerically) inside the bias subspace.
    pub degenerate: Vec<String>,
}

/// Remove the subspace component from every word outside `preserve` and
/// renormalize.
pub fn neutralize(
    store: &EmbeddingStore,
    subspace: &BiasSubspace,
    preserve: &HashSet<usize>,
) -> Result<(EmbeddingStore, NeutralizeReport)> {
    if !store.is_normalized() {
        return Err(Error::NotNormalized("neutralize"));
    }
    check_subspace_dim(store, subspace)?;
    let mut out = store.clone();
    let dim = store.dim();
    let degenerate: Vec<usize> = out
        .data_mut()
        .par_chunks_mut(dim)
        .enumerate()
        .filter_map(|(i, row)| {
            if preserve.contains(&i) {
                return None;
            }
            let p = subspace.project(row);
            let r: Vec<f64> = row.iter().zip(&p).map(|(x, q)| x - q).collect();
            let rn = norm(&r);
            if rn < MIN_RESIDUAL {
                return Some(i);
            }
            row.iter_mut().zip(&r).for_each(|(x, ri)| *x = ri / rn);
            None
        })
        .collect();

    let report = NeutralizeReport {
        neutralized: store.len() - preserve.len().min(store.len()) - degenerate.len(),
        preserved: preserve.len(),
        degenerate: degenerate.iter().map(|&i| store.word(i).to_string()).collect(),
    };
    if !report.degenerate.is_empty() {
        log::warn!("neutralize: {} words lie inside the bias subspace and were left unchanged", report.degenerate.len());
    }
    Ok((out, report))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EqualizeReport {
    pub sets: usize,
    pub warnings: Vec<String>,
}

/// Give every member of each equality set the same off-subspace part and
/// an equal-length in-subspace part, keeping unit norm.
pub fn equalize(
    store: &EmbeddingStore,
    subspace: &BiasSubspace,
    equality_sets: &[Vec<usize>],
) -> Result<(EmbeddingStore, EqualizeReport)> {
    if !store.is_normalized() {
        return Err(Error::NotNormalized("equalize"));
    }
    check_subspace_dim(store, subspace)?;
    let dim = store.dim();
    let mut out = store.clone();
    let mut report = EqualizeReport::default();
    for set in equality_sets.iter().filter(|s| !s.is_empty()) {
        let members: Vec<&[f64]> = set.iter().map(|&i| out.row(i)).collect();
        let mu = mean_of(&members, dim);
        let mu_b = subspace.project(&mu);
        let nu = sub(&mu, &mu_b);
        let nu_norm2 = dot(&nu, &nu);
        let scale = if nu_norm2 > 1.0 {
            report.warnings.push(format!(
                "off-subspace centre of ({}) has norm above 1; in-subspace part set to zero",
                words(store, set)
            ));
            0.0
        } else {
            (1.0 - nu_norm2).sqrt()
        };
        let updates: Vec<(usize, Vec<f64>)> = set
            .iter()
            .map(|&i| {
                let w_b = subspace.project(out.row(i));
                let dev = sub(&w_b, &mu_b);
                let dn = norm(&dev);
                let new = if dn < MIN_RESIDUAL {
                    let nn = nu_norm2.sqrt();
                    report.warnings.push(format!(
                        "{} has no in-subspace deviation from its set centre",
                        store.word(i)
                    ));
                    if nn > 0.0 {
                        nu.iter().map(|x| x / nn).collect()
                    } else {
                        out.row(i).to_vec()
                    }
                } else {
                    nu.iter().zip(&dev).map(|(n, d)| n + scale * d / dn).collect()
                };
                (i, new)
            })
            .collect();
        for (i, v) in updates {
            out.row_mut(i).copy_from_slice(&v);
        }
        report.sets += 1;
    }
    for w in &report.warnings {
        log::warn!("equalize: {w}");
    }
    Ok((out, report))
}

fn words(store: &EmbeddingStore, set: &[usize]) -> String {
    set.iter().map(|&i| store.word(i)).collect::<Vec<_>>().join(",")
}

fn check_subspace_dim(store: &EmbeddingStore, subspace: &BiasSubspace) -> Result<()> {
    match subspace.basis.iter().find(|b| b.len() != store.dim()) {
        Some(b) => Err(Error::DimensionMismatch {
            expected: store.dim(),
            actual: b.len(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardDebiasOutcome {
    pub store: EmbeddingStore,
    pub subspace: BiasSubspace,
    pub neutralize: NeutralizeReport,
    pub equalize: EqualizeReport,
}

/// Normalize, identify the subspace, neutralize, equalize. `k` defaults to
/// one less than the number of subclasses.
pub fn hard_debias(store: &EmbeddingStore, lexicon: &ResolvedLexicon, k: Option<usize>) -> Result<HardDebiasOutcome> {
    let k = k.unwrap_or(lexicon.subclasses.len().saturating_sub(1).max(1));
    let normalized = store.normalize_all();
    let eq_sets: Vec<Vec<&[f64]>> = lexicon
        .equality_sets
        .iter()
        .map(|s| s.iter().map(|t| normalized.row(t.index)).collect())
        .collect();
    let subspace = identify_bias_subspace(&eq_sets, k)?;

    let preserve: HashSet<usize> = lexicon.identity_indices().into_iter().collect();
    let (neutral, n_report) = neutralize(&normalized, &subspace, &preserve)?;
    let candidates = store.len().saturating_sub(preserve.len());
    if candidates > 0 && n_report.degenerate.len() == candidates {
        return Err(Error::Degenerate(format!(
            "all {candidates} neutral words collapse onto the {}-dimensional bias subspace",
            subspace.k()
        )));
    }
    let eq_idx: Vec<Vec<usize>> = lexicon
        .equality_sets
        .iter()
        .map(|s| s.iter().map(|t| t.index).collect())
        .collect();
    let (equalized, e_report) = equalize(&neutral, &subspace, &eq_idx)?;
    log::info!(
        "hard debias: k={} neutralized={} preserved={} degenerate={} equality_sets={}",
        subspace.k(),
        n_report.neutralized,
        n_report.preserved,
        n_report.degenerate.len(),
        e_report.sets
    );
    Ok(HardDebiasOutcome {
        store: equalized,
        subspace,
        neutralize: n_report,
        equalize: e_report,
    })
}
