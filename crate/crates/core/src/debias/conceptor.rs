//! Conceptor debiasing. A conceptor `C = R (R + α⁻² I)⁻¹` built from the
//! correlation matrix of bias words softly projects onto their dominant
//! directions; `I - C` damps those directions in every word vector.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::lexicon::ResolvedLexicon;
use crate::linalg::rows_to_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Conceptor {
    /// Symmetric `d × d` matrix with eigenvalues in `[0, 1)`.
    pub matrix: DMatrix<f64>,
    pub aperture: f64,
    pub source_word_count: usize,
    /// Eigenvalues of `matrix`, descending.
    pub eigenvalues: Vec<f64>,
}

impl Conceptor {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Binary layout: `u64` d, `f64` aperture, then `d²` row-major `f64`,
    /// all little-endian.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let d = self.dim();
        w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&self.aperture.to_le_bytes()).map_err(io)?;
        for i in 0..d {
            for j in 0..d {
                w.write_all(&self.matrix[(i, j)].to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut r = BufReader::new(File::open(path).map_err(io)?);
        let mut b8 = [0u8; 8];
        let mut offset = 0u64;
        let mut next = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
            r.read_exact(&mut b8).map_err(|_| Error::Binary {
                path: path.to_path_buf(),
                offset,
                message: "truncated conceptor file".into(),
            })?;
            offset += 8;
            Ok(b8)
        };
        let d = u64::from_le_bytes(next(&mut r)?) as usize;
        let aperture = f64::from_le_bytes(next(&mut r)?);
        if d == 0 || d > 1 << 16 {
            return Err(Error::Binary {
                path: path.to_path_buf(),
                offset: 0,
                message: format!("implausible conceptor dimension {d}"),
            });
        }
        let mut matrix = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                matrix[(i, j)] = f64::from_le_bytes(next(&mut r)?);
            }
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            matrix,
            aperture,
            source_word_count: 0,
            eigenvalues,
        })
    }
}

/// `R = XᵀX / n`, or the covariance when `centered`.
pub fn correlation_matrix(vectors: &[&[f64]], centered: bool) -> Result<DMatrix<f64>> {
    let first = vectors.first().ok_or_else(|| Error::EmptySet("no bias word vectors".into()))?;
    let dim = first.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    let mut x = rows_to_matrix(vectors, dim);
    if centered {
        let mean = x.row_mean();
        for mut row in x.row_iter_mut() {
            row -= &mean;
        }
    }
    let mut r = x.transpose() * &x;
    r /= vectors.len() as f64;
    Ok((&r + r.transpose()) * 0.5)
}

/// Map each eigenvalue `σ` of `R` to `σ / (σ + α⁻²)`.
pub fn compute_conceptor(r: &DMatrix<f64>, aperture: f64) -> Result<Conceptor> {
    if !(aperture > 0.0 && aperture.is_finite()) {
        return Err(Error::InvalidInput(format!("aperture must be positive and finite, got {aperture}")));
    }
    if !r.is_square() {
        return Err(Error::InvalidInput("correlation matrix must be square".into()));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("correlation matrix has non-finite entries".into()));
    }
    let reg = aperture.powi(-2);
    let eig = SymmetricEigen::new(r.clone());
    let mapped: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&s| {
            let s = s.max(0.0);
            s / (s + reg)
        })
        .collect();
    let v = &eig.eigenvectors;
    let d = r.nrows();
    let scaled = DMatrix::from_fn(d, d, |i, j| v[(i, j)] * mapped[j]);
    let c = &scaled * v.transpose();
    let matrix = (&c + c.transpose()) * 0.5;
    let mut eigenvalues = mapped;
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(Conceptor {
        matrix,
        aperture,
        source_word_count: 0,
        eigenvalues,
    })
}

/// Replace every row `x` by `(I - C) x`. Rows are not renormalized.
pub fn apply_negated(store: &EmbeddingStore, conceptor: &Conceptor) -> Result<EmbeddingStore> {
    let d = store.dim();
    if conceptor.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: conceptor.dim(),
        });
    }
    // row-major copy of I - C
    let neg: Vec<f64> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| f64::from(u8::from(i == j)) - conceptor.matrix[(i, j)])
        .collect();
    let mut out = store.clone();
    out.data_mut().par_chunks_mut(d).for_each(|row| {
        let x = row.to_vec();
        for (i, yi) in row.iter_mut().enumerate() {
            let m = &neg[i * d..(i + 1) * d];
            *yi = m.iter().zip(&x).map(|(a, b)| a * b).sum();
        }
    });
    out.set_normalized(false);
    Ok(out)
}

/// Conceptor from all target and equality-set terms, negated and applied
/// to the whole vocabulary.
pub fn conceptor_debias(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    aperture: f64,
    centered: bool,
) -> Result<(EmbeddingStore, Conceptor)> {
    let idx = lexicon.identity_indices();
    if idx.is_empty() {
        return Err(Error::EmptySet("conceptor bias-word set is empty".into()));
    }
    let rows: Vec<&[f64]> = idx.iter().map(|&i| store.row(i)).collect();
    let r = correlation_matrix(&rows, centered)?;
    let mut c = compute_conceptor(&r, aperture)?;
    c.source_word_count = rows.len();
    let out = apply_negated(store, &c)?;
    log::info!(
        "conceptor debias: aperture={aperture} bias_words={} top_eigenvalue={:.6}",
        rows.len(),
        c.eigenvalues.first().copied().unwrap_or(0.0)
    );
    Ok((out, c))
}
