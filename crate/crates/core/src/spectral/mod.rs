//! Spectral clustering: Laplacian eigenvectors, embedding, k-means.

pub mod eigen;
pub mod kmeans;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, Laplacian, LaplacianMode, WeightedGraph};

pub use eigen::{smallest_eigenpairs, EigenPairs, EigenSolver};
pub use kmeans::{canonical_labels, kmeans, ClusteringResult, KMeansOptions};

/// Spectral embedding of the nodes.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// The `c` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, sign-normalized.
    pub eigenvectors: DMatrix<f64>,
    /// Rows fed to k-means.
    pub matrix: DMatrix<f64>,
    pub row_normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    /// Symmetric-normalized Laplacian with unit-norm rows.
    #[default]
    Njw,
    /// Random-walk Laplacian eigenvectors `D^{-1/2} v`, rows left as is.
    RandomWalk,
}

/// Flips each column so that its first entry with magnitude above 1e-12 is
/// positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        if let Some(&v) = col.iter().find(|v| v.abs() > 1e-12) {
            if v < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Embeds the nodes with the eigenvectors of the `c` smallest eigenvalues of
/// `lap`. Rows are scaled to unit length when the Laplacian is
/// symmetric-normalized.
pub fn spectral_embed(lap: &Laplacian, c: usize, solver: EigenSolver) -> Result<Embedding> {
    let EigenPairs { values, mut vectors } = smallest_eigenpairs(lap, c, solver)?;
    fix_signs(&mut vectors);
    let row_normalized = lap.mode == LaplacianMode::SymmetricNormalized;
    let mut matrix = vectors.clone();
    if row_normalized {
        for (i, mut row) in matrix.row_iter_mut().enumerate() {
            let norm = row.norm();
            if !(norm > 1e-300) {
                return Err(Error::Numeric(format!("embedding row {i} is zero")));
            }
            row /= norm;
        }
    }
    Ok(Embedding { eigenvalues: values, eigenvectors: vectors, matrix, row_normalized })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SpectralOptions {
    pub embedding: EmbeddingKind,
    pub solver: EigenSolver,
    pub kmeans: KMeansOptions,
}

/// Laplacian, embedding, then k-means on the embedded rows.
pub fn spectral_cluster(
    graph: &WeightedGraph,
    c: usize,
    seed: u64,
    opts: &SpectralOptions,
) -> Result<(ClusteringResult, Embedding)> {
    let lap = laplacian(graph, LaplacianMode::SymmetricNormalized)?;
    let mut emb = spectral_embed(&lap, c, opts.solver)?;
    if opts.embedding == EmbeddingKind::RandomWalk {
        let scaled = DMatrix::from_fn(emb.eigenvectors.nrows(), c, |i, k| {
            emb.eigenvectors[(i, k)] / lap.degrees[i].sqrt()
        });
        emb.matrix = scaled;
        emb.row_normalized = false;
    }
    let result = kmeans(&emb.matrix, c, seed, &opts.kmeans)?;
    Ok((result, emb))
}
