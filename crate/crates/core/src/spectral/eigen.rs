//! Smallest eigenpairs of a graph Laplacian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Laplacian;

/// Largest graph solved with the dense symmetric eigensolver under `Auto`.
pub const DENSE_LIMIT: usize = 2000;
/// Residual tolerance of the Krylov solver, relative to the spectral bound.
pub const KRYLOV_TOL: f64 = 1e-10;
/// Matrix-vector product budget of the Krylov solver.
pub const KRYLOV_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EigenSolver {
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// `c` smallest eigenvalues (ascending) and their eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn smallest_eigenpairs(lap: &Laplacian, c: usize, solver: EigenSolver) -> Result<EigenPairs> {
    let n = lap.size();
    if c == 0 || c > n {
        return Err(Error::InvalidParameter(format!("need 1 <= c <= n, got c = {c}, n = {n}")));
    }
    let use_dense = match solver {
        EigenSolver::Dense => true,
        EigenSolver::Krylov => false,
        EigenSolver::Auto => n <= DENSE_LIMIT,
    };
    let pairs = if use_dense { dense(lap, c) } else { block_krylov(lap, c)? };
    let residual = max_residual(lap, &pairs);
    let scale = spectral_bound(lap).max(1.0);
    if !(residual <= 1e-6 * scale) {
        return Err(Error::EigenNonConvergence { residual });
    }
    Ok(pairs)
}

/// Largest `||L v - lambda v||` over the pairs.
pub fn max_residual(lap: &Laplacian, pairs: &EigenPairs) -> f64 {
    (0..pairs.values.len())
        .map(|k| {
            let v = pairs.vectors.column(k).into_owned();
            (lap.apply_vec(&v) - &v * pairs.values[k]).norm()
        })
        .fold(0.0, f64::max)
}

fn dense(lap: &Laplacian, c: usize) -> EigenPairs {
    let eig = SymmetricEigen::new(lap.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order[..c].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(lap.size(), c, |r, k| eig.eigenvectors[(r, order[k])]);
    EigenPairs { values, vectors }
}

fn spectral_bound(lap: &Laplacian) -> f64 {
    lap.gershgorin_bound()
}

/// Orthogonalizes `v` against `basis` (two passes of classical
/// Gram-Schmidt). Returns the norm left after projection.
fn orthogonalize(basis: &[DVector<f64>], v: &mut DVector<f64>) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let dot = q.dot(v);
            v.axpy(-dot, q, 1.0);
        }
    }
    v.norm()
}

/// Block Krylov iteration with full reorthogonalization and Rayleigh-Ritz
/// extraction on the shifted operator `sigma I - L`, whose largest
/// eigenpairs are the smallest of `L`. The block width exceeds `c`, so
/// eigenvalues of multiplicity up to the block width are resolved.
fn block_krylov(lap: &Laplacian, c: usize) -> Result<EigenPairs> {
    let n = lap.size();
    let shift = spectral_bound(lap);
    let block = (c + 4).min(n);
    let max_dim = n.min(KRYLOV_MAX_ITER);
    let tol = KRYLOV_TOL * shift.max(1.0);
    let apply = |v: &DVector<f64>| -> DVector<f64> { v * shift - lap.apply_vec(v) };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut random_vec = || DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut images: Vec<DVector<f64>> = Vec::new();
    let mut frontier: Vec<DVector<f64>> = (0..block).map(|_| random_vec()).collect();
    let mut best_residual = f64::INFINITY;

    loop {
        let start = basis.len();
        for mut v in std::mem::take(&mut frontier) {
            if basis.len() == max_dim {
                break;
            }
            let before = v.norm();
            if orthogonalize(&basis, &mut v) <= 1e-10 * before.max(f64::MIN_POSITIVE) {
                // Direction exhausted (invariant subspace); continue from a fresh one.
                v = random_vec();
                if orthogonalize(&basis, &mut v) <= 1e-10 {
                    continue;
                }
            }
            let norm = v.norm();
            v /= norm;
            images.push(apply(&v));
            basis.push(v);
        }
        let m = basis.len();
        let grew = m > start;
        if m >= c {
            let q = DMatrix::from_columns(&basis);
            let t = q.transpose() * DMatrix::from_columns(&images);
            let t = (&t + t.transpose()) * 0.5;
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
            let top = &order[..c];
            let vectors = &q * DMatrix::from_fn(m, c, |r, k| eig.eigenvectors[(r, top[k])]);
            let values: Vec<f64> = top.iter().map(|&i| shift - eig.eigenvalues[i]).collect();
            let pairs = EigenPairs { values, vectors };
            let residual = max_residual(lap, &pairs);
            best_residual = best_residual.min(residual);
            if residual <= tol || m == max_dim || !grew {
                if residual > 1e-6 * shift.max(1.0) {
                    return Err(Error::EigenNonConvergence { residual: best_residual });
                }
                return Ok(pairs);
            }
        } else if !grew {
            return Err(Error::EigenNonConvergence { residual: best_residual });
        }
        frontier = images[start..].to_vec();
    }
}
