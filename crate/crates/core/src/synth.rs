//! Stochastic block model with a fair ground-truth clustering, and
//! graph-smooth Gaussian node features.
//!
//! Clusters occupy contiguous index blocks of size `n / c`; inside each
//! cluster the `h` groups occupy contiguous sub-blocks of size `n / (c h)`,
//! so every cluster holds exactly `n / (c h)` members of every group.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::kmeans::derive_seed;
use crate::types::Dataset;

/// Eigenvalues of `Sigma` below this are a hard error; those between it and
/// zero are clipped to zero.
pub const PSD_CLIP: f64 = -1e-8;

const FEATURE_STREAM: u64 = 0xFEA7;
const NOISE_STREAM: u64 = 0x0015E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbmParams {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    /// Same cluster, same group.
    pub p: f64,
    /// Different clusters, same group.
    pub q: f64,
    /// Same cluster, different groups.
    pub r: f64,
    /// Different clusters, different groups.
    pub s: f64,
    pub weight_range: [f64; 2],
    pub noise_range: [f64; 2],
    pub d: usize,
    pub seed: u64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            n: 1000,
            c: 4,
            h: 2,
            p: 0.4,
            q: 0.3,
            r: 0.2,
            s: 0.1,
            weight_range: [0.1, 2.0],
            noise_range: [0.0, 0.2],
            d: 100,
            seed: 0,
        }
    }
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 || self.c == 0 || self.h == 0 || self.d == 0 {
            return bad("n, c, h and d must be positive".into());
        }
        if !self.n.is_multiple_of(self.c) || !(self.n / self.c).is_multiple_of(self.h) {
            return bad(format!("need c | n and h | n/c (n = {}, c = {}, h = {})", self.n, self.c, self.h));
        }
        for (name, v) in [("p", self.p), ("q", self.q), ("r", self.r), ("s", self.s)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is not a probability"));
            }
        }
        let [wl, wh] = self.weight_range;
        if !(wl > 0.0 && wl <= wh && wh.is_finite()) {
            return bad(format!("weight range [{wl}, {wh}] must satisfy 0 < lo <= hi"));
        }
        let [nl, nh] = self.noise_range;
        if !(nl >= 0.0 && nl <= nh && nh.is_finite()) {
            return bad(format!("noise range [{nl}, {nh}] must satisfy 0 <= lo <= hi"));
        }
        if !(self.p > self.q && self.q > self.r && self.r > self.s) {
            log::warn!(
                "edge probabilities p={} q={} r={} s={} are not strictly decreasing",
                self.p,
                self.q,
                self.r,
                self.s
            );
        }
        Ok(())
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        i / (self.n / self.c)
    }

    pub fn group_of(&self, i: usize) -> usize {
        (i % (self.n / self.c)) / (self.n / (self.c * self.h))
    }

    /// Edge probability between two distinct nodes.
    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        match (self.cluster_of(i) == self.cluster_of(j), self.group_of(i) == self.group_of(j)) {
            (true, true) => self.p,
            (false, true) => self.q,
            (true, false) => self.r,
            (false, false) => self.s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SbmInstance {
    pub params: SbmParams,
    /// Row-normalized weighted adjacency; row `i` lists `(j, w)` sorted by `j`.
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub truth: Vec<usize>,
    pub groups: Vec<usize>,
    pub features: Option<DMatrix<f64>>,
}

impl SbmInstance {
    /// `(A + A^T) / 2` as an undirected graph.
    pub fn symmetrized_graph(&self) -> Result<WeightedGraph> {
        let mut edges = Vec::new();
        for (i, row) in self.adjacency.iter().enumerate() {
            for &(j, w) in row {
                if i < j {
                    let back = self.adjacency[j]
                        .binary_search_by_key(&i, |e| e.0)
                        .map_or(0.0, |pos| self.adjacency[j][pos].1);
                    edges.push((i, j, 0.5 * (w + back)));
                }
            }
        }
        WeightedGraph::from_edges(self.params.n, edges)
    }

    /// Dense unnormalized Laplacian of the symmetrized adjacency.
    pub fn laplacian_dense(&self) -> Result<DMatrix<f64>> {
        let g = self.symmetrized_graph()?;
        let mut l = -g.to_dense();
        for i in 0..g.num_nodes() {
            l[(i, i)] = g.degree(i);
        }
        Ok(l)
    }

    /// Features with ground truth attached. Requires generated features.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let x = self
            .features
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("SBM instance has no features".into()))?;
        let (n, d) = x.shape();
        let mut points = Vec::with_capacity(n * d);
        for i in 0..n {
            points.extend(x.row(i).iter());
        }
        Dataset::new(points, d, self.groups.clone(), Some(self.truth.clone()))
    }
}

/// Draws the block-model graph. Features are left empty.
pub fn generate_sbm(params: &SbmParams) -> Result<SbmInstance> {
    params.validate()?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let [wl, wh] = params.weight_range;
    let draw_weight = |rng: &mut ChaCha8Rng| if wl == wh { wl } else { rng.random_range(wl..=wh) };

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(params.edge_probability(i, j)) {
                let w = draw_weight(&mut rng);
                rows[i].push((j, w));
                rows[j].push((i, w));
            }
        }
    }
    for i in 0..n {
        if rows[i].is_empty() {
            log::debug!("SBM node {i} drew no edges; redrawing its row");
            for j in (0..n).filter(|&j| j != i) {
                if rng.random_bool(params.edge_probability(i, j)) {
                    let w = draw_weight(&mut rng);
                    rows[i].push((j, w));
                    rows[j].push((i, w));
                }
            }
            if rows[i].is_empty() {
                return Err(Error::ZeroDegree { node: i });
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|e| e.0);
        let total: f64 = row.iter().map(|e| e.1).sum();
        for e in row.iter_mut() {
            e.1 /= total;
        }
    }
    Ok(SbmInstance {
        params: params.clone(),
        adjacency: rows,
        truth: (0..n).map(|i| params.cluster_of(i)).collect(),
        groups: (0..n).map(|i| params.group_of(i)).collect(),
        features: None,
    })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude below `1e-10 * max |lambda|` are treated as zero.
pub fn pseudo_inverse_symmetric(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.amax();
    let inv = eig.eigenvalues.map(|l| if l.abs() > 1e-10 * scale { 1.0 / l } else { 0.0 });
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= inv[k];
    }
    let out = scaled * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// `Sigma = L^+ + diag(xi)` for the instance's symmetrized Laplacian.
pub fn feature_covariance(instance: &SbmInstance, xi: &[f64]) -> Result<DMatrix<f64>> {
    let n = instance.params.n;
    if xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: xi.len() });
    }
    let mut sigma = pseudo_inverse_symmetric(&instance.laplacian_dense()?);
    for (i, x) in xi.iter().enumerate() {
        sigma[(i, i)] += x;
    }
    Ok(sigma)
}

/// Draws `d` columns from `N(0, sigma)` via `V Lambda^{1/2} z`. Column `j`
/// uses its own seed derived from `seed`, so columns can be drawn in
/// parallel.
pub fn sample_gaussian_columns(sigma: &DMatrix<f64>, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    let eig = SymmetricEigen::new(sigma.clone());
    let min = eig.eigenvalues.min();
    if min < PSD_CLIP {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    let mut factor = eig.eigenvectors;
    for (k, mut col) in factor.column_iter_mut().enumerate() {
        col *= eig.eigenvalues[k].max(0.0).sqrt();
    }
    let columns: Vec<DVector<f64>> = (0..d as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j));
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            &factor * z
        })
        .collect();
    Ok(DMatrix::from_columns(&columns))
}

/// Samples the `n x d` feature matrix with noise `xi_i ~ U[noise_range]`.
pub fn generate_features(instance: &SbmInstance, d: usize, noise_range: [f64; 2], seed: u64) -> Result<DMatrix<f64>> {
    let n = instance.params.n;
    let [lo, hi] = noise_range;
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise range [{lo}, {hi}] must satisfy 0 <= lo <= hi")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, NOISE_STREAM));
    let xi: Vec<f64> = (0..n).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect();
    let sigma = feature_covariance(instance, &xi)?;
    sample_gaussian_columns(&sigma, d, derive_seed(seed, FEATURE_STREAM))
}

/// Graph plus features, all driven by `params.seed`.
pub fn generate_instance(params: &SbmParams) -> Result<SbmInstance> {
    let mut inst = generate_sbm(params)?;
    inst.features = Some(generate_features(&inst, params.d, params.noise_range, params.seed)?);
    Ok(inst)
}
