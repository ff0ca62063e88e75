//! Weighted undirected graphs built from neighbor lists, and their Laplacians.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::NeighborList;

/// Sparse symmetric graph, one `(i, j, w)` per unordered pair with `i < j`
/// and `w > 0`, sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Bandwidth used for Gaussian weighting, if any.
    pub sigma: Option<f64>,
}

impl WeightedGraph {
    /// Builds from undirected edges. Duplicate pairs keep the larger weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) has weight {w}")));
            }
            let key = (a.min(b), a.max(b));
            let slot = map.entry(key).or_insert(w);
            *slot = slot.max(w);
        }
        let edges: Vec<(usize, usize, f64)> = map.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for row in &mut adjacency {
            row.sort_by_key(|e| e.0);
        }
        Ok(Self { n, edges, adjacency, sigma: None })
    }

    /// Symmetrizes a dense weight matrix as `(W + W^T) / 2`, dropping zeros
    /// and the diagonal.
    pub fn from_dense_symmetrized(w: &DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (w[(i, j)] + w[(j, i)]);
                if v > 0.0 {
                    edges.push((i, j, v));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|e| e.1).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.adjacency[i].is_empty()).collect()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |p| self.adjacency[i][p].1)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        m
    }
}

/// `exp(-dist^2 / (2 sigma^2))`.
pub fn gaussian_weight(dist: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma {sigma} must be > 0")));
    }
    Ok((-dist * dist / (2.0 * sigma * sigma)).exp())
}

/// How the Gaussian bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum SigmaRule {
    /// Mean distance over the retained edges.
    MeanEdge,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetrize {
    /// Edge if either endpoint lists the other.
    #[default]
    Union,
    /// Edge only if both endpoints list each other.
    Mutual,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub sigma: f64,
    pub edges: usize,
    pub isolated: Vec<usize>,
}

/// Undirected Gaussian-weighted graph from per-node neighbor lists.
pub fn assemble_graph(
    lists: &[NeighborList],
    sigma: SigmaRule,
    symmetrize: Symmetrize,
) -> Result<(WeightedGraph, AssemblyReport)> {
    let n = lists.len();
    for (i, l) in lists.iter().enumerate() {
        if l.owner != i {
            return Err(Error::InvalidParameter(format!("list at position {i} belongs to node {}", l.owner)));
        }
    }
    // (i, j) -> (distance, number of endpoints listing the pair)
    let mut pairs: BTreeMap<(usize, usize), (f64, u8)> = BTreeMap::new();
    for l in lists {
        for e in &l.entries {
            if e.id >= n {
                return Err(Error::InvalidParameter(format!("neighbor {} out of range", e.id)));
            }
            let key = (l.owner.min(e.id), l.owner.max(e.id));
            let slot = pairs.entry(key).or_insert((e.dist, 0));
            slot.1 += 1;
        }
    }
    let kept: Vec<((usize, usize), f64)> = pairs
        .into_iter()
        .filter(|(_, (_, c))| symmetrize == Symmetrize::Union || *c >= 2)
        .map(|(k, (d, _))| (k, d))
        .collect();

    let sigma = match sigma {
        SigmaRule::Fixed(s) => s,
        SigmaRule::MeanEdge => {
            let mean = if kept.is_empty() {
                0.0
            } else {
                kept.iter().map(|e| e.1).sum::<f64>() / kept.len() as f64
            };
            if mean > 0.0 {
                mean
            } else {
                1.0
            }
        }
    };
    let mut edges = Vec::with_capacity(kept.len());
    for ((i, j), d) in kept {
        let w = gaussian_weight(d, sigma)?.max(f64::MIN_POSITIVE);
        edges.push((i, j, w));
    }
    let mut graph = WeightedGraph::from_edges(n, edges)?;
    graph.sigma = Some(sigma);
    let isolated = graph.isolated_nodes();
    if !isolated.is_empty() {
        log::warn!("{} isolated node(s) after {:?} symmetrization", isolated.len(), symmetrize);
    }
    let report = AssemblyReport { sigma, edges: graph.num_edges(), isolated };
    Ok((graph, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianMode {
    Unnormalized,
    SymmetricNormalized,
}

/// Graph Laplacian in sparse form: `D - W` or `I - D^{-1/2} W D^{-1/2}`.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub mode: LaplacianMode,
    pub degrees: Vec<f64>,
    diag: Vec<f64>,
    /// Off-diagonal entries per row, already negated and scaled.
    rows: Vec<Vec<(usize, f64)>>,
}

pub fn laplacian(graph: &WeightedGraph, mode: LaplacianMode) -> Result<Laplacian> {
    let n = graph.num_nodes();
    let degrees = graph.degrees();
    let (diag, rows) = match mode {
        LaplacianMode::Unnormalized => {
            let rows = (0..n)
                .map(|i| graph.neighbors(i).iter().map(|&(j, w)| (j, -w)).collect())
                .collect();
            (degrees.clone(), rows)
        }
        LaplacianMode::SymmetricNormalized => {
            if let Some(node) = degrees.iter().position(|&d| !(d > 0.0)) {
                return Err(Error::ZeroDegree { node });
            }
            let inv: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
            let rows = (0..n)
                .map(|i| graph.neighbors(i).iter().map(|&(j, w)| (j, -w * inv[i] * inv[j])).collect())
                .collect();
            (vec![1.0; n], rows)
        }
    };
    Ok(Laplacian { mode, degrees, diag, rows })
}

impl Laplacian {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| self.diag[i] * x[i] + self.rows[i].iter().map(|&(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    pub fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(self.apply(x.as_slice()))
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Gershgorin upper bound on the largest eigenvalue.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.size())
            .map(|i| self.diag[i].abs() + self.rows[i].iter().map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Neighbor;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn list(owner: usize, ids: &[(usize, f64)]) -> NeighborList {
        NeighborList::from_entries(owner, ids.iter().map(|&(i, d)| Neighbor::new(i, d)).collect(), None)
    }

    fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> WeightedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j, rng.random_range(0.1..2.0)));
                }
            }
        }
        WeightedGraph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn gaussian_weight_values() {
        assert_eq!(gaussian_weight(0.0, 1.3).unwrap(), 1.0);
        let s = 0.7;
        assert!((gaussian_weight(s * 2f64.sqrt(), s).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(gaussian_weight(1.0, 0.0).is_err());
        assert!(gaussian_weight(1.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_weight_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let d = rng.random_range(0.01..3.0);
            let s = rng.random_range(0.1..3.0);
            let w = gaussian_weight(d, s).unwrap();
            assert!(gaussian_weight(d * 1.1, s).unwrap() < w);
            assert!(gaussian_weight(d, s * 1.1).unwrap() > w);
        }
    }

    #[test]
    fn eps_mode_excludes_far_pairs() {
        // Pairs outside the radius never appear in the lists, so no edge exists.
        let lists = vec![list(0, &[(1, 0.5)]), list(1, &[(0, 0.5)]), list(2, &[])];
        let (g, report) = assemble_graph(&lists, SigmaRule::Fixed(1.0), Symmetrize::Union).unwrap();
        assert_eq!(g.weight(0, 2), 0.0);
        assert_eq!(report.isolated, vec![2]);
    }

    #[test]
    fn symmetric_lists_union_equals_mutual() {
        let lists = vec![
            list(0, &[(1, 1.0), (2, 2.0)]),
            list(1, &[(0, 1.0)]),
            list(2, &[(0, 2.0)]),
        ];
        let (u, _) = assemble_graph(&lists, SigmaRule::MeanEdge, Symmetrize::Union).unwrap();
        let (m, _) = assemble_graph(&lists, SigmaRule::MeanEdge, Symmetrize::Mutual).unwrap();
        assert_eq!(u, m);
        assert_eq!(u.sigma, Some(1.5));
    }

    #[test]
    fn path_graph_edges() {
        let lists = vec![
            list(0, &[(1, 1.0)]),
            list(1, &[(2, 1.0)]),
            list(2, &[(3, 1.0)]),
            list(3, &[(2, 1.0)]),
        ];
        let (g, _) = assemble_graph(&lists, SigmaRule::Fixed(1.0), Symmetrize::Union).unwrap();
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.0, e.1)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        let (m, report) = assemble_graph(&lists, SigmaRule::Fixed(1.0), Symmetrize::Mutual).unwrap();
        assert_eq!(m.num_edges(), 1);
        assert_eq!(report.isolated, vec![0, 1]);
    }

    #[test]
    fn union_edge_count_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 25;
            let mut dense = vec![vec![false; n]; n];
            let lists: Vec<NeighborList> = (0..n)
                .map(|i| {
                    let mut entries = Vec::new();
                    for j in 0..n {
                        if j != i && rng.random_bool(0.15) {
                            dense[i][j] = true;
                            entries.push(Neighbor::new(j, 1.0 + (i + j) as f64));
                        }
                    }
                    NeighborList::from_entries(i, entries, None)
                })
                .collect();
            let expect = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| dense[i][j] || dense[j][i])
                .count();
            let (g, _) = assemble_graph(&lists, SigmaRule::MeanEdge, Symmetrize::Union).unwrap();
            assert_eq!(g.num_edges(), expect);
        }
    }

    #[test]
    fn two_components_two_zero_eigenvalues() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        for mode in [LaplacianMode::Unnormalized, LaplacianMode::SymmetricNormalized] {
            let eigs = sorted_eigs(laplacian(&g, mode).unwrap().to_dense());
            assert!(eigs[0].abs() < 1e-12 && eigs[1].abs() < 1e-12);
            assert!(eigs[2] > 0.5);
        }
    }

    #[test]
    fn k3_spectrum() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let eigs = sorted_eigs(laplacian(&g, LaplacianMode::Unnormalized).unwrap().to_dense());
        for (got, want) in eigs.iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_degree_rejected_in_normalized_mode() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            laplacian(&g, LaplacianMode::SymmetricNormalized),
            Err(Error::ZeroDegree { node: 2 })
        ));
        assert!(laplacian(&g, LaplacianMode::Unnormalized).is_ok());
    }

    #[test]
    fn random_laplacians_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let g = random_graph(40, 0.3, seed);
            for mode in [LaplacianMode::Unnormalized, LaplacianMode::SymmetricNormalized] {
                let lap = laplacian(&g, mode).unwrap();
                assert!(sorted_eigs(lap.to_dense())[0] >= -1e-9);
                for _ in 0..100 {
                    let x: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
                    assert!(lap.quadratic_form(&x) >= -1e-9);
                }
            }
            let lap = laplacian(&g, LaplacianMode::Unnormalized).unwrap();
            assert!(lap.apply(&[1.0; 40]).iter().all(|v| v.abs() < 1e-9));
        }
    }
}
