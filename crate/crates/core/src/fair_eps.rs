//! Fair ε-neighborhood graphs.
//!
//! Raw ε-neighborhoods are built by brute force. Nodes whose neighborhood
//! fails the fairness test gain the different-group members of their
//! density-reachable set with the smallest hop lengths.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{assemble_graph, SigmaRule, Symmetrize, WeightedGraph};
use crate::types::{counts_fair, group_split, required_diff, Dataset, Neighbor, NeighborList};

/// All `j != i` within distance `eps` of each node `i`.
pub fn build_eps_neighborhoods(dataset: &Dataset, eps: f64) -> Result<Vec<NeighborList>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} must be > 0")));
    }
    let n = dataset.len();
    let lists: Vec<NeighborList> = (0..n)
        .into_par_iter()
        .map(|i| {
            let entries = (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let d = dataset.dist(i, j);
                    (d <= eps).then(|| Neighbor::new(j, d))
                })
                .collect();
            NeighborList::from_entries(i, entries, None)
        })
        .collect();
    let isolated = lists.iter().filter(|l| l.is_empty()).count();
    if isolated > 0 {
        log::info!("{isolated} of {n} nodes have an empty ε-neighborhood (eps = {eps})");
    }
    Ok(lists)
}

/// ε-neighborhoods plus core-point flags.
#[derive(Debug, Clone)]
pub struct DensityIndex {
    pub eps: f64,
    pub min_pts: usize,
    pub core: Vec<bool>,
    pub neighborhoods: Vec<NeighborList>,
}

impl DensityIndex {
    pub fn new(neighborhoods: Vec<NeighborList>, eps: f64, min_pts: usize) -> Self {
        let core = compute_core_points(&neighborhoods, min_pts);
        Self { eps, min_pts, core, neighborhoods }
    }

    pub fn build(dataset: &Dataset, eps: f64, min_pts: usize) -> Result<Self> {
        Ok(Self::new(build_eps_neighborhoods(dataset, eps)?, eps, min_pts))
    }

    pub fn len(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighborhoods.is_empty()
    }
}

/// A point is core when its ε-ball holds at least `min_pts` points,
/// counting the point itself.
pub fn compute_core_points(neighborhoods: &[NeighborList], min_pts: usize) -> Vec<bool> {
    neighborhoods.iter().map(|l| l.len() + 1 >= min_pts).collect()
}

/// Nodes density-reachable from a source, with minimum chain lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachableSet {
    pub source: usize,
    /// (node, hop) in BFS order; hop >= 1.
    pub members: Vec<(usize, u32)>,
}

impl ReachableSet {
    pub fn hop(&self, node: usize) -> Option<u32> {
        self.members.iter().find(|m| m.0 == node).map(|m| m.1)
    }
}

/// Breadth-first expansion through core points. A node joins at hop `t + 1`
/// when it lies in the ε-neighborhood of a core member at hop `t`; non-core
/// members are reached but not expanded. A non-core source reaches nothing.
pub fn density_reachable_set(index: &DensityIndex, source: usize) -> ReachableSet {
    let mut members = Vec::new();
    if !index.core[source] {
        return ReachableSet { source, members };
    }
    let mut hop = vec![u32::MAX; index.len()];
    hop[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        if !index.core[u] {
            continue;
        }
        for nb in &index.neighborhoods[u].entries {
            if hop[nb.id] == u32::MAX {
                hop[nb.id] = hop[u] + 1;
                members.push((nb.id, hop[nb.id]));
                queue.push_back(nb.id);
            }
        }
    }
    ReachableSet { source, members }
}

/// Outcome of augmenting one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub list: NeighborList,
    /// Number of entries appended.
    pub added: usize,
    pub initially_fair: bool,
}

/// Makes a node's ε-neighborhood fair by appending different-group members
/// of its density-reachable set, ordered by (hop, distance, id). Appended
/// entries carry their Euclidean distance and hop length.
pub fn fair_augment(index: &DensityIndex, dataset: &Dataset, node: usize, alpha: f64) -> Augmented {
    let groups = dataset.groups();
    let g = groups[node];
    let mut list = index.neighborhoods[node].clone();
    let (same, diff) = group_split(&list, groups, g);
    if list.is_empty() || counts_fair(same, diff, alpha) {
        return Augmented { list, added: 0, initially_fair: true };
    }

    let reach = density_reachable_set(index, node);
    let mut pool: Vec<Neighbor> = reach
        .members
        .iter()
        .filter(|&&(j, _)| groups[j] != g && !list.contains(j))
        .map(|&(j, hop)| Neighbor { id: j, dist: dataset.dist(node, j), hop })
        .collect();
    pool.sort_by(|a, b| a.hop.cmp(&b.hop).then(a.cmp_key(b)));
    let mut pool = pool.into_iter();

    let mut added = 0;
    loop {
        let (same, diff) = group_split(&list, groups, g);
        if counts_fair(same, diff, alpha) {
            break;
        }
        let r = required_diff(same, alpha) - diff;
        let batch: Vec<Neighbor> = pool.by_ref().take(r).collect();
        if batch.is_empty() {
            list.infeasible = true;
            break;
        }
        added += batch.len();
        for nb in batch {
            list.insert_sorted(nb);
        }
    }
    Augmented { list, added, initially_fair: false }
}

/// Per-run counters for fair ε construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EpsReport {
    pub initially_unfair: usize,
    pub infeasible: usize,
    pub entries_added: usize,
    pub isolated: usize,
}

/// Final neighborhoods and the report for the fair ε construction.
pub fn fair_eps_neighborhoods(
    dataset: &Dataset,
    eps: f64,
    min_pts: usize,
    alpha: f64,
) -> Result<(Vec<NeighborList>, EpsReport)> {
    let index = DensityIndex::build(dataset, eps, min_pts)?;
    let results: Vec<Augmented> = (0..dataset.len())
        .into_par_iter()
        .map(|i| fair_augment(&index, dataset, i, alpha))
        .collect();
    let mut report = EpsReport::default();
    let mut lists = Vec::with_capacity(results.len());
    for r in results {
        report.initially_unfair += usize::from(!r.initially_fair);
        report.infeasible += usize::from(r.list.infeasible);
        report.entries_added += r.added;
        report.isolated += usize::from(r.list.is_empty());
        lists.push(r.list);
    }
    Ok((lists, report))
}

pub fn build_fair_eps_graph(
    dataset: &Dataset,
    eps: f64,
    min_pts: usize,
    alpha: f64,
    sigma: SigmaRule,
) -> Result<(WeightedGraph, EpsReport)> {
    let (lists, report) = fair_eps_neighborhoods(dataset, eps, min_pts, alpha)?;
    let (graph, _) = assemble_graph(&lists, sigma, Symmetrize::Union)?;
    Ok((graph, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::is_fair;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let groups = (0..n).map(|_| rng.random_range(0..2)).collect();
        Dataset::from_rows(&rows, groups, None).unwrap()
    }

    /// Transitive closure of "directly density-reachable" by repeated
    /// relaxation over a dense boolean matrix.
    fn closure_oracle(ds: &Dataset, eps: f64, min_pts: usize) -> Vec<Vec<bool>> {
        let n = ds.len();
        let within = |i: usize, j: usize| ds.dist(i, j) <= eps;
        let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| within(i, j)).count() >= min_pts).collect();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = i != j && core[i] && within(i, j);
            }
        }
        for m in 0..n {
            for i in 0..n {
                if reach[i][m] {
                    for j in 0..n {
                        if reach[m][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = false;
        }
        reach
    }

    #[test]
    fn eps_extremes() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![3.0]], vec![0, 1, 0], None).unwrap();
        assert!(build_eps_neighborhoods(&ds, 0.5).unwrap().iter().all(NeighborList::is_empty));
        assert!(build_eps_neighborhoods(&ds, 3.0).unwrap().iter().all(|l| l.len() == 2));
        assert!(build_eps_neighborhoods(&ds, 0.0).is_err());
    }

    #[test]
    fn eps_matches_distance_matrix() {
        let ds = random_dataset(100, 1);
        let lists = build_eps_neighborhoods(&ds, 1.5).unwrap();
        for i in 0..100 {
            let mut expect: Vec<usize> = (0..100).filter(|&j| j != i && ds.dist(i, j) <= 1.5).collect();
            let mut got: Vec<usize> = lists[i].ids().collect();
            expect.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn core_point_cases() {
        let ds = Dataset::from_rows(
            &[vec![0.0], vec![0.1], vec![0.2], vec![10.0]],
            vec![0, 1, 0, 1],
            None,
        )
        .unwrap();
        let idx1 = DensityIndex::build(&ds, 0.15, 1).unwrap();
        assert!(idx1.core.iter().all(|&c| c));
        let idx3 = DensityIndex::build(&ds, 0.15, 3).unwrap();
        assert_eq!(idx3.core, vec![false, true, false, false]);
    }

    #[test]
    fn core_points_match_count_oracle() {
        // Two interleaved half-moons.
        let mut rows = Vec::new();
        let mut groups = Vec::new();
        for i in 0..60 {
            let t = std::f64::consts::PI * i as f64 / 59.0;
            rows.push(vec![t.cos(), t.sin()]);
            rows.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
            groups.extend([i % 2, (i + 1) % 2]);
        }
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let idx = DensityIndex::build(&ds, 0.12, 3).unwrap();
        for i in 0..ds.len() {
            let count = (0..ds.len()).filter(|&j| ds.dist(i, j) <= 0.12).count();
            assert_eq!(idx.core[i], count >= 3);
        }
    }

    #[test]
    fn non_core_source_reaches_nothing() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![0.1], vec![5.0]], vec![0, 1, 0], None).unwrap();
        let idx = DensityIndex::build(&ds, 0.2, 3).unwrap();
        assert!(density_reachable_set(&idx, 0).members.is_empty());
    }

    #[test]
    fn dense_blob_hops() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.1]).collect();
        let ds = Dataset::from_rows(&rows, vec![0; 10], None).unwrap();
        let idx = DensityIndex::build(&ds, 0.55, 3).unwrap();
        let reach = density_reachable_set(&idx, 0);
        assert_eq!(reach.members.len(), 9);
        assert!(reach.members.iter().all(|&(_, h)| h == 1 || h == 2));
    }

    #[test]
    fn separated_blobs_and_closure_oracle() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|i| {
                    let off = if i < 20 { 0.0 } else { 50.0 };
                    vec![off + rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)]
                })
                .collect();
            let ds = Dataset::from_rows(&rows, (0..40).map(|i| i % 2).collect(), None).unwrap();
            let idx = DensityIndex::build(&ds, 1.0, 3).unwrap();
            let oracle = closure_oracle(&ds, 1.0, 3);
            for s in 0..40 {
                let reach = density_reachable_set(&idx, s);
                for (j, _) in &reach.members {
                    assert_eq!(*j < 20, s < 20, "cross-blob reach {s} -> {j}");
                }
                let mut got: Vec<usize> = reach.members.iter().map(|m| m.0).collect();
                got.sort_unstable();
                let expect: Vec<usize> = (0..40).filter(|&j| oracle[s][j]).collect();
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn augment_identity_when_fair() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![0.1], vec![0.2]], vec![0, 1, 1], None).unwrap();
        let idx = DensityIndex::build(&ds, 1.0, 3).unwrap();
        let a = fair_augment(&idx, &ds, 0, 0.8);
        assert_eq!(a.list, idx.neighborhoods[0]);
        assert_eq!(a.added, 0);
    }

    #[test]
    fn augment_adds_required_count() {
        // Owner 0 with five same-group and two other-group ε-neighbors; a chain
        // of other-group points extends to the right.
        let mut rows = vec![vec![0.0]];
        rows.extend((1..=5).map(|i| vec![i as f64 * 0.1]));
        rows.extend([vec![0.6], vec![0.7]]);
        rows.extend((0..6).map(|i| vec![1.5 + i as f64 * 0.5]));
        let mut groups = vec![0; 6];
        groups.extend(vec![1; 8]);
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let idx = DensityIndex::build(&ds, 0.8, 3).unwrap();
        assert_eq!(group_split(&idx.neighborhoods[0], ds.groups(), 0), (5, 2));
        let a = fair_augment(&idx, &ds, 0, 0.8);
        assert_eq!(a.added, 2);
        assert!(is_fair(&a.list, ds.groups(), 0, 0.8));
        assert!(!a.list.infeasible);
        let added: Vec<&Neighbor> = a.list.entries.iter().filter(|e| e.hop > 0).collect();
        assert_eq!(added.len(), 2);
        assert!(added.iter().all(|e| ds.groups()[e.id] == 1));
    }

    #[test]
    fn augment_interleaved_rings() {
        // Two concentric rings; inner ring points mostly group 0, outer mostly group 1.
        let mut rows = Vec::new();
        let mut groups = Vec::new();
        for i in 0..80 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 80.0;
            rows.push(vec![t.cos(), t.sin()]);
            groups.push(usize::from(i % 10 == 0));
            rows.push(vec![1.3 * t.cos(), 1.3 * t.sin()]);
            groups.push(usize::from(i % 10 != 0));
        }
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let eps = 0.2;
        let idx = DensityIndex::build(&ds, eps, 3).unwrap();
        let oracle = closure_oracle(&ds, eps, 3);
        for v in 0..ds.len() {
            let a = fair_augment(&idx, &ds, v, 0.8);
            if !a.list.infeasible {
                assert!(is_fair(&a.list, ds.groups(), ds.groups()[v], 0.8));
            }
            let raw = &idx.neighborhoods[v];
            assert!(raw.ids().all(|id| a.list.contains(id)));
            let reach = density_reachable_set(&idx, v);
            for e in a.list.entries.iter().filter(|e| !raw.contains(e.id)) {
                assert_ne!(ds.groups()[e.id], ds.groups()[v]);
                assert!(oracle[v][e.id]);
                // No unused different-group reachable node at a smaller hop.
                for &(j, h) in &reach.members {
                    if h < e.hop && ds.groups()[j] != ds.groups()[v] {
                        assert!(a.list.contains(j));
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_zero_matches_plain_eps() {
        let ds = random_dataset(80, 4);
        let (lists, report) = fair_eps_neighborhoods(&ds, 1.2, 3, 0.0).unwrap();
        assert_eq!(lists, build_eps_neighborhoods(&ds, 1.2).unwrap());
        assert_eq!(report.entries_added, 0);
    }

    #[test]
    fn added_count_matches_per_node_sum() {
        let ds = random_dataset(120, 6);
        let idx = DensityIndex::build(&ds, 1.2, 3).unwrap();
        let (lists, report) = fair_eps_neighborhoods(&ds, 1.2, 3, 0.8).unwrap();
        let recount: usize =
            lists.iter().zip(&idx.neighborhoods).map(|(f, raw)| f.len() - raw.len()).sum();
        assert_eq!(recount, report.entries_added);
        assert!(report.entries_added > 0);
    }
}
