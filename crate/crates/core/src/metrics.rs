//! Clustering evaluation: Balance, clustering error / accuracy under optimal
//! label matching, silhouette score, and normalized cut.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::types::Dataset;

/// Scores for one (graph method, clustering, dataset) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub balance: f64,
    pub ncut_sum: Option<f64>,
    pub ncut_normalized: Option<f64>,
    pub silhouette: Option<f64>,
    pub ce: Option<f64>,
    pub acc: Option<f64>,
    pub infeasible_count: usize,
    pub params: serde_json::Value,
}

fn count_table(labels: &[usize], other: &[usize]) -> Vec<Vec<usize>> {
    let rows = labels.iter().max().map_or(0, |m| m + 1);
    let cols = other.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; cols]; rows];
    for (&a, &b) in labels.iter().zip(other) {
        table[a][b] += 1;
    }
    table
}

/// Per-cluster balance: min over group pairs of count ratios, i.e. the
/// smallest group count over the largest. A cluster missing any group (or
/// empty) scores 0.
pub fn cluster_balances(labels: &[usize], groups: &[usize]) -> Vec<f64> {
    let table = count_table(labels, groups);
    let h = groups.iter().max().map_or(0, |m| m + 1).max(2);
    table
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let mut counts = row.clone();
            counts.resize(h, 0);
            let min = *counts.iter().min().unwrap_or(&0);
            let max = *counts.iter().max().unwrap_or(&0);
            if max == 0 {
                log::warn!("cluster {c} is empty; its balance is 0");
                0.0
            } else {
                min as f64 / max as f64
            }
        })
        .collect()
}

/// Minimum per-cluster balance.
pub fn balance(labels: &[usize], groups: &[usize]) -> f64 {
    assert_eq!(labels.len(), groups.len(), "labels and groups differ in length");
    cluster_balances(labels, groups).into_iter().fold(1.0, f64::min)
}

/// Balance of the whole dataset taken as a single cluster.
pub fn dataset_balance(dataset: &Dataset) -> f64 {
    balance(&vec![0; dataset.len()], dataset.groups())
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method with potentials). Returns `assignment[row] = col`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based arrays; index 0 is the virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn matched_agreement(labels: &[usize], truth: &[usize]) -> Result<usize> {
    if labels.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: labels.len() });
    }
    let table = count_table(labels, truth);
    let (cp, ct) = (table.len(), table.first().map_or(0, Vec::len));
    if cp != ct {
        return Err(Error::InvalidParameter(format!(
            "predicted labels use {cp} clusters but ground truth has {ct}"
        )));
    }
    let cost: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|&x| -(x as f64)).collect()).collect();
    let assign = hungarian(&cost);
    Ok(assign.iter().enumerate().map(|(r, &c)| table[r][c]).sum())
}

/// Fraction of points mislabeled under the best one-to-one matching of
/// predicted to true clusters.
pub fn clustering_error(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    let agree = matched_agreement(labels, truth)?;
    Ok((labels.len() - agree) as f64 / labels.len() as f64)
}

/// `1 - clustering_error`, under the same matching.
pub fn accuracy(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(1.0);
    }
    let agree = matched_agreement(labels, truth)?;
    Ok(agree as f64 / labels.len() as f64)
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette(dataset: &Dataset, labels: &[usize]) -> Result<f64> {
    let n = dataset.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: labels.len() });
    }
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; c];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidParameter("silhouette needs at least two non-empty clusters".into()));
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; c];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += dataset.dist(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..c)
                .filter(|&k| k != own && sizes[k] > 0)
                .map(|k| sums[k] / sizes[k] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / n as f64)
}

/// Per-cluster normalized cut `cut(C, rest) / vol(C)`.
pub fn ncut_per_cluster(graph: &WeightedGraph, labels: &[usize]) -> Result<Vec<f64>> {
    let n = graph.num_nodes();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: labels.len() });
    }
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut cut = vec![0.0; c];
    let mut vol = vec![0.0; c];
    for i in 0..n {
        for &(j, w) in graph.neighbors(i) {
            vol[labels[i]] += w;
            if labels[j] != labels[i] {
                cut[labels[i]] += w;
            }
        }
    }
    (0..c)
        .map(|k| {
            if vol[k] > 0.0 {
                Ok(cut[k] / vol[k])
            } else {
                Err(Error::Numeric(format!("cluster {k} has zero volume")))
            }
        })
        .collect()
}

/// `(sum over clusters, sum / c)`.
pub fn ncut(graph: &WeightedGraph, labels: &[usize]) -> Result<(f64, f64)> {
    let per = ncut_per_cluster(graph, labels)?;
    let sum: f64 = per.iter().sum();
    Ok((sum, sum / per.len().max(1) as f64))
}

/// Runs every applicable metric. NCut needs a graph, CE/Acc need ground
/// truth; silhouette is skipped when only one cluster is present.
pub fn evaluate(
    dataset: &Dataset,
    labels: &[usize],
    graph: Option<&WeightedGraph>,
    infeasible_count: usize,
    params: serde_json::Value,
) -> Result<EvalReport> {
    let bal = balance(labels, dataset.groups());
    let (ncut_sum, ncut_normalized) = match graph {
        Some(g) => {
            let (s, m) = ncut(g, labels)?;
            (Some(s), Some(m))
        }
        None => (None, None),
    };
    let silhouette = match silhouette(dataset, labels) {
        Ok(s) => Some(s),
        Err(Error::InvalidParameter(msg)) => {
            log::warn!("silhouette skipped: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    let (ce, acc) = match dataset.truth() {
        Some(t) => {
            let ce = clustering_error(labels, t)?;
            (Some(ce), Some(1.0 - ce))
        }
        None => (None, None),
    };
    Ok(EvalReport { balance: bal, ncut_sum, ncut_normalized, silhouette, ce, acc, infeasible_count, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(c: usize) -> Vec<Vec<usize>> {
        if c == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(c - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, c - 1);
                out.push(q);
            }
        }
        out
    }

    fn ce_oracle(labels: &[usize], truth: &[usize], c: usize) -> f64 {
        permutations(c)
            .iter()
            .map(|perm| labels.iter().zip(truth).filter(|(l, t)| perm[**l] != **t).count())
            .min()
            .unwrap() as f64
            / labels.len() as f64
    }

    #[test]
    fn balance_cases() {
        assert_eq!(balance(&[0, 0, 1, 1], &[0, 1, 0, 1]), 1.0);
        assert_eq!(balance(&[0, 0, 1, 1], &[0, 0, 0, 1]), 0.0);
        // cluster 0: {2, 4} -> 0.5 ; cluster 1: {3, 3} -> 1
        let labels = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let groups = [0, 0, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1];
        assert_eq!(balance(&labels, &groups), 0.5);
    }

    #[test]
    fn balance_empty_cluster_is_zero() {
        assert_eq!(balance(&[0, 0, 2, 2], &[0, 1, 0, 1]), 0.0);
    }

    #[test]
    fn balance_multi_group() {
        // counts {1, 2, 4} -> 1/4
        let labels = [0; 7];
        let groups = [0, 1, 1, 2, 2, 2, 2];
        assert_eq!(balance(&labels, &groups), 0.25);
    }

    #[test]
    fn ce_identity_and_permutation() {
        let truth = [0, 0, 1, 1, 2, 2, 3];
        assert_eq!(clustering_error(&truth, &truth).unwrap(), 0.0);
        let permuted: Vec<usize> = truth.iter().map(|&t| [2, 0, 3, 1][t]).collect();
        assert_eq!(clustering_error(&permuted, &truth).unwrap(), 0.0);
        assert_eq!(accuracy(&permuted, &truth).unwrap(), 1.0);
    }

    #[test]
    fn ce_hand_built_case() {
        let labels = [0, 0, 1, 1, 1, 2, 2, 0];
        let truth = [1, 1, 0, 0, 2, 2, 2, 0];
        let ce = clustering_error(&labels, &truth).unwrap();
        assert_eq!(ce, ce_oracle(&labels, &truth, 3));
        assert_eq!(ce, 2.0 / 8.0);
    }

    #[test]
    fn ce_matches_factorial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let c = rng.random_range(1..=5);
            let n = rng.random_range(c..40);
            let mut truth: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
            let mut labels: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
            truth.shuffle(&mut rng);
            labels.shuffle(&mut rng);
            let ce = clustering_error(&labels, &truth).unwrap();
            assert!((ce - ce_oracle(&labels, &truth, c)).abs() < 1e-15);
            assert_eq!(ce + accuracy(&labels, &truth).unwrap(), 1.0);
            assert_eq!(ce, clustering_error(&truth, &labels).unwrap());
        }
    }

    #[test]
    fn ce_cluster_count_mismatch() {
        assert!(clustering_error(&[0, 1, 2], &[0, 1, 1]).is_err());
    }

    #[test]
    fn silhouette_four_points() {
        let ds = Dataset::from_rows(
            &[vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]],
            vec![0, 1, 0, 1],
            None,
        )
        .unwrap();
        let s = silhouette(&ds, &[0, 0, 1, 1]).unwrap();
        let b = (10.0 + 101f64.sqrt()) / 2.0;
        assert!((s - (b - 1.0) / b).abs() < 1e-12);
        assert!((s - 0.900).abs() < 0.001);
    }

    #[test]
    fn silhouette_identical_clusters() {
        let ds = Dataset::from_rows(
            &[vec![0.0], vec![0.0], vec![5.0], vec![5.0]],
            vec![0, 1, 0, 1],
            None,
        )
        .unwrap();
        assert_eq!(silhouette(&ds, &[0, 0, 1, 1]).unwrap(), 1.0);
        assert!(silhouette(&ds, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn silhouette_random_labels_near_zero() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> =
                (0..120).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
            let ds = Dataset::from_rows(&rows, vec![0; 120], None).unwrap();
            let labels: Vec<usize> = (0..120).map(|_| rng.random_range(0..3)).collect();
            assert!(silhouette(&ds, &labels).unwrap().abs() < 0.2);
        }
    }

    #[test]
    fn ncut_cases() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(ncut(&g, &[0, 0, 1, 1]).unwrap(), (0.0, 0.0));

        let k4 = WeightedGraph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
            .unwrap();
        let per = ncut_per_cluster(&k4, &[0, 0, 1, 1]).unwrap();
        assert_eq!(per, vec![4.0 / 6.0, 4.0 / 6.0]);
        let (sum, norm) = ncut(&k4, &[0, 0, 1, 1]).unwrap();
        assert_eq!(sum, 4.0 / 3.0);
        assert_eq!(norm, 2.0 / 3.0);

        let star = WeightedGraph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        assert_eq!(ncut_per_cluster(&star, &[0, 0, 0, 1]).unwrap()[1], 1.0);

        let iso = WeightedGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert!(ncut(&iso, &[0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn metrics_invariant_under_relabeling(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 30;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
            let groups: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let truth: Vec<usize> = (0..n).map(|i| i % 3).collect();
            let ds = Dataset::from_rows(&rows, groups.clone(), Some(truth.clone())).unwrap();
            let labels: Vec<usize> = (0..n).map(|i| if i < 3 { i } else { rng.random_range(0..3) }).collect();
            let mut perm = [0, 1, 2];
            perm.shuffle(&mut rng);
            let relabeled: Vec<usize> = labels.iter().map(|&l| perm[l]).collect();
            let mut edges = Vec::new();
            for i in 0..n { edges.push((i, (i + 1) % n, 1.0)); edges.push((i, (i + 7) % n, 0.5)); }
            let g = WeightedGraph::from_edges(n, edges).unwrap();
            prop_assert_eq!(balance(&labels, &groups), balance(&relabeled, &groups));
            let flipped: Vec<usize> = groups.iter().map(|g| 1 - g).collect();
            prop_assert_eq!(balance(&labels, &groups), balance(&labels, &flipped));
            prop_assert!((silhouette(&ds, &labels).unwrap() - silhouette(&ds, &relabeled).unwrap()).abs() < 1e-12);
            prop_assert_eq!(clustering_error(&labels, &truth).unwrap(), clustering_error(&relabeled, &truth).unwrap());
            let (a, _) = ncut(&g, &labels).unwrap();
            let (b, _) = ncut(&g, &relabeled).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            for v in ncut_per_cluster(&g, &labels).unwrap() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(a <= 3.0);
        }
    }
}
