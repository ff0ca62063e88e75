//! Fair k-nearest-neighbor lists.
//!
//! Two construction paths are provided: an exact one that selects from a
//! per-group candidate pool, and Fair NN-Descent, which refines randomly
//! initialized lists by probing neighbors of neighbors and accepting a
//! candidate only through [`fair_update`].

use std::cmp::Ordering;

use rand::{seq::index::sample, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{counts_fair, group_split, is_fair, max_same, Dataset, Neighbor, NeighborList};

/// Union over every sensitive group of that group's `k'` nearest members.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub owner: usize,
    /// Sorted by (distance, id).
    pub candidates: Vec<Neighbor>,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

pub fn build_candidate_pool(dataset: &Dataset, node: usize, k_prime: usize) -> CandidatePool {
    let h = dataset.num_groups();
    let groups = dataset.groups();
    let mut per_group: Vec<Vec<Neighbor>> = vec![Vec::new(); h];
    for j in 0..dataset.len() {
        if j != node {
            per_group[groups[j]].push(Neighbor::new(j, dataset.dist(node, j)));
        }
    }
    let mut candidates = Vec::with_capacity(h * k_prime);
    for mut members in per_group {
        if members.len() > k_prime {
            members.select_nth_unstable_by(k_prime - 1, Neighbor::cmp_key);
            members.truncate(k_prime);
        }
        candidates.extend(members);
    }
    candidates.sort_by(Neighbor::cmp_key);
    CandidatePool { owner: node, candidates }
}

/// Minimum-cost size-`k` fair subset of the pool.
///
/// Candidates are scanned in (distance, id) order and same-group ones are
/// skipped once `max_same(k, alpha)` of them are taken. Since the cost is a
/// sum of per-candidate terms and the constraint only caps the same-group
/// count, this scan is optimal. When the pool runs out of different-group
/// candidates the remaining slots are filled with the nearest skipped
/// same-group candidates and the list is flagged infeasible.
pub fn fair_select_exact(pool: &CandidatePool, groups: &[usize], k: usize, alpha: f64) -> NeighborList {
    let owner_group = groups[pool.owner];
    let cap = max_same(k, alpha);
    let mut chosen = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    let mut same = 0;
    for c in &pool.candidates {
        if chosen.len() == k {
            break;
        }
        if groups[c.id] == owner_group {
            if same < cap {
                same += 1;
                chosen.push(*c);
            } else {
                skipped.push(*c);
            }
        } else {
            chosen.push(*c);
        }
    }
    let infeasible = chosen.len() < k;
    if infeasible {
        let missing = k - chosen.len();
        chosen.extend(skipped.into_iter().take(missing));
    }
    let mut list = NeighborList::from_entries(pool.owner, chosen, Some(k));
    list.infeasible = infeasible || !is_fair(&list, groups, owner_group, alpha);
    list
}

/// Result of [`iterative_replacement`].
#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub list: NeighborList,
    pub swaps: usize,
}

/// Repeatedly swaps the farthest same-group member for the nearest unused
/// different-group candidate of the pool until the list is fair.
pub fn iterative_replacement(
    list: &NeighborList,
    pool: &CandidatePool,
    groups: &[usize],
    alpha: f64,
) -> Replacement {
    let owner_group = groups[list.owner];
    let mut out = list.clone();
    let mut swaps = 0;
    while !is_fair(&out, groups, owner_group, alpha) {
        let Some(worst_same) = out.entries.iter().rposition(|e| groups[e.id] == owner_group) else {
            break;
        };
        let nearest_diff = pool
            .candidates
            .iter()
            .find(|c| groups[c.id] != owner_group && !out.contains(c.id));
        let Some(&d) = nearest_diff else {
            out.infeasible = true;
            break;
        };
        out.entries.remove(worst_same);
        out.insert_sorted(d);
        swaps += 1;
    }
    Replacement { list: out, swaps }
}

/// A candidate offered to [`fair_update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub dist: f64,
    pub group: usize,
}

/// Offers one candidate to a neighbor list under the same-group cap
/// `max_same(k, alpha)`. Returns whether the list changed.
///
/// While the list is short it accepts anything. Once full, a same-group
/// candidate may take the worst slot only while the cap has room, otherwise
/// it competes with the worst same-group member. A different-group candidate
/// replaces the worst member when the list is fair, and unconditionally
/// replaces the worst same-group member when it is not.
pub fn fair_update(
    list: &mut NeighborList,
    cand: Candidate,
    groups: &[usize],
    alpha: f64,
    k: usize,
) -> bool {
    debug_assert!(cand.id != list.owner && !list.contains(cand.id));
    let nb = Neighbor::new(cand.id, cand.dist);
    if list.len() < k {
        list.insert_sorted(nb);
        return true;
    }
    let owner_group = groups[list.owner];
    let cap = max_same(k, alpha);
    let (same, diff) = group_split(list, groups, owner_group);
    let worst = list.len() - 1;
    let worst_same = list.entries.iter().rposition(|e| groups[e.id] == owner_group);
    let beats = |i: usize| nb.cmp_key(&list.entries[i]) == Ordering::Less;

    let target = if cand.group == owner_group {
        if same < cap {
            beats(worst).then_some(worst)
        } else {
            worst_same.filter(|&i| beats(i))
        }
    } else if counts_fair(same, diff, alpha) {
        if beats(worst) {
            let removes_same = groups[list.entries[worst].id] == owner_group;
            let (s, d) = if removes_same { (same - 1, diff + 1) } else { (same, diff) };
            if counts_fair(s, d, alpha) {
                Some(worst)
            } else {
                worst_same
            }
        } else {
            None
        }
    } else {
        worst_same
    };

    match target {
        Some(i) => {
            list.entries.remove(i);
            list.insert_sorted(nb);
            true
        }
        None => false,
    }
}

/// Output of [`fair_nn_descent`].
#[derive(Debug, Clone, Serialize)]
pub struct DescentOutput {
    #[serde(skip)]
    pub lists: Vec<NeighborList>,
    /// Accepted updates per sweep; the last entry is 0.
    pub updates_per_sweep: Vec<usize>,
}

impl DescentOutput {
    pub fn sweeps(&self) -> usize {
        self.updates_per_sweep.len()
    }
}

/// Fair NN-Descent.
///
/// Lists start as `k` uniformly sampled nodes at distance +inf. Each sweep
/// joins every list with its reverse neighbors, probes the neighbors of
/// those neighbors, and offers each new candidate to [`fair_update`] in
/// (distance, id) order. Sweeps read a snapshot of the previous sweep's
/// lists, so the result does not depend on the number of worker threads.
/// Stops after the first sweep with zero accepted updates.
pub fn fair_nn_descent(dataset: &Dataset, k: usize, alpha: f64, seed: u64) -> Result<DescentOutput> {
    let n = dataset.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} not in [0, 1]")));
    }
    let groups = dataset.groups();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lists: Vec<NeighborList> = (0..n)
        .map(|v| {
            let entries = sample(&mut rng, n - 1, k)
                .into_iter()
                .map(|i| Neighbor::new(if i >= v { i + 1 } else { i }, f64::INFINITY))
                .collect();
            NeighborList::from_entries(v, entries, Some(k))
        })
        .collect();

    let mut updates_per_sweep = Vec::new();
    loop {
        let mut joined: Vec<Vec<usize>> = lists.iter().map(|l| l.ids().collect()).collect();
        for l in &lists {
            for u in l.ids() {
                joined[u].push(l.owner);
            }
        }
        for b in &mut joined {
            b.sort_unstable();
            b.dedup();
        }

        let updates: usize = lists
            .par_iter_mut()
            .map_init(Vec::new, |cands: &mut Vec<usize>, list| {
                let v = list.owner;
                cands.clear();
                for &u1 in &joined[v] {
                    cands.extend_from_slice(&joined[u1]);
                }
                cands.sort_unstable();
                cands.dedup();
                let mut offers: Vec<Neighbor> = cands
                    .iter()
                    .filter(|&&u2| u2 != v && !list.contains(u2))
                    .map(|&u2| Neighbor::new(u2, dataset.dist(v, u2)))
                    .collect();
                offers.sort_by(Neighbor::cmp_key);

                let mut accepted = 0;
                for nb in offers {
                    if list.len() == k
                        && nb.cmp_key(&list.entries[k - 1]) != Ordering::Less
                        && is_fair(list, groups, groups[v], alpha)
                    {
                        // Offers arrive in ascending order; nothing further can be accepted.
                        break;
                    }
                    let cand = Candidate { id: nb.id, dist: nb.dist, group: groups[nb.id] };
                    if fair_update(list, cand, groups, alpha, k) {
                        accepted += 1;
                    }
                }
                accepted
            })
            .sum();
        updates_per_sweep.push(updates);
        log::debug!("fair nn-descent sweep {}: {updates} updates", updates_per_sweep.len());
        if updates == 0 {
            break;
        }
    }

    for list in &mut lists {
        if list.entries.iter().any(|e| e.dist.is_infinite()) {
            let owner = list.owner;
            let entries = list
                .entries
                .iter()
                .map(|e| Neighbor::new(e.id, dataset.dist(owner, e.id)))
                .collect();
            *list = NeighborList::from_entries(owner, entries, Some(k));
        }
        list.infeasible = !is_fair(list, groups, groups[list.owner], alpha);
    }
    Ok(DescentOutput { lists, updates_per_sweep })
}

/// Exact fair kNN lists via per-node candidate pools.
pub fn fair_knn_exact(dataset: &Dataset, k: usize, alpha: f64, k_prime: usize) -> Result<Vec<NeighborList>> {
    let n = dataset.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let k_prime = k_prime.max(k);
    let groups = dataset.groups();
    Ok((0..n)
        .into_par_iter()
        .map(|v| fair_select_exact(&build_candidate_pool(dataset, v, k_prime), groups, k, alpha))
        .collect())
}

/// Plain exact kNN lists by brute force.
pub fn exact_knn(dataset: &Dataset, k: usize) -> Result<Vec<NeighborList>> {
    let n = dataset.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|v| {
            let mut all: Vec<Neighbor> =
                (0..n).filter(|&j| j != v).map(|j| Neighbor::new(j, dataset.dist(v, j))).collect();
            all.select_nth_unstable_by(k - 1, Neighbor::cmp_key);
            all.truncate(k);
            NeighborList::from_entries(v, all, Some(k))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<f64> = (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect();
        let groups = (0..n).map(|_| rng.random_range(0..2)).collect();
        Dataset::new(points, d, groups, None).unwrap()
    }

    /// Brute force over all size-k subsets: minimal cost among fair subsets,
    /// or `None` when no subset is fair.
    fn enumerate_best(ds: &Dataset, owner: usize, k: usize, alpha: f64) -> Option<(f64, Vec<usize>)> {
        let others: Vec<usize> = (0..ds.len()).filter(|&j| j != owner).collect();
        let g = ds.groups();
        let mut best: Option<(f64, Vec<usize>)> = None;
        let m = others.len();
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let subset: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| others[b]).collect();
            let same = subset.iter().filter(|&&j| g[j] == g[owner]).count();
            if (k - same) as f64 >= alpha * same as f64 {
                let cost: f64 = subset.iter().map(|&j| ds.dist(owner, j).powi(2)).sum();
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, subset));
                }
            }
        }
        best
    }

    #[test]
    fn pool_single_group_is_plain_knn() {
        let ds = Dataset::from_rows(
            &(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>(),
            vec![0; 10],
            None,
        )
        .unwrap();
        let pool = build_candidate_pool(&ds, 0, 4);
        assert_eq!(pool.candidates.iter().map(|c| c.id).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn pool_keeps_far_other_group() {
        // Same-group points crowd the node; the other group is far away.
        let mut rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.1]).collect();
        rows.extend((0..4).map(|i| vec![100.0 + i as f64]));
        let groups = [vec![0; 8], vec![1; 4]].concat();
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let pool = build_candidate_pool(&ds, 0, 3);
        let ids: Vec<usize> = pool.candidates.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 8, 9, 10]);
    }

    #[test]
    fn pool_matches_per_group_sort_oracle() {
        let ds = random_dataset(20, 3, 11);
        for node in 0..20 {
            let pool = build_candidate_pool(&ds, node, 5);
            let mut expect = Vec::new();
            for g in 0..2 {
                let mut members: Vec<(f64, usize)> = (0..20)
                    .filter(|&j| j != node && ds.groups()[j] == g)
                    .map(|j| (ds.dist(node, j), j))
                    .collect();
                members.sort_by(|a, b| a.partial_cmp(b).unwrap());
                expect.extend(members.into_iter().take(5));
            }
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let got: Vec<(f64, usize)> = pool.candidates.iter().map(|c| (c.dist, c.id)).collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn exact_alpha_zero_is_plain_knn() {
        let ds = random_dataset(30, 2, 3);
        let plain = exact_knn(&ds, 5).unwrap();
        let fair = fair_knn_exact(&ds, 5, 0.0, 15).unwrap();
        for (a, b) in plain.iter().zip(&fair) {
            assert_eq!(a.entries, b.entries);
            assert!(!b.infeasible);
        }
    }

    #[test]
    fn exact_caps_same_group() {
        let ds = random_dataset(40, 2, 5);
        for list in fair_knn_exact(&ds, 4, 0.8, 12).unwrap() {
            let (same, diff) = group_split(&list, ds.groups(), ds.groups()[list.owner]);
            assert!(same <= 2, "same = {same}");
            assert_eq!(same + diff, 4);
        }
    }

    #[test]
    fn exact_matches_subset_enumeration() {
        for seed in 0..40 {
            let ds = random_dataset(12, 2, seed);
            for owner in 0..12 {
                let pool = build_candidate_pool(&ds, owner, 11);
                let got = fair_select_exact(&pool, ds.groups(), 4, 0.8);
                match enumerate_best(&ds, owner, 4, 0.8) {
                    Some((cost, mut ids)) => {
                        assert!(!got.infeasible);
                        assert!((got.cost() - cost).abs() < 1e-12);
                        let mut gids: Vec<usize> = got.ids().collect();
                        gids.sort_unstable();
                        ids.sort_unstable();
                        assert_eq!(gids, ids);
                    }
                    None => assert!(got.infeasible),
                }
            }
        }
    }

    #[test]
    fn infeasible_pool_is_flagged() {
        // One member of group 1, owner in group 0, k = 4, alpha = 0.8 needs 2 others.
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let groups = vec![0, 0, 0, 0, 0, 0, 0, 1];
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let pool = build_candidate_pool(&ds, 0, 7);
        let list = fair_select_exact(&pool, ds.groups(), 4, 0.8);
        assert!(list.infeasible);
        assert_eq!(list.len(), 4);
        assert!(list.contains(7));
    }

    #[test]
    fn replacement_leaves_fair_list_alone() {
        let ds = random_dataset(30, 2, 9);
        let g = ds.groups();
        for v in 0..30 {
            let pool = build_candidate_pool(&ds, v, 12);
            let fair = fair_select_exact(&pool, g, 4, 0.8);
            let r = iterative_replacement(&fair, &pool, g, 0.8);
            assert_eq!(r.swaps, 0);
            assert_eq!(r.list, fair);
        }
    }

    #[test]
    fn replacement_all_same_group_needs_two_swaps() {
        let mut rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        rows.extend((0..4).map(|i| vec![10.0 + i as f64]));
        let groups = [vec![0; 6], vec![1; 4]].concat();
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let pool = build_candidate_pool(&ds, 0, 8);
        let plain = NeighborList::from_entries(0, pool.candidates[..4].to_vec(), Some(4));
        let r = iterative_replacement(&plain, &pool, ds.groups(), 0.8);
        assert_eq!(r.swaps, 2);
        assert_eq!(r.list.ids().collect::<Vec<_>>(), vec![1, 2, 6, 7]);
    }

    #[test]
    fn replacement_fixed_point_equals_exact() {
        for seed in 100..130 {
            let ds = random_dataset(12, 2, seed);
            let g = ds.groups();
            for v in 0..12 {
                let pool = build_candidate_pool(&ds, v, 11);
                let plain = fair_select_exact(&pool, g, 4, 0.0);
                let r = iterative_replacement(&plain, &pool, g, 0.8);
                let exact = fair_select_exact(&pool, g, 4, 0.8);
                assert_eq!(r.list.entries, exact.entries);
                assert_eq!(r.list.infeasible, exact.infeasible);
            }
        }
    }

    fn full_list(owner: usize, entries: &[(usize, f64)]) -> NeighborList {
        NeighborList::from_entries(
            owner,
            entries.iter().map(|&(id, d)| Neighbor::new(id, d)).collect(),
            Some(entries.len()),
        )
    }

    #[test]
    fn update_rejects_far_same_group() {
        let groups = vec![0, 0, 1, 0, 1, 0];
        let mut list = full_list(0, &[(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)]);
        let before = list.clone();
        assert!(!fair_update(&mut list, Candidate { id: 5, dist: 9.0, group: 0 }, &groups, 0.8, 4));
        assert_eq!(list, before);
    }

    #[test]
    fn update_unfair_list_swaps_same_group() {
        let groups = vec![0, 0, 0, 0, 0, 1];
        let mut list = full_list(0, &[(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)]);
        assert!(fair_update(&mut list, Candidate { id: 5, dist: 3.5, group: 1 }, &groups, 0.8, 4));
        assert_eq!(group_split(&list, &groups, 0), (3, 1));
        assert!(!list.contains(4));
    }

    #[test]
    fn update_fills_short_list() {
        let groups = vec![0, 0, 0];
        let mut list = NeighborList::new(0, Some(4));
        assert!(fair_update(&mut list, Candidate { id: 2, dist: 5.0, group: 0 }, &groups, 0.8, 4));
        assert!(fair_update(&mut list, Candidate { id: 1, dist: 7.0, group: 0 }, &groups, 0.8, 4));
        assert_eq!(list.ids().collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn update_streams_respect_cap_and_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10_000 {
            let n = 30;
            let k = rng.random_range(1..8);
            let alpha = rng.random_range(0.0..=1.0);
            let groups: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let cap = max_same(k, alpha);
            let mut list = NeighborList::new(0, Some(k));
            let mut was_fair_full = false;
            let mut cost = f64::INFINITY;
            for _ in 0..40 {
                let id = rng.random_range(1..n);
                if list.contains(id) {
                    continue;
                }
                let dist = rng.random_range(0.0..10.0);
                let changed = fair_update(&mut list, Candidate { id, dist, group: groups[id] }, &groups, alpha, k);
                assert!(list.check_invariants());
                assert!(list.len() <= k);
                let fair = is_fair(&list, &groups, groups[0], alpha);
                if was_fair_full {
                    let (same, _) = group_split(&list, &groups, groups[0]);
                    assert!(same <= cap);
                    assert!(fair);
                    assert!(list.cost() <= cost + 1e-12);
                    if changed {
                        assert!(list.cost() < cost + 1e-12);
                    }
                }
                if list.len() == k && fair {
                    was_fair_full = true;
                }
                cost = list.cost();
            }
        }
    }

    #[test]
    fn descent_alpha_zero_recall() {
        // Four-component Gaussian mixture, 500 points in 5-d.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let normal = rand_distr::StandardNormal;
        let mut rows = Vec::new();
        for i in 0..500 {
            let center = (i % 4) as f64 * 4.0;
            rows.push((0..5).map(|_| center + rng.sample::<f64, _>(normal)).collect::<Vec<_>>());
        }
        let groups = (0..500).map(|i| (i / 4) % 2).collect();
        let ds = Dataset::from_rows(&rows, groups, None).unwrap();
        let k = 10;
        let approx = fair_nn_descent(&ds, k, 0.0, 1).unwrap();
        let exact = exact_knn(&ds, k).unwrap();
        let recall: f64 = approx
            .lists
            .iter()
            .zip(&exact)
            .map(|(a, e)| e.ids().filter(|&id| a.contains(id)).count() as f64 / k as f64)
            .sum::<f64>()
            / 500.0;
        assert!(recall >= 0.90, "recall {recall}");
        assert_eq!(*approx.updates_per_sweep.last().unwrap(), 0);
    }

    #[test]
    fn descent_is_fair_and_deterministic() {
        let ds = random_dataset(200, 4, 17);
        let a = fair_nn_descent(&ds, 8, 0.8, 5).unwrap();
        let b = fair_nn_descent(&ds, 8, 0.8, 5).unwrap();
        assert_eq!(a.lists, b.lists);
        for l in &a.lists {
            assert_eq!(l.len(), 8);
            assert!(l.check_invariants());
            assert!(l.entries.iter().all(|e| e.dist.is_finite()));
            if !l.infeasible {
                assert!(is_fair(l, ds.groups(), ds.groups()[l.owner], 0.8));
            }
        }
    }

    #[test]
    fn descent_independent_of_thread_count() {
        let ds = random_dataset(150, 3, 23);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = single.install(|| fair_nn_descent(&ds, 6, 0.8, 3).unwrap());
        let b = fair_nn_descent(&ds, 6, 0.8, 3).unwrap();
        assert_eq!(a.lists, b.lists);
    }

    proptest! {
        #[test]
        fn replacement_keeps_size_and_diff_members(seed in 0u64..500) {
            let ds = random_dataset(14, 2, seed);
            let g = ds.groups();
            let pool = build_candidate_pool(&ds, 0, 6);
            let plain = fair_select_exact(&pool, g, 5, 0.0);
            let r = iterative_replacement(&plain, &pool, g, 1.0);
            prop_assert_eq!(r.list.len(), plain.len());
            for e in plain.entries.iter().filter(|e| g[e.id] != g[0]) {
                prop_assert!(r.list.contains(e.id));
            }
        }
    }
}
