//! Domain types shared across the crate: datasets, neighbor lists, fairness
//! parameters, and the Euclidean distance plus the per-neighborhood fairness
//! test.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point matrix with sensitive-group labels and optional ground truth.
///
/// Points are stored row-major; point `i` is `points[i*d..(i+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
    groups: Vec<usize>,
    truth: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        points: Vec<f64>,
        d: usize,
        groups: Vec<usize>,
        truth: Option<Vec<usize>>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDataset("feature dimension must be >= 1".into()));
        }
        if !points.len().is_multiple_of(d) {
            return Err(Error::InvalidDataset(format!(
                "{} values do not form rows of width {d}",
                points.len()
            )));
        }
        let n = points.len() / d;
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no points".into()));
        }
        if groups.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: groups.len() });
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: t.len() });
            }
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value at row {}, column {}",
                i / d,
                i % d
            )));
        }
        Ok(Self { points, n, d, groups, truth })
    }

    /// Builds a dataset from a slice of rows.
    pub fn from_rows(
        rows: &[Vec<f64>],
        groups: Vec<usize>,
        truth: Option<Vec<usize>>,
    ) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.len() });
        }
        Self::new(rows.concat(), d, groups, truth)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    /// Number of sensitive groups `h` (max id + 1).
    pub fn num_groups(&self) -> usize {
        self.groups.iter().max().map_or(0, |g| g + 1)
    }

    /// Number of ground-truth clusters, if known.
    pub fn num_clusters(&self) -> Option<usize> {
        self.truth.as_ref().map(|t| t.iter().max().map_or(0, |c| c + 1))
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Checks the preconditions of the fairness operations (h >= 2).
    pub fn require_groups(&self) -> Result<()> {
        let h = self.num_groups();
        if h < 2 {
            return Err(Error::InvalidDataset(format!(
                "fairness operations need at least 2 sensitive groups, found {h}"
            )));
        }
        Ok(())
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    Ok(euclidean(a, b))
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// One entry of a neighbor list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    pub dist: f64,
    /// Density-reachability hop length for entries added by fair ε
    /// augmentation; 0 for ordinary neighbors.
    #[serde(default)]
    pub hop: u32,
}

impl Neighbor {
    pub fn new(id: usize, dist: f64) -> Self {
        Self { id, dist, hop: 0 }
    }

    /// Ordering by (distance, id).
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.id.cmp(&other.id))
    }
}

/// Ordered neighborhood of a single node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub owner: usize,
    pub entries: Vec<Neighbor>,
    /// `Some(k)` in kNN mode, `None` in ε mode.
    pub capacity: Option<usize>,
    /// Set when no fair neighborhood could be formed from the available
    /// candidates; the entries are then a best-effort composition.
    pub infeasible: bool,
}

impl NeighborList {
    pub fn new(owner: usize, capacity: Option<usize>) -> Self {
        Self { owner, entries: Vec::new(), capacity, infeasible: false }
    }

    /// Builds a list from arbitrary entries, sorting by (distance, id).
    /// Panics if the owner or a duplicate id is present.
    pub fn from_entries(owner: usize, mut entries: Vec<Neighbor>, capacity: Option<usize>) -> Self {
        entries.sort_by(Neighbor::cmp_key);
        let list = Self { owner, entries, capacity, infeasible: false };
        assert!(list.check_invariants(), "neighbor list for {owner} violates invariants");
        list
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    /// Inserts keeping (distance, id) order. The caller guarantees the id is
    /// new and not the owner.
    pub fn insert_sorted(&mut self, nb: Neighbor) {
        debug_assert!(nb.id != self.owner && !self.contains(nb.id));
        let pos = self
            .entries
            .partition_point(|e| e.cmp_key(&nb) == Ordering::Less);
        self.entries.insert(pos, nb);
    }

    /// Sum of squared distances to the owner.
    pub fn cost(&self) -> f64 {
        self.entries.iter().map(|e| e.dist * e.dist).sum()
    }

    /// Owner absent, ids unique, entries sorted by (distance, id).
    pub fn check_invariants(&self) -> bool {
        let mut ids: Vec<usize> = self.ids().collect();
        let sorted = self
            .entries
            .windows(2)
            .all(|w| w[0].cmp_key(&w[1]) != Ordering::Greater);
        ids.sort_unstable();
        let unique = ids.windows(2).all(|w| w[0] != w[1]);
        sorted && unique && !ids.contains(&self.owner)
    }
}

/// Fairness and neighborhood parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessParams {
    pub alpha: f64,
    pub k: usize,
    pub epsilon: f64,
    pub min_pts: usize,
    /// Sets the per-group candidate pool size `k' = max(2k, ceil(m * k))`.
    pub candidate_multiplier: f64,
}

impl Default for FairnessParams {
    fn default() -> Self {
        Self { alpha: 0.8, k: 10, epsilon: 1.0, min_pts: 3, candidate_multiplier: 3.0 }
    }
}

impl FairnessParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if self.min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
        }
        if !(self.candidate_multiplier > 0.0) {
            return Err(Error::InvalidParameter("candidate_multiplier must be > 0".into()));
        }
        Ok(())
    }

    /// Per-group candidate pool size.
    pub fn k_prime(&self) -> usize {
        let scaled = (self.candidate_multiplier * self.k as f64).ceil() as usize;
        scaled.max(2 * self.k)
    }

    pub fn max_same(&self) -> usize {
        max_same(self.k, self.alpha)
    }
}

/// Same-group / different-group counts of a neighbor list relative to the
/// owner's group.
pub fn group_split(list: &NeighborList, groups: &[usize], owner_group: usize) -> (usize, usize) {
    let same = list.ids().filter(|&id| groups[id] == owner_group).count();
    (same, list.len() - same)
}

/// `diff >= alpha * same`. An empty list is vacuously fair.
pub fn is_fair(list: &NeighborList, groups: &[usize], owner_group: usize, alpha: f64) -> bool {
    if list.is_empty() {
        log::debug!("node {} has an empty neighborhood; treated as fair", list.owner);
        return true;
    }
    let (same, diff) = group_split(list, groups, owner_group);
    counts_fair(same, diff, alpha)
}

#[inline]
pub fn counts_fair(same: usize, diff: usize, alpha: f64) -> bool {
    diff as f64 >= alpha * same as f64
}

/// Largest same-group count a size-`k` neighborhood can hold while staying
/// fair: `floor(k / (1 + alpha))`.
pub fn max_same(k: usize, alpha: f64) -> usize {
    // Evaluated through `counts_fair` so the cap agrees with `is_fair` exactly.
    let mut m = (k as f64 / (1.0 + alpha)).floor() as usize;
    m = m.min(k);
    while m < k && counts_fair(m + 1, k - m - 1, alpha) {
        m += 1;
    }
    while m > 0 && !counts_fair(m, k - m, alpha) {
        m -= 1;
    }
    m
}

/// Smallest different-group count that makes `same` same-group neighbors
/// fair: `ceil(alpha * same)`.
pub fn required_diff(same: usize, alpha: f64) -> usize {
    let mut r = (alpha * same as f64).ceil() as usize;
    while r > 0 && counts_fair(same, r - 1, alpha) {
        r -= 1;
    }
    while !counts_fair(same, r, alpha) {
        r += 1;
    }
    r
}
