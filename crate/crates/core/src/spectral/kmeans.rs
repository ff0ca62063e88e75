//! Seeded k-means++ with Lloyd iterations and best-of-n restarts.

use nalgebra::DMatrix;
use rand::{distr::weighted::WeightedIndex, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { n_init: 10, max_iter: 300, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub seed: u64,
    /// Some cluster id in `0..c` received no point.
    pub degenerate: bool,
    /// Empty clusters reseeded during Lloyd iterations of the kept restart.
    pub repairs: usize,
}

/// Relabels clusters in order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// SplitMix64 step, used to derive independent restart seeds.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Run {
    labels: Vec<usize>,
    inertia: f64,
    repairs: usize,
}

fn plus_plus(rows: &[Vec<f64>], c: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < c {
        let next = match WeightedIndex::new(&closest) {
            Ok(w) => rng.sample(w),
            // All points coincide with existing centers.
            Err(_) => rng.random_range(0..n),
        };
        centers.push(rows[next].clone());
        for (d, r) in closest.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(rows: &[Vec<f64>], c: usize, opts: &KMeansOptions, seed: u64) -> Run {
    let n = rows.len();
    let dim = rows[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus(rows, c, &mut rng);
    let mut labels = vec![0; n];
    let mut repairs = 0;

    let assign = |centers: &[Vec<f64>], labels: &mut [usize]| -> f64 {
        let mut inertia = 0.0;
        for (i, r) in rows.iter().enumerate() {
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(k, ctr)| (k, sq_dist(r, ctr)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            labels[i] = best;
            inertia += d;
        }
        inertia
    };

    let mut inertia = assign(&centers, &mut labels);
    for _ in 0..opts.max_iter {
        let mut sums = vec![vec![0.0; dim]; c];
        let mut counts = vec![0usize; c];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        let mut new_centers: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &cnt)| s.into_iter().map(|v| v / cnt.max(1) as f64).collect())
            .collect();
        for k in 0..c {
            if counts[k] == 0 {
                // Reseed to the point farthest from its assigned center.
                let far = (0..n)
                    .map(|i| (i, sq_dist(&rows[i], &new_centers[labels[i]])))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                new_centers[k] = rows[far].clone();
                labels[far] = k;
                repairs += 1;
                log::debug!("k-means: reseeded empty cluster {k} at point {far}");
            }
        }
        let shift = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = new_centers;
        inertia = assign(&centers, &mut labels);
        if shift <= opts.tol {
            break;
        }
    }
    Run { labels, inertia, repairs }
}

/// Clusters the rows of `points` into `c` groups.
pub fn kmeans(points: &DMatrix<f64>, c: usize, seed: u64, opts: &KMeansOptions) -> Result<ClusteringResult> {
    let n = points.nrows();
    if c == 0 || c > n {
        return Err(Error::InvalidParameter(format!("need 1 <= c <= n, got c = {c}, n = {n}")));
    }
    if opts.n_init == 0 {
        return Err(Error::InvalidParameter("n_init must be >= 1".into()));
    }
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    let runs: Vec<Run> = (0..opts.n_init as u64)
        .into_par_iter()
        .map(|r| lloyd(&rows, c, opts, derive_seed(seed, r)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("n_init >= 1");
    let labels = canonical_labels(&best.labels);
    let used = labels.iter().max().map_or(0, |m| m + 1);
    Ok(ClusteringResult { labels, inertia: best.inertia, seed, degenerate: used < c, repairs: best.repairs })
}
