//! K-Means and spherical K-Means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{clustering_metrics, ClusteringScores, NmiNormalization};
use crate::error::{Error, Result};
use crate::sphere::{dot, normalize_in_place};

pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterAlgorithm {
    /// Squared-Euclidean Lloyd iterations.
    KMeans,
    /// Cosine assignment with normalized-mean centroids.
    SKMeans,
}

#[derive(Clone, Copy, Debug)]
pub struct ClusterConfig {
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Inertia (K-Means, lower is better) or total member-centroid cosine
    /// (spherical K-Means, higher is better) of the final assignment.
    pub objective: f64,
    /// Objective after each assignment step.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn check_inputs(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::Eval("k must be >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::Eval(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: p.len(),
        });
    }
    Ok(dim)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++: first center uniform, each next one drawn with probability
/// proportional to `cost(point, nearest chosen center)`.
fn plus_plus_seeds<R: Rng>(
    points: &[Vec<f64>],
    k: usize,
    cost: impl Fn(&[f64], &[f64]) -> f64,
    rng: &mut R,
) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut best: Vec<f64> = points.iter().map(|p| cost(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in best.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            // Every point coincides with a chosen center: pick any unchosen index.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        for (b, p) in best.iter_mut().zip(points) {
            *b = b.min(cost(p, &points[next]));
        }
    }
    chosen
}

/// Lloyd's algorithm until the assignment stops changing or `max_iter` rounds.
pub fn kmeans(points: &[Vec<f64>], k: usize, config: &ClusterConfig) -> Result<ClusteringResult> {
    let dim = check_inputs(points, k)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let mut centroids: Vec<Vec<f64>> = plus_plus_seeds(points, k, squared_distance, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();

    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        let mut inertia = 0.0;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (best, d) = nearest(p, &centroids);
            inertia += d;
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sizes[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for (c, (sum, &size)) in sums.into_iter().zip(&sizes).enumerate() {
            if size > 0 {
                centroids[c] = sum.into_iter().map(|s| s / size as f64).collect();
            }
        }
        // Empty clusters take the point farthest from its own centroid.
        for c in 0..k {
            if sizes[c] != 0 {
                continue;
            }
            let far = (0..points.len())
                .max_by(|&i, &j| {
                    let di = squared_distance(&points[i], &centroids[assignments[i]]);
                    let dj = squared_distance(&points[j], &centroids[assignments[j]]);
                    di.total_cmp(&dj).then(j.cmp(&i))
                })
                .unwrap();
            centroids[c] = points[far].clone();
            sizes[c] = 1;
            sizes[assignments[far]] -= 1;
            assignments[far] = c;
        }
    }

    Ok(ClusteringResult {
        objective: *history.last().unwrap(),
        assignments,
        centroids,
        history,
        iterations,
    })
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn most_similar(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let s = dot(p, centroid);
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

/// Spherical K-Means on unit-norm points.
pub fn spherical_kmeans(
    points: &[Vec<f64>],
    k: usize,
    config: &ClusterConfig,
) -> Result<ClusteringResult> {
    let dim = check_inputs(points, k)?;
    if let Some(i) = points
        .iter()
        .position(|p| (dot(p, p).sqrt() - 1.0).abs() > 1e-6)
    {
        return Err(Error::Eval(format!("point {i} is not unit norm")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let cosine_cost = |a: &[f64], b: &[f64]| (1.0 - dot(a, b)).max(0.0);
    let mut centroids: Vec<Vec<f64>> = plus_plus_seeds(points, k, cosine_cost, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();

    let mut assignments = vec![usize::MAX; points.len()];
    let mut similarity = vec![0.0; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        let mut objective = 0.0;
        for ((p, a), s) in points
            .iter()
            .zip(assignments.iter_mut())
            .zip(similarity.iter_mut())
        {
            let (best, sim) = most_similar(p, &centroids);
            objective += sim;
            *s = sim;
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        history.push(objective);
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        let mut reseeded: Vec<usize> = Vec::new();
        for (c, mut sum) in sums.into_iter().enumerate() {
            if normalize_in_place(&mut sum) {
                centroids[c] = sum;
                continue;
            }
            // Empty cluster or members summing to zero: restart from the point
            // least similar to its current centroid.
            let worst = (0..points.len())
                .filter(|i| !reseeded.contains(i))
                .min_by(|&i, &j| similarity[i].total_cmp(&similarity[j]).then(i.cmp(&j)))
                .unwrap();
            reseeded.push(worst);
            centroids[c] = points[worst].clone();
        }
    }

    Ok(ClusteringResult {
        objective: *history.last().unwrap(),
        assignments,
        centroids,
        history,
        iterations,
    })
}

pub fn cluster(
    algorithm: ClusterAlgorithm,
    points: &[Vec<f64>],
    k: usize,
    config: &ClusterConfig,
) -> Result<ClusteringResult> {
    match algorithm {
        ClusterAlgorithm::KMeans => kmeans(points, k, config),
        ClusterAlgorithm::SKMeans => spherical_kmeans(points, k, config),
    }
}

/// Runs `runs` independently seeded clusterings (seed, seed + 1, ...) in parallel
/// and scores each against `labels`. Results are in run order.
pub fn clustering_runs(
    algorithm: ClusterAlgorithm,
    points: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    runs: usize,
    seed: u64,
    normalization: NmiNormalization,
) -> Result<Vec<ClusteringScores>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let config = ClusterConfig {
                max_iter: DEFAULT_MAX_ITER,
                seed: seed.wrapping_add(r as u64),
            };
            let result = cluster(algorithm, points, k, &config)?;
            clustering_metrics(&result.assignments, labels, normalization)
        })
        .collect()
}
