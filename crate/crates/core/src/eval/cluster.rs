//! k-means clustering and modularity.

use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::sampling::{Purpose, StreamRng};
use crate::trainer::EmbeddingMatrix;

const SWEEP_MAX_K: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignment: Vec<u32>,
    pub k: usize,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    /// Inertia after every assignment step of the kept run.
    pub history: Vec<f64>,
}

impl Clustering {
    /// Wraps a fixed assignment, e.g. ground truth, for scoring.
    pub fn from_assignment(assignment: Vec<u32>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |&m| m as usize + 1);
        Ok(Clustering {
            assignment,
            k,
            centroids: Vec::new(),
            inertia: f64::NAN,
            history: Vec::new(),
        })
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[f64], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, mu) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(p, mu);
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

fn seed_plus_plus(points: &[f64], dim: usize, k: usize, rng: &mut StreamRng) -> Vec<f64> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // Rounding can land on an already chosen point.
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.extend_from_slice(row(pick));
        for (i, best) in d2.iter_mut().enumerate() {
            *best = best.min(sq_dist(row(i), row(pick)));
        }
    }
    centroids
}

fn lloyd(points: &[f64], dim: usize, k: usize, max_iter: usize, rng: &mut StreamRng) -> Clustering {
    let n = points.len() / dim;
    let mut centroids = seed_plus_plus(points, dim, k, rng);
    let mut assignment = vec![u32::MAX; n];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let step: Vec<(u32, f64)> = points
            .par_chunks(dim)
            .map(|p| nearest(p, &centroids, dim))
            .collect();
        let changed = step.iter().zip(&assignment).any(|(s, &a)| s.0 != a);
        let mut dist: Vec<f64> = step.iter().map(|s| s.1).collect();
        assignment = step.into_iter().map(|s| s.0).collect();
        history.push(dist.iter().sum());

        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a as usize] += 1;
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignment[i] as usize] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[assignment[i] as usize] -= 1;
                assignment[i] = c as u32;
                counts[c] = 1;
                dist[i] = 0.0;
                reseeded = true;
            }
        }
        if !changed && !reseeded {
            break;
        }

        let mut sums = vec![0.0; k * dim];
        for (i, &a) in assignment.iter().enumerate() {
            let dst = &mut sums[a as usize * dim..(a as usize + 1) * dim];
            for (s, v) in dst.iter_mut().zip(&points[i * dim..(i + 1) * dim]) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                }
            }
        }
    }
    let inertia = points
        .chunks_exact(dim)
        .zip(&assignment)
        .map(|(p, &a)| sq_dist(p, &centroids[a as usize * dim..(a as usize + 1) * dim]))
        .sum();
    Clustering {
        assignment,
        k,
        centroids,
        inertia,
        history,
    }
}

/// Lloyd's algorithm with k-means++ seeding on row-major `points`; keeps
/// the restart with the lowest inertia.
pub fn kmeans_points(
    points: &[f64],
    dim: usize,
    k: usize,
    cfg: &KMeansConfig,
    rng: &mut StreamRng,
) -> Result<Clustering> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::Consistency(format!(
            "{} values do not form rows of {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} not in [1, {n}]")));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let base = rng.next_u64();
    let runs: Vec<Clustering> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            lloyd(
                points,
                dim,
                k,
                cfg.max_iter,
                &mut StreamRng::derive(base, Purpose::KMeans, r as u64, 0),
            )
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

pub fn kmeans(z: &EmbeddingMatrix, k: usize, rng: &mut StreamRng) -> Result<Clustering> {
    let points: Vec<f64> = z.as_slice().iter().map(|&v| v as f64).collect();
    kmeans_points(&points, z.dim(), k, &KMeansConfig::default(), rng)
}

/// `Q = sum_c [L_c / m - (d_c / 2m)^2]` over the clusters of `assignment`.
pub fn modularity(g: &CsrGraph, assignment: &[u32]) -> Result<f64> {
    let n = g.num_vertices();
    if assignment.len() != n {
        return Err(Error::Consistency(format!(
            "{} assignments for {n} vertices",
            assignment.len()
        )));
    }
    let two_m = g.num_arcs() as u128;
    if two_m == 0 {
        return Err(Error::Degenerate(
            "modularity is undefined without edges".into(),
        ));
    }
    let k = assignment.iter().max().map_or(0, |&m| m as usize + 1);
    let mut intra = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for u in 0..n {
        let cu = assignment[u] as usize;
        degree[cu] += g.degree(u);
        intra[cu] += g
            .adj(u)
            .iter()
            .filter(|&&v| assignment[v as usize] as usize == cu)
            .count();
    }
    // Exact integer numerator, so one rounding step in total.
    let (mut pos, mut neg) = (0u128, 0u128);
    for c in 0..k {
        pos += intra[c] as u128 * two_m;
        neg += (degree[c] as u128).pow(2);
    }
    let num = if pos >= neg {
        (pos - neg) as f64
    } else {
        -((neg - pos) as f64)
    };
    Ok(num / (two_m * two_m) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub k: usize,
    pub modularity: f64,
    pub clustering: Clustering,
}

/// Clusters `z` for every k in `[2, min(50, n)]` and keeps the clustering of
/// highest modularity (smallest k on ties).
pub fn best_modularity_sweep(
    g: &CsrGraph,
    z: &EmbeddingMatrix,
    rng: &mut StreamRng,
) -> Result<SweepResult> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::Degenerate("need at least two vertices".into()));
    }
    if z.rows() != n {
        return Err(Error::Consistency(format!(
            "{} embedding rows for {n} vertices",
            z.rows()
        )));
    }
    let points: Vec<f64> = z.as_slice().iter().map(|&v| v as f64).collect();
    let cfg = KMeansConfig::default();
    let mut best: Option<SweepResult> = None;
    for k in 2..=SWEEP_MAX_K.min(n) {
        let mut krng = rng.fork(Purpose::KMeans, k as u64);
        let clustering = kmeans_points(&points, z.dim(), k, &cfg, &mut krng)?;
        let q = modularity(g, &clustering.assignment)?;
        log::debug!("k={k} modularity={q}");
        if best.as_ref().is_none_or(|b| q > b.modularity) {
            best = Some(SweepResult {
                k,
                modularity: q,
                clustering,
            });
        }
    }
    Ok(best.expect("range holds k = 2"))
}
