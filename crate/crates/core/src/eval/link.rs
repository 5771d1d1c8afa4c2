//! Link prediction over Hadamard features.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::hadamard;
use super::logreg::{fit_logreg, FeatureMatrix, LogRegConfig};
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::sampling::StreamRng;
use crate::trainer::EmbeddingMatrix;

/// Positive pairs are subsampled to this many on larger graphs.
pub const MAX_LINK_POSITIVES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkPair {
    pub u: usize,
    pub v: usize,
    pub is_edge: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkDataset {
    pub train: Vec<LinkPair>,
    pub test: Vec<LinkPair>,
}

impl LinkDataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pairs(&self) -> impl Iterator<Item = &LinkPair> {
        self.train.iter().chain(&self.test)
    }
}

fn adjacent(g: &CsrGraph, u: usize, v: usize) -> bool {
    g.has_arc(u, v) || g.has_arc(v, u)
}

/// Equal numbers of edges and verified non-edges, each class split evenly
/// between train and test, both halves shuffled.
pub fn build_link_dataset(g: &CsrGraph, rng: &mut StreamRng) -> Result<LinkDataset> {
    let n = g.num_vertices();
    let mut positives: Vec<(usize, usize)> = g
        .arcs()
        .filter(|&(u, v)| u < v || (u > v && !g.has_arc(v, u)))
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    if positives.is_empty() {
        return Err(Error::Degenerate("graph has no edges".into()));
    }
    let total_pairs = n * (n - 1) / 2;
    let non_edges = total_pairs - positives.len();
    if non_edges == 0 {
        return Err(Error::Degenerate(
            "graph is complete, no non-edges to sample".into(),
        ));
    }
    positives.shuffle(rng);
    positives.truncate(MAX_LINK_POSITIVES.min(non_edges));
    let want = positives.len();

    let negatives: Vec<(usize, usize)> = if non_edges <= 4 * want {
        // Dense graph: enumerate the complement.
        let mut all = Vec::with_capacity(non_edges);
        for u in 0..n {
            for v in u + 1..n {
                if !adjacent(g, u, v) {
                    all.push((u, v));
                }
            }
        }
        all.shuffle(rng);
        all.truncate(want);
        all
    } else {
        let mut seen = HashSet::with_capacity(want);
        let mut out = Vec::with_capacity(want);
        while out.len() < want {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if !adjacent(g, pair.0, pair.1) && seen.insert(pair) {
                out.push(pair);
            }
        }
        out
    };

    let half_pos = want / 2 + want % 2;
    let half_neg = half_pos;
    let mut train: Vec<LinkPair> = tag(&positives[..half_pos], true)
        .chain(tag(&negatives[..half_neg], false))
        .collect();
    let mut test: Vec<LinkPair> = tag(&positives[half_pos..], true)
        .chain(tag(&negatives[half_neg..], false))
        .collect();
    train.shuffle(rng);
    test.shuffle(rng);
    Ok(LinkDataset { train, test })
}

fn tag(pairs: &[(usize, usize)], is_edge: bool) -> impl Iterator<Item = LinkPair> + '_ {
    pairs.iter().map(move |&(u, v)| LinkPair { u, v, is_edge })
}

fn features(z: &EmbeddingMatrix, pairs: &[LinkPair]) -> Result<FeatureMatrix> {
    let mut data = Vec::with_capacity(pairs.len() * z.dim());
    for p in pairs {
        if p.u >= z.rows() || p.v >= z.rows() {
            return Err(Error::Consistency(format!(
                "pair ({}, {}) outside an embedding of {} rows",
                p.u,
                p.v,
                z.rows()
            )));
        }
        data.extend(hadamard(z.row(p.u), z.row(p.v))?);
    }
    FeatureMatrix::new(pairs.len(), z.dim(), data)
}

/// Fits on the train half and reports accuracy on the test half.
pub fn link_prediction_accuracy(
    z: &EmbeddingMatrix,
    ds: &LinkDataset,
    cfg: &LogRegConfig,
) -> Result<f64> {
    if ds.test.is_empty() {
        return Err(Error::Degenerate("empty test split".into()));
    }
    let x = features(z, &ds.train)?;
    let y: Vec<bool> = ds.train.iter().map(|p| p.is_edge).collect();
    let model = fit_logreg(&x, &y, cfg)?;
    let xt = features(z, &ds.test)?;
    let correct = ds
        .test
        .iter()
        .enumerate()
        .filter(|(i, p)| model.predict(xt.row(*i)) == p.is_edge)
        .count();
    Ok(correct as f64 / ds.test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::planted_partition;
    use crate::sampling::Purpose;

    fn triangle_plus_isolated() -> CsrGraph {
        CsrGraph::from_arcs(4, [(0, 1), (0, 2), (1, 2)], true)
            .unwrap()
            .0
    }

    #[test]
    fn triangle_with_isolated_vertex() {
        let g = triangle_plus_isolated();
        let ds = build_link_dataset(&g, &mut StreamRng::new(1, 0)).unwrap();
        let mut pos: Vec<_> = ds
            .pairs()
            .filter(|p| p.is_edge)
            .map(|p| (p.u, p.v))
            .collect();
        pos.sort();
        assert_eq!(pos, vec![(0, 1), (0, 2), (1, 2)]);
        let mut neg: Vec<_> = ds
            .pairs()
            .filter(|p| !p.is_edge)
            .map(|p| (p.u, p.v))
            .collect();
        neg.sort();
        assert_eq!(neg, vec![(0, 3), (1, 3), (2, 3)]);
    }

    #[test]
    fn complete_and_edgeless_graphs_are_rejected() {
        let k4: Vec<_> = (0..4)
            .flat_map(|u| (u + 1..4).map(move |v| (u, v)))
            .collect();
        let g = CsrGraph::from_arcs(4, k4, true).unwrap().0;
        assert!(build_link_dataset(&g, &mut StreamRng::new(1, 0)).is_err());
        let g = CsrGraph::from_arcs(4, [], true).unwrap().0;
        assert!(build_link_dataset(&g, &mut StreamRng::new(1, 0)).is_err());
    }

    #[test]
    fn balanced_verified_and_disjoint() {
        let mut rng = StreamRng::derive(5, Purpose::Generator, 0, 0);
        let g = planted_partition(&[100, 100], 0.1, 0.01, &mut rng).unwrap();
        let ds = build_link_dataset(&g, &mut StreamRng::new(5, 1)).unwrap();
        let pos = ds.pairs().filter(|p| p.is_edge).count();
        assert_eq!(pos * 2, ds.len());
        assert_eq!(
            ds.train.iter().filter(|p| p.is_edge).count(),
            ds.train.iter().filter(|p| !p.is_edge).count()
        );
        for p in ds.pairs() {
            assert!(p.u < p.v);
            assert_eq!(adjacent(&g, p.u, p.v), p.is_edge);
        }
        let train: HashSet<_> = ds.train.iter().map(|p| (p.u, p.v)).collect();
        assert_eq!(train.len(), ds.train.len());
        assert!(ds.test.iter().all(|p| !train.contains(&(p.u, p.v))));
    }

    #[test]
    fn accuracy_extremes() {
        // Two well-separated embeddings: edges join same-sign rows.
        let g = CsrGraph::from_arcs(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)], true)
            .unwrap()
            .0;
        let z = EmbeddingMatrix::from_vec(6, 1, vec![1.0, 1.1, 0.9, -1.0, -1.1, -0.9]).unwrap();
        let ds = build_link_dataset(&g, &mut StreamRng::new(2, 0)).unwrap();
        let acc = link_prediction_accuracy(&z, &ds, &LogRegConfig::default()).unwrap();
        assert_eq!(acc, 1.0);
    }
}
