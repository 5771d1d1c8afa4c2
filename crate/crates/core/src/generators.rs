//! Small synthetic and bundled graphs used by tests and benchmarks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{load_edge_list, CsrGraph, LoadOptions};
use crate::sampling::StreamRng;

const KARATE_EDGES: &str = include_str!("../data/karate.edgelist");
const KARATE_LABELS: &str = include_str!("../data/karate.labels");

/// Zachary's karate club: 34 vertices, 78 undirected edges.
pub fn karate_club() -> CsrGraph {
    load_edge_list(KARATE_EDGES.as_bytes(), LoadOptions::default())
        .expect("bundled karate club edge list is valid")
        .graph
}

/// Faction of each karate club member after the split (0 or 1).
pub fn karate_club_factions() -> Vec<usize> {
    KARATE_LABELS
        .lines()
        .filter_map(|l| l.split_whitespace().nth(1)?.parse().ok())
        .collect()
}

/// Raw edge-list text of the karate club graph.
pub fn karate_club_edge_list() -> &'static str {
    KARATE_EDGES
}

/// Stochastic block model with planted blocks of the given sizes.
///
/// Every unordered pair inside a block is an edge with probability `p_in`,
/// every pair across blocks with probability `p_out`.
pub fn planted_partition(
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut StreamRng,
) -> Result<CsrGraph> {
    Ok(planted_partition_with_blocks(sizes, p_in, p_out, rng)?.0)
}

/// Like [`planted_partition`] but also returns each vertex's block.
pub fn planted_partition_with_blocks(
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut StreamRng,
) -> Result<(CsrGraph, Vec<usize>)> {
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
    }
    let blocks: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = blocks.len();
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if blocks[u] == blocks[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                arcs.push((u, v));
            }
        }
    }
    let (g, _) = CsrGraph::from_arcs(n, arcs, true)?;
    Ok((g, blocks))
}

/// G(n, p) random graph.
pub fn erdos_renyi(n: usize, p: f64, rng: &mut StreamRng) -> Result<CsrGraph> {
    planted_partition(&[n], p, 0.0, rng)
}
