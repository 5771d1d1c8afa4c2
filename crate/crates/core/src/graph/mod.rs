//! Compressed sparse row graphs.
//!
//! Graphs are simple and unweighted once built: self-loops and duplicate
//! arcs are dropped, every row is sorted ascending. Graphs never change
//! after construction and can be shared freely between threads.

mod load;

pub use load::{
    load_edge_list, load_edge_list_path, load_matrix_market, load_matrix_market_path,
    read_remap_table, write_edge_list, write_matrix_market, write_remap_table, IdMode, LoadOptions,
    LoadedGraph, Remap,
};

use crate::error::{Error, Result};

/// Dense vertex index. 32 bits unless the `wide-ids` feature is enabled.
#[cfg(not(feature = "wide-ids"))]
pub type VertexId = u32;
#[cfg(feature = "wide-ids")]
pub type VertexId = u64;

/// Number of arcs dropped while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    row_offsets: Vec<usize>,
    col_indices: Vec<VertexId>,
    symmetric: bool,
}

impl CsrGraph {
    /// Builds a graph over `n` vertices from an arc list.
    ///
    /// With `symmetrize`, the reverse of every arc is inserted as well.
    pub fn from_arcs<I>(n: usize, arcs: I, symmetrize: bool) -> Result<(Self, BuildStats)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > VertexId::MAX as usize {
            return Err(Error::Capacity(format!(
                "{n} vertices do not fit the configured vertex index width"
            )));
        }
        let mut stats = BuildStats::default();
        let mut pairs: Vec<(VertexId, VertexId)> = Vec::new();
        for (u, v) in arcs {
            if u >= n || v >= n {
                return Err(Error::Range(format!(
                    "arc ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            pairs.push((u as VertexId, v as VertexId));
            if symmetrize {
                pairs.push((v as VertexId, u as VertexId));
            }
        }

        // Counting sort by source, then sort and dedup within each row.
        let mut counts = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            counts[u as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut cols = vec![0 as VertexId; pairs.len()];
        for &(u, v) in &pairs {
            let slot = &mut cursor[u as usize];
            cols[*slot] = v;
            *slot += 1;
        }
        drop(pairs);

        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut write = 0;
        for u in 0..n {
            let (start, end) = (counts[u], counts[u + 1]);
            cols[start..end].sort_unstable();
            let mut last = None;
            for read in start..end {
                let v = cols[read];
                if last == Some(v) {
                    continue;
                }
                last = Some(v);
                cols[write] = v;
                write += 1;
            }
            row_offsets.push(write);
        }
        let raw = cols.len();
        cols.truncate(write);
        cols.shrink_to_fit();
        let dropped = raw - write;
        // With symmetrize every duplicate logical edge shows up twice.
        stats.duplicates = if symmetrize { dropped / 2 } else { dropped };

        let mut graph = CsrGraph {
            row_offsets,
            col_indices: cols,
            symmetric: true,
        };
        if !symmetrize {
            graph.symmetric = graph.check_symmetric();
        }
        Ok((graph, stats))
    }

    /// Builds a graph from raw CSR arrays, validating every invariant.
    pub fn from_csr(row_offsets: Vec<usize>, col_indices: Vec<VertexId>) -> Result<Self> {
        if row_offsets.first() != Some(&0) {
            return Err(Error::format(None, "row offsets must start at 0"));
        }
        if *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::format(
                None,
                "last row offset must equal the arc count",
            ));
        }
        let n = row_offsets.len() - 1;
        for u in 0..n {
            let (s, e) = (row_offsets[u], row_offsets[u + 1]);
            if s > e {
                return Err(Error::format(
                    None,
                    format!("row offsets decrease at row {u}"),
                ));
            }
            let row = &col_indices[s..e];
            for (i, &v) in row.iter().enumerate() {
                if v as usize >= n {
                    return Err(Error::Range(format!("neighbor {v} of {u} outside 0..{n}")));
                }
                if v as usize == u {
                    return Err(Error::format(None, format!("self-loop at {u}")));
                }
                if i > 0 && row[i - 1] >= v {
                    return Err(Error::format(
                        None,
                        format!("row {u} not strictly ascending"),
                    ));
                }
            }
        }
        let mut g = CsrGraph {
            row_offsets,
            col_indices,
            symmetric: false,
        };
        g.symmetric = g.check_symmetric();
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.row_offsets.len() - 1
    }

    /// Number of stored arcs; twice the edge count for symmetric graphs.
    pub fn num_arcs(&self) -> usize {
        self.col_indices.len()
    }

    /// Undirected edge count, `num_arcs / 2` for symmetric graphs.
    pub fn num_edges(&self) -> usize {
        if self.symmetric {
            self.num_arcs() / 2
        } else {
            self.num_arcs()
        }
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[VertexId] {
        &self.col_indices
    }

    /// True when built in symmetric mode (or verified symmetric).
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn neighbors(&self, u: usize) -> Result<&[VertexId]> {
        if u >= self.num_vertices() {
            return Err(Error::Range(format!(
                "vertex {u} outside 0..{}",
                self.num_vertices()
            )));
        }
        Ok(self.adj(u))
    }

    /// Neighbor slice without the range check. Panics if `u >= n`.
    #[inline]
    pub fn adj(&self, u: usize) -> &[VertexId] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices())
            .map(|u| self.degree(u))
            .max()
            .unwrap_or(0)
    }

    /// Whether the arc `u -> v` is present (binary search in row `u`).
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.adj(u).binary_search(&(v as VertexId)).is_ok()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_vertices())
            .flat_map(move |u| self.adj(u).iter().map(move |&v| (u, v as usize)))
    }

    /// Structural check that `v ∈ N(u) ⇔ u ∈ N(v)`.
    pub fn check_symmetric(&self) -> bool {
        self.arcs().all(|(u, v)| self.has_arc(v, u))
    }

    pub fn degree_histogram(&self) -> DegreeHistogram {
        let degrees: Vec<usize> = (0..self.num_vertices()).map(|u| self.degree(u)).collect();
        DegreeHistogram {
            prefix: self.row_offsets.clone(),
            degrees,
        }
    }
}

/// Per-vertex out-degrees and their prefix sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub degrees: Vec<usize>,
    pub prefix: Vec<usize>,
}

pub fn degree_histogram(g: &CsrGraph) -> DegreeHistogram {
    g.degree_histogram()
}
