//! Minibatches, negative samples and neighbor contexts.
//!
//! All randomness comes from [`StreamRng`], a ChaCha generator addressed by
//! `(seed, stream)`. Every consumer derives its own stream from a purpose tag
//! and indices such as `(epoch, batch)`, so sampling does not depend on how
//! work is spread over threads.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, VertexId};

/// What a random stream is used for; part of its address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Partition = 2,
    Batch = 3,
    LinkDataset = 4,
    Split = 5,
    KMeans = 6,
    Generator = 7,
    Other = 15,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic random stream. Identical `(seed, stream)` pairs produce
/// identical sequences.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng { inner }
    }

    /// Stream addressed by a purpose and two indices.
    pub fn derive(seed: u64, purpose: Purpose, a: u64, b: u64) -> Self {
        let key = splitmix64(splitmix64(splitmix64(purpose as u64) ^ a) ^ b);
        StreamRng::new(seed, key)
    }

    pub fn for_batch(seed: u64, epoch: usize, batch: usize) -> Self {
        StreamRng::derive(seed, Purpose::Batch, epoch as u64, batch as u64)
    }

    /// Draws a fresh sub-seed, for handing to an independent consumer.
    pub fn fork(&mut self, purpose: Purpose, index: u64) -> StreamRng {
        let seed = self.inner.next_u64();
        StreamRng::derive(seed, purpose, index, 0)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One epoch's random vertex order, cut into consecutive batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPartition {
    order: Vec<VertexId>,
    batch: usize,
}

impl EpochPartition {
    pub fn num_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch)
    }

    pub fn batches(&self) -> std::slice::Chunks<'_, VertexId> {
        self.order.chunks(self.batch)
    }

    pub fn order(&self) -> &[VertexId] {
        &self.order
    }
}

/// Random permutation of `0..n` cut into `ceil(n / b)` chunks.
/// A batch size larger than `n` yields a single chunk.
pub fn partition_epoch(n: usize, b: usize, rng: &mut StreamRng) -> Result<EpochPartition> {
    if b == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".into(),
        ));
    }
    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.shuffle(rng);
    Ok(EpochPartition {
        order,
        batch: b.min(n.max(1)),
    })
}

/// `s` ids drawn i.i.d. uniformly from `0..n`; duplicates allowed.
pub fn draw_negatives(n: usize, s: usize, rng: &mut StreamRng) -> Vec<VertexId> {
    assert!(n >= 1, "cannot sample from an empty vertex set");
    (0..s).map(|_| rng.random_range(0..n) as VertexId).collect()
}

/// Simple random walk of `k` steps from `u`, not including `u` itself.
///
/// A walk reaching a vertex without out-neighbors restarts from `u`, so the
/// result always has exactly `k` entries unless `u` is isolated, in which
/// case it is empty.
pub fn gen_walk(g: &CsrGraph, u: usize, k: usize, rng: &mut StreamRng) -> Vec<VertexId> {
    let mut walk = Vec::with_capacity(k);
    append_walk(g, u, k, rng, &mut walk);
    walk
}

fn append_walk(g: &CsrGraph, u: usize, k: usize, rng: &mut StreamRng, out: &mut Vec<VertexId>) {
    if g.degree(u) == 0 {
        return;
    }
    let mut w = u;
    for _ in 0..k {
        let mut adj = g.adj(w);
        if adj.is_empty() {
            adj = g.adj(u);
        }
        let next = adj[rng.random_range(0..adj.len())];
        out.push(next);
        w = next as usize;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    /// Context is the CSR neighbor list.
    OneHop,
    /// Context is a `k`-step random walk.
    Walk(usize),
}

impl ContextMode {
    /// `0` selects one-hop mode, anything else a walk of that length.
    pub fn from_walk_length(k: usize) -> Self {
        if k == 0 {
            ContextMode::OneHop
        } else {
            ContextMode::Walk(k)
        }
    }
}

#[derive(Debug, Clone)]
enum Context<'g> {
    OneHop(&'g CsrGraph),
    Walks {
        offsets: Vec<usize>,
        ids: Vec<VertexId>,
    },
}

/// A batch of vertices, their attractive contexts and the shared negatives.
#[derive(Debug, Clone)]
pub struct Minibatch<'g> {
    pub vertices: Vec<VertexId>,
    pub negatives: Vec<VertexId>,
    context: Context<'g>,
}

impl<'g> Minibatch<'g> {
    /// Assembles a batch from explicit parts; `contexts[i]` belongs to
    /// `vertices[i]`.
    pub fn from_parts(
        vertices: Vec<VertexId>,
        contexts: &[Vec<VertexId>],
        negatives: Vec<VertexId>,
    ) -> Self {
        assert_eq!(vertices.len(), contexts.len());
        let mut offsets = vec![0];
        let mut ids = Vec::new();
        for c in contexts {
            ids.extend_from_slice(c);
            offsets.push(ids.len());
        }
        Minibatch {
            vertices,
            negatives,
            context: Context::Walks { offsets, ids },
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Context of the `i`-th batch vertex.
    #[inline]
    pub fn context(&self, i: usize) -> &[VertexId] {
        match &self.context {
            Context::OneHop(g) => g.adj(self.vertices[i] as usize),
            Context::Walks { offsets, ids } => &ids[offsets[i]..offsets[i + 1]],
        }
    }

    pub fn context_sizes(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.context(i).len()).collect()
    }
}

/// Builds one minibatch. Negatives are drawn first, then walks in batch
/// order, all from `rng`.
pub fn build_minibatch<'g>(
    g: &'g CsrGraph,
    ids: &[VertexId],
    mode: ContextMode,
    s: usize,
    rng: &mut StreamRng,
) -> Minibatch<'g> {
    let negatives = draw_negatives(g.num_vertices(), s, rng);
    let context = match mode {
        ContextMode::OneHop => Context::OneHop(g),
        ContextMode::Walk(k) => {
            let mut offsets = Vec::with_capacity(ids.len() + 1);
            offsets.push(0);
            let mut walks = Vec::with_capacity(ids.len() * k);
            for &u in ids {
                append_walk(g, u as usize, k, rng, &mut walks);
                offsets.push(walks.len());
            }
            Context::Walks {
                offsets,
                ids: walks,
            }
        }
    };
    Minibatch {
        vertices: ids.to_vec(),
        negatives,
        context,
    }
}
