//! Batch gradients, the SGD update and batch loss.

use rayon::prelude::*;

use super::{BatchSchedule, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::kernels::{Coef, ForceModel};
use crate::sampling::Minibatch;

/// Per-batch gradient rows, one per batch vertex, in batch order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBuffer {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl GradBuffer {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        GradBuffer {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Instrumentation for one batch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GradCounters {
    pub attractive: u64,
    pub repulsive: u64,
    /// Context entries handled by each worker range.
    pub per_worker_context: Vec<u64>,
}

/// `x` statistic for a pair: dot product or distance, plus `||z_other||`
/// when the sigmoid repulsion cap needs it.
#[inline]
fn pair_stat(model: &ForceModel, zu: &[f64], other: &[f32], want_norm: bool) -> (f64, f64) {
    if model.kind.is_distance_based() {
        let mut s = 0.0;
        for (&a, &b) in zu.iter().zip(other) {
            let d = a - b as f64;
            s += d * d;
        }
        (s.sqrt(), 0.0)
    } else if want_norm {
        let (mut dot, mut nn) = (0.0, 0.0);
        for (&a, &b) in zu.iter().zip(other) {
            let b = b as f64;
            dot += a * b;
            nn += b * b;
        }
        (dot, nn.sqrt())
    } else {
        (zu.iter().zip(other).map(|(&a, &b)| a * b as f64).sum(), 0.0)
    }
}

#[inline]
fn accumulate(model: &ForceModel, coef: Coef<f64>, zu: &[f64], other: &[f32], acc: &mut [f64]) {
    match coef {
        Coef::Basis(c) if model.kind.is_distance_based() => {
            for ((a, &p), &q) in acc.iter_mut().zip(zu).zip(other) {
                *a += c * (p - q as f64);
            }
        }
        Coef::Basis(c) => {
            for (a, &q) in acc.iter_mut().zip(other) {
                *a += c * q as f64;
            }
        }
        Coef::Fallback(c) => {
            let step = c / (acc.len() as f64).sqrt();
            for a in acc.iter_mut() {
                *a += step;
            }
        }
    }
}

/// Gradient of one vertex: its whole context run, then every negative,
/// accumulated in that order into `acc`.
fn vertex_gradient(
    model: &ForceModel,
    z: &EmbeddingMatrix,
    u: usize,
    context: &[VertexId],
    negatives: &[VertexId],
    zu: &mut [f64],
    acc: &mut [f64],
) {
    for (dst, &src) in zu.iter_mut().zip(z.row(u)) {
        *dst = src as f64;
    }
    acc.fill(0.0);
    for &v in context {
        let other = z.row(v as usize);
        let (x, norm) = pair_stat(model, zu, other, false);
        accumulate(model, model.attractive_coef(x, norm), zu, other, acc);
    }
    let want_norm = model.repulsion_cap.is_some();
    for &w in negatives {
        let other = z.row(w as usize);
        let (x, norm) = pair_stat(model, zu, other, want_norm);
        accumulate(model, model.repulsive_coef(x, norm), zu, other, acc);
    }
}

/// Gradient rows for every vertex of `batch`, read from the current `z`.
///
/// Each worker range of `schedule` is processed as one task on the current
/// rayon pool. Rows are written once per vertex and accumulation order is
/// fixed, so the result does not depend on the number of workers.
pub fn grad_minibatch(
    z: &EmbeddingMatrix,
    batch: &Minibatch<'_>,
    model: &ForceModel,
    schedule: &BatchSchedule,
) -> Result<(GradBuffer, GradCounters)> {
    let d = z.dim();
    let mut grads = GradBuffer::zeros(batch.len(), d);

    let mut chunks = Vec::with_capacity(schedule.worker_ranges.len());
    let mut rest = grads.data.as_mut_slice();
    let mut covered = 0;
    for r in &schedule.worker_ranges {
        assert_eq!(r.start, covered, "schedule ranges must be contiguous");
        let (head, tail) = rest.split_at_mut(r.len() * d);
        chunks.push((r.clone(), head));
        rest = tail;
        covered = r.end;
    }
    assert_eq!(covered, batch.len(), "schedule must cover the batch");

    let results: Vec<std::result::Result<u64, usize>> = chunks
        .into_par_iter()
        .map(|(range, out)| {
            let mut zu = vec![0.0; d];
            let mut context_total = 0u64;
            for (i, row) in range.zip(out.chunks_mut(d.max(1))) {
                let u = batch.vertices[i] as usize;
                let context = batch.context(i);
                vertex_gradient(model, z, u, context, &batch.negatives, &mut zu, row);
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(u);
                }
                context_total += context.len() as u64;
            }
            Ok(context_total)
        })
        .collect();

    let mut counters = GradCounters::default();
    for r in results {
        match r {
            Ok(c) => counters.per_worker_context.push(c),
            Err(vertex) => {
                return Err(Error::Numerical {
                    vertex,
                    epoch: 0,
                    batch: 0,
                })
            }
        }
    }
    counters.attractive = counters.per_worker_context.iter().sum();
    counters.repulsive = (batch.len() * batch.negatives.len()) as u64;
    Ok((grads, counters))
}

#[derive(Clone, Copy)]
struct RowBase(*mut f32);
// SAFETY: only used to write rows of distinct vertices from different tasks.
unsafe impl Send for RowBase {}
unsafe impl Sync for RowBase {}

impl RowBase {
    fn ptr(&self) -> *mut f32 {
        self.0
    }
}

/// `z_u <- z_u - eta * grad(u)` for every batch vertex.
///
/// Rows are updated in parallel when the vertex ids are distinct, which is
/// always the case for batches cut from an epoch partition.
pub fn apply_update(z: &mut EmbeddingMatrix, vertices: &[VertexId], grads: &GradBuffer, eta: f64) {
    assert_eq!(vertices.len(), grads.rows());
    assert_eq!(z.dim(), grads.dim());
    let d = z.dim();
    let update = |row: &mut [f32], g: &[f64]| {
        for (x, &gi) in row.iter_mut().zip(g) {
            *x = (*x as f64 - eta * gi) as f32;
        }
    };

    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
    if !distinct || vertices.len() < 64 {
        for (i, &u) in vertices.iter().enumerate() {
            update(z.row_mut(u as usize), grads.row(i));
        }
        return;
    }
    assert!(sorted.last().is_none_or(|&u| (u as usize) < z.rows()));
    let base = RowBase(z.as_mut_slice().as_mut_ptr());
    vertices
        .par_iter()
        .enumerate()
        .with_min_len(16)
        .for_each(|(i, &u)| {
            // SAFETY: ids are distinct and < rows, so each task owns a disjoint row.
            let row = unsafe { std::slice::from_raw_parts_mut(base.ptr().add(u as usize * d), d) };
            update(row, grads.row(i));
        });
}

/// Sampled loss of one batch: attractive terms over each context plus
/// repulsive terms over the shared negatives. Not differentiated.
pub fn batch_loss(z: &EmbeddingMatrix, batch: &Minibatch<'_>, model: &ForceModel) -> Result<f64> {
    if !model.kind.has_loss() {
        return Err(Error::Unsupported(format!(
            "{} has no defined loss",
            model.kind
        )));
    }
    let d = z.dim();
    let per_vertex: Vec<f64> = (0..batch.len())
        .into_par_iter()
        .with_min_len(8)
        .map_init(
            || vec![0.0; d],
            |zu, i| {
                let u = batch.vertices[i] as usize;
                for (dst, &src) in zu.iter_mut().zip(z.row(u)) {
                    *dst = src as f64;
                }
                let mut total = 0.0;
                for &v in batch.context(i) {
                    let (x, _) = pair_stat(model, zu, z.row(v as usize), false);
                    total += model.loss_from_stat(x, true).unwrap();
                }
                for &w in &batch.negatives {
                    let (x, _) = pair_stat(model, zu, z.row(w as usize), false);
                    total += model.loss_from_stat(x, false).unwrap();
                }
                total
            },
        )
        .collect();
    Ok(per_vertex.iter().sum())
}
