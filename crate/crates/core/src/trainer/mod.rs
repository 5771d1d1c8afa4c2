//! Minibatch SGD over a force model.
//!
//! Each epoch draws a fresh vertex permutation and walks it in batches. For
//! every batch the negatives (and walks, in walk mode) are drawn from a
//! stream keyed by `(epoch, batch)`, gradients for all batch vertices are
//! computed from the embedding as it stood before the batch, and only then
//! are the batch rows updated. The result is a pure function of the graph
//! and the configuration, whatever the worker count.

mod embedding;
mod grad;
mod schedule;

use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

pub use embedding::{init_embedding, EmbeddingMatrix};
pub use grad::{apply_update, batch_loss, grad_minibatch, GradBuffer, GradCounters};
pub use schedule::{make_schedule, BatchSchedule};

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::kernels::{ForceKind, ForceModel};
use crate::sampling::{build_minibatch, partition_epoch, ContextMode, Purpose, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Decays linearly from `lr` in the first epoch towards zero.
    LinearToZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub batch: usize,
    pub negatives: usize,
    pub lr: f64,
    pub epochs: usize,
    pub model: ForceModel,
    pub mode: ContextMode,
    pub seed: u64,
    pub workers: usize,
    pub lr_decay: LrSchedule,
    /// Split batches by neighbor count instead of vertex count.
    pub balanced: bool,
    /// Compute the sampled loss of every batch (roughly doubles the cost).
    pub monitor_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            batch: 384,
            negatives: 6,
            lr: 0.02,
            epochs: 1200,
            model: ForceModel::new(ForceKind::TDist),
            mode: ContextMode::OneHop,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            lr_decay: LrSchedule::Constant,
            balanced: true,
            monitor_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn with_model(kind: ForceKind) -> Self {
        TrainConfig {
            model: ForceModel::new(kind),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("batch", self.batch),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.mode == ContextMode::Walk(0) {
            return Err(Error::InvalidArgument(
                "walk length must be at least 1".into(),
            ));
        }
        if self.monitor_loss && !self.model.kind.has_loss() {
            return Err(Error::Unsupported(format!(
                "loss monitoring needs sigmoid or tdist, got {}",
                self.model.kind
            )));
        }
        self.model.validate()
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_decay {
            LrSchedule::Constant => self.lr,
            LrSchedule::LinearToZero => self.lr * (1.0 - epoch as f64 / self.epochs as f64),
        }
    }
}

/// Bytes needed for the graph and embedding: `4n + 8m + 4nd`.
pub fn memory_estimate_bytes(n: usize, arcs: usize, dim: usize) -> u64 {
    4 * n as u64 + 8 * arcs as u64 + 4 * (n as u64) * (dim as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub batches: usize,
    /// Sum of sampled batch losses, when monitoring.
    pub loss: Option<f64>,
    pub elapsed_ms: u128,
    pub attractive_evals: u64,
    pub repulsive_evals: u64,
    /// Context entries handled per worker over the epoch.
    pub per_worker_context: Vec<u64>,
}

impl EpochStats {
    /// `epoch <i> loss <float> elapsed_ms <int>`
    pub fn progress_line(&self) -> String {
        let loss = self
            .loss
            .map_or_else(|| "nan".to_string(), |l| l.to_string());
        format!(
            "epoch {} loss {} elapsed_ms {}",
            self.epoch, loss, self.elapsed_ms
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub embedding: EmbeddingMatrix,
    pub epochs: Vec<EpochStats>,
    /// True when training stopped before the configured epoch count.
    pub interrupted: bool,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.loss).collect()
    }
}

pub struct Trainer<'g> {
    graph: &'g CsrGraph,
    cfg: TrainConfig,
    stop: Option<Arc<AtomicBool>>,
    initial: Option<EmbeddingMatrix>,
}

impl<'g> Trainer<'g> {
    pub fn new(graph: &'g CsrGraph, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if graph.num_vertices() == 0 {
            return Err(Error::Degenerate("graph has no vertices".into()));
        }
        Ok(Trainer {
            graph,
            cfg,
            stop: None,
            initial: None,
        })
    }

    /// Checked between batches; when set, training returns the embedding as
    /// of the last completed batch.
    pub fn stop_flag(mut self, flag: Arc<AtomicBool>) -> Self {
        self.stop = Some(flag);
        self
    }

    /// Start from a given embedding instead of a random one.
    pub fn initial_embedding(mut self, z: EmbeddingMatrix) -> Result<Self> {
        if z.rows() != self.graph.num_vertices() || z.dim() != self.cfg.dim {
            return Err(Error::Consistency(format!(
                "initial embedding is {}x{}, expected {}x{}",
                z.rows(),
                z.dim(),
                self.graph.num_vertices(),
                self.cfg.dim
            )));
        }
        self.initial = Some(z);
        Ok(self)
    }

    pub fn run(self) -> Result<TrainReport> {
        self.run_with(|_| ControlFlow::Continue(()))
    }

    /// Runs training, handing every finished epoch to `observer`. Returning
    /// `ControlFlow::Break` stops after that epoch.
    pub fn run_with<F>(self, mut observer: F) -> Result<TrainReport>
    where
        F: FnMut(&EpochStats) -> ControlFlow<()>,
    {
        let Trainer {
            graph: g,
            cfg,
            stop,
            initial,
        } = self;
        let n = g.num_vertices();
        let mut z = match initial {
            Some(z) => z,
            None => init_embedding(
                n,
                cfg.dim,
                &mut StreamRng::derive(cfg.seed, Purpose::Init, 0, 0),
            )?,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

        let mut history = Vec::with_capacity(cfg.epochs);
        let mut interrupted = false;
        let started = Instant::now();
        'epochs: for epoch in 0..cfg.epochs {
            let eta = cfg.lr_at(epoch);
            let mut part_rng = StreamRng::derive(cfg.seed, Purpose::Partition, epoch as u64, 0);
            let partition = partition_epoch(n, cfg.batch, &mut part_rng)?;
            let mut stats = EpochStats {
                epoch,
                batches: 0,
                loss: cfg.monitor_loss.then_some(0.0),
                elapsed_ms: 0,
                attractive_evals: 0,
                repulsive_evals: 0,
                per_worker_context: vec![0; cfg.workers],
            };
            for (b, ids) in partition.batches().enumerate() {
                if stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed)) {
                    interrupted = true;
                    break 'epochs;
                }
                let mut rng = StreamRng::for_batch(cfg.seed, epoch, b);
                let batch = build_minibatch(g, ids, cfg.mode, cfg.negatives, &mut rng);
                let schedule = if cfg.balanced {
                    BatchSchedule::balanced(&batch.context_sizes(), cfg.workers)
                } else {
                    BatchSchedule::static_split(batch.len(), cfg.workers)
                };
                let (grads, counters) = pool.install(|| -> Result<_> {
                    if let Some(total) = stats.loss.as_mut() {
                        *total += batch_loss(&z, &batch, &cfg.model)?;
                    }
                    grad_minibatch(&z, &batch, &cfg.model, &schedule).map_err(|e| match e {
                        Error::Numerical { vertex, .. } => Error::Numerical {
                            vertex,
                            epoch,
                            batch: b,
                        },
                        other => other,
                    })
                })?;
                pool.install(|| apply_update(&mut z, &batch.vertices, &grads, eta));
                // A finite f64 gradient can still overflow the f32 rows.
                if let Some(&u) = batch
                    .vertices
                    .iter()
                    .find(|&&u| z.row(u as usize).iter().any(|v| !v.is_finite()))
                {
                    return Err(Error::Numerical {
                        vertex: u as usize,
                        epoch,
                        batch: b,
                    });
                }

                stats.batches += 1;
                stats.attractive_evals += counters.attractive;
                stats.repulsive_evals += counters.repulsive;
                for (acc, c) in stats
                    .per_worker_context
                    .iter_mut()
                    .zip(&counters.per_worker_context)
                {
                    *acc += c;
                }
            }
            if let Some(vertex) = z.first_non_finite_row() {
                return Err(Error::Numerical {
                    vertex,
                    epoch,
                    batch: stats.batches,
                });
            }
            stats.elapsed_ms = started.elapsed().as_millis();
            let flow = observer(&stats);
            history.push(stats);
            if flow.is_break() {
                interrupted = epoch + 1 < cfg.epochs;
                break;
            }
        }
        Ok(TrainReport {
            embedding: z,
            epochs: history,
            interrupted,
        })
    }
}

/// Trains an embedding of `g` with `cfg`.
pub fn train(g: &CsrGraph, cfg: &TrainConfig) -> Result<EmbeddingMatrix> {
    Ok(Trainer::new(g, cfg.clone())?.run()?.embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::karate_club;

    fn small_cfg(kind: ForceKind) -> TrainConfig {
        TrainConfig {
            dim: 8,
            epochs: 20,
            workers: 2,
            seed: 3,
            ..TrainConfig::with_model(kind)
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let g = karate_club();
        for cfg in [
            TrainConfig {
                epochs: 0,
                ..small_cfg(ForceKind::TDist)
            },
            TrainConfig {
                dim: 0,
                ..small_cfg(ForceKind::TDist)
            },
            TrainConfig {
                lr: 0.0,
                ..small_cfg(ForceKind::TDist)
            },
            TrainConfig {
                workers: 0,
                ..small_cfg(ForceKind::TDist)
            },
            TrainConfig {
                monitor_loss: true,
                ..small_cfg(ForceKind::LinLog)
            },
        ] {
            assert!(Trainer::new(&g, cfg).is_err());
        }
    }

    #[test]
    fn one_epoch_runs_ceil_n_over_b_batches() {
        let g = karate_club();
        let cfg = TrainConfig {
            epochs: 1,
            batch: 10,
            ..small_cfg(ForceKind::Sigmoid)
        };
        let report = Trainer::new(&g, cfg).unwrap().run().unwrap();
        assert_eq!(report.epochs.len(), 1);
        assert_eq!(report.epochs[0].batches, 4);
        assert_eq!(report.epochs[0].attractive_evals, g.num_arcs() as u64);
        assert_eq!(report.epochs[0].repulsive_evals, 34 * 6);
    }

    #[test]
    fn deterministic_across_runs_and_workers() {
        let g = karate_club();
        for kind in ForceKind::ALL {
            let a = train(&g, &small_cfg(kind)).unwrap();
            let b = train(&g, &small_cfg(kind)).unwrap();
            let c = train(
                &g,
                &TrainConfig {
                    workers: 5,
                    ..small_cfg(kind)
                },
            )
            .unwrap();
            let d = train(
                &g,
                &TrainConfig {
                    balanced: false,
                    workers: 3,
                    ..small_cfg(kind)
                },
            )
            .unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
            assert_eq!(a, d);
        }
    }

    #[test]
    fn observer_can_stop_training() {
        let g = karate_club();
        let report = Trainer::new(&g, small_cfg(ForceKind::TDist))
            .unwrap()
            .run_with(|s| {
                if s.epoch == 4 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })
            .unwrap();
        assert_eq!(report.epochs.len(), 5);
        assert!(report.interrupted);

        let flag = Arc::new(AtomicBool::new(true));
        let report = Trainer::new(&g, small_cfg(ForceKind::TDist))
            .unwrap()
            .stop_flag(flag)
            .run()
            .unwrap();
        assert!(report.interrupted && report.epochs.is_empty());
        assert!(report.embedding.first_non_finite_row().is_none());
    }

    #[test]
    fn walk_mode_counts() {
        let g = karate_club();
        let cfg = TrainConfig {
            mode: ContextMode::Walk(5),
            epochs: 3,
            ..small_cfg(ForceKind::Sigmoid)
        };
        let report = Trainer::new(&g, cfg).unwrap().run().unwrap();
        for e in &report.epochs {
            assert_eq!(e.attractive_evals, 34 * 5);
        }
    }

    #[test]
    fn linear_decay_reaches_zero_at_the_end() {
        let cfg = TrainConfig {
            lr_decay: LrSchedule::LinearToZero,
            epochs: 4,
            ..Default::default()
        };
        assert_eq!(cfg.lr_at(0), 0.02);
        assert!((cfg.lr_at(2) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn memory_estimate_formula() {
        assert_eq!(memory_estimate_bytes(10, 20, 128), 516 * 10 + 8 * 20);
    }

    #[test]
    fn progress_line_format() {
        let s = EpochStats {
            epoch: 3,
            batches: 1,
            loss: Some(1.5),
            elapsed_ms: 12,
            attractive_evals: 0,
            repulsive_evals: 0,
            per_worker_context: vec![],
        };
        assert_eq!(s.progress_line(), "epoch 3 loss 1.5 elapsed_ms 12");
    }
}
