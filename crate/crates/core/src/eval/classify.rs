//! One-vs-rest node classification scored by F1.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::logreg::{fit_logreg, FeatureMatrix, LogRegConfig, LogRegModel};
use crate::error::{Error, Result};
use crate::sampling::{Purpose, StreamRng};
use crate::trainer::EmbeddingMatrix;

const MAX_SPLIT_ATTEMPTS: usize = 10;

/// Per-vertex label sets. Vertices with an empty set are unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledNodes {
    labels: Vec<Vec<u32>>,
    num_classes: usize,
}

impl LabeledNodes {
    /// Builds from `(vertex, label)` pairs. Label ids are densified in
    /// ascending order; repeated pairs are ignored.
    pub fn from_pairs(n: usize, pairs: &[(usize, u64)]) -> Result<Self> {
        let mut dense = BTreeMap::new();
        for &(v, l) in pairs {
            if v >= n {
                return Err(Error::Range(format!("labeled vertex {v} not below {n}")));
            }
            dense.insert(l, 0u32);
        }
        for (i, slot) in dense.values_mut().enumerate() {
            *slot = i as u32;
        }
        let mut labels = vec![Vec::new(); n];
        for &(v, l) in pairs {
            labels[v].push(dense[&l]);
        }
        for set in &mut labels {
            set.sort_unstable();
            set.dedup();
        }
        Ok(LabeledNodes {
            labels,
            num_classes: dense.len(),
        })
    }

    /// Takes already-dense label sets.
    pub fn new(labels: Vec<Vec<u32>>, num_classes: usize) -> Result<Self> {
        if let Some(bad) = labels
            .iter()
            .flatten()
            .find(|&&l| l as usize >= num_classes)
        {
            return Err(Error::Range(format!("label {bad} not below {num_classes}")));
        }
        Ok(LabeledNodes {
            labels,
            num_classes,
        })
    }

    /// One label per vertex.
    pub fn single(labels: &[usize]) -> Self {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        LabeledNodes {
            labels: labels.iter().map(|&l| vec![l as u32]).collect(),
            num_classes,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self, v: usize) -> &[u32] {
        &self.labels[v]
    }

    pub fn is_multi_label(&self) -> bool {
        self.labels.iter().any(|s| s.len() > 1)
    }

    pub fn labeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(|&v| !self.labels[v].is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationScores {
    pub f1_micro: f64,
    pub f1_macro: f64,
}

/// Micro and macro F1 from per-vertex true and predicted label sets.
///
/// Macro averages over classes that occur in either the truth or the
/// predictions.
pub fn f1_scores(
    truth: &[Vec<u32>],
    predicted: &[Vec<u32>],
    num_classes: usize,
) -> ClassificationScores {
    let mut tp = vec![0u64; num_classes];
    let mut fp = vec![0u64; num_classes];
    let mut fneg = vec![0u64; num_classes];
    for (t, p) in truth.iter().zip(predicted) {
        for &c in p {
            if t.contains(&c) {
                tp[c as usize] += 1;
            } else {
                fp[c as usize] += 1;
            }
        }
        for &c in t {
            if !p.contains(&c) {
                fneg[c as usize] += 1;
            }
        }
    }
    let (stp, sfp, sfn): (u64, u64, u64) = (tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    let precision = if stp + sfp > 0 {
        stp as f64 / (stp + sfp) as f64
    } else {
        0.0
    };
    let recall = if stp + sfn > 0 {
        stp as f64 / (stp + sfn) as f64
    } else {
        0.0
    };
    let f1_micro = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let mut sum = 0.0;
    let mut classes = 0;
    for c in 0..num_classes {
        let denom = 2 * tp[c] + fp[c] + fneg[c];
        if denom > 0 {
            sum += 2.0 * tp[c] as f64 / denom as f64;
            classes += 1;
        }
    }
    let f1_macro = if classes > 0 {
        sum / classes as f64
    } else {
        0.0
    };
    ClassificationScores { f1_micro, f1_macro }
}

/// Stratified by each vertex's smallest label.
fn stratified_split(
    labels: &LabeledNodes,
    fraction: f64,
    rng: &mut StreamRng,
) -> (Vec<usize>, Vec<usize>) {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for v in labels.labeled() {
        groups.entry(labels.labels(v)[0]).or_default().push(v);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for members in groups.values_mut() {
        members.shuffle(rng);
        let take = ((members.len() as f64 * fraction).round() as usize).min(members.len());
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn split_covers_classes(labels: &LabeledNodes, train: &[usize]) -> bool {
    (0..labels.num_classes() as u32).all(|c| {
        let pos = train
            .iter()
            .filter(|&&v| labels.labels(v).contains(&c))
            .count();
        pos > 0 && pos < train.len()
    })
}

fn rows(z: &EmbeddingMatrix, ids: &[usize]) -> Result<FeatureMatrix> {
    let mut data = Vec::with_capacity(ids.len() * z.dim());
    for &v in ids {
        data.extend(z.row_f64(v));
    }
    FeatureMatrix::new(ids.len(), z.dim(), data)
}

/// Trains one-vs-rest classifiers on a random stratified `train_fraction`
/// of the labeled vertices and scores the rest. Single-label data predicts
/// the most probable class; multi-label data predicts as many top classes
/// as each vertex truly has.
pub fn node_classification(
    z: &EmbeddingMatrix,
    labels: &LabeledNodes,
    train_fraction: f64,
    rng: &mut StreamRng,
) -> Result<ClassificationScores> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    if labels.num_vertices() != z.rows() {
        return Err(Error::Consistency(format!(
            "{} labeled vertices but {} embedding rows",
            labels.num_vertices(),
            z.rows()
        )));
    }
    if labels.num_classes() < 2 {
        return Err(Error::Degenerate("need at least two classes".into()));
    }

    let mut split = None;
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let mut split_rng = rng.fork(Purpose::Split, attempt as u64);
        let (train, test) = stratified_split(labels, train_fraction, &mut split_rng);
        if !test.is_empty() && split_covers_classes(labels, &train) {
            split = Some((train, test));
            break;
        }
        log::debug!("split attempt {attempt} misses a class, retrying");
    }
    let (train, test) = split.ok_or_else(|| {
        Error::Degenerate(format!(
            "no split covering every class in {MAX_SPLIT_ATTEMPTS} attempts"
        ))
    })?;

    let x = rows(z, &train)?;
    let cfg = LogRegConfig::default();
    let models: Vec<LogRegModel> = (0..labels.num_classes() as u32)
        .into_par_iter()
        .map(|c| {
            let y: Vec<bool> = train
                .iter()
                .map(|&v| labels.labels(v).contains(&c))
                .collect();
            fit_logreg(&x, &y, &cfg)
        })
        .collect::<Result<_>>()?;

    let predicted: Vec<Vec<u32>> = test
        .par_iter()
        .map(|&v| {
            let row = z.row_f64(v);
            let mut scored: Vec<(f64, u32)> = models
                .iter()
                .enumerate()
                .map(|(c, m)| (m.decision(&row), c as u32))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut top: Vec<u32> = scored
                .iter()
                .take(labels.labels(v).len())
                .map(|s| s.1)
                .collect();
            top.sort_unstable();
            top
        })
        .collect();
    let truth: Vec<Vec<u32>> = test.iter().map(|&v| labels.labels(v).to_vec()).collect();
    Ok(f1_scores(&truth, &predicted, labels.num_classes()))
}

/// Mean scores over `repeats` independent splits.
pub fn node_classification_repeated(
    z: &EmbeddingMatrix,
    labels: &LabeledNodes,
    train_fraction: f64,
    repeats: usize,
    seed: u64,
) -> Result<ClassificationScores> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mut micro = 0.0;
    let mut macro_ = 0.0;
    for r in 0..repeats {
        let mut rng = StreamRng::derive(seed, Purpose::Split, r as u64, 0);
        let s = node_classification(z, labels, train_fraction, &mut rng)?;
        micro += s.f1_micro;
        macro_ += s.f1_macro;
    }
    Ok(ClassificationScores {
        f1_micro: micro / repeats as f64,
        f1_macro: macro_ / repeats as f64,
    })
}
