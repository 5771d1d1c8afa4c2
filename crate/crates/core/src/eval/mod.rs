//! Downstream quality measures for embeddings.

mod classify;
mod cluster;
mod link;
mod logreg;

pub use classify::{
    f1_scores, node_classification, node_classification_repeated, ClassificationScores,
    LabeledNodes,
};
pub use cluster::{
    best_modularity_sweep, kmeans, kmeans_points, modularity, Clustering, KMeansConfig, SweepResult,
};
pub use link::{
    build_link_dataset, link_prediction_accuracy, LinkDataset, LinkPair, MAX_LINK_POSITIVES,
};
pub use logreg::{fit_logreg, FeatureMatrix, LogRegConfig, LogRegModel};

use crate::error::{Error, Result};

/// Coordinate-wise product of two vectors.
pub fn hadamard(a: &[f32], b: &[f32]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Consistency(format!(
            "hadamard of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| x as f64 * y as f64)
        .collect())
}
