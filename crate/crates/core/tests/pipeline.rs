use fdembed_core::eval::{
    best_modularity_sweep, build_link_dataset, link_prediction_accuracy, LogRegConfig,
};
use fdembed_core::generators::{karate_club, planted_partition};
use fdembed_core::io::{read_embedding, write_embedding};
use fdembed_core::trainer::{train, Trainer};
use fdembed_core::{ContextMode, ForceKind, StreamRng, TrainConfig};

fn cfg(kind: ForceKind, dim: usize, epochs: usize) -> TrainConfig {
    TrainConfig {
        dim,
        epochs,
        workers: 2,
        seed: 11,
        ..TrainConfig::with_model(kind)
    }
}

#[test]
fn karate_embedding_separates_communities() {
    let g = karate_club();
    let z = train(&g, &cfg(ForceKind::TDist, 16, 300)).unwrap();
    assert_eq!((z.rows(), z.dim()), (34, 16));
    let best = best_modularity_sweep(&g, &z, &mut StreamRng::new(1, 0)).unwrap();
    // Louvain reaches about 0.42 on this graph.
    assert!(best.modularity > 0.3, "modularity {}", best.modularity);
}

#[test]
fn every_model_trains_to_finite_values() {
    let g = karate_club();
    for kind in ForceKind::ALL {
        let z = train(&g, &cfg(kind, 8, 50)).unwrap();
        assert!(z.first_non_finite_row().is_none(), "{kind:?}");
    }
}

#[test]
fn walk_context_trains() {
    let g = karate_club();
    let c = TrainConfig {
        mode: ContextMode::Walk(5),
        ..cfg(ForceKind::TDist, 8, 20)
    };
    let report = Trainer::new(&g, c).unwrap().run().unwrap();
    assert_eq!(report.epochs.len(), 20);
    assert!(!report.interrupted);
}

#[test]
fn sigmoid_link_prediction_beats_chance() {
    let mut rng = StreamRng::new(3, 0);
    let g = planted_partition(&[60, 60], 0.15, 0.01, &mut rng).unwrap();
    let z = train(&g, &cfg(ForceKind::Sigmoid, 32, 150)).unwrap();
    let ds = build_link_dataset(&g, &mut rng).unwrap();
    let acc = link_prediction_accuracy(&z, &ds, &LogRegConfig::default()).unwrap();
    assert!(acc > 0.6, "accuracy {acc}");
}

#[test]
fn trained_embedding_round_trips_through_text() {
    let g = karate_club();
    let z = train(&g, &cfg(ForceKind::ForceAtlas, 5, 10)).unwrap();
    let mut buf = Vec::new();
    write_embedding(&z, &mut buf).unwrap();
    let back = read_embedding(buf.as_slice()).unwrap();
    assert_eq!(back, z);
}
