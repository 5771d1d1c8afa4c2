use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use fdembed_core::eval::{
    best_modularity_sweep, build_link_dataset, link_prediction_accuracy,
    node_classification_repeated, LabeledNodes, LogRegConfig,
};
use fdembed_core::graph::{
    load_edge_list_path, load_matrix_market_path, write_remap_table, IdMode, LoadOptions,
    LoadedGraph,
};
use fdembed_core::io::{
    metrics_line, read_embedding_path, read_label_pairs, write_embedding_path, write_layout_svg,
    write_layout_tsv,
};
use fdembed_core::sampling::Purpose;
use fdembed_core::trainer::{memory_estimate_bytes, LrSchedule, Trainer};
use fdembed_core::{
    ContextMode, EmbeddingMatrix, Error, ForceKind, ForceModel, Result, StreamRng, TrainConfig,
    TrainReport,
};

use crate::args::*;

pub fn load_graph(args: &GraphArgs) -> Result<LoadedGraph> {
    let format =
        args.format
            .unwrap_or_else(|| match args.input.extension().and_then(|e| e.to_str()) {
                Some("mtx") => GraphFormat::Mtx,
                _ => GraphFormat::Edgelist,
            });
    let loaded = match format {
        GraphFormat::Mtx => load_matrix_market_path(&args.input, args.symmetrize)?,
        GraphFormat::Edgelist => {
            let ids = match args.ids {
                Ids::Auto => IdMode::Auto,
                Ids::Dense => IdMode::Dense,
                Ids::Remap => IdMode::Remap,
            };
            let opts = LoadOptions {
                symmetrize: args.symmetrize,
                one_indexed: args.one_indexed,
                ids,
            };
            load_edge_list_path(&args.input, opts)?
        }
    };
    let s = loaded.stats;
    if s.self_loops + s.duplicates > 0 {
        log::info!(
            "dropped {} self-loops and {} duplicate arcs",
            s.self_loops,
            s.duplicates
        );
    }
    Ok(loaded)
}

fn kind_of(m: Model) -> ForceKind {
    match m {
        Model::Sigmoid => ForceKind::Sigmoid,
        Model::Tdist => ForceKind::TDist,
        Model::Fr => ForceKind::FruchtermanReingold,
        Model::Fa => ForceKind::ForceAtlas,
        Model::Linlog => ForceKind::LinLog,
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn train_config(t: &TrainArgs) -> TrainConfig {
    TrainConfig {
        dim: t.dim,
        batch: t.batch,
        negatives: t.nsamples,
        lr: t.lr,
        epochs: t.epochs,
        model: ForceModel::new(kind_of(t.model)),
        mode: ContextMode::from_walk_length(t.walk_length),
        seed: t.seed,
        workers: t.workers.unwrap_or_else(default_workers),
        lr_decay: match t.lr_decay {
            LrDecay::Constant => LrSchedule::Constant,
            LrDecay::Linear => LrSchedule::LinearToZero,
        },
        balanced: !t.static_schedule,
        monitor_loss: t.monitor_loss,
    }
}

fn run_training(loaded: &LoadedGraph, cfg: TrainConfig, progress: bool) -> Result<TrainReport> {
    let g = &loaded.graph;
    let bytes = memory_estimate_bytes(g.num_vertices(), g.num_arcs(), cfg.dim);
    eprintln!("memory_estimate_bytes={bytes}");
    Trainer::new(g, cfg)?.run_with(|stats| {
        if progress {
            eprintln!("{}", stats.progress_line());
        }
        std::ops::ControlFlow::Continue(())
    })
}

fn write_loss_curve(report: &TrainReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = String::from("epoch\tloss\n");
    for e in &report.epochs {
        if let Some(l) = e.loss {
            body.push_str(&format!("{}\t{}\n", e.epoch, l));
        }
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn embed(args: &EmbedArgs) -> Result<()> {
    if args.loss_out.is_some() && !args.train.monitor_loss {
        return Err(Error::InvalidArgument(
            "--loss-out needs --monitor-loss".into(),
        ));
    }
    let cfg = train_config(&args.train);
    cfg.validate()?;
    let loaded = load_graph(&args.graph)?;
    let g = &loaded.graph;
    let started = Instant::now();
    let epochs = cfg.epochs;
    let report = run_training(&loaded, cfg, args.train.progress)?;
    write_embedding_path(&report.embedding, &args.output)?;
    if let Some(path) = &args.loss_out {
        write_loss_curve(&report, path)?;
    }
    if let (Some(path), Some(remap)) = (&args.remap_out, &loaded.remap) {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_remap_table(remap, BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    }
    println!(
        "n={} m={} epochs={} wall_ms={}",
        g.num_vertices(),
        g.num_edges(),
        epochs,
        started.elapsed().as_millis()
    );
    Ok(())
}

fn load_labels(path: &Path, loaded: &LoadedGraph) -> Result<LabeledNodes> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw = read_label_pairs(std::io::BufReader::new(file))?;
    let n = loaded.graph.num_vertices();
    let dense_of = loaded.remap.as_ref().map(|r| r.dense_of());
    let mut pairs = Vec::with_capacity(raw.len());
    for (v, l) in raw {
        let dense = match &dense_of {
            Some(map) => *map
                .get(&v)
                .ok_or_else(|| Error::Range(format!("labeled vertex {v} is not in the graph")))?,
            None => {
                if v >= n as u64 {
                    return Err(Error::Range(format!("labeled vertex {v} not below {n}")));
                }
                v as usize
            }
        };
        pairs.push((dense, l));
    }
    LabeledNodes::from_pairs(n, &pairs)
}

fn evaluate(
    z: &EmbeddingMatrix,
    loaded: &LoadedGraph,
    task: &TaskArgs,
    seed: u64,
) -> Result<String> {
    let g = &loaded.graph;
    if z.rows() != g.num_vertices() {
        return Err(Error::Consistency(format!(
            "embedding has {} rows but the graph has {} vertices",
            z.rows(),
            g.num_vertices()
        )));
    }
    Ok(match task.task {
        Task::Linkpred => {
            let ds =
                build_link_dataset(g, &mut StreamRng::derive(seed, Purpose::LinkDataset, 0, 0))?;
            let acc = link_prediction_accuracy(z, &ds, &LogRegConfig::default())?;
            metrics_line(&[("accuracy", acc.to_string())])
        }
        Task::Nodeclass => {
            let path = task
                .labels
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--task nodeclass needs --labels".into()))?;
            let labels = load_labels(path, loaded)?;
            let s =
                node_classification_repeated(z, &labels, task.train_fraction, task.repeats, seed)?;
            metrics_line(&[
                ("f1_micro", s.f1_micro.to_string()),
                ("f1_macro", s.f1_macro.to_string()),
            ])
        }
        Task::Cluster => {
            let s =
                best_modularity_sweep(g, z, &mut StreamRng::derive(seed, Purpose::KMeans, 0, 0))?;
            metrics_line(&[
                ("best_k", s.k.to_string()),
                ("modularity", s.modularity.to_string()),
            ])
        }
    })
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or_else(default_workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(f)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    if args.workers == Some(0) {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    let loaded = load_graph(&args.graph)?;
    let z = read_embedding_path(&args.embedding)?;
    let line = with_pool(args.workers, || {
        evaluate(&z, &loaded, &args.task, args.seed)
    })?;
    println!("{line}");
    Ok(())
}

pub fn layout(args: &LayoutArgs) -> Result<()> {
    if args.out_svg.is_none() && args.out_tsv.is_none() {
        return Err(Error::InvalidArgument(
            "give --out-svg and/or --out-tsv".into(),
        ));
    }
    let z = read_embedding_path(&args.embedding)?;
    if z.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "layout needs a 2-dimensional embedding, got d = {}; train with --dim 2",
            z.dim()
        )));
    }
    let labels: Option<Vec<Option<u32>>> = match &args.labels {
        None => None,
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let raw = read_label_pairs(std::io::BufReader::new(file))?;
            let mut per_vertex = vec![None; z.rows()];
            for (v, l) in raw {
                let slot = per_vertex.get_mut(v as usize).ok_or_else(|| {
                    Error::Range(format!("labeled vertex {v} not below {}", z.rows()))
                })?;
                let l =
                    u32::try_from(l).map_err(|_| Error::Range(format!("label {l} too large")))?;
                *slot = Some(slot.map_or(l, |old: u32| old.min(l)));
            }
            Some(per_vertex)
        }
    };
    let create = |p: &Path| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    if let Some(p) = &args.out_tsv {
        write_layout_tsv(&z, labels.as_deref(), create(p)?)?;
    }
    if let Some(p) = &args.out_svg {
        write_layout_svg(&z, labels.as_deref(), create(p)?)?;
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    if args.values.is_empty() {
        return Err(Error::InvalidArgument("--values is empty".into()));
    }
    let base = train_config(&args.train);
    let mut configs = Vec::with_capacity(args.values.len());
    for &v in &args.values {
        let mut cfg = base.clone();
        match args.param {
            SweepParam::Lr => cfg.lr = v,
            SweepParam::Nsamples | SweepParam::Dim => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "{v} is not a positive integer"
                    )));
                }
                if args.param == SweepParam::Dim {
                    cfg.dim = v as usize;
                } else {
                    cfg.negatives = v as usize;
                }
            }
        }
        cfg.validate()?;
        configs.push(cfg);
    }
    let write_curves = args.param == SweepParam::Lr && base.monitor_loss;
    if write_curves {
        fs::create_dir_all(&args.loss_dir).map_err(|e| Error::io(&args.loss_dir, e))?;
    }
    let loaded = load_graph(&args.graph)?;
    let name = match args.param {
        SweepParam::Lr => "lr",
        SweepParam::Nsamples => "nsamples",
        SweepParam::Dim => "dim",
    };
    for (cfg, v) in configs.into_iter().zip(&args.values) {
        let workers = cfg.workers;
        let report = run_training(&loaded, cfg, args.train.progress)?;
        if write_curves {
            write_loss_curve(&report, &args.loss_dir.join(format!("loss_lr_{v}.tsv")))?;
        }
        let metrics = with_pool(Some(workers), || {
            evaluate(&report.embedding, &loaded, &args.task, base.seed)
        })?;
        println!("{name}={v} {metrics}");
    }
    Ok(())
}
