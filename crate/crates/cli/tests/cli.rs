mod common;

use std::fs;
use std::path::Path;

use common::{karate_labels_path, karate_path, run, scratch};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_line(o: &std::process::Output) -> String {
    let e = String::from_utf8_lossy(&o.stderr).into_owned();
    let diag: Vec<&str> = e
        .lines()
        .filter(|l| l.starts_with("fdembed: error:"))
        .collect();
    assert_eq!(diag.len(), 1, "expected one diagnostic line: {e:?}");
    diag[0].to_string()
}

fn quick_embed(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let karate = karate_path();
    let mut args = vec![
        "embed",
        "--input",
        s(&karate),
        "--output",
        s(&out),
        "--epochs",
        "40",
        "--workers",
        "2",
    ];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn embed_writes_header_and_summary() {
    let dir = scratch("cli-embed");
    let out = dir.join("k.emb");
    let karate = karate_path();
    let o = run(&[
        "embed",
        "--input",
        s(&karate),
        "--output",
        s(&out),
        "--model",
        "tdist",
        "--dim",
        "2",
        "--epochs",
        "30",
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("34 2"));
    assert_eq!(text.lines().count(), 35);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.starts_with("n=34 m=78 epochs=30 wall_ms="),
        "{stdout}"
    );
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("memory_estimate_bytes=1656"));
}

#[test]
fn walk_mode_and_progress_lines() {
    let dir = scratch("cli-walk");
    let out = dir.join("w.emb");
    let karate = karate_path();
    let o = run(&[
        "embed",
        "--input",
        s(&karate),
        "--output",
        s(&out),
        "--walk-length",
        "5",
        "--epochs",
        "3",
        "--dim",
        "8",
        "--progress",
        "--monitor-loss",
    ]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    let epochs: Vec<&str> = err.lines().filter(|l| l.starts_with("epoch ")).collect();
    assert_eq!(epochs.len(), 3);
    let tok: Vec<&str> = epochs[0].split(' ').collect();
    assert_eq!((tok[0], tok[2], tok[4]), ("epoch", "loss", "elapsed_ms"));
    assert!(tok[3].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn seed_from_environment() {
    let dir = scratch("cli-env");
    let karate = karate_path();
    let mut outputs = Vec::new();
    for (name, seed) in [("a", "5"), ("b", "5"), ("c", "6")] {
        let out = dir.join(name);
        let o = common::bin()
            .args([
                "embed",
                "--input",
                s(&karate),
                "--output",
                s(&out),
                "--epochs",
                "5",
                "--dim",
                "4",
            ])
            .env("FDEMBED_SEED", seed)
            .env("FDEMBED_WORKERS", "3")
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push(fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn usage_errors_exit_one() {
    let karate = karate_path();
    for args in [
        vec![
            "embed",
            "--input",
            s(&karate),
            "--output",
            "x",
            "--epochs",
            "0",
        ],
        vec![
            "embed",
            "--input",
            s(&karate),
            "--output",
            "x",
            "--model",
            "nope",
        ],
        vec![
            "embed",
            "--input",
            s(&karate),
            "--output",
            "x",
            "--lr",
            "-1",
        ],
        vec!["embed", "--input", s(&karate)],
        vec![
            "sweep",
            "--param",
            "dim",
            "--values",
            "",
            "--input",
            s(&karate),
            "--task",
            "cluster",
        ],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        stderr_line(&o);
    }
}

#[test]
fn io_and_format_errors() {
    let dir = scratch("cli-errors");
    let o = run(&[
        "embed",
        "--input",
        s(&dir.join("missing.txt")),
        "--output",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).contains("missing.txt"));

    let bad = dir.join("bad.edgelist");
    fs::write(&bad, "0 1\n1 two\n").unwrap();
    let o = run(&["embed", "--input", s(&bad), "--output", s(&dir.join("o"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).contains("line 2"));

    let karate = karate_path();
    let o = run(&[
        "embed",
        "--input",
        s(&karate),
        "--output",
        s(&dir.join("no/such/dir/out.emb")),
        "--epochs",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    stderr_line(&o);
}

#[test]
fn eval_clusters_two_triangles() {
    let dir = scratch("cli-cluster");
    let graph = dir.join("tri.edgelist");
    fs::write(&graph, "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n").unwrap();
    let emb = dir.join("tri.emb");
    fs::write(
        &emb,
        "6 2\n0 0 0\n1 0.1 0\n2 0 0.1\n3 5 5\n4 5.1 5\n5 5 5.1\n",
    )
    .unwrap();
    let o = run(&[
        "eval",
        "--embedding",
        s(&emb),
        "--graph",
        s(&graph),
        "--task",
        "cluster",
    ]);
    assert!(o.status.success());
    assert_eq!(
        String::from_utf8(o.stdout).unwrap().trim(),
        "best_k=2 modularity=0.5"
    );
}

#[test]
fn eval_nodeclass_and_linkpred() {
    let dir = scratch("cli-nodeclass");
    let emb = quick_embed(&dir, "k.emb", &["--dim", "16"]);
    let karate = karate_path();
    let labels = karate_labels_path();
    let o = run(&[
        "eval",
        "--embedding",
        s(&emb),
        "--graph",
        s(&karate),
        "--task",
        "nodeclass",
        "--labels",
        s(&labels),
        "--train-fraction",
        "0.25",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = String::from_utf8(o.stdout).unwrap();
    let keys: Vec<&str> = line
        .split_whitespace()
        .map(|kv| kv.split('=').next().unwrap())
        .collect();
    assert_eq!(keys, ["f1_micro", "f1_macro"]);

    let o = run(&[
        "eval",
        "--embedding",
        s(&emb),
        "--graph",
        s(&karate),
        "--task",
        "linkpred",
    ]);
    assert!(o.status.success());
    let acc: f64 = String::from_utf8(o.stdout)
        .unwrap()
        .trim()
        .strip_prefix("accuracy=")
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn eval_rejects_mismatched_embedding() {
    let dir = scratch("cli-mismatch");
    let emb = dir.join("small.emb");
    fs::write(&emb, "2 1\n0 1\n1 2\n").unwrap();
    let karate = karate_path();
    let o = run(&[
        "eval",
        "--embedding",
        s(&emb),
        "--graph",
        s(&karate),
        "--task",
        "cluster",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).contains("inconsistent"));
}

#[test]
fn layout_outputs() {
    let dir = scratch("cli-layout");
    let emb2 = quick_embed(&dir, "k2.emb", &["--dim", "2"]);
    let labels = karate_labels_path();
    let svg = dir.join("k.svg");
    let o = run(&[
        "layout",
        "--embedding",
        s(&emb2),
        "--labels",
        s(&labels),
        "--out-svg",
        s(&svg),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<g id=\"label-").count(), 2);
    assert_eq!(text.matches("<circle").count(), 34);

    let tsv = dir.join("k.tsv");
    let svg2 = dir.join("none.svg");
    let o = run(&["layout", "--embedding", s(&emb2), "--out-tsv", s(&tsv)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&tsv).unwrap().lines().count(), 35);
    assert!(!svg2.exists());

    let emb8 = quick_embed(&dir, "k8.emb", &["--dim", "8"]);
    let o = run(&["layout", "--embedding", s(&emb8), "--out-svg", s(&svg2)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_line(&o).contains("--dim 2"));
    assert!(!svg2.exists());
}

#[test]
fn sweep_rows_and_loss_curves() {
    let dir = scratch("cli-sweep");
    let karate = karate_path();
    let o = run(&[
        "sweep",
        "--param",
        "dim",
        "--values",
        "2,8,32,128,256",
        "--input",
        s(&karate),
        "--epochs",
        "5",
        "--task",
        "cluster",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("dim=2 best_k="));

    let curves = dir.join("curves");
    let o = run(&[
        "sweep",
        "--param",
        "lr",
        "--values",
        "0.9,0.5,0.2,0.02",
        "--input",
        s(&karate),
        "--epochs",
        "20",
        "--monitor-loss",
        "--task",
        "cluster",
        "--loss-dir",
        s(&curves),
    ]);
    assert!(o.status.success());
    let mut files: Vec<String> = fs::read_dir(&curves)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        [
            "loss_lr_0.02.tsv",
            "loss_lr_0.2.tsv",
            "loss_lr_0.5.tsv",
            "loss_lr_0.9.tsv"
        ]
    );
    let curve = fs::read_to_string(curves.join("loss_lr_0.02.tsv")).unwrap();
    assert_eq!(curve.lines().count(), 21);
}

#[test]
fn embed_is_byte_identical_across_runs() {
    let dir = scratch("cli-determinism");
    let a = fs::read(quick_embed(&dir, "a.emb", &["--seed", "3"])).unwrap();
    let b = fs::read(quick_embed(&dir, "b.emb", &["--seed", "3"])).unwrap();
    assert_eq!(a, b);
}

#[test]
fn remapped_ids_write_a_table() {
    let dir = scratch("cli-remap");
    let graph = dir.join("sparse.edgelist");
    fs::write(&graph, "10 30\n30 20\n20 10\n").unwrap();
    let out = dir.join("s.emb");
    let table = dir.join("s.ids");
    let o = run(&[
        "embed",
        "--input",
        s(&graph),
        "--output",
        s(&out),
        "--epochs",
        "2",
        "--dim",
        "2",
        "--remap-out",
        s(&table),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&table).unwrap(), "10 0\n20 1\n30 2\n");
    assert!(fs::read_to_string(&out).unwrap().starts_with("3 2\n"));
}
