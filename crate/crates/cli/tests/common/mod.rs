//! Helpers shared by the cli integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdembed_core::eval::LabeledNodes;
use fdembed_core::CsrGraph;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdembed"))
}

pub fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("FDEMBED_WORKERS")
        .env_remove("FDEMBED_SEED")
        .output()
        .expect("spawn fdembed")
}

pub fn karate_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/karate.edgelist")
}

pub fn karate_labels_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/karate.labels")
}

/// Fresh scratch directory under the target dir.
pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Reads a LINQS citation dataset (`<name>.cites`, `<name>.content`): the
/// citation graph over papers listed in the content file, symmetrized, and
/// the class in the last content column.
pub fn load_linqs(dir: &Path, name: &str) -> std::io::Result<(CsrGraph, LabeledNodes)> {
    let content = fs::read_to_string(dir.join(format!("{name}.content")))?;
    let mut index = HashMap::new();
    let mut classes: HashMap<String, u64> = HashMap::new();
    let mut labels = Vec::new();
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let id = tok[0].to_string();
        let next = classes.len() as u64;
        let class = *classes
            .entry(tok[tok.len() - 1].to_string())
            .or_insert(next);
        let v = index.len();
        index.insert(id, v);
        labels.push((v, class));
    }
    let cites = fs::read_to_string(dir.join(format!("{name}.cites")))?;
    let mut arcs = Vec::new();
    for line in cites.lines() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 2 {
            continue;
        }
        if let (Some(&a), Some(&b)) = (index.get(tok[0]), index.get(tok[1])) {
            arcs.push((a, b));
        }
    }
    let to_io = |e: fdembed_core::Error| std::io::Error::other(e.to_string());
    let g = CsrGraph::from_arcs(index.len(), arcs, true)
        .map_err(to_io)?
        .0;
    let l = LabeledNodes::from_pairs(index.len(), &labels).map_err(to_io)?;
    Ok((g, l))
}
