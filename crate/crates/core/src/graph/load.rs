//! Edge-list and Matrix Market readers and writers.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{BuildStats, CsrGraph};
use crate::error::{Error, Result};

/// How input vertex ids map onto dense indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IdMode {
    /// Identity when the ids already form `0..n`, otherwise remap.
    #[default]
    Auto,
    /// Identity; `n` is the declared vertex count or `max id + 1`.
    Dense,
    /// Always remap, preserving the order of original ids.
    Remap,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub symmetrize: bool,
    pub one_indexed: bool,
    pub ids: IdMode,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            symmetrize: true,
            one_indexed: false,
            ids: IdMode::Auto,
        }
    }
}

/// Dense index `i` corresponds to input id `original[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Remap {
    pub original: Vec<u64>,
}

impl Remap {
    pub fn dense_of(&self) -> HashMap<u64, usize> {
        self.original
            .iter()
            .enumerate()
            .map(|(i, &o)| (o, i))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: CsrGraph,
    pub remap: Option<Remap>,
    pub stats: BuildStats,
}

fn declared_vertex_count(comment: &str) -> Option<usize> {
    // SNAP-style "# Nodes: 34 Edges: 78".
    let lower = comment.to_ascii_lowercase();
    let rest = &lower[lower.find("nodes:")? + "nodes:".len()..];
    rest.split_whitespace().next()?.parse().ok()
}

/// Reads a whitespace-separated edge list: `u v [weight]` per line.
///
/// Lines starting with `#` or `%` are comments. A comment of the form
/// `# Nodes: N` declares the vertex count.
pub fn load_edge_list<R: BufRead>(source: R, opts: LoadOptions) -> Result<LoadedGraph> {
    let mut declared = None;
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') || line.starts_with('%') {
            if declared.is_none() {
                declared = declared_vertex_count(line);
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut id = |what: &str| -> Result<u64> {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::parse(lineno, format!("missing {what} vertex")))?;
            let v: u64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid vertex id {tok:?}")))?;
            if opts.one_indexed {
                v.checked_sub(1).ok_or_else(|| {
                    Error::Range(format!("line {lineno}: id 0 in one-indexed input"))
                })
            } else {
                Ok(v)
            }
        };
        let u = id("source")?;
        let v = id("target")?;
        if let Some(w) = tokens.next() {
            w.parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("invalid weight {w:?}")))?;
        }
        if tokens.next().is_some() {
            return Err(Error::parse(lineno, "too many tokens"));
        }
        if let Some(n) = declared {
            if u >= n as u64 || v >= n as u64 {
                return Err(Error::Range(format!(
                    "line {lineno}: vertex id exceeds declared count {n}"
                )));
            }
        }
        raw.push((u, v));
    }
    // Without a declared vertex count an edgeless file describes nothing.
    if raw.is_empty() && declared.unwrap_or(0) == 0 {
        return Err(Error::format(None, "empty graph: no edges"));
    }
    assemble(raw, declared, opts.ids, opts.symmetrize)
}

pub fn load_edge_list_path(path: &Path, opts: LoadOptions) -> Result<LoadedGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_edge_list(BufReader::new(file), opts)
}

fn assemble(
    raw: Vec<(u64, u64)>,
    declared: Option<usize>,
    mode: IdMode,
    symmetrize: bool,
) -> Result<LoadedGraph> {
    let max_id = raw.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0);
    let remap = match (mode, declared) {
        (IdMode::Dense, _) | (IdMode::Auto, Some(_)) => None,
        (IdMode::Remap, _) | (IdMode::Auto, None) => {
            let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
            ids.sort_unstable();
            ids.dedup();
            if mode == IdMode::Auto && ids.len() as u64 == max_id + 1 {
                None
            } else {
                Some(Remap { original: ids })
            }
        }
    };
    let (n, arcs): (usize, Vec<(usize, usize)>) = match &remap {
        None => {
            let n = declared.unwrap_or(max_id as usize + 1);
            (
                n,
                raw.iter().map(|&(u, v)| (u as usize, v as usize)).collect(),
            )
        }
        Some(r) => {
            let dense = r.dense_of();
            (
                r.original.len(),
                raw.iter().map(|(u, v)| (dense[u], dense[v])).collect(),
            )
        }
    };
    let (graph, stats) = CsrGraph::from_arcs(n, arcs, symmetrize)?;
    if stats.self_loops + stats.duplicates > 0 {
        log::info!(
            "dropped {} self-loops and {} duplicate arcs",
            stats.self_loops,
            stats.duplicates
        );
    }
    Ok(LoadedGraph {
        graph,
        remap,
        stats,
    })
}

/// Reads a Matrix Market coordinate file (pattern, real or integer field;
/// general or symmetric). Indices are one-based; no remapping is done.
pub fn load_matrix_market<R: BufRead>(source: R, symmetrize: bool) -> Result<LoadedGraph> {
    let mut lines = source.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::format(Some(1), e.to_string()))?,
        None => return Err(Error::format(Some(1), "missing %%MatrixMarket header")),
    };
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::format(
            Some(1),
            "missing or malformed %%MatrixMarket header",
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::format(
            Some(1),
            format!("unsupported layout {:?}", tokens[2]),
        ));
    }
    if !matches!(tokens[3].as_str(), "pattern" | "real" | "integer") {
        return Err(Error::format(
            Some(1),
            format!("unsupported field {:?}", tokens[3]),
        ));
    }
    let has_value = tokens[3] != "pattern";
    let symmetric_file = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::format(
                Some(1),
                format!("unsupported symmetry {other:?}"),
            ))
        }
    };

    let mut size: Option<(usize, usize)> = None;
    let mut arcs = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::format(Some(lineno), e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |tok: &str| -> Result<usize> {
            tok.parse()
                .map_err(|_| Error::parse(lineno, format!("invalid integer {tok:?}")))
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::format(
                        Some(lineno),
                        "expected size line `rows cols nnz`",
                    ));
                }
                let (rows, cols, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if rows != cols {
                    return Err(Error::Range(format!(
                        "line {lineno}: adjacency matrix must be square, got {rows}x{cols}"
                    )));
                }
                size = Some((rows, nnz));
                arcs.reserve(nnz);
            }
            Some((n, _)) => {
                let want = if has_value { 3 } else { 2 };
                if fields.len() != want {
                    return Err(Error::parse(lineno, format!("expected {want} tokens")));
                }
                let (i, j) = (parse(fields[0])?, parse(fields[1])?);
                if has_value {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| Error::parse(lineno, "invalid entry value"))?;
                }
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(Error::Range(format!(
                        "line {lineno}: entry ({i}, {j}) outside 1..={n}"
                    )));
                }
                arcs.push((i - 1, j - 1));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| Error::format(None, "missing size line"))?;
    if arcs.len() != nnz {
        return Err(Error::format(
            None,
            format!("size line declares {nnz} entries, found {}", arcs.len()),
        ));
    }
    if n == 0 {
        return Err(Error::format(None, "empty graph: zero rows"));
    }
    let (graph, stats) = CsrGraph::from_arcs(n, arcs, symmetrize || symmetric_file)?;
    Ok(LoadedGraph {
        graph,
        remap: None,
        stats,
    })
}

pub fn load_matrix_market_path(path: &Path, symmetrize: bool) -> Result<LoadedGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_matrix_market(BufReader::new(file), symmetrize)
}

/// Writes every stored arc as `u v`, preceded by a `# Nodes:` declaration so
/// trailing isolated vertices survive a reload.
pub fn write_edge_list<W: Write>(g: &CsrGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# Nodes: {} Arcs: {}", g.num_vertices(), g.num_arcs())?;
    for (u, v) in g.arcs() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn write_matrix_market<W: Write>(g: &CsrGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate pattern general")?;
    let n = g.num_vertices();
    writeln!(out, "{n} {n} {}", g.num_arcs())?;
    for (u, v) in g.arcs() {
        writeln!(out, "{} {}", u + 1, v + 1)?;
    }
    out.flush()
}

/// Two columns per line: `original_id dense_id`.
pub fn write_remap_table<W: Write>(remap: &Remap, mut out: W) -> std::io::Result<()> {
    for (dense, original) in remap.original.iter().enumerate() {
        writeln!(out, "{original} {dense}")?;
    }
    out.flush()
}

pub fn read_remap_table<R: BufRead>(source: R) -> Result<Remap> {
    let mut pairs = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut t = line.split_whitespace();
        let (Some(o), Some(d), None) = (t.next(), t.next(), t.next()) else {
            return Err(Error::parse(lineno, "expected `original_id dense_id`"));
        };
        let o: u64 = o
            .parse()
            .map_err(|_| Error::parse(lineno, "invalid original id"))?;
        let d: usize = d
            .parse()
            .map_err(|_| Error::parse(lineno, "invalid dense id"))?;
        pairs.push((d, o));
    }
    pairs.sort_unstable();
    if pairs.iter().enumerate().any(|(i, &(d, _))| d != i) {
        return Err(Error::format(None, "dense ids in remap table are not 0..n"));
    }
    Ok(Remap {
        original: pairs.into_iter().map(|(_, o)| o).collect(),
    })
}
