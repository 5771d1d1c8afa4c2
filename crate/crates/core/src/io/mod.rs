//! Embedding files and label files. Layout output lives in [`layout`].
//!
//! Embeddings are text: a `n d` header, then one `vertex f_1 .. f_d` line
//! per vertex in any order. Values are written with the shortest decimal
//! that parses back to the same `f32`, so a write/read cycle is exact.

mod layout;

pub use layout::{write_layout_svg, write_layout_tsv, LayoutPoint};

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::LabeledNodes;
use crate::trainer::EmbeddingMatrix;

pub fn write_embedding<W: Write>(z: &EmbeddingMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", z.rows(), z.dim())?;
    let mut line = String::new();
    for u in 0..z.rows() {
        line.clear();
        line.push_str(&u.to_string());
        for v in z.row(u) {
            line.push(' ');
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn write_embedding_path(z: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_embedding(z, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn io_at(e: std::io::Error) -> Error {
    Error::io("<input>", e)
}

/// Reads an embedding, placing rows by vertex id.
pub fn read_embedding<R: BufRead>(source: R) -> Result<EmbeddingMatrix> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(Some(1), "missing header"))?
        .map_err(io_at)?;
    let mut tok = header.split_whitespace();
    let parse_dim = |t: Option<&str>, what: &str| -> Result<usize> {
        t.ok_or_else(|| Error::format(Some(1), format!("header lacks {what}")))?
            .parse::<usize>()
            .map_err(|e| Error::format(Some(1), format!("bad {what} in header: {e}")))
    };
    let n = parse_dim(tok.next(), "vertex count")?;
    let d = parse_dim(tok.next(), "dimension")?;
    if tok.next().is_some() {
        return Err(Error::format(Some(1), "header must be `n d`"));
    }
    let mut z = EmbeddingMatrix::zeros(n, d)?;
    let mut seen = vec![false; n];
    let mut count = 0;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(io_at)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let id_tok = tok.next().expect("non-empty line");
        let id: usize = id_tok
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad vertex id `{id_tok}`")))?;
        if id >= n {
            return Err(Error::format(
                Some(lineno),
                format!("vertex {id} not below {n}"),
            ));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::format(
                Some(lineno),
                format!("vertex {id} appears twice"),
            ));
        }
        let row = z.row_mut(id);
        let mut k = 0;
        for t in tok {
            if k == d {
                return Err(Error::format(Some(lineno), format!("more than {d} values")));
            }
            row[k] = t
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad value `{t}`")))?;
            k += 1;
        }
        if k != d {
            return Err(Error::format(
                Some(lineno),
                format!("{k} values, expected {d}"),
            ));
        }
        count += 1;
    }
    if count != n {
        let missing = seen.iter().position(|s| !s).unwrap_or(0);
        return Err(Error::format(
            Some(count + 2),
            format!("{count} rows for {n} vertices, vertex {missing} missing"),
        ));
    }
    Ok(z)
}

pub fn read_embedding_path(path: &Path) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embedding(BufReader::new(file))
}

/// Raw `(vertex, label)` pairs, one per line; `#` starts a comment.
pub fn read_label_pairs<R: BufRead>(source: R) -> Result<Vec<(u64, u64)>> {
    let mut pairs = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(io_at)?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tok = body.split_whitespace();
        let (Some(v), Some(l), None) = (tok.next(), tok.next(), tok.next()) else {
            return Err(Error::parse(lineno, "expected `vertex label`"));
        };
        let v = v
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad vertex id `{v}`")))?;
        let l = l
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad label `{l}`")))?;
        pairs.push((v, l));
    }
    Ok(pairs)
}

/// Label file over dense vertex ids `0..n`; repeated lines give a vertex
/// several labels.
pub fn read_labels<R: BufRead>(source: R, n: usize) -> Result<LabeledNodes> {
    let pairs = read_label_pairs(source)?;
    let mut dense = Vec::with_capacity(pairs.len());
    for (v, l) in pairs {
        if v >= n as u64 {
            return Err(Error::Range(format!("labeled vertex {v} not below {n}")));
        }
        dense.push((v as usize, l));
    }
    LabeledNodes::from_pairs(n, &dense)
}

pub fn read_labels_path(path: &Path, n: usize) -> Result<LabeledNodes> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(BufReader::new(file), n)
}

/// `key=value` pairs joined by spaces.
pub fn metrics_line(metrics: &[(&str, String)]) -> String {
    metrics
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingMatrix {
        EmbeddingMatrix::from_vec(3, 2, vec![0.1, -2.5e-8, f32::MAX, 1.0 / 3.0, -0.0, 7.0]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let z = sample();
        let mut buf = Vec::new();
        write_embedding(&z, &mut buf).unwrap();
        let back = read_embedding(&buf[..]).unwrap();
        let bits =
            |m: &EmbeddingMatrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&z));
        assert!(String::from_utf8(buf).unwrap().starts_with("3 2\n"));
    }

    #[test]
    fn body_order_does_not_matter() {
        let text = "3 2\n2 -0 7\n0 0.1 -0.000000025\n1 340282350000000000000000000000000000000 0.33333334\n";
        assert_eq!(read_embedding(text.as_bytes()).unwrap(), sample());
    }

    #[test]
    fn malformed_files() {
        let cases = [
            ("", Some(1)),
            ("2\n", Some(1)),
            ("2 1\n0 1\n", Some(3)),
            ("2 1\n0 1\n0 2\n", Some(3)),
            ("2 1\n0 1 2\n1 1\n", Some(2)),
            ("2 2\n0 1\n1 1 1\n", Some(2)),
            ("2 1\n5 1\n1 1\n", Some(2)),
        ];
        for (text, line) in cases {
            match read_embedding(text.as_bytes()) {
                Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            read_embedding("1 1\n0 x\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn labels_file() {
        let text = "# vertex label\n0 3\n1 5\n1 3\n\n2 5 # trailing\n";
        let l = read_labels(text.as_bytes(), 4).unwrap();
        assert_eq!(l.num_classes(), 2);
        assert_eq!(l.labels(1), &[0, 1]);
        assert!(l.labels(3).is_empty());
        assert!(matches!(
            read_labels("0\n".as_bytes(), 4),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_labels("9 1\n".as_bytes(), 4),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn metrics_format() {
        let line = metrics_line(&[("best_k", 2.to_string()), ("modularity", 0.5.to_string())]);
        assert_eq!(line, "best_k=2 modularity=0.5");
    }
}
