//! 2D layout export as a coordinate table or an SVG scatter plot.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::trainer::EmbeddingMatrix;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];
const CANVAS: f64 = 800.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutPoint {
    pub x: f32,
    pub y: f32,
    pub label: Option<u32>,
}

fn points(z: &EmbeddingMatrix, labels: Option<&[Option<u32>]>) -> Result<Vec<LayoutPoint>> {
    if z.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "layout needs a 2-dimensional embedding, got d = {}; train with --dim 2",
            z.dim()
        )));
    }
    if let Some(l) = labels {
        if l.len() != z.rows() {
            return Err(Error::Consistency(format!(
                "{} labels for {} vertices",
                l.len(),
                z.rows()
            )));
        }
    }
    Ok((0..z.rows())
        .map(|u| LayoutPoint {
            x: z.row(u)[0],
            y: z.row(u)[1],
            label: labels.and_then(|l| l[u]),
        })
        .collect())
}

/// `vertex x y [label]`, tab separated, with a header row.
pub fn write_layout_tsv<W: Write>(
    z: &EmbeddingMatrix,
    labels: Option<&[Option<u32>]>,
    mut out: W,
) -> Result<()> {
    let pts = points(z, labels)?;
    let mut s = String::from("vertex\tx\ty\tlabel\n");
    for (u, p) in pts.iter().enumerate() {
        let label = p.label.map(|l| l.to_string()).unwrap_or_default();
        writeln!(s, "{u}\t{}\t{}\t{label}", p.x, p.y).expect("write to string");
    }
    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<layout>", e))
}

fn colour(label: Option<u32>) -> String {
    match label {
        None => "#444444".to_string(),
        Some(l) if (l as usize) < PALETTE.len() => PALETTE[l as usize].to_string(),
        Some(l) => format!("hsl({},65%,45%)", (l as u64 * 137) % 360),
    }
}

/// Scatter plot colored by label, one `<g>` group per label.
pub fn write_layout_svg<W: Write>(
    z: &EmbeddingMatrix,
    labels: Option<&[Option<u32>]>,
    mut out: W,
) -> Result<()> {
    let pts = points(z, labels)?;
    let finite = pts.iter().filter(|p| p.x.is_finite() && p.y.is_finite());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in finite {
        xmin = xmin.min(p.x as f64);
        xmax = xmax.max(p.x as f64);
        ymin = ymin.min(p.y as f64);
        ymax = ymax.max(p.y as f64);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-12);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let radius = if pts.len() > 2000 { 1.5 } else { 3.0 };

    let mut groups: std::collections::BTreeMap<Option<u32>, Vec<(f64, f64)>> = Default::default();
    for p in &pts {
        let cx = MARGIN + (p.x as f64 - xmin) * scale;
        // SVG y grows downwards.
        let cy = CANVAS - MARGIN - (p.y as f64 - ymin) * scale;
        groups.entry(p.label).or_default().push((cx, cy));
    }

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (label, coords) in &groups {
        let id = label.map_or_else(|| "unlabeled".to_string(), |l| format!("label-{l}"));
        writeln!(s, r#"<g id="{id}" fill="{}">"#, colour(*label)).unwrap();
        for (cx, cy) in coords {
            writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{radius}"/>"#).unwrap();
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<layout>", e))
}
