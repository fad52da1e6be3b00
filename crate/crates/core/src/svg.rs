//! SVG overlay of a component graph, one cubic path per node.

use std::fmt::Write;

use crate::curvefit::Point;
use crate::error::{Error, Result};
use crate::graph::ComponentGraph;

/// Side length used when a graph carries no source raster size.
pub const UNIT_VIEW: f64 = 1000.0;
const UNLABELED: [u8; 3] = [128, 128, 128];

/// Renders every node as a cubic Bezier path colored by `labels`, by the graph's own
/// labels when `labels` is `None`, or gray when neither exists.
///
/// Graphs built from a raster are drawn back in source pixel coordinates.
pub fn graph_to_svg(g: &ComponentGraph, labels: Option<&[usize]>, stroke_width: f64) -> Result<String> {
    let labels = labels.or(g.labels.as_deref());
    let palette = g.scheme.palette();
    if let Some(l) = labels {
        if l.len() != g.node_count() {
            return Err(Error::Shape(format!("{} labels for {} nodes", l.len(), g.node_count())));
        }
        if let Some(&bad) = l.iter().find(|&&c| c >= palette.len()) {
            return Err(Error::Shape(format!("label {bad} out of range for {:?}", g.scheme)));
        }
    }
    let (w, h, map): (f64, f64, Box<dyn Fn(Point) -> Point>) =
        match (g.provenance.source_size, g.provenance.normalization) {
            (Some([w, h]), Some(norm)) => (w as f64, h as f64, Box::new(move |p| norm.invert(p))),
            _ => (UNIT_VIEW, UNIT_VIEW, Box::new(|p: Point| [p[0] * UNIT_VIEW, p[1] * UNIT_VIEW])),
        };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<g fill="none" stroke-width="{stroke_width}" stroke-linecap="round">"#
    );
    for (i, node) in g.nodes.iter().enumerate() {
        let c = labels.map_or(UNLABELED, |l| palette[l[i]]);
        let p: Vec<Point> = node.bezier.control.iter().map(|&q| map(q)).collect();
        let _ = writeln!(
            out,
            r##"<path id="n{i}" stroke="#{:02x}{:02x}{:02x}" d="M{:.3} {:.3} C{:.3} {:.3} {:.3} {:.3} {:.3} {:.3}"/>"##,
            c[0], c[1], c[2], p[0][0], p[0][1], p[1][0], p[1][1], p[2][0], p[2][1], p[3][0], p[3][1]
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn save_svg(svg: &str, path: &std::path::Path) -> Result<()> {
    crate::io::write_atomic(path, svg.as_bytes())
}
