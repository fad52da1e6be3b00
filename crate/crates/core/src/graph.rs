//! Component graphs: normalization, nodal features, co-terminal edges, ground-truth
//! labels and the on-disk graph format.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvefit::{curvature_at, sample_equal_arclength, CubicBezier, Point};
use crate::error::{Error, Result};
use crate::raster::ColorRaster;
use crate::trace::VertexSet;

pub const GRAPH_FILE_VERSION: u32 = 1;
/// Default number of samples per component.
pub const DEFAULT_SAMPLES: usize = 4;

/// Length of a feature row for `n` samples per component.
pub const fn feature_dim(n: usize) -> usize {
    5 * n - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassScheme {
    /// Classes `[Text, NonText]`.
    TextNontext,
    /// Classes `[Contour, Text, Dimension]`.
    TextContourDimension,
}

/// Semantic class of a ground-truth primitive, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentClass {
    Contour,
    Text,
    Dimension,
}

impl ComponentClass {
    pub const ALL: [ComponentClass; 3] = [
        ComponentClass::Contour,
        ComponentClass::Text,
        ComponentClass::Dimension,
    ];

    pub fn color(self) -> [u8; 3] {
        match self {
            ComponentClass::Contour => [0, 0, 0],
            ComponentClass::Text => [0, 255, 0],
            ComponentClass::Dimension => [255, 0, 0],
        }
    }

    pub fn index3(self) -> usize {
        self as usize
    }
}

impl ClassScheme {
    pub fn num_classes(self) -> usize {
        match self {
            ClassScheme::TextNontext => 2,
            ClassScheme::TextContourDimension => 3,
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            ClassScheme::TextNontext => &["Text", "NonText"],
            ClassScheme::TextContourDimension => &["Contour", "Text", "Dimension"],
        }
    }

    pub fn palette(self) -> &'static [[u8; 3]] {
        match self {
            ClassScheme::TextNontext => &[[0, 255, 0], [0, 0, 0]],
            ClassScheme::TextContourDimension => &[[0, 0, 0], [0, 255, 0], [255, 0, 0]],
        }
    }

    /// Class index of a ground-truth class under this scheme.
    pub fn index_of(self, class: ComponentClass) -> usize {
        match self {
            ClassScheme::TextNontext => usize::from(class != ComponentClass::Text),
            ClassScheme::TextContourDimension => class.index3(),
        }
    }
}

impl std::str::FromStr for ClassScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text_nontext" | "2" | "two" => Ok(ClassScheme::TextNontext),
            "text_contour_dimension" | "3" | "three" => Ok(ClassScheme::TextContourDimension),
            other => Err(Error::Config(format!("unknown class scheme {other:?}"))),
        }
    }
}

/// Similarity transform `q = p * scale + offset` from raster to unit-square coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub offset: Point,
}

impl Normalization {
    pub fn apply(&self, p: Point) -> Point {
        [p[0] * self.scale + self.offset[0], p[1] * self.scale + self.offset[1]]
    }

    pub fn invert(&self, q: Point) -> Point {
        [
            (q[0] - self.offset[0]) / self.scale,
            (q[1] - self.offset[1]) / self.scale,
        ]
    }
}

/// Scales and translates all curves together so their control points fit the unit
/// square with the bounding-box minimum at the origin.
pub fn normalize_components(curves: &[CubicBezier]) -> Result<(Vec<CubicBezier>, Normalization)> {
    if curves.is_empty() {
        return Err(Error::DegenerateDrawing);
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in curves.iter().flat_map(|c| c.control.iter()) {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::DegenerateDrawing);
    }
    let scale = 1.0 / extent;
    let norm = Normalization {
        scale,
        offset: [-lo[0] * scale, -lo[1] * scale],
    };
    // subtract first, then scale: keeps the box minimum exactly at the origin
    let out = curves
        .iter()
        .map(|c| {
            let mut d = c.clone();
            for p in &mut d.control {
                p[0] = (p[0] - lo[0]) * scale;
                p[1] = (p[1] - lo[1]) * scale;
            }
            d
        })
        .collect();
    Ok((out, norm))
}

/// Nodal feature row for one normalized component.
///
/// Layout: `2n` sample coordinates, `n-1` consecutive sample distances, total arc
/// length, first-to-last over total, `n-2` cosines between consecutive sample
/// segments, `n` curvatures.
pub fn featurize(c: &CubicBezier, n: usize) -> Vec<f64> {
    assert!(n >= 4, "featurize needs n >= 4");
    let s = sample_equal_arclength(c, n);
    let mut f = Vec::with_capacity(feature_dim(n));
    for p in &s.points {
        f.extend_from_slice(p);
    }
    let seg: Vec<Point> = s
        .points
        .windows(2)
        .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
        .collect();
    let seg_len: Vec<f64> = seg.iter().map(|v| v[0].hypot(v[1])).collect();
    f.extend_from_slice(&seg_len);
    let total = c.arc_length();
    f.push(total);
    let degenerate = total < 1e-12;
    let (first, last) = (s.points[0], s.points[n - 1]);
    let ratio = if degenerate {
        1.0
    } else {
        ((last[0] - first[0]).hypot(last[1] - first[1]) / total).min(1.0)
    };
    f.push(ratio);
    for i in 0..n - 2 {
        let (a, b) = (seg[i], seg[i + 1]);
        let den = seg_len[i] * seg_len[i + 1];
        let cos = if degenerate || den < 1e-30 {
            1.0
        } else {
            ((a[0] * b[0] + a[1] * b[1]) / den).clamp(-1.0, 1.0)
        };
        f.push(cos);
    }
    for &t in &s.params {
        f.push(curvature_at(c, t));
    }
    debug_assert_eq!(f.len(), feature_dim(n));
    f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    #[serde(flatten)]
    pub bezier: CubicBezier,
    pub features: Vec<f64>,
}

/// Where a graph came from and how it was built.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Width and height of the source raster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_size: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentGraph {
    pub n: usize,
    pub scheme: ClassScheme,
    pub nodes: Vec<Node>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl ComponentGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn feature_dim(&self) -> usize {
        feature_dim(self.n)
    }

    /// Checks the structural invariants of a graph.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let dim = feature_dim(self.n);
        if self.n < 4 {
            return Err(Error::MalformedGraph(format!("n = {} is below 4", self.n)));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.features.len() != dim {
                return Err(Error::MalformedGraph(format!(
                    "node {i} has {} features, expected {dim}",
                    node.features.len()
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for &[a, b] in &self.edges {
            if a >= self.nodes.len() || b >= self.nodes.len() {
                return Err(Error::MalformedGraph(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::MalformedGraph(format!("self edge at {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::MalformedGraph(format!("duplicate edge ({a}, {b})")));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.nodes.len() {
                return Err(Error::MalformedGraph(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    self.nodes.len()
                )));
            }
            let k = self.scheme.num_classes();
            if let Some(bad) = labels.iter().find(|&&l| l >= k) {
                return Err(Error::MalformedGraph(format!("label {bad} out of range")));
            }
        }
        Ok(())
    }

    /// Row-major feature matrix, one row per node.
    pub fn feature_matrix(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|n| n.features.iter().copied()).collect()
    }

    /// Neighbor lists derived from the undirected edge list.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Relabels the graph under another scheme. Only 3-class labels can be collapsed.
    pub fn with_scheme(&self, scheme: ClassScheme) -> Result<ComponentGraph> {
        let mut g = self.clone();
        if scheme == self.scheme {
            return Ok(g);
        }
        if self.scheme != ClassScheme::TextContourDimension {
            return Err(Error::Config("only 3-class graphs can be remapped".into()));
        }
        g.scheme = scheme;
        g.labels = self.labels.as_ref().map(|ls| {
            ls.iter()
                .map(|&l| scheme.index_of(ComponentClass::ALL[l]))
                .collect()
        });
        Ok(g)
    }
}

/// Assembles the graph: one node per normalized curve and a clique over the
/// components sharing each vertex.
pub fn build_graph(curves: &[CubicBezier], vertices: &VertexSet, n: usize) -> ComponentGraph {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertices.vertices.len()];
    for (i, c) in curves.iter().enumerate() {
        if let Some([a, b]) = c.vertex_ids {
            incident[a].push(i);
            if b != a {
                incident[b].push(i);
            }
        }
    }
    let mut edges = BTreeSet::new();
    for set in &incident {
        let uniq: BTreeSet<usize> = set.iter().copied().collect();
        let members: Vec<usize> = uniq.into_iter().collect();
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                edges.insert([a, b]);
            }
        }
    }
    let nodes = curves
        .iter()
        .map(|c| Node {
            bezier: c.clone(),
            features: featurize(c, n),
        })
        .collect();
    ComponentGraph {
        n,
        scheme: ClassScheme::TextContourDimension,
        nodes,
        edges: edges.into_iter().collect(),
        labels: None,
        provenance: Provenance::default(),
    }
}

/// Maps a ground-truth pixel to a class; `None` for background.
///
/// Achromatic pixels are background when light and contour when dark. Chromatic
/// pixels snap to the nearest of black, green and red, and anything not green counts
/// as a dimension, so off-palette annotation colors land in the dimension class.
pub fn classify_color(rgb: [u8; 3]) -> Option<ComponentClass> {
    let max = *rgb.iter().max().unwrap() as i32;
    let min = *rgb.iter().min().unwrap() as i32;
    if max - min <= 64 {
        let mean = rgb.iter().map(|&c| c as i32).sum::<i32>() / 3;
        return (mean < 128).then_some(ComponentClass::Contour);
    }
    let d2 = |b: [u8; 3]| -> i32 { (0..3).map(|k| (rgb[k] as i32 - b[k] as i32).pow(2)).sum() };
    let nearest = ComponentClass::ALL
        .into_iter()
        .min_by_key(|c| d2(c.color()))
        .unwrap();
    Some(match nearest {
        ComponentClass::Text => ComponentClass::Text,
        _ => ComponentClass::Dimension,
    })
}

/// Radius of the search window used when a sample lands on background.
pub const VOTE_SEARCH_RADIUS: i64 = 3;

fn vote_at(gt: &ColorRaster, p: Point) -> Option<ComponentClass> {
    let (x, y) = (p[0].round() as i64, p[1].round() as i64);
    let (w, h) = (gt.width() as i64, gt.height() as i64);
    let read = |x: i64, y: i64| -> Option<ComponentClass> {
        if x < 0 || y < 0 || x >= w || y >= h {
            None
        } else {
            classify_color(gt.get(x as u32, y as u32))
        }
    };
    if let Some(c) = read(x, y) {
        return Some(c);
    }
    let r = VOTE_SEARCH_RADIUS;
    let mut best: Option<(f64, ComponentClass)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let (qx, qy) = (x + dx, y + dy);
            if let Some(c) = read(qx, qy) {
                let d = (qx as f64 - p[0]).powi(2) + (qy as f64 - p[1]).powi(2);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Majority class among votes, ties going to the lowest class index.
pub fn majority(votes: &[usize], num_classes: usize) -> Option<usize> {
    let mut counts = vec![0usize; num_classes];
    for &v in votes {
        counts[v] += 1;
    }
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    counts.iter().position(|&c| c == best)
}

/// Labels every node by majority vote of the ground-truth colors under its samples.
///
/// `pixel_transform` maps normalized coordinates back into ground-truth pixels.
pub fn label_from_ground_truth(
    g: &ComponentGraph,
    gt: &ColorRaster,
    scheme: ClassScheme,
    pixel_transform: impl Fn(Point) -> Point,
) -> Result<ComponentGraph> {
    if let Some([w, h]) = g.provenance.source_size {
        if (w, h) != (gt.width(), gt.height()) {
            return Err(Error::DimensionMismatch {
                w,
                h,
                gt_w: gt.width(),
                gt_h: gt.height(),
            });
        }
    }
    let k = scheme.num_classes();
    let mut labels = Vec::with_capacity(g.nodes.len());
    let mut silent = Vec::new();
    for (i, node) in g.nodes.iter().enumerate() {
        let samples = sample_equal_arclength(&node.bezier, g.n);
        let votes: Vec<usize> = samples
            .points
            .iter()
            .filter_map(|&p| vote_at(gt, pixel_transform(p)))
            .map(|c| scheme.index_of(c))
            .collect();
        match majority(&votes, k) {
            Some(l) => labels.push(l),
            None => {
                silent.push(i);
                labels.push(0);
            }
        }
    }
    if !silent.is_empty() {
        return Err(Error::NoVotes(silent));
    }
    let mut out = g.clone();
    out.scheme = scheme;
    out.labels = Some(labels);
    Ok(out)
}

#[derive(Serialize)]
struct GraphFileOut<'a> {
    version: u32,
    #[serde(flatten)]
    graph: &'a ComponentGraph,
}

#[derive(Deserialize)]
struct GraphFileIn {
    version: u32,
    #[serde(flatten)]
    graph: ComponentGraph,
}

pub fn graph_to_json(g: &ComponentGraph) -> String {
    serde_json::to_string(&GraphFileOut {
        version: GRAPH_FILE_VERSION,
        graph: g,
    })
    .expect("graph serializes")
}

pub fn graph_from_json(text: &str) -> Result<ComponentGraph> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::MalformedGraph(e.to_string()))?;
    let found = v
        .get("version")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| Error::MalformedGraph("missing version".into()))? as u32;
    if found != GRAPH_FILE_VERSION {
        return Err(Error::VersionMismatch {
            expected: GRAPH_FILE_VERSION,
            found,
        });
    }
    if v.get("nodes").and_then(|n| n.as_array()).is_some_and(|a| a.is_empty()) {
        return Err(Error::EmptyGraph);
    }
    let file: GraphFileIn =
        serde_json::from_value(v).map_err(|e| Error::MalformedGraph(e.to_string()))?;
    debug_assert_eq!(file.version, GRAPH_FILE_VERSION);
    file.graph.validate()?;
    Ok(file.graph)
}

/// Writes the graph next to its final path and renames it into place.
pub fn save_graph(g: &ComponentGraph, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, graph_to_json(g).as_bytes())
}

pub fn load_graph(path: &Path) -> Result<ComponentGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    graph_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Vertex;

    fn seg(a: Point, b: Point) -> CubicBezier {
        CubicBezier::new([
            a,
            [a[0] + (b[0] - a[0]) / 3.0, a[1] + (b[1] - a[1]) / 3.0],
            [a[0] + 2.0 * (b[0] - a[0]) / 3.0, a[1] + 2.0 * (b[1] - a[1]) / 3.0],
            b,
        ])
    }

    fn with_ends(mut c: CubicBezier, a: usize, b: usize) -> CubicBezier {
        c.vertex_ids = Some([a, b]);
        c
    }

    fn vset(count: usize) -> VertexSet {
        VertexSet {
            vertices: (0..count)
                .map(|_| Vertex {
                    position: (0.0, 0.0),
                    incident: vec![],
                })
                .collect(),
            trace_ends: vec![],
        }
    }

    #[test]
    fn normalize_examples() {
        let curves = vec![seg([0.0, 0.0], [200.0, 100.0])];
        let (out, norm) = normalize_components(&curves).unwrap();
        assert_eq!(out[0].control[0], [0.0, 0.0]);
        assert_eq!(out[0].control[3], [1.0, 0.5]);
        assert_eq!(norm.invert([1.0, 0.5]), [200.0, 100.0]);

        let unit = vec![seg([0.0, 0.0], [1.0, 0.25]), seg([0.5, 0.0], [0.0, 1.0])];
        let (same, _) = normalize_components(&unit).unwrap();
        for (a, b) in unit.iter().zip(&same) {
            for (p, q) in a.control.iter().zip(&b.control) {
                assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
            }
        }

        let moved: Vec<CubicBezier> = unit.iter().map(|c| c.transformed(3.7, [5.0, 9.0])).collect();
        let (m, _) = normalize_components(&moved).unwrap();
        for (a, b) in same.iter().zip(&m) {
            for (p, q) in a.control.iter().zip(&b.control) {
                assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
            }
        }

        let dot = vec![CubicBezier::new([[3.0, 3.0]; 4])];
        assert!(matches!(normalize_components(&dot), Err(Error::DegenerateDrawing)));
    }

    #[test]
    fn unit_segment_features() {
        let f = featurize(&seg([0.0, 0.0], [1.0, 0.0]), 4);
        assert_eq!(f.len(), 19);
        let expect = [
            0.0,
            0.0,
            1.0 / 3.0,
            0.0,
            2.0 / 3.0,
            0.0,
            1.0,
            0.0,
            1.0 / 3.0,
            1.0 / 3.0,
            1.0 / 3.0,
            1.0,
            1.0,
            1.0,
            1.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn semicircle_ratio() {
        // least-squares single cubic through a dense semicircle of radius 0.5
        let pts: Vec<Point> = (0..=200)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 200.0;
                [0.5 - 0.5 * a.cos(), 0.5 * a.sin()]
            })
            .collect();
        let c = CubicBezier::new(crate::curvefit::fit_points(&pts));
        let f = featurize(&c, 4);
        let ratio = f[2 * 4 + 3 + 1];
        assert!((ratio - 2.0 / std::f64::consts::PI).abs() < 0.03, "{ratio}");
        for n in [4, 5, 8, 12] {
            assert_eq!(featurize(&c, n).len(), 5 * n - 1);
        }
    }

    #[test]
    fn plus_sign_edges() {
        // center vertex 0, arm-end vertices 1..=4
        let curves: Vec<CubicBezier> = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
            .iter()
            .enumerate()
            .map(|(i, &p)| with_ends(seg([0.0, 0.0], p), 0, i + 1))
            .collect();
        let g = build_graph(&curves, &vset(5), 4);
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.edges.len(), 6);
        g.validate().unwrap();
    }

    #[test]
    fn disjoint_and_rectangle_edges() {
        let two = vec![
            with_ends(seg([0.0, 0.0], [1.0, 0.0]), 0, 1),
            with_ends(seg([0.0, 1.0], [1.0, 1.0]), 2, 3),
        ];
        assert!(build_graph(&two, &vset(4), 4).edges.is_empty());

        let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.0, 0.5]];
        let rect: Vec<CubicBezier> = (0..4)
            .map(|i| with_ends(seg(corners[i], corners[(i + 1) % 4]), i, (i + 1) % 4))
            .collect();
        let g = build_graph(&rect, &vset(4), 4);
        assert_eq!(g.edges, vec![[0, 1], [0, 3], [1, 2], [2, 3]]);
        let adj = g.adjacency();
        assert!(adj.iter().all(|a| a.len() == 2));
    }

    #[test]
    fn majority_votes() {
        let s = ClassScheme::TextContourDimension;
        let t = s.index_of(ComponentClass::Text);
        let c = s.index_of(ComponentClass::Contour);
        assert_eq!(majority(&[t, t, c, t], 3), Some(t));
        assert_eq!(majority(&[t, t, c, c], 3), Some(c));
        assert_eq!(majority(&[], 3), None);
    }

    #[test]
    fn color_snapping() {
        assert_eq!(classify_color([255, 255, 255]), None);
        assert_eq!(classify_color([240, 250, 245]), None);
        assert_eq!(classify_color([0, 0, 0]), Some(ComponentClass::Contour));
        assert_eq!(classify_color([10, 230, 20]), Some(ComponentClass::Text));
        assert_eq!(classify_color([255, 0, 0]), Some(ComponentClass::Dimension));
        assert_eq!(classify_color([0, 0, 255]), Some(ComponentClass::Dimension));
        assert_eq!(classify_color([255, 0, 255]), Some(ComponentClass::Dimension));
    }

    fn labelled_fixture() -> (ComponentGraph, ColorRaster) {
        let curves = vec![
            with_ends(seg([2.0, 2.0], [17.0, 2.0]), 0, 1),
            with_ends(seg([2.0, 8.0], [17.0, 8.0]), 2, 3),
        ];
        let (norm_curves, norm) = normalize_components(&curves).unwrap();
        let mut g = build_graph(&norm_curves, &vset(4), 4);
        g.provenance.source_size = Some([20, 12]);
        g.provenance.normalization = Some(norm);
        let mut gt = ColorRaster::filled(20, 12, [255, 255, 255]).unwrap();
        for x in 2..=17 {
            gt.set(x, 2, [0, 255, 0]);
            // second line drawn one pixel off: samples land on background and search
            gt.set(x, 9, [255, 0, 0]);
        }
        (g, gt)
    }

    #[test]
    fn ground_truth_labels() {
        let (g, gt) = labelled_fixture();
        let norm = g.provenance.normalization.unwrap();
        let l = label_from_ground_truth(&g, &gt, ClassScheme::TextContourDimension, |p| norm.invert(p))
            .unwrap();
        assert_eq!(l.labels, Some(vec![1, 2]));
        let two = label_from_ground_truth(&g, &gt, ClassScheme::TextNontext, |p| norm.invert(p)).unwrap();
        assert_eq!(two.labels, Some(vec![0, 1]));
        assert_eq!(l.with_scheme(ClassScheme::TextNontext).unwrap().labels, two.labels);
    }

    #[test]
    fn ground_truth_errors() {
        let (g, gt) = labelled_fixture();
        let norm = g.provenance.normalization.unwrap();
        let blank = ColorRaster::filled(20, 12, [255, 255, 255]).unwrap();
        match label_from_ground_truth(&g, &blank, ClassScheme::TextContourDimension, |p| norm.invert(p)) {
            Err(Error::NoVotes(nodes)) => assert_eq!(nodes, vec![0, 1]),
            other => panic!("{other:?}"),
        }
        let small = ColorRaster::filled(10, 12, [255, 255, 255]).unwrap();
        assert!(matches!(
            label_from_ground_truth(&g, &small, ClassScheme::TextContourDimension, |p| p),
            Err(Error::DimensionMismatch { .. })
        ));
        drop(gt);
    }

    #[test]
    fn file_round_trip_and_errors() {
        let (g, gt) = labelled_fixture();
        let norm = g.provenance.normalization.unwrap();
        let mut g = label_from_ground_truth(&g, &gt, ClassScheme::TextContourDimension, |p| norm.invert(p))
            .unwrap();
        g.edges = vec![[0, 1]];
        g.provenance.seed = Some(42);
        g.provenance.params.insert("threshold".into(), serde_json::json!(128));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        save_graph(&g, &path).unwrap();
        assert_eq!(load_graph(&path).unwrap(), g);

        let mut v: serde_json::Value = serde_json::from_str(&graph_to_json(&g)).unwrap();
        v["edges"] = serde_json::json!([[0, 5]]);
        assert!(matches!(
            graph_from_json(&v.to_string()),
            Err(Error::MalformedGraph(_))
        ));
        v["nodes"] = serde_json::json!([]);
        assert!(matches!(graph_from_json(&v.to_string()), Err(Error::EmptyGraph)));
        let mut w: serde_json::Value = serde_json::from_str(&graph_to_json(&g)).unwrap();
        w["version"] = serde_json::json!(7);
        assert!(matches!(
            graph_from_json(&w.to_string()),
            Err(Error::VersionMismatch { found: 7, .. })
        ));
        assert!(graph_from_json("{not json").is_err());
    }

    proptest::proptest! {
        #[test]
        fn features_similarity_invariant(
            pts in proptest::collection::vec((0.0f64..500.0, 0.0f64..500.0), 8),
            s in 0.1f64..20.0,
            tx in -100.0f64..100.0,
            ty in -100.0f64..100.0,
        ) {
            let curves = vec![
                CubicBezier::new([[pts[0].0, pts[0].1], [pts[1].0, pts[1].1], [pts[2].0, pts[2].1], [pts[3].0, pts[3].1]]),
                CubicBezier::new([[pts[4].0, pts[4].1], [pts[5].0, pts[5].1], [pts[6].0, pts[6].1], [pts[7].0, pts[7].1]]),
            ];
            let moved: Vec<CubicBezier> = curves.iter().map(|c| c.transformed(s, [tx, ty])).collect();
            let (a, _) = normalize_components(&curves).unwrap();
            let (b, _) = normalize_components(&moved).unwrap();
            for (ca, cb) in a.iter().zip(&b) {
                let fa = featurize(ca, 4);
                let fb = featurize(cb, 4);
                for (x, y) in fa.iter().zip(&fb) {
                    proptest::prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
                }
                proptest::prop_assert!(fa[12] >= -1e-9 && fa[12] <= 1.0 + 1e-9);
                proptest::prop_assert!(fa[13..15].iter().all(|c| (-1.0..=1.0).contains(c)));
            }
        }
    }
}
