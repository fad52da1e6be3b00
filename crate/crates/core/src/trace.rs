//! Skeleton pixel classification, trace extraction, corner splitting and vertex merging.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::raster::{BinaryRaster, NEIGHBORS_8};

pub const DEFAULT_SPIKE_THRESHOLD: f64 = 0.3;
pub const DEFAULT_MERGE_RADIUS: f64 = 2.0;
/// Traces shorter than this many pixels are dropped before curve fitting.
pub const MIN_TRACE_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelKind {
    End,
    Passing,
    Junction,
    Isolated,
}

impl PixelKind {
    pub fn from_neighbor_count(n: usize) -> Self {
        match n {
            0 => PixelKind::Isolated,
            1 => PixelKind::End,
            2 => PixelKind::Passing,
            _ => PixelKind::Junction,
        }
    }

    fn terminates(self) -> bool {
        matches!(self, PixelKind::End | PixelKind::Junction)
    }
}

pub type Pixel = (i64, i64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub pixels: Vec<Pixel>,
    pub start_kind: PixelKind,
    pub end_kind: PixelKind,
    pub cyclic: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn start(&self) -> Pixel {
        self.pixels[0]
    }

    pub fn end(&self) -> Pixel {
        *self.pixels.last().unwrap()
    }
}

/// Serializes traces as the debug dump format: a JSON array of
/// `{pixels, start_kind, end_kind, cyclic}`.
pub fn traces_to_json(traces: &[Trace]) -> String {
    serde_json::to_string(traces).expect("traces serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: (f64, f64),
    /// Trace index per incident trace end; a trace closing on itself is listed twice.
    pub incident: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub vertices: Vec<Vertex>,
    /// Start and end vertex of each trace; `None` for cyclic traces.
    pub trace_ends: Vec<Option<[usize; 2]>>,
}

/// Kind of every ink pixel, keyed by coordinate.
pub fn classify_pixels(skel: &BinaryRaster) -> HashMap<Pixel, PixelKind> {
    skel.ink()
        .map(|(x, y)| {
            let p = (x as i64, y as i64);
            (p, PixelKind::from_neighbor_count(skel.neighbor_count(p.0, p.1)))
        })
        .collect()
}

fn kind_at(skel: &BinaryRaster, p: Pixel) -> PixelKind {
    PixelKind::from_neighbor_count(skel.neighbor_count(p.0, p.1))
}

fn ink_neighbors(skel: &BinaryRaster, p: Pixel) -> impl Iterator<Item = Pixel> + '_ {
    NEIGHBORS_8
        .iter()
        .map(move |(dx, dy)| (p.0 + dx, p.1 + dy))
        .filter(|q| skel.get(q.0, q.1))
}

/// Walks from `from` into `cur` until a terminating pixel is reached. Returns the
/// visited pixels after `from` and whether the walk came back around to `origin`.
fn walk(skel: &BinaryRaster, origin: Pixel, from: Pixel, mut cur: Pixel) -> (Vec<Pixel>, bool) {
    let mut path = Vec::new();
    let mut prev = from;
    loop {
        if cur == origin {
            return (path, true);
        }
        path.push(cur);
        if kind_at(skel, cur).terminates() {
            return (path, false);
        }
        // passing pixel: exactly two neighbors, continue through the one we did not come from
        let next = ink_neighbors(skel, cur).find(|&q| q != prev);
        match next {
            Some(n) => {
                prev = cur;
                cur = n;
            }
            None => return (path, false),
        }
    }
}

/// Splits a thinned mask into ordered pixel traces between termination points.
///
/// Starting pixels are taken in row-major order; from a passing pixel the walk first
/// follows the neighbor found first clockwise from east, then the trace is reversed
/// and extended the other way. Junction pixels only ever appear as trace terminals.
pub fn extract_traces(skel: &BinaryRaster) -> Vec<Trace> {
    let w = skel.width() as usize;
    let idx = |p: Pixel| p.1 as usize * w + p.0 as usize;
    let mut visited = vec![false; w * skel.height() as usize];
    let mut traces = Vec::new();

    for (x, y) in skel.ink() {
        let s = (x as i64, y as i64);
        if visited[idx(s)] {
            continue;
        }
        let kind = kind_at(skel, s);
        let trace = match kind {
            PixelKind::Junction => continue,
            PixelKind::Isolated => Trace {
                pixels: vec![s],
                start_kind: kind,
                end_kind: kind,
                cyclic: false,
            },
            PixelKind::End => {
                let n = ink_neighbors(skel, s).next().unwrap();
                let (rest, _) = walk(skel, s, s, n);
                let mut pixels = vec![s];
                pixels.extend(rest);
                let end_kind = kind_at(skel, *pixels.last().unwrap());
                Trace {
                    pixels,
                    start_kind: PixelKind::End,
                    end_kind,
                    cyclic: false,
                }
            }
            PixelKind::Passing => {
                let mut nbrs = ink_neighbors(skel, s);
                let a = nbrs.next().unwrap();
                let b = nbrs.next().unwrap();
                let (fwd, cyclic) = walk(skel, s, s, a);
                if cyclic {
                    let mut pixels = vec![s];
                    pixels.extend(fwd);
                    Trace {
                        pixels,
                        start_kind: PixelKind::Passing,
                        end_kind: PixelKind::Passing,
                        cyclic: true,
                    }
                } else {
                    let (back, _) = walk(skel, s, s, b);
                    let mut pixels: Vec<Pixel> = back.into_iter().rev().collect();
                    pixels.push(s);
                    pixels.extend(fwd);
                    Trace {
                        start_kind: kind_at(skel, pixels[0]),
                        end_kind: kind_at(skel, *pixels.last().unwrap()),
                        pixels,
                        cyclic: false,
                    }
                }
            }
        };
        for &p in &trace.pixels {
            if kind_at(skel, p) != PixelKind::Junction {
                visited[idx(p)] = true;
            }
        }
        traces.push(trace);
    }
    traces
}

/// Angle at each interior pixel between the vectors to the two trace terminals.
pub fn terminal_angles(pixels: &[Pixel]) -> Vec<f64> {
    let m = pixels.len();
    if m < 3 {
        return Vec::new();
    }
    let (ps, pe) = (pixels[0], pixels[m - 1]);
    pixels[1..m - 1]
        .iter()
        .map(|&p| {
            let a = ((ps.0 - p.0) as f64, (ps.1 - p.1) as f64);
            let b = ((pe.0 - p.0) as f64, (pe.1 - p.1) as f64);
            let na = a.0.hypot(a.1);
            let nb = b.0.hypot(b.1);
            if na == 0.0 || nb == 0.0 {
                return std::f64::consts::PI;
            }
            ((a.0 * b.0 + a.1 * b.1) / (na * nb)).clamp(-1.0, 1.0).acos()
        })
        .collect()
}

/// Pixel indices where the second difference of the terminal angle spikes.
pub fn corner_indices(pixels: &[Pixel], spike_threshold: f64) -> Vec<usize> {
    let m = pixels.len();
    if m < 5 {
        return Vec::new();
    }
    // theta[k] belongs to pixel k + 1
    let theta = terminal_angles(pixels);
    // second[k] belongs to pixel k + 2
    let second: Vec<f64> = theta
        .windows(3)
        .map(|w| w[2] - 2.0 * w[1] + w[0])
        .collect();
    let mut out = Vec::new();
    for k in 1..second.len().saturating_sub(1) {
        let v = second[k];
        if v > spike_threshold && v > second[k - 1] && v > second[k + 1] {
            out.push(k + 2);
        }
    }
    out
}

/// Splits an open trace at corners. Neighboring pieces share the split pixel.
pub fn split_at_corners(t: &Trace, spike_threshold: f64) -> Vec<Trace> {
    if t.cyclic || t.len() < 5 {
        return vec![t.clone()];
    }
    let cuts = corner_indices(&t.pixels, spike_threshold);
    if cuts.is_empty() {
        return vec![t.clone()];
    }
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut from = 0;
    let bounds = cuts.iter().copied().chain(std::iter::once(t.len() - 1));
    for to in bounds {
        pieces.push(Trace {
            pixels: t.pixels[from..=to].to_vec(),
            start_kind: if from == 0 { t.start_kind } else { PixelKind::Passing },
            end_kind: if to == t.len() - 1 { t.end_kind } else { PixelKind::Passing },
            cyclic: false,
        });
        from = to;
    }
    pieces
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller root so results do not depend on call order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Drops traces shorter than [`MIN_TRACE_LEN`] and merges terminal points into vertices.
///
/// Terminals closer than `merge_radius` are unioned transitively. The two terminals of
/// every dropped trace are unioned as well, so components that touched only through a
/// tiny trace stay connected. Vertices sit at the centroid of their surviving terminals.
pub fn prune_and_merge(traces: &[Trace], merge_radius: f64) -> (Vec<Trace>, VertexSet) {
    // terminal slots: 2 per open trace, indexed 2*i and 2*i+1
    let open: Vec<usize> = (0..traces.len()).filter(|&i| !traces[i].cyclic).collect();
    let mut points: Vec<Pixel> = Vec::with_capacity(open.len() * 2);
    for &i in &open {
        points.push(traces[i].start());
        points.push(traces[i].end());
    }
    let mut uf = UnionFind::new(points.len());
    for (slot, &i) in open.iter().enumerate() {
        if traces[i].len() < MIN_TRACE_LEN {
            uf.union(2 * slot, 2 * slot + 1);
        }
    }

    let cell = merge_radius.max(1.0);
    let key = |p: Pixel| ((p.0 as f64 / cell).floor() as i64, (p.1 as f64 / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, &p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(k);
    }
    let r2 = merge_radius * merge_radius;
    for (k, &p) in points.iter().enumerate() {
        let (cx, cy) = key(p);
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                if let Some(list) = grid.get(&(gx, gy)) {
                    for &j in list {
                        if j <= k {
                            continue;
                        }
                        let q = points[j];
                        let d2 = ((p.0 - q.0).pow(2) + (p.1 - q.1).pow(2)) as f64;
                        if d2 <= r2 {
                            uf.union(k, j);
                        }
                    }
                }
            }
        }
    }

    let mut kept = Vec::new();
    let mut kept_slots = Vec::new();
    for (slot, &i) in open.iter().enumerate() {
        if traces[i].len() >= MIN_TRACE_LEN {
            kept_slots.push(Some(slot));
            kept.push(traces[i].clone());
        }
    }
    for t in traces.iter().filter(|t| t.cyclic && t.len() >= MIN_TRACE_LEN) {
        kept_slots.push(None);
        kept.push(t.clone());
    }

    let mut root_to_vertex: HashMap<usize, usize> = HashMap::new();
    let mut sums: Vec<(f64, f64, usize)> = Vec::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut trace_ends = Vec::with_capacity(kept.len());
    for (ti, slot) in kept_slots.iter().enumerate() {
        let Some(slot) = slot else {
            trace_ends.push(None);
            continue;
        };
        let mut ends = [0usize; 2];
        for (e, end) in ends.iter_mut().enumerate() {
            let k = 2 * slot + e;
            let root = uf.find(k);
            let vid = *root_to_vertex.entry(root).or_insert_with(|| {
                vertices.push(Vertex {
                    position: (0.0, 0.0),
                    incident: Vec::new(),
                });
                sums.push((0.0, 0.0, 0));
                vertices.len() - 1
            });
            let p = points[k];
            sums[vid].0 += p.0 as f64;
            sums[vid].1 += p.1 as f64;
            sums[vid].2 += 1;
            vertices[vid].incident.push(ti);
            *end = vid;
        }
        trace_ends.push(Some(ends));
    }
    for (v, s) in vertices.iter_mut().zip(&sums) {
        v.position = (s.0 / s.2 as f64, s.1 / s.2 as f64);
    }
    (
        kept,
        VertexSet {
            vertices,
            trace_ends,
        },
    )
}
