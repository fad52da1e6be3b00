//! Seeded synthetic engineering drawings with exact per-primitive ground truth.
//!
//! A drawing is one part (plate, flanged disc or L bracket) with holes and center
//! lines, dimensioned by baseline linear dimensions and diameter leaders, with
//! stroke-font text. The same geometry is rendered twice: black ink for the drawing
//! and palette colors for the ground truth.

pub mod font;
pub mod render;

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvefit::Point;
use crate::error::{Error, Result};
use crate::graph::ComponentClass;
use crate::raster::{ColorRaster, GrayRaster};

use render::Canvas;

pub const DEFAULT_CANVAS: u32 = 1024;
pub const DEFAULT_STROKE_WIDTH: f64 = 3.0;
pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    RectPlate,
    FlangedDisc,
    LBracket,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::RectPlate, Template::FlangedDisc, Template::LBracket];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawingSpec {
    pub seed: u64,
    /// Long side of the canvas; the short side is three quarters of it.
    pub canvas: u32,
    pub template: Template,
    pub hole_count: usize,
    pub dim_count: usize,
    /// Dimensions carrying text; any excess becomes free-standing notes.
    pub text_tokens: usize,
    pub stroke_width: f64,
}

impl DrawingSpec {
    /// A feasible random spec for `seed`.
    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(7);
        let template = Template::ALL[rng.gen_range(0..3)];
        let hole_count = match template {
            Template::RectPlate => rng.gen_range(1..=4),
            Template::FlangedDisc => [3, 4, 6, 8][rng.gen_range(0..4)],
            Template::LBracket => rng.gen_range(1..=3),
        };
        let dim_count = rng.gen_range(3..=6);
        Self {
            seed,
            canvas: DEFAULT_CANVAS,
            template,
            hole_count,
            dim_count,
            text_tokens: dim_count,
            stroke_width: DEFAULT_STROKE_WIDTH,
        }
    }

    pub fn size(&self) -> (u32, u32) {
        (self.canvas, self.canvas * 3 / 4)
    }

    pub fn validate(&self) -> Result<()> {
        if self.canvas < 256 {
            return Err(Error::Config(format!("canvas {} is below 256", self.canvas)));
        }
        if !(self.stroke_width >= 1.0 && self.stroke_width <= 12.0) {
            return Err(Error::Config(format!(
                "stroke width {} outside [1, 12]",
                self.stroke_width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Outline,
    Hole,
    CenterLine,
    ExtensionLine,
    DimensionLine,
    Arrowhead,
    Leader,
    Text,
}

impl PrimitiveKind {
    pub fn class(self) -> ComponentClass {
        match self {
            PrimitiveKind::Outline | PrimitiveKind::Hole | PrimitiveKind::CenterLine => ComponentClass::Contour,
            PrimitiveKind::Text => ComponentClass::Text,
            _ => ComponentClass::Dimension,
        }
    }
}

/// One drawn element. Filled primitives are triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub class: ComponentClass,
    pub points: Vec<Point>,
    pub closed: bool,
    pub filled: bool,
}

#[derive(Debug, Clone)]
pub struct Drawing {
    pub spec: DrawingSpec,
    pub drawing: GrayRaster,
    pub ground_truth: ColorRaster,
    pub manifest: Vec<Primitive>,
}

// ---- layout ------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum Shape {
    Seg(Point, Point),
    Rect(Point, Point),
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn point_seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2
    } else {
        0.0
    }
    .clamp(0.0, 1.0);
    (a[0] + t * d[0] - p[0]).hypot(a[1] + t * d[1] - p[1])
}

fn segs_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn seg_seg_dist(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segs_cross(a, b, c, d) {
        return 0.0;
    }
    point_seg_dist(a, c, d)
        .min(point_seg_dist(b, c, d))
        .min(point_seg_dist(c, a, b))
        .min(point_seg_dist(d, a, b))
}

fn inside(p: Point, lo: Point, hi: Point) -> bool {
    p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
}

fn seg_rect_dist(a: Point, b: Point, lo: Point, hi: Point) -> f64 {
    if inside(a, lo, hi) || inside(b, lo, hi) {
        return 0.0;
    }
    let c = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    (0..4)
        .map(|i| seg_seg_dist(a, b, c[i], c[(i + 1) % 4]))
        .fold(f64::INFINITY, f64::min)
}

fn shape_dist(s: Shape, t: Shape) -> f64 {
    match (s, t) {
        (Shape::Seg(a, b), Shape::Seg(c, d)) => seg_seg_dist(a, b, c, d),
        (Shape::Seg(a, b), Shape::Rect(lo, hi)) | (Shape::Rect(lo, hi), Shape::Seg(a, b)) => {
            seg_rect_dist(a, b, lo, hi)
        }
        (Shape::Rect(l1, h1), Shape::Rect(l2, h2)) => {
            let dx = (l2[0] - h1[0]).max(l1[0] - h2[0]).max(0.0);
            let dy = (l2[1] - h1[1]).max(l1[1] - h2[1]).max(0.0);
            dx.hypot(dy)
        }
    }
}

fn polyline_shapes(pts: &[Point], closed: bool) -> Vec<Shape> {
    let mut v: Vec<Shape> = pts.windows(2).map(|w| Shape::Seg(w[0], w[1])).collect();
    if closed && pts.len() > 2 {
        v.push(Shape::Seg(pts[pts.len() - 1], pts[0]));
    }
    v
}

fn circle(c: Point, r: f64) -> Vec<Point> {
    let n = ((2.0 * PI * r / 2.0).ceil() as usize).max(24);
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            [c[0] + r * a.cos(), c[1] + r * a.sin()]
        })
        .collect()
}

/// Obstacle tagged with the group it belongs to; groups let baseline dimensions share
/// extension lines.
#[derive(Debug, Clone, Copy)]
struct Obstacle {
    shape: Shape,
    group: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

impl Side {
    fn horizontal(self) -> bool {
        matches!(self, Side::Top | Side::Bottom)
    }

    /// Unit vector pointing away from the part.
    fn outward(self) -> Point {
        match self {
            Side::Top => [0.0, -1.0],
            Side::Bottom => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
        }
    }

    fn group(self) -> usize {
        1 + self as usize
    }
}

/// A baseline linear dimension from `base` to `feature`, both on the part.
#[derive(Debug, Clone, Copy)]
struct LinearCandidate {
    side: Side,
    base: Point,
    feature: Point,
}

#[derive(Debug, Clone, Copy)]
struct Hole {
    center: Point,
    radius: f64,
}

struct Layout {
    width: f64,
    height: f64,
    stroke: f64,
    rng: ChaCha8Rng,
    prims: Vec<Primitive>,
    obstacles: Vec<Obstacle>,
    /// Part bounding box.
    lo: Point,
    hi: Point,
    holes: Vec<Hole>,
    linear: Vec<LinearCandidate>,
    tiers: [usize; 4],
    text_height: f64,
    arrow_len: f64,
    px_per_unit: f64,
}

const CLEARANCE: f64 = 9.0;
const EXT_GAP: f64 = 5.0;
const EXT_OVERSHOOT: f64 = 9.0;
const TEXT_GAP: f64 = 5.0;
const FIRST_TIER: f64 = 48.0;
const TIER_STEP: f64 = 46.0;
const CENTER_LINE_OVERHANG: f64 = 14.0;
const NO_GROUP: usize = 0;
const CONTOUR_GROUP: usize = 100;
/// Outer outline; leader lines may cross it on their way out of the part.
const OUTLINE_GROUP: usize = 101;

fn overflow(msg: impl Into<String>) -> Error {
    Error::GeometryOverflow(msg.into())
}

impl Layout {
    fn new(spec: &DrawingSpec) -> Self {
        let (w, h) = spec.size();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let scale = (spec.canvas as f64 / DEFAULT_CANVAS as f64).clamp(0.75, 1.5);
        let text_height = rng.gen_range(17.0..23.0) * scale;
        let arrow_len = rng.gen_range(6.0..=10.0);
        let px_per_unit = rng.gen_range(2.0..4.0);
        Self {
            width: w as f64,
            height: h as f64,
            stroke: spec.stroke_width,
            rng,
            prims: Vec::new(),
            obstacles: Vec::new(),
            lo: [0.0; 2],
            hi: [0.0; 2],
            holes: Vec::new(),
            linear: Vec::new(),
            tiers: [0; 4],
            text_height,
            arrow_len,
            px_per_unit,
        }
    }

    fn add(&mut self, kind: PrimitiveKind, points: Vec<Point>, closed: bool, group: usize) {
        let filled = kind == PrimitiveKind::Arrowhead;
        for shape in polyline_shapes(&points, closed || filled) {
            self.obstacles.push(Obstacle { shape, group });
        }
        self.prims.push(Primitive {
            kind,
            class: kind.class(),
            points,
            closed,
            filled,
        });
    }

    fn in_canvas(&self, s: Shape) -> bool {
        let m = 6.0;
        let ok = |p: Point| p[0] >= m && p[1] >= m && p[0] <= self.width - m && p[1] <= self.height - m;
        match s {
            Shape::Seg(a, b) => ok(a) && ok(b),
            Shape::Rect(lo, hi) => ok(lo) && ok(hi),
        }
    }

    /// True when every shape is on the canvas and clear of all obstacles outside `skip`.
    fn clear(&self, shapes: &[Shape], skip: &[usize]) -> bool {
        shapes.iter().all(|&s| {
            self.in_canvas(s)
                && self
                    .obstacles
                    .iter()
                    .filter(|o| !skip.contains(&o.group))
                    .all(|o| shape_dist(s, o.shape) >= CLEARANCE)
        })
    }

    fn format_value(&mut self, px: f64, prefix: &str, allow_tolerance: bool) -> String {
        let v = (px / self.px_per_unit * 2.0).round() / 2.0;
        let mut s = if v.fract() == 0.0 {
            format!("{prefix}{v:.0}")
        } else {
            format!("{prefix}{v:.1}")
        };
        if allow_tolerance && self.rng.gen_bool(0.25) {
            s.push_str("±0.1");
        }
        s
    }

    fn text_shapes(&self, text: &str, origin: Point, angle: f64) -> (Vec<Vec<Point>>, Shape) {
        let lines = font::layout_text(text, origin, self.text_height, angle).expect("charset only");
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in lines.iter().flatten() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lines, Shape::Rect(lo, hi))
    }

    fn add_text(&mut self, lines: Vec<Vec<Point>>, rect: Shape) {
        for l in lines {
            self.prims.push(Primitive {
                kind: PrimitiveKind::Text,
                class: ComponentClass::Text,
                points: l,
                closed: false,
                filled: false,
            });
        }
        self.obstacles.push(Obstacle {
            shape: rect,
            group: NO_GROUP,
        });
    }

    fn arrowhead(&self, tip: Point, dir: Point) -> Vec<Point> {
        // `dir` points from the tip into the arrow body
        let (l, hw) = (self.arrow_len, self.arrow_len * 0.3);
        let base = [tip[0] + dir[0] * l, tip[1] + dir[1] * l];
        let n = [-dir[1], dir[0]];
        vec![
            tip,
            [base[0] + n[0] * hw, base[1] + n[1] * hw],
            [base[0] - n[0] * hw, base[1] - n[1] * hw],
        ]
    }

    // ---- part templates ----

    fn outline(&mut self, pts: Vec<Point>) {
        self.lo = [f64::INFINITY; 2];
        self.hi = [f64::NEG_INFINITY; 2];
        for p in &pts {
            for k in 0..2 {
                self.lo[k] = self.lo[k].min(p[k]);
                self.hi[k] = self.hi[k].max(p[k]);
            }
        }
        self.add(PrimitiveKind::Outline, pts, true, OUTLINE_GROUP);
    }

    fn part_box(&mut self, fw: (f64, f64), fh: (f64, f64)) -> (Point, Point) {
        let pw = self.rng.gen_range(fw.0..fw.1) * self.width;
        let ph = self.rng.gen_range(fh.0..fh.1) * self.height;
        let jx = (self.width - pw) * 0.08;
        let jy = (self.height - ph) * 0.08;
        let cx = self.width / 2.0 + self.rng.gen_range(-jx..=jx);
        let cy = self.height / 2.0 + self.rng.gen_range(-jy..=jy);
        ([cx - pw / 2.0, cy - ph / 2.0], [cx + pw / 2.0, cy + ph / 2.0])
    }

    fn hole_with_cross(&mut self, h: Hole, overhang: f64) {
        let [cx, cy] = h.center;
        let e = h.radius + overhang;
        self.add(PrimitiveKind::Hole, circle(h.center, h.radius), true, CONTOUR_GROUP);
        self.add(PrimitiveKind::CenterLine, vec![[cx - e, cy], [cx + e, cy]], false, CONTOUR_GROUP);
        self.add(PrimitiveKind::CenterLine, vec![[cx, cy - e], [cx, cy + e]], false, CONTOUR_GROUP);
        self.holes.push(h);
    }

    /// Places `count` holes inside the given rectangles, clear of everything drawn.
    fn scatter_holes(&mut self, count: usize, regions: &[(Point, Point)], r_range: (f64, f64)) -> Result<()> {
        for k in 0..count {
            let mut placed = false;
            for _ in 0..400 {
                let (lo, hi) = regions[self.rng.gen_range(0..regions.len())];
                let r = self.rng.gen_range(r_range.0..r_range.1);
                let e = r + CENTER_LINE_OVERHANG;
                let m = e + CLEARANCE + 4.0;
                if hi[0] - lo[0] <= 2.0 * m || hi[1] - lo[1] <= 2.0 * m {
                    continue;
                }
                let c = [self.rng.gen_range(lo[0] + m..hi[0] - m), self.rng.gen_range(lo[1] + m..hi[1] - m)];
                let bbox = Shape::Rect([c[0] - e, c[1] - e], [c[0] + e, c[1] + e]);
                if self.clear(&[bbox], &[]) {
                    self.hole_with_cross(Hole { center: c, radius: r }, CENTER_LINE_OVERHANG);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(overflow(format!("no room for hole {} of {count}", k + 1)));
            }
        }
        Ok(())
    }

    fn rect_plate(&mut self, holes: usize) -> Result<()> {
        let (lo, hi) = self.part_box((0.32, 0.52), (0.32, 0.5));
        self.outline(vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]);
        self.scatter_holes(holes, &[(lo, hi)], (10.0, 24.0))?;
        self.linear.push(LinearCandidate { side: Side::Bottom, base: [lo[0], hi[1]], feature: hi });
        self.linear.push(LinearCandidate { side: Side::Top, base: lo, feature: [hi[0], lo[1]] });
        self.linear.push(LinearCandidate { side: Side::Left, base: lo, feature: [lo[0], hi[1]] });
        self.linear.push(LinearCandidate { side: Side::Right, base: [hi[0], lo[1]], feature: hi });
        for h in self.holes.clone() {
            let [cx, cy] = h.center;
            self.linear.push(LinearCandidate { side: Side::Top, base: lo, feature: [cx, lo[1]] });
            self.linear.push(LinearCandidate { side: Side::Left, base: lo, feature: [lo[0], cy] });
        }
        Ok(())
    }

    fn l_bracket(&mut self, holes: usize) -> Result<()> {
        let (lo, hi) = self.part_box((0.34, 0.52), (0.36, 0.52));
        let a = self.rng.gen_range(0.3..0.5) * (hi[0] - lo[0]);
        let b = self.rng.gen_range(0.3..0.5) * (hi[1] - lo[1]);
        let (x0, y0, x1, y1) = (lo[0], lo[1], hi[0], hi[1]);
        self.outline(vec![[x0, y0], [x0 + a, y0], [x0 + a, y1 - b], [x1, y1 - b], [x1, y1], [x0, y1]]);
        let regions = [([x0, y0], [x0 + a, y1 - b]), ([x0 + a, y1 - b], [x1, y1])];
        self.scatter_holes(holes, &regions, (9.0, 20.0))?;
        self.linear.push(LinearCandidate { side: Side::Bottom, base: [x0, y1], feature: [x1, y1] });
        self.linear.push(LinearCandidate { side: Side::Top, base: [x0, y0], feature: [x0 + a, y0] });
        self.linear.push(LinearCandidate { side: Side::Top, base: [x0, y0], feature: [x1, y1 - b] });
        self.linear.push(LinearCandidate { side: Side::Left, base: [x0, y0], feature: [x0, y1] });
        self.linear.push(LinearCandidate { side: Side::Right, base: [x0 + a, y0], feature: [x1, y1 - b] });
        self.linear.push(LinearCandidate { side: Side::Right, base: [x0 + a, y0], feature: [x1, y1] });
        Ok(())
    }

    fn flanged_disc(&mut self, bolts: usize) -> Result<()> {
        let ro = self.rng.gen_range(0.21..0.29) * self.height;
        let (lo, hi) = self.part_box((0.0, 1e-9), (0.0, 1e-9));
        let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let rb = self.rng.gen_range(0.3..0.42) * ro;
        let outer = circle(c, ro);
        self.outline(outer);
        let over = CENTER_LINE_OVERHANG + 4.0;
        self.add(PrimitiveKind::Hole, circle(c, rb), true, CONTOUR_GROUP);
        self.holes.push(Hole { center: c, radius: rb });
        self.add(PrimitiveKind::CenterLine, vec![[c[0] - ro - over, c[1]], [c[0] + ro + over, c[1]]], false, CONTOUR_GROUP);
        self.add(PrimitiveKind::CenterLine, vec![[c[0], c[1] - ro - over], [c[0], c[1] + ro + over]], false, CONTOUR_GROUP);
        if bolts > 0 {
            let rp = (ro + rb) / 2.0;
            let r = self.rng.gen_range(8.0..14.0f64).min((ro - rb) / 2.0 - 12.0);
            let chord = 2.0 * rp * (PI / bolts as f64).sin();
            if r < 6.0 || (bolts > 1 && chord < 2.0 * (r + 8.0) + 2.0 * CLEARANCE) {
                return Err(overflow(format!("{bolts} bolt holes do not fit the flange")));
            }
            // keep bolt holes off the main center lines
            let margin = (r + 10.0) / rp;
            let off_axis = |t: f64| {
                let m = t.rem_euclid(PI / 2.0);
                m > margin && m < PI / 2.0 - margin
            };
            let mut start = 0.0;
            for attempt in 0..100 {
                start = self.rng.gen_range(0.0..2.0 * PI);
                if (0..bolts).all(|k| off_axis(start + 2.0 * PI * k as f64 / bolts as f64)) {
                    break;
                }
                if attempt == 99 {
                    return Err(overflow(format!("{bolts} bolt holes collide with the center lines")));
                }
            }
            for k in 0..bolts {
                let t = start + 2.0 * PI * k as f64 / bolts as f64;
                let h = Hole { center: [c[0] + rp * t.cos(), c[1] + rp * t.sin()], radius: r };
                self.hole_with_cross(h, 6.0);
            }
        }
        // one diameter dimension per axis, on a random side
        let d = 0.4 * ro;
        let (side, y) = if self.rng.gen_bool(0.5) { (Side::Bottom, c[1] + d) } else { (Side::Top, c[1] - d) };
        self.linear.push(LinearCandidate { side, base: [c[0] - ro, y], feature: [c[0] + ro, y] });
        let (side, x) = if self.rng.gen_bool(0.5) { (Side::Left, c[0] - d) } else { (Side::Right, c[0] + d) };
        self.linear.push(LinearCandidate { side, base: [x, c[1] - ro], feature: [x, c[1] + ro] });
        Ok(())
    }

    /// Grows the part box to everything drawn so far, center lines included.
    fn fit_box_to_contour(&mut self) {
        for p in self.prims.iter().flat_map(|p| p.points.iter()) {
            for k in 0..2 {
                self.lo[k] = self.lo[k].min(p[k]);
                self.hi[k] = self.hi[k].max(p[k]);
            }
        }
    }

    // ---- dimensions ----

    fn linear_dim(&mut self, cand: LinearCandidate, with_text: bool) -> bool {
        let side = cand.side;
        let out = side.outward();
        let tier = self.tiers[side as usize];
        let offset = FIRST_TIER + TIER_STEP * tier as f64;
        let (a, b) = (cand.base, cand.feature);
        // coordinate of the dimension line along the outward axis
        let line_at = match side {
            Side::Top => self.lo[1] - offset,
            Side::Bottom => self.hi[1] + offset,
            Side::Left => self.lo[0] - offset,
            Side::Right => self.hi[0] + offset,
        };
        let on_line = |p: Point| if side.horizontal() { [p[0], line_at] } else { [line_at, p[1]] };
        let (da, db) = (on_line(a), on_line(b));
        let span = (db[0] - da[0]).hypot(db[1] - da[1]);
        if span < 4.0 * self.arrow_len + 20.0 {
            return false;
        }
        let ext = |p: Point| {
            let start = [p[0] + out[0] * EXT_GAP, p[1] + out[1] * EXT_GAP];
            let q = on_line(p);
            let end = [q[0] + out[0] * EXT_OVERSHOOT, q[1] + out[1] * EXT_OVERSHOOT];
            (start, end)
        };
        let (ea, eb) = (ext(a), ext(b));
        let trim = |(s, e): (Point, Point)| {
            let k = EXT_GAP + CLEARANCE + 2.0;
            Shape::Seg([s[0] + out[0] * k, s[1] + out[1] * k], e)
        };
        let mut shapes = vec![trim(ea), trim(eb), Shape::Seg(da, db)];
        let dir = [(db[0] - da[0]) / span, (db[1] - da[1]) / span];

        let value = if with_text { Some(self.format_value(span, "", true)) } else { None };
        let text = value.map(|v| {
            let tw = font::text_width(&v) * self.text_height;
            let mid = [(da[0] + db[0]) / 2.0, (da[1] + db[1]) / 2.0];
            let lift = self.stroke / 2.0 + TEXT_GAP;
            let (origin, angle) = if side.horizontal() {
                ([mid[0] - tw / 2.0, mid[1] - lift - self.text_height], 0.0)
            } else {
                ([mid[0] - lift - self.text_height, mid[1] + tw / 2.0], -PI / 2.0)
            };
            (self.text_shapes(&v, origin, angle), tw)
        });
        if let Some(((_, rect), tw)) = &text {
            if span < tw + 2.0 * self.arrow_len + 16.0 {
                return false;
            }
            shapes.push(*rect);
        }
        let group = side.group();
        if !self.clear(&shapes, &[group]) {
            return false;
        }
        self.add(PrimitiveKind::ExtensionLine, vec![ea.0, ea.1], false, group);
        self.add(PrimitiveKind::ExtensionLine, vec![eb.0, eb.1], false, group);
        self.add(PrimitiveKind::DimensionLine, vec![da, db], false, NO_GROUP);
        let ha = self.arrowhead(da, dir);
        let hb = self.arrowhead(db, [-dir[0], -dir[1]]);
        self.add(PrimitiveKind::Arrowhead, ha, false, NO_GROUP);
        self.add(PrimitiveKind::Arrowhead, hb, false, NO_GROUP);
        if let Some(((lines, rect), _)) = text {
            self.add_text(lines, rect);
        }
        self.tiers[side as usize] += 1;
        true
    }

    fn leader(&mut self, h: Hole, with_text: bool) -> bool {
        let mut options = Vec::new();
        for k in 0..4 {
            for len in [36.0, 56.0, 80.0, 110.0, 140.0] {
                options.push((PI / 4.0 + PI / 2.0 * k as f64, len));
            }
        }
        options.shuffle(&mut self.rng);
        let value = self.format_value(2.0 * h.radius, "Ø", false);
        for (angle, len) in options {
            let u = [angle.cos(), angle.sin()];
            let tip = [h.center[0] + h.radius * u[0], h.center[1] + h.radius * u[1]];
            let knee = [tip[0] + len * u[0], tip[1] + len * u[1]];
            let sign = u[0].signum();
            let tw = font::text_width(&value) * self.text_height;
            let shelf_end = [knee[0] + sign * (tw + 10.0), knee[1]];
            let lift = self.stroke / 2.0 + TEXT_GAP;
            let left = knee[0].min(shelf_end[0]) + 5.0;
            let text = with_text.then(|| self.text_shapes(&value, [left, knee[1] - lift - self.text_height], 0.0));
            let k = CLEARANCE + self.arrow_len + 3.0;
            let lines = [
                Shape::Seg([tip[0] + u[0] * k, tip[1] + u[1] * k], knee),
                Shape::Seg(knee, shelf_end),
            ];
            if !self.clear(&lines, &[OUTLINE_GROUP]) {
                continue;
            }
            // the knee and text must not sit on the outline itself
            let mut near_knee = vec![Shape::Rect([knee[0] - 1.0, knee[1] - 1.0], [knee[0] + 1.0, knee[1] + 1.0])];
            if let Some((_, rect)) = &text {
                near_knee.push(*rect);
            }
            if !self.clear(&near_knee, &[]) {
                continue;
            }
            let head = self.arrowhead(tip, u);
            self.add(PrimitiveKind::Leader, vec![tip, knee, shelf_end], false, NO_GROUP);
            self.add(PrimitiveKind::Arrowhead, head, false, NO_GROUP);
            if let Some((lines, rect)) = text {
                self.add_text(lines, rect);
            }
            return true;
        }
        false
    }

    fn note(&mut self) -> bool {
        for _ in 0..200 {
            let v: f64 = self.rng.gen_range(1..=40) as f64 / 2.0;
            let text = match self.rng.gen_range(0..3) {
                0 => format!("R{v}"),
                1 => format!("Ø{v}"),
                _ => format!("{v}±0.1"),
            };
            let tw = font::text_width(&text) * self.text_height;
            let origin = [
                self.rng.gen_range(8.0..(self.width - tw - 8.0).max(9.0)),
                self.rng.gen_range(8.0..(self.height - self.text_height - 8.0).max(9.0)),
            ];
            let (lines, rect) = self.text_shapes(&text, origin, 0.0);
            if self.clear(&[rect], &[]) {
                self.add_text(lines, rect);
                return true;
            }
        }
        false
    }

    fn dimensions(&mut self, dim_count: usize, text_tokens: usize) -> Result<()> {
        #[derive(Clone, Copy)]
        enum Cand {
            Linear(LinearCandidate),
            Leader(Hole),
        }
        let span = |l: &LinearCandidate| (l.feature[0] - l.base[0]).abs() + (l.feature[1] - l.base[1]).abs();
        // per side, baseline dimensions nest outward from the shortest span
        let mut sides = [Side::Bottom, Side::Top, Side::Left, Side::Right];
        sides.shuffle(&mut self.rng);
        let mut per_side: Vec<std::collections::VecDeque<LinearCandidate>> = sides
            .iter()
            .map(|&side| {
                let mut v: Vec<_> = self.linear.iter().copied().filter(|l| l.side == side).collect();
                v.sort_by(|a, b| span(a).total_cmp(&span(b)));
                v.into()
            })
            .collect();
        let mut leaders: Vec<Hole> = self.holes.clone();
        leaders.shuffle(&mut self.rng);
        let mut leaders = leaders.into_iter();
        // round robin over sides and leaders so small counts still mix both kinds
        let mut order = Vec::new();
        loop {
            let before = order.len();
            for list in &mut per_side {
                if let Some(l) = list.pop_front() {
                    order.push(Cand::Linear(l));
                }
            }
            if let Some(h) = leaders.next() {
                order.push(Cand::Leader(h));
            }
            if order.len() == before {
                break;
            }
        }

        let mut placed = 0;
        for cand in order {
            if placed == dim_count {
                break;
            }
            let with_text = placed < text_tokens;
            let ok = match cand {
                Cand::Linear(l) => self.linear_dim(l, with_text),
                Cand::Leader(h) => self.leader(h, with_text),
            };
            if ok {
                placed += 1;
            }
        }
        if placed < dim_count {
            return Err(overflow(format!("only {placed} of {dim_count} dimensions fit")));
        }
        for _ in dim_count..text_tokens {
            if !self.note() {
                return Err(overflow("no room for a text note"));
            }
        }
        Ok(())
    }
}

/// Renders a manifest: dimensions and text first, contour on top.
pub fn render_manifest(width: u32, height: u32, stroke: f64, manifest: &[Primitive]) -> Canvas {
    let mut canvas = Canvas::new(width, height);
    for class in [ComponentClass::Dimension, ComponentClass::Text, ComponentClass::Contour] {
        for p in manifest.iter().filter(|p| p.class == class) {
            if p.filled && p.points.len() == 3 {
                canvas.fill_triangle([p.points[0], p.points[1], p.points[2]], class);
            }
            canvas.stroke_polyline(&p.points, p.closed || p.filled, stroke, class);
        }
    }
    canvas
}

/// Builds and renders one drawing.
pub fn generate(spec: &DrawingSpec) -> Result<Drawing> {
    spec.validate()?;
    let mut l = Layout::new(spec);
    match spec.template {
        Template::RectPlate => l.rect_plate(spec.hole_count)?,
        Template::FlangedDisc => l.flanged_disc(spec.hole_count)?,
        Template::LBracket => l.l_bracket(spec.hole_count)?,
    }
    if l.lo[0] < 8.0 || l.lo[1] < 8.0 || l.hi[0] > l.width - 8.0 || l.hi[1] > l.height - 8.0 {
        return Err(overflow("part does not fit the canvas"));
    }
    l.fit_box_to_contour();
    l.dimensions(spec.dim_count, spec.text_tokens)?;
    let (w, h) = spec.size();
    let canvas = render_manifest(w, h, spec.stroke_width, &l.prims);
    Ok(Drawing {
        spec: spec.clone(),
        drawing: canvas.to_gray()?,
        ground_truth: canvas.to_color()?,
        manifest: l.prims,
    })
}

/// Samples a spec for `seed` and generates it, dropping dimensions and then holes
/// until it fits.
pub fn generate_seeded(seed: u64) -> Result<Drawing> {
    let sampled = DrawingSpec::sample(seed);
    let mut last = None;
    for holes in (0..=sampled.hole_count).rev() {
        for dims in (0..=sampled.dim_count).rev() {
            let spec = DrawingSpec {
                hole_count: holes,
                dim_count: dims,
                text_tokens: sampled.text_tokens.min(dims),
                ..sampled.clone()
            };
            match generate(&spec) {
                Err(e @ Error::GeometryOverflow(_)) => last = Some(e),
                other => return other,
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub seed: u64,
    pub spec: DrawingSpec,
    pub drawing: String,
    pub ground_truth: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub base_seed: u64,
    pub rows: Vec<IndexRow>,
}

pub fn drawing_file_name(i: usize) -> String {
    format!("{i:04}_draw.png")
}

pub fn ground_truth_file_name(i: usize) -> String {
    format!("{i:04}_gt.png")
}

/// Writes `count` drawing and ground-truth pairs for seeds `base_seed..` plus an index.
pub fn generate_corpus(count: usize, base_seed: u64, out_dir: &Path) -> Result<CorpusIndex> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut index = CorpusIndex {
        base_seed,
        rows: Vec::with_capacity(count),
    };
    for i in 0..count {
        let seed = base_seed + i as u64;
        let d = generate_seeded(seed)?;
        let (dn, gn) = (drawing_file_name(i), ground_truth_file_name(i));
        d.drawing.save_png(&out_dir.join(&dn))?;
        d.ground_truth.save_png(&out_dir.join(&gn))?;
        index.rows.push(IndexRow {
            seed,
            spec: d.spec,
            drawing: dn,
            ground_truth: gn,
        });
    }
    let json = serde_json::to_string_pretty(&index)?;
    crate::io::write_atomic(&out_dir.join(INDEX_FILE), json.as_bytes())?;
    Ok(index)
}

pub fn load_index(dir: &Path) -> Result<CorpusIndex> {
    let path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_distances() {
        let s = Shape::Seg([0.0, 0.0], [10.0, 0.0]);
        assert_eq!(shape_dist(s, Shape::Seg([5.0, -1.0], [5.0, 1.0])), 0.0);
        assert!((shape_dist(s, Shape::Seg([12.0, 0.0], [20.0, 0.0])) - 2.0).abs() < 1e-12);
        assert_eq!(shape_dist(s, Shape::Rect([2.0, -1.0], [3.0, 1.0])), 0.0);
        assert!((shape_dist(Shape::Rect([0.0, 0.0], [1.0, 1.0]), Shape::Rect([4.0, 5.0], [6.0, 6.0])) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_specs_generate() {
        for seed in 0..60 {
            let d = generate_seeded(seed).unwrap();
            assert!(d.spec.dim_count >= 2, "seed {seed} kept only {} dims", d.spec.dim_count);
        }
    }

    #[test]
    fn crowded_spec_overflows() {
        let spec = DrawingSpec {
            seed: 1,
            canvas: 1024,
            template: Template::FlangedDisc,
            hole_count: 40,
            dim_count: 2,
            text_tokens: 2,
            stroke_width: 3.0,
        };
        assert!(matches!(generate(&spec), Err(Error::GeometryOverflow(_))));
        let spec = DrawingSpec { template: Template::RectPlate, hole_count: 0, dim_count: 30, text_tokens: 0, ..spec };
        assert!(matches!(generate(&spec), Err(Error::GeometryOverflow(_))));
    }
}
