//! Hard-edged rasterization of strokes and filled triangles.
//!
//! Pixel centers sit at integer coordinates. A pixel is inked when its center lies
//! within half the stroke width of a stroked polyline, or inside a filled triangle.

use crate::curvefit::Point;
use crate::error::Result;
use crate::graph::ComponentClass;
use crate::raster::{ColorRaster, GrayRaster};

/// Class-per-pixel canvas; later draws overwrite earlier ones.
#[derive(Debug, Clone)]
pub struct Canvas {
    width: u32,
    height: u32,
    cells: Vec<Option<ComponentClass>>,
}

fn seg_dist2(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    qx * qx + qy * qy
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            cells: vec![None; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> Option<ComponentClass> {
        self.cells[y as usize * self.width as usize + x as usize]
    }

    /// Calls `f` for every in-bounds pixel center inside the box.
    fn each_in_box(&mut self, lo: Point, hi: Point, mut f: impl FnMut(Point) -> bool, class: ComponentClass) {
        let x0 = lo[0].floor().max(0.0) as i64;
        let y0 = lo[1].floor().max(0.0) as i64;
        let x1 = (hi[0].ceil() as i64).min(self.width as i64 - 1);
        let y1 = (hi[1].ceil() as i64).min(self.height as i64 - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if f([x as f64, y as f64]) {
                    self.cells[y as usize * self.width as usize + x as usize] = Some(class);
                }
            }
        }
    }

    pub fn stroke_segment(&mut self, a: Point, b: Point, width: f64, class: ComponentClass) {
        let r = width / 2.0;
        let r2 = r * r + 1e-9;
        let lo = [a[0].min(b[0]) - r, a[1].min(b[1]) - r];
        let hi = [a[0].max(b[0]) + r, a[1].max(b[1]) + r];
        self.each_in_box(lo, hi, |p| seg_dist2(p, a, b) <= r2, class);
    }

    pub fn stroke_polyline(&mut self, pts: &[Point], closed: bool, width: f64, class: ComponentClass) {
        for w in pts.windows(2) {
            self.stroke_segment(w[0], w[1], width, class);
        }
        if closed && pts.len() > 2 {
            self.stroke_segment(pts[pts.len() - 1], pts[0], width, class);
        }
        if pts.len() == 1 {
            self.stroke_segment(pts[0], pts[0], width, class);
        }
    }

    pub fn fill_triangle(&mut self, t: [Point; 3], class: ComponentClass) {
        let lo = [
            t.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
            t.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
        ];
        let hi = [
            t.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
            t.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
        ];
        let edge = |a: Point, b: Point, p: Point| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        self.each_in_box(
            lo,
            hi,
            |p| {
                let e = [edge(t[0], t[1], p), edge(t[1], t[2], p), edge(t[2], t[0], p)];
                e.iter().all(|&v| v >= -1e-9) || e.iter().all(|&v| v <= 1e-9)
            },
            class,
        );
    }

    /// Black ink on white.
    pub fn to_gray(&self) -> Result<GrayRaster> {
        let px = self.cells.iter().map(|c| if c.is_some() { 0 } else { 255 }).collect();
        GrayRaster::new(self.width, self.height, px)
    }

    /// Palette colors on white.
    pub fn to_color(&self) -> Result<ColorRaster> {
        let px = self
            .cells
            .iter()
            .map(|c| c.map_or([255, 255, 255], ComponentClass::color))
            .collect();
        ColorRaster::new(self.width, self.height, px)
    }
}
