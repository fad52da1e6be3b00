//! Polyline stroke font for dimension text.
//!
//! Glyphs live in a box of width [`ADVANCE`] minus spacing and height 1 with y pointing
//! down, so a glyph drawn at height `h` spans `h` pixels vertically.

use std::f64::consts::PI;

use crate::curvefit::Point;

/// Horizontal distance between glyph origins, in glyph heights.
pub const ADVANCE: f64 = 0.82;
/// Characters the font can draw.
pub const CHARSET: &str = "0123456789.±ØR";

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64) -> Vec<Point> {
    let steps = ((a1 - a0).abs() / (PI / 16.0)).ceil().max(2.0) as usize;
    (0..=steps)
        .map(|i| {
            let a = a0 + (a1 - a0) * i as f64 / steps as f64;
            [cx + rx * a.cos(), cy + ry * a.sin()]
        })
        .collect()
}

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> Vec<Point> {
    arc(cx, cy, rx, ry, 0.0, 2.0 * PI)
}

fn join(mut a: Vec<Point>, b: Vec<Point>) -> Vec<Point> {
    a.extend(b);
    a
}

/// Polylines of one glyph, or `None` for characters outside [`CHARSET`]. Space is empty.
pub fn glyph(c: char) -> Option<Vec<Vec<Point>>> {
    let d = PI / 180.0;
    Some(match c {
        ' ' => vec![],
        '0' => vec![ellipse(0.3, 0.5, 0.3, 0.5)],
        '1' => vec![vec![[0.1, 0.22], [0.32, 0.0], [0.32, 1.0]]],
        '2' => vec![join(
            arc(0.3, 0.28, 0.28, 0.28, 200.0 * d, 380.0 * d),
            vec![[0.0, 1.0], [0.6, 1.0]],
        )],
        '3' => vec![join(
            arc(0.3, 0.25, 0.26, 0.25, 200.0 * d, 450.0 * d),
            arc(0.3, 0.75, 0.3, 0.25, 270.0 * d, 520.0 * d),
        )],
        '4' => vec![vec![[0.45, 1.0], [0.45, 0.0], [0.0, 0.68], [0.6, 0.68]]],
        '5' => vec![join(
            vec![[0.55, 0.0], [0.08, 0.0], [0.04, 0.45]],
            arc(0.3, 0.68, 0.3, 0.32, 225.0 * d, 495.0 * d),
        )],
        '6' => vec![
            vec![[0.52, 0.0], [0.02, 0.66]],
            ellipse(0.3, 0.7, 0.29, 0.3),
        ],
        '7' => vec![vec![[0.0, 0.0], [0.6, 0.0], [0.18, 1.0]]],
        '8' => vec![ellipse(0.3, 0.24, 0.24, 0.24), ellipse(0.3, 0.73, 0.3, 0.27)],
        '9' => vec![ellipse(0.3, 0.3, 0.29, 0.3), vec![[0.58, 0.34], [0.08, 1.0]]],
        '.' => vec![vec![[0.3, 0.92], [0.3, 1.0]]],
        '±' => vec![
            vec![[0.3, 0.08], [0.3, 0.62]],
            vec![[0.03, 0.35], [0.57, 0.35]],
            vec![[0.03, 0.88], [0.57, 0.88]],
        ],
        'Ø' => vec![ellipse(0.3, 0.5, 0.28, 0.38), vec![[0.0, 1.0], [0.6, 0.0]]],
        'R' => vec![
            join(
                vec![[0.0, 1.0], [0.0, 0.0], [0.3, 0.0]],
                join(arc(0.3, 0.25, 0.27, 0.25, 270.0 * d, 450.0 * d), vec![[0.0, 0.5]]),
            ),
            vec![[0.28, 0.5], [0.6, 1.0]],
        ],
        _ => return None,
    })
}

/// Width of a string in glyph heights (last glyph without trailing space).
pub fn text_width(s: &str) -> f64 {
    let n = s.chars().count();
    if n == 0 {
        0.0
    } else {
        (n - 1) as f64 * ADVANCE + 0.6
    }
}

/// Polylines of `s` at pixel height `h`, with the top-left of the text box at the
/// origin before rotating by `angle` radians about it.
pub fn layout_text(s: &str, origin: Point, h: f64, angle: f64) -> Option<Vec<Vec<Point>>> {
    let (sin, cos) = angle.sin_cos();
    let mut out = Vec::new();
    for (i, c) in s.chars().enumerate() {
        let dx = i as f64 * ADVANCE;
        for line in glyph(c)? {
            out.push(
                line.iter()
                    .map(|p| {
                        let (u, v) = ((p[0] + dx) * h, p[1] * h);
                        [origin[0] + u * cos - v * sin, origin[1] + u * sin + v * cos]
                    })
                    .collect(),
            );
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charset_glyphs_stay_in_box() {
        for c in CHARSET.chars() {
            let g = glyph(c).unwrap();
            assert!(!g.is_empty(), "{c}");
            for p in g.iter().flatten() {
                assert!((-1e-9..=0.6 + 1e-9).contains(&p[0]), "{c} {p:?}");
                assert!((-1e-9..=1.0 + 1e-9).contains(&p[1]), "{c} {p:?}");
            }
        }
        assert!(glyph('x').is_none());
    }

    #[test]
    fn rotated_text_turns_about_origin() {
        let flat = layout_text("7", [10.0, 10.0], 20.0, 0.0).unwrap();
        let up = layout_text("7", [10.0, 10.0], 20.0, -PI / 2.0).unwrap();
        for (a, b) in flat[0].iter().zip(&up[0]) {
            let (u, v) = (a[0] - 10.0, a[1] - 10.0);
            assert!((b[0] - (10.0 + v)).abs() < 1e-9 && (b[1] - (10.0 - u)).abs() < 1e-9);
        }
        assert!((text_width("12.5") - (3.0 * ADVANCE + 0.6)).abs() < 1e-12);
    }
}
