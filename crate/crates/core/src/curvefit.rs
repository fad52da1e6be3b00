//! Endpoint-constrained cubic Bezier fitting, arc-length sampling and curvature.

use serde::{Deserialize, Serialize};

use crate::trace::Trace;

pub type Point = [f64; 2];

/// Uniform-parameter polyline resolution used for arc-length estimates.
pub const ARC_SEGMENTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    pub control: [Point; 4],
    #[serde(default)]
    pub source_trace: usize,
    /// Vertices at the two terminals; `None` for closed traces.
    #[serde(default)]
    pub vertex_ids: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoints {
    pub points: Vec<Point>,
    pub params: Vec<f64>,
}

/// Degree-3 Bernstein basis at `t`.
#[inline]
pub fn bernstein3(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t]
}

impl CubicBezier {
    pub fn new(control: [Point; 4]) -> Self {
        Self {
            control,
            source_trace: 0,
            vertex_ids: None,
        }
    }

    pub fn eval(&self, t: f64) -> Point {
        let b = bernstein3(t);
        let c = &self.control;
        [
            b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0] + b[3] * c[3][0],
            b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1] + b[3] * c[3][1],
        ]
    }

    pub fn deriv(&self, t: f64) -> Point {
        let c = &self.control;
        let s = 1.0 - t;
        let (a, b, d) = (3.0 * s * s, 6.0 * s * t, 3.0 * t * t);
        [
            a * (c[1][0] - c[0][0]) + b * (c[2][0] - c[1][0]) + d * (c[3][0] - c[2][0]),
            a * (c[1][1] - c[0][1]) + b * (c[2][1] - c[1][1]) + d * (c[3][1] - c[2][1]),
        ]
    }

    pub fn deriv2(&self, t: f64) -> Point {
        let c = &self.control;
        let s = 1.0 - t;
        let f = |k: usize| {
            6.0 * s * (c[2][k] - 2.0 * c[1][k] + c[0][k]) + 6.0 * t * (c[3][k] - 2.0 * c[2][k] + c[1][k])
        };
        [f(0), f(1)]
    }

    pub fn reversed(&self) -> Self {
        let c = self.control;
        Self {
            control: [c[3], c[2], c[1], c[0]],
            source_trace: self.source_trace,
            vertex_ids: self.vertex_ids.map(|[a, b]| [b, a]),
        }
    }

    /// Applies `p -> p * scale + offset` to every control point.
    pub fn transformed(&self, scale: f64, offset: Point) -> Self {
        let mut out = self.clone();
        for p in &mut out.control {
            p[0] = p[0] * scale + offset[0];
            p[1] = p[1] * scale + offset[1];
        }
        out
    }

    /// Cumulative arc length over a uniform-parameter polyline of [`ARC_SEGMENTS`] pieces.
    fn arc_table(&self) -> Vec<f64> {
        let mut table = Vec::with_capacity(ARC_SEGMENTS + 1);
        table.push(0.0);
        let mut prev = self.control[0];
        let mut acc = 0.0;
        for i in 1..=ARC_SEGMENTS {
            let p = self.eval(i as f64 / ARC_SEGMENTS as f64);
            acc += (p[0] - prev[0]).hypot(p[1] - prev[1]);
            table.push(acc);
            prev = p;
        }
        table
    }

    pub fn arc_length(&self) -> f64 {
        *self.arc_table().last().unwrap()
    }
}

/// Chord-length parameters in [0, 1] for an ordered pixel list.
pub fn chord_params(points: &[Point]) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; points.len()];
    for i in 1..points.len() {
        let (a, b) = (points[i - 1], points[i]);
        acc[i] = acc[i - 1] + (b[0] - a[0]).hypot(b[1] - a[1]);
    }
    let total = *acc.last()?;
    if total <= 0.0 {
        return None;
    }
    Some(acc.into_iter().map(|d| d / total).collect())
}

fn straight(p0: Point, p3: Point) -> [Point; 4] {
    let d = [p3[0] - p0[0], p3[1] - p0[1]];
    [
        p0,
        [p0[0] + d[0] / 3.0, p0[1] + d[1] / 3.0],
        [p0[0] + 2.0 * d[0] / 3.0, p0[1] + 2.0 * d[1] / 3.0],
        p3,
    ]
}

/// Least-squares cubic through `points` with the first and last control points pinned
/// to the first and last input points, parameterized by chord length.
pub fn fit_points(points: &[Point]) -> [Point; 4] {
    let n = points.len();
    assert!(n >= 2, "need at least two points");
    let (p0, p3) = (points[0], points[n - 1]);
    chord_params(points)
        .and_then(|ts| fit_with_params(points, &ts))
        .unwrap_or_else(|| straight(p0, p3))
}

/// Endpoint-constrained least squares for given curve parameters. `None` when the
/// normal matrix is singular.
pub fn fit_with_params(points: &[Point], ts: &[f64]) -> Option<[Point; 4]> {
    let n = points.len();
    let (p0, p3) = (points[0], points[n - 1]);
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    let mut r1 = [0.0; 2];
    let mut r2 = [0.0; 2];
    for (p, &t) in points.iter().zip(ts) {
        let b = bernstein3(t);
        a11 += b[1] * b[1];
        a12 += b[1] * b[2];
        a22 += b[2] * b[2];
        for k in 0..2 {
            let r = p[k] - b[0] * p0[k] - b[3] * p3[k];
            r1[k] += b[1] * r;
            r2[k] += b[2] * r;
        }
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 * a22).max(f64::MIN_POSITIVE) || !det.is_finite() {
        return None;
    }
    let mut x1 = [0.0; 2];
    let mut x2 = [0.0; 2];
    for k in 0..2 {
        x1[k] = (a22 * r1[k] - a12 * r2[k]) / det;
        x2[k] = (a11 * r2[k] - a12 * r1[k]) / det;
    }
    Some([p0, x1, x2, p3])
}

/// Fits one cubic to a pixel trace; see [`fit_points`].
pub fn fit_cubic_bezier(t: &Trace) -> CubicBezier {
    let pts: Vec<Point> = t.pixels.iter().map(|p| [p.0 as f64, p.1 as f64]).collect();
    CubicBezier::new(fit_points(&pts))
}

/// Root-mean-square distance between each point and the curve at its chord parameter.
pub fn fit_rms(curve: &CubicBezier, points: &[Point]) -> f64 {
    let ts = chord_params(points).unwrap_or_else(|| vec![0.0; points.len()]);
    let ss: f64 = points
        .iter()
        .zip(&ts)
        .map(|(p, &t)| {
            let q = curve.eval(t);
            (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
        })
        .sum();
    (ss / points.len() as f64).sqrt()
}

/// `n` points splitting the curve into `n - 1` pieces of equal arc length.
pub fn sample_equal_arclength(c: &CubicBezier, n: usize) -> SamplePoints {
    assert!(n >= 2, "need at least two samples");
    let table = c.arc_table();
    let total = *table.last().unwrap();
    let mut params = Vec::with_capacity(n);
    params.push(0.0);
    let mut seg = 0;
    for k in 1..n - 1 {
        let t = if total <= 0.0 {
            k as f64 / (n - 1) as f64
        } else {
            let target = total * k as f64 / (n - 1) as f64;
            while seg + 1 < ARC_SEGMENTS && table[seg + 1] < target {
                seg += 1;
            }
            let (l0, l1) = (table[seg], table[seg + 1]);
            let frac = if l1 > l0 { (target - l0) / (l1 - l0) } else { 0.0 };
            (seg as f64 + frac) / ARC_SEGMENTS as f64
        };
        params.push(t);
    }
    params.push(1.0);
    let mut points: Vec<Point> = params.iter().map(|&t| c.eval(t)).collect();
    points[0] = c.control[0];
    points[n - 1] = c.control[3];
    SamplePoints { points, params }
}

/// Unsigned plane-curve curvature; zero where the speed vanishes.
pub fn curvature_at(c: &CubicBezier, t: f64) -> f64 {
    let d1 = c.deriv(t);
    let d2 = c.deriv2(t);
    let speed2 = d1[0] * d1[0] + d1[1] * d1[1];
    if speed2.sqrt() < 1e-9 {
        return 0.0;
    }
    (d1[0] * d2[1] - d1[1] * d2[0]).abs() / speed2.powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::PixelKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KAPPA: f64 = 0.5522847498;

    fn quarter_circle(r: f64) -> CubicBezier {
        CubicBezier::new([[r, 0.0], [r, KAPPA * r], [KAPPA * r, r], [0.0, r]])
    }

    fn squared_residual(ctrl: &[Point; 4], pts: &[Point]) -> f64 {
        let ts = chord_params(pts).unwrap();
        let c = CubicBezier::new(*ctrl);
        pts.iter()
            .zip(&ts)
            .map(|(p, &t)| {
                let q = c.eval(t);
                (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
            })
            .sum()
    }

    #[test]
    fn collinear_trace_fits_exactly() {
        let t = Trace {
            pixels: (0..10).map(|x| (x, 0)).collect(),
            start_kind: PixelKind::End,
            end_kind: PixelKind::End,
            cyclic: false,
        };
        let c = fit_cubic_bezier(&t);
        for p in &c.control {
            assert!(p[1].abs() < 1e-12);
            assert!(p[0] >= -1e-9 && p[0] <= 9.0 + 1e-9);
        }
        let pts: Vec<Point> = (0..10).map(|x| [x as f64, 0.0]).collect();
        assert!(fit_rms(&c, &pts) < 1e-9);
        assert_eq!(c.eval(0.0), [0.0, 0.0]);
        assert_eq!(c.eval(1.0), [9.0, 0.0]);
    }

    #[test]
    fn recovers_known_curve() {
        let truth = [[0.0, 0.0], [2.0, 5.0], [8.0, 5.0], [10.0, 0.0]];
        // independent evaluator
        let eval = |t: f64| -> Point {
            let s = 1.0 - t;
            let w = [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t];
            [
                (0..4).map(|i| w[i] * truth[i][0]).sum(),
                (0..4).map(|i| w[i] * truth[i][1]).sum(),
            ]
        };
        let ts: Vec<f64> = (0..30).map(|k| k as f64 / 29.0).collect();
        let pts: Vec<Point> = ts.iter().map(|&t| eval(t)).collect();

        // with the generating parameters the solve is exact
        let exact = fit_with_params(&pts, &ts).unwrap();
        for (p, q) in exact.iter().zip(&truth) {
            assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
        }

        // chord-length parameters shift the inner controls, the curve stays close
        let fit = fit_points(&pts);
        assert!((fit[1][0] - 1.3233).abs() < 1e-3 && (fit[1][1] - 4.8589).abs() < 1e-3, "{fit:?}");
        assert!((fit[1][1] - 5.0).abs() < 0.2 && (fit[2][1] - 5.0).abs() < 0.2);
        assert!(fit_rms(&CubicBezier::new(fit), &pts) < 0.1);
    }

    #[test]
    fn four_points_interpolated() {
        let pts = [[0.0, 0.0], [1.0, 2.0], [3.0, 2.5], [4.0, 0.0]];
        let fit = CubicBezier::new(fit_points(&pts));
        assert!(fit_rms(&fit, &pts) < 1e-9);
    }

    #[test]
    fn coincident_points_fall_back_to_segment() {
        let pts = [[2.0, 2.0]; 5];
        let f = fit_points(&pts);
        assert_eq!(f, [[2.0, 2.0]; 4]);
    }

    #[test]
    fn fit_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = rng.gen_range(6..40);
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-0.05..0.05);
            let pts: Vec<Point> = (0..m)
                .map(|i| {
                    let x = i as f64;
                    [x, (a * x + b * x * x + rng.gen_range(-0.5..0.5)).round()]
                })
                .collect();
            let fit = fit_points(&pts);
            let base = squared_residual(&fit, &pts);
            for cp in 1..3 {
                for axis in 0..2 {
                    for d in [-0.1, 0.1] {
                        let mut q = fit;
                        q[cp][axis] += d;
                        assert!(squared_residual(&q, &pts) >= base - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn straight_samples() {
        let c = CubicBezier::new([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let s = sample_equal_arclength(&c, 4);
        for (p, e) in s.points.iter().zip([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]) {
            assert!((p[0] - e[0]).abs() < 1e-9 && (p[1] - e[1]).abs() < 1e-12);
        }
        let two = sample_equal_arclength(&quarter_circle(3.0), 2);
        assert_eq!(two.points, vec![[3.0, 0.0], [0.0, 3.0]]);
        assert_eq!(two.params, vec![0.0, 1.0]);
    }

    #[test]
    fn quarter_circle_equal_chords() {
        let c = quarter_circle(1.0);
        let s = sample_equal_arclength(&c, 5);
        // oracle: dense subdivision arc length between consecutive sample parameters
        let arc = |t0: f64, t1: f64| {
            let steps = 20000;
            let mut acc = 0.0;
            let mut prev = c.eval(t0);
            for i in 1..=steps {
                let p = c.eval(t0 + (t1 - t0) * i as f64 / steps as f64);
                acc += (p[0] - prev[0]).hypot(p[1] - prev[1]);
                prev = p;
            }
            acc
        };
        let pieces: Vec<f64> = s.params.windows(2).map(|w| arc(w[0], w[1])).collect();
        let mean = pieces.iter().sum::<f64>() / pieces.len() as f64;
        for p in &pieces {
            assert!((p - mean).abs() / mean < 0.005, "{pieces:?}");
        }
        let chords: Vec<f64> = s
            .points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .collect();
        let cm = chords.iter().sum::<f64>() / chords.len() as f64;
        assert!(chords.iter().all(|c| (c - cm).abs() / cm < 0.005));
        assert!(s.params.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reversed_samples_reverse() {
        let c = CubicBezier::new([[0.0, 0.0], [1.0, 4.0], [6.0, -2.0], [7.0, 3.0]]);
        let a = sample_equal_arclength(&c, 7).points;
        let mut b = sample_equal_arclength(&c.reversed(), 7).points;
        b.reverse();
        for (p, q) in a.iter().zip(&b) {
            assert!((p[0] - q[0]).abs() < 1e-6 && (p[1] - q[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn curvature_examples() {
        let line = CubicBezier::new([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        for t in [0.0, 0.3, 1.0] {
            assert!(curvature_at(&line, t).abs() < 1e-12);
        }
        let k = curvature_at(&quarter_circle(1.0), 0.5);
        assert!((k - 1.0).abs() < 0.02, "{k}");
        let dot = CubicBezier::new([[1.0, 1.0]; 4]);
        assert_eq!(curvature_at(&dot, 0.5), 0.0);
    }
}
