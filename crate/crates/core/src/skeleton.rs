//! Thinning of ink masks down to one-pixel-wide trajectories, plus spur removal.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::raster::{BinaryRaster, NEIGHBORS_8};

/// Default branch length (pixels) below which junction-to-end branches are pruned.
pub const DEFAULT_MAX_SPUR_LEN: usize = 3;

/// Thinning algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThinningMethod {
    #[default]
    #[serde(rename = "zhang-suen")]
    ZhangSuen,
}

impl ThinningMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThinningMethod::ZhangSuen => "zhang-suen",
        }
    }
}

impl FromStr for ThinningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zhang-suen" => Ok(ThinningMethod::ZhangSuen),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Thins `mask` to a one-pixel-wide skeleton.
///
/// The output is a fixed point of the thinning pass, contains no fully inked 2x2
/// window and keeps one output component per 8-connected input component.
pub fn skeletonize(mask: &BinaryRaster, method: ThinningMethod) -> BinaryRaster {
    match method {
        ThinningMethod::ZhangSuen => {
            let mut out = mask.clone();
            loop {
                zhang_suen(&mut out);
                let blocks = clear_full_blocks(&mut out);
                if !clear_staircases(&mut out) && !blocks {
                    break;
                }
            }
            restore_vanished(mask, &mut out);
            out
        }
    }
}

/// Looks up a thinning method by name and runs it.
pub fn skeletonize_named(mask: &BinaryRaster, method: &str) -> Result<BinaryRaster, Error> {
    Ok(skeletonize(mask, method.parse()?))
}

// P2..P9 in Zhang-Suen numbering: N, NE, E, SE, S, SW, W, NW.
const ZS_RING: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn ring(m: &BinaryRaster, x: i64, y: i64) -> [bool; 8] {
    let mut r = [false; 8];
    for (k, (dx, dy)) in ZS_RING.iter().enumerate() {
        r[k] = m.get(x + dx, y + dy);
    }
    r
}

/// Plain two-subiteration Zhang-Suen thinning, in place.
pub(crate) fn zhang_suen(m: &mut BinaryRaster) {
    let mut candidates: Vec<(u32, u32)> = m.ink().collect();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            doomed.clear();
            for &(x, y) in &candidates {
                if !m.get(x as i64, y as i64) {
                    continue;
                }
                let p = ring(m, x as i64, y as i64);
                let b = p.iter().filter(|v| **v).count();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                if a != 1 {
                    continue;
                }
                let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                let ok = if step == 0 {
                    !(p2 && p4 && p6) && !(p4 && p6 && p8)
                } else {
                    !(p2 && p4 && p8) && !(p2 && p6 && p8)
                };
                if ok {
                    doomed.push((x, y));
                }
            }
            for &(x, y) in &doomed {
                m.set(x, y, false);
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            break;
        }
        candidates.retain(|&(x, y)| m.get(x as i64, y as i64));
    }
}

/// Number of 8-connected foreground runs and 4-connected background runs around a
/// pixel; a pixel is simple (removable without changing topology) iff both are 1.
fn is_simple(m: &BinaryRaster, x: i64, y: i64) -> bool {
    let n: Vec<bool> = NEIGHBORS_8
        .iter()
        .map(|(dx, dy)| m.get(x + dx, y + dy))
        .collect();
    // even indices of NEIGHBORS_8 are the 4-neighbors (E, S, W, N)
    if !(0..8).step_by(2).any(|k| !n[k]) {
        return false;
    }
    // foreground 8-components among the neighbors
    let mut seen = [false; 8];
    let mut fg = 0;
    for s in 0..8 {
        if !n[s] || seen[s] {
            continue;
        }
        fg += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for j in 0..8 {
                if n[j] && !seen[j] && adjacent8(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    if fg != 1 {
        return false;
    }
    // background 4-components touching a 4-neighbor
    let mut seen = [false; 8];
    let mut bg = 0;
    for s in (0..8).step_by(2) {
        if n[s] || seen[s] {
            continue;
        }
        bg += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for j in 0..8 {
                if !n[j] && !seen[j] && adjacent4(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    bg == 1
}

fn adjacent8(i: usize, j: usize) -> bool {
    let (a, b) = (NEIGHBORS_8[i], NEIGHBORS_8[j]);
    (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1
}

fn adjacent4(i: usize, j: usize) -> bool {
    let (a, b) = (NEIGHBORS_8[i], NEIGHBORS_8[j]);
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

/// Deletes one simple, non-end pixel from each fully inked 2x2 window.
/// Returns whether anything was removed.
fn clear_full_blocks(m: &mut BinaryRaster) -> bool {
    let mut removed = false;
    let pts: Vec<(u32, u32)> = m.ink().collect();
    for (x, y) in pts {
        let (xi, yi) = (x as i64, y as i64);
        if !(m.get(xi, yi) && m.get(xi + 1, yi) && m.get(xi, yi + 1) && m.get(xi + 1, yi + 1)) {
            continue;
        }
        let block = [(xi, yi), (xi + 1, yi), (xi, yi + 1), (xi + 1, yi + 1)];
        let victim = block
            .iter()
            .copied()
            .filter(|&(px, py)| m.neighbor_count(px, py) >= 2 && is_simple(m, px, py))
            .max_by_key(|&(px, py)| m.neighbor_count(px, py));
        if let Some((px, py)) = victim {
            m.set(px as u32, py as u32, false);
            removed = true;
        }
    }
    removed
}

/// Deletes simple, non-end pixels whose ink includes two 4-neighbors at a right
/// angle. Zhang-Suen leaves such 4-connected staircases on diagonal strokes, where
/// every step pixel would otherwise read as a junction.
fn clear_staircases(m: &mut BinaryRaster) -> bool {
    let mut removed = false;
    let pts: Vec<(u32, u32)> = m.ink().collect();
    for (x, y) in pts {
        let (xi, yi) = (x as i64, y as i64);
        let r = ring(m, xi, yi);
        // N, E, S, W sit at even ring positions
        let corner = (0..4).any(|k| r[2 * k] && r[(2 * k + 2) % 8]);
        if corner && m.neighbor_count(xi, yi) >= 2 && is_simple(m, xi, yi) {
            m.set(x, y, false);
            removed = true;
        }
    }
    removed
}

/// Re-inserts one pixel for every input component that thinning erased completely.
fn restore_vanished(input: &BinaryRaster, out: &mut BinaryRaster) {
    let (labels, count) = input.label_components();
    if count == 0 {
        return;
    }
    let w = input.width() as usize;
    let mut alive = vec![false; count + 1];
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); count + 1];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = (i % w, i / w);
        if out.get(x as i64, y as i64) {
            alive[l as usize] = true;
        }
        let s = &mut sums[l as usize];
        s.0 += x as f64;
        s.1 += y as f64;
        s.2 += 1;
    }
    let mut best: Vec<Option<(f64, usize)>> = vec![None; count + 1];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 || alive[l as usize] {
            continue;
        }
        let s = sums[l as usize];
        let (cx, cy) = (s.0 / s.2 as f64, s.1 / s.2 as f64);
        let d = ((i % w) as f64 - cx).powi(2) + ((i / w) as f64 - cy).powi(2);
        let b = &mut best[l as usize];
        if b.is_none_or(|(bd, _)| d < bd) {
            *b = Some((d, i));
        }
    }
    for (_, i) in best.into_iter().flatten() {
        out.set((i % w) as u32, (i / w) as u32, true);
    }
}

/// Deletes junction-to-end branches of at most `max_spur_len` pixels.
///
/// A branch is walked from an end pixel while exactly one unvisited neighbor remains.
/// The pixel where the walk stops is also dropped when it has become a simple point,
/// so a stub hanging off the side of a line leaves no bump behind.
pub fn remove_spurs(skel: &BinaryRaster, max_spur_len: usize) -> BinaryRaster {
    let mut out = skel.clone();
    if max_spur_len == 0 {
        return out;
    }
    let mut spurs: Vec<(Vec<(i64, i64)>, (i64, i64))> = Vec::new();
    for (x, y) in skel.ink() {
        let (x, y) = (x as i64, y as i64);
        if skel.neighbor_count(x, y) != 1 {
            continue;
        }
        let mut branch: Vec<(i64, i64)> = Vec::new();
        let mut cur = (x, y);
        let stop = loop {
            let onward: Vec<(i64, i64)> = NEIGHBORS_8
                .iter()
                .map(|(dx, dy)| (cur.0 + dx, cur.1 + dy))
                .filter(|&p| skel.get(p.0, p.1) && !branch.contains(&p))
                .collect();
            match onward.len() {
                // ran out of pixels without meeting a junction: a short isolated stroke
                0 => break None,
                1 => {
                    branch.push(cur);
                    if branch.len() > max_spur_len {
                        break None;
                    }
                    cur = onward[0];
                }
                _ => break Some(cur),
            }
        };
        if let Some(stop) = stop {
            spurs.push((branch, stop));
        }
    }
    for (branch, _) in &spurs {
        for &(x, y) in branch {
            out.set(x as u32, y as u32, false);
        }
    }
    for (_, (sx, sy)) in &spurs {
        if out.get(*sx, *sy) && out.neighbor_count(*sx, *sy) >= 2 && is_simple(&out, *sx, *sy) {
            out.set(*sx as u32, *sy as u32, false);
        }
    }
    out
}
