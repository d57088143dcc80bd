//! Boundary tracing of binary masks into closed outlines.
//!
//! Three stages:
//!
//! 1. Decompose the mask into closed lattice paths along pixel edges, filled
//!    side on the right. Each traced region is XOR-ed out of a working copy,
//!    so holes appear as regions of their own; ambiguous diagonal junctions
//!    are resolved by a turn policy.
//! 2. Replace each lattice path by a minimal polygon whose chords never move a
//!    pixel center from one side of the boundary to the other, so the
//!    polygons rasterize back to the mask exactly.
//! 3. Optionally smooth polygon corners into cubic curves (lossy).

use super::{Orientation, Outline, Point, Segment};

/// Row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize, "mask size mismatch");
        Self { width, height, bits }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let bits = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside mask");
        self.bits[(y * self.width + x) as usize] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Signed lookup; anything outside the mask is unset.
    fn at(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && self.get(x as u32, y as u32)
    }
}

/// How to resolve a lattice corner where two filled pixels touch diagonally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TurnPolicy {
    /// Join toward whichever color is locally rarer.
    #[default]
    Minority,
    /// Always connect the filled pixels.
    Connect,
    /// Always keep them separate.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub turn_policy: TurnPolicy,
    /// Replace polygon corners by cubic curves. Breaks pixel exactness.
    pub smooth: bool,
    /// Corner threshold for smoothing; larger values give rounder shapes.
    pub alpha_max: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { turn_policy: TurnPolicy::Minority, smooth: false, alpha_max: 1.0 }
    }
}

/// A traced closed path.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedPath {
    pub outline: Outline,
    /// Clockwise for outer boundaries, counterclockwise for holes.
    pub orientation: Orientation,
}

type Lattice = (i64, i64);

/// Traces every boundary of `mask`.
///
/// Paths come out in scan order of their top-left pixel. Filling all of them
/// together with the even-odd rule at pixel centers reproduces the mask
/// (unless smoothing is on).
pub fn trace_mask(mask: &Mask, options: &TraceOptions) -> Vec<TracedPath> {
    decompose(mask, options.turn_policy)
        .into_iter()
        .map(|(points, outer)| {
            let polygon = optimal_polygon(&points);
            let mut vertices: Vec<Point> = polygon.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();
            if !outer {
                vertices[1..].reverse();
            }
            let outline = if options.smooth { smooth(&vertices, options.alpha_max) } else { Outline::polygon(&vertices) };
            let orientation = if outer { Orientation::Clockwise } else { Orientation::Counterclockwise };
            TracedPath { outline, orientation }
        })
        .collect()
}

/// Stage 1: closed lattice paths, each with a flag telling outer from hole.
fn decompose(mask: &Mask, policy: TurnPolicy) -> Vec<(Vec<Lattice>, bool)> {
    let mut work = mask.clone();
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut paths = Vec::new();
    let mut scan = 0i64;
    while let Some(start) = (scan..w * h).find(|&i| work.bits[i as usize]) {
        scan = start;
        let (x0, y0) = (start % w, start / w);
        let outer = mask.at(x0, y0);
        let points = walk(&work, (x0, y0), policy);
        xor_interior(&mut work, &points);
        paths.push((points, outer));
    }
    paths
}

fn walk(work: &Mask, start: Lattice, policy: TurnPolicy) -> Vec<Lattice> {
    let (mut x, mut y) = start;
    let (mut dx, mut dy) = (1i64, 0i64);
    let mut points = Vec::new();
    loop {
        points.push((x, y));
        x += dx;
        y += dy;
        if (x, y) == start {
            return points;
        }
        // Right-hand normal in y-down coordinates.
        let (rx, ry) = (-dy, dx);
        let ahead_right = work.at((2 * x + dx + rx).div_euclid(2), (2 * y + dy + ry).div_euclid(2));
        let ahead_left = work.at((2 * x + dx - rx).div_euclid(2), (2 * y + dy - ry).div_euclid(2));
        let turn_left = match (ahead_left, ahead_right) {
            (true, true) => Some(true),
            (false, false) => Some(false),
            (false, true) => None,
            (true, false) => Some(match policy {
                TurnPolicy::Connect => true,
                TurnPolicy::Separate => false,
                TurnPolicy::Minority => !filled_majority(work, x, y),
            }),
        };
        match turn_left {
            Some(true) => (dx, dy) = (dy, -dx),
            Some(false) => (dx, dy) = (-dy, dx),
            None => {}
        }
    }
}

/// Whether filled pixels dominate growing square rings around corner `(x, y)`.
fn filled_majority(work: &Mask, x: i64, y: i64) -> bool {
    for i in 2..5i64 {
        let mut ct = 0i64;
        for a in (-i + 1)..=(i - 1) {
            for (px, py) in [(x + a, y + i - 1), (x + i - 1, y + a - 1), (x + a - 1, y - i), (x - i, y + a)] {
                ct += if work.at(px, py) { 1 } else { -1 };
            }
        }
        if ct > 0 {
            return true;
        }
        if ct < 0 {
            return false;
        }
    }
    false
}

/// Flips every pixel whose center lies inside the closed lattice path.
fn xor_interior(work: &mut Mask, points: &[Lattice]) {
    let n = points.len();
    let x_ref = points[0].0;
    for i in 0..n {
        let (ax, ay) = points[i];
        let (bx, by) = points[(i + 1) % n];
        if ax != bx {
            continue;
        }
        let row = ay.min(by);
        let (lo, hi) = (ax.min(x_ref), ax.max(x_ref));
        for px in lo..hi {
            let idx = (row * work.width as i64 + px) as usize;
            work.bits[idx] = !work.bits[idx];
        }
    }
}

fn dir_index(d: Lattice) -> usize {
    match d {
        (1, 0) => 0,
        (0, 1) => 1,
        (-1, 0) => 2,
        _ => 3,
    }
}

/// Whether the chord from `points[i]` over `k` steps keeps every pixel
/// center on the same side as the lattice path does.
///
/// Each horizontal step must sit within half a pixel, at its column center,
/// of the chord; each vertical step likewise within half a pixel at its row
/// center. All arithmetic is exact in integers.
fn chord_is_exact(points: &[Lattice], i: usize, k: usize) -> bool {
    let n = points.len();
    let (xi, yi) = points[i];
    let (xj, yj) = points[(i + k) % n];
    let (dx, dy) = (xj - xi, yj - yi);
    for m in 0..k {
        let (ax, ay) = points[(i + m) % n];
        let (bx, by) = points[(i + m + 1) % n];
        if ay == by {
            if dx == 0 {
                return false;
            }
            // Chord height at column center c: yi + (c - xi) * dy / dx, scaled by 2*dx.
            let c2 = 2 * ax.min(bx) + 1;
            let num = 2 * yi * dx + (c2 - 2 * xi) * dy;
            if (num - 2 * ay * dx).abs() >= dx.abs() {
                return false;
            }
        } else {
            if dy == 0 {
                return false;
            }
            let r2 = 2 * ay.min(by) + 1;
            let num = 2 * xi * dy + (r2 - 2 * yi) * dx;
            if (num - 2 * ax * dy).abs() >= dy.abs() {
                return false;
            }
        }
    }
    true
}

/// Stage 2: fewest-vertex polygon through lattice points with exact chords.
fn optimal_polygon(path: &[Lattice]) -> Vec<Lattice> {
    let n = path.len();
    let step = |i: usize| {
        let (a, b) = (path[i % n], path[(i + 1) % n]);
        (b.0 - a.0, b.1 - a.1)
    };
    // Start at a corner so straight boundaries keep their true vertices.
    let s = (0..n).find(|&i| step(i + n - 1) != step(i)).unwrap_or(0);
    let pts: Vec<Lattice> = (0..n).map(|i| path[(s + i) % n]).collect();
    let step = |i: usize| {
        let (a, b) = (pts[i % n], pts[(i + 1) % n]);
        (b.0 - a.0, b.1 - a.1)
    };

    let mut best = vec![(usize::MAX, f64::INFINITY); n + 1];
    let mut prev = vec![0usize; n + 1];
    best[0] = (0, 0.0);
    for i in 0..n {
        if best[i].0 == usize::MAX {
            continue;
        }
        let mut seen = [false; 4];
        let mut distinct = 0;
        // Directions that already completed a run of two or more steps.
        let mut long_run = [false; 4];
        let mut run_len = 0usize;
        let mut last_dir = usize::MAX;
        let first_dir = dir_index(step(i));
        for k in 1..=(n - i) {
            let d = dir_index(step(i + k - 1));
            if !seen[d] {
                seen[d] = true;
                distinct += 1;
                if distinct > 2 {
                    break;
                }
            }
            if d == last_dir {
                run_len += 1;
            } else {
                if last_dir != usize::MAX && run_len >= 2 {
                    long_run[last_dir] = true;
                }
                last_dir = d;
                run_len = 1;
            }
            // The minor direction of an exact chord only ever makes single
            // steps, so once both directions made longer runs we are done.
            if long_run.iter().filter(|&&b| b).count() >= 2 {
                break;
            }
            // Exact chords begin and end on steps of the same direction.
            let valid = distinct == 1 || (d == first_dir && chord_is_exact(&pts, i, k));
            if !valid {
                continue;
            }
            let cost = best[i].0 + 1;
            let pen = best[i].1 + penalty(&pts, i, k);
            let j = i + k;
            if cost < best[j].0 || (cost == best[j].0 && pen < best[j].1) {
                best[j] = (cost, pen);
                prev[j] = i;
            }
        }
    }

    let mut out = Vec::new();
    let mut j = n;
    while j > 0 {
        j = prev[j];
        out.push(pts[j]);
    }
    out.reverse();
    out
}

/// Sum of squared distances of the skipped points to the chord.
fn penalty(points: &[Lattice], i: usize, k: usize) -> f64 {
    let n = points.len();
    let (xi, yi) = points[i];
    let (xj, yj) = points[(i + k) % n];
    let (dx, dy) = ((xj - xi) as f64, (yj - yi) as f64);
    let len2 = dx * dx + dy * dy;
    (1..k)
        .map(|m| {
            let (px, py) = points[(i + m) % n];
            let cross = dx * (py - yi) as f64 - dy * (px - xi) as f64;
            cross * cross / len2
        })
        .sum()
}

/// Stage 3: corners become curves unless they are sharp.
fn smooth(vertices: &[Point], alpha_max: f64) -> Outline {
    let n = vertices.len();
    if n < 3 {
        return Outline::polygon(vertices);
    }
    let mid = |a: Point, b: Point| Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    let lerp = |t: f64, a: Point, b: Point| Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
    let start = mid(vertices[n - 1], vertices[0]);
    let mut segments = Vec::with_capacity(2 * n);
    for j in 0..n {
        let vi = vertices[(j + n - 1) % n];
        let vj = vertices[j];
        let vk = vertices[(j + 1) % n];
        let end = mid(vj, vk);
        let alpha = corner_alpha(vi, vj, vk);
        if alpha >= alpha_max {
            segments.push(Segment::Line(vj));
            segments.push(Segment::Line(end));
        } else {
            let a = alpha.clamp(0.55, 1.0);
            let t = 0.5 + 0.5 * a;
            segments.push(Segment::Cubic(lerp(t, vi, vj), lerp(t, vk, vj), end));
        }
    }
    Outline { start, segments }
}

fn corner_alpha(pi: Point, pj: Point, pk: Point) -> f64 {
    let sign = |v: f64| (v > 0.0) as i32 as f64 - (v < 0.0) as i32 as f64;
    let (ry, rx) = (sign(pk.x - pi.x), -sign(pk.y - pi.y));
    let denom = ry * (pk.x - pi.x) - rx * (pk.y - pi.y);
    if denom == 0.0 {
        return 4.0 / 3.0;
    }
    let area = (pj.x - pi.x) * (pk.y - pi.y) - (pk.x - pi.x) * (pj.y - pi.y);
    let dd = (area / denom).abs();
    let alpha = if dd > 1.0 { 1.0 - 1.0 / dd } else { 0.0 };
    alpha / 0.75
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Even-odd at pixel centers by ray casting, independent of the tracer.
    fn rasterize(paths: &[TracedPath], w: u32, h: u32) -> Mask {
        Mask::from_fn(w, h, |x, y| {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut inside = false;
            for p in paths {
                let v = p.outline.vertices().unwrap();
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    if (a.y > cy) != (b.y > cy) {
                        let t = (cy - a.y) / (b.y - a.y);
                        if a.x + t * (b.x - a.x) > cx {
                            inside = !inside;
                        }
                    }
                }
            }
            inside
        })
    }

    fn from_rows(rows: &[&str]) -> Mask {
        Mask::from_fn(rows[0].len() as u32, rows.len() as u32, |x, y| rows[y as usize].as_bytes()[x as usize] == b'#')
    }

    fn roundtrip(m: &Mask) -> Vec<TracedPath> {
        let paths = trace_mask(m, &TraceOptions::default());
        assert_eq!(&rasterize(&paths, m.width(), m.height()), m);
        paths
    }

    #[test]
    fn rectangle_is_four_vertices() {
        let m = Mask::from_fn(10, 8, |x, y| (2..7).contains(&x) && (1..5).contains(&y));
        let paths = roundtrip(&m);
        assert_eq!(paths.len(), 1);
        let v = paths[0].outline.vertices().unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(paths[0].orientation, Orientation::Clockwise);
        assert_eq!(paths[0].outline.signed_area(), 20.0);
    }

    #[test]
    fn ring_has_counterclockwise_hole() {
        let m = from_rows(&["#####", "#...#", "#...#", "#####"]);
        let paths = roundtrip(&m);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[1].orientation, Orientation::Counterclockwise);
        assert!(paths[1].outline.signed_area() < 0.0);
    }

    #[test]
    fn l_shape_has_six_vertices() {
        let m = from_rows(&["#...", "#...", "####"]);
        let paths = roundtrip(&m);
        assert_eq!(paths[0].outline.vertices().unwrap().len(), 6);
    }

    #[test]
    fn diagonal_pixels_roundtrip_under_every_policy() {
        let m = from_rows(&["#..#", ".##.", ".##.", "#..#"]);
        for turn_policy in [TurnPolicy::Minority, TurnPolicy::Connect, TurnPolicy::Separate] {
            let paths = trace_mask(&m, &TraceOptions { turn_policy, ..Default::default() });
            assert_eq!(rasterize(&paths, 4, 4), m, "{turn_policy:?}");
        }
    }

    #[test]
    fn staircase_gets_diagonal_chords() {
        let m = Mask::from_fn(12, 12, |x, y| x <= y);
        let paths = roundtrip(&m);
        assert!(paths[0].outline.vertices().unwrap().len() < 24);
    }

    #[test]
    fn empty_and_full_masks() {
        assert!(trace_mask(&Mask::new(3, 3), &TraceOptions::default()).is_empty());
        let full = Mask::from_fn(3, 2, |_, _| true);
        assert_eq!(roundtrip(&full).len(), 1);
    }

    #[test]
    fn chord_exactness_matches_center_counting() {
        // Brute force: a chord is exact iff no pixel center lies strictly
        // between it and the lattice path it replaces.
        let m = Mask::from_fn(9, 7, |x, y| (x * 3 + y * 5) % 7 < 4 && x > 0 && y > 0 && x < 8 && y < 6);
        for (points, _) in decompose(&m, TurnPolicy::Minority) {
            let n = points.len();
            for i in 0..n {
                for k in 1..n.min(12) {
                    let mut poly: Vec<Point> =
                        (0..=k).map(|m| points[(i + m) % n]).map(|(x, y)| Point::new(x as f64, y as f64)).collect();
                    poly.dedup();
                    let mut centers_between = 0;
                    for py in -1..8 {
                        for px in -1..10 {
                            let (cx, cy) = (px as f64 + 0.5, py as f64 + 0.5);
                            let mut inside = false;
                            for e in 0..poly.len() {
                                let (a, b) = (poly[e], poly[(e + 1) % poly.len()]);
                                if (a.y > cy) != (b.y > cy) && a.x + (cy - a.y) / (b.y - a.y) * (b.x - a.x) > cx {
                                    inside = !inside;
                                }
                            }
                            centers_between += inside as usize;
                        }
                    }
                    let exact = chord_is_exact(&points, i, k);
                    if exact {
                        assert_eq!(centers_between, 0, "chord {i}+{k} claims exact");
                    }
                }
            }
        }
    }
}
