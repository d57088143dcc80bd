//! Dominant-color palettes by k-means in RGB space.
//!
//! Lloyd iterations run over the distinct colors of the image weighted by
//! their pixel counts, which is exact and much cheaper than iterating pixels.
//! Seeding is farthest-point over a fixed-seed pixel sample, so results are
//! deterministic.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::Mask;
use crate::model::Color;
use crate::raster::Raster;

/// Upper bound on palette size.
pub const K_MAX: usize = 8;
/// Default per-channel quantization MSE accepted by [`select_k`].
pub const TAU_MSE: f64 = 16.0;
/// Iteration cap for Lloyd's algorithm.
pub const MAX_ITERATIONS: usize = 64;
/// Stop once no center moves more than this (per channel).
pub const CONVERGENCE_EPS: f64 = 1e-3;
/// Pixels sampled for seeding.
const SEED_SAMPLE: usize = 1024;
const SEED: u64 = 0x5eed_c0de;

/// Palette and per-pixel assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    pub colors: Vec<Color>,
    /// Palette index per pixel, row-major.
    pub assignments: Vec<u8>,
    pub width: u32,
    pub height: u32,
}

type Rgb = [u8; 3];

fn rgb(c: Color) -> Rgb {
    [c.r, c.g, c.b]
}

fn dist2_u(a: Rgb, b: Rgb) -> u32 {
    a.iter().zip(b).map(|(&x, y)| (x as i32 - y as i32).pow(2) as u32).sum()
}

fn dist2_f(a: Rgb, c: &[f64; 3]) -> f64 {
    a.iter().zip(c).map(|(&x, y)| (x as f64 - y).powi(2)).sum()
}

/// Index of the nearest color, lowest index on ties.
pub fn nearest(colors: &[Color], c: Color) -> usize {
    let p = rgb(c);
    let mut best = (u32::MAX, 0);
    for (i, &q) in colors.iter().enumerate() {
        let d = dist2_u(p, rgb(q));
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

impl Palette {
    /// Pixel count per palette index.
    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.colors.len()];
        for &a in &self.assignments {
            sizes[a as usize] += 1;
        }
        sizes
    }

    pub fn mask(&self, index: usize) -> Mask {
        Mask::from_bits(self.width, self.height, self.assignments.iter().map(|&a| a as usize == index).collect())
    }

    /// The image with every pixel replaced by its opaque palette color.
    pub fn quantized(&self) -> Raster {
        let pixels = self.assignments.iter().flat_map(|&a| self.colors[a as usize].to_array()).collect();
        Raster::from_rgba(self.width, self.height, pixels).expect("palette matches its raster size")
    }

    /// Mean squared RGB error per channel against `img`.
    pub fn mse(&self, img: &Raster) -> f64 {
        let n = self.assignments.len().max(1) as f64;
        let total: u64 = img
            .colors()
            .zip(&self.assignments)
            .map(|(c, &a)| dist2_u(rgb(c), rgb(self.colors[a as usize])) as u64)
            .sum();
        total as f64 / (3.0 * n)
    }
}

fn histogram(img: &Raster) -> Vec<(Rgb, u64)> {
    let mut counts: HashMap<Rgb, u64> = HashMap::new();
    for c in img.colors() {
        *counts.entry(rgb(c)).or_default() += 1;
    }
    let mut hist: Vec<_> = counts.into_iter().collect();
    hist.sort_unstable();
    hist
}

fn seed_centers(img: &Raster, hist: &[(Rgb, u64)], k: usize) -> Vec<[f64; 3]> {
    let n = (img.width() * img.height()) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut picks: Vec<usize> = sample(&mut rng, n, SEED_SAMPLE.min(n)).into_vec();
    picks.sort_unstable();
    let samples: Vec<Rgb> = picks
        .iter()
        .map(|&i| rgb(img.get((i % img.width() as usize) as u32, (i / img.width() as usize) as u32)))
        .collect();

    // Most frequent sampled color first.
    let mut freq: HashMap<Rgb, usize> = HashMap::new();
    for &s in &samples {
        *freq.entry(s).or_default() += 1;
    }
    let first = freq.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(c, _)| *c).expect("non-empty sample");
    let mut centers = vec![first];

    let all: Vec<Rgb> = hist.iter().map(|(c, _)| *c).collect();
    while centers.len() < k {
        let farthest = |pool: &[Rgb]| -> Option<(u32, Rgb)> {
            let mut best: Option<(u32, Rgb)> = None;
            for &p in pool {
                let d = centers.iter().map(|&c| dist2_u(p, c)).min().unwrap_or(u32::MAX);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, p));
                }
            }
            best.filter(|(d, _)| *d > 0)
        };
        match farthest(&samples).or_else(|| farthest(&all)) {
            Some((_, c)) => centers.push(c),
            None => break,
        }
    }
    centers.into_iter().map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]).collect()
}

fn lloyd(hist: &[(Rgb, u64)], mut centers: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![[0.0f64; 3]; centers.len()];
        let mut weights = vec![0u64; centers.len()];
        for &(c, count) in hist {
            let mut best = (f64::INFINITY, 0);
            for (i, center) in centers.iter().enumerate() {
                let d = dist2_f(c, center);
                if d < best.0 {
                    best = (d, i);
                }
            }
            let s = &mut sums[best.1];
            for ch in 0..3 {
                s[ch] += c[ch] as f64 * count as f64;
            }
            weights[best.1] += count;
        }
        let mut shift = 0.0f64;
        for (i, center) in centers.iter_mut().enumerate() {
            if weights[i] == 0 {
                continue;
            }
            for ch in 0..3 {
                let m = sums[i][ch] / weights[i] as f64;
                shift = shift.max((m - center[ch]).abs());
                center[ch] = m;
            }
        }
        if shift <= CONVERGENCE_EPS {
            break;
        }
    }
    centers
}

/// Clusters the image's RGB colors into at most `k` palette entries.
///
/// With no more than `k` distinct colors the palette is exactly those
/// colors. Palette entries are distinct and every entry owns at least one
/// pixel; each pixel is assigned its nearest entry.
pub fn kmeans_palette(img: &Raster, k: usize) -> Palette {
    assert!(!img.is_empty(), "kmeans_palette needs a non-empty image");
    let k = k.clamp(1, u8::MAX as usize);
    let hist = histogram(img);
    let candidates: Vec<Color> = if hist.len() <= k {
        hist.iter().map(|(c, _)| Color::rgb(c[0], c[1], c[2])).collect()
    } else {
        let centers = lloyd(&hist, seed_centers(img, &hist, k));
        let mut out: Vec<Color> = Vec::with_capacity(k);
        for c in centers {
            let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
            let color = Color::rgb(q(c[0]), q(c[1]), q(c[2]));
            if !out.contains(&color) {
                out.push(color);
            }
        }
        out
    };

    // Keep only entries that win at least one color, preserving order.
    let owner: Vec<usize> = hist.iter().map(|(c, _)| nearest(&candidates, Color::rgb(c[0], c[1], c[2]))).collect();
    let mut used = vec![false; candidates.len()];
    for &o in &owner {
        used[o] = true;
    }
    let colors: Vec<Color> = candidates.iter().zip(&used).filter(|(_, &u)| u).map(|(c, _)| *c).collect();

    let lookup: HashMap<Rgb, u8> = hist
        .iter()
        .map(|(c, _)| (*c, nearest(&colors, Color::rgb(c[0], c[1], c[2])) as u8))
        .collect();
    let assignments = img.colors().map(|c| lookup[&rgb(c)]).collect();
    Palette { colors, assignments, width: img.width(), height: img.height() }
}

/// Smallest k in `1..=k_max` whose quantization MSE is at most `tau_mse`.
pub fn select_k(img: &Raster, k_max: usize, tau_mse: f64) -> usize {
    for k in 1..k_max {
        if kmeans_palette(img, k).mse(img) <= tau_mse {
            return k;
        }
    }
    k_max.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_image_single_entry() {
        let img = Raster::filled(5, 4, Color::rgb(255, 0, 0));
        let p = kmeans_palette(&img, 1);
        assert_eq!(p.colors, vec![Color::rgb(255, 0, 0)]);
        assert!(p.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn two_tone_centers_are_exact() {
        let img = Raster::from_fn(8, 8, |x, _| if x < 4 { Color::BLACK } else { Color::WHITE });
        let p = kmeans_palette(&img, 2);
        let mut c = p.colors.clone();
        c.sort();
        assert_eq!(c, vec![Color::BLACK, Color::WHITE]);
        assert_eq!(p.mse(&img), 0.0);
    }

    #[test]
    fn k_above_distinct_count_returns_distinct_colors() {
        let img = Raster::from_fn(4, 4, |x, _| if x < 2 { Color::BLACK } else { Color::WHITE });
        assert_eq!(kmeans_palette(&img, 6).colors.len(), 2);
    }

    #[test]
    fn noisy_clusters_converge_to_means() {
        // Two clusters with symmetric +-2 noise around (50,50,50) and (200,200,200).
        let img = Raster::from_fn(16, 16, |x, y| {
            let base = if x < 8 { 50 } else { 200 };
            let n = if (x + y) % 2 == 0 { 2 } else { -2 };
            let v = (base + n) as u8;
            Color::rgb(v, v, v)
        });
        let mut p = kmeans_palette(&img, 2).colors;
        p.sort();
        assert_eq!(p, vec![Color::rgb(50, 50, 50), Color::rgb(200, 200, 200)]);
    }

    #[test]
    fn deterministic() {
        let img = Raster::from_fn(20, 20, |x, y| Color::rgb((x * 13 % 256) as u8, (y * 7) as u8, ((x * y) % 256) as u8));
        assert_eq!(kmeans_palette(&img, 5), kmeans_palette(&img, 5));
    }

    #[test]
    fn select_k_stops_at_exact_fit() {
        let img = Raster::from_fn(8, 8, |x, y| match (x < 4, y < 4) {
            (true, true) => Color::rgb(255, 0, 0),
            (false, true) => Color::rgb(0, 255, 0),
            (true, false) => Color::rgb(0, 0, 255),
            (false, false) => Color::WHITE,
        });
        assert_eq!(select_k(&img, K_MAX, 0.0), 4);
    }
}
