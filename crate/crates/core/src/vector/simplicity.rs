//! Gate deciding whether an image is flat enough to vectorize.

use serde::{Deserialize, Serialize};

use super::palette::{kmeans_palette, K_MAX};
use crate::raster::Raster;

/// Color distance (Euclidean RGB) under which a pixel counts as covered.
pub const TAU_COLOR: f64 = 12.0;
/// Minimum covered fraction for an image to be vectorized.
pub const SIMPLICITY_THRESHOLD: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Vectorize,
    KeepRaster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplicityScore {
    pub score: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplicityParams {
    pub k_max: usize,
    pub tau_color: f64,
    pub threshold: f64,
}

impl Default for SimplicityParams {
    fn default() -> Self {
        Self { k_max: K_MAX, tau_color: TAU_COLOR, threshold: SIMPLICITY_THRESHOLD }
    }
}

/// Scores `img` with the default constants.
pub fn assess_simplicity(img: &Raster) -> SimplicityScore {
    assess_simplicity_with(img, &SimplicityParams::default())
}

/// Fraction of pixels within `tau_color` of their nearest `k_max`-means center.
pub fn assess_simplicity_with(img: &Raster, params: &SimplicityParams) -> SimplicityScore {
    let palette = kmeans_palette(img, params.k_max);
    let limit = params.tau_color * params.tau_color;
    let covered = img
        .colors()
        .zip(&palette.assignments)
        .filter(|(c, &a)| {
            let p = palette.colors[a as usize];
            let d2: f64 = [(c.r, p.r), (c.g, p.g), (c.b, p.b)].iter().map(|&(u, v)| (u as f64 - v as f64).powi(2)).sum();
            d2 <= limit
        })
        .count();
    let score = covered as f64 / palette.assignments.len() as f64;
    let decision = if score >= params.threshold { Decision::Vectorize } else { Decision::KeepRaster };
    SimplicityScore { score, decision }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Color;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solid_image_is_simple() {
        let s = assess_simplicity(&Raster::filled(16, 16, Color::rgb(10, 200, 30)));
        assert_eq!(s.score, 1.0);
        assert_eq!(s.decision, Decision::Vectorize);
    }

    #[test]
    fn two_tone_is_simple() {
        let img = Raster::from_fn(16, 16, |x, _| if x < 8 { Color::BLACK } else { Color::WHITE });
        assert_eq!(assess_simplicity(&img).score, 1.0);
    }

    #[test]
    fn noise_is_kept_as_raster() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = Raster::from_fn(32, 32, |_, _| Color::rgb(rng.random(), rng.random(), rng.random()));
        let s = assess_simplicity(&img);
        assert_eq!(s.decision, Decision::KeepRaster);
        assert!(s.score < 0.1, "{}", s.score);
    }
}
