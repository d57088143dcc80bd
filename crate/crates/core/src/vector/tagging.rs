//! Short descriptive tags for images.

use super::palette::kmeans_palette;
use crate::model::Color;
use crate::raster::Raster;

/// Produces a short description of an image.
pub trait TaggingClient {
    fn tag(&self, img: &Raster) -> String;
}

/// Deterministic tagger: dominant color name plus an aspect label,
/// e.g. `"blue wide image"`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockTagger;

impl TaggingClient for MockTagger {
    fn tag(&self, img: &Raster) -> String {
        if img.is_empty() {
            return "empty image".into();
        }
        let palette = kmeans_palette(img, 3);
        let sizes = palette.region_sizes();
        let dominant = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
        let aspect = img.width() as f64 / img.height() as f64;
        let shape = if aspect > 1.2 {
            "wide"
        } else if aspect < 1.0 / 1.2 {
            "tall"
        } else {
            "square"
        };
        format!("{} {shape} image", color_name(palette.colors[dominant]))
    }
}

const NAMED: [(&str, [u8; 3]); 11] = [
    ("black", [0, 0, 0]),
    ("white", [255, 255, 255]),
    ("gray", [128, 128, 128]),
    ("red", [220, 30, 30]),
    ("orange", [245, 140, 20]),
    ("yellow", [240, 220, 40]),
    ("green", [40, 170, 60]),
    ("cyan", [40, 200, 220]),
    ("blue", [40, 70, 210]),
    ("purple", [130, 50, 180]),
    ("pink", [240, 140, 190]),
];

/// Nearest entry of a small fixed color vocabulary.
pub fn color_name(c: Color) -> &'static str {
    NAMED
        .iter()
        .min_by_key(|(_, p)| {
            (c.r as i32 - p[0] as i32).pow(2) + (c.g as i32 - p[1] as i32).pow(2) + (c.b as i32 - p[2] as i32).pow(2)
        })
        .map(|(n, _)| *n)
        .unwrap_or("gray")
}
