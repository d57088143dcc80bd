//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use layerforge::model::{HAlign, ImageSource, VAlign};
use layerforge::vector::{Orientation, Outline, Point, VectorPath};
use layerforge::vector::VectorGraphic;
use layerforge::{BBox, Color, DesignDocument, Layer, LayerKind, Raster};
use rand::seq::IndexedRandom;
use rand::Rng;

/// A value on the 0.01 grid in `[lo, hi)`.
pub fn grid(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let (a, b) = ((lo * 100.0).round() as i64, (hi * 100.0).round() as i64);
    rng.random_range(a..b.max(a + 1)) as f64 / 100.0
}

pub fn color(rng: &mut impl Rng) -> Color {
    let a = if rng.random_bool(0.8) { 255 } else { rng.random() };
    Color::rgba(rng.random(), rng.random(), rng.random(), a)
}

const PIECES: &[&str] = &[
    "hello", "SALE", "50%", "off", "x=1", "<|text|>", "|>", "<|", "\\", "\"q\"", "a\\b", "=", "key=", "你好", "世界",
    "café", "  ", " ", "\t", "\n", "#1", "é", "🙂", "a|b", "<", ">", "|",
];

/// Text mixing plain words, delimiters, escapes, CJK and whitespace.
pub fn text(rng: &mut impl Rng) -> String {
    loop {
        let n = rng.random_range(1..5);
        let s: String = (0..n).map(|_| *PIECES.choose(rng).expect("non-empty")).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn bbox(rng: &mut impl Rng, w: f64, h: f64) -> BBox {
    let x = grid(rng, -20.0, w);
    let y = grid(rng, -20.0, h);
    BBox::new(x, y, grid(rng, 1.0, w.max(2.0)), grid(rng, 1.0, h.max(2.0)))
}

pub fn graphic(rng: &mut impl Rng) -> VectorGraphic {
    let (vw, vh) = (rng.random_range(1..64u32), rng.random_range(1..64u32));
    let mut g = VectorGraphic::new(vw, vh);
    for _ in 0..rng.random_range(0..3) {
        let n = rng.random_range(3..6);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(grid(rng, 0.0, vw as f64), grid(rng, 0.0, vh as f64)))
            .collect();
        let orientation = if rng.random_bool(0.5) { Orientation::Clockwise } else { Orientation::Counterclockwise };
        g.paths.push(VectorPath { outline: Outline::polygon(&pts), fill: color(rng), orientation });
    }
    g
}

fn layer(rng: &mut impl Rng, next: &mut usize, depth: usize, w: f64, h: f64) -> Layer {
    *next += 1;
    // Half the ids are the preorder default, which the token form omits.
    let id = if rng.random_bool(0.5) { format!("n{}", *next) } else { format!("L{}-{}", *next, rng.random_range(0..1000)) };
    let b = bbox(rng, w, h);
    let pick = if depth >= 3 { rng.random_range(2..5) } else { rng.random_range(0..5) };
    let mut l = match pick {
        0 | 1 => {
            let n = rng.random_range(0..4);
            let children = (0..n).map(|_| layer(rng, next, depth + 1, b.w, b.h)).collect();
            if pick == 0 {
                let bg = rng.random_bool(0.5).then(|| color(rng));
                Layer::frame(id, b, bg, children)
            } else {
                Layer::group(id, b, children)
            }
        }
        2 => {
            let mut l = Layer::text(id, b, text(rng), grid(rng, 1.0, 96.0), color(rng));
            if let LayerKind::Text(t) = &mut l.kind {
                t.h_align = *[HAlign::Left, HAlign::Center, HAlign::Right].choose(rng).expect("non-empty");
                t.v_align = *[VAlign::Top, VAlign::Middle, VAlign::Bottom].choose(rng).expect("non-empty");
                if rng.random_bool(0.3) {
                    t.font_tag = ["serif", "mono", "display bold"].choose(rng).expect("non-empty").to_string();
                }
            }
            l
        }
        3 => {
            let source = if rng.random_bool(0.5) {
                ImageSource::Asset(format!("asset {}", rng.random_range(0..100)))
            } else {
                ImageSource::Placeholder
            };
            Layer::image(id, b, source, text(rng))
        }
        _ => Layer::graphic(id, b, graphic(rng)),
    };
    if rng.random_bool(0.2) {
        l.name = Some(text(rng));
    }
    l
}

/// A random document that passes validation, with every number on the 0.01 grid.
pub fn random_document(rng: &mut impl Rng) -> DesignDocument {
    let (w, h) = (rng.random_range(1..1200u32), rng.random_range(1..1200u32));
    let mut next = 0;
    let n = rng.random_range(0..6);
    let children = (0..n).map(|_| layer(rng, &mut next, 1, w as f64, h as f64)).collect();
    let mut doc = DesignDocument::new(w, h).with_children(children);
    if rng.random_bool(0.3) {
        if let LayerKind::Frame(f) = &mut doc.root.kind {
            f.background = Some(color(rng));
        }
    }
    doc
}

/// Flat document of text and image leaves on a small canvas, for metrics.
pub fn metric_document(rng: &mut impl Rng) -> DesignDocument {
    let (w, h) = (rng.random_range(16..96u32), rng.random_range(16..96u32));
    let mut children = Vec::new();
    if rng.random_bool(0.7) {
        children.push(Layer::frame("bg", BBox::new(0.0, 0.0, w as f64, h as f64), Some(color(rng)), Vec::new()));
    }
    for i in 0..rng.random_range(0..8) {
        let b = BBox::new(
            grid(rng, -4.0, w as f64),
            grid(rng, -4.0, h as f64),
            grid(rng, 1.0, w as f64 / 2.0 + 1.0),
            grid(rng, 1.0, h as f64 / 2.0 + 1.0),
        );
        let l = match rng.random_range(0..3) {
            0 => Layer::graphic(format!("g{i}"), b, graphic(rng)),
            1 => Layer::frame(format!("f{i}"), b, Some(color(rng)), Vec::new()),
            _ => Layer::text(format!("t{i}"), b, text(rng), grid(rng, 4.0, 24.0), color(rng)),
        };
        children.push(l);
    }
    DesignDocument::new(w, h).with_children(children)
}

pub fn random_mask_bits(rng: &mut impl Rng, w: u32, h: u32) -> Vec<bool> {
    let density = rng.random_range(0.05..0.95);
    // Mix pure noise with blocky structure so both thin and large shapes occur.
    let block = rng.random_range(1..9u32);
    let cells: Vec<bool> = (0..w.div_ceil(block) * h.div_ceil(block)).map(|_| rng.random_bool(density)).collect();
    let noise = rng.random_range(0.0..0.2);
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| cells[((y / block) * w.div_ceil(block) + x / block) as usize] ^ rng.random_bool(noise))
        .collect()
}

/// Flat-color image of overlapping discs and rectangles.
pub fn blob_image(rng: &mut impl Rng) -> (Raster, usize) {
    let (w, h) = (rng.random_range(16..96u32), rng.random_range(16..96u32));
    let k = rng.random_range(2..6usize);
    let colors: Vec<Color> = (0..k).map(|_| Color::rgb(rng.random(), rng.random(), rng.random())).collect();
    let mut img = Raster::filled(w, h, colors[0]);
    for _ in 0..rng.random_range(2..10) {
        let c = *colors.choose(rng).expect("non-empty");
        let (cx, cy) = (rng.random_range(0..w) as i64, rng.random_range(0..h) as i64);
        let r = rng.random_range(2..(w.min(h) / 2).max(3)) as i64;
        let disc = rng.random_bool(0.5);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as i64 - cx, y as i64 - cy);
                let inside = if disc { dx * dx + dy * dy <= r * r } else { dx.abs() <= r && dy.abs() <= r / 2 };
                if inside {
                    img.set(x, y, c);
                }
            }
        }
    }
    (img, k)
}
