//! Deterministic rasterization of design documents.
//!
//! Layers paint in flatten order onto a transparent canvas. Every primitive
//! samples at pixel centers without antialiasing; a layer only touches pixels
//! whose centers fall inside its enclosing frames.

pub mod text;

use std::ops::Range;

use crate::model::{flatten, BBox, Color, DesignDocument, ImageSource, InvalidDocument, LayerKind};
use crate::raster::{AssetStore, Raster};
use crate::vector::VectorGraphic;

/// Chords per cubic segment when flattening curves for filling.
pub const CUBIC_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    Invalid(#[from] InvalidDocument),
    #[error("unresolved asset {0:?}")]
    UnresolvedAsset(String),
    #[error("layer {0:?} still holds an image placeholder")]
    PlaceholderPresent(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    /// Leave text layers out (the background under text).
    pub skip_text: bool,
}

pub fn render(doc: &DesignDocument, assets: &AssetStore) -> Result<Raster, RenderError> {
    render_with(doc, assets, RenderOptions::default())
}

/// The document without its text layers.
pub fn render_background(doc: &DesignDocument, assets: &AssetStore) -> Result<Raster, RenderError> {
    render_with(doc, assets, RenderOptions { skip_text: true })
}

pub fn render_with(doc: &DesignDocument, assets: &AssetStore, options: RenderOptions) -> Result<Raster, RenderError> {
    let layers = flatten(doc)?;
    // Resolve everything first so failures leave no half-drawn canvas behind.
    for fl in &layers {
        if let LayerKind::Image(img) = &fl.layer.kind {
            match &img.source {
                ImageSource::Placeholder => return Err(RenderError::PlaceholderPresent(fl.layer.id.clone())),
                ImageSource::Asset(id) if assets.get(id).is_none() => {
                    return Err(RenderError::UnresolvedAsset(id.clone()))
                }
                ImageSource::Asset(_) => {}
            }
        }
    }

    let mut canvas = Raster::new(doc.canvas_width, doc.canvas_height);
    for fl in &layers {
        match &fl.layer.kind {
            LayerKind::Frame(f) => {
                if let Some(bg) = f.background {
                    fill_rect(&mut canvas, fl.bbox, fl.clip, bg);
                }
            }
            LayerKind::Group(_) => {}
            LayerKind::Graphic(g) => rasterize_paths(&g.graphic, fl.bbox, fl.clip, &mut canvas),
            LayerKind::Text(t) => {
                if !options.skip_text {
                    let clip = fl.clip.intersect(&fl.bbox);
                    if let Some(clip) = clip {
                        draw_text(&mut canvas, &t.content, fl.bbox, clip, t.font_size, t.color, t.h_align, t.v_align);
                    }
                }
            }
            LayerKind::Image(img) => {
                if let ImageSource::Asset(id) = &img.source {
                    let src = assets.get(id).expect("resolved above");
                    draw_image(&mut canvas, src, fl.bbox, fl.clip);
                }
            }
        }
    }
    Ok(canvas)
}

/// Pixel indices whose centers lie in `[lo, hi)`, clamped to `0..limit`.
fn center_span(lo: f64, hi: f64, limit: u32) -> Range<u32> {
    let clamp = |v: f64| v.clamp(0.0, limit as f64) as u32;
    let start = clamp((lo - 0.5).ceil());
    let end = clamp((hi - 0.5).ceil());
    start..end.max(start)
}

fn rows_cols(area: BBox, canvas: &Raster) -> (Range<u32>, Range<u32>) {
    (
        center_span(area.y, area.bottom(), canvas.height()),
        center_span(area.x, area.right(), canvas.width()),
    )
}

fn fill_rect(canvas: &mut Raster, bbox: BBox, clip: BBox, color: Color) {
    let Some(area) = bbox.intersect(&clip) else { return };
    let (rows, cols) = rows_cols(area, canvas);
    for y in rows {
        for x in cols.clone() {
            canvas.blend(x, y, color);
        }
    }
}

/// Fills `vg` scaled from its view box onto `target`, even-odd per fill group.
///
/// Unscaled polygonal paths from the tracer reproduce their mask exactly.
pub fn rasterize_paths(vg: &VectorGraphic, target: BBox, clip: BBox, canvas: &mut Raster) {
    let Some(area) = target.intersect(&clip) else { return };
    let sx = target.w / vg.view_w as f64;
    let sy = target.h / vg.view_h as f64;
    let (rows, cols) = rows_cols(area, canvas);
    for group in vg.fill_groups() {
        let polys: Vec<Vec<(f64, f64)>> = group
            .iter()
            .map(|p| {
                p.outline
                    .flatten(CUBIC_STEPS)
                    .into_iter()
                    .map(|q| (target.x + q.x * sx, target.y + q.y * sy))
                    .collect()
            })
            .filter(|v: &Vec<_>| v.len() >= 3)
            .collect();
        let fill = group[0].fill;
        let mut xs = Vec::new();
        for y in rows.clone() {
            let cy = y as f64 + 0.5;
            xs.clear();
            for poly in &polys {
                for i in 0..poly.len() {
                    let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                    if (a.1 > cy) != (b.1 > cy) {
                        xs.push(a.0 + (cy - a.1) / (b.1 - a.1) * (b.0 - a.0));
                    }
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let span = center_span(pair[0], pair[1], canvas.width());
                for x in span.start.max(cols.start)..span.end.min(cols.end) {
                    canvas.blend(x, y, fill);
                }
            }
        }
    }
}

/// Bilinear scale of `src` onto `bbox`, composited source-over.
fn draw_image(canvas: &mut Raster, src: &Raster, bbox: BBox, clip: BBox) {
    let Some(area) = bbox.intersect(&clip) else { return };
    if src.is_empty() {
        return;
    }
    let (rows, cols) = rows_cols(area, canvas);
    let (sw, sh) = (src.width() as f64, src.height() as f64);
    for y in rows {
        let v = ((y as f64 + 0.5 - bbox.y) / bbox.h * sh - 0.5).clamp(0.0, sh - 1.0);
        let (y0, fy) = (v.floor() as u32, v - v.floor());
        let y1 = (y0 + 1).min(src.height() - 1);
        for x in cols.clone() {
            let u = ((x as f64 + 0.5 - bbox.x) / bbox.w * sw - 0.5).clamp(0.0, sw - 1.0);
            let (x0, fx) = (u.floor() as u32, u - u.floor());
            let x1 = (x0 + 1).min(src.width() - 1);
            let (p00, p10, p01, p11) =
                (src.get(x0, y0).to_array(), src.get(x1, y0).to_array(), src.get(x0, y1).to_array(), src.get(x1, y1).to_array());
            let mut out = [0u8; 4];
            for c in 0..4 {
                let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
                let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
            }
            canvas.blend(x, y, Color::rgba(out[0], out[1], out[2], out[3]));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn draw_text(
    canvas: &mut Raster,
    content: &str,
    bbox: BBox,
    clip: BBox,
    font_size: f64,
    color: Color,
    h: crate::model::HAlign,
    v: crate::model::VAlign,
) {
    let cw = text::cell_width(font_size);
    for line in text::layout(content, bbox, font_size, h, v) {
        for (i, c) in line.text.chars().enumerate() {
            let cell = BBox::new(line.x + i as f64 * cw, line.y, cw, font_size);
            let Some(area) = cell.intersect(&clip) else { continue };
            let (rows, cols) = rows_cols(area, canvas);
            for y in rows {
                let row = (((y as f64 + 0.5 - cell.y) / font_size * 16.0).floor() as usize).min(15);
                for x in cols.clone() {
                    let col = (((x as f64 + 0.5 - cell.x) / cw * 8.0).floor() as usize).min(7);
                    if text::covers(c, col, row) {
                        canvas.blend(x, y, color);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layer;
    use crate::vector::{trace_mask, Mask, TraceOptions, VectorPath};

    fn with_bg(w: u32, h: u32, bg: Color) -> DesignDocument {
        let mut d = DesignDocument::new(w, h);
        if let LayerKind::Frame(f) = &mut d.root.kind {
            f.background = Some(bg);
        }
        d
    }

    #[test]
    fn uniform_background() {
        let r = render(&with_bg(50, 50, Color::from_hex("#112233").unwrap()), &AssetStore::new()).unwrap();
        assert!(r.colors().all(|c| c == Color::rgba(17, 34, 51, 255)));
    }

    #[test]
    fn opaque_graphic_overdraws() {
        let mut d = with_bg(20, 10, Color::BLACK);
        d.root.children_mut().unwrap().push(Layer::graphic(
            "g",
            BBox::new(0.0, 0.0, 20.0, 10.0),
            VectorGraphic::solid(4, 4, Color::WHITE),
        ));
        let r = render(&d, &AssetStore::new()).unwrap();
        assert!(r.colors().all(|c| c == Color::WHITE));
    }

    #[test]
    fn upscaled_rectangle_doubles() {
        let mut canvas = Raster::new(10, 10);
        let vg = VectorGraphic::solid(2, 3, Color::WHITE);
        rasterize_paths(&vg, BBox::new(1.0, 1.0, 4.0, 6.0), BBox::new(0.0, 0.0, 10.0, 10.0), &mut canvas);
        for y in 0..10 {
            for x in 0..10 {
                let inside = (1..5).contains(&x) && (1..7).contains(&y);
                assert_eq!(canvas.get(x, y) == Color::WHITE, inside, "({x},{y})");
            }
        }
    }

    #[test]
    fn ring_keeps_its_hole() {
        let ring = Mask::from_fn(6, 6, |x, y| !((2..4).contains(&x) && (2..4).contains(&y)));
        let paths = trace_mask(&ring, &TraceOptions::default())
            .into_iter()
            .map(|t| VectorPath { outline: t.outline, fill: Color::WHITE, orientation: t.orientation })
            .collect();
        let mut canvas = Raster::new(6, 6);
        let full = BBox::new(0.0, 0.0, 6.0, 6.0);
        rasterize_paths(&VectorGraphic { view_w: 6, view_h: 6, paths }, full, full, &mut canvas);
        let got = Mask::from_fn(6, 6, |x, y| canvas.get(x, y) == Color::WHITE);
        assert_eq!(got, ring);
    }

    #[test]
    fn frames_clip_children() {
        let mut d = DesignDocument::new(20, 20);
        let inner = Layer::frame(
            "f",
            BBox::new(5.0, 5.0, 5.0, 5.0),
            None,
            vec![Layer::graphic("g", BBox::new(-5.0, -5.0, 20.0, 20.0), VectorGraphic::solid(1, 1, Color::WHITE))],
        );
        d.root.children_mut().unwrap().push(inner);
        let r = render(&d, &AssetStore::new()).unwrap();
        let white = r.colors().filter(|&c| c == Color::WHITE).count();
        assert_eq!(white, 25);
        assert_eq!(r.get(5, 5), Color::WHITE);
        assert_eq!(r.get(10, 10), Color::TRANSPARENT);
    }

    #[test]
    fn image_scaling_of_solid_asset_is_exact() {
        let mut assets = AssetStore::new();
        assets.insert("a", Raster::filled(3, 3, Color::rgb(9, 8, 7)));
        let mut d = DesignDocument::new(10, 10);
        d.root.children_mut().unwrap().push(Layer::image(
            "i",
            BBox::new(2.0, 2.0, 5.0, 5.0),
            ImageSource::Asset("a".into()),
            "x",
        ));
        let r = render(&d, &assets).unwrap();
        assert_eq!(r.colors().filter(|&c| c == Color::rgb(9, 8, 7)).count(), 25);
    }

    #[test]
    fn missing_asset_and_placeholder_fail() {
        let mut d = DesignDocument::new(10, 10);
        d.root.children_mut().unwrap().push(Layer::image("i", BBox::new(0.0, 0.0, 5.0, 5.0), ImageSource::Asset("zz".into()), "x"));
        assert_eq!(render(&d, &AssetStore::new()), Err(RenderError::UnresolvedAsset("zz".into())));
        d.root.children_mut().unwrap()[0] = Layer::image("i", BBox::new(0.0, 0.0, 5.0, 5.0), ImageSource::Placeholder, "x");
        assert_eq!(render(&d, &AssetStore::new()), Err(RenderError::PlaceholderPresent("i".into())));
    }

    #[test]
    fn text_draws_inside_its_box_only() {
        let mut d = with_bg(64, 32, Color::WHITE);
        d.root.children_mut().unwrap().push(Layer::text("t", BBox::new(8.0, 8.0, 32.0, 16.0), "HIHIHIHI", 16.0, Color::BLACK));
        let r = render(&d, &AssetStore::new()).unwrap();
        let mut inked = 0;
        for y in 0..32 {
            for x in 0..64 {
                if r.get(x, y) == Color::BLACK {
                    inked += 1;
                    assert!((8..40).contains(&x) && (8..24).contains(&y));
                }
            }
        }
        assert!(inked > 0);
        let bg = render_background(&d, &AssetStore::new()).unwrap();
        assert!(bg.colors().all(|c| c == Color::WHITE));
    }

    #[test]
    fn deterministic() {
        let mut d = with_bg(40, 40, Color::rgb(200, 10, 10));
        d.root.children_mut().unwrap().push(Layer::text("t", BBox::new(0.0, 0.0, 40.0, 40.0), "Hello there", 12.0, Color::WHITE));
        let a = render(&d, &AssetStore::new()).unwrap();
        let b = render(&d, &AssetStore::new()).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
    }
}
