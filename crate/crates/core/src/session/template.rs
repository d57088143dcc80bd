//! A rule-based token source standing in for a generator model.
//!
//! The layout: a full-canvas generated background (single-modal) or the
//! provided images (multimodal), and the texts stacked on a vertical grid,
//! centered, each in the largest font size that fits its cell. The token
//! text is streamed in seeded, irregular chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mocks::split_chunks;
use super::{InputMode, InstructionRequest, SourceError, TokenSource};
use crate::model::{BBox, Color, DesignDocument, HAlign, ImageSource, Layer, LayerKind, VAlign};
use crate::render::text::fits;
use crate::tokens::serialize;

const CANVASES: [(u32, u32); 3] = [(512, 768), (512, 512), (768, 512)];
const FONT_SIZES: [f64; 10] = [64.0, 48.0, 40.0, 32.0, 28.0, 24.0, 20.0, 16.0, 12.0, 8.0];
const TEXT_COLORS: [Color; 4] =
    [Color::WHITE, Color::BLACK, Color::rgb(250, 220, 60), Color::rgb(20, 40, 90)];
/// Longest instruction-derived text.
const MAX_DERIVED_CHARS: usize = 40;

#[derive(Debug, Clone)]
pub struct TemplateSource {
    chunks: std::collections::VecDeque<String>,
    text: String,
    pub feedback: Vec<(String, String)>,
}

impl TemplateSource {
    /// The complete token text this source streams.
    pub fn text(&self) -> &str {
        &self.text
    }
}

impl TokenSource for TemplateSource {
    fn next_chunk(&mut self) -> Result<Option<String>, SourceError> {
        Ok(self.chunks.pop_front())
    }

    fn accept_image_feedback(&mut self, asset_id: &str, description: &str) {
        self.feedback.push((asset_id.into(), description.into()));
    }
}

fn derived_texts(req: &InstructionRequest) -> Vec<String> {
    if !req.provided_texts.is_empty() {
        return req.provided_texts.clone();
    }
    let words: Vec<&str> = req.instruction.split_whitespace().collect();
    let mut title = String::new();
    for w in words {
        if title.chars().count() + w.chars().count() + 1 > MAX_DERIVED_CHARS {
            break;
        }
        if !title.is_empty() {
            title.push(' ');
        }
        title.push_str(w);
    }
    if title.is_empty() {
        title = req.instruction.chars().take(MAX_DERIVED_CHARS).collect::<String>().trim().to_string();
    }
    if title.is_empty() {
        title = "Untitled".into();
    }
    vec![title]
}

fn background_tag(instruction: &str) -> String {
    let words: Vec<&str> = instruction.split_whitespace().take(6).collect();
    if words.is_empty() {
        "background".into()
    } else {
        format!("background for {}", words.join(" "))
    }
}

/// Builds the layout as a document with placeholders for generated images.
pub fn template_document(req: &InstructionRequest, seed: u64) -> DesignDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cw, ch) = CANVASES[rng.random_range(0..CANVASES.len())];
    let (w, h) = (cw as f64, ch as f64);
    let margin = (w.min(h) / 16.0).round();
    let gap = (margin / 2.0).round();
    let color = TEXT_COLORS[rng.random_range(0..TEXT_COLORS.len())];

    let mut children = Vec::new();
    let mut id = 0;
    let mut next_id = |prefix: &str| {
        id += 1;
        format!("{prefix}{id}")
    };
    if req.mode == InputMode::SingleModal {
        children.push(Layer::image(
            next_id("bg"),
            BBox::new(0.0, 0.0, w, h),
            ImageSource::Placeholder,
            background_tag(&req.instruction),
        ));
    }

    let texts = if req.mode == InputMode::Multimodal && req.provided_texts.is_empty() {
        Vec::new()
    } else {
        derived_texts(req)
    };
    let assets = if req.mode == InputMode::Multimodal { req.provided_assets.as_slice() } else { &[] };
    let rows = assets.len() + texts.len();
    if rows > 0 {
        let row_h = ((h - 2.0 * margin + gap) / rows as f64 - gap).floor().max(1.0);
        let col_w = w - 2.0 * margin;
        let row_box = |i: usize| BBox::new(margin, margin + i as f64 * (row_h + gap), col_w, row_h);
        for (i, a) in assets.iter().enumerate() {
            children.push(Layer::image(next_id("img"), row_box(i), ImageSource::Asset(a.asset_id.clone()), a.description.clone()));
        }
        // A seeded cap keeps runs with the same request visibly different.
        let cap = FONT_SIZES[rng.random_range(0..3)];
        for (j, t) in texts.iter().enumerate() {
            let b = row_box(assets.len() + j);
            let size = FONT_SIZES
                .iter()
                .copied()
                .find(|&s| s <= cap && fits(t, b.w, b.h, s))
                .unwrap_or(FONT_SIZES[FONT_SIZES.len() - 1]);
            let mut layer = Layer::text(next_id("txt"), b, t.clone(), size, color);
            if let LayerKind::Text(tl) = &mut layer.kind {
                tl.h_align = HAlign::Center;
                tl.v_align = VAlign::Middle;
            }
            children.push(layer);
        }
    }
    DesignDocument::new(cw, ch).with_children(children)
}

/// A deterministic source streaming the template layout for `req`.
pub fn template_source(req: &InstructionRequest, seed: u64) -> TemplateSource {
    let doc = template_document(req, seed);
    let text = serialize(&doc).expect("template documents are valid").to_text();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let sizes: Vec<usize> = (0..text.len()).map(|_| rng.random_range(1..=24)).collect();
    let chunks = split_chunks(&text, sizes).into();
    TemplateSource { chunks, text, feedback: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::ProvidedAsset;
    use crate::tokens::parse;

    fn drain(mut s: TemplateSource) -> String {
        let mut out = String::new();
        while let Some(c) = s.next_chunk().unwrap() {
            out.push_str(&c);
        }
        out
    }

    #[test]
    fn two_texts_single_modal() {
        let mut req = InstructionRequest::single_modal("summer sale poster");
        req.provided_texts = vec!["SUMMER SALE".into(), "up to 50% off".into()];
        let text = drain(template_source(&req, 4));
        assert_eq!(text.matches("<|image_gen|>").count(), 1);
        assert_eq!(text.matches("<|text|>").count(), 2);
        parse(&text).unwrap();
    }

    #[test]
    fn deterministic() {
        let req = InstructionRequest::single_modal("coffee shop opening");
        let a = template_source(&req, 11);
        let b = template_source(&req, 11);
        assert_eq!(a.chunks, b.chunks);
    }

    #[test]
    fn multimodal_references_assets() {
        let req = InstructionRequest {
            instruction: "x".into(),
            mode: InputMode::Multimodal,
            provided_texts: vec![],
            provided_assets: vec![ProvidedAsset { asset_id: "logo".into(), description: "logo".into() }],
        };
        let text = drain(template_source(&req, 1));
        assert!(text.contains(" logo <|image_des|>"), "{text}");
        assert_eq!(text.matches("<|image_gen|>").count(), 0);
    }

    #[test]
    fn texts_fit_their_boxes() {
        let mut req = InstructionRequest::single_modal("a");
        req.provided_texts = vec!["A fairly long headline that must wrap".into(), "short".into(), "你好世界".into()];
        for seed in 0..8 {
            let doc = template_document(&req, seed);
            for l in doc.layers() {
                if let LayerKind::Text(t) = &l.kind {
                    assert!(fits(&t.content, l.bbox.w, l.bbox.h, t.font_size), "seed {seed}: {:?}", t.content);
                }
            }
        }
    }
}
