//! Deterministic sources and providers.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{ImageProvider, ImageRequest, ProviderError, SourceError, TokenSource};
use crate::model::Color;
use crate::raster::Raster;

/// Replays fixed chunks.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    chunks: VecDeque<String>,
    /// `(asset_id, description)` pairs reported back by the session.
    pub feedback: Vec<(String, String)>,
}

impl ScriptedSource {
    pub fn new(chunks: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { chunks: chunks.into_iter().map(Into::into).collect(), feedback: Vec::new() }
    }

    /// Splits `text` into chunks of at most `size` bytes on char boundaries.
    pub fn chunked(text: &str, size: usize) -> Self {
        Self::new(split_chunks(text, std::iter::repeat(size.max(1))))
    }
}

/// Cuts `text` into pieces whose byte lengths follow `sizes`, never
/// splitting a code point (a piece grows to the next boundary instead).
pub fn split_chunks(text: &str, sizes: impl IntoIterator<Item = usize>) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut sizes = sizes.into_iter();
    while !rest.is_empty() {
        let mut n = sizes.next().unwrap_or(rest.len()).clamp(1, rest.len());
        while !rest.is_char_boundary(n) {
            n += 1;
        }
        out.push(rest[..n].to_string());
        rest = &rest[n..];
    }
    out
}

impl TokenSource for ScriptedSource {
    fn next_chunk(&mut self) -> Result<Option<String>, SourceError> {
        Ok(self.chunks.pop_front())
    }

    fn accept_image_feedback(&mut self, asset_id: &str, description: &str) {
        self.feedback.push((asset_id.into(), description.into()));
    }
}

fn tag_digest(tag: &str) -> [u8; 32] {
    Sha256::digest(tag.as_bytes()).into()
}

fn tag_color(tag: &str) -> Color {
    let d = tag_digest(tag);
    Color::rgb(d[0], d[1], d[2])
}

/// Fills the canvas with a color derived from the tag's hash.
#[derive(Debug, Clone, Default)]
pub struct SolidProvider {
    pub calls: Vec<ImageRequest>,
}

impl ImageProvider for SolidProvider {
    fn generate(&mut self, req: &ImageRequest) -> Result<Raster, ProviderError> {
        self.calls.push(req.clone());
        Ok(Raster::filled(req.width, req.height, tag_color(&req.description_tag)))
    }
}

/// Vertical two-color gradient; colors drawn from a seed mixed with the tag.
#[derive(Debug, Clone, Default)]
pub struct GradientProvider {
    pub seed: u64,
    pub calls: Vec<ImageRequest>,
}

impl GradientProvider {
    pub fn new(seed: u64) -> Self {
        Self { seed, calls: Vec::new() }
    }
}

impl ImageProvider for GradientProvider {
    fn generate(&mut self, req: &ImageRequest) -> Result<Raster, ProviderError> {
        self.calls.push(req.clone());
        let d = tag_digest(&req.description_tag);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(d[..8].try_into().expect("8 bytes")));
        let a: [u8; 3] = rng.random();
        let b: [u8; 3] = rng.random();
        let h = req.height.max(2) - 1;
        Ok(Raster::from_fn(req.width, req.height, |_, y| {
            let mix = |p: u8, q: u8| ((p as u32 * (h - y.min(h)) + q as u32 * y.min(h) + h / 2) / h) as u8;
            Color::rgb(mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2]))
        }))
    }
}

/// Checkerboard of the tag color and its complement.
#[derive(Debug, Clone)]
pub struct CheckerProvider {
    pub cell: u32,
    pub calls: Vec<ImageRequest>,
}

impl Default for CheckerProvider {
    fn default() -> Self {
        Self { cell: 32, calls: Vec::new() }
    }
}

impl ImageProvider for CheckerProvider {
    fn generate(&mut self, req: &ImageRequest) -> Result<Raster, ProviderError> {
        self.calls.push(req.clone());
        let c = tag_color(&req.description_tag);
        let inv = Color::rgb(255 - c.r, 255 - c.g, 255 - c.b);
        let cell = self.cell.max(1);
        Ok(Raster::from_fn(req.width, req.height, |x, y| if (x / cell + y / cell).is_multiple_of(2) { c } else { inv }))
    }
}

/// Always fails.
#[derive(Debug, Clone, Default)]
pub struct FailingProvider {
    pub calls: Vec<ImageRequest>,
}

impl ImageProvider for FailingProvider {
    fn generate(&mut self, req: &ImageRequest) -> Result<Raster, ProviderError> {
        self.calls.push(req.clone());
        Err(ProviderError("backend unavailable".into()))
    }
}

/// The bundled mock providers by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    Solid,
    Gradient,
    Checker,
}

impl ProviderKind {
    pub const ALL: [ProviderKind; 3] = [ProviderKind::Solid, ProviderKind::Gradient, ProviderKind::Checker];

    pub fn name(self) -> &'static str {
        match self {
            ProviderKind::Solid => "solid",
            ProviderKind::Gradient => "gradient",
            ProviderKind::Checker => "checker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn build(self, seed: u64) -> Box<dyn ImageProvider> {
        match self {
            ProviderKind::Solid => Box::new(SolidProvider::default()),
            ProviderKind::Gradient => Box::new(GradientProvider::new(seed)),
            ProviderKind::Checker => Box::new(CheckerProvider::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(tag: &str) -> ImageRequest {
        ImageRequest { width: 64, height: 32, description_tag: tag.into(), style_context: String::new() }
    }

    #[test]
    fn providers_honor_dimensions_and_tags() {
        for kind in ProviderKind::ALL {
            let mut p = kind.build(3);
            let a = p.generate(&req("sky")).unwrap();
            assert_eq!((a.width(), a.height()), (64, 32));
            assert_eq!(a, p.generate(&req("sky")).unwrap());
            assert_ne!(a, p.generate(&req("sea")).unwrap(), "{}", kind.name());
        }
    }

    #[test]
    fn chunks_respect_char_boundaries() {
        let parts = split_chunks("a你b", [2, 1, 1]);
        assert_eq!(parts, ["a你", "b"]);
        assert_eq!(split_chunks("", [3]), Vec::<String>::new());
    }
}
