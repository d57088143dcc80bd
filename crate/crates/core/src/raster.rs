//! RGBA8 pixel grids, PNG I/O and the asset store.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Cursor};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::Color;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster size {width}x{height} with {len} bytes (expected {expected})")]
    BadBuffer { width: u32, height: u32, len: usize, expected: usize },
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("unsupported png layout: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major RGBA8 image.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Raster({}x{}, {})", self.width, self.height, &self.content_hash()[..12])
    }
}

impl Raster {
    pub fn new(width: u32, height: u32) -> Self {
        Self::filled(width, height, Color::TRANSPARENT)
    }

    pub fn filled(width: u32, height: u32, color: Color) -> Self {
        let px = color.to_array();
        let pixels = px.iter().copied().cycle().take(width as usize * height as usize * 4).collect();
        Self { width, height, pixels }
    }

    pub fn from_rgba(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = width as usize * height as usize * 4;
        if pixels.len() != expected {
            return Err(RasterError::BadBuffer { width, height, len: pixels.len(), expected });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Color) -> Self {
        let mut r = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                r.set(x, y, f(x, y));
            }
        }
        r
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    pub fn get(&self, x: u32, y: u32) -> Color {
        let o = self.offset(x, y);
        let p = &self.pixels[o..o + 4];
        Color::rgba(p[0], p[1], p[2], p[3])
    }

    pub fn set(&mut self, x: u32, y: u32, c: Color) {
        let o = self.offset(x, y);
        self.pixels[o..o + 4].copy_from_slice(&c.to_array());
    }

    /// Source-over composite of `src` onto pixel (x, y).
    pub fn blend(&mut self, x: u32, y: u32, src: Color) {
        let o = self.offset(x, y);
        let dst = Color::rgba(self.pixels[o], self.pixels[o + 1], self.pixels[o + 2], self.pixels[o + 3]);
        self.pixels[o..o + 4].copy_from_slice(&source_over(src, dst).to_array());
    }

    /// Colors of all pixels in row-major order.
    pub fn colors(&self) -> impl Iterator<Item = Color> + '_ {
        self.pixels.chunks_exact(4).map(|p| Color::rgba(p[0], p[1], p[2], p[3]))
    }

    /// Hex SHA-256 over the dimensions and pixel bytes.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update(&self.pixels);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// 8-bit RGBA, non-interlaced.
    pub fn encode_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(BufWriter::new(&mut out), self.width, self.height);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header()?;
            writer.write_image_data(&self.pixels)?;
            writer.finish()?;
        }
        Ok(out)
    }

    /// Decodes any 8-bit-or-less PNG into RGBA8.
    pub fn decode_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let mut dec = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
        dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = dec.read_info()?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| RasterError::Unsupported("image too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf)?;
        buf.truncate(info.buffer_size());
        let (w, h) = (info.width, info.height);
        let pixels = match info.color_type {
            png::ColorType::Rgba => buf,
            png::ColorType::Rgb => buf.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g, 255]).collect(),
            png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect(),
            png::ColorType::Indexed => return Err(RasterError::Unsupported("indexed png after expansion".into())),
        };
        Self::from_rgba(w, h, pixels)
    }

    pub fn read_png(path: &Path) -> Result<Self, RasterError> {
        Self::decode_png(&fs::read(path)?)
    }

    pub fn write_png(&self, path: &Path) -> Result<(), RasterError> {
        fs::write(path, self.encode_png()?)?;
        Ok(())
    }
}

fn div_round(num: u32, den: u32) -> u32 {
    (2 * num + den) / (2 * den)
}

/// Non-premultiplied source-over with integer round-half-up.
pub fn source_over(src: Color, dst: Color) -> Color {
    match src.a {
        255 => return src,
        0 => return dst,
        _ => {}
    }
    let sa = src.a as u32;
    let da = dst.a as u32;
    // Output alpha scaled by 255^2.
    let out_a = sa * 255 + da * (255 - sa);
    let ch = |s: u8, d: u8| div_round(s as u32 * sa * 255 + d as u32 * da * (255 - sa), out_a) as u8;
    Color::rgba(ch(src.r, dst.r), ch(src.g, dst.g), ch(src.b, dst.b), div_round(out_a, 255) as u8)
}

/// Rasters addressed by asset id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssetStore {
    assets: BTreeMap<String, Raster>,
}

impl AssetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, raster: Raster) {
        self.assets.insert(id.into(), raster);
    }

    /// Stores `raster` under its content address and returns the id.
    pub fn insert_content_addressed(&mut self, raster: Raster) -> String {
        let id = format!("img-{}", &raster.content_hash()[..16]);
        self.assets.insert(id.clone(), raster);
        id
    }

    pub fn get(&self, id: &str) -> Option<&Raster> {
        self.assets.get(id)
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.assets.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Raster)> {
        self.assets.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Loads every `<id>.png` in `dir`; a missing directory is an empty store.
    pub fn load_dir(dir: &Path) -> Result<Self, RasterError> {
        let mut store = Self::new();
        if !dir.is_dir() {
            return Ok(store);
        }
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let path = e.path();
            if path.extension().is_some_and(|x| x == "png") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    store.insert(stem, Raster::read_png(&path)?);
                }
            }
        }
        Ok(store)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<(), RasterError> {
        fs::create_dir_all(dir)?;
        for (id, r) in &self.assets {
            r.write_png(&dir.join(format!("{id}.png")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_length_is_checked() {
        assert!(Raster::from_rgba(2, 2, vec![0; 15]).is_err());
        assert!(Raster::from_rgba(2, 2, vec![0; 16]).is_ok());
    }

    #[test]
    fn opaque_and_clear_sources_short_circuit() {
        let dst = Color::rgba(10, 20, 30, 40);
        assert_eq!(source_over(Color::rgb(1, 2, 3), dst), Color::rgb(1, 2, 3));
        assert_eq!(source_over(Color::rgba(1, 2, 3, 0), dst), dst);
    }

    #[test]
    fn half_alpha_over_opaque_rounds_half_up() {
        // 255*128/255 + 0 = 128 exactly; 0*128 + 255*127/255 = 127.
        let c = source_over(Color::rgba(255, 0, 0, 128), Color::rgb(0, 0, 255));
        assert_eq!(c, Color::rgba(128, 0, 127, 255));
    }

    #[test]
    fn over_transparent_keeps_source_color() {
        let c = source_over(Color::rgba(200, 100, 50, 77), Color::TRANSPARENT);
        assert_eq!(c, Color::rgba(200, 100, 50, 77));
    }

    #[test]
    fn png_roundtrip_preserves_pixels() {
        let r = Raster::from_fn(7, 5, |x, y| Color::rgba(x as u8 * 30, y as u8 * 40, 9, 200));
        let back = Raster::decode_png(&r.encode_png().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn content_address_is_stable() {
        let mut s = AssetStore::new();
        let id1 = s.insert_content_addressed(Raster::filled(3, 3, Color::WHITE));
        let id2 = s.insert_content_addressed(Raster::filled(3, 3, Color::WHITE));
        assert_eq!(id1, id2);
        assert_eq!(s.len(), 1);
        assert!(id1.starts_with("img-") && id1.len() == 20);
    }
}
