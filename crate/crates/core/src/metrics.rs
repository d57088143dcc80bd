//! Layout and text quality metrics.
//!
//! - `r_ali`: how far each leaf layer is from sharing an alignment axis with
//!   another layer (lower is better)
//! - `r_ove`: mean pairwise overlap of text boxes (lower is better)
//! - `r_com`: mean Sobel gradient of the background under text (lower is better)
//! - `char_prf`: character multiset precision / recall / F

use std::collections::HashMap;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{flatten_unchecked, BBox, DesignDocument, LayerKind};
use crate::raster::{AssetStore, Raster};
use crate::render::{render_background, RenderError};

/// Upper clamp for per-layer alignment distances before the log transform.
pub const ALI_CLAMP: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("render is {got_w}x{got_h} but the canvas is {want_w}x{want_h}")]
    ResolutionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("{what} has {got} entries, expected {want}")]
    LengthMismatch { what: &'static str, got: usize, want: usize },
    #[error(transparent)]
    Render(#[from] RenderError),
}

fn leaf_boxes(doc: &DesignDocument) -> Vec<BBox> {
    flatten_unchecked(doc).into_iter().filter(|f| !f.layer.is_container()).map(|f| f.bbox).collect()
}

fn text_boxes(doc: &DesignDocument) -> Vec<BBox> {
    flatten_unchecked(doc)
        .into_iter()
        .filter(|f| matches!(f.layer.kind, LayerKind::Text(_)))
        .map(|f| f.bbox)
        .collect()
}

fn axes(b: BBox, cw: f64, ch: f64) -> [f64; 6] {
    let (x, y, w, h) = (b.x / cw, b.y / ch, b.w / cw, b.h / ch);
    [x, x + w / 2.0, x + w, y, y + h / 2.0, y + h]
}

/// Mean of `-log10(1 - a_i)` over leaf layers, where `a_i` is layer i's
/// smallest distance, on any of the six axes (left, center-x, right, top,
/// center-y, bottom) in canvas-normalized units, to another leaf layer.
pub fn r_ali(doc: &DesignDocument) -> f64 {
    let (cw, ch) = (doc.canvas_width as f64, doc.canvas_height as f64);
    let ax: Vec<[f64; 6]> = leaf_boxes(doc).into_iter().map(|b| axes(b, cw, ch)).collect();
    let n = ax.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .map(|i| {
            let mut a = f64::INFINITY;
            for j in (0..n).filter(|&j| j != i) {
                for (p, q) in ax[i].iter().zip(&ax[j]) {
                    a = a.min((p - q).abs());
                }
            }
            -(1.0 - a.clamp(0.0, ALI_CLAMP)).log10()
        })
        .sum();
    total / n as f64
}

/// Mean over text-box pairs of intersection area over the smaller area.
pub fn r_ove(doc: &DesignDocument) -> f64 {
    let boxes = text_boxes(doc);
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let inter = boxes[i].intersect(&boxes[j]).map_or(0.0, |b| b.area());
            sum += inter / boxes[i].area().min(boxes[j].area());
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

/// Rec. 601 luma of every pixel, alpha ignored.
pub fn luma(img: &Raster) -> Vec<f64> {
    img.colors().map(|c| 0.299 * c.r as f64 + 0.587 * c.g as f64 + 0.114 * c.b as f64).collect()
}

/// Sobel gradient magnitude at (x, y) with replicated borders.
pub fn sobel_at(gray: &[f64], w: u32, h: u32, x: u32, y: u32) -> f64 {
    let at = |dx: i64, dy: i64| {
        let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
        let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
        gray[yy * w as usize + xx]
    };
    let gx = (at(1, -1) + 2.0 * at(1, 0) + at(1, 1)) - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1));
    let gy = (at(-1, 1) + 2.0 * at(0, 1) + at(1, 1)) - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1));
    (gx * gx + gy * gy).sqrt()
}

/// Mean Sobel magnitude over the pixels whose centers lie in any text box.
///
/// `background` must be the document rendered without its text layers.
pub fn r_com(doc: &DesignDocument, background: &Raster) -> Result<f64, MetricsError> {
    if background.width() != doc.canvas_width || background.height() != doc.canvas_height {
        return Err(MetricsError::ResolutionMismatch {
            got_w: background.width(),
            got_h: background.height(),
            want_w: doc.canvas_width,
            want_h: doc.canvas_height,
        });
    }
    let boxes = text_boxes(doc);
    if boxes.is_empty() {
        return Ok(0.0);
    }
    let (w, h) = (background.width(), background.height());
    let mut inside = vec![false; w as usize * h as usize];
    for b in &boxes {
        let span = |lo: f64, hi: f64, lim: u32| {
            let c = |v: f64| v.clamp(0.0, lim as f64) as u32;
            c((lo - 0.5).ceil())..c((hi - 0.5).ceil())
        };
        for y in span(b.y, b.bottom(), h) {
            for x in span(b.x, b.right(), w) {
                inside[(y * w + x) as usize] = true;
            }
        }
    }
    let gray = luma(background);
    let (mut sum, mut count) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if inside[(y * w + x) as usize] {
                sum += sobel_at(&gray, w, h, x, y);
                count += 1;
            }
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Matched characters and the two totals for one document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharCounts {
    pub matched: usize,
    pub predicted: usize,
    pub reference: usize,
}

impl CharCounts {
    pub fn of<S: AsRef<str>>(predicted: &[S], reference: &[S]) -> Self {
        let mut bag: HashMap<char, usize> = HashMap::new();
        let mut n_ref = 0;
        for c in reference.iter().flat_map(|s| s.as_ref().chars()) {
            *bag.entry(c).or_default() += 1;
            n_ref += 1;
        }
        let (mut matched, mut n_pred) = (0, 0);
        for c in predicted.iter().flat_map(|s| s.as_ref().chars()) {
            n_pred += 1;
            if let Some(k) = bag.get_mut(&c).filter(|k| **k > 0) {
                *k -= 1;
                matched += 1;
            }
        }
        Self { matched, predicted: n_pred, reference: n_ref }
    }

    /// Precision, recall and F. Both sides empty counts as a perfect match.
    pub fn prf(&self) -> (f64, f64, f64) {
        if self.predicted == 0 && self.reference == 0 {
            return (1.0, 1.0, 1.0);
        }
        let ratio = |den: usize| if den == 0 { 0.0 } else { self.matched as f64 / den as f64 };
        let (p, r) = (ratio(self.predicted), ratio(self.reference));
        (p, r, harmonic(p, r))
    }
}

impl std::ops::Add for CharCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            matched: self.matched + o.matched,
            predicted: self.predicted + o.predicted,
            reference: self.reference + o.reference,
        }
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Character P/R/F of one document's predicted strings against references.
pub fn char_prf<S: AsRef<str>>(predicted: &[S], reference: &[S]) -> (f64, f64, f64) {
    CharCounts::of(predicted, reference).prf()
}

/// Which metrics [`evaluate_set`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricToggles {
    pub r_ali: bool,
    pub r_ove: bool,
    pub r_com: bool,
    pub chars: bool,
}

impl Default for MetricToggles {
    fn default() -> Self {
        Self { r_ali: true, r_ove: true, r_com: true, chars: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMetrics {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_ali: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_ove: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_com: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chars: Option<CharCounts>,
}

/// Aggregates over a document set. Layout metrics are means of the
/// per-document values; character scores are micro-averaged. Disabled
/// metrics, and character scores without references, are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub documents: usize,
    pub r_ali: Option<f64>,
    pub r_ove: Option<f64>,
    pub r_com: Option<f64>,
    pub char_p: Option<f64>,
    pub char_r: Option<f64>,
    pub char_f: Option<f64>,
    pub per_document: Vec<DocumentMetrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table with one header row and one aggregate row.
    pub fn to_table(&self) -> String {
        let cols = [
            ("Char-P", self.char_p),
            ("Char-R", self.char_r),
            ("Char-F", self.char_f),
            ("R_ali", self.r_ali),
            ("R_ove", self.r_ove),
            ("R_com", self.r_com),
        ];
        let mut out = String::new();
        for (name, _) in &cols {
            let _ = write!(out, "{name:>10}");
        }
        out.push('\n');
        for (_, v) in &cols {
            match v {
                Some(v) => {
                    let _ = write!(out, "{v:>10.4}");
                }
                None => {
                    let _ = write!(out, "{:>10}", "-");
                }
            }
        }
        out.push('\n');
        out
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.collect::<Option<Vec<_>>>()?;
    Some(if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 })
}

/// Scores a document set.
///
/// `backgrounds[i]` is document i rendered without text layers; `refs[i]`
/// holds the reference strings compared with document i's text contents.
pub fn evaluate_set(
    docs: &[DesignDocument],
    backgrounds: &[Raster],
    refs: Option<&[Vec<String>]>,
    toggles: MetricToggles,
) -> Result<MetricsReport, MetricsError> {
    if backgrounds.len() != docs.len() {
        return Err(MetricsError::LengthMismatch { what: "renders", got: backgrounds.len(), want: docs.len() });
    }
    if let Some(r) = refs {
        if r.len() != docs.len() {
            return Err(MetricsError::LengthMismatch { what: "references", got: r.len(), want: docs.len() });
        }
    }
    let per_document = docs
        .par_iter()
        .zip(backgrounds)
        .enumerate()
        .map(|(index, (doc, bg))| {
            let chars = match refs {
                Some(r) if toggles.chars => {
                    let predicted: Vec<&str> = doc.text_layers().map(|t| t.content.as_str()).collect();
                    let reference: Vec<&str> = r[index].iter().map(String::as_str).collect();
                    Some(CharCounts::of(&predicted, &reference))
                }
                _ => None,
            };
            Ok(DocumentMetrics {
                index,
                r_ali: toggles.r_ali.then(|| r_ali(doc)),
                r_ove: toggles.r_ove.then(|| r_ove(doc)),
                r_com: if toggles.r_com { Some(r_com(doc, bg)?) } else { None },
                chars,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;

    let (char_p, char_r, char_f) = if toggles.chars && refs.is_some() {
        let total = per_document.iter().filter_map(|d| d.chars).fold(CharCounts::default(), |a, b| a + b);
        let (p, r, f) = if docs.is_empty() { (0.0, 0.0, 0.0) } else { total.prf() };
        (Some(p), Some(r), Some(f))
    } else {
        (None, None, None)
    };
    Ok(MetricsReport {
        documents: docs.len(),
        r_ali: toggles.r_ali.then(|| mean(per_document.iter().map(|d| d.r_ali))).flatten(),
        r_ove: toggles.r_ove.then(|| mean(per_document.iter().map(|d| d.r_ove))).flatten(),
        r_com: toggles.r_com.then(|| mean(per_document.iter().map(|d| d.r_com))).flatten(),
        char_p,
        char_r,
        char_f,
        per_document,
    })
}

/// Renders each document's background and scores the set.
pub fn evaluate_documents(
    docs: &[DesignDocument],
    assets: &AssetStore,
    refs: Option<&[Vec<String>]>,
    toggles: MetricToggles,
) -> Result<MetricsReport, MetricsError> {
    let backgrounds = docs
        .par_iter()
        .map(|d| render_background(d, assets))
        .collect::<Result<Vec<_>, RenderError>>()?;
    evaluate_set(docs, &backgrounds, refs, toggles)
}
