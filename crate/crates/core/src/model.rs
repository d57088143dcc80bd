//! In-memory design documents: a tree of typed layers under a root frame.
//!
//! Child coordinates are relative to the enclosing frame or group. Within a
//! container, list order is stacking order: later children paint on top.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::vector::VectorGraphic;

/// Axis-aligned box in canvas pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Overlap of two boxes, `None` when they do not share positive area.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

/// Non-premultiplied RGBA8 color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: u8,
}

impl Color {
    pub const BLACK: Color = Color::rgb(0, 0, 0);
    pub const WHITE: Color = Color::rgb(255, 255, 255);
    pub const TRANSPARENT: Color = Color::rgba(0, 0, 0, 0);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b, a: 255 }
    }

    pub const fn rgba(r: u8, g: u8, b: u8, a: u8) -> Self {
        Self { r, g, b, a }
    }

    pub fn to_array(self) -> [u8; 4] {
        [self.r, self.g, self.b, self.a]
    }

    /// `#rrggbbaa`, lowercase.
    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}{:02x}", self.r, self.g, self.b, self.a)
    }

    /// Accepts `#rrggbb` (opaque) and `#rrggbbaa`.
    pub fn from_hex(s: &str) -> Option<Self> {
        let hex = s.strip_prefix('#')?;
        if !hex.is_ascii() || (hex.len() != 6 && hex.len() != 8) {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
        let a = if hex.len() == 8 { byte(6)? } else { 255 };
        Some(Self::rgba(byte(0)?, byte(2)?, byte(4)?, a))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Color {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Color::from_hex(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid color {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HAlign {
    Left,
    Center,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VAlign {
    Top,
    Middle,
    Bottom,
}

impl HAlign {
    pub fn as_str(self) -> &'static str {
        match self {
            HAlign::Left => "left",
            HAlign::Center => "center",
            HAlign::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left" => Some(HAlign::Left),
            "center" => Some(HAlign::Center),
            "right" => Some(HAlign::Right),
            _ => None,
        }
    }
}

impl VAlign {
    pub fn as_str(self) -> &'static str {
        match self {
            VAlign::Top => "top",
            VAlign::Middle => "middle",
            VAlign::Bottom => "bottom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "top" => Some(VAlign::Top),
            "middle" => Some(VAlign::Middle),
            "bottom" => Some(VAlign::Bottom),
            _ => None,
        }
    }
}

/// Where an image layer's pixels come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    /// Raster stored in an [`AssetStore`](crate::raster::AssetStore).
    Asset(String),
    /// Still to be produced by an image provider.
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<Color>,
    #[serde(default)]
    pub children: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLayer {
    #[serde(default)]
    pub children: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphicLayer {
    pub graphic: VectorGraphic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLayer {
    pub content: String,
    pub font_size: f64,
    pub font_tag: String,
    pub color: Color,
    pub h_align: HAlign,
    pub v_align: VAlign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageLayer {
    pub source: ImageSource,
    pub description_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    Frame(FrameLayer),
    Group(GroupLayer),
    Graphic(GraphicLayer),
    Text(TextLayer),
    Image(ImageLayer),
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Frame(_) => "frame",
            LayerKind::Group(_) => "group",
            LayerKind::Graphic(_) => "graphic",
            LayerKind::Text(_) => "text",
            LayerKind::Image(_) => "image",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub id: String,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: LayerKind,
}

impl Layer {
    pub fn new(id: impl Into<String>, bbox: BBox, kind: LayerKind) -> Self {
        Self { id: id.into(), bbox, name: None, kind }
    }

    pub fn frame(id: impl Into<String>, bbox: BBox, background: Option<Color>, children: Vec<Layer>) -> Self {
        Self::new(id, bbox, LayerKind::Frame(FrameLayer { background, children }))
    }

    pub fn group(id: impl Into<String>, bbox: BBox, children: Vec<Layer>) -> Self {
        Self::new(id, bbox, LayerKind::Group(GroupLayer { children }))
    }

    pub fn text(id: impl Into<String>, bbox: BBox, content: impl Into<String>, font_size: f64, color: Color) -> Self {
        Self::new(
            id,
            bbox,
            LayerKind::Text(TextLayer {
                content: content.into(),
                font_size,
                font_tag: "sans".into(),
                color,
                h_align: HAlign::Left,
                v_align: VAlign::Top,
            }),
        )
    }

    pub fn image(id: impl Into<String>, bbox: BBox, source: ImageSource, tag: impl Into<String>) -> Self {
        Self::new(id, bbox, LayerKind::Image(ImageLayer { source, description_tag: tag.into() }))
    }

    pub fn graphic(id: impl Into<String>, bbox: BBox, graphic: VectorGraphic) -> Self {
        Self::new(id, bbox, LayerKind::Graphic(GraphicLayer { graphic }))
    }

    pub fn children(&self) -> &[Layer] {
        match &self.kind {
            LayerKind::Frame(f) => &f.children,
            LayerKind::Group(g) => &g.children,
            _ => &[],
        }
    }

    pub fn children_mut(&mut self) -> Option<&mut Vec<Layer>> {
        match &mut self.kind {
            LayerKind::Frame(f) => Some(&mut f.children),
            LayerKind::Group(g) => Some(&mut g.children),
            _ => None,
        }
    }

    pub fn is_container(&self) -> bool {
        matches!(self.kind, LayerKind::Frame(_) | LayerKind::Group(_))
    }

    pub fn as_text(&self) -> Option<&TextLayer> {
        match &self.kind {
            LayerKind::Text(t) => Some(t),
            _ => None,
        }
    }

    /// Number of layers in this subtree, including `self`.
    pub fn count(&self) -> usize {
        1 + self.children().iter().map(Layer::count).sum::<usize>()
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut Layer)) {
        f(self);
        if let Some(children) = self.children_mut() {
            for child in children {
                child.visit_mut(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub root: Layer,
}

impl DesignDocument {
    /// Document with an empty root frame covering the canvas.
    pub fn new(canvas_width: u32, canvas_height: u32) -> Self {
        let bbox = BBox::new(0.0, 0.0, canvas_width as f64, canvas_height as f64);
        Self { canvas_width, canvas_height, root: Layer::frame("n0", bbox, None, Vec::new()) }
    }

    pub fn with_children(mut self, children: Vec<Layer>) -> Self {
        if let Some(c) = self.root.children_mut() {
            *c = children;
        }
        self
    }

    pub fn layer_count(&self) -> usize {
        self.root.count()
    }

    /// Pre-order walk over every layer.
    pub fn layers(&self) -> Vec<&Layer> {
        fn walk<'a>(layer: &'a Layer, out: &mut Vec<&'a Layer>) {
            out.push(layer);
            for c in layer.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::with_capacity(self.layer_count());
        walk(&self.root, &mut out);
        out
    }

    /// Applies `f` to every layer in pre-order.
    pub fn for_each_layer_mut(&mut self, mut f: impl FnMut(&mut Layer)) {
        self.root.visit_mut(&mut f);
    }

    pub fn text_layers(&self) -> impl Iterator<Item = &TextLayer> {
        self.layers().into_iter().filter_map(Layer::as_text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Invariant that a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    CanvasSize,
    RootIsFrame,
    RootBbox,
    UniqueId,
    EmptyId,
    BboxFinite,
    BboxPositive,
    TextNonEmpty,
    FontSizePositive,
    AssetIdNonEmpty,
    GraphicBounds,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::CanvasSize => "canvas_size",
            Rule::RootIsFrame => "root_is_frame",
            Rule::RootBbox => "root_bbox",
            Rule::UniqueId => "unique_id",
            Rule::EmptyId => "empty_id",
            Rule::BboxFinite => "bbox_finite",
            Rule::BboxPositive => "bbox_positive",
            Rule::TextNonEmpty => "text_non_empty",
            Rule::FontSizePositive => "font_size_positive",
            Rule::AssetIdNonEmpty => "asset_id_non_empty",
            Rule::GraphicBounds => "graphic_bounds",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub layer_id: Option<String>,
    /// Tree paths (`root/0/2`) of the offending layers.
    pub paths: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule)?;
        if let Some(id) = &self.layer_id {
            write!(f, " [{id}]")?;
        }
        if !self.paths.is_empty() {
            write!(f, " at {}", self.paths.join(", "))?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant; violations are reported, never raised.
pub fn validate(doc: &DesignDocument) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |rule: Rule, layer: Option<&Layer>, path: &str, detail: String| {
        violations.push(Violation {
            rule,
            layer_id: layer.map(|l| l.id.clone()),
            paths: vec![path.to_string()],
            detail,
        });
    };

    if doc.canvas_width < 1 || doc.canvas_height < 1 {
        push(
            Rule::CanvasSize,
            None,
            "root",
            format!("canvas {}x{} must be at least 1x1", doc.canvas_width, doc.canvas_height),
        );
    }
    if !matches!(doc.root.kind, LayerKind::Frame(_)) {
        push(Rule::RootIsFrame, Some(&doc.root), "root", format!("root is a {}", doc.root.kind.name()));
    }
    let expected = BBox::new(0.0, 0.0, doc.canvas_width as f64, doc.canvas_height as f64);
    if doc.root.bbox != expected {
        push(
            Rule::RootBbox,
            Some(&doc.root),
            "root",
            format!("root bbox {:?} differs from the canvas {:?}", doc.root.bbox, expected),
        );
    }

    let mut ids: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut stack: Vec<(&Layer, String)> = vec![(&doc.root, "root".to_string())];
    while let Some((layer, path)) = stack.pop() {
        ids.entry(layer.id.as_str()).or_default().push(path.clone());
        if layer.id.is_empty() {
            push(Rule::EmptyId, Some(layer), &path, "layer id is empty".into());
        }
        let b = &layer.bbox;
        if !b.is_finite() {
            push(Rule::BboxFinite, Some(layer), &path, format!("non-finite bbox {b:?}"));
        } else if !(b.w > 0.0 && b.h > 0.0) {
            push(Rule::BboxPositive, Some(layer), &path, format!("bbox size {}x{} must be positive", b.w, b.h));
        }
        match &layer.kind {
            LayerKind::Text(t) => {
                if t.content.is_empty() {
                    push(Rule::TextNonEmpty, Some(layer), &path, "text content is empty".into());
                }
                if !(t.font_size.is_finite() && t.font_size > 0.0) {
                    push(Rule::FontSizePositive, Some(layer), &path, format!("font size {}", t.font_size));
                }
            }
            LayerKind::Image(img) => {
                if matches!(&img.source, ImageSource::Asset(id) if id.is_empty()) {
                    push(Rule::AssetIdNonEmpty, Some(layer), &path, "asset reference has an empty id".into());
                }
            }
            LayerKind::Graphic(g) => {
                if let Err(detail) = g.graphic.check() {
                    push(Rule::GraphicBounds, Some(layer), &path, detail);
                }
            }
            LayerKind::Frame(_) | LayerKind::Group(_) => {}
        }
        // Reverse so pre-order is preserved by the stack.
        for (i, child) in layer.children().iter().enumerate().rev() {
            stack.push((child, format!("{path}/{i}")));
        }
    }

    for (id, paths) in ids {
        if paths.len() > 1 {
            violations.push(Violation {
                rule: Rule::UniqueId,
                layer_id: Some(id.to_string()),
                detail: format!("id {id:?} used by {} layers", paths.len()),
                paths,
            });
        }
    }
    violations.sort_by(|a, b| (a.rule, &a.paths).cmp(&(b.rule, &b.paths)));
    ValidationReport { violations }
}

/// A layer together with its canvas-space geometry.
#[derive(Debug, Clone, Copy)]
pub struct FlatLayer<'a> {
    pub bbox: BBox,
    /// Intersection of the enclosing frames' boxes; content outside is clipped.
    pub clip: BBox,
    pub depth: usize,
    pub layer: &'a Layer,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid document: {}", .report.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidDocument {
    pub report: ValidationReport,
}

/// Layers in paint order (parent before children, siblings in list order)
/// with container offsets accumulated into absolute boxes.
pub fn flatten(doc: &DesignDocument) -> Result<Vec<FlatLayer<'_>>, InvalidDocument> {
    let report = validate(doc);
    if !report.is_valid() {
        return Err(InvalidDocument { report });
    }
    Ok(flatten_unchecked(doc))
}

/// [`flatten`] without the validation pass; callers guarantee validity.
pub(crate) fn flatten_unchecked(doc: &DesignDocument) -> Vec<FlatLayer<'_>> {
    fn walk<'a>(layer: &'a Layer, ox: f64, oy: f64, clip: BBox, depth: usize, out: &mut Vec<FlatLayer<'a>>) {
        let bbox = layer.bbox.translate(ox, oy);
        out.push(FlatLayer { bbox, clip, depth, layer });
        let inner_clip = match layer.kind {
            // A frame whose box misses its clip leaves an empty clip behind.
            LayerKind::Frame(_) => clip.intersect(&bbox).unwrap_or(BBox::new(bbox.x, bbox.y, 0.0, 0.0)),
            _ => clip,
        };
        for child in layer.children() {
            walk(child, bbox.x, bbox.y, inner_clip, depth + 1, out);
        }
    }
    let canvas = BBox::new(0.0, 0.0, doc.canvas_width as f64, doc.canvas_height as f64);
    let mut out = Vec::with_capacity(doc.layer_count());
    // The root frame sits at the origin, so its children are offset by zero.
    walk(&doc.root, 0.0, 0.0, canvas, 0, &mut out);
    out
}
