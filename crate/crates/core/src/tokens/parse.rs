//! Token stream to document.
//!
//! [`DocBuilder`] accepts tokens one at a time so a generation session can
//! react to `<|image_gen|>` while the stream is still being produced.

use std::collections::BTreeMap;

use thiserror::Error;

use super::lexer::{LexError, Tokenizer};
use super::{Special, Spanned, Token};
use crate::model::{
    validate, BBox, Color, DesignDocument, FrameLayer, GraphicLayer, GroupLayer, HAlign, ImageLayer, ImageSource,
    Layer, LayerKind, TextLayer, VAlign, ValidationReport,
};
use crate::num::parse_num;
use crate::vector::{pathdata, Orientation, VectorGraphic, VectorPath};

/// Largest accepted |coordinate|, size or font size.
const MAX_MAGNITUDE: f64 = 1.0e7;
/// Largest accepted canvas or view-box edge.
const MAX_CANVAS: u32 = 32_768;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unbalanced {token} at byte {offset}")]
    UnbalancedToken { offset: usize, token: String },
    #[error("unknown special token <|{name}|> at byte {offset}")]
    UnknownToken { offset: usize, name: String },
    #[error("unexpected {found} at byte {offset}; expected {expected}")]
    UnexpectedToken { offset: usize, found: String, expected: &'static str },
    #[error("{kind} layer at byte {offset} is missing attribute `{key}`")]
    MissingAttribute { offset: usize, kind: &'static str, key: &'static str },
    #[error("unknown attribute `{key}` for {kind} at byte {offset}")]
    UnknownAttribute { offset: usize, kind: &'static str, key: String },
    #[error("duplicate attribute `{key}` at byte {offset}")]
    DuplicateAttribute { offset: usize, key: String },
    #[error("malformed number {value:?} for `{key}` at byte {offset}")]
    MalformedNumber { offset: usize, key: String, value: String },
    #[error("invalid value {value:?} for `{key}` at byte {offset}")]
    InvalidValue { offset: usize, key: String, value: String },
    #[error("input ends inside an open layer at byte {offset}")]
    Truncated { offset: usize },
    #[error("{source}")]
    Lexical {
        offset: usize,
        #[source]
        source: LexError,
    },
    #[error("document invariant violated near byte {offset}: {report:?}")]
    InvariantViolation { offset: usize, report: ValidationReport },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnbalancedToken { offset, .. }
            | ParseError::UnknownToken { offset, .. }
            | ParseError::UnexpectedToken { offset, .. }
            | ParseError::MissingAttribute { offset, .. }
            | ParseError::UnknownAttribute { offset, .. }
            | ParseError::DuplicateAttribute { offset, .. }
            | ParseError::MalformedNumber { offset, .. }
            | ParseError::InvalidValue { offset, .. }
            | ParseError::Truncated { offset }
            | ParseError::Lexical { offset, .. }
            | ParseError::InvariantViolation { offset, .. } => *offset,
        }
    }

    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::UnbalancedToken { .. } => "unbalanced_token",
            ParseError::UnknownToken { .. } => "unknown_token",
            ParseError::UnexpectedToken { .. } => "unexpected_token",
            ParseError::MissingAttribute { .. } => "missing_attribute",
            ParseError::UnknownAttribute { .. } => "unknown_attribute",
            ParseError::DuplicateAttribute { .. } => "duplicate_attribute",
            ParseError::MalformedNumber { .. } => "malformed_number",
            ParseError::InvalidValue { .. } => "invalid_value",
            ParseError::Truncated { .. } => "truncated",
            ParseError::Lexical { .. } => "lexical",
            ParseError::InvariantViolation { .. } => "invariant_violation",
        }
    }
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        match e {
            LexError::UnknownToken { offset, name } => ParseError::UnknownToken { offset, name },
            other => ParseError::Lexical { offset: other.offset(), source: other },
        }
    }
}

/// Something the caller may need to act on while building.
#[derive(Debug, Clone, PartialEq)]
pub enum BuildEvent {
    None,
    /// `<|image_gen|>` inside an image layer whose box is known.
    ImageGen { image_index: usize, offset: usize, bbox: BBox },
    /// An image layer closed; `placeholder` is true when it awaits generation.
    ImageClosed { image_index: usize, placeholder: bool, description_tag: String },
    DocClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpenKind {
    Frame,
    Group,
    Graphic,
    Text,
    Image,
}

impl OpenKind {
    fn name(self) -> &'static str {
        match self {
            OpenKind::Frame => "frame",
            OpenKind::Group => "group",
            OpenKind::Graphic => "graphic",
            OpenKind::Text => "text",
            OpenKind::Image => "image",
        }
    }

    fn closer(self) -> Option<Special> {
        match self {
            OpenKind::Frame => Some(Special::FrameEnd),
            OpenKind::Group => Some(Special::GroupEnd),
            OpenKind::Text => Some(Special::TextEnd),
            OpenKind::Image => Some(Special::ImageEnd),
            OpenKind::Graphic => None,
        }
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            OpenKind::Frame => &["background"],
            OpenKind::Group => &[],
            OpenKind::Graphic => &["paths", "view_h", "view_w"],
            OpenKind::Text => &["color", "font_size", "font_tag", "h_align", "v_align"],
            OpenKind::Image => &[],
        }
    }
}

#[derive(Debug, Default)]
struct Attrs {
    entries: BTreeMap<String, (String, usize)>,
}

impl Attrs {
    fn insert(&mut self, key: String, value: String, offset: usize) -> Result<(), ParseError> {
        if self.entries.contains_key(&key) {
            return Err(ParseError::DuplicateAttribute { offset, key });
        }
        self.entries.insert(key, (value, offset));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), *o))
    }

    fn required(&self, kind: &'static str, key: &'static str, layer_offset: usize) -> Result<(&str, usize), ParseError> {
        self.get(key).ok_or(ParseError::MissingAttribute { offset: layer_offset, kind, key })
    }

    fn number(&self, kind: &'static str, key: &'static str, layer_offset: usize) -> Result<f64, ParseError> {
        let (v, o) = self.required(kind, key, layer_offset)?;
        parse_num(v)
            .filter(|n| n.abs() <= MAX_MAGNITUDE)
            .ok_or_else(|| ParseError::MalformedNumber { offset: o, key: key.into(), value: v.into() })
    }

    fn dimension(&self, kind: &'static str, key: &'static str, layer_offset: usize) -> Result<u32, ParseError> {
        let (v, o) = self.required(kind, key, layer_offset)?;
        v.parse::<u32>()
            .ok()
            .filter(|n| (1..=MAX_CANVAS).contains(n) && v.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| ParseError::MalformedNumber { offset: o, key: key.into(), value: v.into() })
    }

    fn color(&self, key: &'static str) -> Result<Option<Color>, ParseError> {
        self.get(key)
            .map(|(v, o)| {
                Color::from_hex(v).ok_or_else(|| ParseError::InvalidValue { offset: o, key: key.into(), value: v.into() })
            })
            .transpose()
    }

    fn bbox(&self, kind: &'static str, layer_offset: usize) -> Result<BBox, ParseError> {
        Ok(BBox::new(
            self.number(kind, "x", layer_offset)?,
            self.number(kind, "y", layer_offset)?,
            self.number(kind, "w", layer_offset)?,
            self.number(kind, "h", layer_offset)?,
        ))
    }
}

#[derive(Debug)]
struct OpenLayer {
    kind: OpenKind,
    offset: usize,
    preorder: usize,
    attrs: Attrs,
    attrs_done: bool,
    children: Vec<Layer>,
    content: Option<String>,
    source: Option<ImageSource>,
    des_seen: bool,
    tag: Option<String>,
    image_index: usize,
}

impl OpenLayer {
    fn new(kind: OpenKind, offset: usize, preorder: usize, image_index: usize) -> Self {
        Self {
            kind,
            offset,
            preorder,
            attrs: Attrs::default(),
            attrs_done: false,
            children: Vec::new(),
            content: None,
            source: None,
            des_seen: false,
            tag: None,
            image_index,
        }
    }

    fn into_layer(self) -> Result<Layer, ParseError> {
        let kind = self.kind.name();
        let allowed = self.kind.allowed_keys();
        for (key, (_, o)) in &self.attrs.entries {
            let common = matches!(key.as_str(), "x" | "y" | "w" | "h" | "id" | "name");
            if !common && !allowed.contains(&key.as_str()) {
                return Err(ParseError::UnknownAttribute { offset: *o, kind, key: key.clone() });
            }
        }
        let a = &self.attrs;
        let bbox = a.bbox(kind, self.offset)?;
        let id = a.get("id").map_or_else(|| default_id(self.preorder), |(v, _)| v.to_string());
        let name = a.get("name").map(|(v, _)| v.to_string());
        let layer_kind = match self.kind {
            OpenKind::Frame => LayerKind::Frame(FrameLayer { background: a.color("background")?, children: self.children }),
            OpenKind::Group => LayerKind::Group(GroupLayer { children: self.children }),
            OpenKind::Graphic => LayerKind::Graphic(GraphicLayer { graphic: parse_graphic(a, self.offset)? }),
            OpenKind::Text => {
                let invalid = |key: &str, (v, o): (&str, usize)| ParseError::InvalidValue {
                    offset: o,
                    key: key.into(),
                    value: v.into(),
                };
                let h = a.required(kind, "h_align", self.offset)?;
                let v = a.required(kind, "v_align", self.offset)?;
                LayerKind::Text(TextLayer {
                    content: self.content.unwrap_or_default(),
                    font_size: a.number(kind, "font_size", self.offset)?,
                    font_tag: a.required(kind, "font_tag", self.offset)?.0.to_string(),
                    color: a.color("color")?.ok_or(ParseError::MissingAttribute {
                        offset: self.offset,
                        kind,
                        key: "color",
                    })?,
                    h_align: HAlign::parse(h.0).ok_or_else(|| invalid("h_align", h))?,
                    v_align: VAlign::parse(v.0).ok_or_else(|| invalid("v_align", v))?,
                })
            }
            OpenKind::Image => LayerKind::Image(ImageLayer {
                source: self.source.unwrap_or(ImageSource::Placeholder),
                description_tag: self.tag.unwrap_or_default(),
            }),
        };
        Ok(Layer { id, bbox, name, kind: layer_kind })
    }
}

fn parse_graphic(a: &Attrs, layer_offset: usize) -> Result<VectorGraphic, ParseError> {
    let view_w = a.dimension("graphic", "view_w", layer_offset)?;
    let view_h = a.dimension("graphic", "view_h", layer_offset)?;
    let (raw, o) = a.required("graphic", "paths", layer_offset)?;
    let invalid = || ParseError::InvalidValue { offset: o, key: "paths".into(), value: raw.into() };
    let mut paths = Vec::new();
    for entry in raw.split(';').filter(|e| !e.trim().is_empty()) {
        let mut parts = entry.trim().splitn(3, ' ');
        let fill = parts.next().and_then(Color::from_hex).ok_or_else(invalid)?;
        let orientation = parts.next().and_then(Orientation::parse).ok_or_else(invalid)?;
        let mut outlines = pathdata::parse_outlines(parts.next().ok_or_else(invalid)?).map_err(|_| invalid())?;
        if outlines.len() != 1 {
            return Err(invalid());
        }
        paths.push(VectorPath { outline: outlines.remove(0), fill, orientation });
    }
    Ok(VectorGraphic { view_w, view_h, paths })
}

/// Id given to a layer without an explicit `id=` attribute.
pub(crate) fn default_id(preorder: usize) -> String {
    format!("n{preorder}")
}

fn describe(token: &Token) -> String {
    match token {
        Token::Special(s) => s.to_string(),
        Token::Attr { key, .. } => format!("attribute `{key}`"),
        Token::Span(_) => "text span".into(),
    }
}

/// Incremental document assembler.
#[derive(Debug, Default)]
pub struct DocBuilder {
    doc_offset: Option<usize>,
    doc_attrs: Attrs,
    doc_attrs_done: bool,
    stack: Vec<OpenLayer>,
    root: Option<Layer>,
    /// Opening offset of every layer by pre-order index.
    layer_offsets: Vec<usize>,
    images_opened: usize,
    closed: Option<DesignDocument>,
}

impl DocBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_closed(&self) -> bool {
        self.closed.is_some()
    }

    /// Number of image layers opened so far.
    pub fn images_opened(&self) -> usize {
        self.images_opened
    }

    pub fn push(&mut self, spanned: Spanned) -> Result<BuildEvent, ParseError> {
        let Spanned { token, offset } = spanned;
        let found = describe(&token);
        let unexpected = |expected: &'static str| ParseError::UnexpectedToken { offset, found: found.clone(), expected };
        if self.closed.is_some() {
            return Err(unexpected("end of input"));
        }
        if self.doc_offset.is_none() {
            return match token {
                Token::Special(Special::Doc) => {
                    self.doc_offset = Some(offset);
                    Ok(BuildEvent::None)
                }
                Token::Special(s) if s.name().starts_with('/') => {
                    Err(ParseError::UnbalancedToken { offset, token: s.to_string() })
                }
                _ => Err(unexpected("<|doc|>")),
            };
        }
        // Graphic layers have no closing token: any non-attribute ends them.
        if !matches!(token, Token::Attr { .. }) && self.stack.last().is_some_and(|t| t.kind == OpenKind::Graphic) {
            self.close_top()?;
        }

        match token {
            Token::Attr { key, value } => {
                let attrs = match self.stack.last_mut() {
                    None if !self.doc_attrs_done => &mut self.doc_attrs,
                    Some(top) if !top.attrs_done => &mut top.attrs,
                    _ => return Err(ParseError::UnexpectedToken { offset, found: format!("attribute `{key}`"), expected: "layer content" }),
                };
                attrs.insert(key, value, offset)?;
                Ok(BuildEvent::None)
            }
            Token::Special(s @ (Special::Frame | Special::Group | Special::Graphic | Special::Text | Special::Image)) => {
                let kind = match s {
                    Special::Frame => OpenKind::Frame,
                    Special::Group => OpenKind::Group,
                    Special::Graphic => OpenKind::Graphic,
                    Special::Text => OpenKind::Text,
                    _ => OpenKind::Image,
                };
                match self.stack.last_mut() {
                    None => {
                        if self.root.is_some() || kind != OpenKind::Frame {
                            return Err(unexpected("root <|frame|> or <|/doc|>"));
                        }
                        self.doc_attrs_done = true;
                    }
                    Some(top) if matches!(top.kind, OpenKind::Frame | OpenKind::Group) => top.attrs_done = true,
                    Some(_) => return Err(unexpected("layer content")),
                }
                let image_index = self.images_opened;
                if kind == OpenKind::Image {
                    self.images_opened += 1;
                }
                self.layer_offsets.push(offset);
                self.stack.push(OpenLayer::new(kind, offset, self.layer_offsets.len() - 1, image_index));
                Ok(BuildEvent::None)
            }
            Token::Span(text) => {
                let top = self.stack.last_mut().ok_or_else(|| unexpected("a layer"))?;
                match top.kind {
                    OpenKind::Text if top.content.is_none() => {
                        top.attrs_done = true;
                        top.content = Some(text);
                    }
                    OpenKind::Image if top.source.is_none() => {
                        top.attrs_done = true;
                        top.source = Some(ImageSource::Asset(text));
                    }
                    OpenKind::Image if top.des_seen && top.tag.is_none() => top.tag = Some(text),
                    _ => return Err(unexpected("special token")),
                }
                Ok(BuildEvent::None)
            }
            Token::Special(Special::ImageGen) => {
                let top = self.stack.last_mut().ok_or_else(|| unexpected("a layer"))?;
                if top.kind != OpenKind::Image || top.source.is_some() {
                    return Err(unexpected("image content"));
                }
                top.attrs_done = true;
                top.source = Some(ImageSource::Placeholder);
                let bbox = top.attrs.bbox("image", top.offset)?;
                Ok(BuildEvent::ImageGen { image_index: top.image_index, offset, bbox })
            }
            Token::Special(Special::ImageDes) => {
                let top = self.stack.last_mut().ok_or_else(|| unexpected("a layer"))?;
                if top.kind != OpenKind::Image || top.source.is_none() || top.des_seen {
                    return Err(unexpected("image source before <|image_des|>"));
                }
                top.des_seen = true;
                Ok(BuildEvent::None)
            }
            Token::Special(Special::DocEnd) => {
                if !self.stack.is_empty() {
                    return Err(ParseError::UnbalancedToken { offset, token: Special::DocEnd.to_string() });
                }
                let root = self.root.take().ok_or_else(|| unexpected("root <|frame|>"))?;
                let doc_offset = self.doc_offset.unwrap_or(0);
                let doc = DesignDocument {
                    canvas_width: self.doc_attrs.dimension("doc", "w", doc_offset)?,
                    canvas_height: self.doc_attrs.dimension("doc", "h", doc_offset)?,
                    root,
                };
                if let Some((key, (_, o))) = self.doc_attrs.entries.iter().find(|(k, _)| *k != "w" && *k != "h") {
                    return Err(ParseError::UnknownAttribute { offset: *o, kind: "doc", key: key.clone() });
                }
                let report = validate(&doc);
                if !report.is_valid() {
                    let offset = self.violation_offset(&doc, &report).unwrap_or(offset);
                    return Err(ParseError::InvariantViolation { offset, report });
                }
                self.closed = Some(doc);
                Ok(BuildEvent::DocClosed)
            }
            Token::Special(closer) => {
                let Some(top) = self.stack.last() else {
                    return Err(ParseError::UnbalancedToken { offset, token: closer.to_string() });
                };
                if top.kind.closer() != Some(closer) {
                    return Err(ParseError::UnbalancedToken { offset, token: closer.to_string() });
                }
                match top.kind {
                    OpenKind::Text if top.content.is_none() => return Err(unexpected("text content")),
                    OpenKind::Image if top.tag.is_none() => return Err(unexpected("<|image_des|> and tag")),
                    _ => {}
                }
                let event = if top.kind == OpenKind::Image {
                    BuildEvent::ImageClosed {
                        image_index: top.image_index,
                        placeholder: top.source == Some(ImageSource::Placeholder),
                        description_tag: top.tag.clone().unwrap_or_default(),
                    }
                } else {
                    BuildEvent::None
                };
                self.close_top()?;
                Ok(event)
            }
        }
    }

    /// Rewrites the most recently closed image layer. Only valid right after
    /// the [`BuildEvent::ImageClosed`] for it.
    pub fn patch_last_image(&mut self, source: ImageSource, description_tag: Option<String>) -> bool {
        let siblings = match self.stack.last_mut() {
            Some(top) => &mut top.children,
            None => return false,
        };
        match siblings.last_mut().map(|l| &mut l.kind) {
            Some(LayerKind::Image(img)) => {
                img.source = source;
                if let Some(tag) = description_tag {
                    img.description_tag = tag;
                }
                true
            }
            _ => false,
        }
    }

    fn close_top(&mut self) -> Result<(), ParseError> {
        let open = self.stack.pop().expect("close_top on empty stack");
        let layer = open.into_layer()?;
        match self.stack.last_mut() {
            Some(parent) => parent.children.push(layer),
            None => self.root = Some(layer),
        }
        Ok(())
    }

    fn violation_offset(&self, doc: &DesignDocument, report: &ValidationReport) -> Option<usize> {
        fn walk(layer: &Layer, path: String, out: &mut Vec<String>) {
            for (i, c) in layer.children().iter().enumerate() {
                out.push(format!("{path}/{i}"));
                walk(c, format!("{path}/{i}"), out);
            }
        }
        let mut paths = vec!["root".to_string()];
        walk(&doc.root, "root".into(), &mut paths);
        let first = report.violations.first()?.paths.first()?;
        let index = paths.iter().position(|p| p == first)?;
        self.layer_offsets.get(index).copied()
    }

    /// Returns the finished document; `end` is the input length for errors.
    pub fn finish(self, end: usize) -> Result<DesignDocument, ParseError> {
        self.closed.ok_or(ParseError::Truncated { offset: end })
    }
}

/// Parses canonical token text into a validated document.
pub fn parse(text: &str) -> Result<DesignDocument, ParseError> {
    let mut tokenizer = Tokenizer::new();
    let mut builder = DocBuilder::new();
    for t in tokenizer.feed(text)? {
        builder.push(t)?;
    }
    let tail = tokenizer.finish().map_err(|e| match e {
        LexError::Incomplete { offset } => ParseError::Truncated { offset },
        other => other.into(),
    })?;
    for t in tail {
        builder.push(t)?;
    }
    builder.finish(text.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "<|doc|> w=100 h=100 <|frame|> x=0 y=0 w=100 h=100 <|/frame|> <|/doc|>";

    #[test]
    fn minimal_document() {
        let doc = parse(MINIMAL).unwrap();
        assert_eq!(doc, DesignDocument::new(100, 100));
    }

    #[test]
    fn close_before_open_is_unbalanced() {
        let s = "<|doc|> w=100 h=100 <|/frame|> <|frame|> x=0 y=0 w=100 h=100 <|/frame|> <|/doc|>";
        assert_eq!(
            parse(s),
            Err(ParseError::UnbalancedToken { offset: 20, token: "<|/frame|>".into() })
        );
    }

    #[test]
    fn mismatched_close_is_unbalanced() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 <|/group|> <|/doc|>";
        assert!(matches!(parse(s), Err(ParseError::UnbalancedToken { offset: 46, .. })));
    }

    #[test]
    fn missing_attribute_names_kind_and_key() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 <|/frame|> <|/doc|>";
        assert_eq!(parse(s), Err(ParseError::MissingAttribute { offset: 18, kind: "frame", key: "h" }));
    }

    #[test]
    fn malformed_number() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=ten h=10 <|/frame|> <|/doc|>";
        assert!(matches!(parse(s), Err(ParseError::MalformedNumber { offset: 36, .. })));
        let s = "<|doc|> w=10.5 h=10 <|frame|> x=0 y=0 w=10 h=10 <|/frame|> <|/doc|>";
        assert!(matches!(parse(s), Err(ParseError::MalformedNumber { .. })));
    }

    #[test]
    fn unknown_special() {
        assert!(matches!(parse("<|doc|> <|table|>"), Err(ParseError::UnknownToken { offset: 8, .. })));
    }

    #[test]
    fn invariant_violation_points_at_layer() {
        // Text with zero width.
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 <|text|> x=0 y=0 w=0 h=5 color=#000000ff \
                 font_size=8 font_tag=sans h_align=left v_align=top hi <|/text|> <|/frame|> <|/doc|>";
        match parse(s) {
            Err(ParseError::InvariantViolation { offset, .. }) => assert_eq!(offset, 46),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_stream() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 ";
        assert_eq!(parse(s), Err(ParseError::Truncated { offset: s.len() }));
        // Ending mid-attribute is truncation at that attribute.
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10";
        assert_eq!(parse(s), Err(ParseError::Truncated { offset: 41 }));
    }

    #[test]
    fn trailing_tokens_rejected() {
        let s = format!("{MINIMAL} <|frame|>");
        assert!(matches!(parse(&s), Err(ParseError::UnexpectedToken { .. })));
    }

    #[test]
    fn attribute_after_child_rejected() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 <|group|> x=0 y=0 w=1 h=1 <|/group|> id=z <|/frame|> <|/doc|>";
        assert!(matches!(parse(s), Err(ParseError::UnexpectedToken { .. })));
    }

    #[test]
    fn graphic_closes_implicitly() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 <|graphic|> x=0 y=0 w=10 h=10 \
                 paths=\"#ffffffff cw M0 0L4 0L4 4L0 4Z\" view_h=4 view_w=4 <|/frame|> <|/doc|>";
        let doc = parse(s).unwrap();
        match &doc.root.children()[0].kind {
            LayerKind::Graphic(g) => {
                assert_eq!(g.graphic.paths.len(), 1);
                assert_eq!(g.graphic.view_w, 4);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn builder_reports_image_events() {
        let s = "<|doc|> w=600 h=800 <|frame|> x=0 y=0 w=600 h=800 <|image|> x=0 y=0 w=500 h=750 \
                 <|image_gen|> <|image_des|> a cat <|/image|> <|/frame|> <|/doc|>";
        let mut b = DocBuilder::new();
        let mut events = Vec::new();
        for t in crate::tokens::tokenize(s).unwrap() {
            let e = b.push(t).unwrap();
            if e != BuildEvent::None {
                events.push(e);
            }
        }
        assert!(matches!(events[0], BuildEvent::ImageGen { image_index: 0, bbox, .. } if bbox.w == 500.0 && bbox.h == 750.0));
        assert_eq!(
            events[1],
            BuildEvent::ImageClosed { image_index: 0, placeholder: true, description_tag: "a cat".into() }
        );
        assert_eq!(events[2], BuildEvent::DocClosed);
    }

    #[test]
    fn image_gen_before_bbox_fails() {
        let s = "<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 <|image|> x=0 y=0 <|image_gen|>";
        assert!(matches!(parse(s), Err(ParseError::MissingAttribute { kind: "image", key: "w", .. })));
    }
}
