//! Document to canonical token text.

use super::parse::default_id;
use super::{Special, Token, TokenStream};
use crate::model::{validate, DesignDocument, ImageSource, InvalidDocument, Layer, LayerKind};
use crate::num::fmt_num;
use crate::vector::{pathdata, VectorGraphic};

/// Deterministic token stream for a valid document.
///
/// Key order per layer: `x y w h`, then the kind-specific keys (with the
/// optional `id` and `name`) alphabetically. An `id` equal to the layer's
/// default (`n<pre-order index>`) is omitted.
pub fn serialize(doc: &DesignDocument) -> Result<TokenStream, InvalidDocument> {
    let report = validate(doc);
    if !report.is_valid() {
        return Err(InvalidDocument { report });
    }
    let mut w = Writer { tokens: Vec::new(), preorder: 0 };
    w.special(Special::Doc);
    w.attr("w", doc.canvas_width.to_string());
    w.attr("h", doc.canvas_height.to_string());
    w.layer(&doc.root);
    w.special(Special::DocEnd);
    Ok(TokenStream { tokens: w.tokens })
}

struct Writer {
    tokens: Vec<Token>,
    preorder: usize,
}

impl Writer {
    fn special(&mut self, s: Special) {
        self.tokens.push(Token::Special(s));
    }

    fn attr(&mut self, key: &str, value: impl Into<String>) {
        self.tokens.push(Token::attr(key, value));
    }

    fn layer(&mut self, layer: &Layer) {
        let index = self.preorder;
        self.preorder += 1;
        let open = match &layer.kind {
            LayerKind::Frame(_) => Special::Frame,
            LayerKind::Group(_) => Special::Group,
            LayerKind::Graphic(_) => Special::Graphic,
            LayerKind::Text(_) => Special::Text,
            LayerKind::Image(_) => Special::Image,
        };
        self.special(open);
        let b = layer.bbox;
        for (k, v) in [("x", b.x), ("y", b.y), ("w", b.w), ("h", b.h)] {
            self.attr(k, fmt_num(v));
        }

        let mut keyed: Vec<(&'static str, String)> = Vec::new();
        if layer.id != default_id(index) {
            keyed.push(("id", layer.id.clone()));
        }
        if let Some(name) = &layer.name {
            keyed.push(("name", name.clone()));
        }
        match &layer.kind {
            LayerKind::Frame(f) => {
                if let Some(bg) = f.background {
                    keyed.push(("background", bg.to_hex()));
                }
            }
            LayerKind::Graphic(g) => {
                keyed.push(("paths", paths_value(&g.graphic)));
                keyed.push(("view_h", g.graphic.view_h.to_string()));
                keyed.push(("view_w", g.graphic.view_w.to_string()));
            }
            LayerKind::Text(t) => {
                keyed.push(("color", t.color.to_hex()));
                keyed.push(("font_size", fmt_num(t.font_size)));
                keyed.push(("font_tag", t.font_tag.clone()));
                keyed.push(("h_align", t.h_align.as_str().into()));
                keyed.push(("v_align", t.v_align.as_str().into()));
            }
            LayerKind::Group(_) | LayerKind::Image(_) => {}
        }
        keyed.sort_by_key(|(k, _)| *k);
        for (k, v) in keyed {
            self.attr(k, v);
        }

        match &layer.kind {
            LayerKind::Frame(f) => {
                for c in &f.children {
                    self.layer(c);
                }
                self.special(Special::FrameEnd);
            }
            LayerKind::Group(g) => {
                for c in &g.children {
                    self.layer(c);
                }
                self.special(Special::GroupEnd);
            }
            LayerKind::Graphic(_) => {}
            LayerKind::Text(t) => {
                self.tokens.push(Token::Span(t.content.clone()));
                self.special(Special::TextEnd);
            }
            LayerKind::Image(img) => {
                match &img.source {
                    ImageSource::Asset(id) => self.tokens.push(Token::Span(id.clone())),
                    ImageSource::Placeholder => self.special(Special::ImageGen),
                }
                self.special(Special::ImageDes);
                self.tokens.push(Token::Span(img.description_tag.clone()));
                self.special(Special::ImageEnd);
            }
        }
    }
}

fn paths_value(g: &VectorGraphic) -> String {
    g.paths
        .iter()
        .map(|p| format!("{} {} {}", p.fill.to_hex(), p.orientation.as_str(), pathdata::outline_to_string(&p.outline)))
        .collect::<Vec<_>>()
        .join(";")
}

/// Escapes `\`, `<|` and `|>`; with `quote`, also `"`.
fn escape_into(s: &str, quote: bool, out: &mut String) {
    let mut rest = s;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with("<|") || rest.starts_with("|>") {
            out.push('\\');
            out.push_str(&rest[..2]);
            rest = &rest[2..];
            continue;
        }
        if c == '\\' || (quote && c == '"') {
            out.push('\\');
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
}

fn needs_quotes(v: &str) -> bool {
    v.is_empty()
        || v.contains(|c: char| c.is_ascii_whitespace() || c == '"' || c == '\\')
        || v.contains("<|")
        || v.contains("|>")
}

fn escape_span(s: &str, out: &mut String) {
    let start = out.len();
    escape_into(s, false, out);
    // A span whose first word looks like `key=` would lex as an attribute.
    let escaped = &out[start..];
    let lead = escaped.len() - escaped.trim_start().len();
    let word = &escaped[lead..];
    let key_len = word.bytes().take_while(|b| b.is_ascii_lowercase() || *b == b'_').count();
    if key_len > 0 && word.as_bytes().get(key_len) == Some(&b'=') {
        out.insert(start + lead + key_len, '\\');
    }
}

/// Canonical text: tokens joined by single spaces.
pub fn to_text(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match t {
            Token::Special(s) => {
                out.push_str("<|");
                out.push_str(s.name());
                out.push_str("|>");
            }
            Token::Attr { key, value } => {
                out.push_str(key);
                out.push('=');
                if needs_quotes(value) {
                    out.push('"');
                    escape_into(value, true, &mut out);
                    out.push('"');
                } else {
                    out.push_str(value);
                }
            }
            Token::Span(s) => escape_span(s, &mut out),
        }
    }
    out
}
