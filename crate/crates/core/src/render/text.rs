//! Bitmap text: an 8x16 cell font and greedy line wrapping.
//!
//! Glyphs are the 8x8 ASCII set with every row doubled, scaled with
//! nearest-neighbor sampling so a cell is `font_size / 2` wide and
//! `font_size` tall. Code points outside printable ASCII draw a hollow box.

use font8x8::legacy::BASIC_LEGACY;

use crate::model::{BBox, HAlign, VAlign};

/// Cell width over cell height.
pub const CELL_ASPECT: f64 = 0.5;

const REPLACEMENT: [u8; 8] = [0xff, 0x81, 0x81, 0x81, 0x81, 0x81, 0x81, 0xff];

/// 8x8 bitmap rows for `c`; bit 0 is the leftmost column.
pub fn glyph(c: char) -> [u8; 8] {
    match c {
        ' '..='~' => BASIC_LEGACY[c as usize],
        _ if c.is_whitespace() => [0; 8],
        _ => REPLACEMENT,
    }
}

/// Whether glyph `c` covers cell coordinate `(col, row)` in the 8x16 cell.
pub fn covers(c: char, col: usize, row: usize) -> bool {
    glyph(c)[row / 2] & (1 << col) != 0
}

pub fn cell_width(font_size: f64) -> f64 {
    font_size * CELL_ASPECT
}

/// Code points that may break a line anywhere.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30ff | 0x3400..=0x4dbf | 0x4e00..=0x9fff | 0xac00..=0xd7af | 0xf900..=0xfaff | 0xff00..=0xffef)
}

/// Characters that fit on one line of width `w`, at least one.
pub fn max_columns(w: f64, font_size: f64) -> usize {
    ((w / cell_width(font_size)) + 1e-9).floor().max(1.0) as usize
}

/// Greedy wrap into lines of at most `max` characters.
///
/// Breaks at spaces (runs of spaces collapse at breaks) and between any two
/// CJK characters; words longer than a line are split hard. Explicit newlines
/// always break.
pub fn wrap(content: &str, max: usize) -> Vec<String> {
    let mut lines = Vec::new();
    for paragraph in content.split('\n') {
        let mut line: Vec<char> = Vec::new();
        let mut units: Vec<(Vec<char>, bool)> = Vec::new();
        let mut space = false;
        let mut word: Vec<char> = Vec::new();
        for c in paragraph.chars() {
            if c == ' ' || c == '\t' {
                if !word.is_empty() {
                    units.push((std::mem::take(&mut word), space));
                }
                space = true;
            } else if is_cjk(c) {
                if !word.is_empty() {
                    units.push((std::mem::take(&mut word), space));
                    space = false;
                }
                units.push((vec![c], space));
                space = false;
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            units.push((word, space));
        }
        for (mut unit, space_before) in units {
            let sep = usize::from(space_before && !line.is_empty());
            if line.len() + sep + unit.len() <= max {
                if sep == 1 {
                    line.push(' ');
                }
                line.extend(unit);
                continue;
            }
            if !line.is_empty() {
                lines.push(line.drain(..).collect());
            }
            while unit.len() > max {
                lines.push(unit.drain(..max).collect());
            }
            line = unit;
        }
        lines.push(line.into_iter().collect());
    }
    lines
}

/// A positioned line of text.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedLine {
    pub text: String,
    pub x: f64,
    pub y: f64,
}

/// Wraps `content` in `bbox` and positions each line by the alignments.
pub fn layout(content: &str, bbox: BBox, font_size: f64, h: HAlign, v: VAlign) -> Vec<PlacedLine> {
    let lines = wrap(content, max_columns(bbox.w, font_size));
    let total = lines.len() as f64 * font_size;
    let top = match v {
        VAlign::Top => bbox.y,
        VAlign::Middle => bbox.y + (bbox.h - total) / 2.0,
        VAlign::Bottom => bbox.bottom() - total,
    };
    let cw = cell_width(font_size);
    lines
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let width = text.chars().count() as f64 * cw;
            let x = match h {
                HAlign::Left => bbox.x,
                HAlign::Center => bbox.x + (bbox.w - width) / 2.0,
                HAlign::Right => bbox.right() - width,
            };
            PlacedLine { text, x, y: top + i as f64 * font_size }
        })
        .collect()
}

/// Whether `content` wraps inside a `w` x `h` box without clipping.
pub fn fits(content: &str, w: f64, h: f64, font_size: f64) -> bool {
    let max = max_columns(w, font_size);
    let lines = wrap(content, max);
    lines.len() as f64 * font_size <= h + 1e-9 && lines.iter().all(|l| l.chars().count() as f64 * cell_width(font_size) <= w + 1e-9)
}
