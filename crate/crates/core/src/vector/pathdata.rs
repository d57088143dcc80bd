//! Compact path-data strings: the `M`/`L`/`C`/`Z` subset of SVG `d`.

use super::{Outline, Point, Segment};
use crate::num::{fmt_num, parse_num};

/// `M x y L x y C x1 y1 x2 y2 x y ... Z`, no separators between commands.
pub fn write_outline(outline: &Outline, out: &mut String) {
    let pt = |p: Point| format!("{} {}", fmt_num(p.x), fmt_num(p.y));
    out.push('M');
    out.push_str(&pt(outline.start));
    for seg in &outline.segments {
        match *seg {
            Segment::Line(p) => {
                out.push('L');
                out.push_str(&pt(p));
            }
            Segment::Cubic(a, b, c) => {
                out.push('C');
                out.push_str(&format!("{} {} {}", pt(a), pt(b), pt(c)));
            }
        }
    }
    out.push('Z');
}

pub fn outline_to_string(outline: &Outline) -> String {
    let mut s = String::new();
    write_outline(outline, &mut s);
    s
}

/// Parses one or more closed subpaths.
pub fn parse_outlines(d: &str) -> Result<Vec<Outline>, String> {
    let mut out = Vec::new();
    let mut current: Option<Outline> = None;
    let mut rest = d.trim_start();
    while let Some(cmd) = rest.chars().next() {
        rest = rest[cmd.len_utf8()..].trim_start();
        let arity = match cmd {
            'M' => 2,
            'L' => 2,
            'C' => 6,
            'Z' => 0,
            other => return Err(format!("unsupported path command {other:?}")),
        };
        let mut nums = [0.0f64; 6];
        for slot in nums.iter_mut().take(arity) {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == ',' || c.is_ascii_alphabetic())
                .unwrap_or(rest.len());
            *slot = parse_num(&rest[..end]).ok_or_else(|| format!("bad number {:?} in path data", &rest[..end]))?;
            rest = rest[end..].trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        }
        let p = |i: usize| Point::new(nums[i], nums[i + 1]);
        match cmd {
            'M' => {
                if current.is_some() {
                    return Err("subpath not closed before M".into());
                }
                current = Some(Outline { start: p(0), segments: Vec::new() });
            }
            'L' | 'C' => {
                let o = current.as_mut().ok_or("segment before M")?;
                o.segments.push(if cmd == 'L' { Segment::Line(p(0)) } else { Segment::Cubic(p(0), p(2), p(4)) });
            }
            _ => out.push(current.take().ok_or("Z before M")?),
        }
    }
    if current.is_some() {
        return Err("unterminated subpath".into());
    }
    Ok(out)
}
