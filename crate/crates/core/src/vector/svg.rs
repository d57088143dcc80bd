//! SVG 1.1 writer for vector graphics.

use std::fmt::Write;

use super::{pathdata, VectorGraphic};

/// Serializes `vg` as a standalone SVG document.
///
/// Each run of consecutive same-fill paths becomes one `path` element with
/// one subpath per outline and `fill-rule="evenodd"`, so holes stay open.
pub fn emit_svg(vg: &VectorGraphic) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = vg.view_w,
        h = vg.view_h
    );
    for group in vg.fill_groups() {
        let fill = group[0].fill;
        let mut d = String::new();
        for p in group {
            pathdata::write_outline(&p.outline, &mut d);
        }
        let _ = write!(out, "  <path d=\"{d}\" fill=\"#{:02x}{:02x}{:02x}\"", fill.r, fill.g, fill.b);
        if fill.a != 255 {
            let _ = write!(out, " fill-opacity=\"{}\"", crate::num::fmt_num(fill.a as f64 / 255.0));
        }
        out.push_str(" fill-rule=\"evenodd\"/>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Color;
    use crate::vector::{trace_mask, Mask, TraceOptions, VectorPath};

    #[test]
    fn rectangle_svg() {
        let svg = emit_svg(&VectorGraphic::solid(4, 3, Color::rgb(255, 0, 0)));
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("d=\"M0 0L4 0L4 3L0 3Z\" fill=\"#ff0000\" fill-rule=\"evenodd\""), "{svg}");
    }

    #[test]
    fn ring_is_one_element_two_subpaths() {
        let m = Mask::from_fn(5, 5, |x, y| !(x == 2 && y == 2));
        let paths = trace_mask(&m, &TraceOptions::default())
            .into_iter()
            .map(|t| VectorPath { outline: t.outline, fill: Color::BLACK, orientation: t.orientation })
            .collect();
        let svg = emit_svg(&VectorGraphic { view_w: 5, view_h: 5, paths });
        assert_eq!(svg.matches("<path").count(), 1);
        assert_eq!(svg.matches('M').count(), 2);
    }

    #[test]
    fn empty_graphic_has_no_paths() {
        let svg = emit_svg(&VectorGraphic::new(3, 3));
        assert!(svg.starts_with("<?xml") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<path"));
    }

    #[test]
    fn translucent_fill_gets_opacity() {
        let svg = emit_svg(&VectorGraphic::solid(1, 1, Color::rgba(0, 0, 0, 128)));
        assert!(svg.contains("fill-opacity=\"0.5\""), "{svg}");
    }
}
