//! Vectorization of flat-color rasters.
//!
//! The pipeline clusters colors with k-means ([`palette`]), traces each
//! color's mask into closed polygons ([`trace`]) and assembles the result
//! into a [`VectorGraphic`] that [`svg`] can write out.

pub mod palette;
pub mod pathdata;
pub mod simplicity;
pub mod svg;
pub mod tagging;
pub mod trace;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::Color;
use crate::raster::Raster;

pub use palette::{kmeans_palette, select_k, Palette};
pub use simplicity::{assess_simplicity, Decision, SimplicityScore};
pub use svg::emit_svg;
pub use tagging::{MockTagger, TaggingClient};
pub use trace::{trace_mask, Mask, TraceOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Line(Point),
    Cubic(Point, Point, Point),
}

impl Segment {
    pub fn end(&self) -> Point {
        match *self {
            Segment::Line(p) | Segment::Cubic(_, _, p) => p,
        }
    }
}

/// Closed outline: starts at `start`, follows `segments`, implicitly returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outline {
    pub start: Point,
    pub segments: Vec<Segment>,
}

impl Outline {
    pub fn polygon(points: &[Point]) -> Self {
        let (first, rest) = points.split_first().expect("polygon needs at least one point");
        Self { start: *first, segments: rest.iter().map(|&p| Segment::Line(p)).collect() }
    }

    /// Vertices of a polygonal outline; `None` when any segment is curved.
    pub fn vertices(&self) -> Option<Vec<Point>> {
        let mut out = vec![self.start];
        for s in &self.segments {
            match s {
                Segment::Line(p) => out.push(*p),
                Segment::Cubic(..) => return None,
            }
        }
        Some(out)
    }

    /// Every coordinate appearing in the outline, control points included.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        std::iter::once(self.start).chain(self.segments.iter().flat_map(|s| match *s {
            Segment::Line(p) => vec![p],
            Segment::Cubic(a, b, c) => vec![a, b, c],
        }))
    }

    /// Polyline approximation; cubics are split into a fixed number of chords.
    pub fn flatten(&self, cubic_steps: usize) -> Vec<Point> {
        let mut out = vec![self.start];
        let mut cur = self.start;
        for s in &self.segments {
            match *s {
                Segment::Line(p) => out.push(p),
                Segment::Cubic(c1, c2, p) => {
                    for i in 1..=cubic_steps {
                        let t = i as f64 / cubic_steps as f64;
                        let mt = 1.0 - t;
                        let a = mt * mt * mt;
                        let b = 3.0 * mt * mt * t;
                        let c = 3.0 * mt * t * t;
                        let d = t * t * t;
                        out.push(Point::new(
                            a * cur.x + b * c1.x + c * c2.x + d * p.x,
                            a * cur.y + b * c1.y + c * c2.y + d * p.y,
                        ));
                    }
                }
            }
            cur = s.end();
        }
        out
    }

    /// Shoelace area over the vertices (control points ignored), y-down.
    pub fn signed_area(&self) -> f64 {
        let pts: Vec<Point> =
            std::iter::once(self.start).chain(self.segments.iter().map(Segment::end)).collect();
        let n = pts.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum();
        twice / 2.0
    }
}

/// Winding direction as seen on screen (y axis pointing down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Clockwise,
    Counterclockwise,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Clockwise => "cw",
            Orientation::Counterclockwise => "ccw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cw" => Some(Orientation::Clockwise),
            "ccw" => Some(Orientation::Counterclockwise),
            _ => None,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Clockwise => Orientation::Counterclockwise,
            Orientation::Counterclockwise => Orientation::Clockwise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorPath {
    pub outline: Outline,
    pub fill: Color,
    pub orientation: Orientation,
}

/// Closed filled paths in a `view_w` x `view_h` coordinate box.
///
/// Consecutive paths sharing a fill form one even-odd group: holes are the
/// oppositely oriented paths inside an outer boundary of the same color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorGraphic {
    pub view_w: u32,
    pub view_h: u32,
    pub paths: Vec<VectorPath>,
}

impl VectorGraphic {
    pub fn new(view_w: u32, view_h: u32) -> Self {
        Self { view_w, view_h, paths: Vec::new() }
    }

    /// Solid rectangle covering the whole view box.
    pub fn solid(view_w: u32, view_h: u32, fill: Color) -> Self {
        let (w, h) = (view_w as f64, view_h as f64);
        let outline = Outline::polygon(&[
            Point::new(0.0, 0.0),
            Point::new(w, 0.0),
            Point::new(w, h),
            Point::new(0.0, h),
        ]);
        Self { view_w, view_h, paths: vec![VectorPath { outline, fill, orientation: Orientation::Clockwise }] }
    }

    /// Runs of consecutive paths with the same fill.
    pub fn fill_groups(&self) -> Vec<&[VectorPath]> {
        self.paths.chunk_by(|a, b| a.fill == b.fill).collect()
    }

    /// Structural check used by document validation.
    pub fn check(&self) -> Result<(), String> {
        if self.view_w == 0 || self.view_h == 0 {
            return Err(format!("view box {}x{} is empty", self.view_w, self.view_h));
        }
        let (w, h) = (self.view_w as f64, self.view_h as f64);
        for (i, path) in self.paths.iter().enumerate() {
            for p in path.outline.points() {
                if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.y < 0.0 || p.x > w || p.y > h {
                    return Err(format!("path {i} point ({}, {}) outside view box {w}x{h}", p.x, p.y));
                }
            }
        }
        Ok(())
    }
}

/// Vectorizes `img` with a `k`-color palette.
///
/// Paths are emitted back to front by descending region area; per-color
/// tracing runs in parallel and is merged in palette order.
pub fn vectorize(img: &Raster, k: usize, options: &TraceOptions) -> VectorGraphic {
    let palette = kmeans_palette(img, k);
    let mut order: Vec<(usize, usize)> =
        palette.region_sizes().into_iter().enumerate().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let traced: Vec<Vec<VectorPath>> = order
        .par_iter()
        .map(|&(index, _)| {
            let mask = palette.mask(index);
            let fill = palette.colors[index];
            trace_mask(&mask, options)
                .into_iter()
                .map(|t| VectorPath { outline: t.outline, fill, orientation: t.orientation })
                .collect()
        })
        .collect();

    VectorGraphic { view_w: img.width(), view_h: img.height(), paths: traced.into_iter().flatten().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_graphic_is_clockwise_square() {
        let g = VectorGraphic::solid(10, 4, Color::WHITE);
        assert!(g.check().is_ok());
        assert_eq!(g.paths[0].outline.signed_area(), 40.0);
    }

    #[test]
    fn out_of_box_point_fails_check() {
        let mut g = VectorGraphic::solid(10, 10, Color::WHITE);
        g.paths[0].outline.start = Point::new(-1.0, 0.0);
        assert!(g.check().is_err());
    }

    #[test]
    fn fill_groups_split_on_color_change() {
        let mut g = VectorGraphic::solid(4, 4, Color::WHITE);
        g.paths.push(g.paths[0].clone());
        g.paths.push(VectorPath { fill: Color::BLACK, ..g.paths[0].clone() });
        let sizes: Vec<_> = g.fill_groups().iter().map(|s| s.len()).collect();
        assert_eq!(sizes, [2, 1]);
    }

    #[test]
    fn cubic_flattening_hits_endpoints() {
        let o = Outline {
            start: Point::new(0.0, 0.0),
            segments: vec![Segment::Cubic(Point::new(0.0, 1.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0))],
        };
        let pts = o.flatten(8);
        assert_eq!(pts.len(), 9);
        assert_eq!(*pts.last().unwrap(), Point::new(1.0, 0.0));
    }
}
