//! SVG rendering of two-dimensional shape estimates.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use crystal_fpp::estimate::ShapeEstimate;
use serde::{Deserialize, Serialize};

/// A second shape drawn over the first, e.g. a quotient shape. Two points
/// draw a segment, more draw a closed polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Width and height in pixels.
    pub size: f64,
    pub label: String,
    pub overlay: Option<Overlay>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { size: 480.0, label: "estimated shape".into(), overlay: None }
    }
}

const PAD: f64 = 40.0;
const SHAPE_COLOR: &str = "#1f77b4";
const OVERLAY_COLOR: &str = "#d62728";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// The hull of `shape` with a 95% whisker on every radial point, the
/// optional overlay, axes and a legend.
pub fn render_shape_svg(shape: &ShapeEstimate, options: &RenderOptions) -> Result<String> {
    if shape.dim != 2 {
        bail!("can only render planar shapes, this one has dimension {}", shape.dim);
    }
    if shape.radial.is_empty() {
        bail!("shape has no directions");
    }
    let Some(hull) = shape.polytope.as_ref().filter(|h| !h.is_empty()) else {
        bail!("shape is unbounded, there is no polygon to draw");
    };
    let overlay = options.overlay.as_ref().filter(|o| !o.points.is_empty());

    let mut extent = hull.iter().chain(overlay.iter().flat_map(|o| o.points.iter())).map(|p| p[0].abs().max(p[1].abs())).fold(0.0f64, f64::max);
    for r in &shape.radial {
        if let Some(hi) = r.radius_hi {
            extent = extent.max(hi);
        }
    }
    let extent = if extent > 0.0 { extent * 1.05 } else { 1.0 };
    let half = options.size / 2.0;
    let scale = (half - PAD) / extent;
    let at = |p: [f64; 2]| (half + scale * p[0], half - scale * p[1]);

    let mut out = String::new();
    let size = options.size;
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#)?;
    writeln!(out, r##"<g id="axes" stroke="#999999" stroke-width="0.5">"##)?;
    writeln!(out, r#"<line x1="{PAD}" y1="{half}" x2="{:.3}" y2="{half}"/>"#, size - PAD)?;
    writeln!(out, r#"<line x1="{half}" y1="{PAD}" x2="{half}" y2="{:.3}"/>"#, size - PAD)?;
    writeln!(out, "</g>")?;

    let path = |pts: &[[f64; 2]], close: bool| {
        let mut d = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = at(p);
            let _ = write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
        }
        if close {
            d.push('Z');
        }
        d.trim_end().to_string()
    };
    writeln!(out, r#"<path id="shape" d="{}" fill="{SHAPE_COLOR}" fill-opacity="0.15" stroke="{SHAPE_COLOR}" stroke-width="1.5"/>"#, path(hull, true))?;

    writeln!(out, r#"<g id="whiskers" stroke="{SHAPE_COLOR}" stroke-width="1">"#)?;
    for r in &shape.radial {
        let norm = r.point.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u = [r.point[0] / norm, r.point[1] / norm];
        let hi = r.radius_hi.unwrap_or(extent).min(extent);
        let (x1, y1) = at([u[0] * r.radius_lo, u[1] * r.radius_lo]);
        let (x2, y2) = at([u[0] * hi, u[1] * hi]);
        writeln!(out, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#)?;
    }
    writeln!(out, "</g>")?;

    if let Some(o) = overlay {
        let close = o.points.len() > 2;
        writeln!(out, r#"<path id="overlay" d="{}" fill="none" stroke="{OVERLAY_COLOR}" stroke-width="1.5" stroke-dasharray="4 3"/>"#, path(&o.points, close))?;
    }

    writeln!(out, r#"<g id="legend" font-family="sans-serif" font-size="12">"#)?;
    let mut entries = vec![(SHAPE_COLOR, options.label.as_str())];
    if let Some(o) = overlay {
        entries.push((OVERLAY_COLOR, o.label.as_str()));
    }
    for (i, (color, label)) in entries.into_iter().enumerate() {
        let y = 16.0 + 16.0 * i as f64;
        writeln!(out, r#"<line x1="8" y1="{:.1}" x2="28" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#, y - 4.0, y - 4.0)?;
        writeln!(out, r#"<text x="34" y="{y:.1}">{}</text>"#, escape(label))?;
    }
    writeln!(out, "</g>")?;
    writeln!(out, "</svg>")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crystal_fpp::estimate::{estimate_shape, ShapeOptions};
    use crystal_fpp::fpp::{SeedPlan, TimeDistribution};
    use crystal_fpp::lattice::build_preset;

    fn l1_ball() -> ShapeEstimate {
        let (l, r) = build_preset("cubic2").unwrap();
        estimate_shape(&l, &r, &TimeDistribution::deterministic(1.0).unwrap(), &ShapeOptions::new(8, 4, 1, SeedPlan::new(0, 0))).unwrap()
    }

    #[test]
    fn diamond_with_four_vertices() {
        let shape = l1_ball();
        let svg = render_shape_svg(&shape, &RenderOptions::default()).unwrap();
        let d = svg.lines().find(|l| l.contains(r#"id="shape""#)).unwrap();
        assert_eq!(d.matches('L').count() + 1, 4);
        assert!(!svg.contains(r#"id="overlay""#));
        assert_eq!(svg, render_shape_svg(&shape, &RenderOptions::default()).unwrap());
    }

    #[test]
    fn overlay_adds_a_layer_and_legend_entry() {
        let options = RenderOptions {
            overlay: Some(Overlay { label: "quotient <segment>".into(), points: vec![[-0.5, -0.5], [0.5, 0.5]] }),
            ..Default::default()
        };
        let svg = render_shape_svg(&l1_ball(), &options).unwrap();
        assert!(svg.contains(r#"id="overlay""#));
        assert!(svg.contains("quotient &lt;segment&gt;"));
        assert_eq!(svg.matches("<text").count(), 2);
    }

    #[test]
    fn refusals() {
        let mut shape = l1_ball();
        shape.dim = 3;
        assert!(render_shape_svg(&shape, &RenderOptions::default()).is_err());
        let mut shape = l1_ball();
        shape.radial.clear();
        assert!(render_shape_svg(&shape, &RenderOptions::default()).is_err());
        let mut shape = l1_ball();
        shape.polytope = None;
        assert!(render_shape_svg(&shape, &RenderOptions::default()).is_err());
    }
}
