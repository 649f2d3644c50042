//! SVG rendering of per-element scalar fields.
//!
//! Colour scale: values are clamped to the range and mapped linearly onto five
//! stops, blue `#0000ff` → cyan `#00ffff` → green `#00ff00` → yellow `#ffff00`
//! → red `#ff0000`, interpolated per channel and rounded to 8 bits.

use std::fmt::Write as _;

use thiserror::Error;

use crate::mesher::TriMesh;

/// Pixels per mm.
pub const SCALE: f64 = 10.0;
pub const MARGIN: f64 = 10.0;
const BAR_HEIGHT: f64 = 12.0;

const STOPS: [[f64; 3]; 5] = [
    [0.0, 0.0, 255.0],
    [0.0, 255.0, 255.0],
    [0.0, 255.0, 0.0],
    [255.0, 255.0, 0.0],
    [255.0, 0.0, 0.0],
];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("field has {got} values for {expected} elements")]
    Length { expected: usize, got: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("empty mesh")]
    Empty,
}

/// `#rrggbb` for `t` in [0, 1] (clamped).
pub fn color(t: f64) -> String {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let s = t * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// SVG document with one filled polygon per element and a colour bar.
/// `range` defaults to the field's min and max.
pub fn render_field(mesh: &TriMesh, values: &[f64], range: Option<(f64, f64)>) -> Result<String, RenderError> {
    if values.len() != mesh.elements.len() {
        return Err(RenderError::Length { expected: mesh.elements.len(), got: values.len() });
    }
    if mesh.nodes.is_empty() || values.is_empty() {
        return Err(RenderError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RenderError::NonFinite);
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    });
    let span = hi - lo;
    let t = |v: f64| if span > 0.0 { (v - lo) / span } else { 0.0 };

    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &mesh.nodes {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let w = (x1 - x0) * SCALE + 2.0 * MARGIN;
    let plot_h = (y1 - y0) * SCALE;
    let h = plot_h + 3.0 * MARGIN + BAR_HEIGHT + 14.0;
    let px = |x: f64| (x - x0) * SCALE + MARGIN;
    let py = |y: f64| (y1 - y) * SCALE + MARGIN;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#).unwrap();
    writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();
    writeln!(s, r#"<g stroke-width="0.2" stroke-linejoin="round">"#).unwrap();
    for (e, &v) in values.iter().enumerate() {
        let c = color(t(v));
        let pts: Vec<String> = mesh.element_coords(e).iter().map(|p| format!("{:.3},{:.3}", px(p.x), py(p.y))).collect();
        writeln!(s, r#"<polygon points="{}" fill="{c}" stroke="{c}"/>"#, pts.join(" ")).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    let bar_y = plot_h + 2.0 * MARGIN;
    let bar_w = w - 2.0 * MARGIN;
    let n = 64;
    for i in 0..n {
        let c = color((i as f64 + 0.5) / n as f64);
        writeln!(
            s,
            r#"<rect x="{:.3}" y="{bar_y:.3}" width="{:.3}" height="{BAR_HEIGHT}" fill="{c}"/>"#,
            MARGIN + bar_w * i as f64 / n as f64,
            bar_w / n as f64 + 0.01
        )
        .unwrap();
    }
    let label_y = bar_y + BAR_HEIGHT + 12.0;
    writeln!(s, r#"<text x="{MARGIN:.1}" y="{label_y:.1}" font-size="10" font-family="sans-serif">{lo:.4}</text>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="{label_y:.1}" font-size="10" font-family="sans-serif" text-anchor="end">{hi:.4}</text>"#,
        w - MARGIN
    )
    .unwrap();
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn square() -> TriMesh {
        TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            elements: vec![[0, 1, 2], [0, 2, 3]],
            ..Default::default()
        }
    }

    fn fills(svg: &str) -> Vec<&str> {
        svg.lines()
            .filter(|l| l.starts_with("<polygon"))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect()
    }

    #[test]
    fn color_stops() {
        assert_eq!(color(0.0), "#0000ff");
        assert_eq!(color(0.5), "#00ff00");
        assert_eq!(color(1.0), "#ff0000");
        assert_eq!(color(2.0), "#ff0000");
        assert_eq!(color(0.125), "#0080ff");
    }

    #[test]
    fn constant_and_alternating_fields() {
        let mesh = square();
        let svg = render_field(&mesh, &[3.0, 3.0], None).unwrap();
        let f = fills(&svg);
        assert_eq!(f[0], f[1]);
        let svg = render_field(&mesh, &[0.0, 1.0], None).unwrap();
        let f = fills(&svg);
        assert_ne!(f[0], f[1]);
        assert_eq!(svg, render_field(&mesh, &[0.0, 1.0], None).unwrap());
        assert!(render_field(&mesh, &[0.0], None).is_err());
    }
}
