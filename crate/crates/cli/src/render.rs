//! Standalone SVG rendering of a triangulation with per-element coloring.

use std::fmt::Write;

use anisomesh::meshgen::Triangulation;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;
const LEGEND: f64 = 60.0;

/// Blue to red through white.
fn ramp(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| (a + (b - a) * s).round() as u8;
    if t < 0.5 {
        let s = 2.0 * t;
        (lerp(49.0, 247.0, s), lerp(54.0, 247.0, s), lerp(149.0, 247.0, s))
    } else {
        let s = 2.0 * t - 1.0;
        (lerp(247.0, 165.0, s), lerp(247.0, 0.0, s), lerp(247.0, 38.0, s))
    }
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Linear map of `values` onto the ramp; a constant field maps to the midpoint.
fn colors(values: &[f64]) -> (Vec<String>, f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let c = values
        .iter()
        .map(|v| hex(ramp(if span > 1e-12 * hi.abs().max(1e-300) { (v - lo) / span } else { 0.5 })))
        .collect();
    (c, lo, hi)
}

pub fn svg(mesh: &Triangulation, coloring: Option<(&str, &[f64])>) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &mesh.vertices {
        x0 = x0.min(v[0]);
        y0 = y0.min(v[1]);
        x1 = x1.max(v[0]);
        y1 = y1.max(v[1]);
    }
    let extent = (x1 - x0).max(y1 - y0).max(1e-300);
    let k = (WIDTH - 2.0 * MARGIN) / extent;
    let height = (y1 - y0) * k + 2.0 * MARGIN;
    let total_h = height + if coloring.is_some() { LEGEND } else { 0.0 };
    let px = |p: [f64; 2]| ((p[0] - x0) * k + MARGIN, (y1 - p[1]) * k + MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{total_h:.0}" viewBox="0 0 {WIDTH:.0} {total_h:.3}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let stroke = if mesh.len() > 20_000 { 0.1 } else { 0.4 };
    let _ = writeln!(s, r##"<g stroke="#333333" stroke-width="{stroke}" stroke-linejoin="round">"##);
    let (fills, range) = match coloring {
        Some((_, values)) => {
            let (c, lo, hi) = colors(values);
            (c, Some((lo, hi)))
        }
        None => (vec!["#e8eef7".to_string(); mesh.len()], None),
    };
    for (e, fill) in mesh.elements.iter().zip(&fills) {
        let pts: Vec<String> = e
            .iter()
            .map(|&i| {
                let (x, y) = px(mesh.vertices[i]);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
    }
    let _ = writeln!(s, "</g>");
    if let (Some((name, _)), Some((lo, hi))) = (coloring, range) {
        let top = height + 10.0;
        let bar = WIDTH - 2.0 * MARGIN;
        let _ = writeln!(s, r#"<defs><linearGradient id="ramp" x1="0" x2="1" y1="0" y2="0">"#);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let _ = writeln!(s, r#"<stop offset="{t:.1}" stop-color="{}"/>"#, hex(ramp(t)));
        }
        let _ = writeln!(s, "</linearGradient></defs>");
        let _ = writeln!(s, r##"<rect x="{MARGIN}" y="{top:.3}" width="{bar:.3}" height="14" fill="url(#ramp)" stroke="#333333" stroke-width="0.5"/>"##);
        let text_y = top + 32.0;
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{text_y:.3}" font-family="sans-serif" font-size="12">{lo:.6}</text>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{text_y:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{name}</text>"#,
            WIDTH / 2.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{text_y:.3}" font-family="sans-serif" font-size="12" text-anchor="end">{hi:.6}</text>"#,
            WIDTH - MARGIN
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_uses_one_color() {
        let (c, lo, hi) = colors(&[2.0, 2.0, 2.0]);
        assert!(c.iter().all(|x| x == &c[0]));
        assert_eq!((lo, hi), (2.0, 2.0));
        assert_eq!(ramp(0.0), (49, 54, 149));
        assert_eq!(ramp(1.0), (165, 0, 38));
    }
}
