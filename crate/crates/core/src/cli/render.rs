//! Deterministic SVG figures. Coordinates are printed with four decimals and
//! elements are emitted in a fixed order.

use std::fmt::Write;

use crate::geom::Vec2;
use crate::grid::{BoolGrid, Window};
use crate::pseudofoliation::PseudoLeaf;
use crate::rotation_set::RotationSetEstimate;
use crate::stable_sets::far_cap;

const SIZE: f64 = 512.0;
const MARGIN: f64 = 16.0;

/// Affine map from a world box to the SVG canvas (y up in the world).
struct Frame {
    lo: Vec2,
    hi: Vec2,
}

impl Frame {
    fn square(center: Vec2, half: f64) -> Self {
        let h = Vec2::new(half, half);
        Frame { lo: center - h, hi: center + h }
    }

    fn px(&self, z: Vec2) -> (f64, f64) {
        let span = SIZE - 2.0 * MARGIN;
        let x = MARGIN + (z.x - self.lo.x) / (self.hi.x - self.lo.x) * span;
        let y = SIZE - MARGIN - (z.y - self.lo.y) / (self.hi.y - self.lo.y) * span;
        (x, y)
    }

    /// Segment of the line `{⟨z, v⟩ = c}` inside the box.
    fn clip_line(&self, v: Vec2, c: f64) -> Option<(Vec2, Vec2)> {
        let p0 = v * (c / v.dot(v));
        let d = v.perp();
        let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
        for (p, dd, lo, hi) in [(p0.x, d.x, self.lo.x, self.hi.x), (p0.y, d.y, self.lo.y, self.hi.y)] {
            if dd.abs() < 1e-15 {
                if p < lo || p > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - p) / dd, (hi - p) / dd);
                s0 = s0.max(a.min(b));
                s1 = s1.min(a.max(b));
            }
        }
        (s0 <= s1).then(|| (p0 + d * s0, p0 + d * s1))
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<title>{title}</title>\n<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    )
}

fn line(out: &mut String, f: &Frame, a: Vec2, b: Vec2, style: &str) {
    let (x1, y1) = f.px(a);
    let (x2, y2) = f.px(b);
    writeln!(out, "<line x1=\"{x1:.4}\" y1=\"{y1:.4}\" x2=\"{x2:.4}\" y2=\"{y2:.4}\" {style}/>").unwrap();
}

fn polyline(out: &mut String, f: &Frame, pts: &[Vec2], style: &str) {
    out.push_str("<polyline points=\"");
    for (k, p) in pts.iter().enumerate() {
        let (x, y) = f.px(*p);
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{x:.4},{y:.4}").unwrap();
    }
    writeln!(out, "\" fill=\"none\" {style}/>").unwrap();
}

/// Hull of the rotation set with the carrier line `ℓ_α^v`.
pub fn hull_svg(est: &RotationSetEstimate) -> String {
    let mut out = header("rotation set");
    let half = (est.diameter * 0.75).max(0.05);
    let f = Frame::square(est.centroid, half);
    if let Some(c) = est.carrier {
        if let Some((a, b)) = f.clip_line(c.v, c.alpha) {
            line(&mut out, &f, a, b, "stroke=\"#1f77b4\" stroke-dasharray=\"6 4\"");
        }
    }
    match est.hull.len() {
        0 => {}
        1 | 2 => {
            for p in &est.hull {
                let (x, y) = f.px(*p);
                writeln!(out, "<circle cx=\"{x:.4}\" cy=\"{y:.4}\" r=\"4\" fill=\"#d62728\"/>").unwrap();
            }
            if est.hull.len() == 2 {
                line(&mut out, &f, est.hull[0], est.hull[1], "stroke=\"#d62728\" stroke-width=\"2\"");
            }
        }
        _ => {
            let mut pts = est.hull.clone();
            pts.push(est.hull[0]);
            polyline(&mut out, &f, &pts, "stroke=\"#d62728\" stroke-width=\"2\"");
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Rows `(n, D(n), M(|n|))` as the deviation curve and its running maximum.
pub fn profile_svg(rows: &[(i64, f64, f64)]) -> String {
    let mut out = header("deviation profile");
    let big_n = rows.iter().map(|r| r.0.unsigned_abs()).max().unwrap_or(0).max(1) as f64;
    let finite = rows.iter().flat_map(|r| [r.1, r.2]).filter(|x| x.is_finite());
    let (lo, hi) = finite.fold((0.0f64, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
    let pad = ((hi - lo) * 0.05).max(1e-3);
    let f = Frame { lo: Vec2::new(-big_n, lo - pad), hi: Vec2::new(big_n, hi + pad) };
    line(&mut out, &f, Vec2::new(-big_n, 0.0), Vec2::new(big_n, 0.0), "stroke=\"#999\"");
    let d: Vec<Vec2> = rows.iter().map(|r| Vec2::new(r.0 as f64, r.1)).collect();
    polyline(&mut out, &f, &d, "stroke=\"#1f77b4\"");
    let m: Vec<Vec2> = rows.iter().map(|r| Vec2::new(r.0 as f64, r.2)).collect();
    polyline(&mut out, &f, &m, "stroke=\"#d62728\"");
    out.push_str("</svg>\n");
    out
}

fn runs(out: &mut String, f: &Frame, w: &Window, mask: &BoolGrid, fill: &str) {
    let n = w.resolution;
    let h = w.cell_size();
    for j in 0..n {
        let mut i = 0;
        while i < n {
            if !*mask.get(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && *mask.get(i, j) {
                i += 1;
            }
            let a = w.cell_center(start, j) - Vec2::new(h / 2.0, -h / 2.0);
            let b = w.cell_center(i - 1, j) + Vec2::new(h / 2.0, -h / 2.0);
            let (x0, y0) = f.px(a);
            let (x1, y1) = f.px(b);
            writeln!(out, "<rect x=\"{x0:.4}\" y=\"{y0:.4}\" width=\"{:.4}\" height=\"{:.4}\" {fill}/>", x1 - x0, y1 - y0).unwrap();
        }
    }
}

/// Stable-set mask with the far cap shaded and the line `ℓ_r^v` drawn.
pub fn mask_svg(mask: &BoolGrid, window: &Window, v: Vec2, r: f64, cap_fraction: f64) -> String {
    let mut out = header("stable set");
    let f = Frame::square(window.center, window.half_width);
    runs(&mut out, &f, window, mask, "fill=\"#1f77b4\"");
    runs(&mut out, &f, window, &far_cap(window, v, cap_fraction), "fill=\"#ff7f0e\" fill-opacity=\"0.35\"");
    if let Some((a, b)) = f.clip_line(v, r) {
        line(&mut out, &f, a, b, "stroke=\"#d62728\" stroke-width=\"2\"");
    }
    out.push_str("</svg>\n");
    out
}

/// Leaves, their strip envelopes and an arrow along `v⊥`.
pub fn leaves_svg(leaves: &[PseudoLeaf], window: &Window, v: Vec2) -> String {
    let mut out = header("pseudo-leaves");
    let f = Frame::square(window.center, window.half_width);
    for leaf in leaves {
        for offset in [leaf.strip.min_offset, leaf.strip.max_offset] {
            if let Some((a, b)) = offset.is_finite().then(|| f.clip_line(v, offset)).flatten() {
                line(&mut out, &f, a, b, "stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"");
            }
        }
    }
    for leaf in leaves {
        for pl in &leaf.polylines {
            polyline(&mut out, &f, pl, "stroke=\"#1f77b4\" stroke-width=\"1.5\"");
        }
    }
    let tail = window.center;
    let head = tail + v.perp() * (window.half_width * 0.3);
    line(&mut out, &f, tail, head, "stroke=\"#d62728\" stroke-width=\"2\"");
    let (x, y) = f.px(head);
    writeln!(out, "<circle cx=\"{x:.4}\" cy=\"{y:.4}\" r=\"3\" fill=\"#d62728\"/>").unwrap();
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_horizontal_line() {
        let f = Frame::square(Vec2::ZERO, 1.0);
        let (a, b) = f.clip_line(Vec2::new(0.0, 1.0), 0.5).unwrap();
        assert!((a.y - 0.5).abs() < 1e-12 && (b.y - 0.5).abs() < 1e-12);
        assert!(((a.x - b.x).abs() - 2.0).abs() < 1e-12);
        assert!(f.clip_line(Vec2::new(0.0, 1.0), 3.0).is_none());
    }

    #[test]
    fn mask_svg_is_deterministic_and_shades_cap() {
        let w = Window::new(Vec2::ZERO, 2.0, 16).unwrap();
        let mask = crate::grid::Grid::from_fn(16, |_, j| j >= 8);
        let a = mask_svg(&mask, &w, Vec2::new(0.0, 1.0), 0.0, 0.1);
        assert_eq!(a, mask_svg(&mask, &w, Vec2::new(0.0, 1.0), 0.0, 0.1));
        assert!(a.contains("fill-opacity=\"0.35\""));
        assert_eq!(a.matches("<line").count(), 1);
    }
}
