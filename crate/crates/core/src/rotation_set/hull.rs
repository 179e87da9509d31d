//! Monotone-chain convex hull with an exact orientation predicate, plus the
//! small amount of polygon geometry the rotation-set module needs.

use robust::{orient2d, Coord};

use crate::geom::Vec2;

#[inline]
fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    orient2d(Coord { x: a.x, y: a.y }, Coord { x: b.x, y: b.y }, Coord { x: c.x, y: c.y })
}

/// Convex hull in counter-clockwise order starting from the lexicographically
/// smallest point. Collinear points are dropped, so a degenerate hull has one
/// or two vertices.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn diameter(hull: &[Vec2]) -> f64 {
    diameter_pair(hull).map_or(0.0, |(a, b)| (hull[a] - hull[b]).norm())
}

/// Indices of a farthest pair of vertices.
pub fn diameter_pair(hull: &[Vec2]) -> Option<(usize, usize)> {
    if hull.is_empty() {
        return None;
    }
    let mut best = (0, 0, 0.0);
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let d = (hull[i] - hull[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    Some((best.0, best.1))
}

/// Minimal width over edge directions (rotating-calipers characterization),
/// together with the unit edge direction achieving it. Hulls with fewer than
/// three vertices have width 0 along their own direction.
pub fn min_width(hull: &[Vec2]) -> (f64, Option<Vec2>) {
    match hull.len() {
        0 => (0.0, None),
        1 => (0.0, None),
        2 => (0.0, (hull[1] - hull[0]).normalized()),
        n => {
            let mut best = (f64::INFINITY, None);
            for i in 0..n {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                let Some(dir) = (b - a).normalized() else { continue };
                let normal = dir.perp();
                let w = hull.iter().map(|p| (*p - a).dot(normal).abs()).fold(0.0, f64::max);
                if w < best.0 {
                    best = (w, Some(dir));
                }
            }
            best
        }
    }
}

pub fn signed_area(hull: &[Vec2]) -> f64 {
    let n = hull.len();
    if n < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..n {
        let p = hull[i];
        let q = hull[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a
}

/// Area centroid; falls back to the midpoint of the diameter pair when the
/// polygon is numerically flat.
pub fn centroid(hull: &[Vec2]) -> Vec2 {
    match hull.len() {
        0 => Vec2::ZERO,
        1 => hull[0],
        _ => {
            let diam = diameter(hull);
            let area = signed_area(hull);
            if hull.len() >= 3 && area.abs() > 1e-12 * diam * diam {
                let origin = hull[0];
                let mut cx = 0.0;
                let mut cy = 0.0;
                for i in 0..hull.len() {
                    let p = hull[i] - origin;
                    let q = hull[(i + 1) % hull.len()] - origin;
                    let cross = p.x * q.y - q.x * p.y;
                    cx += (p.x + q.x) * cross;
                    cy += (p.y + q.y) * cross;
                }
                origin + Vec2::new(cx, cy) / (6.0 * area)
            } else {
                let (a, b) = diameter_pair(hull).expect("non-empty");
                (hull[a] + hull[b]) * 0.5
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn collinear_points_collapse_to_segment() {
        let pts: Vec<Vec2> = (0..50).map(|i| Vec2::new(0.5, -1.0 + i as f64 / 24.5)).collect();
        let h = convex_hull(&pts);
        assert_eq!(h, vec![Vec2::new(0.5, -1.0), Vec2::new(0.5, 1.0)]);
        assert_eq!(min_width(&h).0, 0.0);
        assert_eq!(centroid(&h), Vec2::new(0.5, 0.0));
    }

    #[test]
    fn single_point() {
        let h = convex_hull(&[Vec2::new(0.3, 0.7); 10]);
        assert_eq!(h, vec![Vec2::new(0.3, 0.7)]);
        assert_eq!(diameter(&h), 0.0);
    }

    #[test]
    fn triangle_geometry() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(0.1, 0.0), Vec2::new(0.0, 0.1), Vec2::new(0.02, 0.02)];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 3);
        assert!(signed_area(&h) > 0.0);
        let (w, _) = min_width(&h);
        assert!((w - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        let c = centroid(&h);
        assert!((c - Vec2::new(0.1 / 3.0, 0.1 / 3.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn hull_is_convex_ccw_and_contains_points(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..60)) {
            let pts: Vec<Vec2> = raw.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let h = convex_hull(&pts);
            if h.len() >= 3 {
                let n = h.len();
                for i in 0..n {
                    let (a, b) = (h[i], h[(i + 1) % n]);
                    prop_assert!(orient(a, b, h[(i + 2) % n]) > 0.0);
                    for p in &pts {
                        prop_assert!(orient(a, b, *p) >= 0.0);
                    }
                }
            }
        }
    }
}
