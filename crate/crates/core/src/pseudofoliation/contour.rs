//! Marching squares on a cell-centered scalar grid.
//!
//! Vertices of the dual mesh are cell centers. Squares with a non-finite or
//! masked-out corner are skipped. Saddles are resolved by the mean of the
//! four corners. Segments are chained into polylines in a fixed order:
//! open chains first (sorted by their starting edge), then closed loops.

use std::collections::BTreeMap;

use crate::geom::Vec2;
use crate::grid::{BoolGrid, Grid, Window};

/// Edge of the dual mesh: `(i, j, vertical)` joins cell `(i, j)` to
/// `(i+1, j)` when horizontal and to `(i, j+1)` when vertical.
type EdgeId = (usize, usize, bool);

fn edge_key(e: EdgeId, n: usize) -> usize {
    (e.1 * n + e.0) * 2 + usize::from(e.2)
}

/// Level-`c` isolines of `values` as polylines in window coordinates.
pub fn isolines(values: &Grid<f64>, usable: &BoolGrid, window: &Window, c: f64) -> Vec<Vec<Vec2>> {
    let n = values.size();
    let point_on = |e: EdgeId| -> Vec2 {
        let (i, j, vertical) = e;
        let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
        let a = *values.get(i, j);
        let b = *values.get(i2, j2);
        let s = if a == b { 0.5 } else { ((c - a) / (b - a)).clamp(0.0, 1.0) };
        let p = window.cell_center(i, j);
        let q = window.cell_center(i2, j2);
        p + (q - p) * s
    };
    // segments as pairs of edges
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..n.saturating_sub(1) {
        for i in 0..n.saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| !*usable.get(a, b) || !values.get(a, b).is_finite()) {
                continue;
            }
            let v: Vec<f64> = corners.iter().map(|&(a, b)| *values.get(a, b)).collect();
            let mut code = 0u8;
            for (bit, val) in v.iter().enumerate() {
                if *val >= c {
                    code |= 1 << bit;
                }
            }
            let bottom = (i, j, false);
            let right = (i + 1, j, true);
            let top = (i, j + 1, false);
            let left = (i, j, true);
            let center_high = (v[0] + v[1] + v[2] + v[3]) / 4.0 >= c;
            match code {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if center_high {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if center_high {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    chain(&segments, n).into_iter().map(|edges| edges.into_iter().map(point_on).collect()).collect()
}

fn chain(segments: &[(EdgeId, EdgeId)], n: usize) -> Vec<Vec<EdgeId>> {
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        incident.entry(edge_key(*a, n)).or_default().push(s);
        incident.entry(edge_key(*b, n)).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start_seg: usize, start_edge: EdgeId, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut line = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if edge_key(a, n) == edge_key(at, n) { b } else { a };
            line.push(next);
            at = next;
            let candidates = &incident[&edge_key(at, n)];
            match candidates.iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        line
    };
    // open chains start at edges with a single incident segment
    let starts: Vec<(usize, usize)> = incident.iter().filter(|(_, segs)| segs.len() == 1).map(|(&k, segs)| (k, segs[0])).collect();
    for (key, seg) in starts {
        if used[seg] {
            continue;
        }
        let (a, b) = segments[seg];
        let start = if edge_key(a, n) == key { a } else { b };
        out.push(walk(seg, start, &mut used));
    }
    for seg in 0..segments.len() {
        if !used[seg] {
            out.push(walk(seg, segments[seg].0, &mut used));
        }
    }
    out
}
