use serde::{Deserialize, Serialize};

use super::{CellStatus, LevelFunctionChart, PseudoLeaf};
use crate::geom::{SlopeType, Vec2};
use crate::grid::{label_components, BoolGrid, Connectivity, Grid};
use crate::torus_maps::{CocycleWalker, LiftedTorusMap, MapError};

/// Target number of base points per side in the equivariance sample.
const EQUIVARIANCE_SIDE: usize = 16;
/// Maximal band thickness (in cells) of a level set.
const MAX_BAND_CELLS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceStats {
    pub samples: usize,
    pub skipped: usize,
    pub rms: f64,
    pub max: f64,
    /// Fraction of samples within the tolerance.
    pub within_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub checks: Vec<AxiomCheck>,
    pub equivariance: EquivarianceStats,
    pub slope: SlopeType,
    pub all_passed: bool,
}

fn inner(n: usize) -> BoolGrid {
    Grid::from_fn(n, |i, j| i > 0 && j > 0 && i + 1 < n && j + 1 < n)
}

/// Counts of `{H ≥ c}` (8-connected) and `{H < c}` (4-connected) components
/// away from the window border.
fn separation_counts(chart: &LevelFunctionChart, c: f64) -> (u32, u32) {
    let n = chart.window.resolution;
    let core = inner(n);
    let above = chart.sup_values.map(|&u| u >= c).and(&core);
    let below = core.and_not(&above);
    (label_components(&above, Connectivity::Eight).count, label_components(&below, Connectivity::Four).count)
}

/// Longest run of cells with lattice value `H(c)` along the grid axis closest
/// to `v`.
fn band_thickness(chart: &LevelFunctionChart, c: f64) -> usize {
    let o = &chart.options;
    let k = ((c - o.r_lo) / o.eps_r).floor() as usize;
    let level = chart.r_sample(k);
    let n = chart.window.resolution;
    let band = Grid::from_fn(n, |i, j| *chart.status.get(i, j) == CellStatus::Resolved && *chart.h_values.get(i, j) == level);
    let along_y = chart.v.y.abs() >= chart.v.x.abs();
    let mut best = 0;
    for a in 0..n {
        let mut run = 0;
        for b in 0..n {
            let inside = if along_y { *band.get(a, b) } else { *band.get(b, a) };
            run = if inside { run + 1 } else { 0 };
            best = best.max(run);
        }
    }
    best
}

fn segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> f64 {
    let cross = |a: Vec2, b: Vec2, c: Vec2| (b - a).x * (c - a).y - (b - a).y * (c - a).x;
    let d1 = cross(p1, p2, q1);
    let d2 = cross(p1, p2, q2);
    let d3 = cross(q1, q2, p1);
    let d4 = cross(q1, q2, p2);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    let point_seg = |p: Vec2, a: Vec2, b: Vec2| {
        let ab = b - a;
        let len2 = ab.dot(ab);
        let s = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (p - (a + ab * s)).norm()
    };
    point_seg(p1, q1, q2).min(point_seg(p2, q1, q2)).min(point_seg(q1, p1, p2)).min(point_seg(q2, p1, p2))
}

fn segments(leaf: &PseudoLeaf) -> Vec<(Vec2, Vec2)> {
    leaf.polylines.iter().flat_map(|l| l.windows(2).map(|w| (w[0], w[1]))).collect()
}

fn leaf_distance(a: &PseudoLeaf, b: &PseudoLeaf) -> f64 {
    let sa = segments(a);
    let sb = segments(b);
    let mut best = f64::INFINITY;
    for &(p1, p2) in &sa {
        let (lo_x, hi_x) = (p1.x.min(p2.x) - best, p1.x.max(p2.x) + best);
        let (lo_y, hi_y) = (p1.y.min(p2.y) - best, p1.y.max(p2.y) + best);
        for &(q1, q2) in &sb {
            if q1.x.max(q2.x) < lo_x || q1.x.min(q2.x) > hi_x || q1.y.max(q2.y) < lo_y || q1.y.min(q2.y) > hi_y {
                continue;
            }
            best = best.min(segment_distance(p1, p2, q1, q2));
        }
    }
    best
}

/// `H(f̃ⁿ(z)) − H(z) − n⟨ρ̃, v⟩` over sampled resolved cells and
/// `n = 1..=n_checks`. Orbits are brought back into the window with the
/// integer-translation law `H(w + p) = H(w) + ⟨p, v⟩`.
fn equivariance(
    chart: &LevelFunctionChart,
    map: &LiftedTorusMap,
    rho_tilde: Vec2,
    n_checks: u64,
    tol: f64,
) -> Result<EquivarianceStats, MapError> {
    let conj = map.conjugate(chart.t);
    let n = chart.window.resolution;
    let stride = (n / EQUIVARIANCE_SIDE).max(1);
    let alpha = rho_tilde.dot(chart.v);
    // the opening is undefined on the two outermost cell layers
    let w = &chart.window;
    let reach = w.half_width - 2.0 * w.cell_size();
    let inside = |z: Vec2| (z - w.center).max_abs() < reach;
    let (mut sum_sq, mut max, mut within, mut samples, mut skipped) = (0.0, 0.0f64, 0usize, 0usize, 0usize);
    for j in (stride / 2..n).step_by(stride) {
        for i in (stride / 2..n).step_by(stride) {
            if *chart.status.get(i, j) != CellStatus::Resolved {
                continue;
            }
            let z = chart.window.cell_center(i, j);
            if !inside(z) {
                continue;
            }
            let Some(h0) = chart.interpolate(z) else { continue };
            let mut walker = CocycleWalker::new(&conj, z, true);
            for k in 1..=n_checks {
                let d = walker.step()?;
                let p = Vec2::new(d.x.round(), d.y.round());
                let moved = z + (d - p);
                let Some(h1) = inside(moved).then(|| chart.interpolate(moved)).flatten() else {
                    skipped += 1;
                    continue;
                };
                let res = (h1 + p.dot(chart.v) - h0 - k as f64 * alpha).abs();
                sum_sq += res * res;
                max = max.max(res);
                samples += 1;
                if res <= tol {
                    within += 1;
                }
            }
        }
    }
    let rms = if samples > 0 { (sum_sq / samples as f64).sqrt() } else { f64::NAN };
    let within_tolerance = if samples > 0 { within as f64 / samples as f64 } else { 0.0 };
    Ok(EquivarianceStats { samples, skipped, rms, max, within_tolerance })
}

/// Grid-scale checks of the pseudo-foliation axioms on extracted leaves:
/// (a) separation, (b) empty interior, (c) disjointness, (d) dynamical
/// equivariance, (e) strip confinement.
pub fn certify(
    chart: &LevelFunctionChart,
    leaves: &[PseudoLeaf],
    map: &LiftedTorusMap,
    rho_tilde: Vec2,
    n_checks: u64,
) -> Result<Certificate, MapError> {
    let h = chart.window.cell_size();
    let eps = chart.options.eps_r;
    let mut checks = Vec::with_capacity(5);

    let mut worst_sep = (1u32, 1u32);
    let mut sep_ok = true;
    for leaf in leaves {
        let (a, b) = separation_counts(chart, leaf.level);
        if (a, b) != (1, 1) {
            sep_ok = false;
            worst_sep = (a, b);
        }
    }
    checks.push(AxiomCheck {
        name: "separation".into(),
        passed: sep_ok && !leaves.is_empty(),
        value: (worst_sep.0 + worst_sep.1) as f64,
        tolerance: 2.0,
        detail: format!("components above/below: {}/{}", worst_sep.0, worst_sep.1),
    });

    let thickness = leaves.iter().map(|l| band_thickness(chart, l.level)).max().unwrap_or(0);
    checks.push(AxiomCheck {
        name: "empty_interior".into(),
        passed: thickness <= MAX_BAND_CELLS,
        value: thickness as f64,
        tolerance: MAX_BAND_CELLS as f64,
        detail: "longest level band run in cells".into(),
    });

    let mut min_gap = f64::INFINITY;
    for (a, la) in leaves.iter().enumerate() {
        for lb in &leaves[a + 1..] {
            if la.level != lb.level {
                min_gap = min_gap.min(leaf_distance(la, lb));
            }
        }
    }
    checks.push(AxiomCheck {
        name: "disjointness".into(),
        passed: min_gap >= h,
        value: min_gap,
        tolerance: h,
        detail: "minimal distance between leaves of distinct levels".into(),
    });

    let tol = 2.0 * eps + 2.0 * h;
    let stats = equivariance(chart, map, rho_tilde, n_checks, tol)?;
    checks.push(AxiomCheck {
        name: "equivariance".into(),
        passed: stats.samples > 0 && stats.rms <= tol,
        value: stats.rms,
        tolerance: tol,
        detail: format!("{} samples, max {:.6e}, {:.4} within tolerance", stats.samples, stats.max, stats.within_tolerance),
    });

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for idx in 0..chart.window.len() {
        if chart.status.as_slice()[idx] == CellStatus::Resolved {
            let off = chart.sup_values.as_slice()[idx] - chart.window.cell_center_at(idx).dot(chart.v);
            lo = lo.min(off);
            hi = hi.max(off);
        }
    }
    let global = (hi - lo).max(0.0);
    let widest = leaves.iter().map(|l| l.strip.width).fold(0.0, f64::max);
    checks.push(AxiomCheck {
        name: "strip_confinement".into(),
        passed: widest <= global + 4.0 * h,
        value: widest,
        tolerance: global + 4.0 * h,
        detail: format!("global oscillation of H - <z,v>: {global:.6e}"),
    });

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(Certificate { checks, equivariance: stats, slope: chart.slope, all_passed })
}
