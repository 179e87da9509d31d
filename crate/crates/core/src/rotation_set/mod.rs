//! Finite-horizon estimates of the rotation set `ρ(f̃)`.
//!
//! The estimate is the convex hull of the displacement averages
//! `Δ^{(n)}(z)/n` over a `res × res` lattice of the fundamental domain
//! (points `(i/res, j/res)`), taken at the largest requested horizon. Smaller
//! horizons are sampled along the same orbits and only used for the diameter
//! trend. The hull is classified as a point, a segment or a set with interior,
//! and for the first two a carrier line `ℓ_α^v ⊃ ρ(f̃)` is fitted.

pub mod hull;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::parallel::try_par_map;
use crate::torus_maps::{CocycleWalker, LiftedTorusMap, MapError, OrbitClasses};

pub const DEFAULT_POINT_TOL: f64 = 1e-4;
pub const DEFAULT_LINE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationSetError {
    #[error("rotation set is not contained in a line (classified {0:?})")]
    NotLineLike(Classification),
    #[error("horizons must be positive, strictly increasing and within the cap: {0}")]
    InvalidHorizons(String),
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Point,
    Segment,
    Interior,
    Inconclusive,
}

/// Carrier line `ℓ_α^v = αv + R v⊥`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub v: Vec2,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonDiameter {
    pub horizon: u64,
    pub diameter: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationSetOptions {
    pub point_tol: f64,
    pub line_tol: f64,
    /// Deviation direction used when the rotation set is a single point.
    pub default_direction: Vec2,
}

impl Default for RotationSetOptions {
    fn default() -> Self {
        RotationSetOptions { point_tol: DEFAULT_POINT_TOL, line_tol: DEFAULT_LINE_TOL, default_direction: Vec2::new(0.0, 1.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSetEstimate {
    /// CCW hull vertices.
    pub hull: Vec<Vec2>,
    pub horizon: u64,
    pub resolution: usize,
    pub diameter: f64,
    pub min_width: f64,
    pub centroid: Vec2,
    pub diameters: Vec<HorizonDiameter>,
    pub classification: Classification,
    pub carrier: Option<Carrier>,
    /// Distinct orbits actually walked (grid points sharing an orbit are
    /// merged).
    pub orbits: usize,
}

impl RotationSetEstimate {
    /// `ρ̃` handed to downstream stages: the hull centroid.
    pub fn rho_tilde(&self) -> Vec2 {
        self.centroid
    }
}

fn validate_horizons(map: &LiftedTorusMap, horizons: &[u64]) -> Result<(), RotationSetError> {
    if horizons.is_empty() {
        return Err(RotationSetError::InvalidHorizons("empty list".into()));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RotationSetError::InvalidHorizons(format!("{horizons:?}")));
    }
    let last = *horizons.last().expect("non-empty");
    if last > map.horizon_cap() {
        return Err(RotationSetError::InvalidHorizons(format!("{last} > cap {}", map.horizon_cap())));
    }
    Ok(())
}

pub fn estimate_rotation_set(
    map: &LiftedTorusMap,
    grid_res: usize,
    horizons: &[u64],
    opts: &RotationSetOptions,
) -> Result<RotationSetEstimate, RotationSetError> {
    if grid_res == 0 {
        return Err(RotationSetError::InvalidResolution);
    }
    validate_horizons(map, horizons)?;
    let res = grid_res as f64;
    let points = (0..grid_res).flat_map(|j| (0..grid_res).map(move |i| Vec2::new(i as f64 / res, j as f64 / res)));
    let classes = OrbitClasses::new(map, points);
    let last = *horizons.last().expect("validated");

    // averages[class][h] = Δ^{(horizons[h])}(z)/horizons[h]
    let averages = try_par_map(&classes.representatives, |&z| -> Result<Vec<Vec2>, MapError> {
        let mut walker = CocycleWalker::new(map, z, true);
        let mut out = Vec::with_capacity(horizons.len());
        let mut next = 0;
        for n in 1..=last {
            let d = walker.step()?;
            if n == horizons[next] {
                out.push(d / n as f64);
                next += 1;
            }
        }
        Ok(out)
    })?;

    let mut diameters = Vec::with_capacity(horizons.len());
    let mut final_hull = Vec::new();
    for (h_idx, &h) in horizons.iter().enumerate() {
        let pts: Vec<Vec2> = averages.iter().map(|a| a[h_idx]).collect();
        let hull = hull::convex_hull(&pts);
        diameters.push(HorizonDiameter { horizon: h, diameter: hull::diameter(&hull) });
        if h == last {
            final_hull = hull;
        }
    }
    let (min_width, _) = hull::min_width(&final_hull);
    let mut est = RotationSetEstimate {
        diameter: hull::diameter(&final_hull),
        centroid: hull::centroid(&final_hull),
        hull: final_hull,
        horizon: last,
        resolution: grid_res,
        min_width,
        diameters,
        classification: Classification::Inconclusive,
        carrier: None,
        orbits: classes.len(),
    };
    est.classification = classify(&est, opts.point_tol, opts.line_tol);
    est.carrier = fit_direction(&est, opts.default_direction, opts.line_tol).ok();
    Ok(est)
}

/// `Δ^{(n)}(z̃₀)/n`, the orbit-average surrogate for a measure's rotation vector.
pub fn birkhoff_rotation_vector(map: &LiftedTorusMap, z0: Vec2, n: u64) -> Result<Vec2, RotationSetError> {
    if n == 0 {
        return Err(RotationSetError::InvalidHorizons("n must be at least 1".into()));
    }
    let n_signed = i64::try_from(n).map_err(|_| RotationSetError::InvalidHorizons(format!("{n}")))?;
    Ok(map.iterate_displacement(z0, n_signed)? / n as f64)
}

pub fn classify(est: &RotationSetEstimate, point_tol: f64, line_tol: f64) -> Classification {
    if est.diameter <= point_tol {
        Classification::Point
    } else if est.min_width <= line_tol {
        Classification::Segment
    } else if est.min_width > 10.0 * line_tol {
        Classification::Interior
    } else {
        Classification::Inconclusive
    }
}

/// Flips `v` so its first non-zero coordinate is positive.
fn lexicographic_positive(v: Vec2) -> Vec2 {
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else {
        v
    }
}

/// Carrier line for point- or segment-like estimates. For a point the
/// direction is `default_direction`; for a segment it is the normal of the
/// hull's long axis.
pub fn fit_direction(est: &RotationSetEstimate, default_direction: Vec2, line_tol: f64) -> Result<Carrier, RotationSetError> {
    let v = match est.classification {
        Classification::Point => {
            default_direction.normalized().ok_or_else(|| RotationSetError::InvalidHorizons("zero default direction".into()))?
        }
        Classification::Segment => {
            let (_, axis) = hull::min_width(&est.hull);
            let axis = axis.ok_or(RotationSetError::NotLineLike(est.classification))?;
            lexicographic_positive(axis.perp())
        }
        other => return Err(RotationSetError::NotLineLike(other)),
    };
    let alpha = est.centroid.dot(v);
    let residual = est.hull.iter().map(|p| (p.dot(v) - alpha).abs()).fold(0.0, f64::max);
    let allowed = if est.classification == Classification::Point { est.diameter.max(line_tol) } else { line_tol };
    if residual > allowed {
        return Err(RotationSetError::NotLineLike(est.classification));
    }
    Ok(Carrier { v, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_maps::{MapFamily, TrigPoly1, GOLDEN_MEAN};

    fn skew_half() -> LiftedTorusMap {
        MapFamily::Skew { base: 0.5, forcing: TrigPoly1::cosine(2, 1.0) }.build().unwrap()
    }

    fn coboundary() -> LiftedTorusMap {
        MapFamily::CoboundarySkew { base: GOLDEN_MEAN, transfer: TrigPoly1::sine(1, 1.0) }.build().unwrap()
    }

    fn estimate_from_hull(hull: Vec<Vec2>) -> RotationSetEstimate {
        RotationSetEstimate {
            diameter: hull::diameter(&hull),
            min_width: hull::min_width(&hull).0,
            centroid: hull::centroid(&hull),
            hull,
            horizon: 1,
            resolution: 1,
            diameters: vec![],
            classification: Classification::Inconclusive,
            carrier: None,
            orbits: 0,
        }
    }

    #[test]
    fn translation_is_a_point() {
        let m = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        let est = estimate_rotation_set(&m, 16, &[10, 100], &RotationSetOptions::default()).unwrap();
        assert_eq!(est.hull.len(), 1);
        assert!((est.hull[0] - Vec2::new(0.3, 0.7)).max_abs() <= 1e-12);
        assert!(est.diameter <= 1e-12);
        assert_eq!(est.classification, Classification::Point);
        let c = est.carrier.unwrap();
        assert_eq!(c.v, Vec2::new(0.0, 1.0));
        assert!((c.alpha - 0.7).abs() < 1e-12);
    }

    #[test]
    fn resonant_skew_is_vertical_segment() {
        let est = estimate_rotation_set(&skew_half(), 256, &[100, 1000, 10_000], &RotationSetOptions::default()).unwrap();
        assert_eq!(est.classification, Classification::Segment);
        assert_eq!(est.hull.len(), 2);
        let (lo, hi) = (est.hull[0], est.hull[1]);
        assert!((lo - Vec2::new(0.5, -1.0)).max_abs() <= 1e-6, "{lo:?}");
        assert!((hi - Vec2::new(0.5, 1.0)).max_abs() <= 1e-6, "{hi:?}");
        let c = fit_direction(&est, Vec2::new(0.0, 1.0), DEFAULT_LINE_TOL).unwrap();
        assert_eq!(c.v, Vec2::new(1.0, 0.0));
        assert!((c.alpha - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coboundary_is_point_within_telescoping_bound() {
        for n in [100u64, 1000] {
            let est = estimate_rotation_set(&coboundary(), 32, &[n], &RotationSetOptions::default()).unwrap();
            for p in &est.hull {
                assert!((*p - Vec2::new(GOLDEN_MEAN, 0.0)).norm() <= 2.0 / n as f64);
            }
        }
    }

    #[test]
    fn birkhoff_vectors() {
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        let r = birkhoff_rotation_vector(&t, Vec2::new(0.2, 0.1), 100).unwrap();
        assert!((r - Vec2::new(0.3, 0.7)).max_abs() < 1e-14);
        for m in [1u64, 5, 50] {
            let r = birkhoff_rotation_vector(&skew_half(), Vec2::ZERO, 2 * m).unwrap();
            assert!((r - Vec2::new(0.5, 1.0)).max_abs() < 1e-14);
        }
        for n in [3u64, 77, 1000] {
            let r = birkhoff_rotation_vector(&coboundary(), Vec2::new(0.41, 0.2), n).unwrap();
            assert!((r - Vec2::new(GOLDEN_MEAN, 0.0)).norm() <= 2.0 / n as f64);
        }
        assert!(birkhoff_rotation_vector(&t, Vec2::ZERO, 0).is_err());
    }

    #[test]
    fn classify_triangle_as_interior() {
        let est = estimate_from_hull(hull::convex_hull(&[Vec2::new(0.0, 0.0), Vec2::new(0.1, 0.0), Vec2::new(0.0, 0.1)]));
        assert_eq!(classify(&est, 1e-4, 1e-3), Classification::Interior);
        let mut e2 = est.clone();
        e2.classification = Classification::Interior;
        assert!(matches!(fit_direction(&e2, Vec2::new(0.0, 1.0), 1e-3), Err(RotationSetError::NotLineLike(_))));
    }

    #[test]
    fn classify_inconclusive_band() {
        // width 5e-4 lies between line_tol and 10·line_tol
        let est = estimate_from_hull(hull::convex_hull(&[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.5, 5e-4)]));
        assert_eq!(classify(&est, 1e-4, 1e-4), Classification::Inconclusive);
    }

    #[test]
    fn horizons_validated() {
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        let o = RotationSetOptions::default();
        assert!(estimate_rotation_set(&t, 4, &[], &o).is_err());
        assert!(estimate_rotation_set(&t, 4, &[10, 10], &o).is_err());
        assert!(estimate_rotation_set(&t, 4, &[0, 10], &o).is_err());
        assert!(estimate_rotation_set(&t.clone().with_horizon_cap(5), 4, &[10], &o).is_err());
    }

    #[test]
    fn lift_independence() {
        let m = coboundary();
        let p = Vec2::new(2.0, -1.0);
        let shifted = m.post_translate(p).unwrap();
        let o = RotationSetOptions::default();
        let a = estimate_rotation_set(&m, 16, &[200], &o).unwrap();
        let b = estimate_rotation_set(&shifted, 16, &[200], &o).unwrap();
        assert!((b.centroid - a.centroid - p).max_abs() < 1e-12);
        assert!((b.diameter - a.diameter).abs() < 1e-12);
    }

    #[test]
    fn diameter_shrinks_monotonically_up_to_allowance() {
        for m in [skew_half(), coboundary()] {
            let bound = m.sup_norm_bound();
            let est = estimate_rotation_set(&m, 32, &[50, 100, 200, 400, 800], &RotationSetOptions::default()).unwrap();
            for w in est.diameters.windows(2) {
                assert_eq!(w[1].horizon, 2 * w[0].horizon);
                assert!(w[1].diameter <= w[0].diameter + 2.0 * bound / w[0].horizon as f64);
            }
        }
    }
}
