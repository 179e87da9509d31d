//! Finite-horizon, finite-window approximations of the fibered stable sets
//! at infinity `Λ_r^v(t)` and of the one-sided sets `B⁺(t)`.
//!
//! A cell with center `z` qualifies at level `r` when
//! `⟨H_t^{(n)}(z), v⟩ ≥ r` for every `n` in the horizon range. By the
//! displacement identity this reads `⟨z, v⟩ + g_n(π(z) + t) ≥ r` with
//! `g_n = ⟨Δ^{(n)} − nρ̃, v⟩`, so all cells over one torus point share the
//! orbit scan. [`fiber_envelope`] computes `⟨z, v⟩ + min_n g_n` once per
//! distinct torus point; thresholding it at any `r` gives the qualifying set
//! for that `r` exactly, because floating-point addition is monotone.
//! [`qualifying_set_direct`] is the cell-by-cell early-exit scan and serves as
//! the reference implementation.
//!
//! The point at infinity is replaced by the far cap of the window: cells
//! whose `⟨z, v⟩` lies within `cap_fraction·W` of the far edge in direction
//! `v`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deviations::Verdict;
use crate::geom::Vec2;
use crate::grid::{components_touching, label_components, BoolGrid, Connectivity, Grid, GridError, Window};
use crate::parallel::try_par_map;
use crate::skew_product::CentralizedSkewProduct;
use crate::torus_maps::{CocycleWalker, MapError, OrbitClasses};

pub const DEFAULT_CAP_FRACTION: f64 = 0.1;
pub const DEFAULT_RESOLUTION: usize = 512;
pub const MIN_HALF_WIDTH: f64 = 8.0;
/// Connectivity of qualifying sets and their components.
pub const CONNECTIVITY: Connectivity = Connectivity::Eight;

const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StableSetError {
    #[error("direction must be a unit vector, got {0:?}")]
    InvalidDirection(Vec2),
    #[error("horizon {n} exceeds the cap {cap}")]
    HorizonTooLarge { n: u64, cap: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// `|n| ≤ N`.
    TwoSided,
    /// `0 ≤ n ≤ N`.
    Forward,
}

/// Everything that fixes a family of qualifying sets except the level `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberScan {
    pub t: Vec2,
    pub v: Vec2,
    pub horizon: u64,
    pub window: Window,
    pub sidedness: Sidedness,
}

impl FiberScan {
    pub fn new(t: Vec2, v: Vec2, horizon: u64, window: Window, sidedness: Sidedness) -> Self {
        FiberScan { t, v, horizon, window, sidedness }
    }

    fn validate(&self, sp: &CentralizedSkewProduct) -> Result<(), StableSetError> {
        if !(self.v.is_finite() && (self.v.norm() - 1.0).abs() <= 1e-12) {
            return Err(StableSetError::InvalidDirection(self.v));
        }
        if !self.t.is_finite() {
            return Err(StableSetError::InvalidParameter(format!("fiber {:?}", self.t)));
        }
        let cap = sp.map().horizon_cap();
        if self.horizon > cap {
            return Err(StableSetError::HorizonTooLarge { n: self.horizon, cap });
        }
        Window::new(self.window.center, self.window.half_width, self.window.resolution)?;
        Ok(())
    }

    /// Torus point `π(z) + t` that the orbit scan of cell `idx` starts from.
    fn torus_point(&self, idx: usize) -> Vec2 {
        (self.window.cell_center_at(idx).wrap() + self.t.wrap()).wrap()
    }
}

/// `g_n(q) = ⟨Δ^{(n)}(q) − nρ̃, v⟩` for `n = 0, 1, −1, 2, −2, …`.
struct DeviationScan<'a> {
    sp: &'a CentralizedSkewProduct,
    v: Vec2,
    forward: CocycleWalker<'a>,
    backward: Option<CocycleWalker<'a>>,
    next: i64,
    horizon: i64,
}

impl<'a> DeviationScan<'a> {
    fn new(sp: &'a CentralizedSkewProduct, q: Vec2, v: Vec2, horizon: u64, sidedness: Sidedness) -> Self {
        let backward = (sidedness == Sidedness::TwoSided).then(|| CocycleWalker::new(sp.map(), q, false));
        DeviationScan { sp, v, forward: CocycleWalker::new(sp.map(), q, true), backward, next: 0, horizon: horizon as i64 }
    }

    fn next_value(&mut self) -> Option<Result<f64, MapError>> {
        loop {
            let n = self.next;
            if n.abs() > self.horizon {
                return None;
            }
            // 0, 1, −1, 2, −2, …
            self.next = if n > 0 { -n } else { -n + 1 };
            if n == 0 {
                return Some(Ok(0.0));
            }
            let walker = if n > 0 {
                &mut self.forward
            } else {
                match self.backward.as_mut() {
                    Some(w) => w,
                    None => continue,
                }
            };
            let rho = self.sp.rho_tilde();
            return Some(walker.step().map(|d| (d - rho * n as f64).dot(self.v)));
        }
    }
}

/// `m(z) = ⟨z, v⟩ + min_n g_n(π(z) + t)` over the window.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberEnvelope {
    pub scan: FiberScan,
    /// Values are exact where `≥ floor`; elsewhere they are only known to be
    /// below `floor`.
    pub floor: f64,
    pub values: Grid<f64>,
    /// Distinct torus points scanned.
    pub orbits: usize,
}

impl FiberEnvelope {
    /// Qualifying set at level `r ≥ floor`.
    pub fn qualifying(&self, r: f64) -> BoolGrid {
        debug_assert!(r >= self.floor);
        self.values.map(|&m| m >= r)
    }
}

/// Envelope of the fiber orbit over the window. Scans stop once every cell
/// over a torus point is known to fall below `floor`; pass `−∞` for full
/// scans.
pub fn fiber_envelope(sp: &CentralizedSkewProduct, scan: &FiberScan, floor: f64) -> Result<FiberEnvelope, StableSetError> {
    scan.validate(sp)?;
    let window = scan.window;
    let heights: Vec<f64> = (0..window.len()).map(|idx| window.cell_center_at(idx).dot(scan.v)).collect();
    let classes = OrbitClasses::new(sp.map(), (0..window.len()).map(|idx| scan.torus_point(idx)));
    let mut top = vec![f64::NEG_INFINITY; classes.len()];
    for (idx, &c) in classes.class_of.iter().enumerate() {
        top[c] = top[c].max(heights[idx]);
    }
    let work: Vec<(Vec2, f64)> = classes.representatives.iter().copied().zip(top).collect();
    let chunks: Vec<&[(Vec2, f64)]> = work.chunks(CHUNK).collect();
    let minima = try_par_map(&chunks, |chunk| -> Result<Vec<f64>, MapError> {
        chunk
            .iter()
            .map(|&(q, a_max)| {
                let mut it = DeviationScan::new(sp, q, scan.v, scan.horizon, scan.sidedness);
                let mut lowest = f64::INFINITY;
                while let Some(g) = it.next_value() {
                    lowest = lowest.min(g?);
                    if a_max + lowest < floor {
                        break;
                    }
                }
                Ok(lowest)
            })
            .collect()
    })?;
    let minima: Vec<f64> = minima.into_iter().flatten().collect();
    let values = heights.iter().zip(&classes.class_of).map(|(a, &c)| a + minima[c]).collect();
    Ok(FiberEnvelope { scan: *scan, floor, values: Grid::from_vec(window.resolution, values), orbits: classes.len() })
}

/// Qualifying set at level `r`: cells whose fiber orbit stays in the closed
/// half-plane `{⟨·, v⟩ ≥ r}` over the horizon range.
pub fn qualifying_set(sp: &CentralizedSkewProduct, scan: &FiberScan, r: f64) -> Result<BoolGrid, StableSetError> {
    Ok(fiber_envelope(sp, scan, r)?.qualifying(r))
}

/// Reference implementation: independent early-exit scan for every cell,
/// in the order `n = 0, 1, −1, 2, −2, …`.
pub fn qualifying_set_direct(sp: &CentralizedSkewProduct, scan: &FiberScan, r: f64) -> Result<BoolGrid, StableSetError> {
    scan.validate(sp)?;
    let cells: Vec<usize> = (0..scan.window.len()).collect();
    let flags = try_par_map(&cells, |&idx| -> Result<bool, MapError> {
        let a = scan.window.cell_center_at(idx).dot(scan.v);
        let mut it = DeviationScan::new(sp, scan.torus_point(idx), scan.v, scan.horizon, scan.sidedness);
        while let Some(g) = it.next_value() {
            if a + g? < r {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    Ok(Grid::from_vec(scan.window.resolution, flags))
}

/// Far cap `{⟨z, v⟩ ≥ ⟨center, v⟩ + (1 − cap_fraction)·W}`.
pub fn far_cap(window: &Window, v: Vec2, cap_fraction: f64) -> BoolGrid {
    let level = window.center.dot(v) + (1.0 - cap_fraction) * window.half_width;
    Grid::from_fn(window.resolution, |i, j| window.cell_center(i, j).dot(v) >= level)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfinityComponent {
    pub mask: BoolGrid,
    pub touched_far_cap: bool,
    /// Number of distinct components meeting the far cap (more than one is
    /// flagged in reports).
    pub far_cap_components: usize,
}

/// Union of the 8-connected components of `mask` that reach the far cap.
pub fn infinity_component(mask: &BoolGrid, v: Vec2, window: &Window, cap_fraction: f64) -> InfinityComponent {
    let cap = far_cap(window, v, cap_fraction);
    let (component, touched) = components_touching(mask, &cap, CONNECTIVITY);
    InfinityComponent { mask: component, touched_far_cap: touched > 0, far_cap_components: touched }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteHorizonStableSet {
    pub r: f64,
    pub scan: FiberScan,
    pub cap_fraction: f64,
    pub qualifying: BoolGrid,
    pub infinity: InfinityComponent,
}

impl FiniteHorizonStableSet {
    pub fn compute(sp: &CentralizedSkewProduct, scan: &FiberScan, r: f64, cap_fraction: f64) -> Result<Self, StableSetError> {
        let qualifying = qualifying_set(sp, scan, r)?;
        Ok(Self::from_mask(scan, r, cap_fraction, qualifying))
    }

    pub fn from_mask(scan: &FiberScan, r: f64, cap_fraction: f64, qualifying: BoolGrid) -> Self {
        let infinity = infinity_component(&qualifying, scan.v, &scan.window, cap_fraction);
        FiniteHorizonStableSet { r, scan: *scan, cap_fraction, qualifying, infinity }
    }
}

/// Witness parameters for the equivariance checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Equivariance {
    /// `Λ_r ⊂ Λ_s` for `s < r`; counts violating cells only.
    MonotoneInclusion { s: f64 },
    /// `Λ_r = ⋂_{s<r} Λ_s`, compared against one `s` close to `r`.
    IntersectionLimit { s: f64 },
    /// `Λ_{r+⟨t̃,v⟩}(t − π(t̃)) = T_t̃(Λ_r(t))`.
    Conjugation { t_lift: Vec2 },
    /// `T_p(Λ_r(t)) = Λ_{r+⟨p,v⟩}(t)`.
    IntegerTranslation { p: [i64; 2] },
}

fn layers(cells: usize, a: &BoolGrid, b: &BoolGrid) -> f64 {
    cells as f64 / a.boundary_count().max(b.boundary_count()).max(1) as f64
}

/// Size of the discrepancy between the two sides of an equivariance law, in
/// units of boundary-cell layers. Translated sides are computed on the
/// translated window so both grids share cell indices.
pub fn equivariance_residual(
    sp: &CentralizedSkewProduct,
    scan: &FiberScan,
    r: f64,
    cap_fraction: f64,
    which: Equivariance,
) -> Result<f64, StableSetError> {
    let lambda = |scan: &FiberScan, r: f64| -> Result<BoolGrid, StableSetError> {
        Ok(FiniteHorizonStableSet::compute(sp, scan, r, cap_fraction)?.infinity.mask)
    };
    match which {
        Equivariance::MonotoneInclusion { s } | Equivariance::IntersectionLimit { s } if s >= r => {
            Err(StableSetError::InvalidParameter(format!("witness s = {s} must be below r = {r}")))
        }
        Equivariance::MonotoneInclusion { s } => {
            let env = fiber_envelope(sp, scan, s)?;
            let at_r = infinity_component(&env.qualifying(r), scan.v, &scan.window, cap_fraction).mask;
            let at_s = infinity_component(&env.qualifying(s), scan.v, &scan.window, cap_fraction).mask;
            Ok(layers(at_r.and_not(&at_s).count(), &at_r, &at_s))
        }
        Equivariance::IntersectionLimit { s } => {
            let env = fiber_envelope(sp, scan, s)?;
            let at_r = infinity_component(&env.qualifying(r), scan.v, &scan.window, cap_fraction).mask;
            let at_s = infinity_component(&env.qualifying(s), scan.v, &scan.window, cap_fraction).mask;
            Ok(layers(at_r.symmetric_difference_count(&at_s), &at_r, &at_s))
        }
        Equivariance::Conjugation { t_lift } => {
            let base = lambda(scan, r)?;
            let moved = FiberScan { t: scan.t - t_lift, window: scan.window.translated(t_lift), ..*scan };
            let other = lambda(&moved, r + t_lift.dot(scan.v))?;
            Ok(layers(base.symmetric_difference_count(&other), &base, &other))
        }
        Equivariance::IntegerTranslation { p } => {
            let p = Vec2::new(p[0] as f64, p[1] as f64);
            let base = lambda(scan, r)?;
            let moved = FiberScan { window: scan.window.translated(p), ..*scan };
            let other = lambda(&moved, r + p.dot(scan.v))?;
            Ok(layers(base.symmetric_difference_count(&other), &base, &other))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberNonemptiness {
    pub t: Vec2,
    pub nonempty: bool,
    pub cells: usize,
    pub far_cap_components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonemptinessReport {
    pub fibers: Vec<FiberNonemptiness>,
    pub all_nonempty: bool,
    /// Suggested half width for a retry when some fiber came out empty.
    pub retry_half_width: Option<f64>,
}

/// Infinity component of `Λ_r^v(t)` for each sampled fiber `t`.
pub fn nonemptiness_check(
    sp: &CentralizedSkewProduct,
    scan: &FiberScan,
    r: f64,
    cap_fraction: f64,
    t_samples: &[Vec2],
) -> Result<NonemptinessReport, StableSetError> {
    let mut fibers = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let set = FiniteHorizonStableSet::compute(sp, &FiberScan { t, ..*scan }, r, cap_fraction)?;
        let cells = set.infinity.mask.count();
        fibers.push(FiberNonemptiness { t, nonempty: cells > 0, cells, far_cap_components: set.infinity.far_cap_components });
    }
    let all_nonempty = fibers.iter().all(|f| f.nonempty);
    let retry_half_width = (!all_nonempty).then_some(2.0 * scan.window.half_width);
    Ok(NonemptinessReport { fibers, all_nonempty, retry_half_width })
}

/// `t_k = ((i+½)/side, (j+½)/side)`.
pub fn fiber_samples(side: usize) -> Vec<Vec2> {
    let s = side as f64;
    (0..side).flat_map(|j| (0..side).map(move |i| Vec2::new((i as f64 + 0.5) / s, (j as f64 + 0.5) / s))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeStatus {
    Escaped,
    Confined,
    /// `s` exceeds every `|⟨z, v⟩|` in the window; confinement is vacuous.
    WindowLimited,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripEscape {
    pub s: f64,
    pub status: EscapeStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripEscapeReport {
    pub applicable: bool,
    pub results: Vec<StripEscape>,
}

/// Whether the component leaves the strip `A_s^v = {|⟨z, v⟩| < s}`. Only
/// meaningful when the deviation verdict for `v` is growing and the
/// component is non-empty.
pub fn strip_escape_check(component: &BoolGrid, v: Vec2, window: &Window, s_values: &[f64], verdict: Verdict) -> StripEscapeReport {
    let applicable = verdict == Verdict::Growing && component.any();
    let (lo, hi) = window.projection_range(v);
    let reach = lo.abs().max(hi.abs());
    let results = s_values
        .iter()
        .map(|&s| {
            let status = if !applicable {
                EscapeStatus::NotApplicable
            } else if s > reach {
                EscapeStatus::WindowLimited
            } else {
                let escaped =
                    component.as_slice().iter().enumerate().any(|(idx, &inside)| inside && window.cell_center_at(idx).dot(v).abs() >= s);
                if escaped {
                    EscapeStatus::Escaped
                } else {
                    EscapeStatus::Confined
                }
            };
            StripEscape { s, status }
        })
        .collect();
    StripEscapeReport { applicable, results }
}

/// Fraction of window cells in the infinity component at the permissive
/// level `r_min`, which stands in for `⋃_{r ≥ 0} Λ_{−r}`.
pub fn coverage_fraction(sp: &CentralizedSkewProduct, scan: &FiberScan, r_min: f64, cap_fraction: f64) -> Result<f64, StableSetError> {
    if r_min > -2.0 * scan.window.half_width {
        return Err(StableSetError::InvalidParameter(format!("r_min = {r_min} must be at most -2W = {}", -2.0 * scan.window.half_width)));
    }
    let set = FiniteHorizonStableSet::compute(sp, scan, r_min, cap_fraction)?;
    Ok(set.infinity.mask.count() as f64 / scan.window.len() as f64)
}

/// Area of the grid interior of `component`.
pub fn interior_area(component: &BoolGrid, window: &Window) -> f64 {
    let h = window.cell_size();
    component.interior().count() as f64 * h * h
}

/// Number of 8-connected components of a mask.
pub fn component_count(mask: &BoolGrid) -> u32 {
    label_components(mask, CONNECTIVITY).count
}

/// Default half width: `max(8, 2M)` rounded up to a power of two, which keeps
/// cell centers dyadic so cells over one torus point share a scan.
pub fn auto_half_width(measured_bound: f64) -> f64 {
    let want = MIN_HALF_WIDTH.max(2.0 * measured_bound);
    if !want.is_finite() {
        return MIN_HALF_WIDTH;
    }
    let mut w = MIN_HALF_WIDTH;
    while w < want {
        w *= 2.0;
    }
    w
}
