use serde::{Deserialize, Serialize};

use super::FoliationError;
use crate::geom::{slope_type, SlopeType, Vec2};
use crate::grid::{bottleneck_fill, components_touching, neighborhood_open, BoolGrid, Connectivity, Grid, Window};
use crate::skew_product::CentralizedSkewProduct;
use crate::stable_sets::{far_cap, fiber_envelope, infinity_component, FiberEnvelope, FiberScan, DEFAULT_CAP_FRACTION};

/// Denominator cap of the slope rationality test.
pub const SLOPE_DENOMINATOR_CAP: i64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Resolved,
    SaturatedLow,
    SaturatedHigh,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelOptions {
    pub r_lo: f64,
    pub r_hi: f64,
    pub eps_r: f64,
    /// Deviation bound `M` locating the seed half-plane `{⟨z, v⟩ ≥ r + M + h}`.
    pub m_bound: f64,
    pub cap_fraction: f64,
}

impl LevelOptions {
    /// Range covering the whole window: from `M` below the lowest cell to the
    /// highest level whose seed still contains an interior cell; `ε_r = h/2`.
    pub fn covering(window: &Window, v: Vec2, m_bound: f64) -> Self {
        let h = window.cell_size();
        let (lo, hi) = window.projection_range(v);
        let interior_step = h * (v.x.abs() + v.y.abs());
        LevelOptions {
            r_lo: lo - m_bound,
            r_hi: hi - interior_step - m_bound - h,
            eps_r: h / 2.0,
            m_bound,
            cap_fraction: DEFAULT_CAP_FRACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelFunctionChart {
    pub window: Window,
    pub t: Vec2,
    pub v: Vec2,
    /// `⟨ρ̃, v⟩`.
    pub alpha: f64,
    pub horizon: u64,
    pub options: LevelOptions,
    /// `H` on the lattice `r_lo + kε_r`.
    pub h_values: Grid<f64>,
    /// `sup{r : z ∈ U_r}` over all real `r` (`−∞` outside every `U_r`).
    pub sup_values: Grid<f64>,
    pub status: Grid<CellStatus>,
    pub slope: SlopeType,
}

impl LevelFunctionChart {
    pub fn lattice_len(&self) -> usize {
        lattice_len(&self.options)
    }

    /// `r_k = r_lo + k·ε_r`.
    pub fn r_sample(&self, k: usize) -> f64 {
        self.options.r_lo + k as f64 * self.options.eps_r
    }

    pub fn r_samples(&self) -> Vec<f64> {
        (0..self.lattice_len()).map(|k| self.r_sample(k)).collect()
    }

    pub fn resolved_fraction(&self) -> f64 {
        let n = self.status.as_slice().iter().filter(|s| **s == CellStatus::Resolved).count();
        n as f64 / self.window.len() as f64
    }

    pub fn resolved_mask(&self) -> BoolGrid {
        self.status.map(|s| *s == CellStatus::Resolved)
    }

    /// Bilinear interpolation of the sup values at cell-center resolution;
    /// `None` outside the resolved region.
    pub fn interpolate(&self, z: Vec2) -> Option<f64> {
        let w = &self.window;
        let h = w.cell_size();
        let fx = (z.x - (w.center.x - w.half_width)) / h - 0.5;
        let fy = (z.y - (w.center.y - w.half_width)) / h - 0.5;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i + 1 >= w.resolution || j + 1 >= w.resolution {
            return None;
        }
        let (ax, ay) = (fx - i as f64, fy - j as f64);
        let mut acc = 0.0;
        for (di, dj, wt) in [(0, 0, (1.0 - ax) * (1.0 - ay)), (1, 0, ax * (1.0 - ay)), (0, 1, (1.0 - ax) * ay), (1, 1, ax * ay)] {
            if *self.status.get(i + di, j + dj) != CellStatus::Resolved {
                return None;
            }
            acc += wt * self.sup_values.get(i + di, j + dj);
        }
        Some(acc)
    }
}

fn lattice_len(o: &LevelOptions) -> usize {
    ((o.r_hi - o.r_lo) / o.eps_r).ceil() as usize + 1
}

fn validate(o: &LevelOptions) -> Result<(), FoliationError> {
    let ok = o.r_lo.is_finite() && o.r_hi.is_finite() && o.r_hi > o.r_lo && o.eps_r > 0.0 && o.m_bound.is_finite() && o.m_bound >= 0.0;
    if !ok || lattice_len(o) > 100_000_000 {
        return Err(FoliationError::InvalidOptions(format!("{o:?}")));
    }
    Ok(())
}

/// Seed score `s(y) = ⟨y, v⟩ − (M + h)`: `y` lies in the seed half-plane of
/// level `r` iff `s(y) ≥ r`.
fn seed_scores(window: &Window, v: Vec2, m_bound: f64) -> Grid<f64> {
    let shift = m_bound + window.cell_size();
    Grid::from_fn(window.resolution, |i, j| window.cell_center(i, j).dot(v) - shift)
}

/// `U_r` from its definition: grid interior of the infinity component,
/// restricted to the components meeting the seed half-plane. The interior
/// is taken as a morphological opening, which drops sub-grid filaments
/// without eroding the boundary of `Λ_r`.
pub fn build_u_r(env: &FiberEnvelope, r: f64, m_bound: f64, cap_fraction: f64) -> Result<BoolGrid, FoliationError> {
    let scan = &env.scan;
    let lambda = infinity_component(&env.qualifying(r), scan.v, &scan.window, cap_fraction).mask;
    let interior = lambda.opening();
    let seed = seed_scores(&scan.window, scan.v, m_bound).map(|&s| s >= r);
    let (u, touched) = components_touching(&interior, &seed, Connectivity::Eight);
    if touched == 0 {
        return Err(FoliationError::SeedEmpty { r });
    }
    Ok(u)
}

/// `sup{r : z ∈ U_r}` for every cell at once. Thresholding the result at any
/// `r ≥ floor` reproduces [`build_u_r`]: far-cap propagation gives `Λ_r`,
/// a 3×3 opening gives its interior, and seed propagation gives `U_r`.
pub fn sup_level(env: &FiberEnvelope, m_bound: f64, cap_fraction: f64) -> Grid<f64> {
    let scan = &env.scan;
    let cap = far_cap(&scan.window, scan.v, cap_fraction).map(|&c| if c { f64::INFINITY } else { f64::NEG_INFINITY });
    let lambda = bottleneck_fill(&env.values, &cap, Connectivity::Eight);
    let interior = neighborhood_open(&lambda);
    bottleneck_fill(&interior, &seed_scores(&scan.window, scan.v, m_bound), Connectivity::Eight)
}

/// Level function on the lattice `r_lo + kε_r`.
pub fn level_function(sp: &CentralizedSkewProduct, scan: &FiberScan, options: &LevelOptions) -> Result<LevelFunctionChart, FoliationError> {
    validate(options)?;
    let env = fiber_envelope(sp, scan, options.r_lo)?;
    level_function_from_envelope(sp, &env, options)
}

/// [`level_function`] on a precomputed envelope; its floor must not exceed
/// `r_lo`.
pub fn level_function_from_envelope(
    sp: &CentralizedSkewProduct,
    env: &FiberEnvelope,
    options: &LevelOptions,
) -> Result<LevelFunctionChart, FoliationError> {
    validate(options)?;
    if env.floor > options.r_lo {
        return Err(FoliationError::InvalidOptions(format!("envelope floor {} above r_lo {}", env.floor, options.r_lo)));
    }
    let scan = &env.scan;
    let sup = sup_level(env, options.m_bound, options.cap_fraction);
    let top = lattice_len(options) - 1;
    let r_at = |k: usize| options.r_lo + k as f64 * options.eps_r;
    // U_{r_top} must be non-empty, which also covers every lower level
    let seeds = seed_scores(&scan.window, scan.v, options.m_bound);
    let seeded = sup.as_slice().iter().zip(seeds.as_slice()).any(|(&u, &s)| u.min(s) >= r_at(top));
    if !seeded {
        return Err(FoliationError::SeedEmpty { r: r_at(top) });
    }
    let mut status = Vec::with_capacity(scan.window.len());
    let mut h_values = Vec::with_capacity(scan.window.len());
    for &u in sup.as_slice() {
        // NaN counts as below every level
        if u.partial_cmp(&r_at(0)).is_none_or(|o| o.is_lt()) {
            status.push(CellStatus::SaturatedLow);
            h_values.push(r_at(0));
        } else if u >= r_at(top) {
            status.push(CellStatus::SaturatedHigh);
            h_values.push(r_at(top));
        } else {
            let mut k = (((u - options.r_lo) / options.eps_r).floor() as usize).min(top - 1);
            while k > 0 && r_at(k) > u {
                k -= 1;
            }
            while k + 1 < top && r_at(k + 1) <= u {
                k += 1;
            }
            status.push(CellStatus::Resolved);
            h_values.push(r_at(k));
        }
    }
    let n = scan.window.resolution;
    Ok(LevelFunctionChart {
        window: scan.window,
        t: scan.t,
        v: scan.v,
        alpha: sp.rho_tilde().dot(scan.v),
        horizon: scan.horizon,
        options: *options,
        h_values: Grid::from_vec(n, h_values),
        sup_values: sup,
        status: Grid::from_vec(n, status),
        slope: slope_type(scan.v, SLOPE_DENOMINATOR_CAP),
    })
}
