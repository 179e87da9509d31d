//! Reconstruction of the invariant pseudo-foliation from the stable-set
//! family: the sets `U_r`, the level function `H(z) = sup{r : z ∈ U_r}`,
//! its level sets as pseudo-leaves, and a grid-scale certificate of the
//! pseudo-foliation axioms.

mod certify;
mod contour;
mod level;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::grid::GridError;
use crate::stable_sets::StableSetError;
use crate::torus_maps::MapError;

pub use certify::{certify, AxiomCheck, Certificate, EquivarianceStats};
pub use contour::isolines;
pub use level::{
    build_u_r, level_function, level_function_from_envelope, sup_level, CellStatus, LevelFunctionChart, LevelOptions, SLOPE_DENOMINATOR_CAP,
};

/// Minimal resolved fraction for leaf extraction.
pub const MIN_RESOLVED_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoliationError {
    #[error("seed half-plane misses the stable set at level {r}")]
    SeedEmpty { r: f64 },
    #[error("level {c} outside the resolved range [{lo}, {hi})")]
    LevelOutOfRange { c: f64, lo: f64, hi: f64 },
    #[error("only {fraction:.3} of the cells are resolved (need {MIN_RESOLVED_FRACTION})")]
    InsufficientResolution { fraction: f64 },
    #[error("invalid level options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    StableSet(#[from] StableSetError),
    #[error(transparent)]
    Map(#[from] MapError),
}

impl From<GridError> for FoliationError {
    fn from(e: GridError) -> Self {
        FoliationError::StableSet(e.into())
    }
}

/// Extent of a leaf across `v`: the leaf lies in the strip
/// `{min_offset ≤ ⟨z, v⟩ ≤ max_offset}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripFit {
    /// Asymptotic direction `v⊥`.
    pub direction: Vec2,
    pub min_offset: f64,
    pub max_offset: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoLeaf {
    pub level: f64,
    pub polylines: Vec<Vec<Vec2>>,
    pub strip: StripFit,
}

impl PseudoLeaf {
    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.polylines.iter().flatten().copied()
    }
}

/// Level sets `{H = c}` as marching-squares polylines with their strip fits.
pub fn extract_leaves(chart: &LevelFunctionChart, levels: &[f64]) -> Result<Vec<PseudoLeaf>, FoliationError> {
    let fraction = chart.resolved_fraction();
    if fraction < MIN_RESOLVED_FRACTION {
        return Err(FoliationError::InsufficientResolution { fraction });
    }
    let lo = chart.options.r_lo;
    let hi = chart.r_sample(chart.lattice_len() - 1);
    let usable = chart.status.map(|s| *s != CellStatus::SaturatedLow);
    let mut leaves = Vec::with_capacity(levels.len());
    for &c in levels {
        if !(c >= lo && c < hi) {
            return Err(FoliationError::LevelOutOfRange { c, lo, hi });
        }
        let polylines = isolines(&chart.sup_values, &usable, &chart.window, c);
        let (mut min_offset, mut max_offset) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in polylines.iter().flatten() {
            let o = p.dot(chart.v);
            min_offset = min_offset.min(o);
            max_offset = max_offset.max(o);
        }
        let width = if polylines.is_empty() { 0.0 } else { max_offset - min_offset };
        leaves.push(PseudoLeaf { level: c, polylines, strip: StripFit { direction: chart.v.perp(), min_offset, max_offset, width } });
    }
    Ok(leaves)
}

/// `count` levels evenly spaced strictly inside the resolved range, keeping
/// `margin` away from both ends.
pub fn default_levels(chart: &LevelFunctionChart, count: usize, margin: f64) -> Vec<f64> {
    let lo = chart.options.r_lo + margin;
    let hi = chart.r_sample(chart.lattice_len() - 1) - margin;
    (1..=count).map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64).collect()
}
