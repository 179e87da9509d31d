use serde::{Deserialize, Serialize};

use super::{InverseMode, LiftedTorusMap, MapError, TrigPoly1, TrigPoly2};
use crate::geom::Vec2;

/// `(√5 − 1)/2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_8;

/// `Σ_{k=1..terms} 10^{−k!}`, evaluated in double precision.
pub fn liouville_number(terms: u32) -> f64 {
    let mut factorial: u64 = 1;
    let mut sum = 0.0;
    for k in 1..=terms.min(20) {
        factorial = factorial.saturating_mul(u64::from(k));
        let exp = i32::try_from(factorial).unwrap_or(i32::MAX);
        sum += 10f64.powi(-exp);
    }
    sum
}

/// Declarative description of one of the supported map families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MapFamily {
    /// `z ↦ z + α`.
    Translation { alpha: Vec2 },
    /// `(x, y) ↦ (x + a, y + φ(x))`.
    Skew { base: f64, forcing: TrigPoly1 },
    /// Skew whose forcing is the coboundary `φ = ψ∘T_a − ψ`.
    CoboundarySkew { base: f64, transfer: TrigPoly1 },
    /// Arbitrary trigonometric displacement, inverted by Newton's method.
    Generic { displacement: TrigPoly2 },
}

impl MapFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            MapFamily::Translation { .. } => "translation",
            MapFamily::Skew { .. } => "skew",
            MapFamily::CoboundarySkew { .. } => "coboundary-skew",
            MapFamily::Generic { .. } => "generic",
        }
    }

    /// The displacement field of the lift.
    pub fn displacement(&self) -> TrigPoly2 {
        match self {
            MapFamily::Translation { alpha } => TrigPoly2::constant(*alpha),
            MapFamily::Skew { base, forcing } => {
                TrigPoly2::constant(Vec2::new(*base, forcing.mean())).plus(&nonconstant(forcing).as_vertical_field())
            }
            MapFamily::CoboundarySkew { base, transfer } => {
                TrigPoly2::constant(Vec2::new(*base, 0.0)).plus(&transfer.coboundary(*base).as_vertical_field())
            }
            MapFamily::Generic { displacement } => displacement.clone(),
        }
    }

    pub fn build(&self) -> Result<LiftedTorusMap, MapError> {
        let field = self.displacement();
        let mode = match self {
            MapFamily::Translation { .. } => InverseMode::ExactTranslation,
            MapFamily::Skew { .. } | MapFamily::CoboundarySkew { .. } => InverseMode::ExactTriangular,
            MapFamily::Generic { .. } => InverseMode::Newton,
        };
        let map = LiftedTorusMap::with_mode(field, mode)?;
        if mode == InverseMode::Newton && map.contraction_bound() >= 1.0 {
            return Err(MapError::ContractionViolated { bound: map.contraction_bound() });
        }
        Ok(map)
    }
}

fn nonconstant(p: &TrigPoly1) -> TrigPoly1 {
    TrigPoly1::new(p.terms.iter().copied().filter(|t| t.0 != 0).collect())
}
