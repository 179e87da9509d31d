use serde::{Deserialize, Serialize};

use super::{MapError, TrigPoly2};
use crate::geom::Vec2;
use crate::sum::NeumaierSum2;

/// Default cap on `|n|` for cocycle iteration.
pub const DEFAULT_HORIZON_CAP: u64 = 100_000;

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-12;

/// How `f̃⁻¹` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseMode {
    /// Constant displacement: `f̃⁻¹(w) = w − α`.
    ExactTranslation,
    /// Triangular lift `(x + a, y + φ(x))`, inverted coordinate by coordinate.
    ExactTriangular,
    /// Damped Newton iteration, certified by a Lipschitz bound `< 1` on the
    /// non-constant part of the displacement.
    Newton,
}

/// A lift `f̃ = id + Δ` of a torus homeomorphism homotopic to the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedTorusMap {
    displacement: TrigPoly2,
    inverse_mode: InverseMode,
    contraction_bound: f64,
    curvature_bound: f64,
    horizon_cap: u64,
}

impl LiftedTorusMap {
    /// Chooses the cheapest exact inverse the displacement admits, falling
    /// back to Newton.
    pub fn from_displacement(displacement: TrigPoly2) -> Result<Self, MapError> {
        let mode = if displacement.is_constant() {
            InverseMode::ExactTranslation
        } else if displacement.is_triangular() {
            InverseMode::ExactTriangular
        } else {
            InverseMode::Newton
        };
        Self::with_mode(displacement, mode)
    }

    pub fn with_mode(displacement: TrigPoly2, inverse_mode: InverseMode) -> Result<Self, MapError> {
        if !displacement.is_finite() {
            return Err(MapError::InvalidParameter("non-finite displacement coefficient".into()));
        }
        match inverse_mode {
            InverseMode::ExactTranslation if !displacement.is_constant() => {
                return Err(MapError::InvalidInverseMode("exact-translation needs a constant displacement".into()))
            }
            InverseMode::ExactTriangular if !displacement.is_triangular() => {
                return Err(MapError::InvalidInverseMode("exact-triangular needs displacement (a, φ(x))".into()))
            }
            _ => {}
        }
        let contraction_bound = displacement.zero_mean_part().lipschitz_bound();
        let curvature_bound = displacement.curvature_bound();
        Ok(LiftedTorusMap { displacement, inverse_mode, contraction_bound, curvature_bound, horizon_cap: DEFAULT_HORIZON_CAP })
    }

    pub fn translation(alpha: Vec2) -> Self {
        Self::with_mode(TrigPoly2::constant(alpha), InverseMode::ExactTranslation).expect("constant field is a translation")
    }

    pub fn with_horizon_cap(mut self, cap: u64) -> Self {
        self.horizon_cap = cap;
        self
    }

    pub fn field(&self) -> &TrigPoly2 {
        &self.displacement
    }

    pub fn inverse_mode(&self) -> InverseMode {
        self.inverse_mode
    }

    pub fn contraction_bound(&self) -> f64 {
        self.contraction_bound
    }

    pub fn horizon_cap(&self) -> u64 {
        self.horizon_cap
    }

    pub fn sup_norm_bound(&self) -> f64 {
        self.displacement.sup_norm_bound()
    }

    /// `Δ(π(z))`.
    #[inline]
    pub fn displacement(&self, z: Vec2) -> Vec2 {
        self.displacement.eval_wrapped(z.wrap())
    }

    #[inline]
    pub(crate) fn displacement_wrapped(&self, q: Vec2) -> Vec2 {
        self.displacement.eval_wrapped(q)
    }

    pub fn apply(&self, z: Vec2) -> Vec2 {
        z + self.displacement(z)
    }

    pub fn apply_inverse(&self, w: Vec2) -> Result<Vec2, MapError> {
        match self.inverse_mode {
            InverseMode::ExactTranslation => Ok(w - self.displacement.mean()),
            InverseMode::ExactTriangular => {
                let a = self.displacement.mean().x;
                let x = w.x - a;
                let phi = self.displacement(Vec2::new(x, 0.0)).y;
                Ok(Vec2::new(x, w.y - phi))
            }
            InverseMode::Newton => {
                let base = Vec2::new(w.x.floor(), w.y.floor());
                Ok(base + self.newton_inverse(w - base)?)
            }
        }
    }

    /// Solves `z + Δ(z) = w` for `w` near the unit square.
    fn newton_inverse(&self, w: Vec2) -> Result<Vec2, MapError> {
        if self.contraction_bound >= 1.0 {
            return Err(MapError::ContractionViolated { bound: self.contraction_bound });
        }
        let tol = NEWTON_TOL * w.max_abs().max(1.0);
        let at = |z: Vec2| {
            let (d, jac) = self.displacement.eval_with_jacobian_wrapped(z.wrap());
            (z + d - w, jac)
        };
        let mut z = w - self.displacement.mean();
        let (mut r, mut jac) = at(z);
        for _ in 0..NEWTON_MAX_ITER {
            if r.max_abs() <= tol {
                return Ok(z);
            }
            let (a, b, c, d) = (1.0 + jac[0][0], jac[0][1], jac[1][0], 1.0 + jac[1][1]);
            let det = a * d - b * c;
            let step = Vec2::new((d * r.x - b * r.y) / det, (a * r.y - c * r.x) / det);
            // Taylor remainder of a full step, so the last evaluation can be skipped
            let len = step.norm();
            if 0.5 * self.curvature_bound * len * len + 4.0 * f64::EPSILON * (r.max_abs() + w.max_abs()) <= 0.5 * tol {
                return Ok(z - step);
            }
            let mut lambda = 1.0;
            loop {
                let candidate = z - step * lambda;
                let (rc, jc) = at(candidate);
                if rc.norm() < r.norm() || lambda < 1e-6 {
                    z = candidate;
                    r = rc;
                    jac = jc;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if r.max_abs() <= tol {
            Ok(z)
        } else {
            Err(MapError::NoConvergence { iterations: NEWTON_MAX_ITER, residual: r.max_abs() })
        }
    }

    fn check_horizon(&self, n: i64) -> Result<(), MapError> {
        if n.unsigned_abs() > self.horizon_cap {
            Err(MapError::HorizonExceeded { n, cap: self.horizon_cap })
        } else {
            Ok(())
        }
    }

    /// `Δ^{(n)}(z) = f̃ⁿ(z) − z` as a compensated Birkhoff sum in forward
    /// index order.
    pub fn iterate_displacement(&self, z: Vec2, n: i64) -> Result<Vec2, MapError> {
        self.check_horizon(n)?;
        let mut walker = CocycleWalker::new(self, z, n >= 0);
        let mut value = Vec2::ZERO;
        for _ in 0..n.unsigned_abs() {
            value = walker.step()?;
        }
        Ok(value)
    }

    /// `f̃ⁿ(z)`.
    pub fn iterate(&self, z: Vec2, n: i64) -> Result<Vec2, MapError> {
        Ok(z + self.iterate_displacement(z, n)?)
    }

    /// `Ad_t(f̃) = T_t̃⁻¹ ∘ f̃ ∘ T_t̃`, whose displacement is `z ↦ Δ(z + t)`.
    pub fn conjugate(&self, t: Vec2) -> LiftedTorusMap {
        let displacement = self.displacement.shifted(t);
        let contraction_bound = displacement.zero_mean_part().lipschitz_bound();
        let curvature_bound = displacement.curvature_bound();
        LiftedTorusMap { displacement, inverse_mode: self.inverse_mode, contraction_bound, curvature_bound, horizon_cap: self.horizon_cap }
    }

    /// `T_p ∘ f̃` for a vector `p` (normally integer).
    pub fn post_translate(&self, p: Vec2) -> Result<LiftedTorusMap, MapError> {
        let field = self.displacement.plus(&TrigPoly2::constant(p));
        let mut out = Self::with_mode(field, self.inverse_mode)?;
        out.horizon_cap = self.horizon_cap;
        Ok(out)
    }

    /// Whether grid scans may treat points with equal `x` (resp. `y`) as one
    /// orbit: the torus orbit and every `Δ^{(n)}` ignore that coordinate.
    pub fn coordinate_dependence(&self) -> (bool, bool) {
        let dx = self.displacement.depends_on_x();
        let dy = self.displacement.depends_on_y();
        match self.inverse_mode {
            // the Newton inverse starts from w and is not separable in general
            InverseMode::Newton => (true, true),
            _ => (dx, dy),
        }
    }
}

/// Steps along one orbit, yielding `Δ^{(±1)}, Δ^{(±2)}, …` in order. The
/// prefix values are bit-identical to [`LiftedTorusMap::iterate_displacement`].
pub struct CocycleWalker<'m> {
    map: &'m LiftedTorusMap,
    point: Vec2,
    sum: NeumaierSum2,
    forward: bool,
    steps: u64,
}

impl<'m> CocycleWalker<'m> {
    pub fn new(map: &'m LiftedTorusMap, z: Vec2, forward: bool) -> Self {
        CocycleWalker { map, point: z.wrap(), sum: NeumaierSum2::new(), forward, steps: 0 }
    }

    /// Current torus point `π(f̃^{±k}(z))`.
    pub fn point(&self) -> Vec2 {
        self.point
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    #[inline]
    pub fn step(&mut self) -> Result<Vec2, MapError> {
        if self.steps >= self.map.horizon_cap {
            let n = if self.forward { self.steps as i64 + 1 } else { -(self.steps as i64) - 1 };
            return Err(MapError::HorizonExceeded { n, cap: self.map.horizon_cap });
        }
        if self.forward {
            let d = self.map.displacement_wrapped(self.point);
            self.sum.add(d);
            self.point = (self.point + d).wrap();
        } else {
            let prev = self.map.apply_inverse(self.point)?.wrap();
            let d = self.map.displacement_wrapped(prev);
            self.sum.add(-d);
            self.point = prev;
        }
        self.steps += 1;
        Ok(self.sum.value())
    }
}
