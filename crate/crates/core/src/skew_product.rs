//! The `ρ̃`-centralized skew-product
//! `F(t, z) = (t + ρ, H_t(z))`, `H_t(z) = z + Δ(t + π(z)) − ρ̃`,
//! and its fiber cocycle `H_t^{(n)}`.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::sum::NeumaierSum2;
use crate::torus_maps::{LiftedTorusMap, MapError};

/// Side length of the `(t, z)` sample used by the construction self-test.
const SELF_TEST_SIDE: usize = 16;
const SELF_TEST_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CocyclePath {
    /// `f̃ⁿ(z + t̃) − t̃ − nρ̃`.
    ClosedForm,
    /// Explicit composition of the fiber maps along the base orbit.
    Stepwise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CentralizedSkewProduct {
    map: LiftedTorusMap,
    rho_tilde: Vec2,
    rho: Vec2,
    self_test_residual: f64,
}

impl CentralizedSkewProduct {
    pub fn build(map: &LiftedTorusMap, rho_tilde: Vec2) -> Result<Self, MapError> {
        if !rho_tilde.is_finite() {
            return Err(MapError::InvalidParameter(format!("non-finite rho {rho_tilde:?}")));
        }
        let mut sp = CentralizedSkewProduct { map: map.clone(), rho_tilde, rho: rho_tilde.wrap(), self_test_residual: 0.0 };
        sp.self_test_residual = sp.run_self_test();
        if sp.self_test_residual > SELF_TEST_TOL {
            return Err(MapError::InvalidParameter(format!("fiber map self-test residual {:e}", sp.self_test_residual)));
        }
        Ok(sp)
    }

    /// Compares the fiber map with the conjugated lift `Ad_t(f̃) − ρ̃`.
    fn run_self_test(&self) -> f64 {
        let side = SELF_TEST_SIDE as f64;
        let mut worst: f64 = 0.0;
        for a in 0..SELF_TEST_SIDE {
            let t = Vec2::new((a as f64 + 0.5) / side, (a as f64 * 7.0 % side + 0.25) / side);
            let conj = self.map.conjugate(t);
            for b in 0..SELF_TEST_SIDE {
                let z = Vec2::new(b as f64 / side * 3.0 - 1.0, (b as f64 * 5.0 % side) / side * 3.0 - 1.0);
                let direct = self.fiber_map(t, z);
                let via_conj = conj.apply(z) - self.rho_tilde;
                worst = worst.max((direct - via_conj).max_abs());
            }
        }
        worst
    }

    pub fn map(&self) -> &LiftedTorusMap {
        &self.map
    }

    pub fn rho_tilde(&self) -> Vec2 {
        self.rho_tilde
    }

    /// `ρ = π(ρ̃)`.
    pub fn rho(&self) -> Vec2 {
        self.rho
    }

    pub fn self_test_residual(&self) -> f64 {
        self.self_test_residual
    }

    /// `H_t(z) = z + Δ(t + π(z)) − ρ̃`.
    pub fn fiber_map(&self, t: Vec2, z: Vec2) -> Vec2 {
        let q = (t.wrap() + z.wrap()).wrap();
        z + self.map.displacement(q) - self.rho_tilde
    }

    /// `H_t^{-1}(w) = f̃⁻¹(w + ρ̃ + t̃) − t̃`, written as an increment of `w`.
    fn fiber_inverse_increment(&self, t: Vec2, w_wrapped: Vec2) -> Result<Vec2, MapError> {
        let q = (w_wrapped + t.wrap() + self.rho_tilde.wrap()).wrap();
        let pre = self.map.apply_inverse(q)?;
        Ok(self.rho_tilde - self.map.displacement(pre))
    }

    /// `H_t^{(n)}(z)` by the chosen evaluation path.
    pub fn fiber_cocycle(&self, t: Vec2, z: Vec2, n: i64, path: CocyclePath) -> Result<Vec2, MapError> {
        if n.unsigned_abs() > self.map.horizon_cap() {
            return Err(MapError::HorizonExceeded { n, cap: self.map.horizon_cap() });
        }
        if n == 0 {
            return Ok(z);
        }
        match path {
            CocyclePath::ClosedForm => {
                let t_lift = t.wrap();
                Ok(self.map.iterate(z + t_lift, n)? - t_lift - self.rho_tilde * n as f64)
            }
            CocyclePath::Stepwise => self.stepwise(t, z, n),
        }
    }

    fn stepwise(&self, t: Vec2, z: Vec2, n: i64) -> Result<Vec2, MapError> {
        let mut acc = NeumaierSum2::new();
        let z_wrapped = z.wrap();
        if n >= 0 {
            // H_{t+(n−1)ρ} ∘ … ∘ H_{t+ρ} ∘ H_t
            for k in 0..n {
                let s = t + self.rho_tilde * k as f64;
                let w = (z_wrapped + acc.value()).wrap();
                let q = (s.wrap() + w).wrap();
                acc.add(self.map.displacement(q) - self.rho_tilde);
            }
        } else {
            // H_{t+nρ}^{-1} ∘ … ∘ H_{t−ρ}^{-1}
            for k in 1..=n.unsigned_abs() {
                let s = t - self.rho_tilde * k as f64;
                let w = (z_wrapped + acc.value()).wrap();
                acc.add(self.fiber_inverse_increment(s, w)?);
            }
        }
        Ok(z + acc.value())
    }

    /// `⟨H_t^{(n)}(z) − z, v⟩` through the displacement identity, the form the
    /// grid kernels use.
    pub fn fiber_deviation(&self, t: Vec2, z: Vec2, n: i64, v: Vec2) -> Result<f64, MapError> {
        let q = (z.wrap() + t.wrap()).wrap();
        Ok((self.map.iterate_displacement(q, n)? - self.rho_tilde * n as f64).dot(v))
    }

    /// `|H_t^{(n)}(z) − z − (Δ^{(n)}(π(z) + t) − nρ̃)|` with the left side
    /// composed stepwise.
    pub fn displacement_identity_residual(&self, t: Vec2, z: Vec2, n: i64) -> Result<f64, MapError> {
        let lhs = self.fiber_cocycle(t, z, n, CocyclePath::Stepwise)? - z;
        let q = (z.wrap() + t.wrap()).wrap();
        let rhs = self.map.iterate_displacement(q, n)? - self.rho_tilde * n as f64;
        Ok((lhs - rhs).norm())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::torus_maps::{MapFamily, TrigPoly1, TrigPoly2, TrigTerm, GOLDEN_MEAN};

    fn skew_half() -> LiftedTorusMap {
        MapFamily::Skew { base: 0.5, forcing: TrigPoly1::cosine(2, 1.0) }.build().unwrap()
    }

    fn coboundary() -> LiftedTorusMap {
        MapFamily::CoboundarySkew { base: GOLDEN_MEAN, transfer: TrigPoly1::sine(1, 1.0) }.build().unwrap()
    }

    fn generic() -> LiftedTorusMap {
        let field = TrigPoly2::new(vec![
            TrigTerm::new([0, 0], Vec2::new(GOLDEN_MEAN, 0.5 * 2f64.sqrt()), Vec2::ZERO),
            TrigTerm::new([0, 1], Vec2::ZERO, Vec2::new(0.05, 0.0)),
            TrigTerm::new([1, 0], Vec2::ZERO, Vec2::new(0.0, 0.05)),
        ]);
        MapFamily::Generic { displacement: field }.build().unwrap()
    }

    #[test]
    fn translation_fibers_are_identity() {
        let alpha = Vec2::new(0.3, 0.7);
        let sp = CentralizedSkewProduct::build(&LiftedTorusMap::translation(alpha), alpha).unwrap();
        assert!(sp.self_test_residual() <= 1e-12);
        let z = Vec2::new(3.25, -1.5);
        assert_eq!(sp.fiber_map(Vec2::new(0.4, 0.1), z), z);
        for n in [-7, 0, 5, 100] {
            let w = sp.fiber_cocycle(Vec2::new(0.2, 0.9), z, n, CocyclePath::Stepwise).unwrap();
            assert!((w - z).max_abs() < 1e-12);
            assert!(sp.displacement_identity_residual(Vec2::new(0.2, 0.9), z, n).unwrap() < 1e-12);
        }
    }

    #[test]
    fn skew_fiber_displacement_is_zero_mean_forcing() {
        let sp = CentralizedSkewProduct::build(&skew_half(), Vec2::new(0.5, 0.0)).unwrap();
        for i in 0..16 {
            let x = i as f64 / 16.0;
            let d = sp.fiber_map(Vec2::ZERO, Vec2::new(x, 0.3)) - Vec2::new(x, 0.3);
            assert!(d.x.abs() < 1e-15);
            assert!((d.y - (2.0 * TAU * x).cos()).abs() < 1e-14);
        }
        let w = sp.fiber_map(Vec2::new(0.5, 0.0), Vec2::ZERO);
        assert!(w.x.abs() < 1e-15 && (w.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fiber_map_at_zero_is_shifted_lift() {
        let m = coboundary();
        let rho = Vec2::new(GOLDEN_MEAN, 0.0);
        let sp = CentralizedSkewProduct::build(&m, rho).unwrap();
        let z = Vec2::new(1.3, -0.2);
        assert!((sp.fiber_map(Vec2::ZERO, z) - (m.apply(z) - rho)).max_abs() < 1e-15);
    }

    #[test]
    fn cocycle_n_zero_is_identity() {
        let sp = CentralizedSkewProduct::build(&generic(), Vec2::new(0.6, 0.7)).unwrap();
        let z = Vec2::new(0.9, -2.1);
        for path in [CocyclePath::ClosedForm, CocyclePath::Stepwise] {
            assert_eq!(sp.fiber_cocycle(Vec2::new(0.3, 0.3), z, 0, path).unwrap(), z);
        }
    }

    #[test]
    fn paths_agree_on_coboundary_long_orbits() {
        let sp = CentralizedSkewProduct::build(&coboundary(), Vec2::new(GOLDEN_MEAN, 0.0)).unwrap();
        let (t, z) = (Vec2::new(0.1, 0.2), Vec2::new(0.3, 0.4));
        for n in [500, -500] {
            let a = sp.fiber_cocycle(t, z, n, CocyclePath::ClosedForm).unwrap();
            let b = sp.fiber_cocycle(t, z, n, CocyclePath::Stepwise).unwrap();
            assert!((a - b).max_abs() <= 1e-10, "n={n} {:?}", a - b);
            assert!(sp.displacement_identity_residual(t, z, n).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn identity_residual_on_skew() {
        let sp = CentralizedSkewProduct::build(&skew_half(), Vec2::new(0.5, 0.0)).unwrap();
        assert!(sp.displacement_identity_residual(Vec2::new(0.1, 0.0), Vec2::ZERO, 100).unwrap() <= 1e-10);
        assert!(sp.displacement_identity_residual(Vec2::new(0.1, 0.0), Vec2::ZERO, -100).unwrap() <= 1e-10);
    }

    #[test]
    fn base_equivariance() {
        let sp = CentralizedSkewProduct::build(&generic(), Vec2::new(GOLDEN_MEAN, 0.5 * 2f64.sqrt())).unwrap();
        let (t, z) = (Vec2::new(0.25, 0.75), Vec2::new(0.125, 0.375));
        for p in [Vec2::new(1.0, 0.0), Vec2::new(-2.0, 3.0)] {
            for n in [-20, 7, 40] {
                for path in [CocyclePath::ClosedForm, CocyclePath::Stepwise] {
                    let a = sp.fiber_cocycle(t, z + p, n, path).unwrap();
                    let b = sp.fiber_cocycle(t, z, n, path).unwrap() + p;
                    assert!((a - b).max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fiber_deviation_matches_closed_form() {
        let sp = CentralizedSkewProduct::build(&coboundary(), Vec2::new(GOLDEN_MEAN, 0.0)).unwrap();
        let v = Vec2::new(0.0, 1.0);
        let (t, z) = (Vec2::new(0.7, 0.1), Vec2::new(-0.4, 2.5));
        for n in [-30, 1, 64] {
            let a = sp.fiber_deviation(t, z, n, v).unwrap();
            let b = (sp.fiber_cocycle(t, z, n, CocyclePath::ClosedForm).unwrap() - z).dot(v);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_rho_rejected() {
        assert!(CentralizedSkewProduct::build(&skew_half(), Vec2::new(f64::NAN, 0.0)).is_err());
    }
}
