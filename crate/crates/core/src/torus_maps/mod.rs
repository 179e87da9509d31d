//! Lifted torus maps with trigonometric-polynomial displacement and exact
//! cocycle iteration.

mod family;
mod map;
mod trigpoly;

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::Vec2;

pub use family::{liouville_number, MapFamily, GOLDEN_MEAN};
pub use map::{CocycleWalker, InverseMode, LiftedTorusMap, DEFAULT_HORIZON_CAP};
pub use trigpoly::{TrigPoly1, TrigPoly2, TrigTerm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("Newton inversion needs a contraction bound < 1, got {bound}")]
    ContractionViolated { bound: f64 },
    #[error("Newton inversion did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iteration count {n} exceeds the horizon cap {cap}")]
    HorizonExceeded { n: i64, cap: u64 },
    #[error("inverse mode not applicable: {0}")]
    InvalidInverseMode(String),
    #[error("invalid map parameter: {0}")]
    InvalidParameter(String),
}

/// Grid points grouped by orbit: points in one class have bit-identical torus
/// orbits and cocycles under `map`, so scans only walk one representative.
#[derive(Clone, Debug)]
pub struct OrbitClasses {
    /// Wrapped representative of each class, in order of first occurrence.
    pub representatives: Vec<Vec2>,
    /// Class index of every input point.
    pub class_of: Vec<usize>,
}

impl OrbitClasses {
    pub fn new(map: &LiftedTorusMap, points: impl IntoIterator<Item = Vec2>) -> Self {
        let (use_x, use_y) = map.coordinate_dependence();
        let mut lookup: HashMap<(u64, u64), usize> = HashMap::new();
        let mut representatives = Vec::new();
        let mut class_of = Vec::new();
        for z in points {
            let q = z.wrap();
            let key = (if use_x { q.x.to_bits() } else { 0 }, if use_y { q.y.to_bits() } else { 0 });
            let next = representatives.len();
            let class = *lookup.entry(key).or_insert_with(|| {
                representatives.push(q);
                next
            });
            class_of.push(class);
        }
        OrbitClasses { representatives, class_of }
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;

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
            TrigTerm::new([1, 1], Vec2::new(0.02, -0.02), Vec2::ZERO),
        ]);
        MapFamily::Generic { displacement: field }.build().unwrap()
    }

    #[test]
    fn eval_displacement_examples() {
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        assert_eq!(t.displacement(Vec2::new(12.3, -4.1)), Vec2::new(0.3, 0.7));
        assert_eq!(skew_half().displacement(Vec2::ZERO), Vec2::new(0.5, 1.0));
        let c = coboundary();
        let d = c.displacement(Vec2::new(0.25, 0.3));
        let expected = (TAU * (0.25 + GOLDEN_MEAN)).sin() - 1.0;
        assert!((d.x - GOLDEN_MEAN).abs() < 1e-15);
        assert!((d.y - expected).abs() < 1e-14);
    }

    #[test]
    fn apply_examples() {
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        assert_eq!(t.apply(Vec2::new(1.0, 1.0)), Vec2::new(1.3, 1.7));
        let s = skew_half();
        let w = s.apply(Vec2::new(0.25, 0.0));
        assert_eq!(w.x, 0.75);
        assert!((w.y + 1.0).abs() < 1e-15);
        for m in [t, s, coboundary(), generic()] {
            let z = Vec2::new(0.375, 0.625);
            assert_eq!(m.apply(z + Vec2::new(1.0, 0.0)) - m.apply(z), Vec2::new(1.0, 0.0));
            assert_eq!(m.apply(z + Vec2::new(0.0, -2.0)) - m.apply(z), Vec2::new(0.0, -2.0));
        }
    }

    #[test]
    fn inverse_examples() {
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        assert_eq!(t.apply_inverse(Vec2::ZERO).unwrap(), Vec2::new(-0.3, -0.7));

        let s = skew_half();
        let w = Vec2::new(0.8, -0.4);
        let z = s.apply_inverse(w).unwrap();
        let expected_x = w.x - 0.5;
        let expected_y = w.y - (2.0 * TAU * expected_x).cos();
        assert_eq!(z.x, expected_x);
        assert!((z.y - expected_y).abs() < 1e-15);

        let strong = TrigPoly2::new(vec![TrigTerm::new([1, 0], Vec2::ZERO, Vec2::new(0.0, 1.2 / TAU))]);
        let m = LiftedTorusMap::with_mode(strong, InverseMode::Newton).unwrap();
        assert!((m.contraction_bound() - 1.2).abs() < 1e-12);
        assert!(matches!(m.apply_inverse(Vec2::ZERO), Err(MapError::ContractionViolated { .. })));
    }

    #[test]
    fn inversion_round_trip_grid() {
        for (m, tol) in [(skew_half(), 1e-12), (coboundary(), 1e-12), (generic(), 1e-10)] {
            for i in 0..64 {
                for j in 0..64 {
                    let z = Vec2::new((i as f64 + 0.5) / 64.0 * 3.0 - 1.0, (j as f64 + 0.5) / 64.0 * 3.0 - 1.0);
                    let back = m.apply_inverse(m.apply(z)).unwrap();
                    assert!((back - z).max_abs() <= tol, "{:?} {:?}", z, back);
                    let fwd = m.apply(m.apply_inverse(z).unwrap());
                    assert!((fwd - z).max_abs() <= tol);
                }
            }
        }
    }

    #[test]
    fn iterate_displacement_examples() {
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        let d = t.iterate_displacement(Vec2::new(0.1, 0.2), 5).unwrap();
        assert!((d - Vec2::new(1.5, 3.5)).max_abs() < 1e-15);
        for m in [t, skew_half(), coboundary(), generic()] {
            assert_eq!(m.iterate_displacement(Vec2::new(0.4, 0.9), 0).unwrap(), Vec2::ZERO);
        }
    }

    #[test]
    fn coboundary_telescopes_against_direct_sum() {
        let m = coboundary();
        let psi = |x: f64| (TAU * x).sin();
        let phi = |x: f64| psi(x + GOLDEN_MEAN) - psi(x);
        for &x in &[0.0, 0.13, 0.5, 0.77] {
            let z = Vec2::new(x, 0.4);
            for &n in &[1i64, 2, 17, 500, -1, -3, -250] {
                let got = m.iterate_displacement(z, n).unwrap().y;
                let telescoped = psi(x + n as f64 * GOLDEN_MEAN) - psi(x);
                // independent oracle: naive summation of φ along the base orbit
                let direct: f64 = if n >= 0 {
                    (0..n).map(|j| phi(x + j as f64 * GOLDEN_MEAN)).sum()
                } else {
                    -(1..=-n).map(|j| phi(x - j as f64 * GOLDEN_MEAN)).sum::<f64>()
                };
                assert!((got - telescoped).abs() < 1e-9, "n={n}");
                assert!((got - direct).abs() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn cocycle_law_on_grid() {
        for m in [skew_half(), coboundary(), generic()] {
            for i in 0..32 {
                for j in 0..32 {
                    let z = Vec2::new((i as f64 + 0.5) / 32.0, (j as f64 + 0.5) / 32.0);
                    for &(mm, nn) in &[(3i64, 5i64), (-7, 20), (20, -20), (-4, -9), (0, 11)] {
                        let lhs = m.iterate_displacement(z, mm + nn).unwrap();
                        let zm = m.iterate(z, mm).unwrap();
                        let rhs = m.iterate_displacement(zm, nn).unwrap() + m.iterate_displacement(z, mm).unwrap();
                        assert!((lhs - rhs).max_abs() < 1e-10, "{mm} {nn} {:?}", lhs - rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn horizon_cap_enforced() {
        let m = skew_half().with_horizon_cap(10);
        assert!(m.iterate_displacement(Vec2::ZERO, 10).is_ok());
        assert!(matches!(m.iterate_displacement(Vec2::ZERO, -11), Err(MapError::HorizonExceeded { .. })));
    }

    #[test]
    fn conjugation_examples() {
        let s = skew_half();
        assert_eq!(s.conjugate(Vec2::ZERO).field(), s.field());
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        assert_eq!(t.conjugate(Vec2::new(0.2, 0.9)).field(), t.field());
        let c = s.conjugate(Vec2::new(0.5, 0.0));
        for i in 0..16 {
            let z = Vec2::new(i as f64 / 16.0, 0.3);
            assert!((c.displacement(z) - s.displacement(z + Vec2::new(0.5, 0.0))).max_abs() < 1e-14);
            // Ad_t f̃ = T_t⁻¹ ∘ f̃ ∘ T_t
            let t_lift = Vec2::new(0.5, 0.0);
            assert!((c.apply(z) - (s.apply(z + t_lift) - t_lift)).max_abs() < 1e-14);
        }
        assert_eq!(s.conjugate(Vec2::new(1.5, -3.0)), s.conjugate(Vec2::new(0.5, 0.0)));
    }

    #[test]
    fn generic_family_rejects_non_contracting() {
        let field = TrigPoly2::new(vec![TrigTerm::new([1, 0], Vec2::new(0.0, 0.5), Vec2::ZERO)]);
        assert!(matches!(MapFamily::Generic { displacement: field }.build(), Err(MapError::ContractionViolated { .. })));
    }

    #[test]
    fn liouville_constant() {
        assert!((liouville_number(6) - 0.110001).abs() < 1e-15);
        assert_eq!(liouville_number(1), 0.1);
    }

    #[test]
    fn orbit_classes_collapse_independent_coordinates() {
        let pts: Vec<Vec2> = (0..8).flat_map(|i| (0..8).map(move |j| Vec2::new(i as f64 / 8.0, j as f64 / 8.0))).collect();
        let t = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        assert_eq!(OrbitClasses::new(&t, pts.iter().copied()).len(), 1);
        let s = skew_half();
        let classes = OrbitClasses::new(&s, pts.iter().copied());
        assert_eq!(classes.len(), 8);
        for (p, &c) in pts.iter().zip(&classes.class_of) {
            let a = s.iterate_displacement(*p, 37).unwrap();
            let b = s.iterate_displacement(classes.representatives[c], 37).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(OrbitClasses::new(&generic(), pts.iter().copied()).len(), 64);
    }
}
