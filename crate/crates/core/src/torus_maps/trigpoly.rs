use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geom::{wrap_unit, Vec2};

/// One Fourier mode `c·cos(2π⟨k,z⟩) + s·sin(2π⟨k,z⟩)` with vector
/// coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i32; 2],
    pub cos: Vec2,
    pub sin: Vec2,
}

impl TrigTerm {
    pub fn new(k: [i32; 2], cos: Vec2, sin: Vec2) -> Self {
        TrigTerm { k, cos, sin }
    }

    fn is_constant(&self) -> bool {
        self.k == [0, 0]
    }

    /// `sup_θ |c cos θ + s sin θ| ≤ √(|c|² + |s|²)`.
    fn amplitude_bound(&self) -> f64 {
        if self.is_constant() {
            self.cos.norm()
        } else {
            (self.cos.dot(self.cos) + self.sin.dot(self.sin)).sqrt()
        }
    }
}

/// A `Z²`-periodic field `T² → R²` given by finitely many Fourier modes.
///
/// Evaluation reduces its argument to `[0,1)²` first, so `eval(z + p)` and
/// `eval(z)` agree bit for bit whenever `z + p` reduces to the same
/// representative as `z`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly2 {
    terms: Vec<TrigTerm>,
}

impl TrigPoly2 {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        TrigPoly2 { terms }
    }

    pub fn constant(c: Vec2) -> Self {
        TrigPoly2::new(vec![TrigTerm::new([0, 0], c, Vec2::ZERO)])
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.cos.is_finite() && t.sin.is_finite())
    }

    /// Largest `|k|∞` among the modes.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.k[0].unsigned_abs().max(t.k[1].unsigned_abs())).max().unwrap_or(0)
    }

    pub fn eval(&self, z: Vec2) -> Vec2 {
        self.eval_wrapped(z.wrap())
    }

    /// Evaluation at a point already reduced to `[0,1)²`.
    #[inline]
    pub fn eval_wrapped(&self, q: Vec2) -> Vec2 {
        let mut out = Vec2::ZERO;
        for t in &self.terms {
            if t.is_constant() {
                out += t.cos;
                continue;
            }
            let phase = f64::from(t.k[0]) * q.x + f64::from(t.k[1]) * q.y;
            let (s, c) = (TAU * phase).sin_cos();
            out.x += t.cos.x * c + t.sin.x * s;
            out.y += t.cos.y * c + t.sin.y * s;
        }
        out
    }

    /// Jacobian `∂Δ_i/∂z_j` at a reduced point, row-major.
    pub fn jacobian_wrapped(&self, q: Vec2) -> [[f64; 2]; 2] {
        let mut jac = [[0.0; 2]; 2];
        for t in &self.terms {
            if t.is_constant() {
                continue;
            }
            let phase = f64::from(t.k[0]) * q.x + f64::from(t.k[1]) * q.y;
            let (s, c) = (TAU * phase).sin_cos();
            let dx = -t.cos.x * s + t.sin.x * c;
            let dy = -t.cos.y * s + t.sin.y * c;
            for (j, &k) in t.k.iter().enumerate() {
                let kj = TAU * f64::from(k);
                jac[0][j] += kj * dx;
                jac[1][j] += kj * dy;
            }
        }
        jac
    }

    /// Value and Jacobian from one trigonometric pass.
    #[inline]
    pub fn eval_with_jacobian_wrapped(&self, q: Vec2) -> (Vec2, [[f64; 2]; 2]) {
        let mut out = Vec2::ZERO;
        let mut jac = [[0.0; 2]; 2];
        for t in &self.terms {
            if t.is_constant() {
                out += t.cos;
                continue;
            }
            let phase = f64::from(t.k[0]) * q.x + f64::from(t.k[1]) * q.y;
            let (s, c) = (TAU * phase).sin_cos();
            out.x += t.cos.x * c + t.sin.x * s;
            out.y += t.cos.y * c + t.sin.y * s;
            let dx = -t.cos.x * s + t.sin.x * c;
            let dy = -t.cos.y * s + t.sin.y * c;
            for (j, &k) in t.k.iter().enumerate() {
                let kj = TAU * f64::from(k);
                jac[0][j] += kj * dx;
                jac[1][j] += kj * dy;
            }
        }
        (out, jac)
    }

    /// Rigorous upper bound for `sup_z |Δ(z)|`, summing per-mode amplitudes.
    pub fn sup_norm_bound(&self) -> f64 {
        self.terms.iter().map(TrigTerm::amplitude_bound).sum()
    }

    /// Upper bound for the Lipschitz constant (Euclidean norms).
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.is_constant())
            .map(|t| {
                let k = f64::from(t.k[0]).hypot(f64::from(t.k[1]));
                TAU * k * t.amplitude_bound()
            })
            .sum()
    }

    /// Upper bound for the second derivative of each component.
    pub fn curvature_bound(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.is_constant())
            .map(|t| {
                let k = TAU * f64::from(t.k[0]).hypot(f64::from(t.k[1]));
                k * k * t.amplitude_bound()
            })
            .sum()
    }

    pub fn mean(&self) -> Vec2 {
        self.terms.iter().filter(|t| t.is_constant()).fold(Vec2::ZERO, |acc, t| acc + t.cos)
    }

    pub fn zero_mean_part(&self) -> TrigPoly2 {
        TrigPoly2::new(self.terms.iter().filter(|t| !t.is_constant()).copied().collect())
    }

    /// The field `z ↦ Δ(z + t)`; `t` is reduced to `[0,1)²` first so every lift
    /// of the same torus point gives identical coefficients.
    pub fn shifted(&self, t: Vec2) -> TrigPoly2 {
        let t = t.wrap();
        let terms = self
            .terms
            .iter()
            .map(|term| {
                if term.is_constant() {
                    return *term;
                }
                let phase = f64::from(term.k[0]) * t.x + f64::from(term.k[1]) * t.y;
                let (s, c) = (TAU * phase).sin_cos();
                TrigTerm::new(term.k, term.cos * c + term.sin * s, term.sin * c - term.cos * s)
            })
            .collect();
        TrigPoly2::new(terms)
    }

    pub fn plus(&self, other: &TrigPoly2) -> TrigPoly2 {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        TrigPoly2::new(terms)
    }

    /// Whether some mode varies with the first coordinate.
    pub fn depends_on_x(&self) -> bool {
        self.terms.iter().any(|t| t.k[0] != 0 && (t.cos != Vec2::ZERO || t.sin != Vec2::ZERO))
    }

    pub fn depends_on_y(&self) -> bool {
        self.terms.iter().any(|t| t.k[1] != 0 && (t.cos != Vec2::ZERO || t.sin != Vec2::ZERO))
    }

    /// First component is constant and the second depends on `x` only, i.e.
    /// the lift has the triangular form `(x + a, y + φ(x))`.
    pub fn is_triangular(&self) -> bool {
        self.terms.iter().all(|t| {
            let x_ok = t.is_constant() || (t.cos.x == 0.0 && t.sin.x == 0.0);
            let y_ok = t.k[1] == 0 || (t.cos.y == 0.0 && t.sin.y == 0.0);
            x_ok && y_ok
        })
    }

    pub fn is_constant(&self) -> bool {
        !self.depends_on_x() && !self.depends_on_y()
    }
}

/// Scalar trigonometric polynomial in one variable,
/// `Σ c_k cos(2πkx) + s_k sin(2πkx)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly1 {
    pub terms: Vec<(i32, f64, f64)>,
}

impl TrigPoly1 {
    pub fn new(terms: Vec<(i32, f64, f64)>) -> Self {
        TrigPoly1 { terms }
    }

    /// `amplitude · sin(2πkx)`.
    pub fn sine(k: i32, amplitude: f64) -> Self {
        TrigPoly1::new(vec![(k, 0.0, amplitude)])
    }

    /// `amplitude · cos(2πkx)`.
    pub fn cosine(k: i32, amplitude: f64) -> Self {
        TrigPoly1::new(vec![(k, amplitude, 0.0)])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = wrap_unit(x);
        self.terms
            .iter()
            .map(|&(k, c, s)| {
                if k == 0 {
                    c
                } else {
                    let (sn, cs) = (TAU * f64::from(k) * x).sin_cos();
                    c * cs + s * sn
                }
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().filter(|t| t.0 == 0).map(|t| t.1).sum()
    }

    pub fn sup_norm_bound(&self) -> f64 {
        self.terms.iter().map(|&(k, c, s)| if k == 0 { c.abs() } else { c.hypot(s) }).sum()
    }

    /// `x ↦ ψ(x + a) − ψ(x)`.
    pub fn coboundary(&self, a: f64) -> TrigPoly1 {
        let a = wrap_unit(a);
        let terms = self
            .terms
            .iter()
            .filter(|t| t.0 != 0)
            .map(|&(k, c, s)| {
                let (sn, cs) = (TAU * f64::from(k) * a).sin_cos();
                (k, c * cs + s * sn - c, s * cs - c * sn - s)
            })
            .collect();
        TrigPoly1::new(terms)
    }

    /// Embeds as the second component of a planar field depending on `x`.
    pub fn as_vertical_field(&self) -> TrigPoly2 {
        TrigPoly2::new(self.terms.iter().map(|&(k, c, s)| TrigTerm::new([k, 0], Vec2::new(0.0, c), Vec2::new(0.0, s))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> TrigPoly2 {
        TrigPoly2::new(vec![
            TrigTerm::new([0, 0], Vec2::new(0.3, 0.1), Vec2::ZERO),
            TrigTerm::new([1, 2], Vec2::new(0.05, -0.02), Vec2::new(0.01, 0.03)),
            TrigTerm::new([-3, 1], Vec2::new(0.0, 0.04), Vec2::new(-0.02, 0.0)),
        ])
    }

    #[test]
    fn periodic_by_construction() {
        let f = sample_field();
        for (x, y) in [(0.125, 0.375), (0.5, 0.75), (0.0625, 0.9375)] {
            let z = Vec2::new(x, y);
            for p in [(1.0, 0.0), (0.0, -1.0), (3.0, 2.0), (-2.0, 5.0)] {
                assert_eq!(f.eval(z + Vec2::new(p.0, p.1)), f.eval(z));
            }
        }
    }

    #[test]
    fn sup_bound_examples() {
        let c = TrigPoly2::constant(Vec2::new(0.3, 0.7));
        assert!((c.sup_norm_bound() - 0.761_577_310_586_390_8).abs() < 1e-15);
        let s = TrigPoly1::sine(1, 1.0).as_vertical_field();
        assert_eq!(s.sup_norm_bound(), 1.0);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let cob = TrigPoly1::sine(1, 1.0).coboundary(golden);
        assert!(cob.sup_norm_bound() <= 2.0);
    }

    #[test]
    fn sup_bound_dominates_samples() {
        let f = sample_field();
        let bound = f.sup_norm_bound();
        for i in 0..64 {
            for j in 0..64 {
                let z = Vec2::new(i as f64 / 64.0, j as f64 / 64.0);
                assert!(f.eval(z).norm() <= bound);
            }
        }
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let f = sample_field();
        let t = Vec2::new(0.3, 0.45);
        let g = f.shifted(t);
        for i in 0..16 {
            let z = Vec2::new(i as f64 / 16.0, (i * 7 % 16) as f64 / 16.0);
            let d = g.eval(z) - f.eval(z + t);
            assert!(d.norm() < 1e-14);
        }
        // lift independence is structural for exactly representable shifts
        let dyadic = Vec2::new(0.3125, 0.4375);
        assert_eq!(f.shifted(dyadic + Vec2::new(2.0, -1.0)), f.shifted(dyadic));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = sample_field();
        let q = Vec2::new(0.31, 0.62);
        let jac = f.jacobian_wrapped(q);
        let eps = 1e-6;
        for (j, dz) in [Vec2::new(eps, 0.0), Vec2::new(0.0, eps)].into_iter().enumerate() {
            let fd = (f.eval_wrapped(q + dz) - f.eval_wrapped(q - dz)) / (2.0 * eps);
            assert!((fd.x - jac[0][j]).abs() < 1e-7);
            assert!((fd.y - jac[1][j]).abs() < 1e-7);
        }
    }

    #[test]
    fn coboundary_closed_form() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let psi = TrigPoly1::sine(1, 1.0);
        let phi = psi.coboundary(golden);
        for i in 0..32 {
            let x = i as f64 / 32.0 + 0.01;
            let direct = (TAU * (x + golden)).sin() - (TAU * x).sin();
            assert!((phi.eval(x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn structure_flags() {
        let skew = TrigPoly2::constant(Vec2::new(0.5, 0.0)).plus(&TrigPoly1::cosine(2, 1.0).as_vertical_field());
        assert!(skew.is_triangular());
        assert!(skew.depends_on_x());
        assert!(!skew.depends_on_y());
        assert!(!sample_field().is_triangular());
        assert_eq!(sample_field().degree(), 3);
    }
}
