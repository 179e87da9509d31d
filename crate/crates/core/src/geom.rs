//! Planar vectors, torus reduction and the half-plane / line / strip
//! notation used throughout the crate.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// `v⊥ = (−b, a)` for `v = (a, b)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    /// Representative of `π(self)` in `[0, 1)²`.
    pub fn wrap(self) -> Vec2 {
        Vec2::new(wrap_unit(self.x), wrap_unit(self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

/// Reduces `x` modulo 1 into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // tiny negative inputs round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

/// Open half-plane `{z : ⟨z, v⟩ > r}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub v: Vec2,
    pub r: f64,
}

impl HalfPlane {
    pub fn contains(&self, z: Vec2) -> bool {
        z.dot(self.v) > self.r
    }

    /// Closed version `⟨z, v⟩ ≥ r`, which is what grid membership uses.
    pub fn contains_closed(&self, z: Vec2) -> bool {
        z.dot(self.v) >= self.r
    }
}

/// The line `ℓ_r^v = r·v + R·v⊥`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub v: Vec2,
    pub r: f64,
}

impl Line {
    pub fn distance(&self, z: Vec2) -> f64 {
        (z.dot(self.v) - self.r).abs()
    }

    pub fn point(&self, s: f64) -> Vec2 {
        self.v * self.r + self.v.perp() * s
    }
}

/// Open strip `A_s^v = {z : −s < ⟨z, v⟩ < s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strip {
    pub v: Vec2,
    pub s: f64,
}

impl Strip {
    pub fn contains(&self, z: Vec2) -> bool {
        z.dot(self.v).abs() < self.s
    }
}

/// Slope classification of a direction by continued fractions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeType {
    /// `t·v ∈ Z²` for some `t ≠ 0`, with the reduced integer vector `(p, q)`.
    Rational {
        p: i64,
        q: i64,
    },
    Irrational,
}

/// Decides whether `v` is (numerically) a multiple of an integer vector with
/// denominators up to `max_denominator`.
pub fn slope_type(v: Vec2, max_denominator: i64) -> SlopeType {
    let (a, b) = (v.x, v.y);
    if a == 0.0 {
        return SlopeType::Rational { p: 0, q: 1 };
    }
    if b == 0.0 {
        return SlopeType::Rational { p: 1, q: 0 };
    }
    let ratio = b / a;
    let tol = 8.0 * f64::EPSILON * ratio.abs().max(1.0);
    let (mut h_prev, mut h) = (1i64, ratio.floor() as i64);
    let (mut k_prev, mut k) = (0i64, 1i64);
    let mut x = ratio - ratio.floor();
    for _ in 0..64 {
        if ((h as f64) / (k as f64) - ratio).abs() <= tol {
            let sign = if a < 0.0 { -1 } else { 1 };
            return SlopeType::Rational { p: sign * k, q: sign * h };
        }
        if x == 0.0 {
            break;
        }
        let inv = 1.0 / x;
        let a_next = inv.floor();
        x = inv - a_next;
        let a_next = a_next as i64;
        let h_next = a_next.checked_mul(h).and_then(|t| t.checked_add(h_prev));
        let k_next = a_next.checked_mul(k).and_then(|t| t.checked_add(k_prev));
        match (h_next, k_next) {
            (Some(hn), Some(kn)) if kn <= max_denominator => {
                h_prev = h;
                h = hn;
                k_prev = k;
                k = kn;
            }
            _ => break,
        }
    }
    SlopeType::Irrational
}
