//! Numerical toolkit for rotation theory of torus homeomorphisms.
//!
//! Maps are lifts `f̃ = id + Δ` of torus homeomorphisms with a
//! `Z²`-periodic displacement `Δ` given by a finite trigonometric
//! polynomial. On top of the exact cocycle machinery the crate provides:
//!
//! * [`rotation_set`]: finite-horizon convex-hull estimates of the rotation
//!   set, its classification and the carrier line `ℓ_α^v`;
//! * [`deviations`]: directional deviation profiles and the `v ↔ −v`
//!   symmetry check;
//! * [`skew_product`]: the centralized skew-product and its fiber cocycle;
//! * [`stable_sets`]: grid approximations of fibered stable sets at infinity;
//! * [`pseudofoliation`]: the level function `H`, its level sets and a
//!   certificate of the pseudo-foliation axioms at grid scale;
//! * [`cli`]: the configuration-driven pipeline behind the `rotdev` binary.

pub mod cli;
pub mod deviations;
pub mod geom;
pub mod grid;
pub mod parallel;
pub mod pseudofoliation;
pub mod rotation_set;
pub mod skew_product;
pub mod stable_sets;
pub mod sum;
pub mod torus_maps;

pub use geom::Vec2;
pub use torus_maps::{InverseMode, LiftedTorusMap, MapError, MapFamily, TrigPoly1, TrigPoly2, TrigTerm};
