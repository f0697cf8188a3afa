//! Geodesic X-ray transform on 2-step nilpotent Lie groups.
//!
//! * [`algebra`]: metric 2-step nilpotent algebras, the BCH group law in
//!   exponential coordinates, the left-invariant metric and the `N_q` family.
//! * [`geodesics`]: closed-form geodesics, an RK4 oracle, escape bounds and
//!   the scalar radius functions (escape, product escape, σ).
//! * [`radon`]: the planar engine (X-ray transform, Radon's inversion
//!   formula, support harness, convex hulls, and the hyperbolic plane).
//! * [`flats`]: totally geodesic 2-flats, the X-ray transform on `N`, and
//!   reconstruction by slicing along flats.

pub mod algebra;
pub mod error;
pub mod flats;
pub mod geodesics;
pub mod quad;
pub mod radon;

pub use error::{Error, Result};
