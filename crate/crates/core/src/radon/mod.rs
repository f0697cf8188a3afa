//! Planar integral geometry: the X-ray transform of compactly supported
//! fields, Radon's inversion formula, the support-theorem harness, convex
//! hulls, and the hyperbolic-plane counterpart.

mod field;
mod hull;
mod hyperbolic;
mod invert;
mod line;
mod support;

pub(crate) use field::radial_chord_integral;
pub use field::{FnField, Phantom2D, PhantomBump, Profile, ScalarField2D, SupportDisk};
pub use hull::{convex_hull, Polygon, HULL_TOL};
pub use hyperbolic::{
    h2_distance, h2_invert, h2_invert_with, h2_mean_value, h2_xray_forward, mobius, H2Geodesic, H2Inversion,
    H2LineOracle, H2Phantom,
};
pub use invert::{mean_line_value, radon_invert, radon_invert_with, InversionOptions, Inversion, RadialProfile};
pub use line::{
    offset_grid, radon_forward, sample_sinogram, theta_grid, xray_line_integral, FieldOracle, LineOracle, LineR2,
    Sinogram, SinogramMeta, SinogramOracle, LINE_TOL,
};
pub use support::{support_harness, SupportOptions, SupportReport};
