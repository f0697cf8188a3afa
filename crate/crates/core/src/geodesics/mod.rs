//! Geodesics of a metric 2-step nilpotent group and the escape machinery
//! built on them.

mod bounds;
mod curve;
mod escape;
mod oracle;
mod sample;

pub use bounds::{classify, escape_bound_check, master_constant, EscapeCase, EscapeReport, EscapeRow, ESCAPE_SLACK};
pub use curve::{GeodesicN, STRAIGHT_TOL, UNIT_SPEED_TOL, Z_QUAD_TOL};
pub use escape::{
    nilpotent_escape, nilpotent_slope, product_escape, sigma_from_escape, EscapeFunction, EscapeKind,
    MonotoneFunction, ProductEscape, SIGMA_TOL,
};
pub use oracle::{ode_oracle, OdeTrajectory};
pub use sample::{case_samples, random_unit_velocity, CaseSample};
