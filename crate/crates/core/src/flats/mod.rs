//! Totally geodesic 2-flats in `N` and reconstruction by slicing: a verified
//! flat is an isometric copy of `ℝ²` whose lines are geodesics of `N`, so
//! the X-ray transform on `N` restricts to the planar one there and Radon's
//! formula recovers the field on the flat.

mod atlas;
mod field;
mod immersion;
mod reduce;
mod region;
mod search;

pub use atlas::{restrict_to_flat, CosetAtlas, FlatAtlas, RestrictedOracle, SearchAtlas};
pub use field::{
    truncation_time, xray_forward_n, BumpN, FieldOracleN, GeodesicOracle, PhantomN, ScalarFieldN, SupportBall,
    GEODESIC_TOL,
};
pub use immersion::{
    geodesy_residual, is_totally_geodesic_flat, verify_flat, FlatImmersion, FlatRecord, FlatSamples, FlatVerdict,
    FD_STEP,
};
pub use reduce::{flat_preimage, flat_project, reduce_and_invert, reduce_points, Reduction, ReductionOptions};
pub use region::{conv_p_region, CompactRegion, ConvGrid};
pub use search::{find_flat_detailed, find_flat_through, FlatSearchOptions, FlatSearchOutcome, FlatSource, TangentVector};
