//! Finite-dimensional integrability tests for local dissipative dynamics on
//! deformable slices.
//!
//! The functional curl measures whether local generators attached to
//! different sites of a slice can be composed independently of the order
//! in which the slice is advanced. The boost test measures whether the
//! dissipative evolution of a line of field modes commutes with a small
//! change of rapidity.

mod boost;
mod curl;

pub use boost::{
    boost_interchange_residual, boost_refinement, BoostRefinement, BoostResidual, MomentumGridModel, RateSource,
    DEFAULT_BOOST_STEP, DEFAULT_PACKET_WIDTH, DEFAULT_RAPIDITY_HALF_WIDTH, MAX_MODES,
};
pub use curl::{
    build_slice_generator, functional_curl_residual, CurlResidual, RateMode, SliceLattice, DEFAULT_SITE_GAP, MAX_SITES,
};
