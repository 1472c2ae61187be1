//! Two-manifold (F=3, F=4) rate model of indirect optical pumping.
//!
//! State variables are the F=4 population fraction, the longitudinal
//! polarisations of both manifolds and the complex F=4 transverse coherence
//! in the frame rotating at the rf frequency. The F=3 manifold is pumped
//! directly; F=4 acquires polarisation through spin-exchange collisions and
//! optical transfer.

mod integrate;
mod params;
pub(crate) mod rates;
mod steady;

pub use integrate::{derivative, integrate, integrate_final, Trajectory};
pub use params::{
    BeamProfile, CalibrationConstants, FieldConfig, PumpConfig, Relaxation, SpinModelParams, WeightedMode,
};
pub use rates::{
    beer_lambert_average, effective_pumping_rate, geometric_overlap, rate_breakdown, serf_factor,
    stretched_suppression, RateBreakdown,
};
pub use steady::{rf_response, steady_state, steady_state_with, SolverOptions, SpinState};
