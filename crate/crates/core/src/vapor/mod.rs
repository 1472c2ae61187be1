//! Caesium vapour properties.

mod constants;
mod geometry;
mod optics;
mod state;

pub use constants::PhysicalConstants;
pub use geometry::{mode_relaxation, ChamberGeometry, ChamberShape, DiffusionMode, ModeRate};
pub use optics::{absorption_cross_section, absorption_fwhm, optical_depth, transmittance};
pub use state::{
    diffusion_coefficient, mean_relative_speed, saturated_density, vapor_state, BufferGas,
    BufferGasMix, VaporState,
};
