//! Fundamental constants (CODATA 2018, SI).

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const CLASSICAL_ELECTRON_RADIUS: f64 = 2.817_940_326_2e-15;
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Reference conditions for tabulated diffusion coefficients.
pub const REFERENCE_PRESSURE_PA: f64 = 101_325.0;
pub const REFERENCE_TEMPERATURE_K: f64 = 273.15;

pub const ZERO_CELSIUS_K: f64 = 273.15;

/// Thermal-equilibrium population of the F=4 manifold of caesium, (2F+1)/16.
pub const ETA4_EQUILIBRIUM: f64 = 9.0 / 16.0;
