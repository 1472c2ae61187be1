//! Spin dynamics, rf spectroscopy, and thermal/magnetic environment modelling
//! for miniature alkali-metal (caesium) vapour cells.
//!
//! The crate is organised by subsystem:
//!
//! * [`vapor`]: caesium vapour properties (density, spin-exchange rate,
//!   buffer-gas diffusion, diffusion-mode relaxation, optical depth).
//! * [`spin`]: the two-manifold (F=3, F=4) rate model of indirect pumping,
//!   its steady state, time integration and rf response.
//! * [`spectro`]: rf spectrum synthesis, lock-in demodulation and complex
//!   Lorentzian fitting.
//! * [`cell`]: steady-state thermal model of the glass/Si/glass stack with
//!   Pt heater tracks, and Biot–Savart stray fields of the heater.
//! * [`scans`]: parameter sweeps, trend statistics and result persistence.
//! * [`acceptance`]: the executable acceptance suite shared by the test
//!   target and the command-line tool.

pub mod acceptance;
pub mod cell;
pub mod config;
pub mod consts;
mod error;
pub mod scans;
pub mod seed;
pub mod spectro;
pub mod spin;
pub mod vapor;

pub use error::{Error, Result};
