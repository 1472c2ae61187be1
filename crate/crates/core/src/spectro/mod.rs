//! rf spectrum synthesis, lock-in demodulation and complex Lorentzian fitting.

mod fit;
mod lockin;
mod lorentz;
mod select;
mod spectrum;
mod synth;

pub use fit::{fit_lorentzian, fit_lorentzian_with, initial_guess, FitOptions, LorentzianFit};
pub use lockin::{demodulate, Demodulated};
pub use lorentz::{evaluate, LorentzComponent};
pub use select::{select_model, select_model_with, ModelSelection, SelectionOptions};
pub use spectrum::{FlaggedPoint, NoiseModel, RfSpectrum, SweepPlan};
pub use synth::synthesize_spectrum;
