use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::vapor::{
    mode_relaxation, optical_depth, vapor_state, BufferGasMix, ChamberGeometry, DiffusionMode, PhysicalConstants,
    VaporState,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamProfile {
    TopHat,
    /// `beam_radius` is the 1/e² intensity radius.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// W
    pub power: f64,
    /// Hz, from the F=3 → F'=2 transition.
    pub detuning: f64,
    /// m
    pub beam_radius: f64,
    pub profile: BeamProfile,
}

impl PumpConfig {
    /// Effective illuminated area, m².
    pub fn beam_area(&self) -> f64 {
        let disc = PI * self.beam_radius * self.beam_radius;
        match self.profile {
            BeamProfile::TopHat => disc,
            BeamProfile::Gaussian => 0.5 * disc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(Error::config(format!("pump power must be non-negative, got {} W", self.power)));
        }
        if !(self.beam_radius.is_finite() && self.beam_radius > 0.0) {
            return Err(Error::config(format!("beam radius must be positive, got {} m", self.beam_radius)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::config("pump detuning must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Hz
    pub larmor_frequency: f64,
    /// Rabi frequency of the rf drive, Hz.
    pub rf_amplitude: f64,
    /// Hz
    pub rf_frequency: f64,
}

impl FieldConfig {
    pub fn on_resonance(larmor_frequency: f64, rf_amplitude: f64) -> Self {
        Self { larmor_frequency, rf_amplitude, rf_frequency: larmor_frequency }
    }

    /// Bias field corresponding to the Larmor frequency, T.
    pub fn bias_field(&self, constants: &PhysicalConstants) -> f64 {
        self.larmor_frequency / constants.gamma_f4
    }

    /// Angular detuning of the drive from the Larmor frequency, s⁻¹.
    pub fn detuning_angular(&self) -> f64 {
        2.0 * PI * (self.rf_frequency - self.larmor_frequency)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.larmor_frequency.is_finite() && self.larmor_frequency >= 0.0) {
            return Err(Error::config(format!("Larmor frequency must be non-negative, got {}", self.larmor_frequency)));
        }
        if !(self.rf_amplitude.is_finite() && self.rf_amplitude >= 0.0) {
            return Err(Error::config(format!("rf amplitude must be non-negative, got {}", self.rf_amplitude)));
        }
        if !self.rf_frequency.is_finite() {
            return Err(Error::config("rf frequency must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    /// s⁻¹/W
    pub pump_rate_per_watt: f64,
    /// β ∈ (0, 1)
    pub optical_transfer_branching: f64,
    /// ε ≥ 0
    pub pump_decoherence_fraction: f64,
    /// a > 0
    pub serf_knee: f64,
    /// σ_exp ≥ 1
    pub stretched_exponent: f64,
    /// κ ∈ (0, 1]
    pub sec_flip_fraction: f64,
    /// Signal units per (column density in m⁻² × transverse polarisation).
    pub probe_gain: f64,
    /// Lock-in reference phase, rad.
    pub lockin_phase: f64,
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("pump_rate_per_watt", self.pump_rate_per_watt >= 0.0),
            ("optical_transfer_branching", self.optical_transfer_branching > 0.0 && self.optical_transfer_branching < 1.0),
            ("pump_decoherence_fraction", self.pump_decoherence_fraction >= 0.0),
            ("serf_knee", self.serf_knee > 0.0),
            ("stretched_exponent", self.stretched_exponent >= 1.0),
            ("sec_flip_fraction", self.sec_flip_fraction > 0.0 && self.sec_flip_fraction <= 1.0),
            ("probe_gain", self.probe_gain >= 0.0),
            ("lockin_phase", true),
        ];
        let values = [
            self.pump_rate_per_watt,
            self.optical_transfer_branching,
            self.pump_decoherence_fraction,
            self.serf_knee,
            self.stretched_exponent,
            self.sec_flip_fraction,
            self.probe_gain,
            self.lockin_phase,
        ];
        for ((name, ok), value) in checks.into_iter().zip(values) {
            if !ok || !value.is_finite() {
                return Err(Error::config(format!("calibration constant {name} out of range: {value}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedMode {
    pub mode: DiffusionMode,
    /// Relative signal weight of the mode.
    pub weight: f64,
}

/// Ground-state relaxation of the atoms other than spin exchange and light.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relaxation {
    /// Buffer-gas cell. The first mode drives the spin model; further modes
    /// add resonance components to synthesised spectra.
    Diffusion { modes: Vec<WeightedMode> },
    /// Coated cell with a single global wall-relaxation rate (angular, s⁻¹).
    Wall { rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinModelParams {
    pub constants: PhysicalConstants,
    pub mix: BufferGasMix,
    pub vapor: VaporState,
    pub geometry: ChamberGeometry,
    pub pump: PumpConfig,
    pub field: FieldConfig,
    pub calib: CalibrationConstants,
    pub relaxation: Relaxation,
}

impl SpinModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        constants: PhysicalConstants,
        mix: BufferGasMix,
        temperature: f64,
        geometry: ChamberGeometry,
        pump: PumpConfig,
        field: FieldConfig,
        calib: CalibrationConstants,
        relaxation: Relaxation,
    ) -> Result<Self> {
        let vapor = vapor_state(&constants, temperature, &mix)?;
        let params = Self { constants, mix, vapor, geometry, pump, field, calib, relaxation };
        params.validate()?;
        Ok(params)
    }

    /// Same model at another cell temperature.
    pub fn at_temperature(&self, temperature: f64) -> Result<Self> {
        let mut p = self.clone();
        p.vapor = vapor_state(&p.constants, temperature, &p.mix)?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.mix.validate()?;
        self.geometry.validate()?;
        self.pump.validate()?;
        self.field.validate()?;
        self.calib.validate()?;
        if !(self.vapor.number_density > 0.0 && self.vapor.sec_rate > 0.0) {
            return Err(Error::config("vapour density and spin-exchange rate must be positive"));
        }
        match &self.relaxation {
            Relaxation::Wall { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::config(format!("wall relaxation rate must be positive, got {rate}")));
                }
            }
            Relaxation::Diffusion { modes } => {
                if modes.is_empty() {
                    return Err(Error::config("diffusion relaxation needs at least one mode"));
                }
                if self.vapor.diffusion_coefficient.is_none() {
                    return Err(Error::config("diffusion relaxation requires a buffer gas"));
                }
                if let Some(m) = modes.iter().find(|m| !(m.weight.is_finite() && m.weight > 0.0)) {
                    return Err(Error::config(format!("mode weight must be positive, got {}", m.weight)));
                }
                for m in modes {
                    self.mode_rate(m.mode)?;
                }
            }
        }
        Ok(())
    }

    fn mode_rate(&self, mode: DiffusionMode) -> Result<f64> {
        let d = self
            .vapor
            .diffusion_coefficient
            .ok_or_else(|| Error::config("diffusion relaxation requires a buffer gas"))?;
        Ok(mode_relaxation(&self.geometry, d, mode)?.angular)
    }

    /// Γ_d of the mode driving the spin model (angular, s⁻¹).
    pub fn gamma_diffusion(&self) -> Result<f64> {
        match &self.relaxation {
            Relaxation::Wall { rate } => Ok(*rate),
            Relaxation::Diffusion { modes } => self.mode_rate(modes[0].mode),
        }
    }

    /// One single-mode model per resonance component, with its signal weight.
    pub fn mode_components(&self) -> Vec<(SpinModelParams, f64)> {
        match &self.relaxation {
            Relaxation::Wall { .. } => vec![(self.clone(), 1.0)],
            Relaxation::Diffusion { modes } => modes
                .iter()
                .map(|m| {
                    let mut p = self.clone();
                    p.relaxation = Relaxation::Diffusion { modes: vec![WeightedMode { mode: m.mode, weight: 1.0 }] };
                    (p, m.weight)
                })
                .collect(),
        }
    }

    /// Pump optical depth of the unpolarised vapour.
    pub fn optical_depth(&self) -> Result<f64> {
        optical_depth(&self.constants, &self.vapor, self.pump.detuning, self.geometry.optical_path, &self.mix)
    }

    /// Angular Rabi frequency of the rf drive, s⁻¹.
    pub fn rabi_angular(&self) -> f64 {
        2.0 * PI * self.field.rf_amplitude
    }

    /// Caesium column density along the probe, m⁻².
    pub fn column_density(&self) -> f64 {
        self.vapor.number_density * self.geometry.optical_path
    }
}
