use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{CalibrationConstants, PumpConfig, SpinModelParams, SpinState};
use crate::consts::ETA4_EQUILIBRIUM;
use crate::vapor::ChamberGeometry;
use crate::Result;

/// Depth-averaged intensity fraction of a beam through optical depth `od`.
pub fn beer_lambert_average(od: f64) -> f64 {
    if od <= 0.0 {
        1.0
    } else {
        -(-od).exp_m1() / od
    }
}

pub fn geometric_overlap(pump: &PumpConfig, geometry: &ChamberGeometry) -> f64 {
    (pump.beam_area() / geometry.cross_section()).min(1.0)
}

/// Pumping rate Γ_p (s⁻¹) seen by atoms of the lowest diffusion mode.
pub fn effective_pumping_rate(
    pump: &PumpConfig,
    calib: &CalibrationConstants,
    geometry: &ChamberGeometry,
    optical_depth: f64,
) -> f64 {
    calib.pump_rate_per_watt * pump.power * geometric_overlap(pump, geometry) * beer_lambert_average(optical_depth)
}

/// Fraction of spin-exchange broadening surviving at this Larmor frequency.
pub fn serf_factor(larmor: f64, sec_rate: f64, knee: f64) -> f64 {
    let x = 2.0 * PI * larmor / sec_rate;
    let x2 = x * x;
    if x2.is_infinite() {
        return 1.0;
    }
    x2 / (x2 + knee * knee)
}

/// Reduction of spin-exchange decoherence as F=4 approaches the stretched state.
pub fn stretched_suppression(p4z: f64, exponent: f64) -> f64 {
    (1.0 - p4z.clamp(0.0, 1.0)).powf(exponent)
}

/// Decomposition of the transverse relaxation rate (angular, s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub gamma_diffusion: f64,
    pub gamma_sec_effective: f64,
    pub gamma_pump: f64,
    pub gamma_total: f64,
}

impl RateBreakdown {
    /// Resonance FWHM in Hz.
    pub fn fwhm_hz(&self) -> f64 {
        self.gamma_total / PI
    }
}

pub fn rate_breakdown(params: &SpinModelParams, state: &SpinState) -> Result<RateBreakdown> {
    let rates = ModelRates::new(params)?;
    let gamma_pump = rates.pump_decoherence * rates.pumping_rate(state.p3z);
    let gamma_sec_effective = rates.sec_broadening(state.p4z);
    Ok(RateBreakdown {
        gamma_diffusion: rates.gamma_d,
        gamma_sec_effective,
        gamma_pump,
        gamma_total: rates.gamma_d + gamma_sec_effective + gamma_pump,
    })
}

/// Rates entering the equations of motion, evaluated once per parameter set.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModelRates {
    pub gamma_d: f64,
    pub sec_rate: f64,
    pub serf: f64,
    pub flip: f64,
    pub exponent: f64,
    pub beta: f64,
    pub pump_decoherence: f64,
    /// Γ_p of an optically thin vapour.
    pub pump_thin: f64,
    pub optical_depth: f64,
    pub rabi: f64,
    pub delta: f64,
}

impl ModelRates {
    pub fn new(params: &SpinModelParams) -> Result<Self> {
        let c = &params.calib;
        Ok(Self {
            gamma_d: params.gamma_diffusion()?,
            sec_rate: params.vapor.sec_rate,
            serf: serf_factor(params.field.larmor_frequency, params.vapor.sec_rate, c.serf_knee),
            flip: c.sec_flip_fraction,
            exponent: c.stretched_exponent,
            beta: c.optical_transfer_branching,
            pump_decoherence: c.pump_decoherence_fraction,
            pump_thin: effective_pumping_rate(&params.pump, c, &params.geometry, 0.0),
            optical_depth: params.optical_depth()?,
            rabi: params.rabi_angular(),
            delta: params.field.detuning_angular(),
        })
    }

    /// Γ_p with the pump absorption reduced by F=3 polarisation (dark-state bleaching).
    pub fn pumping_rate(&self, p3z: f64) -> f64 {
        let absorbing = (1.0 - p3z).clamp(0.0, 2.0);
        self.pump_thin * beer_lambert_average(self.optical_depth * absorbing)
    }

    pub fn sec_broadening(&self, p4z: f64) -> f64 {
        self.flip * self.sec_rate * self.serf * stretched_suppression(p4z, self.exponent)
    }

    pub fn population_relaxation(&self) -> f64 {
        self.gamma_d + self.sec_rate
    }

    pub fn gamma_total(&self, p3z: f64, p4z: f64) -> f64 {
        self.gamma_d + self.sec_broadening(p4z) + self.pump_decoherence * self.pumping_rate(p3z)
    }

    /// Longitudinal fixed point for a given F=3 polarisation:
    /// returns (η4, P3 implied by the rate balance, P4).
    pub fn longitudinal_map(&self, p3z: f64) -> (f64, f64, f64) {
        let gp = self.pumping_rate(p3z);
        let gr = self.population_relaxation();
        let bgp = self.beta * gp;
        let eta4 = (ETA4_EQUILIBRIUM * gr + bgp) / (gr + bgp);
        let eta3 = 1.0 - eta4;
        let coupling = eta3 * (self.sec_rate + bgp / eta4);
        let ratio = coupling / (coupling + self.gamma_d);
        let r4 = self.sec_rate * eta4;
        let p3 = gp / (gp + r4 * (1.0 - ratio) + self.gamma_d);
        (eta4, p3, ratio * p3)
    }
}
