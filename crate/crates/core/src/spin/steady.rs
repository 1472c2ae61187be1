use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rates::ModelRates;
use super::SpinModelParams;
use crate::consts::ETA4_EQUILIBRIUM;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinState {
    pub eta3: f64,
    pub eta4: f64,
    pub p3z: f64,
    pub p4z: f64,
    /// Transverse F=4 coherence in the frame rotating at the rf frequency.
    pub t4: Complex64,
}

impl SpinState {
    /// Unpolarised thermal equilibrium.
    pub fn thermal() -> Self {
        Self::from_parts(ETA4_EQUILIBRIUM, 0.0, 0.0, Complex64::new(0.0, 0.0))
    }

    pub fn from_parts(eta4: f64, p3z: f64, p4z: f64, t4: Complex64) -> Self {
        Self { eta3: 1.0 - eta4, eta4, p3z, p4z, t4 }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.eta4, self.p3z, self.p4z, self.t4.re, self.t4.im]
    }

    pub fn from_array(y: [f64; 5]) -> Self {
        Self::from_parts(y[0], y[1], y[2], Complex64::new(y[3], y[4]))
    }

    pub fn is_physical(&self, tolerance: f64) -> bool {
        let bound = 1.0 + tolerance;
        self.to_array().iter().all(|v| v.is_finite())
            && (-tolerance..=bound).contains(&self.eta4)
            && self.p3z.abs() <= bound
            && self.p4z.abs() <= bound
            && self.t4.norm() <= bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Bound on the rate-equation residual, relative to the fastest rate.
    pub residual_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 200, residual_tolerance: 1e-10 }
    }
}

pub fn steady_state(params: &SpinModelParams) -> Result<SpinState> {
    steady_state_with(params, &SolverOptions::default())
}

/// Fixed point of the rate equations.
///
/// For fixed P3 the population and P4 balances are linear and are solved in
/// closed form, which reduces the problem to one scalar equation in P3. That
/// equation is bracketed on [0, 1] and solved with a damped secant update
/// (Illinois variant of regula falsi).
pub fn steady_state_with(params: &SpinModelParams, options: &SolverOptions) -> Result<SpinState> {
    let rates = ModelRates::new(params)?;
    let g = |p3: f64| rates.longitudinal_map(p3).1 - p3;

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    let mut history = Vec::new();
    let mut p3 = 0.0;
    let mut converged = false;
    let mut side = 0i8;
    if g_lo <= 0.0 {
        converged = true;
    } else {
        for _ in 0..options.max_iterations {
            p3 = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
            if !(p3 > lo && p3 < hi) {
                p3 = 0.5 * (lo + hi);
            }
            let gp = g(p3);
            history.push(gp.abs());
            if gp == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi.max(1e-300) {
                converged = true;
                break;
            }
            if gp > 0.0 {
                lo = p3;
                g_lo = gp;
                if side == 1 {
                    g_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = p3;
                g_hi = gp;
                if side == -1 {
                    g_lo *= 0.5;
                }
                side = -1;
            }
            if gp.abs() <= 1e-14 * p3 {
                converged = true;
                break;
            }
        }
    }

    let (eta4, p3z, p4z) = rates.longitudinal_map(p3);
    let gamma2 = rates.gamma_total(p3z, p4z);
    let t4 = Complex64::i() * (0.5 * rates.rabi * p4z) / Complex64::new(gamma2, rates.delta);
    if rates.rabi > 0.1 * gamma2 {
        log::warn!(
            "rf Rabi rate {:.3e} s^-1 exceeds a tenth of the linewidth {:.3e} s^-1; power broadening is not modelled",
            rates.rabi,
            gamma2
        );
    }
    let state = SpinState::from_parts(eta4, p3z, p4z, t4);

    let residual = normalized_residual(params, &rates, &state);
    if !converged || residual > options.residual_tolerance {
        return Err(Error::NoConvergence {
            solver: "steady-state solver",
            iterations: history.len(),
            residual,
            history,
        });
    }
    Ok(state)
}

fn normalized_residual(params: &SpinModelParams, rates: &ModelRates, state: &SpinState) -> f64 {
    let d = super::integrate::derivative_with(rates, state);
    let scale = rates.population_relaxation()
        + rates.pump_thin * (1.0 + params.calib.optical_transfer_branching)
        + rates.gamma_total(state.p3z, state.p4z)
        + rates.delta.abs()
        + rates.rabi;
    d.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / scale
}

/// Steady-state transverse coherence with the drive `detuning` Hz from Larmor.
pub fn rf_response(params: &SpinModelParams, detuning: f64) -> Result<Complex64> {
    let mut p = params.clone();
    p.field.rf_frequency = p.field.larmor_frequency + detuning;
    Ok(steady_state(&p)?.t4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reference;
    use crate::spin::rate_breakdown;
    use approx::assert_relative_eq;

    fn wafer(t_c: f64, power: f64) -> SpinModelParams {
        let mut p = reference::wafer_cell().spin_params().unwrap().at_temperature(t_c + 273.15).unwrap();
        p.pump.power = power;
        p
    }

    #[test]
    fn dark_undriven_cell_is_thermal() {
        let mut p = wafer(110.0, 0.0);
        p.field.rf_amplitude = 0.0;
        let s = steady_state(&p).unwrap();
        assert_eq!(s.eta4, 9.0 / 16.0);
        assert_eq!((s.p3z, s.p4z), (0.0, 0.0));
        assert_eq!(s.t4, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn on_resonance_response_is_absorptive() {
        let s = steady_state(&wafer(110.0, 1e-3)).unwrap();
        assert_eq!(s.t4.re, 0.0);
        assert!(s.t4.im > 0.0);
        assert!((s.eta3 + s.eta4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn saturates_near_three_milliwatts() {
        let p_sat = steady_state(&wafer(110.0, 50e-3)).unwrap().p4z;
        let p3 = steady_state(&wafer(110.0, 3e-3)).unwrap().p4z;
        assert!((p3 - p_sat).abs() <= 0.1 * p_sat, "P4(3 mW) = {p3}, P4(50 mW) = {p_sat}");
    }

    #[test]
    fn half_power_at_hwhm() {
        let p = wafer(110.0, 1e-3);
        let s0 = steady_state(&p).unwrap();
        let hwhm = rate_breakdown(&p, &s0).unwrap().gamma_total / (2.0 * std::f64::consts::PI);
        let on = rf_response(&p, 0.0).unwrap().norm_sqr();
        for d in [hwhm, -hwhm] {
            assert_relative_eq!(rf_response(&p, d).unwrap().norm_sqr(), 0.5 * on, max_relative = 1e-3);
        }
        assert!(rf_response(&p, 1e9).unwrap().norm() < 1e-5 * on.sqrt());
    }

    #[test]
    fn mirrored_detuning_gives_conjugate_mirror() {
        let p = wafer(100.0, 2e-4);
        for d in [3.0, 40.0, 700.0] {
            let a = rf_response(&p, d).unwrap();
            let b = rf_response(&p, -d).unwrap();
            assert_relative_eq!(a.re, -b.re, max_relative = 1e-12);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_pump_breakdown_identity() {
        let p = wafer(100.0, 0.0);
        let b = rate_breakdown(&p, &SpinState::thermal()).unwrap();
        let q = crate::spin::serf_factor(p.field.larmor_frequency, p.vapor.sec_rate, p.calib.serf_knee);
        let expected = p.gamma_diffusion().unwrap() + p.calib.sec_flip_fraction * p.vapor.sec_rate * q;
        assert_eq!(b.gamma_pump, 0.0);
        assert_relative_eq!(b.gamma_total, expected, max_relative = 1e-15);
    }

    #[test]
    fn larmor_broadening_is_monotone_at_low_pump() {
        let mut p = wafer(120.0, 100e-6);
        let mut last = 0.0;
        for f in [100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0] {
            p.field = crate::spin::FieldConfig::on_resonance(f, p.field.rf_amplitude);
            let s = steady_state(&p).unwrap();
            let g = rate_breakdown(&p, &s).unwrap().gamma_total;
            assert!(g > last, "{f} Hz: {g} <= {last}");
            last = g;
        }
    }
}
