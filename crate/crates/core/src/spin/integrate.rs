use num_complex::Complex64;

use super::rates::ModelRates;
use super::{SpinModelParams, SpinState};
use crate::consts::ETA4_EQUILIBRIUM;
use crate::{Error, Result};

/// Time-stamped states, s.
pub type Trajectory = Vec<(f64, SpinState)>;

const BOUND_TOLERANCE: f64 = 1e-9;

/// Time derivative [dη4, dP3, dP4, dRe T4, dIm T4] of the rate equations.
pub fn derivative(params: &SpinModelParams, state: &SpinState) -> Result<[f64; 5]> {
    Ok(derivative_with(&ModelRates::new(params)?, state))
}

pub(crate) fn derivative_with(r: &ModelRates, s: &SpinState) -> [f64; 5] {
    let eta4 = s.eta4;
    let eta3 = 1.0 - eta4;
    let gp = r.pumping_rate(s.p3z);
    let bgp = r.beta * gp;
    let d_eta4 = bgp * eta3 - r.population_relaxation() * (eta4 - ETA4_EQUILIBRIUM);
    let d_p3 = gp * (1.0 - s.p3z) + r.sec_rate * eta4 * (s.p4z - s.p3z) - r.gamma_d * s.p3z;
    let d_p4 = r.sec_rate * eta3 * (s.p3z - s.p4z) + bgp * (s.p3z - s.p4z) * eta3 / eta4 - r.gamma_d * s.p4z;
    let gamma2 = r.gamma_total(s.p3z, s.p4z);
    let d_t4 = Complex64::i() * (0.5 * r.rabi * s.p4z) - Complex64::new(gamma2, r.delta) * s.t4;
    [d_eta4, d_p3, d_p4, d_t4.re, d_t4.im]
}

fn rk4_step(r: &ModelRates, y: [f64; 5], h: f64) -> [f64; 5] {
    let f = |y: [f64; 5]| derivative_with(r, &SpinState::from_array(y));
    let add = |y: [f64; 5], k: [f64; 5], c: f64| std::array::from_fn(|i| y[i] + c * k[i]);
    let k1 = f(y);
    let k2 = f(add(y, k1, 0.5 * h));
    let k3 = f(add(y, k2, 0.5 * h));
    let k4 = f(add(y, k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn check_inputs(initial: &SpinState, duration: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    if !(duration.is_finite() && duration >= step) {
        return Err(Error::domain(format!("duration {duration} must be at least one step {step}")));
    }
    if !initial.is_physical(BOUND_TOLERANCE) {
        return Err(Error::domain(format!("initial state is not physical: {initial:?}")));
    }
    Ok((duration / step * (1.0 - 1e-12)).ceil() as usize)
}

fn run(
    params: &SpinModelParams,
    initial: &SpinState,
    duration: f64,
    step: f64,
    mut visit: impl FnMut(f64, SpinState),
) -> Result<SpinState> {
    let steps = check_inputs(initial, duration, step)?;
    let rates = ModelRates::new(params)?;
    let h = duration / steps as f64;
    let mut y = initial.to_array();
    visit(0.0, *initial);
    for n in 1..=steps {
        y = rk4_step(&rates, y, h);
        let state = SpinState::from_array(y);
        let t = n as f64 * h;
        if !state.is_physical(BOUND_TOLERANCE) {
            return Err(Error::Integrator { time: t, what: format!("state left the physical domain: {state:?}") });
        }
        visit(t, state);
    }
    Ok(SpinState::from_array(y))
}

/// Classical fourth-order Runge–Kutta integration of the rate equations.
///
/// The step is shrunk so that an integer number of steps covers `duration`.
/// The returned trajectory includes the initial state at t = 0.
pub fn integrate(params: &SpinModelParams, initial: &SpinState, duration: f64, step: f64) -> Result<Trajectory> {
    let mut out = Vec::new();
    run(params, initial, duration, step, |t, s| out.push((t, s)))?;
    Ok(out)
}

/// Like [`integrate`] but returns only the final state.
pub fn integrate_final(params: &SpinModelParams, initial: &SpinState, duration: f64, step: f64) -> Result<SpinState> {
    run(params, initial, duration, step, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reference;
    use crate::spin::steady_state;

    fn params() -> SpinModelParams {
        let mut p = reference::wafer_cell().spin_params().unwrap().at_temperature(373.15).unwrap();
        p.pump.power = 5e-4;
        p
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let p = params();
        let s = steady_state(&p).unwrap();
        let traj = integrate(&p, &s, 0.05, 1e-5).unwrap();
        for (_, x) in &traj {
            for (a, b) in x.to_array().iter().zip(s.to_array()) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn population_is_conserved() {
        let p = params();
        for (_, s) in integrate(&p, &SpinState::thermal(), 0.02, 1e-5).unwrap() {
            assert!((s.eta3 + s.eta4 - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn unphysical_initial_state_is_rejected() {
        let s = SpinState::from_parts(0.5, 1.5, 0.0, Complex64::new(0.0, 0.0));
        assert!(integrate(&params(), &s, 1.0, 0.1).is_err());
        assert!(integrate(&params(), &SpinState::thermal(), 0.05, 0.1).is_err());
    }

    #[test]
    fn explicit_instability_is_reported() {
        // A step far beyond the RK4 stability limit must trip the bound check.
        let p = params();
        let err = integrate(&p, &SpinState::thermal(), 1.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::Integrator { .. }), "{err}");
    }

    #[test]
    fn dark_decay_matches_analytic_rate() {
        // Without light and with equal polarisations, P̄ is conserved by
        // exchange and both polarisations decay at exactly Γ_d.
        let mut p = params();
        p.pump.power = 0.0;
        p.field.rf_amplitude = 0.0;
        let gd = p.gamma_diffusion().unwrap();
        let init = SpinState::from_parts(9.0 / 16.0, 0.4, 0.4, Complex64::new(0.0, 0.0));
        let traj = integrate(&p, &init, 3.0 / gd, 1e-3 / gd).unwrap();
        // Log-linear least-squares fit of P4 against time.
        let (n, mut sx, mut sy, mut sxx, mut sxy) = (traj.len() as f64, 0.0, 0.0, 0.0, 0.0);
        for (t, s) in &traj {
            let y = s.p4z.ln();
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((-slope / gd - 1.0).abs() < 0.01, "fitted {} vs {gd}", -slope);
    }
}
