use std::f64::consts::PI;

use proptest::prelude::*;

use spincell_core::config::reference;
use spincell_core::consts::ZERO_CELSIUS_K;
use spincell_core::spectro::demodulate;
use spincell_core::spin::{
    effective_pumping_rate, integrate, integrate_final, rate_breakdown, serf_factor, steady_state, SpinModelParams,
    SpinState,
};

fn wafer(t_c: f64, power: f64, larmor: f64) -> SpinModelParams {
    let mut cell = reference::wafer_cell();
    cell.temperature_k = t_c + ZERO_CELSIUS_K;
    cell.pump.power_w = power;
    cell.field.larmor_hz = larmor;
    cell.spin_params().unwrap()
}

#[test]
fn pumping_is_hampered_in_the_hot_cell() {
    let rate = |t_c: f64| {
        let p = wafer(t_c, 1e-3, 15e3);
        let s = steady_state(&p).unwrap();
        rate_breakdown(&p, &s).unwrap().gamma_pump
    };
    assert!(rate(120.0) < rate(90.0));
}

#[test]
fn no_light_no_pumping() {
    let p = wafer(110.0, 0.0, 15e3);
    let od = p.optical_depth().unwrap();
    assert_eq!(effective_pumping_rate(&p.pump, &p.calib, &p.geometry, od), 0.0);
}

#[test]
fn serf_ordering_with_reference_calibration() {
    let p = wafer(120.0, 1e-4, 15e3);
    let q = |l: f64| serf_factor(l, p.vapor.sec_rate, p.calib.serf_knee);
    assert!(q(120.0) < q(570.0) && q(570.0) < q(3200.0));
}

#[test]
fn linewidth_grows_with_larmor_at_low_pump() {
    let mut last = 0.0;
    for larmor in [100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0] {
        let p = wafer(120.0, 100e-6, larmor);
        let g = rate_breakdown(&p, &steady_state(&p).unwrap()).unwrap().gamma_total;
        assert!(g > last, "{larmor} Hz: {g} <= {last}");
        last = g;
    }
}

/// The lab-frame signal of the integrated coherence, demodulated at the drive
/// frequency, reproduces the steady-state quadrature.
#[test]
fn lockin_recovers_steady_state_coherence() {
    let larmor = 2000.0;
    let p = wafer(100.0, 1e-3, larmor);
    let steady = steady_state(&p).unwrap();
    let sample_rate = 40.0 * larmor;
    let duration = 0.25;
    let traj = integrate(&p, &SpinState::thermal(), duration, 1.0 / sample_rate).unwrap();
    let w = 2.0 * PI * p.field.rf_frequency;
    let signal: Vec<f64> = traj
        .iter()
        .map(|(t, s)| s.t4.re * (w * t).cos() - s.t4.im * (w * t).sin())
        .collect();
    let d = demodulate(&signal, sample_rate, p.field.rf_frequency, 0.01).unwrap();
    let (x, y) = d.settled();
    let expected = 0.5 * steady.t4.im;
    assert!(steady.t4.re.abs() < 1e-6 * steady.t4.im.abs());
    assert!((y / expected - 1.0).abs() < 0.02, "Y {y} vs {expected}");
    assert!(x.abs() < 0.02 * expected.abs());
}

#[test]
fn step_halving_gives_fourth_order() {
    let mut p = wafer(100.0, 1e-3, 15e3);
    p.field.rf_frequency += 300.0;
    let h = 2e-5;
    let t = 4e-3;
    let run = |s: f64| integrate_final(&p, &SpinState::thermal(), t, s).unwrap().to_array();
    let (a, b, c) = (run(h), run(h / 2.0), run(h / 4.0));
    let dist = |u: &[f64; 5], v: &[f64; 5]| u.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let order = (dist(&a, &b) / dist(&b, &c)).log2();
    assert!((order - 4.0).abs() < 0.5, "{order}");
}

/// Step resolving the fastest rate of the model.
fn safe_step(p: &SpinModelParams, gamma_total: f64) -> f64 {
    let pump = effective_pumping_rate(&p.pump, &p.calib, &p.geometry, 0.0);
    let detuning = 2.0 * PI * (p.field.rf_frequency - p.field.larmor_frequency);
    let fastest = [p.vapor.sec_rate, pump, detuning.abs(), p.rabi_angular(), gamma_total].into_iter().fold(0.0, f64::max);
    0.3 / fastest
}

fn params_strategy() -> impl Strategy<Value = SpinModelParams> {
    (25.0..120.0f64, -5.0..-1.7f64, 2.0..4.5f64, -3.0..3.0f64, 0.0..5.0f64).prop_map(|(t, lp, ll, det, rf)| {
        let mut p = wafer(t, 10f64.powf(lp), 10f64.powf(ll));
        p.field.rf_amplitude = rf;
        p.field.rf_frequency = p.field.larmor_frequency + det * 100.0;
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_conserve_population_and_stay_bounded(p in params_strategy()) {
        let s = steady_state(&p).unwrap();
        let g = rate_breakdown(&p, &s).unwrap().gamma_total;
        let traj = integrate(&p, &SpinState::thermal(), 3.0 / g, safe_step(&p, g)).unwrap();
        for (_, st) in traj.iter().step_by(17) {
            prop_assert!((st.eta3 + st.eta4 - 1.0).abs() < 1e-10);
            prop_assert!(st.p3z.abs() <= 1.0 && st.p4z.abs() <= 1.0 && st.t4.norm() <= 1.0);
        }
    }

    #[test]
    fn decomposition_identity(p in params_strategy()) {
        let s = steady_state(&p).unwrap();
        let b = rate_breakdown(&p, &s).unwrap();
        let sum = b.gamma_diffusion + b.gamma_sec_effective + b.gamma_pump;
        prop_assert!((b.gamma_total - sum).abs() <= 1e-12 * b.gamma_total);
        prop_assert!((b.fwhm_hz() - b.gamma_total / PI).abs() <= 1e-12 * b.fwhm_hz());
    }

    #[test]
    fn steady_state_is_physical(p in params_strategy()) {
        let s = steady_state(&p).unwrap();
        prop_assert!(s.is_physical(1e-12));
        prop_assert!((s.eta3 + s.eta4 - 1.0).abs() < 1e-12);
    }
}
