use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use spincell_core::config::reference;
use spincell_core::consts::BOLTZMANN;
use spincell_core::vapor::{
    mode_relaxation, optical_depth, saturated_density, transmittance, vapor_state, BufferGas, BufferGasMix,
    ChamberGeometry, DiffusionMode, PhysicalConstants,
};

fn constants() -> PhysicalConstants {
    PhysicalConstants::default()
}

#[test]
fn mean_speed_oracle() {
    let c = constants();
    let t = 298.15;
    let s = vapor_state(&c, t, &BufferGasMix::evacuated()).unwrap();
    let oracle = (16.0 * BOLTZMANN * t / (PI * c.cs_atomic_mass)).sqrt();
    assert_relative_eq!(s.mean_relative_speed, oracle, max_relative = 1e-12);
    assert!((s.mean_relative_speed - 310.0).abs() < 5.0);
}

#[test]
fn sec_rate_oracle_for_nitrogen_cell() {
    let c = constants();
    let t = 383.0;
    let mix = BufferGasMix::new(vec![BufferGas::new("N2", 6600.0, 293.15)]);
    let s = vapor_state(&c, t, &mix).unwrap();
    let n = 101_325.0 * 10f64.powf(4.165 - 3830.0 / t) / (BOLTZMANN * t);
    let v = (16.0 * BOLTZMANN * t / (PI * c.cs_atomic_mass)).sqrt();
    assert_relative_eq!(s.sec_rate, n * c.sigma_se * v, max_relative = 1e-12);
}

#[test]
fn evacuated_mix_is_ballistic_with_finite_exchange() {
    let s = vapor_state(&constants(), 350.0, &BufferGasMix::evacuated()).unwrap();
    assert!(s.is_ballistic());
    assert!(s.diffusion_coefficient.is_none());
    assert!(s.sec_rate.is_finite() && s.sec_rate > 0.0);
}

#[test]
fn higher_mode_decays_faster() {
    let g = ChamberGeometry::rectangular(2e-3, 4e-3, 4e-3, 4e-3).unwrap();
    let base = mode_relaxation(&g, 2e-5, DiffusionMode::Rectangular(1, 1, 1)).unwrap().angular;
    let higher = mode_relaxation(&g, 2e-5, DiffusionMode::Rectangular(2, 1, 1)).unwrap().angular;
    assert!(higher > base);
    assert!((base - 74.0).abs() < 1.0, "{base}");
}

#[test]
fn sphere_diffusion_stays_below_the_narrow_line_floor() {
    let p = reference::spherical_glass_cell().spin_params().unwrap();
    let fwhm = p.gamma_diffusion().unwrap() / PI;
    assert!(fwhm > 0.1 && fwhm < 8.0, "{fwhm}");
}

#[test]
fn transmittance_falls_from_90_to_120_celsius_at_fixed_detuning() {
    let p = reference::wafer_cell().spin_params().unwrap();
    let od = |t: f64| {
        let v = vapor_state(&p.constants, t, &p.mix).unwrap();
        optical_depth(&p.constants, &v, p.pump.detuning, 4e-3, &p.mix).unwrap()
    };
    assert!(transmittance(od(393.15)) < transmittance(od(363.15)));
    let v = vapor_state(&p.constants, 383.15, &p.mix).unwrap();
    assert!(optical_depth(&p.constants, &v, 0.0, 4e-3, &p.mix).unwrap() > 1.0);
}

fn mix_strategy() -> impl Strategy<Value = BufferGasMix> {
    (1e3..1e5f64, 0.0..1e5f64).prop_map(|(n2, ne)| {
        let mut gases = vec![BufferGas::new("N2", n2, 293.15)];
        if ne > 1.0 {
            gases.push(BufferGas::new("Ne", ne, 293.15));
        }
        BufferGasMix::new(gases)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sec_rate_identity(t in 280.0..420.0f64, mix in mix_strategy()) {
        let c = constants();
        let s = vapor_state(&c, t, &mix).unwrap();
        let expected = s.number_density * c.sigma_se * s.mean_relative_speed;
        prop_assert!((s.sec_rate - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn density_is_monotone(t1 in 280.0..420.0f64, dt in 0.1..50.0f64) {
        let c = constants();
        prop_assert!(saturated_density(&c, t1 + dt).unwrap() > saturated_density(&c, t1).unwrap());
    }

    #[test]
    fn doubling_fill_halves_diffusion(t in 280.0..420.0f64, mix in mix_strategy()) {
        let c = constants();
        let d1 = vapor_state(&c, t, &mix).unwrap().diffusion_coefficient.unwrap();
        let d2 = vapor_state(&c, t, &mix.scaled(2.0)).unwrap().diffusion_coefficient.unwrap();
        prop_assert!((d2 / d1 - 0.5).abs() < 0.005);
    }

    #[test]
    fn cube_lowest_mode(side in 1e-3..2e-2f64, d in 1e-6..1e-3f64) {
        let g = ChamberGeometry::rectangular(side, side, side, side).unwrap();
        let rate = mode_relaxation(&g, d, DiffusionMode::Rectangular(1, 1, 1)).unwrap().angular;
        let expected = 3.0 * d * PI * PI / (side * side);
        prop_assert!((rate - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn transmittance_is_bounded_and_decreasing(
        t in 280.0..420.0f64,
        dt in 1.0..30.0f64,
        path in 1e-4..1e-2f64,
        longer in 1.01..3.0f64,
        detuning in -5e9..5e9f64,
    ) {
        let c = constants();
        let mix = BufferGasMix::new(vec![BufferGas::new("N2", 1e4, 293.15)]);
        let cold = vapor_state(&c, t, &mix).unwrap();
        let hot = vapor_state(&c, t + dt, &mix).unwrap();
        let tr = |v, l| transmittance(optical_depth(&c, v, detuning, l, &mix).unwrap());
        let base = tr(&cold, path);
        prop_assert!(base > 0.0 && base <= 1.0);
        prop_assert!(tr(&hot, path) < base || base == 1.0);
        prop_assert!(tr(&cold, path * longer) < base || base == 1.0);
    }
}
