use std::f64::consts::PI;

use super::{BufferGasMix, PhysicalConstants, VaporState};
use crate::consts::{CLASSICAL_ELECTRON_RADIUS, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Optical FWHM of the pumped line: natural width plus pressure broadening, Hz.
pub fn absorption_fwhm(constants: &PhysicalConstants, mix: &BufferGasMix, temperature: f64) -> Result<f64> {
    let mut fwhm = constants.d2_natural_fwhm;
    for gas in &mix.components {
        fwhm += constants.broadening_for(&gas.species)? * gas.pressure_at(temperature);
    }
    Ok(fwhm)
}

/// Lorentzian absorption cross-section at `detuning` Hz from line centre, m².
///
/// The line strength integrates to π r_e c f over frequency; a fraction of it
/// belongs to the pumped hyperfine component.
pub fn absorption_cross_section(
    constants: &PhysicalConstants,
    mix: &BufferGasMix,
    temperature: f64,
    detuning: f64,
) -> Result<f64> {
    let fwhm = absorption_fwhm(constants, mix, temperature)?;
    let strength =
        PI * CLASSICAL_ELECTRON_RADIUS * SPEED_OF_LIGHT * constants.d2_oscillator_strength * constants.pump_line_fraction;
    let half = 0.5 * fwhm;
    let profile = (half / PI) / (detuning * detuning + half * half);
    Ok(strength * profile)
}

pub fn optical_depth(
    constants: &PhysicalConstants,
    vapor: &VaporState,
    detuning: f64,
    path: f64,
    mix: &BufferGasMix,
) -> Result<f64> {
    if !(path.is_finite() && path > 0.0) {
        return Err(Error::domain(format!("optical path must be positive, got {path}")));
    }
    let sigma = absorption_cross_section(constants, mix, vapor.temperature, detuning)?;
    Ok(vapor.number_density * sigma * path)
}

pub fn transmittance(optical_depth: f64) -> f64 {
    (-optical_depth).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vapor::{vapor_state, BufferGas};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn n2() -> BufferGasMix {
        BufferGasMix::new(vec![BufferGas::new("N2", 14_600.0, 293.15)])
    }

    #[test]
    fn peak_cross_section_closed_form() {
        let fwhm = absorption_fwhm(&c(), &n2(), 380.0).unwrap();
        let peak = absorption_cross_section(&c(), &n2(), 380.0, 0.0).unwrap();
        let oracle = 2.0 * 2.817_940_326_2e-15 * 299_792_458.0 * 0.7164 * 0.15625 / fwhm;
        assert_relative_eq!(peak, oracle, max_relative = 1e-12);
    }

    #[test]
    fn cross_section_integrates_to_line_strength() {
        let fwhm = absorption_fwhm(&c(), &n2(), 380.0).unwrap();
        // Trapezoid over ±2000 FWHM plus the analytic Lorentzian tail.
        let (lim, n) = (2000.0 * fwhm, 400_000);
        let h = 2.0 * lim / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            sum += w * absorption_cross_section(&c(), &n2(), 380.0, -lim + i as f64 * h).unwrap();
        }
        let tail = 1.0 - 2.0 / PI * (lim / (0.5 * fwhm)).atan();
        let strength = PI * 2.817_940_326_2e-15 * 299_792_458.0 * 0.7164 * 0.15625;
        assert_relative_eq!(sum * h / (1.0 - tail), strength, max_relative = 1e-5);
    }

    #[test]
    fn empty_cell_is_transparent() {
        let mut v = vapor_state(&c(), 300.0, &n2()).unwrap();
        v.number_density = 0.0;
        let od = optical_depth(&c(), &v, 0.0, 4e-3, &n2()).unwrap();
        assert_eq!(od, 0.0);
        assert_eq!(transmittance(od), 1.0);
    }

    #[test]
    fn hot_cell_is_optically_thick() {
        let v = vapor_state(&c(), 383.15, &n2()).unwrap();
        assert!(optical_depth(&c(), &v, 0.0, 4e-3, &n2()).unwrap() > 1.0);
        let v90 = vapor_state(&c(), 363.15, &n2()).unwrap();
        let v120 = vapor_state(&c(), 393.15, &n2()).unwrap();
        let t = |v: &VaporState| transmittance(optical_depth(&c(), v, 2e7, 4e-3, &n2()).unwrap());
        assert!(t(&v120) < t(&v90));
    }

    #[test]
    fn zero_path_is_rejected() {
        let v = vapor_state(&c(), 300.0, &n2()).unwrap();
        assert!(optical_depth(&c(), &v, 0.0, 0.0, &n2()).is_err());
    }

    proptest! {
        #[test]
        fn transmittance_decreases_with_density_and_path(
            n in 1e14f64..1e20, f in 1.01f64..10.0, path in 1e-4f64..0.05, det in -1e9f64..1e9,
        ) {
            let mut v = vapor_state(&c(), 350.0, &n2()).unwrap();
            v.number_density = n;
            let t0 = transmittance(optical_depth(&c(), &v, det, path, &n2()).unwrap());
            let tp = transmittance(optical_depth(&c(), &v, det, path * f, &n2()).unwrap());
            v.number_density = n * f;
            let tn = transmittance(optical_depth(&c(), &v, det, path, &n2()).unwrap());
            prop_assert!(t0 > 0.0 && t0 <= 1.0);
            prop_assert!(tp <= t0 && tn <= t0);
            prop_assert!(tp < t0 || t0 == 0.0 || t0 == 1.0);
        }
    }
}
