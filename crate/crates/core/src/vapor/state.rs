use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::PhysicalConstants;
use crate::consts::{BOLTZMANN, REFERENCE_PRESSURE_PA, REFERENCE_TEMPERATURE_K};
use crate::{Error, Result};

const T_MIN_K: f64 = 273.0;
const T_MAX_K: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferGas {
    pub species: String,
    pub fill_pressure_pa: f64,
    pub fill_temperature_k: f64,
}

impl BufferGas {
    pub fn new(species: &str, fill_pressure_pa: f64, fill_temperature_k: f64) -> Self {
        Self { species: species.to_string(), fill_pressure_pa, fill_temperature_k }
    }

    /// Partial pressure at `temperature` for a sealed cell (isochoric ideal gas).
    pub fn pressure_at(&self, temperature: f64) -> f64 {
        self.fill_pressure_pa * temperature / self.fill_temperature_k
    }
}

/// Buffer-gas fill of a sealed cell. An empty mix describes an evacuated cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BufferGasMix {
    pub components: Vec<BufferGas>,
}

impl BufferGasMix {
    pub fn evacuated() -> Self {
        Self::default()
    }

    pub fn new(components: Vec<BufferGas>) -> Self {
        Self { components }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for gas in &self.components {
            if !(gas.fill_pressure_pa.is_finite() && gas.fill_pressure_pa > 0.0) {
                return Err(Error::config(format!(
                    "buffer gas {}: fill pressure must be positive, got {} Pa",
                    gas.species, gas.fill_pressure_pa
                )));
            }
            if !(gas.fill_temperature_k.is_finite() && gas.fill_temperature_k > 0.0) {
                return Err(Error::config(format!(
                    "buffer gas {}: fill temperature must be positive, got {} K",
                    gas.species, gas.fill_temperature_k
                )));
            }
        }
        Ok(())
    }

    /// Every fill pressure multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|g| BufferGas { fill_pressure_pa: g.fill_pressure_pa * factor, ..g.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaporState {
    /// K
    pub temperature: f64,
    /// m⁻³
    pub number_density: f64,
    /// m/s
    pub mean_relative_speed: f64,
    /// s⁻¹
    pub sec_rate: f64,
    /// m²/s; `None` in the ballistic (evacuated) regime.
    pub diffusion_coefficient: Option<f64>,
}

impl VaporState {
    pub fn is_ballistic(&self) -> bool {
        self.diffusion_coefficient.is_none()
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature.is_finite() && temperature > T_MIN_K && temperature < T_MAX_K {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "temperature {temperature} K outside ({T_MIN_K}, {T_MAX_K}) K"
        )))
    }
}

/// Saturated caesium number density in m⁻³.
pub fn saturated_density(constants: &PhysicalConstants, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let pressure = 10f64.powf(constants.vapor_pressure_a - constants.vapor_pressure_b / temperature);
    Ok(pressure / (BOLTZMANN * temperature))
}

/// Mean relative speed of two caesium atoms, sqrt(16 kB T / (π m)).
pub fn mean_relative_speed(constants: &PhysicalConstants, temperature: f64) -> f64 {
    (16.0 * BOLTZMANN * temperature / (PI * constants.cs_atomic_mass)).sqrt()
}

/// Combined Cs diffusion coefficient in the mix (Blanc's law), `None` if evacuated.
pub fn diffusion_coefficient(
    constants: &PhysicalConstants,
    temperature: f64,
    mix: &BufferGasMix,
) -> Result<Option<f64>> {
    if mix.is_empty() {
        return Ok(None);
    }
    let mut inverse = 0.0;
    for gas in &mix.components {
        let d0 = constants.diffusion_ref_for(&gas.species)?;
        let d = d0 * (REFERENCE_PRESSURE_PA / gas.pressure_at(temperature))
            * (temperature / REFERENCE_TEMPERATURE_K).powf(1.5);
        inverse += 1.0 / d;
    }
    Ok(Some(1.0 / inverse))
}

pub fn vapor_state(constants: &PhysicalConstants, temperature: f64, mix: &BufferGasMix) -> Result<VaporState> {
    mix.validate()?;
    let number_density = saturated_density(constants, temperature)?;
    let mean_relative_speed = mean_relative_speed(constants, temperature);
    Ok(VaporState {
        temperature,
        number_density,
        mean_relative_speed,
        sec_rate: number_density * constants.sigma_se * mean_relative_speed,
        diffusion_coefficient: diffusion_coefficient(constants, temperature, mix)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn density_matches_published_correlation() {
        // 1 atm equivalent form: log10(p/torr) = 7.046 - 3830/T.
        for t in [298.15, 350.0, 393.15] {
            let p_pa = 10f64.powf(7.046 - 3830.0 / t) * 101_325.0 / 760.0;
            let n = p_pa / (BOLTZMANN * t);
            assert_relative_eq!(saturated_density(&c(), t).unwrap(), n, max_relative = 1e-3);
        }
    }

    #[test]
    fn out_of_range_temperature_is_domain_error() {
        for t in [273.0, 500.0, -1.0, f64::NAN] {
            assert!(matches!(saturated_density(&c(), t), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn mean_speed_at_room_temperature() {
        let m = 132.905_451_931 * 1.660_539_066_60e-27;
        let oracle = (16.0 * 1.380_649e-23 * 298.15 / (std::f64::consts::PI * m)).sqrt();
        let v = mean_relative_speed(&c(), 298.15);
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!((300.0..320.0).contains(&v), "{v}");
    }

    #[test]
    fn sec_rate_for_nitrogen_cell() {
        let mix = BufferGasMix::new(vec![BufferGas::new("N2", 6600.0, 293.15)]);
        let s = vapor_state(&c(), 383.0, &mix).unwrap();
        let n = 10f64.powf(4.165 - 3830.0 / 383.0) * 101_325.0 / (1.380_649e-23 * 383.0);
        let oracle = n * 2.2e-18 * s.mean_relative_speed;
        assert_relative_eq!(s.sec_rate, oracle, max_relative = 1e-9);
        assert!(s.diffusion_coefficient.is_some());
    }

    #[test]
    fn evacuated_cell_is_ballistic() {
        let s = vapor_state(&c(), 300.0, &BufferGasMix::evacuated()).unwrap();
        assert!(s.is_ballistic());
        assert!(s.sec_rate.is_finite() && s.sec_rate > 0.0);
    }

    #[test]
    fn unknown_species_is_config_error() {
        let mix = BufferGasMix::new(vec![BufferGas::new("Xe", 1000.0, 293.15)]);
        assert!(matches!(vapor_state(&c(), 300.0, &mix), Err(Error::Config(_))));
    }

    #[test]
    fn negative_pressure_is_rejected() {
        let mix = BufferGasMix::new(vec![BufferGas::new("N2", -1.0, 293.15)]);
        assert!(vapor_state(&c(), 300.0, &mix).is_err());
    }

    #[test]
    fn blanc_law_two_gases() {
        let t = 350.0;
        let ne = BufferGasMix::new(vec![BufferGas::new("Ne", 40_000.0, 293.15)]);
        let n2 = BufferGasMix::new(vec![BufferGas::new("N2", 6_666.0, 293.15)]);
        let both = BufferGasMix::new([ne.components.clone(), n2.components.clone()].concat());
        let d = |m| diffusion_coefficient(&c(), t, m).unwrap().unwrap();
        assert_relative_eq!(1.0 / d(&both), 1.0 / d(&ne) + 1.0 / d(&n2), max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn density_is_increasing(t1 in 274.0f64..499.0, dt in 0.01f64..50.0) {
            let t2 = (t1 + dt).min(499.9);
            prop_assume!(t2 > t1);
            prop_assert!(saturated_density(&c(), t2).unwrap() > saturated_density(&c(), t1).unwrap());
        }

        #[test]
        fn sec_identity(t in 274.0f64..499.0) {
            let s = vapor_state(&c(), t, &BufferGasMix::evacuated()).unwrap();
            prop_assert_eq!(s.sec_rate, s.number_density * c().sigma_se * s.mean_relative_speed);
        }

        #[test]
        fn doubling_pressure_halves_diffusion(
            t in 274.0f64..499.0,
            p_n2 in 100.0f64..1e5,
            p_ne in 100.0f64..1e5,
        ) {
            let mix = BufferGasMix::new(vec![
                BufferGas::new("N2", p_n2, 293.15),
                BufferGas::new("Ne", p_ne, 293.15),
            ]);
            let d1 = diffusion_coefficient(&c(), t, &mix).unwrap().unwrap();
            let d2 = diffusion_coefficient(&c(), t, &mix.scaled(2.0)).unwrap().unwrap();
            prop_assert!((d2 / d1 - 0.5).abs() < 0.005);
        }
    }
}
