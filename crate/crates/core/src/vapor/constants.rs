use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consts::ATOMIC_MASS_UNIT;
use crate::{Error, Result};

/// Material constants of caesium and its buffer-gas interactions.
///
/// Defaults are standard literature values. Every entry can be overridden by
/// loading a JSON table in which each value carries an explicit unit string.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConstants {
    /// kg
    pub cs_atomic_mass: f64,
    /// Cs–Cs spin-exchange cross-section, m²
    pub sigma_se: f64,
    /// F=4 gyromagnetic ratio, Hz/T
    pub gamma_f4: f64,
    /// Hz
    pub d2_frequency: f64,
    /// Hz
    pub d2_natural_fwhm: f64,
    /// Oscillator strength of the D2 line.
    pub d2_oscillator_strength: f64,
    /// Fraction of the D2 line strength in the pumped hyperfine component.
    pub pump_line_fraction: f64,
    /// Vapour-pressure correlation `log10(p / Pa) = a - b / T`.
    pub vapor_pressure_a: f64,
    /// K
    pub vapor_pressure_b: f64,
    /// Gas species → D₀ at 101325 Pa and 273.15 K, m²/s.
    pub diffusion_ref: BTreeMap<String, f64>,
    /// Gas species → optical FWHM broadening, Hz/Pa.
    pub pressure_broadening_ref: BTreeMap<String, f64>,
}

const TORR: f64 = 133.322_368;

impl Default for PhysicalConstants {
    fn default() -> Self {
        let table = |n2: f64, ne: f64| {
            BTreeMap::from([("N2".to_string(), n2), ("Ne".to_string(), ne)])
        };
        Self {
            cs_atomic_mass: 132.905_451_931 * ATOMIC_MASS_UNIT,
            sigma_se: 2.2e-18,
            gamma_f4: 3.4986e9,
            d2_frequency: 351.725_718_5e12,
            d2_natural_fwhm: 5.234e6,
            d2_oscillator_strength: 0.7164,
            // F=3 carries 7/16 of the ground-state weight; F=3 -> F'=2 carries 5/14 of that.
            pump_line_fraction: 7.0 / 16.0 * 5.0 / 14.0,
            // Liquid-phase correlation log10(p/atm) = 4.165 - 3830/T, expressed in Pa.
            vapor_pressure_a: 4.165 + 101_325f64.log10(),
            vapor_pressure_b: 3830.0,
            diffusion_ref: table(0.098e-4, 0.15e-4),
            pressure_broadening_ref: table(19.6e6 / TORR, 9.6e6 / TORR),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Quantity {
    value: f64,
    unit: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsFile {
    cs_atomic_mass: Quantity,
    sigma_se: Quantity,
    gamma_f4: Quantity,
    d2_frequency: Quantity,
    d2_natural_fwhm: Quantity,
    d2_oscillator_strength: Quantity,
    pump_line_fraction: Quantity,
    vapor_pressure_a: Quantity,
    vapor_pressure_b: Quantity,
    diffusion_ref: BTreeMap<String, Quantity>,
    pressure_broadening_ref: BTreeMap<String, Quantity>,
}

fn q(value: f64, unit: &str) -> Quantity {
    Quantity { value, unit: unit.to_string() }
}

fn take(name: &str, quantity: &Quantity, unit: &str) -> Result<f64> {
    if quantity.unit != unit {
        return Err(Error::config(format!(
            "{name}: expected unit \"{unit}\", found \"{}\"",
            quantity.unit
        )));
    }
    Ok(quantity.value)
}

fn take_table(name: &str, table: &BTreeMap<String, Quantity>, unit: &str) -> Result<BTreeMap<String, f64>> {
    table
        .iter()
        .map(|(species, quantity)| Ok((species.clone(), take(&format!("{name}.{species}"), quantity, unit)?)))
        .collect()
}

impl PhysicalConstants {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConstantsFile = serde_json::from_str(text)?;
        let constants = Self {
            cs_atomic_mass: take("cs_atomic_mass", &file.cs_atomic_mass, "kg")?,
            sigma_se: take("sigma_se", &file.sigma_se, "m^2")?,
            gamma_f4: take("gamma_f4", &file.gamma_f4, "Hz/T")?,
            d2_frequency: take("d2_frequency", &file.d2_frequency, "Hz")?,
            d2_natural_fwhm: take("d2_natural_fwhm", &file.d2_natural_fwhm, "Hz")?,
            d2_oscillator_strength: take("d2_oscillator_strength", &file.d2_oscillator_strength, "1")?,
            pump_line_fraction: take("pump_line_fraction", &file.pump_line_fraction, "1")?,
            vapor_pressure_a: take("vapor_pressure_a", &file.vapor_pressure_a, "log10(Pa)")?,
            vapor_pressure_b: take("vapor_pressure_b", &file.vapor_pressure_b, "K")?,
            diffusion_ref: take_table("diffusion_ref", &file.diffusion_ref, "m^2/s")?,
            pressure_broadening_ref: take_table("pressure_broadening_ref", &file.pressure_broadening_ref, "Hz/Pa")?,
        };
        constants.validate()?;
        Ok(constants)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let table = |t: &BTreeMap<String, f64>, unit: &str| {
            t.iter().map(|(k, &v)| (k.clone(), q(v, unit))).collect()
        };
        let file = ConstantsFile {
            cs_atomic_mass: q(self.cs_atomic_mass, "kg"),
            sigma_se: q(self.sigma_se, "m^2"),
            gamma_f4: q(self.gamma_f4, "Hz/T"),
            d2_frequency: q(self.d2_frequency, "Hz"),
            d2_natural_fwhm: q(self.d2_natural_fwhm, "Hz"),
            d2_oscillator_strength: q(self.d2_oscillator_strength, "1"),
            pump_line_fraction: q(self.pump_line_fraction, "1"),
            vapor_pressure_a: q(self.vapor_pressure_a, "log10(Pa)"),
            vapor_pressure_b: q(self.vapor_pressure_b, "K"),
            diffusion_ref: table(&self.diffusion_ref, "m^2/s"),
            pressure_broadening_ref: table(&self.pressure_broadening_ref, "Hz/Pa"),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("cs_atomic_mass", self.cs_atomic_mass),
            ("sigma_se", self.sigma_se),
            ("gamma_f4", self.gamma_f4),
            ("d2_frequency", self.d2_frequency),
            ("d2_natural_fwhm", self.d2_natural_fwhm),
            ("d2_oscillator_strength", self.d2_oscillator_strength),
            ("pump_line_fraction", self.pump_line_fraction),
            ("vapor_pressure_a", self.vapor_pressure_a),
            ("vapor_pressure_b", self.vapor_pressure_b),
        ];
        for (name, value) in scalars {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("{name} must be positive and finite, got {value}")));
            }
        }
        for (name, table) in [
            ("diffusion_ref", &self.diffusion_ref),
            ("pressure_broadening_ref", &self.pressure_broadening_ref),
        ] {
            for required in ["N2", "Ne"] {
                if !table.contains_key(required) {
                    return Err(Error::config(format!("{name} has no entry for {required}")));
                }
            }
            if let Some((species, value)) = table.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::config(format!("{name}.{species} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn diffusion_ref_for(&self, species: &str) -> Result<f64> {
        self.diffusion_ref
            .get(species)
            .copied()
            .ok_or_else(|| Error::config(format!("no diffusion constant for buffer gas {species}")))
    }

    pub fn broadening_for(&self, species: &str) -> Result<f64> {
        self.pressure_broadening_ref
            .get(species)
            .copied()
            .ok_or_else(|| Error::config(format!("no pressure-broadening coefficient for buffer gas {species}")))
    }
}
