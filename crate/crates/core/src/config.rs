//! JSON cell configuration with unit-suffixed keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scans::{ScanAxis, ScanConfig, SweepSpec};
use crate::spectro::NoiseModel;
use crate::spin::{
    BeamProfile, CalibrationConstants, FieldConfig, PumpConfig, Relaxation, SpinModelParams, WeightedMode,
};
use crate::vapor::{BufferGas, BufferGasMix, ChamberGeometry, DiffusionMode, PhysicalConstants};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub temperature_k: f64,
    #[serde(default)]
    pub buffer_gas: Vec<BufferGas>,
    pub chamber: ChamberEntry,
    pub relaxation: RelaxationEntry,
    pub pump: PumpEntry,
    pub field: FieldEntry,
    pub calibration: CalibrationEntry,
    pub sweep: SweepEntry,
    pub noise: NoiseEntry,
    #[serde(default)]
    pub scans: ScanValues,
    /// Optional constants table, resolved relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants_file: Option<PathBuf>,
    /// Constants loaded from `constants_file`; defaults otherwise.
    #[serde(skip)]
    pub constants: Option<PhysicalConstants>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChamberEntry {
    Rectangular { lx_m: f64, ly_m: f64, lz_m: f64, optical_path_m: f64 },
    Spherical { radius_m: f64, optical_path_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RelaxationEntry {
    Diffusion { modes: Vec<ModeEntry> },
    Wall { rate_per_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    /// Three indices for a box, one radial index for a sphere.
    pub indices: Vec<u32>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpEntry {
    pub power_w: f64,
    pub detuning_hz: f64,
    pub beam_radius_m: f64,
    pub profile: BeamProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldEntry {
    pub larmor_hz: f64,
    pub rf_amplitude_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationEntry {
    pub pump_rate_per_s_per_w: f64,
    pub optical_transfer_branching: f64,
    pub pump_decoherence_fraction: f64,
    pub serf_knee: f64,
    pub stretched_exponent: f64,
    pub sec_flip_fraction: f64,
    pub probe_gain_v_m2: f64,
    #[serde(default)]
    pub lockin_phase_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub points: usize,
    pub dwell_s: f64,
    /// Span as a multiple of the model linewidth, centred on the Larmor frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_fwhm_multiple: Option<f64>,
    /// Fixed span centred on the Larmor frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEntry {
    pub white_noise_rms_v_per_rthz: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanValues {
    #[serde(default)]
    pub pump_power_w: Vec<f64>,
    #[serde(default)]
    pub temperature_k: Vec<f64>,
    #[serde(default)]
    pub larmor_hz: Vec<f64>,
    #[serde(default = "one_usize")]
    pub repeats: usize,
}

fn one_usize() -> usize {
    1
}

impl CellConfig {
    /// Parses and validates a configuration. `constants_file` entries are
    /// resolved against `base_dir`.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: CellConfig = serde_json::from_str(text)?;
        if let Some(file) = &cfg.constants_file {
            let path = match base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            cfg.constants = Some(PhysicalConstants::load(&path)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, path.parent())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.spin_params()?;
        self.sweep_spec().validate()?;
        self.noise_model().validate()?;
        if self.scans.repeats == 0 {
            return Err(Error::config("scans.repeats must be at least 1"));
        }
        Ok(())
    }

    pub fn mix(&self) -> BufferGasMix {
        BufferGasMix::new(self.buffer_gas.clone())
    }

    pub fn geometry(&self) -> Result<ChamberGeometry> {
        match self.chamber {
            ChamberEntry::Rectangular { lx_m, ly_m, lz_m, optical_path_m } => {
                ChamberGeometry::rectangular(lx_m, ly_m, lz_m, optical_path_m)
            }
            ChamberEntry::Spherical { radius_m, optical_path_m } => ChamberGeometry::spherical(radius_m, optical_path_m),
        }
    }

    pub fn relaxation(&self) -> Result<Relaxation> {
        Ok(match &self.relaxation {
            RelaxationEntry::Wall { rate_per_s } => Relaxation::Wall { rate: *rate_per_s },
            RelaxationEntry::Diffusion { modes } => Relaxation::Diffusion {
                modes: modes
                    .iter()
                    .map(|m| {
                        let mode = match m.indices.as_slice() {
                            [nx, ny, nz] => DiffusionMode::Rectangular(*nx, *ny, *nz),
                            [n] => DiffusionMode::Radial(*n),
                            other => {
                                return Err(Error::config(format!(
                                    "mode indices must have 1 or 3 entries, got {other:?}"
                                )))
                            }
                        };
                        Ok(WeightedMode { mode, weight: m.weight })
                    })
                    .collect::<Result<_>>()?,
            },
        })
    }

    pub fn calibration(&self) -> CalibrationConstants {
        let c = &self.calibration;
        CalibrationConstants {
            pump_rate_per_watt: c.pump_rate_per_s_per_w,
            optical_transfer_branching: c.optical_transfer_branching,
            pump_decoherence_fraction: c.pump_decoherence_fraction,
            serf_knee: c.serf_knee,
            stretched_exponent: c.stretched_exponent,
            sec_flip_fraction: c.sec_flip_fraction,
            probe_gain: c.probe_gain_v_m2,
            lockin_phase: c.lockin_phase_rad,
        }
    }

    pub fn spin_params(&self) -> Result<SpinModelParams> {
        SpinModelParams::new(
            self.constants(),
            self.mix(),
            self.temperature_k,
            self.geometry()?,
            PumpConfig {
                power: self.pump.power_w,
                detuning: self.pump.detuning_hz,
                beam_radius: self.pump.beam_radius_m,
                profile: self.pump.profile,
            },
            FieldConfig::on_resonance(self.field.larmor_hz, self.field.rf_amplitude_hz),
            self.calibration(),
            self.relaxation()?,
        )
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            points: self.sweep.points,
            dwell: self.sweep.dwell_s,
            span_fwhm_multiple: self.sweep.span_fwhm_multiple,
            span_hz: self.sweep.span_hz,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel { white_noise_rms: self.noise.white_noise_rms_v_per_rthz, seed: self.noise.seed }
    }

    /// Applies one scan-axis value (W, K or Hz) to the configuration.
    pub fn with_axis_value(&self, axis: ScanAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            ScanAxis::PumpPower => c.pump.power_w = value,
            ScanAxis::Temperature => c.temperature_k = value,
            ScanAxis::Larmor => c.field.larmor_hz = value,
        }
        c
    }

    /// Scan over the axis values stored in the configuration.
    pub fn scan_config(&self, axis: ScanAxis, master_seed: u64) -> Result<ScanConfig> {
        let values = match axis {
            ScanAxis::PumpPower => &self.scans.pump_power_w,
            ScanAxis::Temperature => &self.scans.temperature_k,
            ScanAxis::Larmor => &self.scans.larmor_hz,
        };
        ScanConfig::new(axis, values.clone(), self.clone(), master_seed, self.scans.repeats)
    }
}

/// Reference configurations shipped with the crate.
pub mod reference {
    use super::CellConfig;
    use crate::cell::CellLayoutConfig;

    pub const WAFER_CELL: &str = include_str!("../../../configs/wafer_cell.json");
    pub const PARAFFIN_CELL: &str = include_str!("../../../configs/paraffin_cell.json");
    pub const SPHERICAL_GLASS_CELL: &str = include_str!("../../../configs/spherical_glass_cell.json");
    pub const CELL_LAYOUT: &str = include_str!("../../../configs/cell_layout.json");

    fn parse(text: &str) -> CellConfig {
        CellConfig::from_json_str(text, None).expect("shipped configuration is valid")
    }

    pub fn wafer_cell() -> CellConfig {
        parse(WAFER_CELL)
    }

    pub fn paraffin_cell() -> CellConfig {
        parse(PARAFFIN_CELL)
    }

    pub fn spherical_glass_cell() -> CellConfig {
        parse(SPHERICAL_GLASS_CELL)
    }

    pub fn cell_layout() -> CellLayoutConfig {
        CellLayoutConfig::from_json_str(CELL_LAYOUT).expect("shipped layout is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configs_parse_and_round_trip() {
        for cfg in [reference::wafer_cell(), reference::paraffin_cell(), reference::spherical_glass_cell()] {
            let back = CellConfig::from_json_str(&cfg.to_json_string().unwrap(), None).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn negative_pressure_fails_validation() {
        let text = reference::WAFER_CELL.replacen("\"fill_pressure_pa\": ", "\"fill_pressure_pa\": -", 1);
        assert!(CellConfig::from_json_str(&text, None).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = reference::WAFER_CELL.replacen("\"temperature_k\"", "\"temperature_c\"", 1);
        assert!(CellConfig::from_json_str(&text, None).is_err());
    }

    #[test]
    fn evacuated_config_requires_wall_relaxation() {
        let mut cfg = reference::wafer_cell();
        cfg.buffer_gas.clear();
        assert!(cfg.validate().is_err());
    }
}
