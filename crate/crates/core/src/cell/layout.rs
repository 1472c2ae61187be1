use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Box3, ChamberCutout, ChamberKind, Drive, HeaterLayout, Layer, LayerStack, Material, Pin, Surface, ThermalOptions,
};
use crate::{Error, Result};

const MM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub material: Material,
    pub thickness_mm: f64,
    pub conductivity_w_per_m_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoutEntry {
    pub name: ChamberKind,
    pub origin_mm: [f64; 3],
    pub extent_mm: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinEntry {
    pub position_mm: [f64; 3],
    #[serde(default)]
    pub sink_conductance_w_per_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveEntry {
    Dc { volts: f64 },
    Ac { volts_rms: f64, frequency_hz: f64 },
}

/// Go/return hairpin laid along the same centreline on each listed surface,
/// all connected in series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeaterEntry {
    pub centerline_mm: Vec<[f64; 2]>,
    pub surfaces: Vec<Surface>,
    pub width_mm: f64,
    pub gap_mm: f64,
    pub thickness_m: f64,
    pub resistivity_ohm_m: f64,
    pub temp_coefficient_per_k: f64,
    pub reference_temperature_k: f64,
    /// Design resistance at 20 °C; the geometry must reproduce it within 5%.
    pub target_resistance_ohm: f64,
    pub drive: DriveEntry,
    #[serde(default)]
    pub pins: Vec<PinEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub pitch_mm: f64,
    pub convection_w_per_m2_k: f64,
    pub gas_conductivity_w_per_m_k: f64,
    pub ambient_k: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub path_mm: Vec<[f64; 2]>,
    pub step_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFigureEntry {
    pub samples_per_axis: usize,
    /// Height of the field map plane.
    pub map_z_mm: f64,
    pub map_points: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellLayoutConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub footprint_mm: [f64; 2],
    /// Bottom to top.
    pub layers: Vec<LayerEntry>,
    pub cutouts: Vec<CutoutEntry>,
    pub heater: HeaterEntry,
    pub solver: SolverEntry,
    pub trace: TraceEntry,
    pub field: FieldFigureEntry,
}

impl CellLayoutConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn stack(&self) -> LayerStack {
        LayerStack {
            layers: self
                .layers
                .iter()
                .map(|l| Layer { material: l.material, thickness: l.thickness_mm * MM, conductivity: l.conductivity_w_per_m_k })
                .collect(),
            footprint: (self.footprint_mm[0] * MM, self.footprint_mm[1] * MM),
        }
    }

    pub fn cutouts(&self) -> Vec<ChamberCutout> {
        self.cutouts
            .iter()
            .map(|c| ChamberCutout {
                name: c.name,
                region: Box3 { origin: c.origin_mm.map(|v| v * MM), extent: c.extent_mm.map(|v| v * MM) },
            })
            .collect()
    }

    pub fn chamber(&self, kind: ChamberKind) -> Option<Box3> {
        self.cutouts().into_iter().find(|c| c.name == kind).map(|c| c.region)
    }

    pub fn heater(&self) -> HeaterLayout {
        let h = &self.heater;
        let top = self.stack().total_thickness();
        let centerline: Vec<[f64; 2]> = h.centerline_mm.iter().map(|p| [p[0] * MM, p[1] * MM]).collect();
        let tracks = h
            .surfaces
            .iter()
            .flat_map(|&s| {
                let z = match s {
                    Surface::Top => top,
                    Surface::Bottom => 0.0,
                };
                HeaterLayout::hairpin(
                    &centerline,
                    s,
                    z,
                    h.width_mm * MM,
                    h.gap_mm * MM,
                    h.thickness_m,
                    h.resistivity_ohm_m,
                    h.temp_coefficient_per_k,
                )
            })
            .collect();
        let drive = match h.drive {
            DriveEntry::Dc { volts } => Drive::Dc { volts },
            DriveEntry::Ac { volts_rms, frequency_hz } => Drive::Ac { volts_rms, frequency_hz },
        };
        HeaterLayout {
            tracks,
            pins: h
                .pins
                .iter()
                .map(|p| Pin { position: p.position_mm.map(|v| v * MM), sink_conductance: p.sink_conductance_w_per_k })
                .collect(),
            drive,
            reference_temperature: h.reference_temperature_k,
        }
    }

    pub fn thermal_options(&self) -> ThermalOptions {
        ThermalOptions {
            pitch: self.solver.pitch_mm * MM,
            convection: self.solver.convection_w_per_m2_k,
            gas_conductivity: self.solver.gas_conductivity_w_per_m_k,
            tolerance: self.solver.tolerance,
            ..ThermalOptions::default()
        }
    }

    pub fn ambient(&self) -> f64 {
        self.solver.ambient_k
    }

    pub fn trace_path(&self) -> Vec<[f64; 2]> {
        self.trace.path_mm.iter().map(|p| [p[0] * MM, p[1] * MM]).collect()
    }

    pub fn trace_step(&self) -> f64 {
        self.trace.step_mm * MM
    }

    /// Heater resistance at 20 °C, Ω.
    pub fn resistance_at_20c(&self) -> f64 {
        self.heater().resistance_at(293.15)
    }

    pub fn validate(&self) -> Result<()> {
        let stack = self.stack();
        stack.validate()?;
        for c in self.cutouts() {
            c.validate(&stack)?;
        }
        let h = &self.heater;
        if h.centerline_mm.len() < 2 || h.surfaces.is_empty() {
            return Err(Error::config("heater needs a centreline and at least one surface"));
        }
        if !(h.width_mm > 0.0 && h.gap_mm > 0.0) {
            return Err(Error::config("heater width and gap must be positive"));
        }
        let heater = self.heater();
        heater.validate()?;
        let (fx, fy) = stack.footprint;
        let outside = heater
            .tracks
            .iter()
            .flat_map(|t| t.vertices.iter())
            .any(|v| v[0] < 0.0 || v[0] > fx || v[1] < 0.0 || v[1] > fy);
        if outside {
            return Err(Error::config("heater track leaves the footprint"));
        }
        if !(h.target_resistance_ohm > 0.0) {
            return Err(Error::config("target resistance must be positive"));
        }
        let r = self.resistance_at_20c();
        if (r / h.target_resistance_ohm - 1.0).abs() > 0.05 {
            return Err(Error::config(format!(
                "heater geometry gives {r:.1} Ω at 20 °C, more than 5% from the {} Ω target",
                h.target_resistance_ohm
            )));
        }
        if !(self.solver.ambient_k > 0.0 && self.solver.pitch_mm > 0.0) {
            return Err(Error::config("ambient temperature and pitch must be positive"));
        }
        self.thermal_options().validate()?;
        if self.trace.path_mm.len() < 2 || !(self.trace.step_mm > 0.0) {
            return Err(Error::config("trace needs two vertices and a positive step"));
        }
        if self.field.samples_per_axis == 0 || self.field.map_points.iter().any(|n| *n < 2) {
            return Err(Error::config("field figure sample counts are too small"));
        }
        if self.chamber(ChamberKind::Interaction).is_none() {
            return Err(Error::config("layout has no interaction chamber"));
        }
        Ok(())
    }
}
