use serde::{Deserialize, Serialize};

use super::grid::{joule_elements, Conductances, VoxelGrid};
use super::pcg::{self, Operator, TwoLevel};
use super::{ChamberCutout, ChamberKind, HeaterLayout, LayerStack};
use crate::consts::ZERO_CELSIUS_K;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalOptions {
    /// Target voxel pitch, m.
    pub pitch: f64,
    /// Exterior convection coefficient (radiation folded in), W/(m²·K).
    pub convection: f64,
    /// Conductivity assigned to chamber voxels, W/(m·K).
    pub gas_conductivity: f64,
    /// Relative residual of each linear solve.
    pub tolerance: f64,
    pub max_linear_iterations: usize,
    /// Relative change in heater resistance that ends the outer loop.
    pub outer_tolerance: f64,
    pub max_outer_iterations: usize,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self {
            pitch: 0.25e-3,
            convection: 10.0,
            gas_conductivity: 0.026,
            tolerance: 1e-8,
            max_linear_iterations: 5000,
            outer_tolerance: 1e-10,
            max_outer_iterations: 100,
        }
    }
}

impl ThermalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.convection.is_finite() && self.convection > 0.0) {
            return Err(Error::config("convection coefficient must be positive"));
        }
        if !(self.tolerance > 0.0 && self.outer_tolerance > 0.0) {
            return Err(Error::config("solver tolerances must be positive"));
        }
        if self.max_linear_iterations == 0 || self.max_outer_iterations == 0 {
            return Err(Error::config("iteration limits must be positive"));
        }
        Ok(())
    }
}

/// Solver bookkeeping attached to a solved field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Electrical power of the source used in the final solve, W.
    pub input_power: f64,
    /// Heat leaving through exterior faces and pin sinks, W.
    pub boundary_flux: f64,
    /// A
    pub current: f64,
    /// Ω
    pub resistance: f64,
    pub outer_iterations: usize,
    pub linear_iterations: usize,
    /// Relative linear residual per iteration of the final solve.
    pub residual_history: Vec<f64>,
}

/// Steady temperature on the voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalField {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// m
    pub dx: f64,
    pub dy: f64,
    /// nz + 1 face heights, m.
    pub z_faces: Vec<f64>,
    /// K, x fastest then y then z.
    pub temperature: Vec<f64>,
    /// 0 for solid, otherwise 1 + index into `cutouts`.
    pub region: Vec<u8>,
    pub cutouts: Vec<ChamberCutout>,
    /// K
    pub ambient: f64,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberStats {
    pub name: ChamberKind,
    pub voxels: usize,
    pub mean_k: f64,
    pub min_k: f64,
    pub max_k: f64,
    /// max − min, K.
    pub differential_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalSummary {
    pub peak_k: f64,
    pub peak_c: f64,
    pub min_k: f64,
    pub ambient_k: f64,
    pub input_power_w: f64,
    pub boundary_flux_w: f64,
    /// |flux − input| / input, 0 for an unpowered heater.
    pub balance_error: f64,
    pub current_a: f64,
    pub resistance_ohm: f64,
    pub pitch_m: [f64; 2],
    pub grid: [usize; 3],
    pub outer_iterations: usize,
    pub linear_iterations: usize,
    pub chambers: Vec<ChamberStats>,
}

impl ThermalField {
    fn from_grid(grid: &VoxelGrid, cutouts: &[ChamberCutout], temperature: Vec<f64>, ambient: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            nz: grid.nz,
            dx: grid.dx,
            dy: grid.dy,
            z_faces: grid.z_faces.clone(),
            temperature,
            region: grid.region.clone(),
            cutouts: cutouts.to_vec(),
            ambient,
            diagnostics: SolveDiagnostics::default(),
        }
    }

    /// Field held at one temperature everywhere, on the grid a solve would use.
    pub fn uniform(stack: &LayerStack, cutouts: &[ChamberCutout], pitch: f64, temperature: f64) -> Result<Self> {
        let grid = VoxelGrid::build(stack, cutouts, pitch, 1.0)?;
        Ok(Self::from_grid(&grid, cutouts, vec![temperature; grid.len()], temperature))
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.temperature[self.index(i, j, k)]
    }

    pub fn footprint(&self) -> (f64, f64) {
        (self.dx * self.nx as f64, self.dy * self.ny as f64)
    }

    pub fn height(&self) -> f64 {
        self.z_faces[self.nz]
    }

    pub fn peak(&self) -> f64 {
        self.temperature.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn minimum(&self) -> f64 {
        self.temperature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trilinear interpolation between voxel centres, clamped at the edges.
    pub fn sample(&self, p: [f64; 3]) -> Result<f64> {
        let (fx, fy) = self.footprint();
        let tol = 1e-12;
        if !(p.iter().all(|v| v.is_finite())
            && (-tol..=fx + tol).contains(&p[0])
            && (-tol..=fy + tol).contains(&p[1])
            && (-tol..=self.height() + tol).contains(&p[2]))
        {
            return Err(Error::domain(format!("point {p:?} lies outside the thermal grid")));
        }
        let axis = |v: f64, d: f64, n: usize| {
            let s = (v / d - 0.5).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n.saturating_sub(2));
            (i, if n > 1 { s - i as f64 } else { 0.0 })
        };
        let (i0, tx) = axis(p[0], self.dx, self.nx);
        let (j0, ty) = axis(p[1], self.dy, self.ny);
        let zc: Vec<f64> = (0..self.nz).map(|k| 0.5 * (self.z_faces[k] + self.z_faces[k + 1])).collect();
        let (k0, tz) = if p[2] <= zc[0] || self.nz == 1 {
            (0, 0.0)
        } else if p[2] >= zc[self.nz - 1] {
            (self.nz - 2, 1.0)
        } else {
            let k = zc.windows(2).position(|w| p[2] < w[1]).unwrap_or(self.nz - 2);
            (k, (p[2] - zc[k]) / (zc[k + 1] - zc[k]))
        };
        let step = |n: usize| usize::from(n > 1);
        let (si, sj, sk) = (step(self.nx), step(self.ny), step(self.nz));
        let mut v = 0.0;
        for (dk, wk) in [(0, 1.0 - tz), (sk, tz)] {
            for (dj, wj) in [(0, 1.0 - ty), (sj, ty)] {
                for (di, wi) in [(0, 1.0 - tx), (si, tx)] {
                    v += wi * wj * wk * self.at(i0 + di, j0 + dj, k0 + dk);
                }
            }
        }
        Ok(v)
    }

    pub fn chamber_stats(&self) -> Vec<ChamberStats> {
        self.cutouts
            .iter()
            .enumerate()
            .filter_map(|(c, cut)| {
                let tag = c as u8 + 1;
                let values: Vec<f64> = self
                    .region
                    .iter()
                    .zip(&self.temperature)
                    .filter(|(r, _)| **r == tag)
                    .map(|(_, t)| *t)
                    .collect();
                if values.is_empty() {
                    return None;
                }
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some(ChamberStats {
                    name: cut.name,
                    voxels: values.len(),
                    mean_k: values.iter().sum::<f64>() / values.len() as f64,
                    min_k: min,
                    max_k: max,
                    differential_k: max - min,
                })
            })
            .collect()
    }

    pub fn chamber(&self, kind: ChamberKind) -> Option<ChamberStats> {
        self.chamber_stats().into_iter().find(|c| c.name == kind)
    }

    pub fn summary(&self) -> ThermalSummary {
        let d = &self.diagnostics;
        let balance_error =
            if d.input_power > 0.0 { (d.boundary_flux - d.input_power).abs() / d.input_power } else { 0.0 };
        let peak = self.peak();
        ThermalSummary {
            peak_k: peak,
            peak_c: peak - ZERO_CELSIUS_K,
            min_k: self.minimum(),
            ambient_k: self.ambient,
            input_power_w: d.input_power,
            boundary_flux_w: d.boundary_flux,
            balance_error,
            current_a: d.current,
            resistance_ohm: d.resistance,
            pitch_m: [self.dx, self.dy],
            grid: [self.nx, self.ny, self.nz],
            outer_iterations: d.outer_iterations,
            linear_iterations: d.linear_iterations,
            chambers: self.chamber_stats(),
        }
    }
}

/// Steady conduction with Joule heating from the heater tracks.
///
/// Track resistance follows the local temperature, so the source is updated
/// in an outer fixed-point loop around the linear solve.
pub fn solve_thermal(
    stack: &LayerStack,
    cutouts: &[ChamberCutout],
    heater: &HeaterLayout,
    ambient: f64,
    options: &ThermalOptions,
) -> Result<ThermalField> {
    options.validate()?;
    heater.validate()?;
    if !(ambient.is_finite() && ambient > 0.0) {
        return Err(Error::config(format!("ambient temperature must be positive, got {ambient}")));
    }
    let grid = VoxelGrid::build(stack, cutouts, options.pitch, options.gas_conductivity)?;
    let (fx, fy) = stack.footprint;
    let mut sinks = Vec::new();
    for pin in &heater.pins {
        let [x, y, z] = pin.position;
        if !(0.0..=fx).contains(&x) || !(0.0..=fy).contains(&y) || !(0.0..=grid.height()).contains(&z) {
            return Err(Error::config(format!("pin at {:?} lies outside the stack", pin.position)));
        }
        if let Some(g) = pin.sink_conductance.filter(|g| *g > 0.0) {
            let (i, j) = grid.column(x, y);
            sinks.push((grid.index(i, j, grid.layer_at(z)), g));
        }
    }
    let conductances = Conductances::build(&grid, options.convection, &sinks);
    let op = Operator::new(&grid, &conductances);
    let pre = TwoLevel::new(&grid, &conductances)?;
    let elements = joule_elements(&grid, heater);
    let volts = heater.drive.rms_volts();
    let n = grid.len();
    let mut theta = vec![0.0; n];
    let mut source = vec![0.0; n];
    let mut previous_resistance = f64::NAN;
    let mut linear_total = 0;
    let mut diagnostics = SolveDiagnostics::default();
    for outer in 1..=options.max_outer_iterations {
        let resistances: Vec<f64> = elements
            .iter()
            .map(|e| {
                let mean = e.voxels.iter().map(|&v| theta[v]).sum::<f64>() / e.voxels.len() as f64 + ambient;
                e.resistivity * (1.0 + e.temp_coefficient * (mean - heater.reference_temperature)) * e.geometry
            })
            .collect();
        let resistance: f64 = resistances.iter().sum();
        if !(resistance.is_finite() && resistance > 0.0) {
            return Err(Error::domain(format!("heater resistance became non-positive ({resistance} Ω)")));
        }
        let current = volts / resistance;
        source.iter_mut().for_each(|q| *q = 0.0);
        for (e, r) in elements.iter().zip(&resistances) {
            let share = current * current * r / e.voxels.len() as f64;
            for &v in &e.voxels {
                source[v] += share;
            }
        }
        let outcome = pcg::solve(&op, &pre, &source, &mut theta, options.tolerance, options.max_linear_iterations)?;
        linear_total += outcome.iterations;
        diagnostics = SolveDiagnostics {
            input_power: source.iter().sum(),
            boundary_flux: conductances.boundary.iter().zip(&theta).map(|(g, t)| g * t).sum(),
            current,
            resistance,
            outer_iterations: outer,
            linear_iterations: linear_total,
            residual_history: outcome.history,
        };
        let change = ((resistance - previous_resistance) / resistance).abs();
        if volts == 0.0 || change <= options.outer_tolerance {
            let temperature = theta.iter().map(|t| t + ambient).collect();
            let mut field = ThermalField::from_grid(&grid, cutouts, temperature, ambient);
            field.diagnostics = diagnostics;
            return Ok(field);
        }
        previous_resistance = resistance;
    }
    Err(Error::NoConvergence {
        solver: "thermal fixed point",
        iterations: options.max_outer_iterations,
        residual: diagnostics.residual_history.last().copied().unwrap_or(f64::NAN),
        history: diagnostics.residual_history,
    })
}
