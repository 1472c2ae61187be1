use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ChamberShape {
    /// Box with edge lengths in m. The pump beam propagates along z.
    Rectangular { lx: f64, ly: f64, lz: f64 },
    Spherical { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberGeometry {
    pub shape: ChamberShape,
    /// Pump path length through the vapour, m.
    pub optical_path: f64,
}

impl ChamberGeometry {
    pub fn rectangular(lx: f64, ly: f64, lz: f64, optical_path: f64) -> Result<Self> {
        let g = Self { shape: ChamberShape::Rectangular { lx, ly, lz }, optical_path };
        g.validate()?;
        Ok(g)
    }

    pub fn spherical(radius: f64, optical_path: f64) -> Result<Self> {
        let g = Self { shape: ChamberShape::Spherical { radius }, optical_path };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths: &[f64] = match &self.shape {
            ChamberShape::Rectangular { lx, ly, lz } => &[*lx, *ly, *lz],
            ChamberShape::Spherical { radius } => std::slice::from_ref(radius),
        };
        if lengths.iter().chain([&self.optical_path]).any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::config(format!("chamber lengths must be positive: {self:?}")));
        }
        if self.optical_path > self.longest_extent() * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "optical path {} m exceeds the longest chamber extent {} m",
                self.optical_path,
                self.longest_extent()
            )));
        }
        Ok(())
    }

    pub fn longest_extent(&self) -> f64 {
        match self.shape {
            ChamberShape::Rectangular { lx, ly, lz } => lx.max(ly).max(lz),
            ChamberShape::Spherical { radius } => 2.0 * radius,
        }
    }

    /// Area of the chamber seen by the pump beam, m².
    pub fn cross_section(&self) -> f64 {
        match self.shape {
            ChamberShape::Rectangular { lx, ly, .. } => lx * ly,
            ChamberShape::Spherical { radius } => PI * radius * radius,
        }
    }

    pub fn lowest_mode(&self) -> DiffusionMode {
        match self.shape {
            ChamberShape::Rectangular { .. } => DiffusionMode::Rectangular(1, 1, 1),
            ChamberShape::Spherical { .. } => DiffusionMode::Radial(1),
        }
    }
}

/// Spatial eigenmode of the diffusion equation with depolarising walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    Rectangular(u32, u32, u32),
    /// Radial index of the l=0 modes of a sphere.
    Radial(u32),
}

/// Mode decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRate {
    /// s⁻¹ (angular)
    pub angular: f64,
}

impl ModeRate {
    pub fn hz(&self) -> f64 {
        self.angular / (2.0 * PI)
    }
}

pub fn mode_relaxation(geometry: &ChamberGeometry, diffusion: f64, mode: DiffusionMode) -> Result<ModeRate> {
    if !(diffusion.is_finite() && diffusion > 0.0) {
        return Err(Error::domain(format!("diffusion coefficient must be positive, got {diffusion}")));
    }
    geometry.validate()?;
    let angular = match (geometry.shape, mode) {
        (ChamberShape::Rectangular { lx, ly, lz }, DiffusionMode::Rectangular(nx, ny, nz)) => {
            if nx == 0 || ny == 0 || nz == 0 {
                return Err(Error::domain("mode indices must be at least 1"));
            }
            let k2 = (nx as f64 / lx).powi(2) + (ny as f64 / ly).powi(2) + (nz as f64 / lz).powi(2);
            diffusion * PI * PI * k2
        }
        (ChamberShape::Spherical { radius }, DiffusionMode::Radial(n)) => {
            if n == 0 {
                return Err(Error::domain("radial mode index must be at least 1"));
            }
            diffusion * (n as f64 * PI / radius).powi(2)
        }
        (shape, mode) => {
            return Err(Error::domain(format!("mode {mode:?} does not apply to {shape:?}")));
        }
    };
    Ok(ModeRate { angular })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn chamber() -> ChamberGeometry {
        ChamberGeometry::rectangular(2e-3, 4e-3, 4e-3, 4e-3).unwrap()
    }

    #[test]
    fn reference_chamber_rate() {
        let r = mode_relaxation(&chamber(), 2e-5, DiffusionMode::Rectangular(1, 1, 1)).unwrap();
        let oracle = 2e-5 * PI * PI * (1.0 / 4e-6 + 2.0 / 16e-6);
        assert_relative_eq!(r.angular, oracle, max_relative = 1e-14);
        assert!((r.angular - 74.0).abs() < 0.1, "{}", r.angular);
        assert_relative_eq!(r.hz(), r.angular / (2.0 * PI));
    }

    #[test]
    fn higher_mode_is_faster() {
        let g = chamber();
        let r1 = mode_relaxation(&g, 2e-5, DiffusionMode::Rectangular(1, 1, 1)).unwrap();
        let r2 = mode_relaxation(&g, 2e-5, DiffusionMode::Rectangular(2, 1, 1)).unwrap();
        assert!(r2.angular > r1.angular);
    }

    #[test]
    fn mismatched_or_zero_modes_are_rejected() {
        assert!(mode_relaxation(&chamber(), 2e-5, DiffusionMode::Radial(1)).is_err());
        assert!(mode_relaxation(&chamber(), 2e-5, DiffusionMode::Rectangular(0, 1, 1)).is_err());
        assert!(mode_relaxation(&chamber(), 0.0, DiffusionMode::Rectangular(1, 1, 1)).is_err());
    }

    #[test]
    fn path_longer_than_chamber_is_rejected() {
        assert!(ChamberGeometry::rectangular(2e-3, 4e-3, 4e-3, 5e-3).is_err());
        assert!(ChamberGeometry::spherical(1e-2, 2.1e-2).is_err());
    }

    proptest! {
        #[test]
        fn cube_lowest_mode_identity(l in 1e-4f64..0.1, d in 1e-7f64..1e-2) {
            let g = ChamberGeometry::rectangular(l, l, l, l).unwrap();
            let r = mode_relaxation(&g, d, DiffusionMode::Rectangular(1, 1, 1)).unwrap();
            let exact = 3.0 * d * PI * PI / (l * l);
            prop_assert!((r.angular - exact).abs() <= 4.0 * f64::EPSILON * exact);
        }
    }
}
