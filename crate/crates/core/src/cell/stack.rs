use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Glass,
    Silicon,
    Platinum,
    Gas,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: Material,
    /// m
    pub thickness: f64,
    /// W/(m·K)
    pub conductivity: f64,
}

/// Layers ordered from the bottom (z = 0) upwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    /// (x, y) extent, m.
    pub footprint: (f64, f64),
}

impl LayerStack {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::config("layer stack is empty"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness.is_finite() && l.thickness > 0.0) || !(l.conductivity.is_finite() && l.conductivity > 0.0) {
                return Err(Error::config(format!("layer {i}: thickness and conductivity must be positive")));
            }
        }
        let (x, y) = self.footprint;
        if !(x.is_finite() && x > 0.0 && y.is_finite() && y > 0.0) {
            return Err(Error::config("footprint must be positive"));
        }
        Ok(())
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// z range of layer `index`.
    pub fn layer_bounds(&self, index: usize) -> (f64, f64) {
        let z0: f64 = self.layers[..index].iter().map(|l| l.thickness).sum();
        (z0, z0 + self.layers[index].thickness)
    }

    pub fn thinnest(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    /// m
    pub origin: [f64; 3],
    /// m
    pub extent: [f64; 3],
}

impl Box3 {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.origin[i] && p[i] <= self.origin[i] + self.extent[i])
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.origin[0] && x <= self.origin[0] + self.extent[0] && y >= self.origin[1] && y <= self.origin[1] + self.extent[1]
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.origin[i] + 0.5 * self.extent[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChamberKind {
    Interaction,
    Storage,
    Channel,
}

impl ChamberKind {
    pub fn name(self) -> &'static str {
        match self {
            ChamberKind::Interaction => "interaction",
            ChamberKind::Storage => "storage",
            ChamberKind::Channel => "channel",
        }
    }
}

/// Gas-filled void etched into the silicon layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberCutout {
    pub name: ChamberKind,
    #[serde(flatten)]
    pub region: Box3,
}

impl ChamberCutout {
    pub fn validate(&self, stack: &LayerStack) -> Result<()> {
        let b = &self.region;
        if b.extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::config(format!("{} cutout has a non-positive extent", self.name.name())));
        }
        let tol = 1e-12;
        let (fx, fy) = stack.footprint;
        let fits_xy = b.origin[0] >= -tol
            && b.origin[1] >= -tol
            && b.origin[0] + b.extent[0] <= fx + tol
            && b.origin[1] + b.extent[1] <= fy + tol;
        let in_silicon = stack.layers.iter().enumerate().any(|(i, l)| {
            let (z0, z1) = stack.layer_bounds(i);
            l.material == Material::Silicon && b.origin[2] >= z0 - tol && b.origin[2] + b.extent[2] <= z1 + tol
        });
        if !fits_xy || !in_silicon {
            return Err(Error::config(format!(
                "{} cutout must lie inside the footprint and within a silicon layer",
                self.name.name()
            )));
        }
        Ok(())
    }
}
