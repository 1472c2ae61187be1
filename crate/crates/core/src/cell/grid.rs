use super::{ChamberCutout, HeaterLayout, LayerStack, Material, Surface};
use crate::{Error, Result};

/// Cartesian voxel grid: uniform in x and y, layer-conforming in z.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct VoxelGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    /// nz + 1 face heights, m.
    pub z_faces: Vec<f64>,
    /// W/(m·K)
    pub conductivity: Vec<f64>,
    /// 0 for solid, otherwise 1 + cutout index.
    pub region: Vec<u8>,
}

impl VoxelGrid {
    pub fn build(stack: &LayerStack, cutouts: &[ChamberCutout], pitch: f64, gas_conductivity: f64) -> Result<Self> {
        stack.validate()?;
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::config(format!("grid pitch must be positive, got {pitch}")));
        }
        if stack.thinnest() < 2.0 * pitch * (1.0 - 1e-9) {
            return Err(Error::config(format!(
                "grid pitch {pitch} m does not resolve the thinnest layer ({} m) with two voxels",
                stack.thinnest()
            )));
        }
        if !(gas_conductivity.is_finite() && gas_conductivity > 0.0) {
            return Err(Error::config("gas conductivity must be positive"));
        }
        for c in cutouts {
            c.validate(stack)?;
        }
        if cutouts.len() > 254 {
            return Err(Error::config("too many cutouts"));
        }
        let (fx, fy) = stack.footprint;
        let nx = ((fx / pitch).round() as usize).max(2);
        let ny = ((fy / pitch).round() as usize).max(2);
        let mut z_faces = vec![0.0];
        let mut layer_of = Vec::new();
        for (li, layer) in stack.layers.iter().enumerate() {
            let n = ((layer.thickness / pitch).round() as usize).max(2);
            let (z0, _) = stack.layer_bounds(li);
            for k in 1..=n {
                z_faces.push(z0 + layer.thickness * k as f64 / n as f64);
                layer_of.push(li);
            }
        }
        let nz = layer_of.len();
        let (dx, dy) = (fx / nx as f64, fy / ny as f64);
        let mut conductivity = vec![0.0; nx * ny * nz];
        let mut region = vec![0u8; nx * ny * nz];
        for k in 0..nz {
            let zc = 0.5 * (z_faces[k] + z_faces[k + 1]);
            let layer = &stack.layers[layer_of[k]];
            for j in 0..ny {
                for i in 0..nx {
                    let p = [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy, zc];
                    let idx = i + nx * (j + ny * k);
                    let hit = cutouts.iter().position(|c| c.region.contains(p));
                    conductivity[idx] = match (hit, layer.material) {
                        (Some(_), _) | (None, Material::Gas) => gas_conductivity,
                        _ => layer.conductivity,
                    };
                    region[idx] = hit.map_or(0, |h| h as u8 + 1);
                }
            }
        }
        Ok(Self { nx, ny, nz, dx, dy, z_faces, conductivity, region })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn dz(&self, k: usize) -> f64 {
        self.z_faces[k + 1] - self.z_faces[k]
    }

    pub fn height(&self) -> f64 {
        self.z_faces[self.nz]
    }

    /// Voxel containing (x, y) in layer `k`, clamped to the grid.
    pub fn column(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x / self.dx).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((y / self.dy).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    pub fn layer_at(&self, z: f64) -> usize {
        self.z_faces[1..].iter().position(|&f| z < f).unwrap_or(self.nz - 1)
    }

    /// Surface voxel layer receiving heat from a track on `surface`.
    pub fn surface_layer(&self, surface: Surface) -> usize {
        match surface {
            Surface::Top => self.nz - 1,
            Surface::Bottom => 0,
        }
    }
}

/// Conductance network of the grid with Robin boundaries.
#[derive(Debug, Clone)]
pub(crate) struct Conductances {
    /// To the +x, +y, +z neighbour (0 at the far boundary).
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub gz: Vec<f64>,
    /// To ambient through exterior faces and pin sinks.
    pub boundary: Vec<f64>,
    pub diag: Vec<f64>,
}

impl Conductances {
    pub fn build(grid: &VoxelGrid, h: f64, sinks: &[(usize, f64)]) -> Self {
        let n = grid.len();
        let (mut gx, mut gy, mut gz) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut boundary = vec![0.0; n];
        let k_of = &grid.conductivity;
        let robin = |area: f64, half: f64, k: f64| area / (half / k + 1.0 / h);
        for k in 0..grid.nz {
            let dz = grid.dz(k);
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let a = grid.index(i, j, k);
                    let ka = k_of[a];
                    let ax = grid.dy * dz;
                    let ay = grid.dx * dz;
                    let az = grid.dx * grid.dy;
                    if i + 1 < grid.nx {
                        let b = a + 1;
                        gx[a] = ax / (0.5 * grid.dx / ka + 0.5 * grid.dx / k_of[b]);
                    }
                    if j + 1 < grid.ny {
                        let b = grid.index(i, j + 1, k);
                        gy[a] = ay / (0.5 * grid.dy / ka + 0.5 * grid.dy / k_of[b]);
                    }
                    if k + 1 < grid.nz {
                        let b = grid.index(i, j, k + 1);
                        gz[a] = az / (0.5 * dz / ka + 0.5 * grid.dz(k + 1) / k_of[b]);
                    }
                    if h > 0.0 {
                        let faces_x = (i == 0) as u8 + (i + 1 == grid.nx) as u8;
                        let faces_y = (j == 0) as u8 + (j + 1 == grid.ny) as u8;
                        let faces_z = (k == 0) as u8 + (k + 1 == grid.nz) as u8;
                        boundary[a] = faces_x as f64 * robin(ax, 0.5 * grid.dx, ka)
                            + faces_y as f64 * robin(ay, 0.5 * grid.dy, ka)
                            + faces_z as f64 * robin(az, 0.5 * dz, ka);
                    }
                }
            }
        }
        for &(idx, g) in sinks {
            boundary[idx] += g;
        }
        let mut diag = boundary.clone();
        let (sy, sz) = (grid.nx, grid.nx * grid.ny);
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let a = grid.index(i, j, k);
                    diag[a] += gx[a] + gy[a] + gz[a];
                    if i > 0 {
                        diag[a] += gx[a - 1];
                    }
                    if j > 0 {
                        diag[a] += gy[a - sy];
                    }
                    if k > 0 {
                        diag[a] += gz[a - sz];
                    }
                }
            }
        }
        Self { gx, gy, gz, boundary, diag }
    }
}

/// One piece of track: resistance depends on the mean temperature of the
/// voxels it covers, and its Joule power is shared equally between them.
#[derive(Debug, Clone)]
pub(crate) struct JouleElement {
    pub voxels: Vec<usize>,
    /// Length / (width · thickness), 1/m.
    pub geometry: f64,
    pub resistivity: f64,
    pub temp_coefficient: f64,
}

pub(crate) fn joule_elements(grid: &VoxelGrid, heater: &HeaterLayout) -> Vec<JouleElement> {
    let h = grid.dx.min(grid.dy);
    let mut out = Vec::new();
    for track in &heater.tracks {
        let k = grid.surface_layer(track.surface);
        let across = ((4.0 * track.width / h).ceil() as usize).max(3);
        for (a, b) in track.segments() {
            let len = super::heater::dist(a, b);
            let along = ((4.0 * len / h).ceil() as usize).max(1);
            let (tx, ty) = ((b[0] - a[0]) / len, (b[1] - a[1]) / len);
            let (nx, ny) = (-ty, tx);
            for s in 0..along {
                let u = (s as f64 + 0.5) / along as f64;
                let (cx, cy) = (a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]));
                let voxels = (0..across)
                    .map(|c| {
                        let v = ((c as f64 + 0.5) / across as f64 - 0.5) * track.width;
                        let (i, j) = grid.column(cx + v * nx, cy + v * ny);
                        grid.index(i, j, k)
                    })
                    .collect();
                out.push(JouleElement {
                    voxels,
                    geometry: len / along as f64 / (track.width * track.thickness),
                    resistivity: track.resistivity,
                    temp_coefficient: track.temp_coefficient,
                });
            }
        }
    }
    out
}
