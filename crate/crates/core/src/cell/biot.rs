use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Box3, HeaterLayout};
use crate::consts::VACUUM_PERMEABILITY;
use crate::{Error, Result};

/// Closest approach to a track below which the field is treated as singular, m.
const SINGULAR_DISTANCE: f64 = 1e-9;

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Field at `point` of a straight filament from `start` to `end` carrying
/// `current` (A) in that direction, T.
pub fn segment_field(start: [f64; 3], end: [f64; 3], current: f64, point: [f64; 3]) -> Result<[f64; 3]> {
    let a = sub(start, point);
    let b = sub(end, point);
    let seg = sub(end, start);
    let l2 = dot(seg, seg);
    let u = if l2 > 0.0 { (-dot(a, seg) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let closest = [a[0] + u * seg[0], a[1] + u * seg[1], a[2] + u * seg[2]];
    if norm(closest) < SINGULAR_DISTANCE {
        return Err(Error::domain(format!("field point {point:?} lies on a current segment")));
    }
    let (la, lb) = (norm(a), norm(b));
    let denom = la * lb * (la * lb + dot(a, b));
    let axb = cross(a, b);
    if denom <= 0.0 || norm(axb) == 0.0 {
        return Ok([0.0; 3]);
    }
    let k = VACUUM_PERMEABILITY * current / (4.0 * std::f64::consts::PI) * (la + lb) / denom;
    Ok([k * axb[0], k * axb[1], k * axb[2]])
}

/// Field of all heater tracks in series carrying `current`, T.
pub fn heater_b_field(heater: &HeaterLayout, current: f64, point: [f64; 3]) -> Result<[f64; 3]> {
    let mut total = [0.0; 3];
    for track in &heater.tracks {
        for (a, b) in track.segments() {
            let f = segment_field(a, b, current, point)?;
            for i in 0..3 {
                total[i] += f[i];
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    /// m
    pub position: [f64; 3],
    /// T
    pub b: [f64; 3],
}

impl FieldSample {
    pub fn magnitude(&self) -> f64 {
        norm(self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberFieldSummary {
    /// A
    pub current: f64,
    pub samples_per_axis: usize,
    /// T
    pub max_abs_b: f64,
    pub mean_abs_b: f64,
    pub center_b: [f64; 3],
    pub center_abs_b: f64,
    /// Same quantities with the return legs removed.
    pub unpaired_max_abs_b: f64,
    pub unpaired_center_abs_b: f64,
    /// Unpaired over paired |B| at the chamber centre.
    pub suppression_ratio: f64,
}

fn box_points(region: &Box3, n: usize) -> Vec<[f64; 3]> {
    let mut pts = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let f = |m: usize, d: usize| region.origin[d] + region.extent[d] * (m as f64 + 0.5) / n as f64;
                pts.push([f(i, 0), f(j, 1), f(k, 2)]);
            }
        }
    }
    pts
}

fn magnitudes(heater: &HeaterLayout, current: f64, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    points.par_iter().map(|p| heater_b_field(heater, current, *p).map(norm)).collect()
}

/// |B| on an `samples`³ cell-centred grid filling `chamber`, compared with the
/// same layout stripped of its return legs.
pub fn chamber_field_figure(
    heater: &HeaterLayout,
    current: f64,
    chamber: &Box3,
    samples: usize,
) -> Result<ChamberFieldSummary> {
    heater.validate()?;
    if samples == 0 {
        return Err(Error::config("chamber field figure needs at least one sample per axis"));
    }
    let points = box_points(chamber, samples);
    let paired = magnitudes(heater, current, &points)?;
    let bare = heater.without_returns();
    let unpaired = magnitudes(&bare, current, &points)?;
    let center = chamber.center();
    let center_b = heater_b_field(heater, current, center)?;
    let center_abs_b = norm(center_b);
    let unpaired_center_abs_b = norm(heater_b_field(&bare, current, center)?);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(ChamberFieldSummary {
        current,
        samples_per_axis: samples,
        max_abs_b: max(&paired),
        mean_abs_b: paired.iter().sum::<f64>() / paired.len() as f64,
        center_b,
        center_abs_b,
        unpaired_max_abs_b: max(&unpaired),
        unpaired_center_abs_b,
        suppression_ratio: if center_abs_b > 0.0 { unpaired_center_abs_b / center_abs_b } else { f64::INFINITY },
    })
}

/// Field on a regular nx × ny grid over the rectangle `[x0, x1] × [y0, y1]`
/// at height `z`, row-major in y.
pub fn field_map(
    heater: &HeaterLayout,
    current: f64,
    x: (f64, f64),
    y: (f64, f64),
    z: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<FieldSample>> {
    if nx < 2 || ny < 2 {
        return Err(Error::config("field map needs at least 2 × 2 points"));
    }
    let points: Vec<[f64; 3]> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                [
                    x.0 + (x.1 - x.0) * i as f64 / (nx - 1) as f64,
                    y.0 + (y.1 - y.0) * j as f64 / (ny - 1) as f64,
                    z,
                ]
            })
        })
        .collect();
    points
        .par_iter()
        .map(|p| heater_b_field(heater, current, *p).map(|b| FieldSample { position: *p, b }))
        .collect()
}
