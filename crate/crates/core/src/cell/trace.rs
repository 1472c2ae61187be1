use serde::{Deserialize, Serialize};

use super::{ChamberKind, ThermalField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Arc length along the path, m.
    pub distance: f64,
    pub x: f64,
    pub y: f64,
    /// K
    pub temperature: f64,
    /// Chamber lying under the point, if any.
    pub region: Option<ChamberKind>,
}

/// Temperature along a polyline on the top surface, sampled every `step`
/// metres (vertices always included).
pub fn line_trace(field: &ThermalField, path: &[[f64; 2]], step: f64) -> Result<Vec<TracePoint>> {
    if path.len() < 2 {
        return Err(Error::domain("trace path needs at least two vertices"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(format!("trace step must be positive, got {step}")));
    }
    let (fx, fy) = field.footprint();
    let tol = 1e-12;
    if let Some(p) = path.iter().find(|p| !(p[0] >= -tol && p[0] <= fx + tol && p[1] >= -tol && p[1] <= fy + tol)) {
        return Err(Error::domain(format!("trace vertex {p:?} lies outside the {fx} × {fy} m footprint")));
    }
    let z = field.height();
    let mut out = Vec::new();
    let mut travelled = 0.0;
    for (s, w) in path.windows(2).enumerate() {
        let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        let n = ((len / step).ceil() as usize).max(1);
        let first = if s == 0 { 0 } else { 1 };
        for m in first..=n {
            let u = m as f64 / n as f64;
            let (x, y) = (w[0][0] + u * (w[1][0] - w[0][0]), w[0][1] + u * (w[1][1] - w[0][1]));
            let region = field.cutouts.iter().find(|c| c.region.contains_xy(x, y)).map(|c| c.name);
            out.push(TracePoint {
                distance: travelled + u * len,
                x,
                y,
                temperature: field.sample([x.clamp(0.0, fx), y.clamp(0.0, fy), z])?,
                region,
            });
        }
        travelled += len;
    }
    Ok(out)
}

/// Indices of strict local maxima that stand at least `prominence` above the
/// lowest point between them and every higher neighbouring peak.
pub fn local_maxima(trace: &[TracePoint], prominence: f64) -> Vec<usize> {
    let t: Vec<f64> = trace.iter().map(|p| p.temperature).collect();
    let n = t.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if t[i] > t[i - 1] {
            let mut j = i;
            while j + 1 < n && t[j + 1] == t[i] {
                j += 1;
            }
            if j + 1 < n && t[j + 1] < t[i] {
                let left = t[..i].iter().rev().take_while(|v| **v <= t[i]).fold(t[i], |a, b| a.min(*b));
                let right = t[j + 1..].iter().take_while(|v| **v <= t[i]).fold(t[i], |a, b| a.min(*b));
                if t[i] - left.max(right) >= prominence {
                    peaks.push((i + j) / 2);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}
