use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackRole {
    /// Outgoing leg of a go/return pair.
    Go,
    /// Returning leg, running alongside a go leg.
    Return,
    /// Short connection between the two legs.
    Link,
}

/// Thin-film track; current flows in vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    /// m
    pub vertices: Vec<[f64; 3]>,
    /// m
    pub width: f64,
    /// m
    pub thickness: f64,
    /// Ω·m at the reference temperature.
    pub resistivity: f64,
    /// 1/K
    pub temp_coefficient: f64,
    pub role: TrackRole,
    pub surface: Surface,
}

impl Track {
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 3], [f64; 3])> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist(a, b)).sum()
    }

    /// Ω/m at `temperature` given the reference temperature of the resistivity.
    pub fn resistance_per_length(&self, temperature: f64, reference_temperature: f64) -> f64 {
        self.resistivity * (1.0 + self.temp_coefficient * (temperature - reference_temperature))
            / (self.width * self.thickness)
    }
}

pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    /// m
    pub position: [f64; 3],
    /// Optional thermal conductance to ambient through the contact, W/K.
    pub sink_conductance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drive {
    Dc { volts: f64 },
    /// Thermally equivalent to a DC drive at the RMS voltage.
    Ac { volts_rms: f64, frequency_hz: f64 },
}

impl Drive {
    pub fn rms_volts(&self) -> f64 {
        match *self {
            Drive::Dc { volts } => volts,
            Drive::Ac { volts_rms, .. } => volts_rms,
        }
    }
}

/// Series-connected heater tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaterLayout {
    pub tracks: Vec<Track>,
    pub pins: Vec<Pin>,
    pub drive: Drive,
    /// K
    pub reference_temperature: f64,
}

/// Polyline offset to the left of its direction by `d` (mitred corners).
fn offset_polyline(points: &[[f64; 2]], d: f64) -> Vec<[f64; 2]> {
    let dir = |a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let n = dx.hypot(dy);
        [dx / n, dy / n]
    };
    let left = |t: [f64; 2]| [-t[1], t[0]];
    let n = points.len();
    (0..n)
        .map(|i| {
            let normal = if i == 0 {
                left(dir(points[0], points[1]))
            } else if i == n - 1 {
                left(dir(points[n - 2], points[n - 1]))
            } else {
                let n1 = left(dir(points[i - 1], points[i]));
                let n2 = left(dir(points[i], points[i + 1]));
                let m = [n1[0] + n2[0], n1[1] + n2[1]];
                let scale = 1.0 / (m[0] * n1[0] + m[1] * n1[1]);
                [m[0] * scale, m[1] * scale]
            };
            [points[i][0] + d * normal[0], points[i][1] + d * normal[1]]
        })
        .collect()
}

fn segments_cross(p1: [f64; 3], p2: [f64; 3], q1: [f64; 3], q2: [f64; 3]) -> bool {
    let orient = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (d1, d2) = (orient(q1, q2, p1), orient(q1, q2, p2));
    let (d3, d4) = (orient(p1, p2, q1), orient(p1, p2, q2));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

impl HeaterLayout {
    /// Go/return track pair following `centerline` (x, y in m) at height `z`.
    ///
    /// The legs sit `(gap + width) / 2` either side of the centreline and are
    /// joined at the far end. Current runs out along the go leg and back along
    /// the return leg.
    #[allow(clippy::too_many_arguments)]
    pub fn hairpin(
        centerline: &[[f64; 2]],
        surface: Surface,
        z: f64,
        width: f64,
        gap: f64,
        thickness: f64,
        resistivity: f64,
        temp_coefficient: f64,
    ) -> Vec<Track> {
        let d = 0.5 * (gap + width);
        let lift = |p: &[f64; 2]| [p[0], p[1], z];
        let go: Vec<[f64; 3]> = offset_polyline(centerline, d).iter().map(lift).collect();
        let mut back: Vec<[f64; 3]> = offset_polyline(centerline, -d).iter().map(lift).collect();
        back.reverse();
        let link = vec![*go.last().expect("centreline has points"), back[0]];
        let make = |vertices, role| Track { vertices, width, thickness, resistivity, temp_coefficient, role, surface };
        vec![make(go, TrackRole::Go), make(link, TrackRole::Link), make(back, TrackRole::Return)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.tracks.is_empty() {
            return Err(Error::config("heater has no tracks"));
        }
        for (i, t) in self.tracks.iter().enumerate() {
            if t.vertices.len() < 2 {
                return Err(Error::config(format!("track {i} needs at least two vertices")));
            }
            let ok = [t.width, t.thickness, t.resistivity].iter().all(|v| v.is_finite() && *v > 0.0);
            if !ok || !t.temp_coefficient.is_finite() {
                return Err(Error::config(format!("track {i}: width, thickness and resistivity must be positive")));
            }
            if t.segments().any(|(a, b)| dist(a, b) == 0.0) {
                return Err(Error::config(format!("track {i} has a zero-length segment")));
            }
            let segs: Vec<_> = t.segments().collect();
            for a in 0..segs.len() {
                for b in a + 2..segs.len() {
                    if segments_cross(segs[a].0, segs[a].1, segs[b].0, segs[b].1) {
                        return Err(Error::config(format!("track {i} intersects itself")));
                    }
                }
            }
        }
        if !(self.drive.rms_volts().is_finite() && self.drive.rms_volts() >= 0.0) {
            return Err(Error::config("drive voltage must be non-negative"));
        }
        if let Some(p) = self.pins.iter().find(|p| p.sink_conductance.is_some_and(|g| !(g >= 0.0))) {
            return Err(Error::config(format!("pin sink conductance must be non-negative: {p:?}")));
        }
        Ok(())
    }

    /// Total series resistance with every track at `temperature`, Ω.
    pub fn resistance_at(&self, temperature: f64) -> f64 {
        self.tracks
            .iter()
            .map(|t| t.resistance_per_length(temperature, self.reference_temperature) * t.length())
            .sum()
    }

    /// Layout with the return legs and links removed.
    pub fn without_returns(&self) -> Self {
        Self { tracks: self.tracks.iter().filter(|t| t.role == TrackRole::Go).cloned().collect(), ..self.clone() }
    }
}
