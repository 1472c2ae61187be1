use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Hz
    pub center: f64,
    /// Hz
    pub span: f64,
    pub points: usize,
    /// Time spent per frequency point, s.
    pub dwell: f64,
}

impl SweepPlan {
    pub const MIN_POINTS: usize = 16;

    pub fn validate(&self) -> Result<()> {
        if !(self.span.is_finite() && self.span > 0.0) {
            return Err(Error::config(format!("sweep span must be positive, got {}", self.span)));
        }
        if self.points < Self::MIN_POINTS {
            return Err(Error::config(format!(
                "sweep needs at least {} points, got {}",
                Self::MIN_POINTS,
                self.points
            )));
        }
        if !(self.dwell.is_finite() && self.dwell > 0.0) {
            return Err(Error::config(format!("dwell must be positive, got {}", self.dwell)));
        }
        if !self.center.is_finite() {
            return Err(Error::config("sweep centre must be finite"));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let start = self.center - 0.5 * self.span;
        let step = self.span / (self.points - 1) as f64;
        (0..self.points).map(|i| start + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Signal units per √Hz.
    pub white_noise_rms: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { white_noise_rms: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.white_noise_rms.is_finite() && self.white_noise_rms >= 0.0) {
            return Err(Error::config(format!("noise rms must be non-negative, got {}", self.white_noise_rms)));
        }
        Ok(())
    }

    /// Standard deviation of each quadrature after averaging for `dwell` s.
    pub fn point_sigma(&self, dwell: f64) -> f64 {
        self.white_noise_rms / (2.0 * dwell).sqrt()
    }
}

/// A sweep point whose model evaluation failed. Its X and Y are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfSpectrum {
    pub frequencies: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub flagged: Vec<FlaggedPoint>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct Row {
    frequency_hz: f64,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    points: usize,
    #[serde(default)]
    flagged: Vec<FlaggedPoint>,
    #[serde(default)]
    metadata: serde_json::Value,
}

impl RfSpectrum {
    pub fn new(frequencies: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let s = Self { frequencies, x, y, flagged: Vec::new(), metadata: serde_json::Value::Null };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.frequencies.len() || self.y.len() != self.frequencies.len() {
            return Err(Error::domain(format!(
                "spectrum columns differ in length: {} / {} / {}",
                self.frequencies.len(),
                self.x.len(),
                self.y.len()
            )));
        }
        if self.frequencies.iter().any(|f| !f.is_finite()) {
            return Err(Error::domain("spectrum frequencies must be finite"));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("spectrum frequencies must be strictly increasing"));
        }
        Ok(())
    }

    /// Indices of points with finite X and Y.
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.x[i].is_finite() && self.y[i].is_finite()).collect()
    }

    pub fn span(&self) -> f64 {
        match (self.frequencies.first(), self.frequencies.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.len() {
            w.serialize(Row { frequency_hz: self.frequencies[i], x: self.x[i], y: self.y[i] })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let sidecar = Sidecar { points: self.len(), flagged: self.flagged.clone(), metadata: self.metadata.clone() };
        std::fs::write(path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    /// Reads a spectrum CSV and, if present, its JSON sidecar.
    pub fn read(csv_path: &Path, sidecar_path: Option<&Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(csv_path)?;
        let (mut frequencies, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.deserialize() {
            let row: Row = row?;
            frequencies.push(row.frequency_hz);
            x.push(row.x);
            y.push(row.y);
        }
        let mut s = Self { frequencies, x, y, flagged: Vec::new(), metadata: serde_json::Value::Null };
        if let Some(p) = sidecar_path {
            let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            if sidecar.points != s.len() {
                return Err(Error::domain(format!(
                    "sidecar describes {} points but the CSV has {}",
                    sidecar.points,
                    s.len()
                )));
            }
            s.flagged = sidecar.flagged;
            s.metadata = sidecar.metadata;
        }
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_frequencies_are_centred() {
        let p = SweepPlan { center: 1000.0, span: 100.0, points: 21, dwell: 0.1 };
        let f = p.frequencies();
        assert_eq!(f.len(), 21);
        assert_eq!(f[0], 950.0);
        assert_eq!(f[10], 1000.0);
        assert_eq!(f[20], 1050.0);
    }

    #[test]
    fn plan_validation() {
        let ok = SweepPlan { center: 0.0, span: 1.0, points: 16, dwell: 1.0 };
        assert!(ok.validate().is_ok());
        assert!(SweepPlan { points: 15, ..ok }.validate().is_err());
        assert!(SweepPlan { span: 0.0, ..ok }.validate().is_err());
        assert!(SweepPlan { dwell: -1.0, ..ok }.validate().is_err());
    }

    #[test]
    fn spectrum_invariants() {
        assert!(RfSpectrum::new(vec![1.0, 2.0], vec![0.0; 2], vec![0.0; 2]).is_ok());
        assert!(RfSpectrum::new(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(RfSpectrum::new(vec![1.0, 2.0], vec![0.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = RfSpectrum::new(vec![1.0, 2.5, 4.0], vec![0.1, -0.2, f64::NAN], vec![1e-9, 2.0, f64::NAN]).unwrap();
        s.flagged.push(FlaggedPoint { index: 2, error: "boom".into() });
        s.metadata = serde_json::json!({"temperature_k": 383.15});
        let (c, j) = (dir.path().join("s.csv"), dir.path().join("s.json"));
        s.write_csv(&c).unwrap();
        s.write_sidecar(&j).unwrap();
        let back = RfSpectrum::read(&c, Some(&j)).unwrap();
        assert_eq!(back.frequencies, s.frequencies);
        assert_eq!(back.x[..2], s.x[..2]);
        assert!(back.x[2].is_nan());
        assert_eq!(back.flagged, s.flagged);
        assert_eq!(back.metadata, s.metadata);
        let header = std::fs::read_to_string(&c).unwrap();
        assert!(header.starts_with("frequency_hz,x,y\n"));
    }
}
