use std::f64::consts::PI;

use crate::{Error, Result};

/// Lock-in outputs, one sample per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sample_rate: f64,
    pub reference_frequency: f64,
}

impl Demodulated {
    /// Outputs averaged over the last full reference period.
    pub fn settled(&self) -> (f64, f64) {
        let n = ((self.sample_rate / self.reference_frequency).round() as usize).clamp(1, self.x.len().max(1));
        let tail = |v: &[f64]| v[v.len() - n..].iter().sum::<f64>() / n as f64;
        (tail(&self.x), tail(&self.y))
    }
}

/// Dual-phase lock-in: mixes with cos and −sin at `reference_frequency` and
/// low-passes each product with a single-pole filter of `time_constant` s.
///
/// A tone `A cos(2π f t + φ)` settles to `(A/2 cos φ, A/2 sin φ)`.
pub fn demodulate(samples: &[f64], sample_rate: f64, reference_frequency: f64, time_constant: f64) -> Result<Demodulated> {
    if !(reference_frequency.is_finite() && reference_frequency > 0.0) {
        return Err(Error::Sampling(format!("reference frequency must be positive, got {reference_frequency}")));
    }
    if !(sample_rate.is_finite() && sample_rate > 4.0 * reference_frequency) {
        return Err(Error::Sampling(format!(
            "sample rate {sample_rate} Hz must exceed four times the reference {reference_frequency} Hz"
        )));
    }
    if !(time_constant.is_finite() && time_constant > 10.0 / reference_frequency) {
        return Err(Error::Sampling(format!(
            "time constant {time_constant} s must exceed ten reference periods"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Sampling("no samples".into()));
    }
    let dt = 1.0 / sample_rate;
    let alpha = -(-dt / time_constant).exp_m1();
    let w = 2.0 * PI * reference_frequency;
    let (mut fx, mut fy) = (0.0, 0.0);
    let mut x = Vec::with_capacity(samples.len());
    let mut y = Vec::with_capacity(samples.len());
    for (i, &s) in samples.iter().enumerate() {
        let (sin, cos) = (w * i as f64 * dt).sin_cos();
        fx += alpha * (s * cos - fx);
        fy += alpha * (-s * sin - fy);
        x.push(fx);
        y.push(fy);
    }
    Ok(Demodulated { x, y, sample_rate, reference_frequency })
}
