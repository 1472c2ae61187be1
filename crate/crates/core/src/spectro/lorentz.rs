use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex Lorentzian `A e^{iφ} γ / (γ + i(f − f₀))` with γ = fwhm / 2.
///
/// The amplitude is the on-resonance magnitude. The real part of the bracket
/// is the absorptive profile whose full width at half maximum is `fwhm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzComponent {
    /// Hz
    pub center: f64,
    /// Hz
    pub fwhm: f64,
    pub amplitude: f64,
    /// rad
    pub phase: f64,
}

impl LorentzComponent {
    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn from_complex(center: f64, fwhm: f64, a: Complex64) -> Self {
        Self { center, fwhm, amplitude: a.norm(), phase: a.arg() }
    }

    pub fn value(&self, frequency: f64) -> Complex64 {
        let g = 0.5 * self.fwhm;
        self.complex_amplitude() * g / Complex64::new(g, frequency - self.center)
    }
}

pub fn evaluate(components: &[LorentzComponent], frequency: f64) -> Complex64 {
    components.iter().map(|c| c.value(frequency)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn absorptive_half_width() {
        let c = LorentzComponent { center: 100.0, fwhm: 10.0, amplitude: 2.0, phase: 0.0 };
        assert_relative_eq!(c.value(100.0).re, 2.0);
        assert_relative_eq!(c.value(105.0).re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(c.value(95.0).re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(c.value(105.0).norm_sqr(), 2.0, max_relative = 1e-14);
    }
}
