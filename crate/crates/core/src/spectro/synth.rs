use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{FlaggedPoint, NoiseModel, RfSpectrum, SweepPlan};
use crate::spin::{rate_breakdown, rf_response, steady_state, SpinModelParams};
use crate::{Error, Result};

/// Lock-in X/Y spectrum of the model swept across the F=4 resonance.
///
/// Each diffusion mode of `params` contributes its own resonance, weighted by
/// the mode weight. Points whose model evaluation fails are flagged and carry
/// NaN values. Noise is white, Gaussian and independent in X and Y.
pub fn synthesize_spectrum(params: &SpinModelParams, plan: &SweepPlan, noise: &NoiseModel) -> Result<RfSpectrum> {
    plan.validate()?;
    noise.validate()?;
    params.validate()?;

    let components = params.mode_components();
    if let Ok(state) = steady_state(&components[0].0) {
        let fwhm = rate_breakdown(&components[0].0, &state)?.fwhm_hz();
        if plan.span < 3.0 * fwhm {
            log::warn!("sweep span {:.3} Hz covers less than 3 linewidths ({fwhm:.3} Hz)", plan.span);
        }
    }

    let rotation = Complex64::from_polar(params.calib.probe_gain * params.column_density(), -params.calib.lockin_phase);
    let sigma = noise.point_sigma(plan.dwell);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(format!("noise model: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);

    let frequencies = plan.frequencies();
    let mut x = Vec::with_capacity(frequencies.len());
    let mut y = Vec::with_capacity(frequencies.len());
    let mut flagged = Vec::new();
    for (index, &f) in frequencies.iter().enumerate() {
        let detuning = f - params.field.larmor_frequency;
        let response: Result<Complex64> = components
            .iter()
            .map(|(p, w)| rf_response(p, detuning).map(|t4| *w * t4))
            .sum();
        let (nx, ny) = (normal.sample(&mut rng), normal.sample(&mut rng));
        match response {
            Ok(t4) => {
                let z = rotation * t4;
                x.push(z.re + nx);
                y.push(z.im + ny);
            }
            Err(e) => {
                x.push(f64::NAN);
                y.push(f64::NAN);
                flagged.push(FlaggedPoint { index, error: e.to_string() });
            }
        }
    }

    let metadata = serde_json::json!({
        "sweep": plan,
        "noise": noise,
        "point_sigma": sigma,
        "temperature_k": params.vapor.temperature,
        "pump_power_w": params.pump.power,
        "larmor_hz": params.field.larmor_frequency,
        "rf_amplitude_hz": params.field.rf_amplitude,
        "components": components.len(),
    });
    Ok(RfSpectrum { frequencies, x, y, flagged, metadata })
}
