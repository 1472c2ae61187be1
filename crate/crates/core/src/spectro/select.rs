use serde::{Deserialize, Serialize};

use super::{fit_lorentzian_with, FitOptions, LorentzianFit, RfSpectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions {
    /// Required reduction of the residual RMS before two components are accepted.
    pub improvement_factor: f64,
    /// Single-component residuals below this fraction of the peak signal are
    /// treated as exact and never justify a second component.
    pub residual_floor: f64,
    pub fit: FitOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { improvement_factor: 1.3, residual_floor: 1e-9, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub n_components: usize,
    pub single: Option<LorentzianFit>,
    pub double: Option<LorentzianFit>,
}

impl ModelSelection {
    /// Fit of the selected model.
    pub fn chosen(&self) -> &LorentzianFit {
        let fit = if self.n_components == 2 { &self.double } else { &self.single };
        fit.as_ref().expect("selected fit is present")
    }
}

pub fn select_model(spectrum: &RfSpectrum) -> Result<ModelSelection> {
    select_model_with(spectrum, &SelectionOptions::default())
}

pub fn select_model_with(spectrum: &RfSpectrum, options: &SelectionOptions) -> Result<ModelSelection> {
    let single = fit_lorentzian_with(spectrum, 1, None, &options.fit)?;
    let double = fit_lorentzian_with(spectrum, 2, None, &options.fit).ok();
    let double_ok = double.as_ref().is_some_and(|d| d.converged);
    if !single.converged && !double_ok {
        return Err(Error::Selection("neither the one- nor the two-component fit converged".into()));
    }
    let peak = spectrum
        .valid_indices()
        .iter()
        .map(|&i| spectrum.x[i].hypot(spectrum.y[i]))
        .fold(0.0_f64, f64::max);
    let prefer_double = match &double {
        Some(d) if d.converged && !d.degenerate => {
            !single.converged
                || (single.residual_rms > options.residual_floor * peak
                    && single.residual_rms > options.improvement_factor * d.residual_rms)
        }
        _ => false,
    };
    let n_components = if prefer_double { 2 } else { 1 };
    Ok(ModelSelection { n_components, single: Some(single), double })
}
