use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CellConfig;
use crate::seed;
use crate::spectro::{select_model, synthesize_spectrum, NoiseModel, SweepPlan};
use crate::spin::{rate_breakdown, steady_state};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    PumpPower,
    Temperature,
    Larmor,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::PumpPower => "pump_power",
            ScanAxis::Temperature => "temperature",
            ScanAxis::Larmor => "larmor",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            ScanAxis::PumpPower => "W",
            ScanAxis::Temperature => "K",
            ScanAxis::Larmor => "Hz",
        }
    }

    fn tag(self) -> u64 {
        match self {
            ScanAxis::PumpPower => 1,
            ScanAxis::Temperature => 2,
            ScanAxis::Larmor => 3,
        }
    }
}

/// How the frequency sweep is laid out at each scan point. The sweep is
/// always centred on the Larmor frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub points: usize,
    /// s
    pub dwell: f64,
    /// Span as a multiple of the model FWHM at the scan point.
    pub span_fwhm_multiple: Option<f64>,
    /// Fixed span, Hz.
    pub span_hz: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        match (self.span_fwhm_multiple, self.span_hz) {
            (Some(m), None) if m.is_finite() && m >= 3.0 => {}
            (None, Some(s)) if s.is_finite() && s > 0.0 => {}
            (Some(_), None) => return Err(Error::config("span_fwhm_multiple must be at least 3")),
            (None, Some(_)) => return Err(Error::config("span_hz must be positive")),
            _ => return Err(Error::config("exactly one of span_fwhm_multiple and span_hz must be set")),
        }
        self.plan(0.0, 1.0).validate()
    }

    pub fn plan(&self, center: f64, model_fwhm: f64) -> SweepPlan {
        let span = match (self.span_hz, self.span_fwhm_multiple) {
            (Some(s), _) => s,
            (None, Some(m)) => m * model_fwhm,
            (None, None) => f64::NAN,
        };
        SweepPlan { center, span, points: self.points, dwell: self.dwell }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    /// W, K or Hz according to the axis.
    pub values: Vec<f64>,
    pub base: CellConfig,
    pub master_seed: u64,
    pub repeats: usize,
}

impl ScanConfig {
    pub fn new(axis: ScanAxis, values: Vec<f64>, base: CellConfig, master_seed: u64, repeats: usize) -> Result<Self> {
        let cfg = Self { axis, values, base, master_seed, repeats };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(format!("{} scan has no values", self.axis.name())));
        }
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] <= w[0]) || sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("scan values must be finite and distinct"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        self.base.sweep_spec().validate()?;
        self.base.noise_model().validate()?;
        for &v in &self.values {
            self.base.with_axis_value(self.axis, v).spin_params()?;
        }
        Ok(())
    }

    /// Noise seed of one (value, repeat) record; keyed by value so that
    /// reordering the values does not change any record.
    pub fn point_seed(&self, value: f64, repeat: usize) -> u64 {
        seed::derive(self.master_seed, &[self.axis.tag(), value.to_bits(), repeat as u64])
    }
}

/// One synthesised and fitted spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub axis_value: f64,
    pub repeat: usize,
    pub seed: u64,
    pub ok: bool,
    pub n_components: usize,
    pub amplitude: f64,
    pub fwhm_hz: f64,
    pub center_hz: f64,
    pub phase_rad: f64,
    pub fwhm_stderr_hz: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub degenerate: bool,
    pub flagged_points: usize,
    /// Linewidth of the rate model at this point, FWHM in Hz.
    pub model_fwhm_hz: f64,
    pub error: String,
}

impl ScanRecord {
    fn failed(axis_value: f64, repeat: usize, seed: u64, error: &Error) -> Self {
        Self {
            axis_value,
            repeat,
            seed,
            ok: false,
            n_components: 0,
            amplitude: f64::NAN,
            fwhm_hz: f64::NAN,
            center_hz: f64::NAN,
            phase_rad: f64::NAN,
            fwhm_stderr_hz: f64::NAN,
            residual_rms: f64::NAN,
            converged: false,
            degenerate: false,
            flagged_points: 0,
            model_fwhm_hz: f64::NAN,
            error: error.to_string(),
        }
    }
}

/// Fitted parameters averaged over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub axis_value: f64,
    pub n_ok: usize,
    pub amplitude: f64,
    pub fwhm_hz: f64,
    /// Spread across repeats, or the fit standard error for a single repeat.
    pub fwhm_sigma_hz: f64,
    pub center_hz: f64,
    pub model_fwhm_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis: ScanAxis,
    pub master_seed: u64,
    pub repeats: usize,
    pub config: CellConfig,
    pub records: Vec<ScanRecord>,
    /// One per value, sorted by axis value.
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    pub fn axis_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.axis_value).collect()
    }

    pub fn fwhm(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fwhm_hz).collect()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.amplitude).collect()
    }

    pub fn point_nearest(&self, value: f64) -> Option<&ScanPoint> {
        self.points
            .iter()
            .filter(|p| p.n_ok > 0)
            .min_by(|a, b| (a.axis_value - value).abs().total_cmp(&(b.axis_value - value).abs()))
    }
}

/// Synthesises and fits one spectrum of the scan.
pub fn evaluate_point(config: &ScanConfig, value: f64, repeat: usize) -> ScanRecord {
    let seed = config.point_seed(value, repeat);
    match evaluate_inner(config, value, seed) {
        Ok(mut r) => {
            r.repeat = repeat;
            r
        }
        Err(e) => ScanRecord::failed(value, repeat, seed, &e),
    }
}

fn evaluate_inner(config: &ScanConfig, value: f64, seed: u64) -> Result<ScanRecord> {
    let cell = config.base.with_axis_value(config.axis, value);
    let params = cell.spin_params()?;
    let lowest = &params.mode_components()[0].0;
    let model_fwhm = rate_breakdown(lowest, &steady_state(lowest)?)?.fwhm_hz();
    let plan = cell.sweep_spec().plan(params.field.larmor_frequency, model_fwhm);
    let noise = NoiseModel { seed, ..cell.noise_model() };
    let spectrum = synthesize_spectrum(&params, &plan, &noise)?;
    let selection = select_model(&spectrum)?;
    let fit = selection.chosen();
    let c = fit.dominant();
    let fwhm_var = fit.covariance.get(3).and_then(|row| row.get(3)).copied().unwrap_or(f64::NAN);
    Ok(ScanRecord {
        axis_value: value,
        repeat: 0,
        seed,
        ok: fit.converged,
        n_components: selection.n_components,
        amplitude: c.amplitude,
        fwhm_hz: c.fwhm,
        center_hz: c.center,
        phase_rad: c.phase,
        fwhm_stderr_hz: fwhm_var.max(0.0).sqrt(),
        residual_rms: fit.residual_rms,
        converged: fit.converged,
        degenerate: fit.degenerate,
        flagged_points: spectrum.flagged.len(),
        model_fwhm_hz: model_fwhm,
        error: if fit.converged { String::new() } else { "fit did not converge".into() },
    })
}

fn aggregate(value: f64, records: &[ScanRecord]) -> ScanPoint {
    let ok: Vec<&ScanRecord> = records.iter().filter(|r| r.ok).collect();
    let n = ok.len();
    let mean = |f: &dyn Fn(&ScanRecord) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    let fwhm = mean(&|r| r.fwhm_hz);
    let sigma = if n > 1 {
        (ok.iter().map(|r| (r.fwhm_hz - fwhm).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        mean(&|r| r.fwhm_stderr_hz)
    };
    ScanPoint {
        axis_value: value,
        n_ok: n,
        amplitude: mean(&|r| r.amplitude),
        fwhm_hz: fwhm,
        fwhm_sigma_hz: sigma,
        center_hz: mean(&|r| r.center_hz),
        model_fwhm_hz: records.iter().map(|r| r.model_fwhm_hz).find(|v| v.is_finite()).unwrap_or(f64::NAN),
    }
}

pub fn run_scan(config: &ScanConfig) -> Result<ScanResult> {
    run_scan_with_workers(config, None)
}

/// Runs the scan on a pool of `workers` threads (the global pool if `None`).
/// Records are merged in (value, repeat) order, so the result does not depend
/// on the worker count.
pub fn run_scan_with_workers(config: &ScanConfig, workers: Option<usize>) -> Result<ScanResult> {
    config.validate()?;
    let tasks: Vec<(f64, usize)> = config
        .values
        .iter()
        .flat_map(|&v| (0..config.repeats).map(move |r| (v, r)))
        .collect();
    let work = || -> Vec<ScanRecord> { tasks.par_iter().map(|&(v, r)| evaluate_point(config, v, r)).collect() };
    let records = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    let failed = records.iter().filter(|r| !r.ok).count();
    for r in records.iter().filter(|r| !r.ok) {
        log::warn!("{} = {}: {}", config.axis.name(), r.axis_value, r.error);
    }
    if 2 * failed > records.len() {
        return Err(Error::ScanFailed { failed, total: records.len() });
    }
    let mut points: Vec<ScanPoint> = config
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| aggregate(v, &records[i * config.repeats..(i + 1) * config.repeats]))
        .collect();
    points.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
    Ok(ScanResult {
        axis: config.axis,
        master_seed: config.master_seed,
        repeats: config.repeats,
        config: config.base.clone(),
        records,
        points,
    })
}
