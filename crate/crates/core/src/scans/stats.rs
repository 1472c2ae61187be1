use serde::{Deserialize, Serialize};

use super::{ScanAxis, ScanResult};
use crate::consts::ZERO_CELSIUS_K;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: Estimate,
    pub intercept: Estimate,
}

impl LinearFit {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept.value + self.slope.value * x
    }
}

/// Weighted least-squares straight line. Weights are 1/σ²; without usable σ
/// all points are weighted equally. Uncertainties are scaled by the reduced χ².
pub fn linear_fit(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::domain(format!("linear fit needs at least 3 paired points, got {}", x.len())));
    }
    let usable = sigma.filter(|s| s.len() == x.len() && s.iter().all(|v| v.is_finite() && *v > 0.0));
    let w: Vec<f64> = match usable {
        Some(s) => s.iter().map(|v| 1.0 / (v * v)).collect(),
        None => vec![1.0; x.len()],
    };
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if !(det.abs() > 0.0) {
        return Err(Error::domain("linear fit abscissae are degenerate"));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((w, x), y)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let red = chi2 / (x.len() - 2) as f64;
    Ok(LinearFit {
        slope: Estimate { value: slope, uncertainty: (red * sw / det).sqrt() },
        intercept: Estimate { value: intercept, uncertainty: (red * sxx / det).sqrt() },
    })
}

/// (Γ(≈100 µW) − min Γ) / Γ(≈100 µW) over a pump-power scan, with the minimum
/// taken over powers at and above the reference point.
pub fn relative_narrowing(result: &ScanResult) -> Result<f64> {
    if result.axis != ScanAxis::PumpPower {
        return Err(Error::domain("relative narrowing needs a pump-power scan"));
    }
    let x = result.axis_values();
    let ok: Vec<bool> = result.points.iter().map(|p| p.n_ok > 0).collect();
    let f: Vec<f64> = result.fwhm().iter().zip(&ok).map(|(v, o)| if *o { *v } else { f64::NAN }).collect();
    relative_narrowing_from(&x, &f, 100e-6)
}

/// Relative narrowing of a linewidth curve `fwhm(power)` referenced to the
/// point nearest `reference_power`.
pub fn relative_narrowing_from(power: &[f64], fwhm: &[f64], reference_power: f64) -> Result<f64> {
    let reference = power
        .iter()
        .zip(fwhm)
        .enumerate()
        .filter(|(_, (_, f))| f.is_finite())
        .min_by(|a, b| (a.1 .0 / reference_power).ln().abs().total_cmp(&(b.1 .0 / reference_power).ln().abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::domain("scan has no successful points"))?;
    let p_ref = power[reference];
    if (p_ref / reference_power).ln().abs() > 1.5f64.ln() {
        return Err(Error::domain(format!(
            "no scan point within a factor 1.5 of {reference_power} W (nearest {p_ref} W)"
        )));
    }
    let beyond: Vec<f64> = power
        .iter()
        .zip(fwhm)
        .filter(|(p, f)| **p >= p_ref && f.is_finite())
        .map(|(_, f)| *f)
        .collect();
    if beyond.len() < 2 {
        return Err(Error::domain("scan does not extend beyond the reference power"));
    }
    let g0 = fwhm[reference];
    let min = beyond.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(((g0 - min) / g0).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimumLocation {
    pub axis: ScanAxis,
    pub temperature_k: f64,
    pub larmor_hz: f64,
    /// Axis units.
    pub location: f64,
    pub min_fwhm_hz: f64,
    /// False if the lowest point is at either end of the scan.
    pub interior: bool,
}

/// Linewidth minimum by a parabola through the lowest point and its two
/// neighbours (in log axis for pump power).
pub fn minimum_location(result: &ScanResult) -> Result<MinimumLocation> {
    let pts: Vec<_> = result.points.iter().filter(|p| p.n_ok > 0 && p.fwhm_hz.is_finite()).collect();
    if pts.is_empty() {
        return Err(Error::domain("scan has no successful points"));
    }
    let log_axis = result.axis == ScanAxis::PumpPower;
    let tx = |v: f64| if log_axis { v.log10() } else { v };
    let k = (0..pts.len()).min_by(|&a, &b| pts[a].fwhm_hz.total_cmp(&pts[b].fwhm_hz)).unwrap_or(0);
    let interior = k > 0 && k + 1 < pts.len();
    let (location, min_fwhm) = if interior {
        let (x0, x1, x2) = (tx(pts[k - 1].axis_value), tx(pts[k].axis_value), tx(pts[k + 1].axis_value));
        let (y0, y1, y2) = (pts[k - 1].fwhm_hz, pts[k].fwhm_hz, pts[k + 1].fwhm_hz);
        let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
        let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        let xv = if den != 0.0 { (x1 - 0.5 * num / den).clamp(x0.min(x2), x0.max(x2)) } else { x1 };
        (if log_axis { 10f64.powf(xv) } else { xv }, y1)
    } else {
        (pts[k].axis_value, pts[k].fwhm_hz)
    };
    Ok(MinimumLocation {
        axis: result.axis,
        temperature_k: result.config.temperature_k,
        larmor_hz: result.config.field.larmor_hz,
        location,
        min_fwhm_hz: min_fwhm,
        interior,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarrowingPoint {
    pub temperature_k: f64,
    pub larmor_hz: f64,
    pub relative_narrowing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendStats {
    pub relative_narrowing: Vec<NarrowingPoint>,
    /// Exponent of relative narrowing against temperature in °C.
    pub narrowing_exponent: Option<Estimate>,
    /// Low-pump linewidth slope over 40–90 °C, Hz/°C.
    pub low_power_slope: Option<Estimate>,
    pub minimum_locations: Vec<MinimumLocation>,
}

const SLOPE_RANGE_C: (f64, f64) = (40.0, 90.0);
const EXPONENT_RANGE_C: (f64, f64) = (90.0, 120.0);
const LOW_PUMP_W: (f64, f64) = (100e-6, 200e-6);

/// Trend statistics over a family of scans. Statistics without enough data
/// are reported as absent.
pub fn trend_stats(results: &[ScanResult]) -> TrendStats {
    let tol = 1e-9;
    let celsius = |k: f64| k - ZERO_CELSIUS_K;

    let (mut tx, mut ty, mut ts) = (Vec::new(), Vec::new(), Vec::new());
    for r in results.iter().filter(|r| r.axis == ScanAxis::Temperature) {
        let p = r.config.pump.power_w;
        if p < LOW_PUMP_W.0 * (1.0 - tol) || p > LOW_PUMP_W.1 * (1.0 + tol) {
            continue;
        }
        for pt in r.points.iter().filter(|pt| pt.n_ok > 0) {
            let t = celsius(pt.axis_value);
            if t >= SLOPE_RANGE_C.0 - tol && t <= SLOPE_RANGE_C.1 + tol {
                tx.push(t);
                ty.push(pt.fwhm_hz);
                ts.push(pt.fwhm_sigma_hz);
            }
        }
    }
    let low_power_slope = linear_fit(&tx, &ty, Some(&ts)).ok().map(|f| f.slope);

    let mut narrowing = Vec::new();
    let mut minimum_locations = Vec::new();
    for r in results {
        if r.axis == ScanAxis::PumpPower {
            if let Ok(v) = relative_narrowing(r) {
                narrowing.push(NarrowingPoint {
                    temperature_k: r.config.temperature_k,
                    larmor_hz: r.config.field.larmor_hz,
                    relative_narrowing: v,
                });
            }
        }
        if let Ok(m) = minimum_location(r) {
            minimum_locations.push(m);
        }
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = narrowing
        .iter()
        .filter(|n| {
            let t = celsius(n.temperature_k);
            t >= EXPONENT_RANGE_C.0 - tol && t <= EXPONENT_RANGE_C.1 + tol && n.relative_narrowing > 0.0
        })
        .map(|n| (celsius(n.temperature_k).ln(), n.relative_narrowing.ln()))
        .unzip();
    let narrowing_exponent = if lx.len() >= 4 { linear_fit(&lx, &ly, None).ok().map(|f| f.slope) } else { None };

    TrendStats { relative_narrowing: narrowing, narrowing_exponent, low_power_slope, minimum_locations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_fixture_slope() {
        let x: Vec<f64> = (0..6).map(|i| 40.0 + 10.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 200.0 + 40.0 * (t - 40.0)).collect();
        let fit = linear_fit(&x, &y, None).unwrap();
        assert!((fit.slope.value - 40.0).abs() < 0.1);
        assert!(fit.slope.uncertainty >= 0.0);
    }

    #[test]
    fn quadratic_narrowing_exponent() {
        let t = [90.0f64, 100.0, 110.0, 120.0];
        let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = t.iter().map(|v| (3e-5 * v * v).ln()).collect();
        let fit = linear_fit(&lx, &ly, None).unwrap();
        assert!((fit.slope.value - 2.0).abs() < 0.05);
    }

    #[test]
    fn monotone_scan_has_no_narrowing() {
        let p = [50e-6, 100e-6, 200e-6, 400e-6, 800e-6];
        let f = [100.0, 101.0, 105.0, 120.0, 150.0];
        assert_eq!(relative_narrowing_from(&p, &f, 100e-6).unwrap(), 0.0);
    }

    #[test]
    fn narrowing_requires_reference_point() {
        let p = [1e-3, 2e-3, 4e-3];
        let f = [100.0, 90.0, 95.0];
        assert!(relative_narrowing_from(&p, &f, 100e-6).is_err());
    }

    proptest! {
        #[test]
        fn narrowing_in_unit_interval(f in proptest::collection::vec(1.0f64..1e4, 6)) {
            let p = [30e-6, 100e-6, 300e-6, 1e-3, 3e-3, 1e-2];
            let v = relative_narrowing_from(&p, &f, 100e-6).unwrap();
            prop_assert!((0.0..1.0).contains(&v));
        }

        #[test]
        fn weighted_fit_recovers_exact_line(a in -100.0f64..100.0, b in -5.0f64..5.0, s in 0.1f64..10.0) {
            let x: Vec<f64> = (0..7).map(|i| i as f64).collect();
            let y: Vec<f64> = x.iter().map(|x| a + b * x).collect();
            let sig: Vec<f64> = x.iter().map(|x| s * (1.0 + x)).collect();
            let fit = linear_fit(&x, &y, Some(&sig)).unwrap();
            prop_assert!((fit.slope.value - b).abs() < 1e-9 * (1.0 + b.abs() + a.abs()));
        }
    }
}
