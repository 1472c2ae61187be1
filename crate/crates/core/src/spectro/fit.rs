use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LorentzComponent, RfSpectrum};
use crate::{Error, Result};

/// Levenberg–Marquardt settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter-step tolerance.
    pub xtol: f64,
    /// Tolerance on the cosine between the residual and any Jacobian column.
    pub gtol: f64,
    pub lambda0: f64,
    /// Centre separation (fraction of span) below which two components count as coincident.
    pub degenerate_center: f64,
    /// Relative width difference below which two coincident components are degenerate.
    pub degenerate_width: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            xtol: 1e-8,
            gtol: 1e-6,
            lambda0: 1e-3,
            degenerate_center: 1e-3,
            degenerate_width: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    /// Sorted by decreasing amplitude.
    pub components: Vec<LorentzComponent>,
    /// RMS residual per quadrature, signal units.
    pub residual_rms: f64,
    pub converged: bool,
    pub degenerate: bool,
    pub iterations: usize,
    /// Parameter covariance, ordered (Re a, Im a, centre, fwhm) per component
    /// in the order of `components`.
    pub covariance: Vec<Vec<f64>>,
}

impl LorentzianFit {
    /// The component with the largest amplitude.
    pub fn dominant(&self) -> &LorentzComponent {
        &self.components[0]
    }
}

struct Data {
    f: Vec<f64>,
    z: Vec<Complex64>,
    span: f64,
}

impl Data {
    fn from_spectrum(s: &RfSpectrum) -> Result<Self> {
        s.validate()?;
        let idx = s.valid_indices();
        if idx.len() < 8 {
            return Err(Error::domain(format!("only {} valid spectrum points", idx.len())));
        }
        Ok(Self {
            f: idx.iter().map(|&i| s.frequencies[i]).collect(),
            z: idx.iter().map(|&i| Complex64::new(s.x[i], s.y[i])).collect(),
            span: s.span(),
        })
    }

    fn scale(&self) -> f64 {
        self.z.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}

/// Parameter layout per component: [Re a, Im a, centre, fwhm].
const NP: usize = 4;

fn to_params(components: &[LorentzComponent]) -> DVector<f64> {
    let mut p = DVector::zeros(NP * components.len());
    for (k, c) in components.iter().enumerate() {
        let a = c.complex_amplitude();
        p[NP * k] = a.re;
        p[NP * k + 1] = a.im;
        p[NP * k + 2] = c.center;
        p[NP * k + 3] = c.fwhm;
    }
    p
}

fn to_components(p: &DVector<f64>) -> Vec<LorentzComponent> {
    (0..p.len() / NP)
        .map(|k| LorentzComponent::from_complex(p[NP * k + 2], p[NP * k + 3], Complex64::new(p[NP * k], p[NP * k + 1])))
        .collect()
}

fn residuals(data: &Data, p: &DVector<f64>) -> DVector<f64> {
    let comps = to_components(p);
    let mut r = DVector::zeros(2 * data.f.len());
    for (i, (&f, &z)) in data.f.iter().zip(&data.z).enumerate() {
        let m = super::evaluate(&comps, f) - z;
        r[2 * i] = m.re;
        r[2 * i + 1] = m.im;
    }
    r
}

fn jacobian(data: &Data, p: &DVector<f64>) -> DMatrix<f64> {
    let n = p.len() / NP;
    let mut j = DMatrix::zeros(2 * data.f.len(), p.len());
    for (i, &f) in data.f.iter().enumerate() {
        for k in 0..n {
            let a = Complex64::new(p[NP * k], p[NP * k + 1]);
            let (c, w) = (p[NP * k + 2], p[NP * k + 3]);
            let g = 0.5 * w;
            let delta = f - c;
            let d = Complex64::new(g, delta);
            let d2 = d * d;
            let cols = [
                g / d,
                Complex64::i() * g / d,
                a * Complex64::i() * g / d2,
                a * Complex64::i() * (0.5 * delta) / d2,
            ];
            for (q, v) in cols.iter().enumerate() {
                j[(2 * i, NP * k + q)] = v.re;
                j[(2 * i + 1, NP * k + q)] = v.im;
            }
        }
    }
    j
}

fn solve_damped(a: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let max_diag = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += lambda * a[(i, i)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE);
    }
    let rhs = -g;
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(&rhs));
    }
    m.svd(true, true).solve(&rhs, 1e-14 * max_diag).ok()
}

fn relative_step(p: &DVector<f64>, step: &DVector<f64>, scale: f64) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..p.len() / NP {
        let w = p[NP * k + 3].abs();
        let a = Complex64::new(p[NP * k], p[NP * k + 1]).norm().max(1e-12 * scale).max(f64::MIN_POSITIVE);
        let da = Complex64::new(step[NP * k], step[NP * k + 1]).norm();
        worst = worst.max(da / a).max(step[NP * k + 2].abs() / w).max(step[NP * k + 3].abs() / w);
    }
    worst
}

fn gradient_cosine(j: &DMatrix<f64>, r: &DVector<f64>, g: &DVector<f64>) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    (0..j.ncols())
        .filter_map(|c| {
            let cn = j.column(c).norm();
            (cn > 0.0).then(|| g[c].abs() / (cn * rn))
        })
        .fold(0.0, f64::max)
}

fn peak_guess(data: &Data) -> LorentzComponent {
    let (k, peak) = data
        .z
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, z)| if z.norm() > bv { (i, z.norm()) } else { (bi, bv) });
    if peak == 0.0 {
        let mid = 0.5 * (data.f[0] + data.f[data.f.len() - 1]);
        return LorentzComponent { center: mid, fwhm: data.span / 10.0, amplitude: 0.0, phase: 0.0 };
    }
    let half = 0.5 * peak * peak;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k;
        for i in range {
            let (p0, p1) = (data.z[prev].norm_sqr(), data.z[i].norm_sqr());
            if p1 <= half {
                let t = (p0 - half) / (p0 - p1);
                return Some((data.f[prev] + t * (data.f[i] - data.f[prev]) - data.f[k]).abs());
            }
            prev = i;
        }
        None
    };
    let right = crossing(&mut (k + 1..data.f.len()));
    let left = crossing(&mut (0..k).rev());
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => l + r,
        (Some(h), None) | (None, Some(h)) => 2.0 * h,
        (None, None) => data.span / 4.0,
    };
    let step = data.span / data.f.len() as f64;
    LorentzComponent::from_complex(data.f[k], fwhm.max(step), data.z[k])
}

/// Complex amplitudes minimising the residual for fixed centres and widths.
fn linear_amplitudes(data: &Data, shapes: &[(f64, f64)]) -> Option<(Vec<Complex64>, f64)> {
    let n = shapes.len();
    let basis: Vec<Vec<Complex64>> = shapes
        .iter()
        .map(|&(c, w)| {
            let unit = LorentzComponent { center: c, fwhm: w, amplitude: 1.0, phase: 0.0 };
            data.f.iter().map(|&f| unit.value(f)).collect()
        })
        .collect();
    let mut gram = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(n);
    for a in 0..n {
        for b in 0..n {
            gram[(a, b)] = basis[a].iter().zip(&basis[b]).map(|(u, v)| u.conj() * v).sum();
        }
        rhs[a] = basis[a].iter().zip(&data.z).map(|(u, z)| u.conj() * z).sum();
    }
    let amps = gram.lu().solve(&rhs)?;
    let ssr: f64 = (0..data.f.len())
        .map(|i| {
            let m: Complex64 = (0..n).map(|k| amps[k] * basis[k][i]).sum();
            (m - data.z[i]).norm_sqr()
        })
        .sum();
    ssr.is_finite().then(|| (amps.iter().copied().collect(), ssr))
}

/// Starting parameters for an `n_components` fit.
pub fn initial_guess(spectrum: &RfSpectrum, n_components: usize) -> Result<Vec<LorentzComponent>> {
    let data = Data::from_spectrum(spectrum)?;
    guess(&data, n_components)
}

fn guess(data: &Data, n_components: usize) -> Result<Vec<LorentzComponent>> {
    let base = peak_guess(data);
    match n_components {
        1 => Ok(vec![base]),
        2 => {
            let mut best: Option<(f64, Vec<LorentzComponent>)> = None;
            for s in [0.5, 0.7, 0.85, 1.0] {
                for ratio in [1.5, 2.0, 3.0, 5.0, 8.0] {
                    let (w1, w2) = (base.fwhm * s, base.fwhm * s * ratio);
                    let shapes = [(base.center, w1), (base.center, w2)];
                    if let Some((amps, ssr)) = linear_amplitudes(data, &shapes) {
                        if best.as_ref().is_none_or(|(b, _)| ssr < *b) {
                            let comps = shapes
                                .iter()
                                .zip(&amps)
                                .map(|(&(c, w), &a)| LorentzComponent::from_complex(c, w, a))
                                .collect();
                            best = Some((ssr, comps));
                        }
                    }
                }
            }
            Ok(best.map(|(_, c)| c).unwrap_or_else(|| {
                vec![base, LorentzComponent { fwhm: 3.0 * base.fwhm, amplitude: 0.0, ..base }]
            }))
        }
        n => Err(Error::domain(format!("only 1 or 2 components are supported, got {n}"))),
    }
}

pub fn fit_lorentzian(
    spectrum: &RfSpectrum,
    n_components: usize,
    initial: Option<&[LorentzComponent]>,
) -> Result<LorentzianFit> {
    fit_lorentzian_with(spectrum, n_components, initial, &FitOptions::default())
}

/// Damped least-squares fit of 1 or 2 complex Lorentzians to X + iY.
pub fn fit_lorentzian_with(
    spectrum: &RfSpectrum,
    n_components: usize,
    initial: Option<&[LorentzComponent]>,
    options: &FitOptions,
) -> Result<LorentzianFit> {
    let data = Data::from_spectrum(spectrum)?;
    let start = match initial {
        Some(c) if c.len() == n_components => c.to_vec(),
        Some(c) => {
            return Err(Error::domain(format!(
                "initial guess has {} components, expected {n_components}",
                c.len()
            )))
        }
        None => guess(&data, n_components)?,
    };
    if start.iter().any(|c| !(c.fwhm > 0.0 && c.fwhm.is_finite() && c.center.is_finite())) {
        return Err(Error::domain("initial guess needs positive widths and finite centres"));
    }
    let scale = data.scale();
    let zero_residual = 1e-13 * scale * (2.0 * data.f.len() as f64).sqrt();

    let mut p = to_params(&start);
    let mut r = residuals(&data, &p);
    let mut cost = r.norm_squared();
    let mut lambda = options.lambda0;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < options.max_iterations {
        iterations += 1;
        let j = jacobian(&data, &p);
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        let gradient_ok = r.norm() <= zero_residual || gradient_cosine(&j, &r, &g) <= options.gtol;
        loop {
            let Some(step) = solve_damped(&a, &g, lambda) else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    converged = gradient_ok;
                    break 'outer;
                }
                continue;
            };
            let small = relative_step(&p, &step, scale) < options.xtol;
            let trial = &p + &step;
            let widths_ok = (0..n_components).all(|k| trial[NP * k + 3] > 0.0);
            let r_trial = if widths_ok { Some(residuals(&data, &trial)) } else { None };
            let c_trial = r_trial.as_ref().map_or(f64::INFINITY, |v| v.norm_squared());
            if c_trial < cost {
                p = trial;
                r = r_trial.unwrap_or(r);
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-15);
                if small && gradient_ok {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if small && gradient_ok {
                converged = true;
                break 'outer;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                converged = gradient_ok;
                break 'outer;
            }
        }
    }

    let n_res = r.len();
    let n_par = p.len();
    let j = jacobian(&data, &p);
    let s2 = if n_res > n_par { cost / (n_res - n_par) as f64 } else { f64::NAN };
    let jtj = j.transpose() * &j;
    let max_diag = jtj.diagonal().iter().fold(0.0_f64, |m, v| m.max(*v));
    let cov = jtj
        .pseudo_inverse(1e-14 * max_diag.max(f64::MIN_POSITIVE))
        .map(|m| m * s2)
        .unwrap_or_else(|_| DMatrix::from_element(n_par, n_par, f64::NAN));

    let comps = to_components(&p);
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| comps[b].amplitude.total_cmp(&comps[a].amplitude));
    let components: Vec<LorentzComponent> = order.iter().map(|&k| comps[k]).collect();
    let covariance = (0..n_par)
        .map(|row| {
            (0..n_par)
                .map(|col| cov[(NP * order[row / NP] + row % NP, NP * order[col / NP] + col % NP)])
                .collect()
        })
        .collect();

    let tiny = 1e3 * f64::EPSILON * scale;
    let mut degenerate = components.iter().any(|c| c.amplitude <= tiny);
    if let [c1, c2] = components.as_slice() {
        let close = (c1.center - c2.center).abs() < options.degenerate_center * data.span;
        let same_width = (c1.fwhm - c2.fwhm).abs() < options.degenerate_width * c1.fwhm.max(c2.fwhm);
        degenerate |= close && same_width;
    }

    Ok(LorentzianFit {
        components,
        residual_rms: (cost / n_res as f64).sqrt(),
        converged,
        degenerate,
        iterations,
        covariance,
    })
}
