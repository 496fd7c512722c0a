//! Error metrics, equivariance errors, spectra and distribution estimates.

use std::io::Write;

use ndarray::Array2;

use crate::closures::train::{weighted_distance_sq, weighted_norm_sq, TrainingSample};
use crate::closures::ClosureModel;
use crate::error::{Error, Result};
use crate::group::{act_on_sym_field, act_on_tensor_field, enumerate_group, ORDER};
use crate::par;
use crate::simulation::{self, LesConfig, StepPolicy};
use crate::spectral::{self, SpectralVelocity};
use crate::tensor3::{matmul, to_sym, trace, Mat3, Sym6, SYM_WEIGHT};
use crate::tensor_basis::split;

pub const KOLMOGOROV_CONSTANT: f64 = 1.6;

/// `‖a‖/‖b‖` with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn relative_norm(num_sq: f64, den_sq: f64) -> f64 {
    if den_sq > 0.0 {
        (num_sq / den_sq).sqrt()
    } else if num_sq == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Mean over snapshots of `‖m(ū) − τ‖ / ‖τ‖`.
pub fn apriori_tensor_error(model: &ClosureModel, samples: &[TrainingSample], delta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no snapshots to evaluate".into()));
    }
    let total: f64 = samples
        .iter()
        .map(|s| {
            let m = model.stress(&s.a, delta);
            (weighted_distance_sq(&m, &s.tau) / s.norm_sq).sqrt()
        })
        .sum();
    Ok(total / samples.len() as f64)
}

/// Per-time relative solution error of an LES trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionError {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    /// False when the trajectory stopped early.
    pub complete: bool,
}

impl SolutionError {
    /// Time average, or `None` for an incomplete trajectory.
    pub fn mean(&self) -> Option<f64> {
        if !self.complete || self.errors.is_empty() {
            return None;
        }
        Some(self.errors.iter().sum::<f64>() / self.errors.len() as f64)
    }
}

/// `‖S_t − ū_t‖ / ‖ū_t‖` for each time the trajectory reached.
pub fn aposteriori_solution_error(
    trajectory: &[SpectralVelocity],
    reference: &[SpectralVelocity],
    times: &[f64],
) -> Result<SolutionError> {
    if reference.len() != times.len() {
        return Err(Error::ShapeMismatch {
            expected: times.len(),
            actual: reference.len(),
        });
    }
    let errors = trajectory
        .iter()
        .take(reference.len())
        .zip(reference)
        .map(|(s, u)| s.relative_distance(u))
        .collect::<Vec<_>>();
    Ok(SolutionError {
        times: times[..errors.len()].to_vec(),
        complete: errors.len() == reference.len(),
        errors,
    })
}

/// Relative error for each of the 48 group elements.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    pub per_element: Vec<f64>,
    /// False when every comparison was `0/0` or a run failed.
    pub defined: bool,
}

impl EquivarianceReport {
    pub fn undefined() -> Self {
        EquivarianceReport {
            per_element: vec![f64::NAN; ORDER],
            defined: false,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        self.defined
            .then(|| self.per_element.iter().sum::<f64>() / ORDER as f64)
    }
}

/// `‖g·m(ū) − m(g·ū)‖ / ‖m(g·ū)‖` for every element, with the group acting
/// exactly on the gradient field `Ā` of `ū`.
pub fn equivariance_error_prior(model: &ClosureModel, a: &[Mat3], grid: &crate::grid::Grid, delta: f64) -> EquivarianceReport {
    let base = model.stress(a, delta);
    let mut any_nonzero = false;
    let per_element = enumerate_group()
        .into_iter()
        .map(|g| {
            let moved = model.stress(&act_on_tensor_field(g, grid, a), delta);
            let rotated = act_on_sym_field(g, grid, &base);
            let den = weighted_norm_sq(&moved);
            any_nonzero |= den > 0.0;
            relative_norm(weighted_distance_sq(&rotated, &moved), den)
        })
        .collect();
    EquivarianceReport {
        per_element,
        defined: any_nonzero,
    }
}

/// `‖g·S_t(ū₀) − S_t(g·ū₀)‖ / ‖S_t(g·ū₀)‖`. The untransformed run uses
/// `config`; every transformed run replays its steps and forcing targets.
pub fn equivariance_error_post(
    model: &ClosureModel,
    u0: &SpectralVelocity,
    t: f64,
    delta: f64,
    config: &LesConfig,
) -> Result<EquivarianceReport> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("evaluation time must be positive, got {t}")));
    }
    let closure = |v: &SpectralVelocity| model.spectral_stress(v, delta);
    let times = [0.0, t];
    let reference = simulation::run_les(u0, &times, config, closure);
    if reference.instability.is_some() {
        return Ok(EquivarianceReport::undefined());
    }
    let end = reference.states.last().unwrap();
    let replay = LesConfig {
        policy: StepPolicy::Replay(reference.steps.clone()),
        targets: Some(config.targets.clone().unwrap_or_else(|| {
            simulation::ForcingTargets::from_field(&reference.states[0], 2)
        })),
        ..config.clone()
    };
    let mut per_element = Vec::with_capacity(ORDER);
    for g in enumerate_group() {
        let run = simulation::run_les(&spectral::act_on_spectral_field(g, u0), &times, &replay, closure);
        if run.instability.is_some() {
            return Ok(EquivarianceReport::undefined());
        }
        let moved = run.states.last().unwrap();
        let mut diff = spectral::act_on_spectral_field(g, end);
        diff.axpy(-1.0, moved);
        per_element.push(relative_norm(diff.norm().powi(2), moved.norm().powi(2)));
    }
    Ok(EquivarianceReport {
        per_element,
        defined: true,
    })
}

/// Shell energies `E(κ)` for `κ = 0, 1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub energy: Vec<f64>,
}

impl SpectrumResult {
    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }

    /// `(κη, ε^{-2/3} η^{-5/3} E)` per shell, with `κ` in units of the base
    /// wavenumber `kb`.
    pub fn normalized(&self, eps: f64, nu: f64, kb: f64) -> Vec<(f64, f64)> {
        let eta = kolmogorov_length(nu, eps);
        self.energy
            .iter()
            .enumerate()
            .map(|(k, e)| (k as f64 * kb * eta, eps.powf(-2.0 / 3.0) * eta.powf(-5.0 / 3.0) * e))
            .collect()
    }
}

pub fn energy_spectrum(u: &SpectralVelocity) -> SpectrumResult {
    SpectrumResult {
        energy: simulation::shell_energies(u),
    }
}

/// Element-wise mean of several spectra (shorter ones padded with zeros).
pub fn mean_spectrum(spectra: &[SpectrumResult]) -> SpectrumResult {
    let len = spectra.iter().map(|s| s.energy.len()).max().unwrap_or(0);
    let mut energy = vec![0.0; len];
    for s in spectra {
        for (a, b) in energy.iter_mut().zip(&s.energy) {
            *a += b;
        }
    }
    let n = spectra.len().max(1) as f64;
    energy.iter_mut().for_each(|e| *e /= n);
    SpectrumResult { energy }
}

/// `η = (ν³/ε)^{1/4}`.
pub fn kolmogorov_length(nu: f64, eps: f64) -> f64 {
    (nu.powi(3) / eps).powf(0.25)
}

/// `C ε^{2/3} κ^{-5/3}`.
pub fn kolmogorov_spectrum(kappa: f64, eps: f64) -> f64 {
    KOLMOGOROV_CONSTANT * eps.powf(2.0 / 3.0) * kappa.powf(-5.0 / 3.0)
}

/// Pointwise `m_ij S̄_ij`.
pub fn dissipation_coefficient(m: &[Sym6], a: &[Mat3]) -> Result<Vec<f64>> {
    if m.len() != a.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            actual: m.len(),
        });
    }
    let mut out = vec![0.0; m.len()];
    par::fill_indexed(&mut out, |i| {
        let s = to_sym(&split(&a[i]).0);
        (0..6).map(|c| SYM_WEIGHT[c] * m[i][c] * s[c]).sum()
    });
    Ok(out)
}

/// `q = −½ tr(AA)` and `r = −⅓ tr(AAA)` at every point.
pub fn qr_invariants(a: &[Mat3]) -> (Vec<f64>, Vec<f64>) {
    let mut q = vec![0.0; a.len()];
    let mut r = vec![0.0; a.len()];
    par::fill_indexed(&mut q, |i| -0.5 * trace(&matmul(&a[i], &a[i])));
    par::fill_indexed(&mut r, |i| {
        let a2 = matmul(&a[i], &a[i]);
        -trace(&matmul(&a2, &a[i])) / 3.0
    });
    (q, r)
}

/// Time average of the inverse root-mean-square Frobenius norm of the
/// gradient fields.
pub fn t_scale(fields: &[Vec<Mat3>]) -> Result<f64> {
    if fields.is_empty() {
        return Err(Error::InvalidArgument("no gradient fields".into()));
    }
    let mut total = 0.0;
    for a in fields {
        let ms = par::sum_range(a.len(), |i| a[i].iter().flatten().map(|v| v * v).sum::<f64>())
            / a.len() as f64;
        if ms <= 0.0 {
            return Err(Error::InvalidArgument("gradient field vanishes identically".into()));
        }
        total += 1.0 / ms.sqrt();
    }
    Ok(total / fields.len() as f64)
}

/// Both branches of `(r/2)² + (q/3)³ = 0` for `q ∈ [q_min, 0]`, as `(r, q)`.
pub fn vieillefosse_curve(q_min: f64, points: usize) -> Vec<(f64, f64)> {
    let qs = linspace(q_min, 0.0, points);
    let mut out: Vec<(f64, f64)> = qs.iter().map(|&q| (-2.0 * (-q / 3.0).powf(1.5), q)).collect();
    out.extend(qs.iter().rev().map(|&q| (2.0 * (-q / 3.0).powf(1.5), q)));
    out
}

/// Contour levels `10^{-4} … 10^{1}`, log-spaced.
pub fn contour_levels() -> [f64; 7] {
    std::array::from_fn(|i| 10f64.powf(-4.0 + 5.0 * i as f64 / 6.0))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Stride keeping at most `max` of `len` samples.
pub fn subsample_stride(len: usize, max: usize) -> usize {
    len.div_ceil(max.max(1)).max(1)
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Silverman's rule `1.06 σ n^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("density estimation needs at least two samples".into()));
    }
    let (_, sd) = mean_std(samples);
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::InvalidArgument("samples have zero variance".into()));
    }
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

/// `[μ − 5σ, μ + 5σ]`.
pub fn sample_window(samples: &[f64]) -> Result<(f64, f64)> {
    silverman_bandwidth(samples)?;
    let (m, s) = mean_std(samples);
    Ok((m - 5.0 * s, m + 5.0 * s))
}

fn gaussian(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian kernel density of `samples` at the `grid` points.
pub fn kde_1d(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / (samples.len() as f64 * h);
    Ok(par::map_range(grid.len(), |i| {
        norm * samples.iter().map(|s| gaussian((grid[i] - s) / h)).sum::<f64>()
    }))
}

/// Product-kernel density of `(x, y)` pairs on the `gx × gy` grid; entry
/// `[i][j]` is the density at `(gx[i], gy[j])`.
pub fn kde_2d(x: &[f64], y: &[f64], gx: &[f64], gy: &[f64]) -> Result<Array2<f64>> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let hx = silverman_bandwidth(x)?;
    let hy = silverman_bandwidth(y)?;
    const BLOCK: usize = 4096;
    let blocks = par::map_range(x.len().div_ceil(BLOCK), |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(x.len());
        let kx = Array2::from_shape_fn((gx.len(), hi - lo), |(i, s)| gaussian((gx[i] - x[lo + s]) / hx));
        let ky = Array2::from_shape_fn((hi - lo, gy.len()), |(s, j)| gaussian((gy[j] - y[lo + s]) / hy));
        kx.dot(&ky)
    });
    let mut out = Array2::zeros((gx.len(), gy.len()));
    for b in blocks {
        out += &b;
    }
    out /= x.len() as f64 * hx * hy;
    Ok(out)
}

/// Trapezoidal integral of samples on a uniform grid.
pub fn integrate_1d(grid: &[f64], f: &[f64]) -> f64 {
    grid.windows(2)
        .zip(f.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum()
}

/// Trapezoidal integral over a uniform rectangular grid.
pub fn integrate_2d(gx: &[f64], gy: &[f64], f: &Array2<f64>) -> f64 {
    let rows: Vec<f64> = f.rows().into_iter().map(|r| integrate_1d(gy, r.as_slice().unwrap())).collect();
    integrate_1d(gx, &rows)
}

/// Comma-separated output with `N.A.` for undefined numbers.
pub struct CsvWriter<W: Write> {
    inner: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut inner: W, header: &[&str]) -> Result<Self> {
        writeln!(inner, "{}", header.join(","))?;
        Ok(CsvWriter { inner })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        writeln!(self.inner, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Number formatting shared by all CSV outputs.
pub fn cell(v: f64) -> String {
    if v.is_nan() {
        "N.A.".to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "N.A.".to_string(), cell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_norm_cases() {
        assert_eq!(relative_norm(0.0, 0.0), 0.0);
        assert_eq!(relative_norm(1.0, 0.0), f64::INFINITY);
        assert_eq!(relative_norm(4.0, 1.0), 2.0);
    }

    #[test]
    fn qr_of_diagonal() {
        let (q, r) = qr_invariants(&[[[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0; 3]]]);
        assert_eq!(q[0], -1.0);
        assert_eq!(r[0], 0.0);
        let (q, r) = qr_invariants(&[[[0.0; 3]; 3]]);
        assert_eq!((q[0], r[0]), (0.0, 0.0));
    }

    #[test]
    fn contour_levels_span() {
        let l = contour_levels();
        assert!((l[0] - 1e-4).abs() < 1e-18);
        assert!((l[6] - 10.0).abs() < 1e-13);
    }

    #[test]
    fn vieillefosse_points_lie_on_curve() {
        for (r, q) in vieillefosse_curve(-10.0, 101) {
            assert!(((r / 2.0).powi(2) + (q / 3.0).powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_integrates_to_one() {
        let s: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64 / 101.0 - 0.5) * 2.0).collect();
        let (lo, hi) = sample_window(&s).unwrap();
        let g = linspace(lo, hi, 512);
        let d = kde_1d(&s, &g).unwrap();
        assert!((integrate_1d(&g, &d) - 1.0).abs() < 0.02);
        assert!(kde_1d(&[1.0], &g).is_err());
        assert!(kde_1d(&[1.0, 1.0], &g).is_err());
    }

    #[test]
    fn csv_cells() {
        assert_eq!(cell(f64::NAN), "N.A.");
        assert_eq!(opt_cell(None), "N.A.");
        assert_eq!(cell(0.5), "5e-1");
    }
}
