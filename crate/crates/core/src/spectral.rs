//! Jump densities on `R^d`: characteristic functions, convolution powers at the
//! origin and their large-`j` tails.
//!
//! Fourier convention: `φ̂(t) = ∫ φ(x) exp(-2πi x·t) dx`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{domain, numeric, param, Error, Result};
use crate::lattice::QuadForm;

/// `ln(1e-18)`: terms below this relative size are dropped from spectral sums.
pub(crate) const LN_NEGLIGIBLE: f64 = -41.45;

#[derive(Debug)]
pub enum JumpDensity {
    Gaussian(Gaussian),
    Tabulated(Tabulated),
}

/// Centred Gaussian with covariance `Σ`.
#[derive(Clone, Debug)]
pub struct Gaussian {
    cov: DMatrix<f64>,
    cov_inv: DMatrix<f64>,
    sqrt_cov: DMatrix<f64>,
    det: f64,
}

impl Gaussian {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        if d == 0 || cov.ncols() != d {
            return param("covariance must be a non-empty square matrix");
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return param("covariance has non-finite entries");
        }
        let scale = cov.amax();
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return param("covariance is not symmetric");
                }
            }
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        if cov.clone().cholesky().is_none() {
            return param("covariance is not positive definite");
        }
        let eig = SymmetricEigen::new(cov.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return param("covariance is not positive definite");
        }
        let v = &eig.eigenvectors;
        let sqrt_cov = v * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * v.transpose();
        let cov_inv = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * v.transpose();
        let det = eig.eigenvalues.iter().product();
        Ok(Self { cov, cov_inv, sqrt_cov, det })
    }

    pub fn isotropic(d: usize, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return param(format!("variance must be positive, got {variance}"));
        }
        Self::new(DMatrix::identity(d, d) * variance)
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.cov_inv
    }

    /// Symmetric square root `A` with `A² = Σ`.
    pub fn sqrt_cov(&self) -> &DMatrix<f64> {
        &self.sqrt_cov
    }

    pub(crate) fn fourier_form(&self) -> QuadForm {
        QuadForm::new(self.cov.clone())
    }

    pub(crate) fn real_form(&self) -> QuadForm {
        QuadForm::new(self.cov_inv.clone())
    }
}

/// Cached characteristic-function samples, keyed by period.
type ModeCache = Mutex<HashMap<u64, Arc<Vec<(Complex64, Complex64)>>>>;

/// A one-dimensional density tabulated on a uniform grid, normalised by the
/// trapezoid rule and shifted to mean zero.
#[derive(Debug)]
pub struct Tabulated {
    xs: Vec<f64>,
    /// Trapezoid weight times density value; sums to one.
    mass: Vec<f64>,
    step: f64,
    span: f64,
    variance: f64,
    env_dt: f64,
    env_abs: Vec<f64>,
    env_suffix_max: Vec<f64>,
    modes: ModeCache,
}

impl Tabulated {
    pub fn grid(&self) -> &[f64] {
        &self.xs
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Normalised density values on the (re-centred) grid.
    pub fn values(&self) -> Vec<f64> {
        let n = self.mass.len();
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| if i == 0 || i + 1 == n { 2.0 * m / self.step } else { m / self.step })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.xs.iter().zip(&self.mass).map(|(x, m)| x * m).sum()
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `(φ̂(t), 1 - φ̂(t))`, the second computed without cancellation.
    pub(crate) fn char_pair(&self, t: f64) -> (Complex64, Complex64) {
        let (mut c, mut s, mut one_minus_c) = (0.0, 0.0, 0.0);
        for (&x, &m) in self.xs.iter().zip(&self.mass) {
            let a = 2.0 * PI * x * t;
            let (sa, ca) = a.sin_cos();
            let half = (0.5 * a).sin();
            c += m * ca;
            s += m * sa;
            one_minus_c += m * 2.0 * half * half;
        }
        (Complex64::new(c, -s), Complex64::new(one_minus_c, s))
    }

    fn t_limit(&self) -> f64 {
        self.env_dt * (self.env_abs.len() - 1) as f64
    }

    /// Smallest `t` beyond which `|φ̂|^j` stays below `1e-18` on the sampled envelope.
    pub(crate) fn decay_cutoff(&self, j: u64) -> f64 {
        let thr = LN_NEGLIGIBLE / j as f64;
        let idx = self.env_suffix_max.partition_point(|&m| m > 0.0 && m.ln() >= thr);
        (idx as f64 * self.env_dt).min(self.t_limit())
    }

    /// Estimate of `∫_{|t|>T} |φ̂|^j dt`: the sampled envelope up to the
    /// last sample, then a `C/t²` envelope fitted on the outer half.
    fn tail_bound(&self, j: u64, t_cut: f64) -> f64 {
        let last = self.env_abs.len() - 1;
        let t_lim = self.t_limit();
        let jf = j as f64;
        let start = (t_cut / self.env_dt).floor() as usize;
        let sampled: f64 = self.env_suffix_max[start.min(last)..]
            .iter()
            .map(|m| m.powf(jf) * self.env_dt)
            .sum();
        let c = (last / 2..=last)
            .map(|i| self.env_abs[i] * (i as f64 * self.env_dt).powi(2))
            .fold(0.0f64, f64::max);
        let outer = if c == 0.0 {
            0.0
        } else {
            (jf * c.ln() + (1.0 - 2.0 * jf) * t_lim.ln() - (2.0 * jf - 1.0).ln()).exp()
        };
        2.0 * (sampled + outer)
    }

    /// `(φ̂(k/period), 1 - φ̂(k/period))` for `k = 0..=k_max`, cached per period.
    pub(crate) fn modes(&self, period: f64, k_max: usize) -> Arc<Vec<(Complex64, Complex64)>> {
        let key = period.to_bits();
        let mut cache = self.modes.lock().expect("mode cache poisoned");
        let entry = cache.entry(key).or_insert_with(|| Arc::new(Vec::new()));
        if entry.len() <= k_max {
            let start = entry.len();
            let fresh = crate::par::map_indexed(k_max + 1 - start, |i| self.char_pair((start + i) as f64 / period));
            let mut all = Vec::with_capacity(k_max + 1);
            all.extend_from_slice(entry);
            all.extend(fresh);
            *entry = Arc::new(all);
        }
        Arc::clone(entry)
    }

    fn conv_zero(&self, j: u64) -> Result<f64> {
        let width = 2.0 * (self.span + 12.0 * (self.variance * j as f64).sqrt());
        let period = 2f64.powi(width.log2().ceil() as i32);
        let t_cut = self.decay_cutoff(j);
        let bound = self.tail_bound(j, t_cut);
        let k_max = (period * t_cut).floor() as usize;
        let modes = self.modes(period, k_max);
        let mut sum = 0.0;
        for (v, _) in modes[1..=k_max].iter().rev() {
            sum += v.powu(j as u32).re;
        }
        let value = (1.0 + 2.0 * sum) / period;
        if !(bound <= 1e-9 * value.abs()) {
            return numeric(format!(
                "characteristic function decays too slowly for j = {j}: tail bound {bound:e}"
            ));
        }
        Ok(value)
    }
}

/// Builds a tabulated density from a uniform grid and non-negative values
/// proportional to the density. The result is normalised and re-centred.
pub fn make_tabulated(grid: &[f64], values: &[f64]) -> Result<JumpDensity> {
    let n = grid.len();
    if n < 3 || values.len() != n {
        return param("tabulated density needs at least three grid points and matching values");
    }
    let step = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return param("grid must be increasing");
    }
    for (i, &x) in grid.iter().enumerate() {
        if (x - (grid[0] + i as f64 * step)).abs() > 1e-9 * step.max(x.abs()) {
            return param("grid must be uniformly spaced");
        }
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return param("density values must be finite and non-negative");
    }
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return param("density is identically zero");
    }
    if values[0] > 1e-10 * peak || values[n - 1] > 1e-10 * peak {
        return param("density is not negligible at the grid boundary");
    }
    let mut mass: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 || i + 1 == n { 0.5 * step * v } else { step * v })
        .collect();
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    let mean: f64 = grid.iter().zip(&mass).map(|(x, m)| x * m).sum();
    let xs: Vec<f64> = grid.iter().map(|x| x - mean).collect();
    let variance: f64 = xs.iter().zip(&mass).map(|(x, m)| x * x * m).sum();
    if !(variance > 0.0) {
        return param("density has zero variance");
    }
    let span = xs[0].abs().max(xs[n - 1].abs());

    let mut tab = Tabulated {
        xs,
        mass,
        step,
        span,
        variance,
        env_dt: 0.0,
        env_abs: Vec::new(),
        env_suffix_max: Vec::new(),
        modes: Mutex::new(HashMap::new()),
    };
    let t_max = 0.25 / step;
    let dt = (1.0 / (8.0 * span)).max(t_max / 20_000.0);
    let samples = (t_max / dt).ceil() as usize + 1;
    let env_abs = crate::par::map_indexed(samples, |i| tab.char_pair(i as f64 * dt).0.norm());
    let mut suffix = env_abs.clone();
    for i in (0..samples - 1).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }
    tab.env_dt = dt;
    tab.env_abs = env_abs;
    tab.env_suffix_max = suffix;
    Ok(JumpDensity::Tabulated(tab))
}

/// Reads a two-column CSV (`x`, `value`), with or without a header row.
pub fn load_tabulated_csv(path: impl AsRef<Path>) -> Result<JumpDensity> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return param(format!("row {row} has fewer than two columns"));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if row == 0 => continue,
            _ => return param(format!("row {row} is not numeric")),
        }
    }
    make_tabulated(&xs, &vs)
}

impl JumpDensity {
    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        Gaussian::new(cov).map(Self::Gaussian)
    }

    pub fn isotropic(d: usize, variance: f64) -> Result<Self> {
        Gaussian::isotropic(d, variance).map(Self::Gaussian)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.cov.nrows(),
            Self::Tabulated(_) => 1,
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        match self {
            Self::Gaussian(g) => g.cov.clone(),
            Self::Tabulated(t) => DMatrix::from_element(1, 1, t.variance),
        }
    }

    pub fn det_cov(&self) -> f64 {
        match self {
            Self::Gaussian(g) => g.det,
            Self::Tabulated(t) => t.variance,
        }
    }

    /// `σ²` in one dimension; the first diagonal entry otherwise.
    pub fn variance_1d(&self) -> f64 {
        self.covariance()[(0, 0)]
    }

    pub fn char_fn(&self, t: &[f64]) -> Result<Complex64> {
        if t.len() != self.dim() {
            return param(format!("frequency has dimension {}, density has {}", t.len(), self.dim()));
        }
        Ok(match self {
            Self::Gaussian(g) => {
                let v = nalgebra::DVector::from_column_slice(t);
                let q = (v.transpose() * &g.cov * &v)[(0, 0)];
                Complex64::new((-2.0 * PI * PI * q).exp(), 0.0)
            }
            Self::Tabulated(tab) => tab.char_pair(t[0]).0,
        })
    }

    /// Local limit approximation `(2πj)^{-d/2} det(Σ)^{-1/2}` of `φ^{*j}(0)`.
    pub fn conv_zero_clt(&self, j: f64) -> f64 {
        let d = self.dim() as f64;
        (2.0 * PI * j).powf(-0.5 * d) / self.det_cov().sqrt()
    }

    /// `φ^{*j}(0)`: closed form for Gaussians, Fourier inversion otherwise.
    pub fn conv_zero(&self, j: u64) -> Result<f64> {
        if j == 0 {
            return param("convolution power must be at least 1");
        }
        match self {
            Self::Gaussian(_) => Ok(self.conv_zero_clt(j as f64)),
            Self::Tabulated(t) => t.conv_zero(j),
        }
    }

    /// `φ^{*j}(0)` by periodised trapezoid quadrature of `φ̂^j`, for any density.
    pub fn conv_zero_fourier(&self, j: u64) -> Result<f64> {
        if j == 0 {
            return param("convolution power must be at least 1");
        }
        match self {
            Self::Tabulated(t) => t.conv_zero(j),
            Self::Gaussian(g) => {
                let d = self.dim();
                let sd = g.cov.diagonal().max().sqrt();
                let width = 2.0 * 12.0 * sd * (j as f64).sqrt();
                let period = 2f64.powi(width.log2().ceil() as i32);
                let form = g.fourier_form().scaled(1.0 / (period * period));
                let q_max = -LN_NEGLIGIBLE / (2.0 * PI * PI * j as f64);
                let shells = form.shells(q_max)?;
                let sum: f64 = shells
                    .q
                    .iter()
                    .zip(&shells.mult)
                    .rev()
                    .map(|(q, m)| m * (-2.0 * PI * PI * j as f64 * q).exp())
                    .sum();
                Ok(sum / period.powi(d as i32))
            }
        }
    }

    /// `Σ_{j ≥ J} φ^{*j}(0)` from the local limit form with Euler-Maclaurin
    /// corrections. Exact up to `O(J^{-d/2-7})` for Gaussians; for other
    /// densities the relative error is `O(J^{-1/2})`.
    pub fn conv_zero_tail(&self, start: u64) -> Result<f64> {
        let d = self.dim();
        if d <= 2 {
            return domain(format!("Σ_j φ^{{*j}}(0) diverges in dimension {d}"));
        }
        if start == 0 {
            return param("tail must start at j >= 1");
        }
        let c = self.conv_zero_clt(1.0);
        Ok(c * hurwitz_tail(0.5 * d as f64, start as f64))
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian(_))
    }

    pub fn as_gaussian(&self) -> Option<&Gaussian> {
        match self {
            Self::Gaussian(g) => Some(g),
            Self::Tabulated(_) => None,
        }
    }

    #[cfg(test)]
    pub(crate) fn as_tabulated(&self) -> Option<&Tabulated> {
        match self {
            Self::Tabulated(t) => Some(t),
            Self::Gaussian(_) => None,
        }
    }
}

/// `Σ_{j ≥ a} j^{-s}` for `s > 1` and large `a`, by Euler-Maclaurin.
pub(crate) fn hurwitz_tail(s: f64, a: f64) -> f64 {
    let p = |k: i32| a.powf(-s - k as f64);
    a.powf(1.0 - s) / (s - 1.0) + 0.5 * p(0) + s * p(1) / 12.0 - s * (s + 1.0) * (s + 2.0) * p(3) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * p(5) / 30240.0
}

impl From<Gaussian> for JumpDensity {
    fn from(g: Gaussian) -> Self {
        Self::Gaussian(g)
    }
}

impl TryFrom<(&[f64], &[f64])> for JumpDensity {
    type Error = Error;
    fn try_from((grid, values): (&[f64], &[f64])) -> Result<Self> {
        make_tabulated(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;

    fn quartic() -> JumpDensity {
        let grid: Vec<f64> = (0..=4096).map(|i| -8.0 + i as f64 / 256.0).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-x.powi(4)).exp()).collect();
        make_tabulated(&grid, &values).unwrap()
    }

    #[test]
    fn gaussian_char_fn_at_reference_point() {
        let g = JumpDensity::isotropic(1, 1.0).unwrap();
        let v = g.char_fn(&[0.1]).unwrap();
        assert_relative_eq!(v.re, (-2.0 * PI * PI * 0.01).exp(), max_relative = 1e-15);
        assert_relative_eq!(v.re, 0.820_869, epsilon = 1e-6);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn conv_zero_identity_3d() {
        let g = JumpDensity::isotropic(3, 1.0).unwrap();
        assert_relative_eq!(g.conv_zero(1).unwrap(), (2.0 * PI).powf(-1.5), max_relative = 1e-15);
        assert_relative_eq!(g.conv_zero(1).unwrap(), 0.063_493_6, epsilon = 1e-7);
    }

    #[test]
    fn quartic_moments() {
        let dens = quartic();
        let tab = dens.as_tabulated().unwrap();
        assert!(tab.mean().abs() < 1e-12);
        let expected = gamma(0.75) / gamma(0.25);
        assert_relative_eq!(tab.variance(), expected, max_relative = 1e-8);
        assert_relative_eq!(expected, 0.337_989, epsilon = 1e-6);
        let mass: f64 = tab.mass.iter().sum();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_gaussian_recovers_covariance() {
        let grid: Vec<f64> = (0..=2000).map(|i| -10.0 + i as f64 * 0.01).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let dens = make_tabulated(&grid, &values).unwrap();
        assert!((dens.covariance()[(0, 0)] - 1.0).abs() < 1e-6);
        // Char function agrees with the closed form.
        let v = dens.char_fn(&[0.3]).unwrap();
        assert_relative_eq!(v.re, (-2.0 * PI * PI * 0.09).exp(), max_relative = 1e-9);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn recentring_shifts_the_mean() {
        let grid: Vec<f64> = (0..=2000).map(|i| -7.0 + i as f64 * 0.01).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-0.5 * (x - 3.0) * (x - 3.0)).exp()).collect();
        let dens = make_tabulated(&grid, &values).unwrap();
        let tab = dens.as_tabulated().unwrap();
        assert!(tab.mean().abs() < 1e-12);
        assert!((tab.grid()[0] + 10.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(JumpDensity::gaussian(cov), Err(Error::Param(_))));
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 1.0]);
        assert!(matches!(JumpDensity::gaussian(cov), Err(Error::Param(_))));
        let grid = [0.0, 1.0, 3.0, 4.0];
        assert!(make_tabulated(&grid, &[0.0, 1.0, 1.0, 0.0]).is_err());
        let grid = [0.0, 1.0, 2.0, 3.0];
        assert!(make_tabulated(&grid, &[0.0, -1.0, 1.0, 0.0]).is_err());
        assert!(make_tabulated(&grid, &[1.0, 1.0, 1.0, 1.0]).is_err());
        let g = JumpDensity::isotropic(2, 1.0).unwrap();
        assert!(g.char_fn(&[0.1]).is_err());
        assert!(g.conv_zero(0).is_err());
    }

    #[test]
    fn gaussian_fourier_quadrature_matches_closed_form() {
        for d in 1..=2 {
            let cov = if d == 1 {
                DMatrix::from_element(1, 1, 0.7)
            } else {
                DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5])
            };
            let g = JumpDensity::gaussian(cov).unwrap();
            for j in [1u64, 2, 7, 50, 333, 1000] {
                let a = g.conv_zero(j).unwrap();
                let b = g.conv_zero_fourier(j).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn tabulated_gaussian_conv_zero_matches_closed_form() {
        let grid: Vec<f64> = (0..=3000).map(|i| -12.0 + i as f64 * 0.008).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let dens = make_tabulated(&grid, &values).unwrap();
        for j in [1u64, 3, 10, 100, 1000] {
            let exact = (2.0 * PI * j as f64).powf(-0.5);
            assert_relative_eq!(dens.conv_zero(j).unwrap(), exact, max_relative = 1e-7);
        }
    }

    #[test]
    fn local_limit_ratio_approaches_one_monotonically() {
        let dens = quartic();
        let ratios: Vec<f64> = (4..=16)
            .map(|p| {
                let j = 1u64 << p;
                dens.conv_zero(j).unwrap() / dens.conv_zero_clt(j as f64)
            })
            .collect();
        let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
        // Empirical constant C in |ratio - 1| <= C j^{-1/2}.
        let c = (4..=16)
            .zip(&dev)
            .map(|(p, e)| e * ((1u64 << p) as f64).sqrt())
            .fold(0.0, f64::max);
        assert!(c < 1.0, "C = {c}");
    }

    #[test]
    fn conv_zero_large_power() {
        let dens = quartic();
        let v = dens.conv_zero(1_000_000).unwrap();
        assert_relative_eq!(v, dens.conv_zero_clt(1e6), max_relative = 1e-3);
    }

    #[test]
    fn tail_matches_brute_remainder() {
        let g = JumpDensity::isotropic(3, 1.0).unwrap();
        let c = g.conv_zero_clt(1.0);
        let (a, b) = (1_000_000u64, 100_000_000u64);
        let brute: f64 = (a..b).rev().map(|j| c * (j as f64).powf(-1.5)).sum();
        let est = g.conv_zero_tail(a).unwrap() - g.conv_zero_tail(b).unwrap();
        assert_relative_eq!(est, brute, max_relative = 1e-2);
        assert_relative_eq!(est, brute, max_relative = 1e-9);
        assert!(matches!(JumpDensity::isotropic(2, 1.0).unwrap().conv_zero_tail(10), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut text = String::from("x,value\n");
        for i in 0..=2048 {
            let x = -8.0 + i as f64 / 128.0;
            text.push_str(&format!("{x},{}\n", (-x.powi(4)).exp()));
        }
        std::fs::write(&path, text).unwrap();
        let dens = load_tabulated_csv(&path).unwrap();
        assert_relative_eq!(dens.variance_1d(), gamma(0.75) / gamma(0.25), max_relative = 1e-6);
    }
}
