//! Cycle weights `W_{L,j} = θ Σ_{m ∈ Z^d/L} φ̂(m)^j`, equivalently
//! `θ L^d Σ_{k ∈ Z^d} φ^{*j}(Lk)`.
//!
//! Gaussian tables use the real-space sum for `j < L²` and the Fourier sum
//! beyond; both converge after a handful of shells on their side of the
//! crossover.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{numeric, param, Result};
use crate::lattice::Shells;
use crate::spectral::{Gaussian, JumpDensity, Tabulated};

/// Exponent beyond which a shell no longer contributes (`e^{-50} ≈ 2e-22`).
const EXP_CUT: f64 = 50.0;

/// Model parameters: jump density, cycle fugacity `θ`, number of points `N`
/// and torus side `L`, with density `ρ = N / L^d`.
#[derive(Clone, Debug)]
pub struct ModelParams {
    density: Arc<JumpDensity>,
    theta: f64,
    n: usize,
    side: f64,
}

impl ModelParams {
    pub fn new(density: Arc<JumpDensity>, theta: f64, n: usize, side: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return param(format!("theta must be positive and finite, got {theta}"));
        }
        if n == 0 {
            return param("N must be at least 1");
        }
        if !(side >= 1.0 && side.is_finite()) {
            return param(format!("torus side must be at least 1, got {side}"));
        }
        Ok(Self { density, theta, n, side })
    }

    /// Parameters with the side chosen so that `N / L^d = rho`.
    pub fn with_density(density: Arc<JumpDensity>, theta: f64, n: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return param(format!("density rho must be positive, got {rho}"));
        }
        let d = density.dim() as f64;
        let side = (n as f64 / rho).powf(1.0 / d);
        Self::new(density, theta, n, side)
    }

    pub fn density(&self) -> &JumpDensity {
        &self.density
    }

    pub fn density_arc(&self) -> &Arc<JumpDensity> {
        &self.density
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn rho(&self) -> f64 {
        self.n as f64 / self.volume()
    }
}

/// `W_1, ..., W_N` for one parameter set. Index `j` is stored at `j - 1`.
#[derive(Clone, Debug)]
pub struct WeightTable {
    values: Vec<f64>,
    theta: f64,
    params: Option<ModelParams>,
}

impl WeightTable {
    /// A table from explicit weights, e.g. `W ≡ 1` for the uniform permutation.
    pub fn from_values(values: Vec<f64>, theta: f64) -> Result<Self> {
        if values.is_empty() {
            return param("weight table must have at least one entry");
        }
        if values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return param("weights must be finite and non-negative");
        }
        Ok(Self { values, theta, params: None })
    }

    /// `W_j` for `1 <= j <= N`.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    /// Weights for fugacity `t·θ`, which are `t·W_j`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            values: self.values.iter().map(|w| w * t).collect(),
            theta: self.theta * t,
            params: None,
        }
    }

    /// The first `n` weights.
    pub fn truncated(&self, n: usize) -> Self {
        Self { values: self.values[..n.min(self.values.len())].to_vec(), theta: self.theta, params: None }
    }
}

fn shell_sum(shells: &Shells, rate: f64) -> f64 {
    // Shells ascend in q, so terms fall off monotonically up to multiplicity.
    let mut sum = 0.0;
    for (q, m) in shells.q.iter().zip(&shells.mult) {
        let e = rate * q;
        if e > EXP_CUT {
            break;
        }
        sum += m * (-e).exp();
    }
    sum
}

fn fourier_shells(g: &Gaussian, side: f64, j_min: f64) -> Result<Shells> {
    let form = g.fourier_form().scaled(1.0 / (side * side));
    form.shells(EXP_CUT / (2.0 * PI * PI * j_min))
}

fn real_shells(g: &Gaussian, side: f64, j_max: f64) -> Result<Shells> {
    let form = g.real_form().scaled(side * side);
    form.shells(2.0 * j_max * EXP_CUT)
}

fn gaussian_fourier(shells: &Shells, theta: f64, j: f64) -> f64 {
    theta * shell_sum(shells, 2.0 * PI * PI * j)
}

fn gaussian_real(shells: &Shells, params: &ModelParams, j: f64) -> f64 {
    let pref = params.volume() * params.density.conv_zero_clt(j);
    params.theta * pref * shell_sum(shells, 0.5 / j)
}

fn tabulated_weight(tab: &Tabulated, params: &ModelParams, j: u64, excess_only: bool) -> Result<f64> {
    let side = params.side;
    let k_max = (side * tab.decay_cutoff(j)).floor() as usize;
    let modes = tab.modes(side, k_max);
    let mut sum = 0.0;
    for (v, _) in modes[1..=k_max].iter().rev() {
        sum += v.powu(j as u32).re;
    }
    if excess_only {
        return Ok(params.theta * 2.0 * sum);
    }
    clamp_weight(params.theta * (1.0 + 2.0 * sum), j)
}

fn clamp_weight(w: f64, j: u64) -> Result<f64> {
    if w >= 0.0 {
        Ok(w)
    } else if w > -1e-12 {
        log::warn!("weight W_{j} = {w:e} clamped to zero");
        Ok(0.0)
    } else {
        numeric(format!("weight W_{j} = {w:e} is negative beyond rounding"))
    }
}

/// `W_{L,j}` from the Fourier-side lattice sum.
pub fn weight(params: &ModelParams, j: usize) -> Result<f64> {
    if j == 0 {
        return param("cycle length must be at least 1");
    }
    match params.density.as_ref() {
        JumpDensity::Gaussian(g) => {
            let shells = fourier_shells(g, params.side, j as f64)?;
            Ok(gaussian_fourier(&shells, params.theta, j as f64))
        }
        JumpDensity::Tabulated(t) => tabulated_weight(t, params, j as u64, false),
    }
}

/// `W_{L,j} - θ`, the contribution of the non-zero Fourier modes, computed
/// without cancellation.
pub fn weight_excess(params: &ModelParams, j: usize) -> Result<f64> {
    if j == 0 {
        return param("cycle length must be at least 1");
    }
    match params.density.as_ref() {
        JumpDensity::Gaussian(g) => {
            let shells = fourier_shells(g, params.side, j as f64)?;
            let rate = 2.0 * PI * PI * j as f64;
            let mut sum = 0.0;
            for (q, m) in shells.q.iter().zip(&shells.mult).skip(1) {
                if rate * q > EXP_CUT {
                    break;
                }
                sum += m * (-rate * q).exp();
            }
            Ok(params.theta * sum)
        }
        JumpDensity::Tabulated(t) => tabulated_weight(t, params, j as u64, true),
    }
}

/// `W_{L,j}` from the real-space sum `θ L^d Σ_k ψ^{*j}(Lk)`; Gaussian only.
pub fn weight_real_space(params: &ModelParams, j: usize) -> Result<f64> {
    if j == 0 {
        return param("cycle length must be at least 1");
    }
    let Some(g) = params.density.as_gaussian() else {
        return param("the real-space weight needs a Gaussian density");
    };
    let shells = real_shells(g, params.side, j as f64)?;
    Ok(gaussian_real(&shells, params, j as f64))
}

/// `W_{L,1}, ..., W_{L,N}`.
pub fn weight_table(params: &ModelParams) -> Result<WeightTable> {
    let n = params.n;
    let values: Vec<f64> = match params.density.as_ref() {
        JumpDensity::Gaussian(g) => {
            let crossover = params.side * params.side;
            let last_real = (crossover.ceil() as usize).saturating_sub(1).min(n);
            let real = if last_real >= 1 { Some(real_shells(g, params.side, last_real as f64)?) } else { None };
            let fourier = if last_real < n {
                Some(fourier_shells(g, params.side, (last_real + 1) as f64)?)
            } else {
                None
            };
            crate::par::map_indexed(n, |i| {
                let j = (i + 1) as f64;
                match (&real, &fourier) {
                    (Some(r), _) if i < last_real => gaussian_real(r, params, j),
                    (_, Some(f)) => gaussian_fourier(f, params.theta, j),
                    _ => unreachable!("every index is covered by one side of the crossover"),
                }
            })
        }
        JumpDensity::Tabulated(t) => {
            // Fill the mode cache once for the widest range needed.
            let k_max = (params.side * t.decay_cutoff(1)).floor() as usize;
            t.modes(params.side, k_max);
            crate::par::map_indexed(n, |i| tabulated_weight(t, params, (i + 1) as u64, false))
                .into_iter()
                .collect::<Result<Vec<_>>>()?
        }
    };
    if let Some(j) = values.iter().position(|w| !w.is_finite()) {
        return numeric(format!("weight W_{} is not finite", j + 1));
    }
    Ok(WeightTable { values, theta: params.theta, params: Some(params.clone()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn iso(d: usize, theta: f64, n: usize, side: f64) -> ModelParams {
        ModelParams::new(Arc::new(JumpDensity::isotropic(d, 1.0).unwrap()), theta, n, side).unwrap()
    }

    #[test]
    fn reference_weight_1d() {
        let p = iso(1, 1.0, 10, 10.0);
        let w = weight(&p, 1).unwrap();
        let brute: f64 = (-200i32..=200).map(|k| (-2.0 * PI * PI * (k as f64 / 10.0).powi(2)).exp()).sum();
        assert_relative_eq!(w, brute, max_relative = 1e-14);
        assert!((w - 3.99).abs() < 0.01);
    }

    #[test]
    fn weights_tend_to_theta() {
        let p = iso(2, 1.7, 10, 5.0);
        let w = weight(&p, 100 * 25).unwrap();
        assert!((w - 1.7).abs() < 1e-12);
        assert!(weight_excess(&p, 100 * 25).unwrap() < 1e-12);
    }

    #[test]
    fn small_cycles_follow_local_limit() {
        let p = iso(3, 1.0, 10, 30.0);
        for j in 1..=5 {
            let w = weight_real_space(&p, j).unwrap();
            let clt = p.volume() * p.density().conv_zero(j as u64).unwrap();
            assert_relative_eq!(w, clt, max_relative = 1e-12);
        }
    }

    #[test]
    fn duality_general_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.6]);
        let p = ModelParams::new(Arc::new(JumpDensity::gaussian(cov).unwrap()), 1.3, 10, 4.0).unwrap();
        for j in [1, 2, 5, 16, 40, 64] {
            let a = weight(&p, j).unwrap();
            let b = weight_real_space(&p, j).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
    }

    #[test]
    fn table_uses_both_sides_consistently() {
        let p = iso(1, 1.0, 300, 10.0);
        let t = weight_table(&p).unwrap();
        for j in [1, 50, 99, 100, 101, 300] {
            assert_relative_eq!(t.get(j), weight(&p, j).unwrap(), max_relative = 1e-12);
        }
        assert!(t.values().iter().all(|&w| w >= 1.0));
    }

    #[test]
    fn excess_matches_difference() {
        let p = iso(3, 2.0, 10, 3.0);
        for j in [1, 4, 9, 20] {
            let e = weight_excess(&p, j).unwrap();
            assert_relative_eq!(e, weight(&p, j).unwrap() - 2.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn tabulated_weights_match_gaussian() {
        let grid: Vec<f64> = (0..=3000).map(|i| -12.0 + i as f64 * 0.008).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let tab = Arc::new(crate::spectral::make_tabulated(&grid, &values).unwrap());
        let pt = ModelParams::new(tab, 1.0, 200, 7.0).unwrap();
        let pg = iso(1, 1.0, 200, 7.0);
        let wt = weight_table(&pt).unwrap();
        let wg = weight_table(&pg).unwrap();
        for j in 1..=200 {
            assert_relative_eq!(wt.get(j), wg.get(j), max_relative = 1e-7);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let d = Arc::new(JumpDensity::isotropic(1, 1.0).unwrap());
        assert!(ModelParams::new(d.clone(), 0.0, 10, 2.0).is_err());
        assert!(ModelParams::new(d.clone(), 1.0, 0, 2.0).is_err());
        assert!(ModelParams::new(d.clone(), 1.0, 10, 0.5).is_err());
        assert!(ModelParams::with_density(d, 1.0, 10, 100.0).is_err());
        assert!(WeightTable::from_values(vec![1.0, -1.0], 1.0).is_err());
    }

    #[test]
    fn density_round_trip() {
        let d = Arc::new(JumpDensity::isotropic(3, 1.0).unwrap());
        let p = ModelParams::with_density(d, 1.0, 1000, 0.2).unwrap();
        assert_relative_eq!(p.rho(), 0.2, max_relative = 1e-12);
    }
}
