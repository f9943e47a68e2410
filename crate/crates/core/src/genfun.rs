//! Generating functions of the cycle weights.
//!
//! `G_L(z) = Σ_j W_j z^j / j = -θ Σ_m ln(1 - z φ̂(m))` is evaluated from the
//! lattice form, which stays accurate as `z → 1`. Its infinite-volume
//! counterpart `g(z) = θ Σ_j φ^{*j}(0) z^j / j` is summed as a power series
//! with an Euler-Maclaurin tail built on the local limit form.
//!
//! Internally the argument is carried as the gap `s = 1 - r`, so that the
//! `m = 0` term `1/(1 - r)` never suffers cancellation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, numeric, param, Result};
use crate::spectral::JumpDensity;
use crate::weights::{weight_excess, ModelParams};

/// Lattice points with `φ̂(m)` below `e^{-50}` are dropped.
const MODE_CUT: f64 = 50.0;

/// The non-negligible Fourier modes of one torus, `m = 0` first.
pub(crate) enum Modes {
    Real { v: Vec<f64>, om: Vec<f64>, mult: Vec<f64> },
    Complex { v: Vec<Complex64>, om: Vec<Complex64>, mult: Vec<f64> },
}

impl Modes {
    pub(crate) fn new(params: &ModelParams) -> Result<Self> {
        let side = params.side();
        match params.density() {
            JumpDensity::Gaussian(g) => {
                let shells = g.fourier_form().scaled(1.0 / (side * side)).shells(MODE_CUT / (2.0 * PI * PI))?;
                let v = shells.q.iter().map(|q| (-2.0 * PI * PI * q).exp()).collect();
                let om = shells.q.iter().map(|q| -(-2.0 * PI * PI * q).exp_m1()).collect();
                Ok(Self::Real { v, om, mult: shells.mult })
            }
            JumpDensity::Tabulated(t) => {
                let k_max = (side * t.decay_cutoff(1)).floor() as usize;
                let modes = t.modes(side, k_max);
                let v = modes.iter().map(|m| m.0).collect();
                let mut om: Vec<Complex64> = modes.iter().map(|m| m.1).collect();
                om[0] = Complex64::new(0.0, 0.0);
                let mult = (0..=k_max).map(|k| if k == 0 { 1.0 } else { 2.0 }).collect();
                Ok(Self::Complex { v, om, mult })
            }
        }
    }

    /// `Σ_{m≠0} φ̂(m)^n / (1 - rφ̂(m))^n` at gap `s = 1 - r`, for `n >= 1`.
    fn power_sum(&self, n: u32, s: f64) -> f64 {
        let n = n as i32;
        match self {
            Self::Real { v, om, mult } => (1..v.len())
                .rev()
                .map(|i| mult[i] * (v[i] / (om[i] + s * v[i])).powi(n))
                .sum(),
            Self::Complex { v, om, mult } => (1..v.len())
                .rev()
                .map(|i| mult[i] * (v[i] / (om[i] + s * v[i])).powi(n).re)
                .sum(),
        }
    }

    /// `Σ_{m≠0} ln(1 - rφ̂(m))` at gap `s`.
    fn log_sum(&self, s: f64) -> f64 {
        let r = 1.0 - s;
        match self {
            Self::Real { v, om, mult } => (1..v.len())
                .rev()
                .map(|i| {
                    let x = if v[i] < 0.5 { (-r * v[i]).ln_1p() } else { (om[i] + s * v[i]).ln() };
                    mult[i] * x
                })
                .sum(),
            Self::Complex { v, om, mult } => (1..v.len())
                .rev()
                .map(|i| mult[i] * (om[i] + s * v[i]).norm().ln())
                .sum(),
        }
    }

    /// `Σ_{m≠0} ln(1 - φ̂(m))`.
    fn log_sum_at_one(&self) -> f64 {
        match self {
            Self::Real { om, mult, .. } => (1..om.len()).rev().map(|i| mult[i] * om[i].ln()).sum(),
            Self::Complex { om, mult, .. } => (1..om.len()).rev().map(|i| mult[i] * om[i].norm().ln()).sum(),
        }
    }
}

fn check_gap(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return domain(format!("argument r = {} must lie in [0, 1)", 1.0 - s));
    }
    Ok(())
}

/// `G_L^{(n)}` at `r = 1 - s`, from prebuilt modes.
pub(crate) fn g_lattice_gap(modes: &Modes, theta: f64, n: u32, s: f64) -> Result<f64> {
    check_gap(s)?;
    if n == 0 {
        return Ok(-theta * (s.ln() + modes.log_sum(s)));
    }
    let fact = ln_gamma(n as f64).exp();
    Ok(theta * fact * ((1.0 / s).powi(n as i32) + modes.power_sum(n, s)))
}

/// `G_L^{(n)}(r)` for `0 <= r < 1`.
pub fn big_g_deriv(params: &ModelParams, n: u32, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return domain(format!("argument r = {r} must lie in [0, 1)"));
    }
    let modes = Modes::new(params)?;
    g_lattice_gap(&modes, params.theta(), n, 1.0 - r)
}

/// `G_L^{(n)}` at `r = 1 - gap`, for gaps too small to represent through `r`.
pub fn big_g_deriv_gap(params: &ModelParams, n: u32, gap: f64) -> Result<f64> {
    let modes = Modes::new(params)?;
    g_lattice_gap(&modes, params.theta(), n, gap)
}

/// One-dimensional closed form `θL coth(L√(1-r)/(√2σ)) / (√2σ√(1-r))` for `G_L'`.
pub fn big_g_coth_1d(params: &ModelParams, r: f64) -> Result<f64> {
    if params.dim() != 1 {
        return param("the coth approximant is one-dimensional");
    }
    if !(0.0..1.0).contains(&r) {
        return domain(format!("argument r = {r} must lie in [0, 1)"));
    }
    let sigma = params.density().variance_1d().sqrt();
    let root = (1.0 - r).sqrt();
    let x = params.side() * root / (2f64.sqrt() * sigma);
    Ok(params.theta() * params.side() / (x.tanh() * 2f64.sqrt() * sigma * root))
}

/// `F_L(1) = -θ Σ_{m≠0} ln(1 - φ̂(m)) = Σ_j (W_j - θ)/j`.
///
/// Gaussian densities use the lattice form; other densities sum the weight
/// series, which needs no characteristic function beyond the weights.
pub fn f_at_one(params: &ModelParams) -> Result<f64> {
    match params.density() {
        JumpDensity::Gaussian(_) => f_at_one_lattice(params),
        JumpDensity::Tabulated(_) => f_at_one_series(params),
    }
}

pub fn f_at_one_lattice(params: &ModelParams) -> Result<f64> {
    let modes = Modes::new(params)?;
    Ok(-params.theta() * modes.log_sum_at_one())
}

/// Weight-series evaluation of `F_L(1)`: at least `8L²` terms, then until the
/// terms are negligible, plus a geometric bound on the remainder.
pub fn f_at_one_series(params: &ModelParams) -> Result<f64> {
    let min_terms = (8.0 * params.side() * params.side()).ceil() as usize;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut j = 1usize;
    loop {
        let term = weight_excess(params, j)? / j as f64;
        sum += term;
        if j >= min_terms && term == 0.0 {
            return Ok(sum);
        }
        if j >= min_terms {
            let ratio = (term / prev).abs();
            if ratio < 1.0 {
                let tail = term.abs() * ratio / (1.0 - ratio);
                if tail <= 1e-15 * sum.abs().max(1e-300) {
                    return Ok(sum);
                }
            }
        }
        prev = term;
        j += 1;
        if j > 50_000_000 {
            return numeric("weight series for F_L(1) did not converge");
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SaddleInfo {
    /// Solution of `r G_L'(r) = N`.
    pub r: f64,
    /// `1 - r`, kept separately for accuracy.
    pub gap: f64,
    /// `G_L(r)`.
    pub g: f64,
    /// `rG' + r²G''`.
    pub a: f64,
    /// `rG' + 3r²G'' + r³G'''`.
    pub b: f64,
}

/// Saddle point of `e^{G_L(z)} / z^N` on `(0, 1)`.
pub fn saddle(params: &ModelParams) -> Result<SaddleInfo> {
    saddle_for(params, params.n())
}

/// Saddle point for target size `n` with the torus of `params`.
pub fn saddle_for(params: &ModelParams, n: usize) -> Result<SaddleInfo> {
    let modes = Modes::new(params)?;
    let theta = params.theta();
    let target = n as f64;
    let f = |s: f64| -> Result<f64> { Ok((1.0 - s) * g_lattice_gap(&modes, theta, 1, s)? - target) };
    let mut lo = theta / (2.0 * target + theta);
    let mut hi = 1.0f64;
    if f(lo)? <= 0.0 {
        return numeric("saddle bracket failed");
    }
    for _ in 0..200 {
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let r = 1.0 - s;
    let g1 = g_lattice_gap(&modes, theta, 1, s)?;
    let g2 = g_lattice_gap(&modes, theta, 2, s)?;
    let g3 = g_lattice_gap(&modes, theta, 3, s)?;
    Ok(SaddleInfo {
        r,
        gap: s,
        g: g_lattice_gap(&modes, theta, 0, s)?,
        a: r * g1 + r * r * g2,
        b: r * g1 + 3.0 * r * r * g2 + r * r * r * g3,
    })
}

/// Falling product `(j-1)(j-2)...(j-n+1)`; empty product for `n <= 1`.
fn falling(j: f64, n: u32) -> f64 {
    (1..n).map(|i| j - i as f64).product()
}

/// `ln` of the `j`-th series term of `g^{(n)}(r)` without the `φ^{*j}(0)` factor.
fn series_factor(j: f64, n: u32, ln_r: f64) -> f64 {
    if n == 0 {
        j * ln_r - j.ln()
    } else {
        (j - n as f64) * ln_r + falling(j, n).ln()
    }
}

/// `g^{(n)}(r) = θ Σ_j φ^{*j}(0) (d/dr)^n [r^j / j]` for `0 < r <= 1`.
pub fn g_deriv(density: &JumpDensity, theta: f64, n: u32, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return domain(format!("argument r = {r} must lie in (0, 1]"));
    }
    g_deriv_gap(density, theta, n, 1.0 - r)
}

/// `g^{(n)}` at `r = 1 - gap`.
pub fn g_deriv_gap(density: &JumpDensity, theta: f64, n: u32, gap: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gap) {
        return domain(format!("gap {gap} must lie in [0, 1)"));
    }
    let d = density.dim() as f64;
    let half_d = 0.5 * d;
    if gap == 0.0 && n >= 1 && d <= 2.0 * n as f64 {
        return domain(format!("g^({n})(1) diverges in dimension {}", density.dim()));
    }
    let ln_r = (-gap).ln_1p();
    let cap: u64 = if density.is_gaussian() { 200_000 } else { 65_536 };
    let start = n.max(1) as u64;
    let mut sum = 0.0;
    let mut prev = 0.0;
    let mut j = start;
    while j <= cap {
        let jf = j as f64;
        let term = density.conv_zero(j)? * series_factor(jf, n, ln_r).exp();
        sum += term;
        if gap > 0.0 && j > start + 8 && term < prev {
            let ratio = term / prev;
            if term * ratio / (1.0 - ratio) <= 1e-17 * sum {
                return Ok(theta * sum);
            }
        }
        prev = term;
        j += 1;
    }
    // Remainder from the local limit form f(x) = c x^{-d/2} x-factor r^x.
    let c = density.conv_zero_clt(1.0);
    let a = (cap + 1) as f64;
    let f = |x: f64| c * (series_factor(x, n, ln_r) - half_d * x.ln()).exp();
    let dlog = |x: f64| {
        let base = -half_d / x + ln_r;
        if n == 0 {
            base - 1.0 / x
        } else {
            base + (1..n).map(|i| 1.0 / (x - i as f64)).sum::<f64>()
        }
    };
    let decay = if gap > 0.0 { -ln_r } else { 0.0 };
    let power = if n == 0 { -half_d - 1.0 } else { n as f64 - 1.0 - half_d };
    let u_max = if decay > 0.0 {
        (((60.0 + power.max(0.0) * 10.0) / (a * decay)).max(1.0)).ln() + 3.0
    } else {
        45.0 / (-(power + 1.0))
    }
    .min(400.0);
    let integral = crate::quad::integrate(|u| { let x = a * u.exp(); f(x) * x }, 0.0, u_max, 1e-300, 1e-13)?;
    let tail = integral + 0.5 * f(a) - f(a) * dlog(a) / 12.0;
    Ok(theta * (sum + tail))
}

/// Critical density `ρ_c = θ Σ_j φ^{*j}(0)`, finite for `d >= 3`.
pub fn rho_c(density: &JumpDensity, theta: f64) -> Result<f64> {
    if density.dim() < 3 {
        return domain(format!("no finite critical density in dimension {}", density.dim()));
    }
    g_deriv_gap(density, theta, 1, 0.0)
}

/// Critical constant `α_c = θ / (2π √det Σ)` in `d = 2`.
pub fn alpha_c(density: &JumpDensity, theta: f64) -> Result<f64> {
    if density.dim() != 2 {
        return domain("the constant α_c is defined in dimension 2");
    }
    Ok(theta / (2.0 * PI * density.det_cov().sqrt()))
}

/// Solution `r*` of `r g'(r) = ρ`, i.e. `Σ_j φ^{*j}(0) r^j = ρ/θ`.
/// Equals 1 at the critical density in `d >= 3`.
pub fn r_star(density: &JumpDensity, theta: f64, rho: f64) -> Result<f64> {
    r_star_gap(density, theta, rho).map(|s| 1.0 - s)
}

/// `1 - r*`.
pub fn r_star_gap(density: &JumpDensity, theta: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return param(format!("density rho must be positive, got {rho}"));
    }
    if density.dim() >= 3 {
        let rc = rho_c(density, theta)?;
        if (rho / rc - 1.0).abs() <= 1e-12 {
            return Ok(0.0);
        }
        if rho > rc {
            return domain(format!("rho = {rho} exceeds the critical density {rc}"));
        }
    }
    let f = |s: f64| -> Result<f64> { Ok((1.0 - s) * g_deriv_gap(density, theta, 1, s)? - rho) };
    let mut hi = 1.0f64;
    let mut lo = 0.5f64;
    while f(lo)? <= 0.0 {
        hi = lo;
        lo *= 0.1;
        if lo < 1e-15 {
            return numeric("r* is closer to 1 than double precision resolves");
        }
    }
    // g' at the upper end (r → 0) is θφ(0) > 0, times r → 0.
    for _ in 0..200 {
        let mid = if hi == 1.0 { 0.5 * (lo + hi) } else { (0.5 * (lo.ln() + hi.ln())).exp() };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::weight;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    const ZETA_3_2: f64 = 2.612_375_348_685_488;

    fn iso(d: usize) -> Arc<JumpDensity> {
        Arc::new(JumpDensity::isotropic(d, 1.0).unwrap())
    }

    #[test]
    fn lattice_derivatives_match_weight_series() {
        let p = ModelParams::new(iso(2), 1.3, 10, 3.0).unwrap();
        let r: f64 = 0.6;
        let w: Vec<f64> = (1..=200).map(|j| weight(&p, j).unwrap()).collect();
        for n in 0..=3u32 {
            let series: f64 = (1..=200usize)
                .filter(|&j| j as u32 >= n.max(1))
                .map(|j| {
                    let jf = j as f64;
                    if n == 0 {
                        w[j - 1] * r.powi(j as i32) / jf
                    } else {
                        w[j - 1] * falling(jf, n) * r.powi((j as u32 - n) as i32)
                    }
                })
                .sum();
            assert_relative_eq!(big_g_deriv(&p, n, r).unwrap(), series, max_relative = 1e-12);
        }
    }

    #[test]
    fn g_at_zero_and_monotone() {
        let p = ModelParams::new(iso(1), 1.0, 10, 20.0).unwrap();
        assert!(big_g_deriv(&p, 0, 0.0).unwrap().abs() < 1e-12);
        let a = big_g_deriv(&p, 0, 0.3).unwrap();
        let b = big_g_deriv(&p, 0, 0.6).unwrap();
        assert!(b > a && a > 0.0);
        assert!(big_g_deriv(&p, 1, 1.0).is_err());
    }

    #[test]
    fn saddle_solves_equation() {
        for (d, rho, n) in [(1, 1.0, 1000), (2, 0.5, 2000), (3, 0.05, 3000)] {
            let p = ModelParams::with_density(iso(d), 1.0, n, rho).unwrap();
            let s = saddle(&p).unwrap();
            let lhs = s.r * big_g_deriv_gap(&p, 1, s.gap).unwrap();
            assert!((lhs - n as f64).abs() <= 1e-9 * n as f64, "{lhs} vs {n}");
            assert!(s.a > 0.0 && s.b > 0.0);
            let s2 = saddle_for(&p, n + 100).unwrap();
            assert!(s2.r > s.r);
        }
    }

    #[test]
    fn sub_critical_saddle_asymptotics() {
        // 1 - r_N ~ θ²/(2σ²ρ²) for rho = N^{1/4} in one dimension.
        let mut prev = f64::INFINITY;
        for n in [10_000usize, 160_000, 2_560_000] {
            let rho = (n as f64).powf(0.25);
            let p = ModelParams::with_density(iso(1), 1.0, n, rho).unwrap();
            let s = saddle(&p).unwrap();
            let err = (s.gap / (1.0 / (2.0 * rho * rho)) - 1.0).abs();
            let err_a = (s.a / (n as f64 * rho * rho) - 1.0).abs();
            let err_b = (s.b / (3.0 * n as f64 * rho.powi(4)) - 1.0).abs();
            assert!(err < prev, "{err}");
            assert!(err < 0.25 && err_a < 0.25 && err_b < 0.5, "{err} {err_a} {err_b}");
            prev = err;
        }
    }

    #[test]
    fn critical_density_three_dimensions() {
        let rc = rho_c(&iso(3), 1.0).unwrap();
        assert_relative_eq!(rc, ZETA_3_2 / (2.0 * PI).powf(1.5), max_relative = 1e-10);
        assert!((rc - 0.165_869).abs() < 1e-6);
        assert_relative_eq!(rho_c(&iso(3), 2.0).unwrap(), 2.0 * rc, max_relative = 1e-14);
        assert!(rho_c(&iso(2), 1.0).is_err());
    }

    #[test]
    fn critical_density_matches_partial_sum_plus_tail() {
        let dens = iso(4);
        let partial: f64 = (1..1000u64).map(|j| dens.conv_zero(j).unwrap()).sum();
        let oracle = partial + dens.conv_zero_tail(1000).unwrap();
        assert_relative_eq!(rho_c(&dens, 1.0).unwrap(), oracle, max_relative = 1e-8);
    }

    #[test]
    fn two_dimensional_log_divergence() {
        let dens = iso(2);
        let ac = alpha_c(&dens, 1.0).unwrap();
        assert_relative_eq!(ac, 1.0 / (2.0 * PI), max_relative = 1e-15);
        for gap in [1e-3, 1e-6, 1e-9] {
            let g1 = g_deriv_gap(&dens, 1.0, 1, gap).unwrap();
            // For a Gaussian in d = 2, g'(r) = α_c ln(1/(1-r)) / r exactly.
            assert_relative_eq!(g1, ac * (1.0 / gap).ln() / (1.0 - gap), max_relative = 1e-10);
        }
    }

    #[test]
    fn one_dimensional_square_root_divergence() {
        let dens = iso(1);
        for gap in [1e-4, 1e-6, 1e-8] {
            let g1 = g_deriv_gap(&dens, 1.0, 1, gap).unwrap();
            let lead = 1.0 / (2f64.sqrt()) * gap.powf(-0.5);
            assert!((g1 / lead - 1.0).abs() < 3.0 * gap.sqrt() + 2.0 * gap.sqrt(), "{g1} {lead}");
        }
    }

    #[test]
    fn series_matches_brute_sum_away_from_one() {
        let dens = iso(3);
        for n in 0..=2u32 {
            let r: f64 = 0.9;
            let brute: f64 = (1..3000u64)
                .map(|j| {
                    let jf = j as f64;
                    dens.conv_zero(j).unwrap() * (series_factor(jf, n, r.ln())).exp()
                })
                .filter(|t| t.is_finite())
                .sum();
            assert_relative_eq!(g_deriv(&dens, 1.0, n, r).unwrap(), brute, max_relative = 1e-12);
        }
    }

    #[test]
    fn g_second_derivative_five_dimensions() {
        // g''(1) = Σ_j (j-1) φ^{*j}(0) = c (ζ(3/2) - ζ(5/2)) in d = 5.
        let dens = iso(5);
        let c = dens.conv_zero_clt(1.0);
        let zeta_5_2 = 1.341_487_257_250_917;
        let exact = c * (ZETA_3_2 - zeta_5_2);
        assert_relative_eq!(g_deriv(&dens, 1.0, 2, 1.0).unwrap(), exact, max_relative = 1e-9);
        assert!(g_deriv(&dens, 1.0, 3, 1.0).is_err());
    }

    #[test]
    fn r_star_solves_equation() {
        for (d, rho) in [(1, 1.0), (2, 1.0), (3, 0.08)] {
            let dens = iso(d);
            let r = r_star(&dens, 1.0, rho).unwrap();
            let lhs = r * g_deriv(&dens, 1.0, 1, r).unwrap();
            assert_relative_eq!(lhs, rho, max_relative = 1e-10);
        }
        let rc = rho_c(&iso(3), 1.0).unwrap();
        assert_eq!(r_star(&iso(3), 1.0, rc).unwrap(), 1.0);
        assert!(r_star(&iso(3), 1.0, 2.0 * rc).is_err());
    }

    #[test]
    fn f_at_one_representations_agree() {
        for (d, side) in [(1, 6.0), (2, 4.0), (3, 3.0)] {
            let p = ModelParams::new(iso(d), 1.5, 10, side).unwrap();
            let a = f_at_one_lattice(&p).unwrap();
            let b = f_at_one_series(&p).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn coth_form_tracks_lattice_derivative() {
        let p = ModelParams::new(iso(1), 1.0, 10, 200.0).unwrap();
        let l = p.side();
        for gap in [1e-2, 1e-4, 1e-6] {
            let exact = big_g_deriv_gap(&p, 1, gap).unwrap();
            let approx = big_g_coth_1d(&p, 1.0 - gap).unwrap();
            assert!((exact - approx).abs() <= 2.0 * l * l.ln(), "{exact} {approx}");
        }
    }

    #[test]
    fn tabulated_series_close_to_gaussian_for_gaussian_table() {
        let grid: Vec<f64> = (0..=3000).map(|i| -12.0 + i as f64 * 0.008).collect();
        let values: Vec<f64> = grid.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let tab = crate::spectral::make_tabulated(&grid, &values).unwrap();
        let a = g_deriv(&tab, 1.0, 1, 0.99).unwrap();
        let b = g_deriv(&iso(1), 1.0, 1, 0.99).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }
}
