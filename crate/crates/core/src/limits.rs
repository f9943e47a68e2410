//! Limit laws of the first cycle length and regime classification.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{domain, param, Result};
use crate::genfun::{alpha_c, r_star_gap, rho_c};
use crate::partition::critical_1d_series;
use crate::spectral::JumpDensity;

/// Relative tolerance for treating a density or slope as exactly critical.
const CRITICAL_TOL: f64 = 1e-12;

/// How the density `ρ` depends on `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoSpec {
    Fixed { rho: f64 },
    /// `ρ = c N^a`.
    Power { c: f64, a: f64 },
    /// `ρ = c ln N`.
    Log { c: f64 },
}

impl RhoSpec {
    pub fn at(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            RhoSpec::Fixed { rho } => rho,
            RhoSpec::Power { c, a } => c * nf.powf(a),
            RhoSpec::Log { c } => c * nf.ln(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RhoSpec::Fixed { rho } => rho > 0.0 && rho.is_finite(),
            RhoSpec::Power { c, a } => c > 0.0 && c.is_finite() && a.is_finite(),
            RhoSpec::Log { c } => c > 0.0 && c.is_finite(),
        };
        if ok { Ok(()) } else { param(format!("malformed density specification {self:?}")) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum RegimeCase {
    /// Fixed density below criticality, any dimension.
    SubConst,
    /// `d = 1`, `ρ → ∞` with `ρ = o(√N)`.
    Sub1,
    /// `d = 2`, `ρ / ln N → α < α_c`.
    Sub2,
    /// `d = 1`, `ρ / √N → α`.
    #[serde(rename = "critical_1d")]
    Critical1D { alpha: f64 },
    /// `d = 2`, `ρ / ln N → α_c`.
    #[serde(rename = "critical_2d")]
    Critical2D,
    /// `d >= 3`, `ρ = ρ_c`.
    CriticalHighD,
    /// `d = 1`, `ρ = ω(√N)`, `ρ <= N`.
    Super1,
    /// `d = 2`, `ρ / ln N → α > α_c`.
    Super2 { alpha: f64 },
    /// `d = 2`, `ρ = ω(ln N)`, `ρ <= N`.
    Hyper2,
    /// `d >= 3`, `ρ > ρ_c`.
    Super3,
}

impl RegimeCase {
    pub fn is_supercritical(&self) -> bool {
        matches!(self, RegimeCase::Super1 | RegimeCase::Super2 { .. } | RegimeCase::Hyper2 | RegimeCase::Super3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Regime {
    pub case: RegimeCase,
    /// Unbreakable mass: `α_c/α` or `ρ_c/ρ` where applicable, otherwise 0.
    pub tau: f64,
    /// Limiting fraction of points in macroscopic cycles.
    pub nu: f64,
    pub rho_c: Option<f64>,
    pub alpha_c: Option<f64>,
}

fn regime(case: RegimeCase, tau: f64, nu: f64) -> Regime {
    Regime { case, tau, nu, rho_c: None, alpha_c: None }
}

fn near(a: f64, b: f64) -> bool {
    (a / b - 1.0).abs() <= CRITICAL_TOL
}

pub fn classify(density: &JumpDensity, theta: f64, spec: RhoSpec) -> Result<Regime> {
    spec.validate()?;
    if !(theta > 0.0 && theta.is_finite()) {
        return param(format!("theta must be positive, got {theta}"));
    }
    // A power law with exponent 0 is a fixed density.
    let spec = match spec {
        RhoSpec::Power { c, a: 0.0 } => RhoSpec::Fixed { rho: c },
        s => s,
    };
    if let RhoSpec::Power { c, a } = spec {
        if a < 0.0 {
            return domain("densities vanishing as N grows are outside the classified regimes");
        }
        if a > 1.0 || (a == 1.0 && c > 1.0) {
            return domain("the density may not exceed N (side length below 1)");
        }
    }
    let d = density.dim();
    match d {
        1 => Ok(match spec {
            RhoSpec::Fixed { .. } => regime(RegimeCase::SubConst, 0.0, 0.0),
            RhoSpec::Log { .. } => regime(RegimeCase::Sub1, 0.0, 0.0),
            RhoSpec::Power { c, a } => {
                if a < 0.5 {
                    regime(RegimeCase::Sub1, 0.0, 0.0)
                } else if a == 0.5 {
                    regime(RegimeCase::Critical1D { alpha: c }, 0.0, 1.0)
                } else {
                    regime(RegimeCase::Super1, 0.0, 1.0)
                }
            }
        }),
        2 => {
            let ac = alpha_c(density, theta)?;
            let mut r = match spec {
                RhoSpec::Fixed { .. } => regime(RegimeCase::SubConst, 0.0, 0.0),
                RhoSpec::Power { .. } => regime(RegimeCase::Hyper2, 0.0, 1.0),
                RhoSpec::Log { c } if near(c, ac) => regime(RegimeCase::Critical2D, 0.0, 0.0),
                RhoSpec::Log { c } if c < ac => regime(RegimeCase::Sub2, 0.0, 0.0),
                RhoSpec::Log { c } => regime(RegimeCase::Super2 { alpha: c }, ac / c, 1.0 - ac / c),
            };
            r.alpha_c = Some(ac);
            Ok(r)
        }
        _ => {
            let RhoSpec::Fixed { rho } = spec else {
                return domain(format!("in dimension {d} only a fixed density is classified"));
            };
            let rc = rho_c(density, theta)?;
            let mut r = if near(rho, rc) {
                regime(RegimeCase::CriticalHighD, 0.0, 0.0)
            } else if rho < rc {
                regime(RegimeCase::SubConst, 0.0, 0.0)
            } else {
                regime(RegimeCase::Super3, rc / rho, 1.0 - rc / rho)
            };
            r.rho_c = Some(rc);
            Ok(r)
        }
    }
}

/// Prefix `P(Y = 1..=j_max)` of the limit law of `L1` at fixed density.
#[derive(Clone, Debug, Serialize)]
pub struct YPrefix {
    pub pmf: Vec<f64>,
    pub mass: f64,
    pub r_star: f64,
}

/// `P(Y = j) = θ ρ⁻¹ φ^{*j}(0) r*^j`.
pub fn y_pmf(density: &JumpDensity, theta: f64, rho: f64, j_max: usize) -> Result<YPrefix> {
    if j_max == 0 {
        return param("j_max must be at least 1");
    }
    let gap = r_star_gap(density, theta, rho)?;
    let ln_r = (-gap).ln_1p();
    let base = theta.ln() - rho.ln();
    let mut pmf = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let c = density.conv_zero(j as u64)?;
        pmf.push((base + c.ln() + j as f64 * ln_r).exp());
    }
    let mass = pmf.iter().sum();
    Ok(YPrefix { pmf, mass, r_star: 1.0 - gap })
}

/// `Σ_{m ∈ Z} e^{-a m²}` summed directly.
pub fn theta_sum_direct(a: f64) -> f64 {
    let mut sum = 1.0;
    for m in 1.. {
        let t = (-a * (m * m) as f64).exp();
        sum += 2.0 * t;
        if t < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// The same sum through its Poisson-dual form `√(π/a) Σ_k e^{-π²k²/a}`.
pub fn theta_sum_dual(a: f64) -> f64 {
    (PI / a).sqrt() * theta_sum_direct(PI * PI / a)
}

/// `Σ_{m ∈ Z} e^{-a m²}` for `a > 0`.
pub fn theta_sum(a: f64) -> f64 {
    if a < PI { theta_sum_dual(a) } else { theta_sum_direct(a) }
}

/// Limit density of `L1/N` in the one-dimensional critical regime
/// `ρ/√N → α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaLaw {
    pub alpha: f64,
    pub sigma: f64,
    pub theta: f64,
    /// Normalising constant.
    pub z: f64,
}

impl ThetaLaw {
    pub fn new(alpha: f64, sigma: f64, theta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("sigma", sigma), ("theta", theta)] {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{name} must be positive, got {v}"));
            }
        }
        let z = critical_1d_series(theta, alpha * alpha * sigma * sigma, 1.0) / theta;
        Ok(Self { alpha, sigma, theta, z })
    }

    fn c(&self) -> f64 {
        (self.alpha * self.sigma).powi(2)
    }

    /// Unnormalised `(1-x)^{-3/2} S(1-x)`.
    fn edge_factor(&self, x: f64) -> f64 {
        let y = 1.0 - x;
        if y <= 0.0 {
            return 0.0;
        }
        critical_1d_series(self.theta, self.c(), y) / (y * y.sqrt())
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return domain(format!("the density lives on (0, 1), got {x}"));
        }
        Ok(theta_sum(2.0 * PI * PI * self.c() * x) * self.edge_factor(x) / self.z)
    }

    /// `μ(u²) · 2u`, finite as `u → 0`.
    fn integrand_sq(&self, u: f64) -> f64 {
        let x = u * u;
        let a = 2.0 * PI * PI * self.c() * x;
        let th = if a < PI {
            // √(π/a) · 2u is the constant 2/(√(2π) α σ).
            2.0 / ((2.0 * PI).sqrt() * self.alpha * self.sigma) * theta_sum_direct(PI * PI / a)
        } else {
            2.0 * u * theta_sum_direct(a)
        };
        th * self.edge_factor(x) / self.z
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x >= 1.0 {
            return Ok(1.0);
        }
        self.mass(0.0, x)
    }

    /// `μ((lo, hi))`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        if hi <= lo {
            return Ok(0.0);
        }
        let v = crate::quad::integrate(|u| self.integrand_sq(u), lo.sqrt(), hi.sqrt(), 1e-14, 1e-12)?;
        Ok(v.clamp(0.0, 1.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LimitLaw {
    /// `Γ(1/2, 1)`.
    GammaHalf,
    /// Constant density on `[0, 1)` plus an atom at 1.
    UniformLogScale { atom: f64 },
    ThetaDensity(ThetaLaw),
    /// `P(Y = j)` for `j = 1..`; the tail beyond the prefix is left out.
    DiscreteY { pmf: Vec<f64>, r_star: f64 },
    /// First piece of the modified stick-breaking process.
    X1Law { theta: f64, tau: f64 },
}

impl LimitLaw {
    pub fn cdf(&self, x: f64) -> Result<f64> {
        reference_cdf(self, x)
    }

    /// Density of the continuous part, where there is one.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            LimitLaw::GammaHalf => {
                Some(if x > 0.0 { (-x).exp() / (PI * x).sqrt() } else { 0.0 })
            }
            LimitLaw::UniformLogScale { atom } => Some(if (0.0..1.0).contains(&x) { 1.0 - atom } else { 0.0 }),
            LimitLaw::ThetaDensity(t) => Some(t.density(x).unwrap_or(0.0)),
            LimitLaw::DiscreteY { .. } => None,
            LimitLaw::X1Law { theta, tau } => {
                let w = 1.0 - tau;
                Some(if x > 0.0 && x < w { theta * (1.0 - x / w).powf(theta - 1.0) } else { 0.0 })
            }
        }
    }
}

pub fn reference_cdf(law: &LimitLaw, x: f64) -> Result<f64> {
    Ok(match law {
        LimitLaw::GammaHalf => {
            if x <= 0.0 {
                0.0
            } else if x.is_infinite() {
                1.0
            } else {
                gamma_lr(0.5, x)
            }
        }
        LimitLaw::UniformLogScale { atom } => {
            if x < 0.0 {
                0.0
            } else if x < 1.0 {
                (1.0 - atom) * x
            } else {
                1.0
            }
        }
        LimitLaw::ThetaDensity(t) => t.cdf(x)?,
        LimitLaw::DiscreteY { pmf, .. } => {
            if x < 1.0 {
                0.0
            } else {
                let k = (x.floor() as usize).min(pmf.len());
                pmf[..k].iter().sum()
            }
        }
        LimitLaw::X1Law { theta, tau } => {
            let w = 1.0 - tau;
            if x < 0.0 {
                0.0
            } else if x >= w {
                1.0
            } else {
                tau + w * (1.0 - (1.0 - x / w).powf(*theta))
            }
        }
    })
}
