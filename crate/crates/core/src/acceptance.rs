//! Acceptance suite. Every check reports a statistic and a threshold and
//! passes when the statistic does not exceed the threshold; "at least" and
//! "strictly decreasing" conditions are rewritten in that form.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::genfun::{alpha_c, big_g_deriv_gap, f_at_one, g_deriv_gap, rho_c, saddle};
use crate::limits::{reference_cdf, y_pmf, LimitLaw, ThetaLaw};
use crate::oracle;
use crate::partition::{
    cycle_count_pgf, log_h_approx_critical_1d, log_h_approx_critical_high, log_h_approx_subcritical,
    log_h_approx_supercritical, partition_table, PartitionTable,
};
use crate::sampler::{l1_l2_pmf, l1_pmf, rearrange_decreasing, replica_rng, sample_replicas, stick_breaking};
use crate::spectral::JumpDensity;
use crate::stats::{ks_discrete, ks_distance, ks_two_sample, macro_fraction, EmpiricalSummary};
use crate::weights::{weight, weight_real_space, weight_table, ModelParams, WeightTable};

/// Strict decrease `a < b` is reported as `a / b <= STRICT`.
const STRICT: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, threshold, pass: statistic <= threshold }
    }

    /// `later < earlier`, as a ratio.
    fn decreasing(name: impl Into<String>, earlier: f64, later: f64) -> Self {
        Self::new(name, later / earlier, STRICT)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub rows: Vec<CheckRow>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl CriterionReport {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub budget_seconds: f64,
    run: fn() -> Result<Vec<CheckRow>>,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "enumeration oracle", budget_seconds: 10.0, run: enumeration },
    Criterion { id: 2, title: "real-space and Fourier weights agree", budget_seconds: 5.0, run: duality },
    Criterion { id: 3, title: "d=1 growing density: Gamma(1/2) limit", budget_seconds: 120.0, run: gamma_half },
    Criterion { id: 4, title: "fixed density: Y limit", budget_seconds: 180.0, run: fixed_density },
    Criterion { id: 5, title: "d=2 logarithmic density: uniform log-scale limit", budget_seconds: 600.0, run: log_uniform },
    Criterion { id: 6, title: "d=1 critical: theta density", budget_seconds: 120.0, run: theta_density },
    Criterion { id: 7, title: "d=3 super-critical", budget_seconds: 900.0, run: super_3d },
    Criterion { id: 8, title: "d=1 super-critical", budget_seconds: 600.0, run: super_1d },
    Criterion { id: 9, title: "asymptotic approximants of H_N", budget_seconds: 1200.0, run: approximants },
    Criterion { id: 10, title: "critical ratio bounds", budget_seconds: 180.0, run: critical_ratios },
    Criterion { id: 11, title: "uniform weights", budget_seconds: 1.0, run: uniform_weights },
];

/// Runs one criterion, timing it against its budget.
pub fn run(c: &Criterion) -> CriterionReport {
    let start = Instant::now();
    let result = (c.run)();
    let seconds = start.elapsed().as_secs_f64();
    let (mut rows, error) = match result {
        Ok(rows) => (rows, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    rows.push(CheckRow::new("runtime seconds", seconds, c.budget_seconds));
    CriterionReport { id: c.id, title: c.title.to_string(), rows, seconds, error }
}

/// Runs the selected criteria (all when `ids` is empty) in order.
pub fn run_selected(ids: &[u32]) -> Vec<CriterionReport> {
    CRITERIA.iter().filter(|c| ids.is_empty() || ids.contains(&c.id)).map(run).collect()
}

fn gaussian(d: usize) -> Arc<JumpDensity> {
    Arc::new(JumpDensity::isotropic(d, 1.0).expect("identity covariance"))
}

struct Model {
    params: ModelParams,
    wt: WeightTable,
    pt: PartitionTable,
}

impl Model {
    fn at_density(d: usize, theta: f64, n: usize, rho: f64) -> Result<Self> {
        let params = ModelParams::with_density(gaussian(d), theta, n, rho)?;
        Self::from_params(params)
    }

    fn from_params(params: ModelParams) -> Result<Self> {
        let wt = weight_table(&params)?;
        let pt = partition_table(&wt)?;
        Ok(Self { params, wt, pt })
    }

    fn n(&self) -> usize {
        self.params.n()
    }

    fn l1(&self) -> Result<Vec<f64>> {
        l1_pmf(&self.wt, &self.pt, self.n())
    }
}

fn enumeration() -> Result<Vec<CheckRow>> {
    let mut worst_h: f64 = 0.0;
    let mut worst_tv: f64 = 0.0;
    for d in 1..=3 {
        for side in [1.5, 3.0] {
            for theta in [0.5, 2.0] {
                let params = ModelParams::new(gaussian(d), theta, 7, side)?;
                let m = Model::from_params(params)?;
                let mut fact = 1.0;
                for n in 1..=7usize {
                    fact *= n as f64;
                    let brute = oracle::weighted_permutation_sum(m.wt.values(), n);
                    worst_h = worst_h.max((fact * m.pt.h(n) / brute - 1.0).abs());
                    let law = oracle::l1_l2_law(m.wt.values(), n);
                    let tv = 0.5
                        * l1_l2_pmf(&m.wt, &m.pt, n)?
                            .iter()
                            .map(|(k, p)| (p - law.get(k).copied().unwrap_or(0.0)).abs())
                            .sum::<f64>();
                    worst_tv = worst_tv.max(tv);
                }
            }
        }
    }
    Ok(vec![
        CheckRow::new("max relative error of N! H_N, N <= 7, 12 models", worst_h, 1e-11),
        CheckRow::new("max TV of the (L1, L2) law, N <= 7, 12 models", worst_tv, 1e-10),
    ])
}

fn duality() -> Result<Vec<CheckRow>> {
    let mut worst: f64 = 0.0;
    let skewed = JumpDensity::gaussian(nalgebra::DMatrix::from_row_slice(2, 2, &[1.3, 0.4, 0.4, 0.7]))?;
    let mut densities: Vec<Arc<JumpDensity>> = (1..=3).map(gaussian).collect();
    densities.push(Arc::new(skewed));
    for dens in densities {
        for side in [2.0, 5.0, 10.0, 20.0] {
            let params = ModelParams::new(dens.clone(), 1.0, 1, side)?;
            let j_max = (4.0 * side * side) as usize;
            for j in 1..=j_max {
                let a = weight(&params, j)?;
                let b = weight_real_space(&params, j)?;
                worst = worst.max((a / b - 1.0).abs());
            }
        }
    }
    Ok(vec![CheckRow::new("max relative gap, d <= 3, L in {2,5,10,20}, j <= 4L^2", worst, 1e-11)])
}

/// KS distance between the exact law of `θ² L1 / (2σ² ρ²)` and `Γ(1/2, 1)`.
fn gamma_half_ks(n: usize) -> Result<f64> {
    let rho = (n as f64).powf(0.25);
    let m = Model::at_density(1, 1.0, n, rho)?;
    let p = m.l1()?;
    let scale = 1.0 / (2.0 * rho * rho);
    let atoms: Vec<(f64, f64)> = p.iter().enumerate().map(|(i, &q)| ((i + 1) as f64 * scale, q)).collect();
    Ok(ks_discrete(&atoms, |x| reference_cdf(&LimitLaw::GammaHalf, x).unwrap_or(f64::NAN)))
}

fn gamma_half() -> Result<Vec<CheckRow>> {
    let small = gamma_half_ks(1_000)?;
    let large = gamma_half_ks(10_000)?;
    Ok(vec![
        CheckRow::new("KS at N = 10^4", large, 0.05),
        CheckRow::decreasing("KS(10^4) / KS(10^3)", small, large),
    ])
}

/// TV between two laws on the positive integers after lumping `j > cut`.
fn prefix_tv(p: &[f64], q: &[f64], cut: usize) -> f64 {
    let head: f64 = (0..cut).map(|i| (p.get(i).unwrap_or(&0.0) - q.get(i).unwrap_or(&0.0)).abs()).sum();
    let tail_p = 1.0 - p.iter().take(cut).sum::<f64>();
    let tail_q = 1.0 - q.iter().take(cut).sum::<f64>();
    0.5 * (head + (tail_p - tail_q).abs())
}

fn fixed_density() -> Result<Vec<CheckRow>> {
    let n = 10_000;
    let mut rows = Vec::new();
    for d in 1..=3 {
        let dens = gaussian(d);
        let rho = if d == 3 { 0.5 * rho_c(&dens, 1.0)? } else { 1.0 };
        let m = Model::at_density(d, 1.0, n, rho)?;
        let y = y_pmf(&dens, 1.0, rho, 50)?;
        rows.push(CheckRow::new(format!("d = {d}: TV of L1 vs Y on j <= 50"), prefix_tv(&m.l1()?, &y.pmf, 50), 0.02));
    }
    Ok(rows)
}

fn log_uniform_ks(n: usize, alpha_ratio: f64) -> Result<f64> {
    let ac = alpha_c(&gaussian(2), 1.0)?;
    let rho = alpha_ratio * ac * (n as f64).ln();
    let m = Model::at_density(2, 1.0, n, rho)?;
    let p = m.l1()?;
    let atoms: Vec<(f64, f64)> = p.iter().enumerate().map(|(i, &q)| (ac * ((i + 1) as f64).ln() / rho, q)).collect();
    let law = LimitLaw::UniformLogScale { atom: 0.0 };
    Ok(ks_discrete(&atoms, |x| reference_cdf(&law, x).unwrap_or(f64::NAN)))
}

fn log_uniform() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (label, ratio) in [("alpha_c/2", 0.5), ("alpha_c", 1.0)] {
        let small = log_uniform_ks(4_000, ratio)?;
        let large = log_uniform_ks(40_000, ratio)?;
        rows.push(CheckRow::new(format!("alpha = {label}: KS at N = 4*10^4"), large, 0.15));
        rows.push(CheckRow::decreasing(format!("alpha = {label}: KS(4*10^4) / KS(4*10^3)"), small, large));
    }
    Ok(rows)
}

fn theta_tv(n: usize, law: &ThetaLaw) -> Result<f64> {
    let rho = law.alpha * (n as f64).sqrt();
    let m = Model::at_density(1, law.theta, n, rho)?;
    let p = m.l1()?;
    let bins = 100;
    let mut exact = vec![0.0; bins];
    for (i, q) in p.iter().enumerate() {
        let x = (i + 1) as f64 / n as f64;
        exact[((x * bins as f64) as usize).min(bins - 1)] += q;
    }
    let mut tv = 0.0;
    for (k, e) in exact.iter().enumerate() {
        let reference = law.mass(k as f64 / bins as f64, (k + 1) as f64 / bins as f64)?;
        tv += (e - reference).abs();
    }
    Ok(0.5 * tv)
}

fn theta_density() -> Result<Vec<CheckRow>> {
    let law = ThetaLaw::new(0.8, 1.0, 1.0)?;
    let small = theta_tv(2_000, &law)?;
    let large = theta_tv(10_000, &law)?;
    Ok(vec![
        CheckRow::new("binned TV at N = 10^4", large, 0.05),
        CheckRow::decreasing("TV(10^4) / TV(2*10^3)", small, large),
    ])
}

fn super_3d() -> Result<Vec<CheckRow>> {
    let theta = 1.0;
    let n = 20_000;
    let rc = rho_c(&gaussian(3), theta)?;
    let rho = 2.0 * rc;
    let nu = 0.5;
    let m = Model::at_density(3, theta, n, rho)?;
    let p = m.l1()?;
    let mut rows = vec![CheckRow::new("|macro fraction (eps = 0.01) - nu|", (macro_fraction(&p, 0.01) - nu).abs(), 0.05)];
    let mut worst: f64 = 0.0;
    for j in 1..=5 {
        let limit = theta / rho * (2.0 * PI * j as f64).powf(-1.5);
        worst = worst.max((p[j - 1] / limit - 1.0).abs());
    }
    rows.push(CheckRow::new("max relative error of P(L1 = j), j <= 5", worst, 0.03));

    let reps = sample_replicas(&m.wt, &m.pt, 7_001, 5_000)?;
    let sampled: Vec<f64> = reps.iter().map(|r| r.sorted[0] as f64 / (nu * n as f64)).collect();
    let tau = 0.5;
    let reference: Vec<f64> = crate::par::map_indexed(100_000, |i| {
        let st = stick_breaking(theta, tau, 400, &mut replica_rng(7_002, i as u64)).expect("valid parameters");
        rearrange_decreasing(&st.x)[0] / (1.0 - tau)
    });
    let ks = ks_two_sample(&EmpiricalSummary::new(sampled)?, &EmpiricalSummary::new(reference)?);
    rows.push(CheckRow::new("two-sample KS of largest cycle / (nu N)", ks, 0.05));
    Ok(rows)
}

fn super_1d() -> Result<Vec<CheckRow>> {
    let n = 10_000;
    let mut rows = Vec::new();
    for theta in [1.0, 2.0] {
        let m = Model::at_density(1, theta, n, (n as f64).powf(0.75))?;
        let reps = sample_replicas(&m.wt, &m.pt, 8_000 + theta as u64, 10_000)?;
        let xs: Vec<f64> = reps.iter().map(|r| r.ordered[0] as f64 / n as f64).collect();
        let law = LimitLaw::X1Law { theta, tau: 0.0 };
        let ks = ks_distance(&EmpiricalSummary::new(xs)?, |x| reference_cdf(&law, x).unwrap_or(f64::NAN));
        rows.push(CheckRow::new(format!("theta = {theta}: KS of L1/N vs first stick piece"), ks, 0.04));
    }
    Ok(rows)
}

/// `(|approximant - ln H_N|, ln H_N)` for one of the four approximants.
fn approx_error(n: usize, kind: u8, theta: f64) -> Result<(f64, f64)> {
    let (m, approx) = match kind {
        0 => {
            let m = Model::at_density(1, theta, n, 1.0)?;
            let s = saddle(&m.params)?;
            let a = log_h_approx_subcritical(&m.params, &s, 0);
            (m, a)
        }
        1 => {
            let rc = rho_c(&gaussian(3), theta)?;
            let m = Model::at_density(3, theta, n, 2.0 * rc)?;
            let a = log_h_approx_supercritical(&m.params, f_at_one(&m.params)?, 0.5, 0);
            (m, a)
        }
        2 => {
            let dens = gaussian(5);
            let rc = rho_c(&dens, theta)?;
            let g1 = g_deriv_gap(&dens, theta, 1, 0.0)?;
            let g2 = g_deriv_gap(&dens, theta, 2, 0.0)?;
            let m = Model::at_density(5, theta, n, rc)?;
            let a = log_h_approx_critical_high(&m.params, f_at_one(&m.params)?, g1, g2);
            (m, a)
        }
        _ => {
            let m = Model::at_density(1, theta, n, 0.8 * (n as f64).sqrt())?;
            let side = m.params.side();
            let edge = big_g_deriv_gap(&m.params, 0, 1.0 / (side * side))?;
            let a = log_h_approx_critical_1d(&m.params, edge, 0)?;
            (m, a)
        }
    };
    let exact = m.pt.log_h(n);
    Ok(((approx - exact).abs(), exact))
}

fn approximants() -> Result<Vec<CheckRow>> {
    let cases = [
        ("saddle point, d = 1, rho = 1", 0u8, 10_000usize, 1.0),
        ("super-critical, d = 3, rho = 2 rho_c", 1, 20_000, 1.0),
        ("super-critical, d = 3, rho = 2 rho_c, theta = 2", 1, 20_000, 2.0),
        ("critical, d = 5, rho = rho_c", 2, 10_000, 1.0),
        ("critical, d = 1, alpha = 0.8", 3, 10_000, 1.0),
    ];
    let mut rows = Vec::new();
    for (label, kind, n, theta) in cases {
        let (large, log_h) = approx_error(n, kind, theta)?;
        let (small, _) = approx_error(n / 4, kind, theta)?;
        rows.push(CheckRow::new(format!("{label}: |log error| at N = {n}"), large, 0.1));
        // Below this the error is rounding in ln H_N and cannot shrink further.
        let resolution = 64.0 * f64::EPSILON * log_h.abs().max(1.0);
        if large.max(small) <= resolution {
            rows.push(CheckRow::new(format!("{label}: both errors at rounding level of ln H_N"), large.max(small), resolution));
        } else {
            rows.push(CheckRow::decreasing(format!("{label}: error(N) / error(N/4)"), small, large));
        }
    }
    Ok(rows)
}

fn critical_ratios() -> Result<Vec<CheckRow>> {
    let dens = gaussian(3);
    let rc = rho_c(&dens, 1.0)?;
    // Ratio H_{N-1}/H_N along N = 625 · 2^k; N₀ is where it stays above 0.95.
    let mut deficits = Vec::new();
    for k in 0..=4 {
        let n = 625 << k;
        let m = Model::at_density(3, 1.0, n, rc)?;
        deficits.push(1.0 - m.pt.ratio(n, 1));
    }
    let tail_worst = deficits.iter().rev().scan(0.0f64, |acc, &d| {
        *acc = acc.max(d);
        Some(*acc)
    });
    let from_n0 = tail_worst.filter(|&w| w <= 0.05).last().unwrap_or(deficits[deficits.len() - 1]);

    let n = 10_000;
    let ac = alpha_c(&gaussian(2), 1.0)?;
    let m = Model::at_density(2, 1.0, n, ac * (n as f64).ln())?;
    let j_max = (n as f64).powf(0.9).floor() as usize;
    let worst = (1..=j_max).map(|j| 1.0 - m.pt.ratio(n, j)).fold(0.0, f64::max);
    Ok(vec![
        CheckRow::new("d = 3, rho = rho_c: 1 - H_{N-1}/H_N for N >= N0 (N0 <= 10^4)", from_n0, 0.05),
        CheckRow::new("d = 2, rho = alpha_c log N: 1 - min_{j <= N^0.9} H_{N-j}/H_N", worst, 0.1),
    ])
}

fn uniform_weights() -> Result<Vec<CheckRow>> {
    let n = 1_000;
    let wt = WeightTable::from_values(vec![1.0; n], 1.0)?;
    let pt = partition_table(&wt)?;
    let h = (0..=n).map(|k| (pt.h(k) - 1.0).abs()).fold(0.0, f64::max);
    let p = l1_pmf(&wt, &pt, n)?;
    let u = p.iter().map(|q| (q - 1.0 / n as f64).abs()).fold(0.0, f64::max);
    let two = WeightTable::from_values(vec![1.0; 2], 1.0)?;
    let pgf = cycle_count_pgf(&two, 2.0)?;
    Ok(vec![
        CheckRow::new("max |H_n - 1|", h, 1e-12),
        CheckRow::new("max |P(L1 = j) - 1/N|", u, 1e-15),
        CheckRow::new("|E 2^C - 3| at N = 2", (pgf - 3.0).abs(), 0.0),
    ])
}
