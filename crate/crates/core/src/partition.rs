//! Partition functions `H_n = (1/n!) Σ_{σ ∈ S_n} Π_cycles W_{|c|}` through
//! the recursion `n H_n = Σ_{j=1}^{n} W_j H_{n-j}`, together with the
//! asymptotic approximants for each regime.
//!
//! The default path tilts the sequence to `h_n = H_n x^n` and stores it as
//! mantissas relative to a scale that is reset whenever the values drift
//! by more than `e^500`, so each step is a plain dot product. A log-domain
//! path with max-shifted sums serves as the reference; the scaled path is
//! checked against it on a stride of indices and falls back to it on
//! disagreement.

use std::f64::consts::PI;
use std::ops::Range;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{param, Result};
use crate::genfun::SaddleInfo;
use crate::weights::{ModelParams, WeightTable};

const SCALE_SPAN: f64 = 500.0;
const CHUNK: usize = 4096;
const PAR_MIN_LEN: usize = 4 * CHUNK;
/// Largest admissible `-N ln x`, so tilted weights stay far from underflow.
const MAX_TILT_EXPONENT: f64 = 100.0;
/// Tolerance in `ln H` between the scaled path and the log-domain check.
const CHECK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Scaled arithmetic with periodic log-domain checks.
    Auto,
    /// Max-shifted log-sum-exp at every step.
    LogDomain,
}

#[derive(Clone, Copy, Debug)]
pub struct PartitionOptions {
    pub method: Method,
    /// Tilt `x ∈ (0, 1]`; chosen from the weights when `None`.
    pub tilt: Option<f64>,
    /// Every `check_stride`-th index is recomputed in the log domain.
    pub check_stride: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { method: Method::Auto, tilt: None, check_stride: 100 }
    }
}

/// `ln H_0, ..., ln H_N`.
#[derive(Clone, Debug)]
pub struct PartitionTable {
    log_h: Vec<f64>,
    method: Method,
    tilt: f64,
}

impl PartitionTable {
    pub fn n(&self) -> usize {
        self.log_h.len() - 1
    }

    pub fn log_h(&self, n: usize) -> f64 {
        self.log_h[n]
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_h
    }

    /// `H_n`; overflows to infinity for large systems, prefer [`Self::log_h`].
    pub fn h(&self, n: usize) -> f64 {
        self.log_h[n].exp()
    }

    /// `H_{n-j} / H_n`.
    pub fn ratio(&self, n: usize, j: usize) -> f64 {
        (self.log_h[n - j] - self.log_h[n]).exp()
    }

    /// Indices with `H_n = 0`.
    pub fn degenerate(&self) -> Vec<usize> {
        (0..self.log_h.len()).filter(|&n| self.log_h[n] == f64::NEG_INFINITY).collect()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let (ra, rb) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn chunked_dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < PAR_MIN_LEN {
        return a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(|(x, y)| dot(x, y)).sum();
    }
    let ranges = crate::par::chunks(a.len(), CHUNK);
    crate::par::map_ranges(&ranges, |r: Range<usize>| dot(&a[r.clone()], &b[r])).iter().sum()
}

/// `(max, Σ exp(x - max))` over the pairs `a[i] + b[i]`.
fn lse_parts(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.iter().zip(b).map(|(x, y)| x + y).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return (m, 0.0);
    }
    (m, a.iter().zip(b).map(|(x, y)| (x + y - m).exp()).sum())
}

fn combine_lse(parts: &[(f64, f64)]) -> f64 {
    let m = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = parts.iter().map(|(pm, ps)| ps * (pm - m).exp()).sum();
    m + s.ln()
}

/// `ln Σ_{i<k} W_{k-i} H_i - ln k`, with `rev_logw[t] = ln W_{N-t}`.
fn log_step(rev_logw: &[f64], log_h: &[f64], k: usize, n: usize) -> f64 {
    let a = &rev_logw[n - k..n];
    let b = &log_h[..k];
    let parts: Vec<(f64, f64)> = if k < PAR_MIN_LEN {
        a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(|(x, y)| lse_parts(x, y)).collect()
    } else {
        let ranges = crate::par::chunks(k, CHUNK);
        crate::par::map_ranges(&ranges, |r: Range<usize>| lse_parts(&a[r.clone()], &b[r]))
    };
    combine_lse(&parts) - (k as f64).ln()
}

fn reversed_log_weights(wt: &WeightTable) -> Vec<f64> {
    let n = wt.n();
    (0..n).map(|t| wt.get(n - t).ln()).collect()
}

fn log_domain(wt: &WeightTable) -> Vec<f64> {
    let n = wt.n();
    let rev = reversed_log_weights(wt);
    let mut log_h = vec![0.0; n + 1];
    for k in 1..=n {
        log_h[k] = log_step(&rev, &log_h, k, n);
    }
    log_h
}

/// Tilt solving `Σ_{j<=N} W_j x^j = N` on the admissible range.
fn auto_tilt(wt: &WeightTable) -> f64 {
    let n = wt.n();
    let lo = (-MAX_TILT_EXPONENT / n as f64).exp();
    let f = |x: f64| -> f64 {
        let mut p = 1.0;
        let mut s = 0.0;
        for j in 1..=n {
            p *= x;
            s += wt.get(j) * p;
        }
        s - n as f64
    };
    if f(lo) >= 0.0 {
        return lo;
    }
    if f(1.0) <= 0.0 {
        return 1.0;
    }
    let (mut a, mut b) = (lo, 1.0);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

struct Block {
    start: usize,
    scale: f64,
}

fn scaled(wt: &WeightTable, tilt: f64, stride: usize) -> Option<Vec<f64>> {
    let n = wt.n();
    let ln_x = tilt.ln();
    let rev_tilted: Vec<f64> = (0..n)
        .map(|t| {
            let j = n - t;
            wt.get(j) * (j as f64 * ln_x).exp()
        })
        .collect();
    let rev_logw = reversed_log_weights(wt);
    let mut mant = vec![0.0; n + 1];
    let mut log_h = vec![0.0; n + 1];
    let mut blocks = vec![Block { start: 0, scale: 0.0 }];
    mant[0] = 1.0;
    for k in 1..=n {
        let off = n - k;
        let mut parts: Vec<(f64, f64)> = Vec::with_capacity(blocks.len());
        for (b, block) in blocks.iter().enumerate() {
            let end = blocks.get(b + 1).map_or(k, |nb| nb.start);
            let s = chunked_dot(&rev_tilted[off + block.start..off + end], &mant[block.start..end]);
            if s > 0.0 {
                parts.push((block.scale, s));
            }
        }
        let ln_hk = if parts.is_empty() {
            f64::NEG_INFINITY
        } else {
            let m = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = parts.iter().map(|(sc, s)| s * (sc - m).exp()).sum();
            total.ln() + m - (k as f64).ln()
        };
        let cur = blocks.last().expect("at least one block");
        if ln_hk.is_finite() && (ln_hk - cur.scale).abs() > SCALE_SPAN {
            blocks.push(Block { start: k, scale: ln_hk });
            mant[k] = 1.0;
        } else {
            mant[k] = (ln_hk - cur.scale).exp();
        }
        log_h[k] = ln_hk - k as f64 * ln_x;
        if k % stride == 0 || k == n {
            let check = log_step(&rev_logw, &log_h, k, n);
            let agree = (check == f64::NEG_INFINITY && log_h[k] == f64::NEG_INFINITY)
                || (check - log_h[k]).abs() <= CHECK_TOL * check.abs().max(1.0);
            if !agree {
                log::warn!("scaled recursion disagrees with log domain at n = {k}; switching paths");
                return None;
            }
        }
    }
    Some(log_h)
}

/// `ln H_0, ..., ln H_N` for the weights in `wt`.
pub fn partition_table(wt: &WeightTable) -> Result<PartitionTable> {
    partition_table_with(wt, PartitionOptions::default())
}

pub fn partition_table_with(wt: &WeightTable, opts: PartitionOptions) -> Result<PartitionTable> {
    let n = wt.n();
    if opts.check_stride == 0 {
        return param("check stride must be positive");
    }
    let tilt = match opts.tilt {
        Some(x) => {
            if !(x > 0.0 && x <= 1.0) {
                return param(format!("tilt must lie in (0, 1], got {x}"));
            }
            if -(n as f64) * x.ln() > MAX_TILT_EXPONENT {
                return param(format!("tilt {x} underflows the tilted weights at N = {n}"));
            }
            x
        }
        None => auto_tilt(wt),
    };
    let (log_h, method) = match opts.method {
        Method::LogDomain => (log_domain(wt), Method::LogDomain),
        Method::Auto => match scaled(wt, tilt, opts.check_stride) {
            Some(v) => (v, Method::Auto),
            None => (log_domain(wt), Method::LogDomain),
        },
    };
    Ok(PartitionTable { log_h, method, tilt })
}

/// Probability generating function `E[t^{C(π)}] = H_N(tθ) / H_N(θ)` of the
/// number of cycles.
pub fn cycle_count_pgf(wt: &WeightTable, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return param(format!("pgf argument must be non-negative, got {t}"));
    }
    let n = wt.n();
    let base = partition_table(wt)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let tilted = wt.scaled(t);
    if let (Some(a), Some(b)) = (plain_h(&tilted), plain_h(wt)) {
        return Ok(a / b);
    }
    let tilted = partition_table(&tilted)?;
    Ok((tilted.log_h(n) - base.log_h(n)).exp())
}

/// `H_N` by the unscaled recursion, when every intermediate value stays
/// comfortably inside the double range. Small systems get exact arithmetic
/// wherever the inputs allow it.
fn plain_h(wt: &WeightTable) -> Option<f64> {
    let n = wt.n();
    if n > 256 {
        return None;
    }
    let w = wt.values();
    let mut h = vec![1.0f64];
    for k in 1..=n {
        let v = (0..k).map(|i| w[k - i - 1] * h[i]).sum::<f64>() / k as f64;
        if !(v.is_finite() && (v == 0.0 || (1e-250..1e250).contains(&v))) {
            return None;
        }
        h.push(v);
    }
    (h[n] > 0.0).then_some(h[n])
}

/// Saddle-point approximant of `ln H_{N-j}`:
/// `G_L(r_N) - (N-j) ln r_N - ½ ln(2π a_N)`.
pub fn log_h_approx_subcritical(params: &ModelParams, saddle: &SaddleInfo, j: usize) -> f64 {
    let n = params.n() as f64;
    saddle.g - (n - j as f64) * (-saddle.gap).ln_1p() - 0.5 * (2.0 * PI * saddle.a).ln()
}

/// Super-critical approximant of `ln H_{N-j}`:
/// `F_L(1) + (θ-1) ln N + (θ-1) ln(1 - τ - j/N) - ln Γ(θ)`.
pub fn log_h_approx_supercritical(params: &ModelParams, f_one: f64, tau: f64, j: usize) -> f64 {
    let theta = params.theta();
    let n = params.n() as f64;
    let frac = 1.0 - tau - j as f64 / n;
    f_one + (theta - 1.0) * n.ln() + (theta - 1.0) * frac.ln() - ln_gamma(theta)
}

/// Critical approximant of `ln H_{N-j}` in `d >= 5` at `ρ = ρ_c`, for `j = o(√N)`:
/// `F_L(1) + ((θ-1)/2) ln N + ((θ-1)/2) ln(g''(1)/(2g'(1)) + ½) - ln 2 - ln Γ((θ+1)/2)`.
pub fn log_h_approx_critical_high(params: &ModelParams, f_one: f64, g1: f64, g2: f64) -> f64 {
    let theta = params.theta();
    let n = params.n() as f64;
    let half = 0.5 * (theta - 1.0);
    f_one + half * n.ln() + half * (g2 / (2.0 * g1) + 0.5).ln() - 2f64.ln() - ln_gamma(0.5 * (theta + 1.0))
}

/// `ln[(-1)^n binom(-2θ, n)] = ln[(2θ)(2θ+1)...(2θ+n-1)/n!]`.
pub fn ln_neg_binom_coeff(theta: f64, n: usize) -> f64 {
    ln_gamma(2.0 * theta + n as f64) - ln_gamma(2.0 * theta) - ln_gamma(n as f64 + 1.0)
}

/// `Σ_n (-1)^n binom(-2θ, n) (θ+n) exp(-(θ+n)²/(2 c y))`, summed until the
/// terms are negligible. `c = α²σ²`.
pub fn critical_1d_series(theta: f64, c: f64, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    loop {
        let tn = theta + n as f64;
        let ln_term = ln_neg_binom_coeff(theta, n) + tn.ln() - tn * tn / (2.0 * c * y);
        let term = ln_term.exp();
        sum += term;
        // Terms are eventually decreasing in n; stop when far past the peak.
        if tn * tn > 2.0 * c * y * (theta + 1.0) && term <= 1e-18 * sum {
            return sum;
        }
        n += 1;
        if n > 100_000 {
            return sum;
        }
    }
}

/// Critical one-dimensional approximant of `ln H_{N-j}` at `ρ = α√N`:
/// `ln C₀ + G_L(1 - L^{-2}) - ln N - (3/2) ln(1 - j/N) + ln S(1 - j/N)` with
/// `C₀ = e^{√2θ/σ} (1 - e^{-√2/σ})^{2θ} / (√(2π) α σ)`.
pub fn log_h_approx_critical_1d(params: &ModelParams, g_at_edge: f64, j: usize) -> Result<f64> {
    if params.dim() != 1 {
        return param("the one-dimensional critical approximant needs d = 1");
    }
    let theta = params.theta();
    let n = params.n() as f64;
    let sigma = params.density().variance_1d().sqrt();
    let alpha = params.rho() / n.sqrt();
    let sqrt2 = 2f64.sqrt();
    let ln_c0 = sqrt2 * theta / sigma + 2.0 * theta * (-(-sqrt2 / sigma).exp()).ln_1p()
        - (2.0 * PI).sqrt().ln()
        - (alpha * sigma).ln();
    let y = 1.0 - j as f64 / n;
    let s = critical_1d_series(theta, alpha * alpha * sigma * sigma, y);
    Ok(ln_c0 + g_at_edge - n.ln() - 1.5 * y.ln() + s.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::weights::weight_table;
    use crate::JumpDensity;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn gaussian_table(d: usize, theta: f64, n: usize, rho: f64) -> WeightTable {
        let dens = Arc::new(JumpDensity::isotropic(d, 1.0).unwrap());
        weight_table(&ModelParams::with_density(dens, theta, n, rho).unwrap()).unwrap()
    }

    #[test]
    fn uniform_permutation_has_unit_partition_function() {
        let wt = WeightTable::from_values(vec![1.0; 500], 1.0).unwrap();
        for method in [Method::Auto, Method::LogDomain] {
            let pt = partition_table_with(&wt, PartitionOptions { method, ..Default::default() }).unwrap();
            assert!(pt.log_values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn ewens_rising_factorial() {
        let theta = 2.7;
        let wt = WeightTable::from_values(vec![theta; 300], theta).unwrap();
        let pt = partition_table(&wt).unwrap();
        for n in [1usize, 2, 10, 100, 300] {
            let exact = ln_gamma(theta + n as f64) - ln_gamma(theta) - ln_gamma(n as f64 + 1.0);
            assert_relative_eq!(pt.log_h(n), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn matches_enumeration_small_systems() {
        for (d, theta, rho) in [(1, 1.0, 0.8), (2, 0.5, 2.0), (3, 2.0, 0.05)] {
            let wt = gaussian_table(d, theta, 7, rho);
            let pt = partition_table(&wt).unwrap();
            for n in 1..=7usize {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let brute = oracle::weighted_permutation_sum(wt.values(), n);
                assert_relative_eq!(fact * pt.h(n), brute, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn matches_cycle_index() {
        let wt = gaussian_table(2, 1.3, 25, 0.7);
        let pt = partition_table(&wt).unwrap();
        for n in [5usize, 12, 25] {
            assert_relative_eq!(pt.h(n), oracle::cycle_index_sum(wt.values(), n), max_relative = 1e-11);
        }
    }

    #[test]
    fn paths_agree_on_large_system() {
        let wt = gaussian_table(1, 1.0, 3000, 1.0);
        let fast = partition_table(&wt).unwrap();
        assert_eq!(fast.method(), Method::Auto);
        let slow = partition_table_with(&wt, PartitionOptions { method: Method::LogDomain, ..Default::default() })
            .unwrap();
        for n in (0..=3000).step_by(37) {
            assert!((fast.log_h(n) - slow.log_h(n)).abs() <= 1e-11 * slow.log_h(n).abs().max(1.0));
        }
        assert!(fast.log_h(3000) > 1000.0);
    }

    #[test]
    fn tilt_independence() {
        let wt = gaussian_table(3, 1.0, 2000, 0.3);
        let a = partition_table_with(&wt, PartitionOptions { tilt: Some(1.0), ..Default::default() }).unwrap();
        let b = partition_table_with(&wt, PartitionOptions { tilt: Some(0.97), ..Default::default() }).unwrap();
        assert_eq!(a.method(), Method::Auto);
        for n in 0..=2000 {
            assert!((a.log_h(n) - b.log_h(n)).abs() <= 1e-12 * a.log_h(n).abs().max(1.0));
        }
        assert!(partition_table_with(&wt, PartitionOptions { tilt: Some(0.5), ..Default::default() }).is_err());
    }

    #[test]
    fn zero_weights_give_degenerate_entries() {
        // Only even cycles allowed: H_n = 0 for odd n.
        let w: Vec<f64> = (1..=20).map(|j| if j % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let wt = WeightTable::from_values(w, 1.0).unwrap();
        let pt = partition_table(&wt).unwrap();
        assert_eq!(pt.degenerate(), (1..=19).step_by(2).collect::<Vec<_>>());
    }

    #[test]
    fn pgf_examples() {
        let wt = WeightTable::from_values(vec![1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(cycle_count_pgf(&wt, 2.0).unwrap(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(cycle_count_pgf(&wt, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(cycle_count_pgf(&wt, 0.0).unwrap(), 0.0);
        let wt = gaussian_table(2, 1.0, 6, 1.0);
        let law = oracle::cycle_count_law(wt.values(), 6);
        for t in [0.5f64, 1.7] {
            let exact: f64 = law.iter().enumerate().map(|(k, p)| p * t.powi(k as i32)).sum();
            assert_relative_eq!(cycle_count_pgf(&wt, t).unwrap(), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn neg_binom_coefficients() {
        // (-1)^n binom(-2, n) = n + 1 at θ = 1.
        for n in 0..10 {
            assert_relative_eq!(ln_neg_binom_coeff(1.0, n).exp(), (n + 1) as f64, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn random_weights_match_cycle_index(w in prop::collection::vec(0.0f64..5.0, 1..14)) {
            let n = w.len();
            let wt = WeightTable::from_values(w.clone(), 1.0).unwrap();
            let pt = partition_table(&wt).unwrap();
            let exact = oracle::cycle_index_sum(&w, n);
            if exact > 0.0 {
                prop_assert!((pt.h(n) / exact - 1.0).abs() < 1e-11);
            } else {
                prop_assert_eq!(pt.log_h(n), f64::NEG_INFINITY);
            }
        }

        #[test]
        fn recursion_identity_holds(w in prop::collection::vec(0.1f64..3.0, 2..200)) {
            let n = w.len();
            let wt = WeightTable::from_values(w.clone(), 1.0).unwrap();
            let pt = partition_table(&wt).unwrap();
            let rhs: f64 = (1..=n).map(|j| w[j - 1] * pt.ratio(n, j)).sum::<f64>() / n as f64;
            prop_assert!((rhs - 1.0).abs() < 1e-11);
        }
    }
}
