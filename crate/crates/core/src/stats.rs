//! Distances between empirical and reference distributions.

use serde::Serialize;

use crate::error::{param, Result};
use crate::sampler::CycleSample;

/// Sorted sample.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalSummary {
    sorted: Vec<f64>,
    zeros: usize,
}

impl EmpiricalSummary {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return param("empty sample");
        }
        if values.iter().any(|v| v.is_nan()) {
            return param("sample contains NaN");
        }
        values.sort_by(f64::total_cmp);
        let zeros = values.iter().filter(|&&v| v == 0.0).count();
        Ok(Self { sorted: values, zeros })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Number of observations equal to zero.
    pub fn zeros(&self) -> usize {
        self.zeros
    }

    /// Groups of equal values as `(value, count)`.
    fn runs(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        let mut i = 0;
        std::iter::from_fn(move || {
            let v = *self.sorted.get(i)?;
            let start = i;
            while i < self.sorted.len() && self.sorted[i] == v {
                i += 1;
            }
            Some((v, i - start))
        })
    }
}

fn next_down(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return x;
    }
    if x == 0.0 {
        return -f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits - 1 } else { bits + 1 })
}

/// `sup_x |F_n(x) - F(x)|`, checking both sides of every jump of the
/// empirical cdf. Atoms of `F` are handled through its left limits.
pub fn ks_distance(sample: &EmpiricalSummary, cdf: impl Fn(f64) -> f64) -> f64 {
    let m = sample.len() as f64;
    let mut below = 0usize;
    let mut worst: f64 = 0.0;
    for (v, count) in sample.runs() {
        let before = below as f64 / m;
        below += count;
        let after = below as f64 / m;
        worst = worst.max((after - cdf(v)).abs()).max((before - cdf(next_down(v))).abs());
    }
    worst
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &EmpiricalSummary, b: &EmpiricalSummary) -> f64 {
    let (xa, xb) = (a.sorted(), b.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let v = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] == v {
            i += 1;
        }
        while j < xb.len() && xb[j] == v {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// KS distance between a discrete law given by `(atom, mass)` pairs in
/// increasing order and a continuous cdf.
pub fn ks_discrete(atoms: &[(f64, f64)], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for &(x, p) in atoms {
        let f = cdf(x);
        worst = worst.max((acc - f).abs());
        acc += p;
        worst = worst.max((acc - f).abs());
    }
    worst
}

/// Total variation distance `½ Σ |p - q|`.
pub fn tv_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return param(format!("length mismatch: {} vs {}", p.len(), q.len()));
    }
    for (name, v) in [("p", p), ("q", q)] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-8 || v.iter().any(|&x| x < 0.0) {
            return param(format!("{name} is not a probability vector (sum {s})"));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `P(L1 >= εN)` from the law of `L1` (entry `j - 1` holds `P(L1 = j)`).
pub fn macro_fraction(pmf: &[f64], epsilon: f64) -> f64 {
    let n = pmf.len();
    let start = (epsilon * n as f64).ceil().max(1.0);
    if start > n as f64 {
        return 0.0;
    }
    pmf[start as usize - 1..].iter().sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

/// Monte Carlo mean and variance of `values`, with plug-in standard errors.
pub fn moments(values: &[f64]) -> Result<MomentEstimate> {
    if values.is_empty() {
        return param("no samples");
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
    Ok(MomentEstimate { mean, var, se_mean: (var / m).sqrt(), se_var: ((m4 - var * var).max(0.0) / m).sqrt() })
}

/// Mean and variance of `C_j / N` over sampled permutations.
pub fn cycle_count_stats(samples: &[CycleSample], j: usize) -> Result<MomentEstimate> {
    let Some(first) = samples.first() else {
        return param("no samples");
    };
    let n = first.n();
    if j == 0 || j > n {
        return Ok(MomentEstimate { mean: 0.0, var: 0.0, se_mean: 0.0, se_var: 0.0 });
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.count(j) as f64 / n as f64).collect();
    moments(&xs)
}

/// Histogram rows `(left, right, count)` over `bins` equal cells of `[lo, hi]`;
/// values outside the range are dropped.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Vec<(f64, f64, usize)>> {
    if bins == 0 || !(hi > lo) {
        return param("histogram needs bins >= 1 and hi > lo");
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v >= lo && v <= hi {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    Ok(counts.into_iter().enumerate().map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c)).collect())
}
