//! Exact cycle-length laws and Monte Carlo sampling.
//!
//! Cycles are revealed in order: `L1` is the length of the cycle through the
//! first point, `L2` that of the cycle through the first point not yet
//! visited, and so on. Given `n` unvisited points the next length is `j` with
//! probability `W_j H_{n-j} / (n H_n)`.
//!
//! Every replica draws from its own ChaCha stream keyed by `(seed, replica)`,
//! so results do not depend on how replicas are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{domain, numeric, param, Result};
use crate::partition::PartitionTable;
use crate::weights::{ModelParams, WeightTable};

/// `-ln 1e-12`.
const WINDING_CUT: f64 = 27.631;

/// Random stream for one replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Cycle lengths of one sampled permutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleSample {
    /// `L1, L2, ...` in order of discovery.
    pub ordered: Vec<usize>,
    /// The same lengths, non-increasing.
    pub sorted: Vec<usize>,
    /// `(j, C_j)` for every length `j` that occurs.
    pub counts: Vec<(usize, usize)>,
    pub seed: u64,
    pub replica: u64,
}

impl CycleSample {
    pub fn from_ordered(ordered: Vec<usize>, seed: u64, replica: u64) -> Self {
        let mut sorted = ordered.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for &j in sorted.iter().rev() {
            match counts.last_mut() {
                Some((len, c)) if *len == j => *c += 1,
                _ => counts.push((j, 1)),
            }
        }
        Self { ordered, sorted, counts, seed, replica }
    }

    pub fn n(&self) -> usize {
        self.ordered.iter().sum()
    }

    /// Number of cycles `C(π)`.
    pub fn cycle_count(&self) -> usize {
        self.ordered.len()
    }

    /// `C_j`.
    pub fn count(&self, j: usize) -> usize {
        self.counts.binary_search_by_key(&j, |c| c.0).map_or(0, |i| self.counts[i].1)
    }
}

fn check_tables(wt: &WeightTable, pt: &PartitionTable, n: usize) -> Result<()> {
    if n == 0 || n > wt.n() || n > pt.n() {
        return param(format!("system size {n} outside the tables (N = {})", wt.n().min(pt.n())));
    }
    if pt.log_h(n) == f64::NEG_INFINITY {
        return domain(format!("H_{n} = 0: no permutation of {n} points has positive weight"));
    }
    Ok(())
}

/// `P(L1 = j)` for `j = 1..=n` in a system of `n` points (entry `j - 1`).
pub fn l1_pmf(wt: &WeightTable, pt: &PartitionTable, n: usize) -> Result<Vec<f64>> {
    check_tables(wt, pt, n)?;
    let base = pt.log_h(n) + (n as f64).ln();
    let mut p: Vec<f64> = (1..=n).map(|j| (wt.get(j).ln() + pt.log_h(n - j) - base).exp()).collect();
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return numeric(format!("cycle-length law sums to {total}"));
    }
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// `P(L1 = j1, ..., Lm = jm) = Π_i W_{j_i} / (n - j_1 - ... - j_{i-1}) · H_{n - Σj} / H_n`.
pub fn sequence_prob(wt: &WeightTable, pt: &PartitionTable, n: usize, lengths: &[usize]) -> Result<f64> {
    check_tables(wt, pt, n)?;
    let mut remaining = n;
    let mut ln_p = -pt.log_h(n);
    for &j in lengths {
        if j == 0 || j > remaining {
            return Ok(0.0);
        }
        ln_p += wt.get(j).ln() - (remaining as f64).ln();
        remaining -= j;
    }
    Ok((ln_p + pt.log_h(remaining)).exp())
}

/// Joint law of `(L1, L2)` with `L2 = 0` when the first cycle covers all points.
pub fn l1_l2_pmf(wt: &WeightTable, pt: &PartitionTable, n: usize) -> Result<Vec<((usize, usize), f64)>> {
    check_tables(wt, pt, n)?;
    let mut out = Vec::new();
    for j1 in 1..=n {
        if j1 == n {
            out.push(((n, 0), sequence_prob(wt, pt, n, &[n])?));
            continue;
        }
        for j2 in 1..=n - j1 {
            out.push(((j1, j2), sequence_prob(wt, pt, n, &[j1, j2])?));
        }
    }
    Ok(out)
}

/// Draws the cycle lengths of one permutation of `N` points.
pub fn sample_cycle_lengths(wt: &WeightTable, pt: &PartitionTable, seed: u64, replica: u64) -> Result<CycleSample> {
    let ordered = draw_lengths(wt, pt, &mut replica_rng(seed, replica))?;
    Ok(CycleSample::from_ordered(ordered, seed, replica))
}

/// Ordered cycle lengths `L1, L2, ...` drawn from an arbitrary generator.
pub fn draw_lengths<R: Rng + ?Sized>(wt: &WeightTable, pt: &PartitionTable, rng: &mut R) -> Result<Vec<usize>> {
    let n = wt.n().min(pt.n());
    check_tables(wt, pt, n)?;
    let log_w: Vec<f64> = wt.values().iter().map(|w| w.ln()).collect();
    let mut remaining = n;
    let mut out = Vec::new();
    while remaining > 0 {
        let base = pt.log_h(remaining) + (remaining as f64).ln();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = 0;
        for j in 1..=remaining {
            let p = (log_w[j - 1] + pt.log_h(remaining - j) - base).exp();
            if p > 0.0 {
                pick = j;
                acc += p;
                if acc > u {
                    break;
                }
            }
        }
        if pick == 0 {
            return numeric(format!("no admissible cycle length with {remaining} points left"));
        }
        out.push(pick);
        remaining -= pick;
    }
    Ok(out)
}

/// `m` independent replicas of [`sample_cycle_lengths`].
pub fn sample_replicas(wt: &WeightTable, pt: &PartitionTable, seed: u64, m: usize) -> Result<Vec<CycleSample>> {
    crate::par::map_indexed(m, |i| sample_cycle_lengths(wt, pt, seed, i as u64))
        .into_iter()
        .collect()
}

/// Lengths of the first cycle in `m` replicas; cheaper than full replicas.
pub fn sample_first_lengths(wt: &WeightTable, pt: &PartitionTable, seed: u64, m: usize) -> Result<Vec<usize>> {
    let n = wt.n().min(pt.n());
    let pmf = l1_pmf(wt, pt, n)?;
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for p in &pmf {
        acc += p;
        cdf.push(acc);
    }
    Ok(crate::par::map_indexed(m, |i| {
        let u: f64 = replica_rng(seed, i as u64).gen::<f64>() * acc;
        cdf.partition_point(|&c| c <= u).min(n - 1) + 1
    }))
}

/// Assembles a permutation of `0..N` with the given ordered cycle lengths:
/// each cycle starts at the smallest unvisited point and picks its other
/// members uniformly at random in uniformly random order.
pub fn assemble_permutation<R: Rng + ?Sized>(lengths: &[usize], rng: &mut R) -> Result<Vec<usize>> {
    let n: usize = lengths.iter().sum();
    let mut unvisited: Vec<usize> = (0..n).collect();
    let mut perm = vec![usize::MAX; n];
    let mut chosen = vec![false; n];
    for &j in lengths {
        if j == 0 {
            return param("cycle lengths must be positive");
        }
        if j > unvisited.len() {
            return param("cycle lengths exceed the number of points");
        }
        // unvisited stays sorted, so its first entry is the smallest remaining point.
        let head = unvisited[0];
        let mut members = vec![head];
        let mut idx: Vec<usize> = (1..unvisited.len()).collect();
        for k in 0..j - 1 {
            let r = rng.gen_range(k..idx.len());
            idx.swap(k, r);
            members.push(unvisited[idx[k]]);
        }
        for &m in &members {
            chosen[m] = true;
        }
        unvisited.retain(|&p| !chosen[p]);
        for w in members.windows(2) {
            perm[w[0]] = w[1];
        }
        perm[members[j - 1]] = head;
    }
    Ok(perm)
}

#[derive(Clone, Debug, Serialize)]
pub struct PositionSample {
    /// `perm[i]` is the image of point `i`.
    pub perm: Vec<usize>,
    /// Positions in `[0, L)^d`, one row per point.
    pub points: Vec<Vec<f64>>,
    /// Index of the cycle containing each point.
    pub cycle_of: Vec<usize>,
    /// Winding vector of each cycle, in cycle order.
    pub windings: Vec<Vec<i64>>,
}

/// Winding vector `k` of a cycle of length `j`, with probability proportional
/// to `exp(-L² kᵀΣ⁻¹k / 2j)`; vectors below relative mass `1e-12` are dropped.
pub fn sample_winding<R: Rng + ?Sized>(params: &ModelParams, j: usize, rng: &mut R) -> Result<Vec<i64>> {
    let Some(g) = params.density().as_gaussian() else {
        return param("winding vectors need a Gaussian jump density");
    };
    if j == 0 {
        return param("cycle length must be positive");
    }
    let d = params.dim();
    let side = params.side();
    let prec = g.precision();
    let cov = g.covariance();
    let radius: Vec<i64> =
        (0..d).map(|i| ((2.0 * WINDING_CUT * j as f64 * cov[(i, i)]).sqrt() / side).floor() as i64).collect();
    let mut ks: Vec<Vec<i64>> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    let mut k: Vec<i64> = radius.iter().map(|r| -r).collect();
    loop {
        let mut q = 0.0;
        for a in 0..d {
            for b in 0..d {
                q += k[a] as f64 * prec[(a, b)] * k[b] as f64;
            }
        }
        let e = side * side * q / (2.0 * j as f64);
        if e <= WINDING_CUT {
            ks.push(k.clone());
            ws.push((-e).exp());
        }
        let mut axis = 0;
        while axis < d {
            if k[axis] < radius[axis] {
                k[axis] += 1;
                break;
            }
            k[axis] = -radius[axis];
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    let total: f64 = ws.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in ks.iter().zip(&ws) {
        if u < *w {
            return Ok(k.clone());
        }
        u -= w;
    }
    Ok(ks.last().cloned().unwrap_or_else(|| vec![0; d]))
}

/// Places the points of a permutation with the given ordered cycle lengths:
/// a cycle of length `j` winds around the torus by `Lk` with probability
/// proportional to `φ^{*j}(Lk)`, its steps form a Gaussian bridge with total
/// displacement `Lk`, and its first point is uniform on the torus.
pub fn sample_positions<R: Rng + ?Sized>(params: &ModelParams, lengths: &[usize], rng: &mut R) -> Result<PositionSample> {
    let Some(g) = params.density().as_gaussian() else {
        return param("position sampling needs a Gaussian jump density");
    };
    let d = params.dim();
    let side = params.side();
    let perm = assemble_permutation(lengths, rng)?;
    let n = perm.len();
    let sqrt_cov = g.sqrt_cov();
    let mut points = vec![vec![0.0; d]; n];
    let mut cycle_of = vec![usize::MAX; n];
    let mut windings = Vec::with_capacity(lengths.len());
    let mut cycle_idx = 0;
    for start in 0..n {
        if cycle_of[start] != usize::MAX {
            continue;
        }
        let j = lengths[cycle_idx];
        let k = sample_winding(params, j, rng)?;
        let steps: Vec<DVector<f64>> = (0..j)
            .map(|_| sqrt_cov * DVector::from_fn(d, |_, _| StandardNormal.sample(rng)))
            .collect();
        let total = steps.iter().fold(DVector::zeros(d), |a, s| a + s);
        let target = DVector::from_iterator(d, k.iter().map(|&v| v as f64 * side));
        let shift = (total - target) / j as f64;
        let mut x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * side).collect();
        let mut p = start;
        for step in &steps {
            cycle_of[p] = cycle_idx;
            points[p] = x.iter().map(|v| v.rem_euclid(side)).collect();
            for a in 0..d {
                x[a] += step[a] - shift[a];
            }
            p = perm[p];
        }
        windings.push(k);
        cycle_idx += 1;
    }
    Ok(PositionSample { perm, points, cycle_of, windings })
}

/// One run of the modified stick-breaking process.
#[derive(Clone, Debug, Serialize)]
pub struct StickSample {
    pub x: Vec<f64>,
    /// Partial sums `S_k`.
    pub s: Vec<f64>,
    pub tau: f64,
}

/// `K` steps of the modified stick-breaking process with parameter `θ` and
/// unbreakable mass `τ`: `Y_k ~ Beta(1, θ)`, and the `k`-th piece is cut only
/// with probability `1 - τ / (1 - S_{k-1})`.
pub fn stick_breaking<R: Rng + ?Sized>(theta: f64, tau: f64, k: usize, rng: &mut R) -> Result<StickSample> {
    if !(theta > 0.0 && theta.is_finite()) {
        return param(format!("theta must be positive, got {theta}"));
    }
    if !(0.0..1.0).contains(&tau) {
        return param(format!("tau must lie in [0, 1), got {tau}"));
    }
    if k == 0 {
        return param("need at least one step");
    }
    let mut s = 0.0;
    let mut xs = Vec::with_capacity(k);
    let mut partial = Vec::with_capacity(k);
    for _ in 0..k {
        let y = 1.0 - (1.0 - rng.gen::<f64>()).powf(1.0 / theta);
        let cut = rng.gen::<f64>() < 1.0 - tau / (1.0 - s);
        let x = if cut { (1.0 - s - tau) * y } else { 0.0 };
        s += x;
        xs.push(x);
        partial.push(s);
    }
    Ok(StickSample { x: xs, s: partial, tau })
}

/// Non-increasing rearrangement (stable).
pub fn rearrange_decreasing(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}
