//! Shell decomposition of `Z^d` under a positive definite quadratic form
//! `q(k) = kᵀ M k`: the distinct values of `q` up to a cutoff together with
//! their multiplicities. Lattice sums of radial functions then reduce to one
//! term per shell.

use nalgebra::DMatrix;

use crate::error::{numeric, Result};

const MAX_POINTS: f64 = 6.0e7;

#[derive(Clone, Debug)]
pub(crate) struct QuadForm {
    m: DMatrix<f64>,
    iso: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Shells {
    /// Ascending form values, starting with `q = 0`.
    pub q: Vec<f64>,
    pub mult: Vec<f64>,
}

impl QuadForm {
    pub fn new(m: DMatrix<f64>) -> Self {
        let d = m.nrows();
        let c = m[(0, 0)];
        let iso = (0..d)
            .all(|i| (0..d).all(|j| if i == j { m[(i, j)] == c } else { m[(i, j)] == 0.0 }))
            .then_some(c);
        Self { m, iso }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: &self.m * c, iso: self.iso.map(|v| v * c) }
    }

    pub fn shells(&self, q_max: f64) -> Result<Shells> {
        match self.iso {
            Some(c) => iso_shells(self.dim(), c, q_max),
            None => general_shells(&self.m, q_max),
        }
    }
}

fn iso_shells(d: usize, c: f64, q_max: f64) -> Result<Shells> {
    let n_max = (q_max / c * (1.0 + 1e-12)).floor();
    if d == 1 {
        let k_max = n_max.sqrt().floor() as i64;
        let mut out = Shells::default();
        for k in 0..=k_max {
            out.q.push(c * (k * k) as f64);
            out.mult.push(if k == 0 { 1.0 } else { 2.0 });
        }
        return Ok(out);
    }
    let volume = n_max.max(1.0).powf(d as f64 / 2.0);
    if n_max > MAX_POINTS || volume > MAX_POINTS * 2f64.powi(d as i32) {
        return numeric(format!("lattice shell table too large (n_max = {n_max:e}, d = {d})"));
    }
    let n_max = n_max as usize;
    let mut counts = vec![0.0f64; n_max + 1];
    fill_orthant(d, 0, 1.0, n_max, &mut counts);
    let mut out = Shells::default();
    for (n, &m) in counts.iter().enumerate() {
        if m > 0.0 {
            out.q.push(c * n as f64);
            out.mult.push(m);
        }
    }
    Ok(out)
}

fn fill_orthant(dims_left: usize, partial: usize, mult: f64, n_max: usize, counts: &mut [f64]) {
    if dims_left == 0 {
        counts[partial] += mult;
        return;
    }
    let mut k = 0usize;
    while partial + k * k <= n_max {
        let m = if k == 0 { mult } else { 2.0 * mult };
        fill_orthant(dims_left - 1, partial + k * k, m, n_max, counts);
        k += 1;
    }
}

fn general_shells(m: &DMatrix<f64>, q_max: f64) -> Result<Shells> {
    let d = m.nrows();
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| crate::error::Error::Numeric("singular quadratic form".into()))?;
    let radius: Vec<i64> = (0..d).map(|i| (q_max * inv[(i, i)]).max(0.0).sqrt().floor() as i64).collect();
    let points: f64 = radius.iter().map(|&r| (2 * r + 1) as f64).product();
    if points > MAX_POINTS {
        return numeric(format!("lattice enumeration too large ({points:e} points)"));
    }
    let mut entries: Vec<f64> = Vec::new();
    let mut k: Vec<i64> = radius.iter().map(|&r| -r).collect();
    let limit = q_max * (1.0 + 1e-12);
    loop {
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += k[i] as f64 * m[(i, j)] * k[j] as f64;
            }
        }
        if q <= limit {
            entries.push(q.max(0.0));
        }
        let mut axis = 0;
        loop {
            if axis == d {
                entries.sort_by(|a, b| a.total_cmp(b));
                return Ok(Shells { mult: vec![1.0; entries.len()], q: entries });
            }
            if k[axis] < radius[axis] {
                k[axis] += 1;
                break;
            }
            k[axis] = -radius[axis];
            axis += 1;
        }
    }
}
