//! Reference computations by exhaustive enumeration, for validating the
//! recursive and spectral code paths on small systems. Everything here is
//! exponential in `N` and shares no code with the production paths.

use std::collections::BTreeMap;

/// Calls `visit` with every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Cycles of a permutation in order of their smallest element.
pub fn cycles(perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut x = perm[start];
        while x != start {
            seen[x] = true;
            cycle.push(x);
            x = perm[x];
        }
        out.push(cycle);
    }
    out
}

fn perm_weight(perm: &[usize], weights: &[f64]) -> f64 {
    cycles(perm).iter().map(|c| weights[c.len() - 1]).product()
}

/// `Σ_{σ ∈ S_n} Π_cycles W_{|c|}`, which is `n! H_n`.
pub fn weighted_permutation_sum(weights: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for_each_permutation(n, |p| total += perm_weight(p, weights));
    total
}

/// Law of `(L1, L2)`: `L1` is the length of the cycle through point 0, `L2`
/// the length of the cycle through the smallest point outside it (0 if none).
pub fn l1_l2_law(weights: &[f64], n: usize) -> BTreeMap<(usize, usize), f64> {
    let mut mass: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut total = 0.0;
    for_each_permutation(n, |p| {
        let w = perm_weight(p, weights);
        let cs = cycles(p);
        let l1 = cs[0].len();
        let l2 = cs.get(1).map_or(0, Vec::len);
        *mass.entry((l1, l2)).or_default() += w;
        total += w;
    });
    mass.values_mut().for_each(|v| *v /= total);
    mass
}

/// Law of the number of cycles, as probabilities indexed by count.
pub fn cycle_count_law(weights: &[f64], n: usize) -> Vec<f64> {
    let mut mass = vec![0.0; n + 1];
    let mut total = 0.0;
    for_each_permutation(n, |p| {
        let w = perm_weight(p, weights);
        mass[cycles(p).len()] += w;
        total += w;
    });
    mass.iter_mut().for_each(|v| *v /= total);
    mass
}

/// `H_n` from the cycle index: `Σ_{λ ⊢ n} Π_j (W_j/j)^{c_j} / c_j!`.
pub fn cycle_index_sum(weights: &[f64], n: usize) -> f64 {
    fn rec(weights: &[f64], remaining: usize, max_part: usize) -> f64 {
        if remaining == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        for part in (1..=max_part.min(remaining)).rev() {
            let base = weights[part - 1] / part as f64;
            let mut term = 1.0;
            let mut count = 1;
            while count * part <= remaining {
                term *= base / count as f64;
                total += term * rec(weights, remaining - count * part, part - 1);
                count += 1;
            }
        }
        total
    }
    rec(weights, n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_permutations() {
        let mut k = 0;
        for_each_permutation(5, |_| k += 1);
        assert_eq!(k, 120);
    }

    #[test]
    fn uniform_weights() {
        assert_eq!(weighted_permutation_sum(&[1.0; 6], 6), 720.0);
        assert!((cycle_index_sum(&[1.0; 12], 12) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stirling_numbers_of_first_kind() {
        // Unsigned Stirling numbers c(4, k) = 6, 11, 6, 1.
        let law = cycle_count_law(&[1.0; 4], 4);
        let expected = [0.0, 6.0, 11.0, 6.0, 1.0];
        for k in 0..=4 {
            assert!((law[k] * 24.0 - expected[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_agrees_with_cycle_index() {
        let w = [1.5, 0.3, 2.0, 0.7, 1.1, 0.2];
        for n in 1..=6 {
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let a = weighted_permutation_sum(&w, n) / fact;
            let b = cycle_index_sum(&w, n);
            assert!((a / b - 1.0).abs() < 1e-13);
        }
    }
}
