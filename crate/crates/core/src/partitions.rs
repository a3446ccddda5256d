//! Partitions of an integer into distinct parts.
//!
//! A solution-set `S` with `min S = 0` is admissible at ratio `ν/f` exactly
//! when the element sum of its reflection `S⋆ = {max S - l}` is below `ν/f`.
//! Every `S⋆` contains 0 and has distinct parts, so branch counting reduces to
//! counting partitions into distinct parts. Parts here follow that `S⋆`
//! convention: each partition is listed with a leading 0.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{domain, Result};

/// Largest `n` accepted by the exact counters.
pub const MAX_N: usize = 5000;

/// A partition into distinct parts, stored as the strictly increasing list of
/// parts with a leading 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DistinctPartition {
    parts: Vec<u64>,
}

impl DistinctPartition {
    /// Validates that `parts` starts at 0 and is strictly increasing.
    pub fn new(parts: Vec<u64>) -> Result<Self> {
        if parts.first() != Some(&0) {
            return domain("distinct partition must start with 0");
        }
        if parts.windows(2).any(|w| w[0] >= w[1]) {
            return domain("distinct partition parts must be strictly increasing");
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn sum(&self) -> u64 {
        self.parts.iter().sum()
    }

    pub fn into_parts(self) -> Vec<u64> {
        self.parts
    }
}

/// Table of `Q(m)` for `m = 0..=n`, with `Q(0) = 1`.
///
/// 0/1 knapsack over the admissible part sizes; each part is used at most once.
pub fn distinct_counts(n: usize) -> Result<Vec<BigUint>> {
    if n > MAX_N {
        return domain(format!("n = {n} exceeds supported maximum {MAX_N}"));
    }
    let mut table = vec![BigUint::zero(); n + 1];
    table[0] = BigUint::one();
    for part in 1..=n {
        for m in (part..=n).rev() {
            let (lo, hi) = table.split_at_mut(m);
            hi[0] += &lo[m - part];
        }
    }
    Ok(table)
}

/// Number of partitions of `n` into distinct positive parts.
pub fn q_distinct(n: usize) -> Result<BigUint> {
    let mut table = distinct_counts(n)?;
    Ok(table.swap_remove(n))
}

/// Calls `visit` with every distinct partition of `n` (leading 0 included) in
/// lexicographic order, without materializing the list.
pub fn for_each_distinct_partition<F>(n: u64, mut visit: F)
where
    F: FnMut(&[u64]),
{
    fn recurse<F: FnMut(&[u64])>(parts: &mut Vec<u64>, remaining: u64, visit: &mut F) {
        if remaining == 0 {
            visit(parts);
            return;
        }
        let last = *parts.last().expect("partition always holds 0");
        // Either the next part closes the partition (p == remaining) or
        // what's left must still fit a strictly larger part (p < remaining - p).
        let mut p = last + 1;
        while 2 * p < remaining {
            parts.push(p);
            recurse(parts, remaining - p, visit);
            parts.pop();
            p += 1;
        }
        if remaining > last {
            parts.push(remaining);
            visit(parts);
            parts.pop();
        }
    }

    let mut parts = vec![0];
    recurse(&mut parts, n, &mut visit);
}

/// Every distinct partition of `n`, lexicographically ordered on the part lists.
pub fn enumerate_distinct_partitions(n: u64) -> Vec<DistinctPartition> {
    let mut out = Vec::new();
    for_each_distinct_partition(n, |parts| {
        out.push(DistinctPartition {
            parts: parts.to_vec(),
        })
    });
    out
}

/// Largest integer `n` with `n < x` (strictly), or `None` when there is none
/// above zero.
pub(crate) fn largest_integer_below(x: f64) -> Option<u64> {
    let c = x.ceil();
    if c <= 1.0 {
        None
    } else {
        Some(c as u64 - 1)
    }
}

fn check_ratio(x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return domain(format!("ratio nu/f must be positive and finite, got {x}"));
    }
    Ok(())
}

/// `F(x) = Σ_{0 < n < x} Q(n)`: the number of multi-site branches with
/// `min S = 0` born below the ratio `x = ν/f`. The singleton `{0}` is not
/// counted.
pub fn counting_function(x: f64) -> Result<BigUint> {
    check_ratio(x)?;
    let Some(top) = largest_integer_below(x) else {
        return Ok(BigUint::zero());
    };
    let top = top as usize;
    if top > MAX_N {
        return domain(format!("nu/f = {x} exceeds supported maximum {MAX_N}"));
    }
    let table = distinct_counts(top)?;
    Ok(table[1..].iter().sum())
}

/// `e^{π √(n/3)} / (4·3^{1/4} n^{3/4})`.
pub fn q_asymptotic(n: u64) -> Result<f64> {
    if n == 0 {
        return domain("asymptotic Q(n) is singular at n = 0");
    }
    let n = n as f64;
    Ok((PI * (n / 3.0).sqrt()).exp() / (4.0 * 3f64.powf(0.25) * n.powf(0.75)))
}

/// `exp[π (n/3)^{1/2}] / (2π (n/3)^{1/4})`.
pub fn f_asymptotic(n: u64) -> Result<f64> {
    if n == 0 {
        return domain("asymptotic F(n) is singular at n = 0");
    }
    let t = n as f64 / 3.0;
    Ok((PI * t.sqrt()).exp() / (2.0 * PI * t.powf(0.25)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    /// Subsets of {1..n} summing to n.
    fn brute_q(n: u64) -> u64 {
        (0u64..(1 << n))
            .filter(|mask| (1..=n).filter(|k| mask >> (k - 1) & 1 == 1).sum::<u64>() == n)
            .count() as u64
    }

    #[test]
    fn q_distinct_examples() {
        assert_eq!(q_distinct(0).unwrap(), big(1));
        assert_eq!(q_distinct(1).unwrap(), big(1));
        assert_eq!(q_distinct(3).unwrap(), big(2));
        assert_eq!(brute_q(9), 8);
        assert_eq!(q_distinct(9).unwrap(), big(8));
        assert_eq!(q_distinct(100).unwrap(), big(444_793));
    }

    #[test]
    fn q_distinct_rejects_beyond_supported_range() {
        assert!(q_distinct(MAX_N + 1).is_err());
        // Q(5000) no longer fits in 128 bits.
        let q = q_distinct(MAX_N).unwrap();
        assert!(q.bits() > 128);
    }

    #[test]
    fn enumeration_examples() {
        let parts = |n| -> Vec<Vec<u64>> {
            enumerate_distinct_partitions(n)
                .into_iter()
                .map(DistinctPartition::into_parts)
                .collect()
        };
        assert_eq!(parts(0), vec![vec![0]]);
        assert_eq!(parts(1), vec![vec![0, 1]]);
        assert_eq!(parts(3), vec![vec![0, 1, 2], vec![0, 3]]);
        assert_eq!(
            parts(6),
            vec![vec![0, 1, 2, 3], vec![0, 1, 5], vec![0, 2, 4], vec![0, 6]]
        );
    }

    #[test]
    fn counting_function_examples() {
        assert_eq!(counting_function(3.1).unwrap(), big(4));
        assert_eq!(counting_function(0.5).unwrap(), big(0));
        let oracle: u64 = (1..=9).map(brute_q).sum();
        assert_eq!(oracle, 32);
        assert_eq!(counting_function(10.0).unwrap(), big(oracle));
        assert_eq!(counting_function(1.0).unwrap(), big(0));
        assert_eq!(counting_function(1.0 + 1e-12).unwrap(), big(1));
    }

    #[test]
    fn counting_function_domain() {
        assert!(counting_function(0.0).is_err());
        assert!(counting_function(-1.0).is_err());
        assert!(counting_function(f64::NAN).is_err());
        assert!(counting_function(f64::INFINITY).is_err());
    }

    #[test]
    fn asymptotic_examples() {
        let e_pi = PI.exp();
        assert!((q_asymptotic(3).unwrap() - e_pi / 12.0).abs() < 1e-12);
        assert!((q_asymptotic(3).unwrap() - 1.9284).abs() < 1e-4);
        let q1 = (PI / 3f64.sqrt()).exp() / (4.0 * 3f64.powf(0.25));
        assert!((q_asymptotic(1).unwrap() - q1).abs() < 1e-12);
        assert!((q_asymptotic(1).unwrap() - 1.1652).abs() < 1e-4);
        assert!((f_asymptotic(3).unwrap() - e_pi / (2.0 * PI)).abs() < 1e-12);
        assert!((f_asymptotic(3).unwrap() - 3.6830).abs() < 1e-4);
        let f12 = (2.0 * PI).exp() / (2.0 * PI * 2f64.sqrt());
        assert!((f_asymptotic(12).unwrap() - f12).abs() < 1e-9);
        assert!((f_asymptotic(12).unwrap() - 60.264).abs() < 1e-3);
        assert!(q_asymptotic(0).is_err());
        assert!(f_asymptotic(0).is_err());
    }

    #[test]
    fn asymptotic_ratios() {
        let exact = q_distinct(100).unwrap().to_f64().unwrap();
        let r = exact / q_asymptotic(100).unwrap();
        assert!((r - 1.0).abs() < 0.1, "ratio {r}");

        let f48 = counting_function(48.0).unwrap().to_f64().unwrap();
        let r = f_asymptotic(48).unwrap() / f48;
        assert!((r - 1.0).abs() < 0.25, "ratio {r}");
    }

    #[test]
    fn largest_integer_below_is_strict() {
        assert_eq!(largest_integer_below(0.5), None);
        assert_eq!(largest_integer_below(1.0), None);
        assert_eq!(largest_integer_below(1.5), Some(1));
        assert_eq!(largest_integer_below(3.0), Some(2));
        assert_eq!(largest_integer_below(3.1), Some(3));
    }
}
