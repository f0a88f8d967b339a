//! Exhaustive search and the combinatorics behind it.
//!
//! Feasible codings are enumerated through integer partitions: a coding with
//! `Σ x = t` is a partition of `t` whose summands are placed on distinct
//! magnitudes. This visits exactly the vectors that respect the quota instead
//! of the full `(theta + 1)^(n + 1)` grid, which [`naive_grid_optimize`] walks
//! as an independent cross-check.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{evaluate_unchecked, EvalResult, LinkVector, ProblemSpec};

/// Default cap on the number of grid points [`naive_grid_optimize`] will visit.
pub const DEFAULT_GRID_CAP: u128 = 100_000_000;

/// All partitions of `t` as multiplicity vectors: `rows[r][k - 1]` is how
/// often summand `k` occurs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionMatrix {
    pub t: usize,
    pub rows: Vec<Vec<u32>>,
}

impl PartitionMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Enumerates the partitions of `t`.
///
/// Rows are ordered by largest summand ascending, and within the same largest
/// summand by the multiplicity of the next smaller summand descending, i.e.
/// ascending lexicographic order of the reversed multiplicity vector:
///
/// ```text
/// t = 4:  [4,0,0,0]  1+1+1+1
///         [2,1,0,0]  2+1+1
///         [0,2,0,0]  2+2
///         [1,0,1,0]  3+1
///         [0,0,0,1]  4
/// ```
///
/// `t = 0` yields an empty matrix.
pub fn partitions(t: usize) -> PartitionMatrix {
    let mut rows = Vec::new();
    if t > 0 {
        let mut mult = vec![0u32; t];
        collect_partitions(t, t, &mut mult, &mut rows);
        rows.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    }
    PartitionMatrix { t, rows }
}

fn collect_partitions(remaining: usize, max_part: usize, mult: &mut [u32], out: &mut Vec<Vec<u32>>) {
    if remaining == 0 {
        out.push(mult.to_vec());
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        mult[part - 1] += 1;
        collect_partitions(remaining - part, part, mult, out);
        mult[part - 1] -= 1;
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of ways to place the summand classes of `lambda` on distinct
/// values out of `n_star`: `Π_k C(n* - Σ_{j<k} λ_j, λ_k)`. Zero when the
/// partition has more summands than values.
pub fn comb_count(lambda: &[u32], n_star: u64) -> BigUint {
    let mut remaining = n_star;
    let mut acc = BigUint::one();
    for &l in lambda {
        let l = l as u64;
        if l > remaining {
            return BigUint::zero();
        }
        acc *= binomial(remaining, l);
        remaining -= l;
    }
    acc
}

/// Number of vectors of length `n_star` with non-negative entries summing to
/// exactly `t`.
pub fn feasible_count(t: usize, n_star: u64) -> BigUint {
    partitions(t)
        .rows
        .iter()
        .map(|row| comb_count(row, n_star))
        .sum()
}

/// Number of vectors of length `n_star` with `1 <= Σ x <= theta`.
pub fn total_feasible(theta: usize, n_star: u64) -> BigUint {
    (1..=theta).map(|t| feasible_count(t, n_star)).sum()
}

/// Streams every coding that respects the quota: the zero vector first, then
/// each `t = 1..=theta` partition by partition, each partition instantiated
/// over value positions in lexicographic order.
pub fn enumerate_solutions(spec: &ProblemSpec) -> SolutionIter {
    SolutionIter::new(spec.values(), spec.theta as usize)
}

pub struct SolutionIter {
    len: usize,
    theta: usize,
    emitted_zero: bool,
    t: usize,
    rows: Vec<Vec<u32>>,
    row: usize,
    // summands of the current partition, largest first
    parts: Vec<u32>,
    pos: Vec<usize>,
    primed: bool,
}

impl SolutionIter {
    fn new(len: usize, theta: usize) -> Self {
        Self {
            len,
            theta,
            emitted_zero: false,
            t: 0,
            rows: Vec::new(),
            row: 0,
            parts: Vec::new(),
            pos: Vec::new(),
            primed: false,
        }
    }

    fn is_used(&self, upto: usize, c: usize) -> bool {
        self.pos[..upto].contains(&c)
    }

    fn min_start(&self, j: usize) -> usize {
        if j > 0 && self.parts[j] == self.parts[j - 1] {
            self.pos[j - 1] + 1
        } else {
            0
        }
    }

    fn fill_from(&mut self, from: usize) -> bool {
        for j in from..self.parts.len() {
            let start = self.min_start(j);
            match (start..self.len).find(|&c| !self.is_used(j, c)) {
                Some(c) => self.pos[j] = c,
                None => return false,
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        for j in (0..self.parts.len()).rev() {
            let mut c = self.pos[j] + 1;
            while c < self.len {
                if !self.is_used(j, c) {
                    self.pos[j] = c;
                    if self.fill_from(j + 1) {
                        return true;
                    }
                }
                c += 1;
            }
        }
        false
    }

    fn load_row(&mut self) {
        let row = &self.rows[self.row];
        self.parts.clear();
        for (k, &m) in row.iter().enumerate().rev() {
            for _ in 0..m {
                self.parts.push(k as u32 + 1);
            }
        }
        self.pos = vec![0; self.parts.len()];
        self.primed = false;
    }

    fn current(&self) -> LinkVector {
        let mut x = vec![0u32; self.len];
        for (&p, &v) in self.pos.iter().zip(&self.parts) {
            x[p] = v;
        }
        LinkVector::new(x)
    }
}

impl Iterator for SolutionIter {
    type Item = LinkVector;

    fn next(&mut self) -> Option<LinkVector> {
        if !self.emitted_zero {
            self.emitted_zero = true;
            return Some(LinkVector::zeros(self.len));
        }
        loop {
            if self.row < self.rows.len() {
                let ok = if self.primed {
                    self.advance()
                } else {
                    self.primed = true;
                    self.fill_from(0)
                };
                if ok {
                    return Some(self.current());
                }
                self.row += 1;
                if self.row < self.rows.len() {
                    self.load_row();
                }
                continue;
            }
            if self.t >= self.theta {
                return None;
            }
            self.t += 1;
            self.rows = partitions(self.t).rows;
            self.row = 0;
            self.load_row();
        }
    }
}

/// Optimal coding found by exhaustive search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub x: LinkVector,
    pub eval: EvalResult,
    pub evaluated_count: u64,
}

/// Total order used to pick the optimum: distortion, then capacity, then `x`
/// lexicographically.
pub fn candidate_order(a: (&EvalResult, &LinkVector), b: (&EvalResult, &LinkVector)) -> Ordering {
    a.0.distortion_sixths
        .cmp(&b.0.distortion_sixths)
        .then_with(|| a.0.capacity.total_cmp(&b.0.capacity))
        .then_with(|| a.1.cmp(b.1))
}

struct Best {
    best: Option<(EvalResult, LinkVector)>,
    max_capacity: f64,
    count: u64,
}

impl Best {
    fn empty() -> Self {
        Self {
            best: None,
            max_capacity: 0.0,
            count: 0,
        }
    }

    fn offer(mut self, x: LinkVector, eval: EvalResult) -> Self {
        self.count += 1;
        self.max_capacity = self.max_capacity.max(eval.capacity);
        if eval.feasible {
            let better = match &self.best {
                None => true,
                Some((be, bx)) => candidate_order((&eval, &x), (be, bx)) == Ordering::Less,
            };
            if better {
                self.best = Some((eval, x));
            }
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        let best = match (self.best, other.best) {
            (Some(a), Some(b)) => {
                if candidate_order((&a.0, &a.1), (&b.0, &b.1)) == Ordering::Greater {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (a, b) => a.or(b),
        };
        Self {
            best,
            max_capacity: self.max_capacity.max(other.max_capacity),
            count: self.count + other.count,
        }
    }

    fn finish(self, spec: &ProblemSpec) -> Result<SearchResult> {
        match self.best {
            Some((eval, x)) => Ok(SearchResult {
                x,
                eval,
                evaluated_count: self.count,
            }),
            None => Err(Error::Infeasible {
                payload: spec.payload,
                max_capacity: self.max_capacity,
            }),
        }
    }
}

/// Minimum-distortion coding over every quota-respecting candidate.
///
/// Candidates are evaluated in parallel; the reduction applies the total
/// order of [`candidate_order`], so the result does not depend on scheduling.
pub fn brute_force_optimize(spec: &ProblemSpec) -> Result<SearchResult> {
    enumerate_solutions(spec)
        .par_bridge()
        .fold(Best::empty, |acc, x| {
            let eval = evaluate_unchecked(spec, x.as_slice());
            acc.offer(x, eval)
        })
        .reduce(Best::empty, Best::merge)
        .finish(spec)
}

/// Largest capacity reachable within the quota.
pub fn max_capacity(spec: &ProblemSpec) -> f64 {
    enumerate_solutions(spec)
        .par_bridge()
        .map(|x| crate::model::capacity_unchecked(spec.counts(), x.as_slice()))
        .reduce(|| 0.0, f64::max)
}

/// Same contract as [`brute_force_optimize`], but walks the full
/// `(theta + 1)^(n + 1)` grid and discards quota violations.
pub fn naive_grid_optimize(spec: &ProblemSpec, cap: u128) -> Result<SearchResult> {
    let base = spec.theta as u128 + 1;
    let size = (0..spec.values()).try_fold(1u128, |acc, _| acc.checked_mul(base));
    match size {
        Some(s) if s <= cap => {}
        Some(s) => return Err(Error::SearchSpaceTooLarge { size: s, cap }),
        None => return Err(Error::SearchSpaceTooLarge { size: u128::MAX, cap }),
    }

    let mut best = Best::empty();
    let mut x = vec![0u32; spec.values()];
    loop {
        if x.iter().map(|&v| v as u64).sum::<u64>() <= spec.theta as u64 {
            let eval = evaluate_unchecked(spec, &x);
            best = best.offer(LinkVector::new(x.clone()), eval);
        }
        // odometer step, most significant digit last
        let mut i = 0;
        loop {
            if i == x.len() {
                return best.finish(spec);
            }
            if x[i] < spec.theta {
                x[i] += 1;
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AbsErrorHistogram;
    use std::collections::HashSet;

    fn spec(a: &[u64], theta: u32, payload: f64) -> ProblemSpec {
        ProblemSpec::new(AbsErrorHistogram::new(a.to_vec()), a.len() - 1, theta, payload).unwrap()
    }

    /// Every vector of length `len` with entries in `0..=theta` and
    /// `lo <= Σ <= hi`.
    fn direct_vectors(len: usize, theta: u32, lo: u64, hi: u64) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut x = vec![0u32; len];
        loop {
            let s: u64 = x.iter().map(|&v| v as u64).sum();
            if s >= lo && s <= hi {
                out.push(x.clone());
            }
            let mut i = 0;
            loop {
                if i == len {
                    return out;
                }
                if x[i] < theta {
                    x[i] += 1;
                    break;
                }
                x[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn displayed_partition_matrices() {
        assert_eq!(partitions(2).rows, vec![vec![2, 0], vec![0, 1]]);
        assert_eq!(partitions(3).rows, vec![vec![3, 0, 0], vec![1, 1, 0], vec![0, 0, 1]]);
        assert_eq!(
            partitions(4).rows,
            vec![vec![4, 0, 0, 0], vec![2, 1, 0, 0], vec![0, 2, 0, 0], vec![1, 0, 1, 0], vec![0, 0, 0, 1]]
        );
        assert!(partitions(0).is_empty());
    }

    #[test]
    fn partition_function_values() {
        let expected = [1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490, 627];
        for (t, &p) in (1..=20).zip(expected.iter()) {
            let m = partitions(t);
            assert_eq!(m.len(), p, "p({t})");
            let distinct: HashSet<_> = m.rows.iter().collect();
            assert_eq!(distinct.len(), p);
            for row in &m.rows {
                let s: usize = row.iter().enumerate().map(|(k, &l)| (k + 1) * l as usize).sum();
                assert_eq!(s, t);
            }
        }
    }

    #[test]
    fn comb_count_examples() {
        assert_eq!(comb_count(&[3, 0, 0], 5), BigUint::from(10u32));
        assert_eq!(comb_count(&[1, 1, 0], 5), BigUint::from(20u32));
        assert_eq!(comb_count(&[0, 0, 1], 5), BigUint::from(5u32));
        assert_eq!(comb_count(&[3, 0, 0], 2), BigUint::zero());
    }

    #[test]
    fn comb_count_matches_enumeration() {
        // ordered placements of the summand classes on distinct values
        for row in partitions(4).rows {
            for n_star in 1..=6u64 {
                let multiset: Vec<u32> = {
                    let mut v: Vec<u32> = row
                        .iter()
                        .enumerate()
                        .flat_map(|(k, &m)| std::iter::repeat(k as u32 + 1).take(m as usize))
                        .collect();
                    v.sort();
                    v
                };
                let count = direct_vectors(n_star as usize, 4, 4, 4)
                    .into_iter()
                    .filter(|x| {
                        let mut nz: Vec<u32> = x.iter().copied().filter(|&v| v > 0).collect();
                        nz.sort();
                        nz == multiset
                    })
                    .count();
                assert_eq!(comb_count(&row, n_star), BigUint::from(count), "{row:?} n*={n_star}");
            }
        }
    }

    #[test]
    fn feasible_count_examples() {
        assert_eq!(feasible_count(1, 3), BigUint::from(3u32));
        assert_eq!(feasible_count(2, 3), BigUint::from(6u32));
        assert_eq!(feasible_count(2, 1), BigUint::from(1u32));
        assert_eq!(total_feasible(1, 7), BigUint::from(7u32));
        assert_eq!(total_feasible(2, 3), BigUint::from(9u32));
        assert_eq!(total_feasible(3, 2), BigUint::from(9u32));
    }

    #[test]
    fn counts_match_direct_enumeration() {
        for n_star in 1..=6usize {
            for theta in 1..=5u32 {
                let direct = direct_vectors(n_star, theta, 1, theta as u64).len();
                assert_eq!(total_feasible(theta as usize, n_star as u64), BigUint::from(direct));
            }
        }
    }

    #[test]
    fn counting_outgrows_u64() {
        let big = total_feasible(12, 56);
        assert!(big.bits() > 40);
        assert!(total_feasible(30, 200).bits() > 64);
    }

    #[test]
    fn enumeration_examples() {
        let got: Vec<_> = enumerate_solutions(&spec(&[1, 1], 1, 0.0)).map(|x| x.into_inner()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        let got: Vec<_> = enumerate_solutions(&spec(&[1], 2, 0.0)).map(|x| x.into_inner()).collect();
        assert_eq!(got, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn enumeration_is_exact_and_unique() {
        for len in 1..=6usize {
            for theta in 0..=4u32 {
                let s = spec(&vec![1; len], theta, 0.0);
                let got: Vec<_> = enumerate_solutions(&s).map(|x| x.into_inner()).collect();
                let set: HashSet<_> = got.iter().cloned().collect();
                assert_eq!(set.len(), got.len(), "duplicates for len={len} theta={theta}");
                let expected: HashSet<_> = direct_vectors(len, theta, 0, theta as u64).into_iter().collect();
                assert_eq!(set, expected);
                assert_eq!(
                    BigUint::from(got.len() - 1),
                    total_feasible(theta as usize, len as u64)
                );
            }
        }
    }

    #[test]
    fn brute_examples() {
        let r = brute_force_optimize(&spec(&[4, 1, 3], 1, 1.0)).unwrap();
        assert_eq!(r.x.as_slice(), &[0, 0, 1]);
        assert_eq!(r.eval.distortion, 1.5);
        assert_eq!(r.evaluated_count, 4);

        let r = brute_force_optimize(&spec(&[4, 1, 3], 1, 4.0)).unwrap();
        assert_eq!(r.x.as_slice(), &[1, 0, 0]);
        assert_eq!(r.eval.distortion, 6.0);

        let r = brute_force_optimize(&spec(&[4, 1, 3], 2, 0.0)).unwrap();
        assert!(r.x.is_zero());
        assert_eq!(r.eval.distortion, 0.0);

        assert!(matches!(
            brute_force_optimize(&spec(&[4, 1, 3], 1, 4.5)),
            Err(Error::Infeasible { max_capacity, .. }) if max_capacity == 4.0
        ));
    }

    #[test]
    fn naive_grid_examples() {
        let r = naive_grid_optimize(&spec(&[1], 2, 1.0), DEFAULT_GRID_CAP).unwrap();
        assert_eq!(r.x.as_slice(), &[1]);
        let r = naive_grid_optimize(&spec(&[3, 2], 2, 0.0), DEFAULT_GRID_CAP).unwrap();
        assert!(r.x.is_zero());
        assert!(matches!(
            naive_grid_optimize(&spec(&[1; 10], 3, 0.0), 1000),
            Err(Error::SearchSpaceTooLarge { size: 1_048_576, cap: 1000 })
        ));
    }

    #[test]
    fn max_capacity_small() {
        assert_eq!(max_capacity(&spec(&[4, 1, 3], 1, 0.0)), 4.0);
        assert_eq!(max_capacity(&spec(&[4, 1, 3], 2, 0.0)), 7.0);
    }

    #[test]
    fn brute_agrees_with_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let len = rng.gen_range(1..=6);
            let theta = rng.gen_range(1..=3);
            let a: Vec<u64> = (0..len).map(|_| rng.gen_range(0..50)).collect();
            let base = spec(&a, theta, 0.0);
            let cap = max_capacity(&base);
            let payload = cap * rng.gen_range(0.0..1.0);
            let s = base.with_payload(payload);
            let b = brute_force_optimize(&s).unwrap();
            let g = naive_grid_optimize(&s, DEFAULT_GRID_CAP).unwrap();
            assert_eq!(b.x, g.x);
            assert_eq!(b.eval.distortion_sixths, g.eval.distortion_sixths);
        }
    }
}
