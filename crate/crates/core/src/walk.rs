//! The ±1 walk on the exponent of the multiplier: simulation, running
//! extremes, revisit counts, and the exact laws of the running maximum and
//! of the number of returns to the origin.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::MultiplierSequence;

/// `w_0 = 0` followed by unit steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExponentPath {
    w: Vec<i64>,
}

impl ExponentPath {
    pub fn new(w: Vec<i64>) -> Result<Self> {
        if w.first() != Some(&0) {
            return Err(Error::InvalidParams("exponent path must start at 0".into()));
        }
        if let Some(i) = w.windows(2).position(|s| (s[1] - s[0]).abs() != 1) {
            return Err(Error::InvalidParams(format!(
                "non-unit step between indices {i} and {}",
                i + 1
            )));
        }
        Ok(ExponentPath { w })
    }

    pub(crate) fn from_levels_unchecked(w: Vec<i64>) -> Self {
        debug_assert!(Self::new(w.clone()).is_ok());
        ExponentPath { w }
    }

    /// Path from `±1` increments.
    pub fn from_steps(steps: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut w = vec![0];
        let mut level = 0;
        for s in steps {
            level += s;
            w.push(level);
        }
        Self::new(w)
    }

    pub fn levels(&self) -> &[i64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Running max and min of `w_0, …, w_j`.
    pub fn extremes(&self, j: usize) -> Result<WalkExtremes> {
        if j >= self.w.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.w.len(),
            });
        }
        let prefix = &self.w[..=j];
        let max = *prefix.iter().max().expect("prefix is non-empty");
        let min = *prefix.iter().min().expect("prefix is non-empty");
        Ok(WalkExtremes {
            max,
            min,
            range: max - min,
        })
    }

    /// First `len` levels as a new path.
    pub fn prefix(&self, len: usize) -> ExponentPath {
        ExponentPath {
            w: self.w[..len.min(self.w.len()).max(1)].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkExtremes {
    pub max: i64,
    pub min: i64,
    pub range: i64,
}

/// Simple symmetric walk with `steps` steps, drawn as a random multiplier
/// sequence and read through [`MultiplierSequence::exponent_path`].
pub fn simulate_walk(steps: usize, seed: u64) -> ExponentPath {
    simulate_walk_indexed(steps, seed, 0)
}

/// Walk number `index` of the family seeded by `seed`.
pub fn simulate_walk_indexed(steps: usize, seed: u64, index: u64) -> ExponentPath {
    MultiplierSequence::random_indexed(steps, 0.5, seed, index).exponent_path()
}

fn binomial(n: u64, k: u64) -> BigInt {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    BigInt::from(acc)
}

/// `numerator / 2^exp` in lowest terms.
fn dyadic(numerator: BigInt, exp: u64) -> BigRational {
    if numerator.is_zero() {
        return BigRational::zero();
    }
    let shift = numerator.trailing_zeros().unwrap_or(0).min(exp);
    BigRational::new_raw(numerator >> shift as usize, BigInt::one() << (exp - shift) as usize)
}

/// `p_{j,ℓ} = C(j, (j+ℓ)/2)·2^{−j}`, zero off the lattice.
fn endpoint_law(j: u64, level: i64) -> BigRational {
    let s = j as i64 + level;
    if s < 0 || s % 2 != 0 || s / 2 > j as i64 {
        return BigRational::zero();
    }
    dyadic(binomial(j, (s / 2) as u64), j)
}

/// `P(M_j = level) = p_{j,level} + p_{j,level+1}` (reflection principle).
pub fn max_law(j: u64, level: i64) -> BigRational {
    if level < 0 || level > j as i64 {
        return BigRational::zero();
    }
    endpoint_law(j, level) + endpoint_law(j, level + 1)
}

/// `z_{r,2n} = C(2n−r, n)·2^{−(2n−r)}`, the probability of exactly `r`
/// returns to 0 in the first `2n` steps.
pub fn returns_law(r: u64, two_n: u64) -> Result<BigRational> {
    if two_n % 2 != 0 {
        return Err(Error::InvalidParams(format!("{two_n} steps is odd")));
    }
    let n = two_n / 2;
    if r > n {
        return Ok(BigRational::zero());
    }
    let len = two_n - r;
    Ok(dyadic(binomial(len, n), len))
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).ln())
        .sum()
}

fn endpoint_law_f64(j: u64, level: i64) -> f64 {
    let s = j as i64 + level;
    if s < 0 || s % 2 != 0 || s / 2 > j as i64 {
        return 0.0;
    }
    (ln_binomial(j, (s / 2) as u64) - j as f64 * std::f64::consts::LN_2).exp()
}

/// Floating-point [`max_law`].
pub fn max_law_f64(j: u64, level: i64) -> f64 {
    if level < 0 || level > j as i64 {
        return 0.0;
    }
    endpoint_law_f64(j, level) + endpoint_law_f64(j, level + 1)
}

/// Floating-point [`returns_law`].
pub fn returns_law_f64(r: u64, two_n: u64) -> Result<f64> {
    if two_n % 2 != 0 {
        return Err(Error::InvalidParams(format!("{two_n} steps is odd")));
    }
    let n = two_n / 2;
    if r > n {
        return Ok(0.0);
    }
    let len = two_n - r;
    Ok((ln_binomial(len, n) - len as f64 * std::f64::consts::LN_2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelOccupation {
    pub first_visit: usize,
    /// Visits at indices `i` with `0 < i − first_visit ≤ window`.
    pub revisits: u64,
}

/// Revisit counts `R(k)` per visited level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccupationTable {
    pub window: usize,
    pub levels: BTreeMap<i64, LevelOccupation>,
}

impl OccupationTable {
    pub fn revisits(&self, level: i64) -> Option<u64> {
        self.levels.get(&level).map(|o| o.revisits)
    }

    pub fn min_level(&self) -> i64 {
        self.levels.keys().next().copied().unwrap_or(0)
    }

    pub fn max_level(&self) -> i64 {
        self.levels.keys().next_back().copied().unwrap_or(0)
    }

    /// Occupation with `R ≡ 0` over `[min, max]`.
    pub fn empty_over(min: i64, max: i64, window: usize) -> Self {
        let levels = (min..=max)
            .map(|k| (k, LevelOccupation { first_visit: 0, revisits: 0 }))
            .collect();
        OccupationTable { window, levels }
    }
}

pub fn occupation_counts(path: &ExponentPath, window: usize) -> OccupationTable {
    let mut levels: BTreeMap<i64, LevelOccupation> = BTreeMap::new();
    for (i, &k) in path.levels().iter().enumerate() {
        let entry = levels.entry(k).or_insert(LevelOccupation {
            first_visit: i,
            revisits: 0,
        });
        let gap = i - entry.first_visit;
        if gap > 0 && gap <= window {
            entry.revisits += 1;
        }
    }
    OccupationTable { window, levels }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn path(w: &[i64]) -> ExponentPath {
        ExponentPath::new(w.to_vec()).unwrap()
    }

    #[test]
    fn path_validation() {
        assert!(ExponentPath::new(vec![]).is_err());
        assert!(ExponentPath::new(vec![1, 0]).is_err());
        assert!(ExponentPath::new(vec![0, 2]).is_err());
        assert!(ExponentPath::new(vec![0, 0]).is_err());
        assert_eq!(simulate_walk(0, 3).levels(), &[0]);
    }

    #[test]
    fn extremes_examples() {
        let e = path(&[0, 1, 2, 1]).extremes(3).unwrap();
        assert_eq!((e.max, e.min, e.range), (2, 0, 2));
        let e = path(&[0, -1, 0, 1]).extremes(3).unwrap();
        assert_eq!((e.max, e.min), (1, -1));
        let up = ExponentPath::from_steps(std::iter::repeat(1).take(7)).unwrap();
        let e = up.extremes(7).unwrap();
        assert_eq!((e.max, e.min), (7, 0));
        assert!(up.extremes(8).is_err());
    }

    #[test]
    fn simulated_paths_bracket_origin() {
        for seed in 0..20 {
            let w = simulate_walk(200, seed);
            let e = w.extremes(200).unwrap();
            assert!(e.min <= 0 && 0 <= e.max);
        }
        assert_eq!(simulate_walk(50, 4), simulate_walk(50, 4));
    }

    #[test]
    fn max_law_examples() {
        assert_eq!(max_law(1, 0), r(1, 2));
        assert_eq!(max_law(1, 1), r(1, 2));
        assert_eq!(max_law(2, 0), r(1, 2));
        assert_eq!(max_law(2, -1), BigRational::zero());
        assert_eq!(max_law(2, 3), BigRational::zero());
        for j in 0..=64u64 {
            let total: BigRational = (0..=j as i64).map(|l| max_law(j, l)).sum();
            assert_eq!(total, BigRational::one(), "j={j}");
        }
    }

    #[test]
    fn returns_law_examples() {
        assert_eq!(returns_law(0, 2).unwrap(), r(1, 2));
        assert_eq!(returns_law(1, 2).unwrap(), r(1, 2));
        assert_eq!(returns_law(0, 4).unwrap(), r(3, 8));
        assert_eq!(returns_law(3, 4).unwrap(), BigRational::zero());
        assert!(returns_law(0, 5).is_err());
        for two_n in (0..=200u64).step_by(2) {
            let total: BigRational = (0..=two_n / 2).map(|k| returns_law(k, two_n).unwrap()).sum();
            assert_eq!(total, BigRational::one());
        }
    }

    #[test]
    fn float_paths_track_exact() {
        use num_traits::ToPrimitive;
        for j in [1u64, 10, 63] {
            for l in 0..=j as i64 {
                let exact = max_law(j, l).to_f64().unwrap();
                assert!((max_law_f64(j, l) - exact).abs() <= 1e-12 * exact.max(1e-300));
            }
        }
        let exact = returns_law(5, 100).unwrap().to_f64().unwrap();
        assert!((returns_law_f64(5, 100).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn occupation_examples() {
        let t = occupation_counts(&path(&[0, 1, 0, 1, 0]), 4);
        assert_eq!(t.revisits(0), Some(2));
        assert_eq!(t.revisits(1), Some(1));
        assert_eq!(t.revisits(2), None);

        let up = ExponentPath::from_steps(std::iter::repeat(1).take(5)).unwrap();
        let t = occupation_counts(&up, 10);
        assert!(t.levels.values().all(|o| o.revisits == 0));
        assert_eq!(t.levels.len(), 6);

        let t = occupation_counts(&path(&[0, 1, 0]), 1);
        assert_eq!(t.revisits(0), Some(0));
        assert_eq!(t.revisits(1), Some(0));
    }
}
