//! Quenched Fourier machinery for a fixed multiplier sequence.
//!
//! Given multipliers, `X_n = Σ_t c_t·b_{n−1−t}` with `c_t = 2^{w_t}`, so the
//! transform of its law factors as `∏_t φ(c_t·m)` where `φ` is the transform
//! of one increment. A factor is small exactly when `{2^ℓ m/p}` sits in
//! `[1/4, 3/4)`, which is the same as an alternation in the binary expansion
//! of `m/p` right after position `ℓ`. Everything here that touches digits or
//! bands uses integer arithmetic on `2^ℓ·m mod p`.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::Modulus;
use crate::process::{MultiplierSequence, ProcessParams};
use crate::walk::OccupationTable;

/// Default weight on `log log p` in the lower revisit threshold.
pub const DEFAULT_BETA: f64 = 10.0;
/// Default exponent of `log log p` in the upper revisit threshold.
pub const DEFAULT_UPPER_EXPONENT: f64 = 2.1;
/// Default exponent of `log log p` bounding the number of sparse levels.
pub const DEFAULT_SPARSE_EXPONENT: f64 = 2.5;

fn check_frequency(m: u64, modulus: Modulus) -> Result<()> {
    if m == 0 || m >= modulus.p() {
        return Err(Error::ResidueOutOfRange {
            residue: m,
            p: modulus.p(),
        });
    }
    Ok(())
}

/// `2^ℓ·m mod p`, i.e. `p·{2^ℓ m/p}`.
#[inline]
fn shifted_residue(modulus: Modulus, m: u64, position: u64) -> u64 {
    modulus.mul(modulus.pow(2, position), m)
}

/// `1/4 ≤ {2^ℓ·m/p} < 3/4`, decided exactly.
pub fn in_band(modulus: Modulus, m: u64, position: u64) -> bool {
    let r = shifted_residue(modulus, m, position);
    let p = modulus.p();
    p <= 4 * r && 4 * r < 3 * p
}

/// Consecutive binary digits of `m/p`: digit `i` is 1 iff
/// `{2^{start+i}·m/p} ≥ 1/2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinaryWindow {
    pub m: u64,
    pub p: u64,
    pub start: u64,
    pub digits: Vec<u8>,
}

pub fn binary_window(m: u64, modulus: Modulus, start: u64, length: usize) -> Result<BinaryWindow> {
    check_frequency(m, modulus)?;
    if length == 0 {
        return Err(Error::InvalidParams("window length must be positive".into()));
    }
    let p = modulus.p();
    let mut r = shifted_residue(modulus, m, start);
    let digits = (0..length)
        .map(|_| {
            let d = (2 * r >= p) as u8;
            r = modulus.add(r, r);
            d
        })
        .collect();
    Ok(BinaryWindow {
        m,
        p,
        start,
        digits,
    })
}

impl BinaryWindow {
    /// Digits packed little-endian; windows up to 128 digits.
    fn packed(&self) -> u128 {
        self.digits
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &d)| acc | (d as u128) << i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlternationProfile {
    pub count: usize,
    /// Indices `i` with `digit i ≠ digit i+1`.
    pub positions: Vec<usize>,
}

pub fn alternation_count(window: &BinaryWindow) -> Result<AlternationProfile> {
    if window.digits.len() < 2 {
        return Err(Error::InvalidParams(
            "alternations need at least two digits".into(),
        ));
    }
    let positions: Vec<usize> = window
        .digits
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[0] != pair[1])
        .map(|(i, _)| i)
        .collect();
    Ok(AlternationProfile {
        count: positions.len(),
        positions,
    })
}

/// `1/9` on `1/4 ≤ {x} < 3/4`, else 1. Dominates the squared trinary factor.
pub fn g_indicator(x: f64) -> f64 {
    let frac = x.rem_euclid(1.0);
    if (0.25..0.75).contains(&frac) {
        1.0 / 9.0
    } else {
        1.0
    }
}

/// `1/3 + (2/3)·cos(2πx)`, the transform of the uniform law on `{1, 0, −1}`.
pub fn trinary_factor(x: f64) -> f64 {
    1.0 / 3.0 + 2.0 / 3.0 * (2.0 * PI * x).cos()
}

/// `∏_i (1/3 + (2/3)·cos(2π·2^{e_i}·m/p))`, the transform of the conditional
/// law after multiplying `X_n` by `2^n` (so every exponent is nonnegative).
/// `m = 0` is accepted and gives 1.
pub fn conditional_dft_product(exponents: &[u64], m: u64, modulus: Modulus) -> Result<f64> {
    if exponents.is_empty() {
        return Err(Error::InvalidParams("empty exponent list".into()));
    }
    let p = modulus.p();
    if m >= p {
        return Err(Error::ResidueOutOfRange { residue: m, p });
    }
    Ok(exponents
        .iter()
        .map(|&e| trinary_factor(shifted_residue(modulus, m, e) as f64 / p as f64))
        .product())
}

/// Shifted exponents `n + w_t` of the coefficients of `X_n` for a base-2
/// multiplier sequence with `n = seq.len() + 1` steps.
pub fn shifted_exponents(seq: &MultiplierSequence) -> Vec<u64> {
    let n = seq.len() as i64 + 1;
    seq.exponent_path()
        .levels()
        .iter()
        .map(|&w| (n + w) as u64)
        .collect()
}

/// `φ(r) = Σ_b w_b·e^{2πi·b·r/p}` for every residue `r`.
fn increment_transform_table(params: &ProcessParams) -> Vec<Complex64> {
    let modulus = params.modulus();
    let p = modulus.p();
    let incs: Vec<(u64, f64)> = params
        .increments()
        .iter()
        .map(|i| (modulus.reduce(i.value), i.prob))
        .collect();
    (0..p)
        .map(|r| {
            incs.iter()
                .map(|&(b, w)| {
                    let theta = 2.0 * PI * modulus.mul(b, r) as f64 / p as f64;
                    Complex64::new(theta.cos(), theta.sin()) * w
                })
                .sum()
        })
        .collect()
}

/// Transform of the conditional law at frequency `k`, as a product over the
/// coefficients of `X_n`. Works for any multiplier and increment law.
pub fn conditional_transform(
    params: &ProcessParams,
    seq: &MultiplierSequence,
    k: u64,
) -> Result<Complex64> {
    let modulus = params.modulus();
    if k >= modulus.p() {
        return Err(Error::ResidueOutOfRange {
            residue: k,
            p: modulus.p(),
        });
    }
    let table = increment_transform_table(params);
    Ok(seq
        .coefficients(params)
        .iter()
        .map(|&c| table[modulus.mul(c, k) as usize])
        .product())
}

/// Sum in a fixed pairwise order, independent of how the terms were produced.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let (a, b) = values.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// `¼ Σ_{m=1}^{p−1} ∏_t |φ(c_t·m)|²`, the upper-bound-lemma value for the
/// conditional law. Dominates its squared TV distance.
pub fn conditional_ub_bound(seq: &MultiplierSequence, params: &ProcessParams) -> f64 {
    let modulus = params.modulus();
    let sq: Vec<f64> = increment_transform_table(params)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let coeffs = seq.coefficients(params);
    let terms: Vec<f64> = (1..modulus.p())
        .into_par_iter()
        .map(|m| {
            let mut prod = 1.0;
            for &c in &coeffs {
                prod *= sq[modulus.mul(c, m) as usize];
                if prod == 0.0 {
                    break;
                }
            }
            prod
        })
        .collect();
    0.25 * pairwise_sum(&terms)
}

/// Revisit thresholds for classifying frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `β·log₂log₂ p`.
    pub lower: f64,
    /// `(log₂log₂ p)^{2.1}`.
    pub upper: f64,
    /// `(log₂log₂ p)^{2.5}`, the allowed number of levels with `R < upper`.
    pub sparse_limit: f64,
}

impl Thresholds {
    pub fn new(modulus: Modulus, beta: f64, upper_exponent: f64, sparse_exponent: f64) -> Self {
        let ll = modulus.log2().log2();
        Thresholds {
            lower: beta * ll,
            upper: ll.powf(upper_exponent),
            sparse_limit: ll.powf(sparse_exponent),
        }
    }

    pub fn with_beta(modulus: Modulus, beta: f64) -> Self {
        Self::new(modulus, beta, DEFAULT_UPPER_EXPONENT, DEFAULT_SPARSE_EXPONENT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrequencyTag {
    /// Some band level is revisited more than the upper threshold.
    S1,
    /// `b ≥ 1` band levels have revisits in `(lower, upper]`.
    S2(u32),
    /// No band level clears the lower threshold; further steps are needed.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BandWitness {
    /// Binary position `ℓ = n + k`.
    pub position: u64,
    pub level: i64,
    pub revisits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyClass {
    pub tag: FrequencyTag,
    pub witness: Vec<BandWitness>,
}

pub fn classify_frequency(
    m: u64,
    modulus: Modulus,
    occupation: &OccupationTable,
    n: u64,
    thresholds: &Thresholds,
) -> Result<FrequencyClass> {
    check_frequency(m, modulus)?;
    let mut middle = Vec::new();
    for (&level, occ) in &occupation.levels {
        let position = n as i64 + level;
        if position < 0 {
            return Err(Error::InvalidParams(format!(
                "level {level} below −n = −{n}"
            )));
        }
        let position = position as u64;
        if !in_band(modulus, m, position) {
            continue;
        }
        let revisits = occ.revisits as f64;
        let witness = BandWitness {
            position,
            level,
            revisits: occ.revisits,
        };
        if revisits > thresholds.upper {
            return Ok(FrequencyClass {
                tag: FrequencyTag::S1,
                witness: vec![witness],
            });
        }
        if revisits > thresholds.lower {
            middle.push(witness);
        }
    }
    let tag = if middle.is_empty() {
        FrequencyTag::Unresolved
    } else {
        FrequencyTag::S2(middle.len() as u32)
    };
    Ok(FrequencyClass {
        tag,
        witness: middle,
    })
}

/// Counts of each tag over `m = 1..p`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassificationCensus {
    pub s1: u64,
    /// `b → |S_{2,b}|`.
    pub s2: BTreeMap<u32, u64>,
    pub unresolved: u64,
    /// Levels with `R < upper`.
    pub sparse_levels: u64,
}

impl ClassificationCensus {
    pub fn total(&self) -> u64 {
        self.s1 + self.unresolved + self.s2.values().sum::<u64>()
    }

    fn add(&mut self, tag: FrequencyTag) {
        match tag {
            FrequencyTag::S1 => self.s1 += 1,
            FrequencyTag::S2(b) => *self.s2.entry(b).or_default() += 1,
            FrequencyTag::Unresolved => self.unresolved += 1,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.s1 += other.s1;
        self.unresolved += other.unresolved;
        for (b, c) in other.s2 {
            *self.s2.entry(b).or_default() += c;
        }
        self
    }
}

pub fn classification_census(
    modulus: Modulus,
    occupation: &OccupationTable,
    n: u64,
    thresholds: &Thresholds,
) -> Result<ClassificationCensus> {
    let sparse_levels = occupation
        .levels
        .values()
        .filter(|o| (o.revisits as f64) < thresholds.upper)
        .count() as u64;
    let census = (1..modulus.p())
        .into_par_iter()
        .map(|m| classify_frequency(m, modulus, occupation, n, thresholds).map(|c| c.tag))
        .try_fold(ClassificationCensus::default, |mut acc, tag| {
            acc.add(tag?);
            Ok::<_, Error>(acc)
        })
        .try_reduce(ClassificationCensus::default, |a, b| Ok(a.merge(b)))?;
    Ok(ClassificationCensus {
        sparse_levels,
        ..census
    })
}

/// Alternation histogram over all frequencies and the weighted sum against
/// its binomial majorant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternationCensus {
    pub p: u64,
    pub start: u64,
    pub length: usize,
    pub decay: f64,
    pub beta: f64,
    /// `histogram[a]` = number of `m` whose window has `a` alternations.
    pub histogram: Vec<u64>,
    /// `Σ_m q^{β·A(B_m)}`.
    pub weighted_sum: f64,
    /// `2·Σ_{s=1}^{L} C(L, s)·q^{β·s}`.
    pub majorant: f64,
}

pub fn alternation_majorant(length: usize, decay: f64, beta: f64) -> f64 {
    let r = decay.powf(beta);
    let mut binom = 1.0f64;
    let mut total = 0.0;
    for s in 1..=length {
        binom = binom * (length + 1 - s) as f64 / s as f64;
        total += binom * r.powi(s as i32);
    }
    2.0 * total
}

pub fn alternation_census(
    modulus: Modulus,
    start: u64,
    length: usize,
    decay: f64,
    beta: f64,
) -> Result<AlternationCensus> {
    if length as f64 <= modulus.log2() {
        return Err(Error::InvalidParams(format!(
            "window length {length} must exceed log2 p = {:.3}",
            modulus.log2()
        )));
    }
    if !(decay > 0.0 && decay < 1.0) {
        return Err(Error::InvalidParams(format!("decay {decay} outside (0, 1)")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParams(format!("beta {beta} must be positive")));
    }
    let counts: Vec<usize> = (1..modulus.p())
        .into_par_iter()
        .map(|m| {
            binary_window(m, modulus, start, length)
                .and_then(|w| alternation_count(&w))
                .map(|a| a.count)
        })
        .collect::<Result<_>>()?;
    let mut histogram = vec![0u64; length];
    for a in counts {
        histogram[a] += 1;
    }
    let weighted_sum = histogram
        .iter()
        .enumerate()
        .map(|(a, &c)| c as f64 * decay.powf(beta * a as f64))
        .sum();
    let majorant = alternation_majorant(length, decay, beta);
    if weighted_sum > majorant {
        return Err(Error::InvariantViolation(format!(
            "alternation sum {weighted_sum} exceeds majorant {majorant}"
        )));
    }
    Ok(AlternationCensus {
        p: modulus.p(),
        start,
        length,
        decay,
        beta,
        histogram,
        weighted_sum,
        majorant,
    })
}

/// Whether the length-`length` windows starting at `start` differ across all
/// `m ∈ [1, p)`.
pub fn windows_distinct(modulus: Modulus, start: u64, length: usize) -> Result<bool> {
    if length > 128 {
        return Err(Error::InvalidParams("windows longer than 128 digits".into()));
    }
    let mut seen = HashSet::with_capacity(modulus.p() as usize);
    for m in 1..modulus.p() {
        if !seen.insert(binary_window(m, modulus, start, length)?.packed()) {
            return Ok(false);
        }
    }
    Ok(true)
}
