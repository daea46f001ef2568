//! Residues mod an odd `p`, probability vectors on ℤ/pℤ, total variation
//! distance to uniform and the discrete Fourier transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack below zero tolerated for a single probability entry.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;
/// Slack tolerated on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Largest modulus `tv_subset_oracle` will enumerate.
pub const SUBSET_ORACLE_MAX_P: u64 = 20;

/// An odd modulus `p >= 3` together with the inverse of 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Modulus {
    p: u64,
    inv2: u64,
}

impl Modulus {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p % 2 == 0 || p >= 1 << 32 {
            return Err(Error::InvalidModulus(p));
        }
        Ok(Modulus { p, inv2: (p + 1) / 2 })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// `(p + 1) / 2`, the multiplicative inverse of 2.
    #[inline]
    pub fn inv2(&self) -> u64 {
        self.inv2
    }

    pub fn log2(&self) -> f64 {
        (self.p as f64).log2()
    }

    /// Canonical residue in `[0, p)` of a signed integer.
    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        // p < 2^32 so the product fits.
        (a % self.p) * (b % self.p) % self.p
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        let mut b = base % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, if `gcd(a, p) = 1`.
    pub fn inverse(&self, a: u64) -> Option<u64> {
        let (mut r0, mut r1) = (self.p as i64, (a % self.p) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        (r0 == 1).then(|| self.reduce(t0))
    }

    /// `base^exp` for a signed exponent; negative exponents use the inverse.
    pub fn pow_signed(&self, base: u64, exp: i64) -> Option<u64> {
        if exp >= 0 {
            Some(self.pow(base, exp as u64))
        } else {
            self.inverse(base).map(|inv| self.pow(inv, exp.unsigned_abs()))
        }
    }
}

/// Dense probability vector over the residues `0..p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionModP {
    modulus: Modulus,
    mass: Vec<f64>,
}

impl DistributionModP {
    /// Validates length, sign and total mass.
    pub fn new(modulus: Modulus, mass: Vec<f64>) -> Result<Self> {
        if mass.len() as u64 != modulus.p() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} entries, got {}",
                modulus.p(),
                mass.len()
            )));
        }
        if let Some((s, v)) = mass
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -NEGATIVITY_TOLERANCE)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {s} is {v}"
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total}"
            )));
        }
        Ok(DistributionModP { modulus, mass })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_raw(modulus: Modulus, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len() as u64, modulus.p());
        DistributionModP { modulus, mass }
    }

    pub fn point_mass(modulus: Modulus, site: u64) -> Result<Self> {
        if site >= modulus.p() {
            return Err(Error::ResidueOutOfRange {
                residue: site,
                p: modulus.p(),
            });
        }
        let mut mass = vec![0.0; modulus.p() as usize];
        mass[site as usize] = 1.0;
        Ok(Self::from_raw(modulus, mass))
    }

    pub fn uniform(modulus: Modulus) -> Self {
        let p = modulus.p() as usize;
        Self::from_raw(modulus, vec![1.0 / p as f64; p])
    }

    /// Empirical law of a histogram of residue counts.
    pub fn from_counts(modulus: Modulus, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no samples".into()));
        }
        let mass = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(modulus, mass)
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    #[inline]
    pub fn get(&self, s: u64) -> f64 {
        self.mass[s as usize]
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Probability of the residue interval `[-w, w]`.
    pub fn interval_mass(&self, half_width: u64) -> f64 {
        let p = self.modulus.p();
        let w = half_width.min(p / 2);
        let mut acc = self.mass[0];
        for k in 1..=w {
            acc += self.mass[k as usize] + self.mass[(p - k) as usize];
        }
        acc
    }

    /// Law of `c·X` for a unit `c`.
    pub fn scaled(&self, c: u64) -> Self {
        let p = self.modulus.p();
        let c = c % p;
        let mut out = vec![0.0; p as usize];
        let mut idx = 0u64;
        for &v in &self.mass {
            out[idx as usize] += v;
            idx = self.modulus.add(idx, c);
        }
        Self::from_raw(self.modulus, out)
    }

    /// Total variation distance to the uniform law, `½ Σ |P(s) − 1/p|`.
    pub fn tv_distance(&self) -> f64 {
        let u = 1.0 / self.modulus.p() as f64;
        0.5 * self.mass.iter().map(|&v| (v - u).abs()).sum::<f64>()
    }

    /// Total variation distance between two laws on the same modulus.
    pub fn tv_between(&self, other: &Self) -> Result<f64> {
        check_same(self.modulus, other.modulus)?;
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Brute-force `max_A |P(A) − |A|/p|` over all `2^p` events.
    pub fn tv_subset_oracle(&self) -> Result<f64> {
        let p = self.modulus.p();
        if p > SUBSET_ORACLE_MAX_P {
            return Err(Error::TooLarge {
                what: "p",
                value: p,
                limit: SUBSET_ORACLE_MAX_P,
            });
        }
        let u = 1.0 / p as f64;
        let mut best = 0.0f64;
        for set in 0u32..(1u32 << p) {
            let mut prob = 0.0;
            let mut size = 0u32;
            for s in 0..p as usize {
                if set >> s & 1 == 1 {
                    prob += self.mass[s];
                    size += 1;
                }
            }
            best = best.max((prob - size as f64 * u).abs());
        }
        Ok(best)
    }

    /// `P̂(k) = Σ_j P(j) e^{2πijk/p}` by direct summation.
    pub fn dft(&self, k: u64) -> Result<FourierValue> {
        let p = self.modulus.p();
        if k >= p {
            return Err(Error::ResidueOutOfRange { residue: k, p });
        }
        let table = TwiddleTable::new(self.modulus);
        Ok(FourierValue {
            frequency: k,
            value: table.transform(&self.mass, k),
        })
    }

    /// All `p` transform values, `O(p²)`.
    pub fn spectrum(&self) -> Vec<FourierValue> {
        let table = TwiddleTable::new(self.modulus);
        (0..self.modulus.p())
            .map(|k| FourierValue {
                frequency: k,
                value: table.transform(&self.mass, k),
            })
            .collect()
    }

    /// Diaconis–Shahshahani bound `¼ Σ_{k≠0} |P̂(k)|²`, which dominates the
    /// squared total variation distance.
    pub fn ub_lemma_bound(&self) -> f64 {
        let table = TwiddleTable::new(self.modulus);
        0.25 * (1..self.modulus.p())
            .map(|k| table.transform(&self.mass, k).norm_sqr())
            .sum::<f64>()
    }

    /// `Σ_s P(s)²`.
    pub fn collision_probability(&self) -> f64 {
        self.mass.iter().map(|v| v * v).sum()
    }

    /// Residues carrying mass above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.mass.iter().filter(|&&v| v > threshold).count()
    }
}

pub(crate) fn check_same(left: Modulus, right: Modulus) -> Result<()> {
    if left != right {
        return Err(Error::ModulusMismatch {
            left: left.p(),
            right: right.p(),
        });
    }
    Ok(())
}

/// One value of the Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierValue {
    pub frequency: u64,
    pub value: Complex64,
}

/// `e^{2πij/p}` for `j in 0..p`.
#[derive(Debug, Clone)]
pub(crate) struct TwiddleTable {
    modulus: Modulus,
    roots: Vec<Complex64>,
}

impl TwiddleTable {
    pub(crate) fn new(modulus: Modulus) -> Self {
        let p = modulus.p();
        let roots = (0..p)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / p as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        TwiddleTable { modulus, roots }
    }

    pub(crate) fn transform(&self, mass: &[f64], k: u64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0u64;
        for &v in mass {
            acc += self.roots[idx as usize] * v;
            idx = self.modulus.add(idx, k);
        }
        acc
    }
}
