//! The step law `X ← a·X + b (mod p)` with `a ∈ {a, a⁻¹}`, exact evolution of
//! the law of `X_n` (annealed and conditional on the multipliers), and
//! seeded Monte Carlo sampling.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::MixingCurve;
use crate::error::{Error, Result};
use crate::group::{check_same, DistributionModP, Modulus};
use crate::rng;
use crate::walk::ExponentPath;

/// Largest `n` accepted by [`mixture_reconstruct`].
pub const MIXTURE_MAX_STEPS: u64 = 12;
const PROB_TOLERANCE: f64 = 1e-12;

/// One atom of the increment law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Increment {
    pub value: i64,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementPreset {
    /// Uniform on `{1, 0, −1}`.
    Trinary,
    /// Uniform on `{1, −1}`.
    Binary,
}

impl IncrementPreset {
    pub fn increments(self) -> Vec<Increment> {
        match self {
            IncrementPreset::Trinary => [1, 0, -1]
                .iter()
                .map(|&value| Increment {
                    value,
                    prob: 1.0 / 3.0,
                })
                .collect(),
            IncrementPreset::Binary => [1, -1]
                .iter()
                .map(|&value| Increment { value, prob: 0.5 })
                .collect(),
        }
    }
}

/// Law of one step: the multiplier is `a` with probability `forward_prob`
/// and `a⁻¹` otherwise, independently of the increment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessParams {
    modulus: Modulus,
    multiplier: u64,
    multiplier_inverse: u64,
    forward_prob: f64,
    increments: Vec<Increment>,
}

impl ProcessParams {
    pub fn new(
        modulus: Modulus,
        multiplier: u64,
        forward_prob: f64,
        increments: Vec<Increment>,
    ) -> Result<Self> {
        let p = modulus.p();
        if multiplier < 2 || multiplier >= p {
            return Err(Error::InvalidParams(format!(
                "multiplier {multiplier} outside [2, {}]",
                p - 1
            )));
        }
        let multiplier_inverse = modulus.inverse(multiplier).ok_or_else(|| {
            Error::InvalidParams(format!("multiplier {multiplier} not invertible mod {p}"))
        })?;
        if !(0.0..=1.0).contains(&forward_prob) {
            return Err(Error::InvalidParams(format!(
                "forward probability {forward_prob} outside [0, 1]"
            )));
        }
        if increments.is_empty() || increments.iter().any(|i| !(i.prob > 0.0)) {
            return Err(Error::InvalidParams(
                "increment probabilities must be positive".into(),
            ));
        }
        let total: f64 = increments.iter().map(|i| i.prob).sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "increment probabilities sum to {total}"
            )));
        }
        Ok(ProcessParams {
            modulus,
            multiplier,
            multiplier_inverse,
            forward_prob,
            increments,
        })
    }

    /// `a ∈ {2, (p+1)/2}` with equal odds, `b` uniform on `{1, 0, −1}`.
    pub fn symmetric(modulus: Modulus) -> Self {
        Self::new(modulus, 2, 0.5, IncrementPreset::Trinary.increments())
            .expect("default parameters are valid for every odd modulus")
    }

    /// The original fixed-multiplier chain `X ← 2X + b`.
    pub fn fixed_doubling(modulus: Modulus) -> Self {
        Self::new(modulus, 2, 1.0, IncrementPreset::Trinary.increments())
            .expect("default parameters are valid for every odd modulus")
    }

    pub fn with_multiplier(self, multiplier: u64) -> Result<Self> {
        Self::new(self.modulus, multiplier, self.forward_prob, self.increments)
    }

    pub fn with_forward_prob(self, forward_prob: f64) -> Result<Self> {
        Self::new(self.modulus, self.multiplier, forward_prob, self.increments)
    }

    pub fn with_increments(self, increments: Vec<Increment>) -> Result<Self> {
        Self::new(self.modulus, self.multiplier, self.forward_prob, increments)
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }
    #[inline]
    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }
    #[inline]
    pub fn multiplier_inverse(&self) -> u64 {
        self.multiplier_inverse
    }
    #[inline]
    pub fn forward_prob(&self) -> f64 {
        self.forward_prob
    }
    pub fn increments(&self) -> &[Increment] {
        &self.increments
    }

    pub fn multiplier_for(&self, choice: MultiplierChoice) -> u64 {
        match choice {
            MultiplierChoice::Forward => self.multiplier,
            MultiplierChoice::Inverse => self.multiplier_inverse,
        }
    }

    /// `(multiplier residue, weight)` pairs with positive weight.
    fn branches(&self) -> Vec<(u64, f64)> {
        [
            (self.multiplier, self.forward_prob),
            (self.multiplier_inverse, 1.0 - self.forward_prob),
        ]
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .collect()
    }

    /// Increments as canonical residues.
    fn residue_increments(&self) -> Vec<(u64, f64)> {
        self.increments
            .iter()
            .map(|i| (self.modulus.reduce(i.value), i.prob))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MultiplierChoice {
    /// Multiply by `a`.
    Forward,
    /// Multiply by `a⁻¹`.
    Inverse,
}

impl MultiplierChoice {
    /// Exponent increment of `a`.
    pub fn sign(self) -> i64 {
        match self {
            MultiplierChoice::Forward => 1,
            MultiplierChoice::Inverse => -1,
        }
    }
}

/// Multipliers `a_1, …, a_{n−1}` in chronological order; `choices[i]` is
/// the multiplier applied at step `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct MultiplierSequence {
    choices: Vec<MultiplierChoice>,
}

impl MultiplierSequence {
    pub fn new(choices: Vec<MultiplierChoice>) -> Self {
        MultiplierSequence { choices }
    }

    pub fn all_forward(len: usize) -> Self {
        Self::new(vec![MultiplierChoice::Forward; len])
    }

    /// `…, a⁻¹, a, a⁻¹, a`: the most recent multiplier is forward.
    pub fn alternating(len: usize) -> Self {
        let choices = (0..len)
            .map(|i| {
                if (len - 1 - i) % 2 == 0 {
                    MultiplierChoice::Forward
                } else {
                    MultiplierChoice::Inverse
                }
            })
            .collect();
        Self::new(choices)
    }

    /// Bit `i` of `bits` set means `choices[i]` is forward.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        let choices = (0..len)
            .map(|i| {
                if bits >> i & 1 == 1 {
                    MultiplierChoice::Forward
                } else {
                    MultiplierChoice::Inverse
                }
            })
            .collect();
        Self::new(choices)
    }

    pub fn random(len: usize, forward_prob: f64, seed: u64) -> Self {
        Self::random_indexed(len, forward_prob, seed, 0)
    }

    /// Draws from stream `index` of `seed`.
    pub fn random_indexed(len: usize, forward_prob: f64, seed: u64, index: u64) -> Self {
        let mut rng = rng::stream(seed, index);
        let choices = (0..len)
            .map(|_| {
                if rng.gen_bool(forward_prob) {
                    MultiplierChoice::Forward
                } else {
                    MultiplierChoice::Inverse
                }
            })
            .collect();
        Self::new(choices)
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn choices(&self) -> &[MultiplierChoice] {
        &self.choices
    }

    pub fn forward_count(&self) -> usize {
        self.choices
            .iter()
            .filter(|&&c| c == MultiplierChoice::Forward)
            .count()
    }

    /// Exponent walk read backwards from the most recent multiplier:
    /// `w_t` is the power of `a` in the coefficient of `b_{n−1−t}`.
    pub fn exponent_path(&self) -> ExponentPath {
        let mut w = Vec::with_capacity(self.choices.len() + 1);
        w.push(0i64);
        let mut level = 0i64;
        for c in self.choices.iter().rev() {
            level += c.sign();
            w.push(level);
        }
        ExponentPath::from_levels_unchecked(w)
    }

    /// Residues `a_{n−1}⋯a_{n−t}` for `t = 0..n`, the coefficient of
    /// `b_{n−1−t}` in `X_n`.
    pub fn coefficients(&self, params: &ProcessParams) -> Vec<u64> {
        let modulus = params.modulus();
        let mut out = Vec::with_capacity(self.choices.len() + 1);
        let mut c = 1u64;
        out.push(c);
        for &choice in self.choices.iter().rev() {
            c = modulus.mul(c, params.multiplier_for(choice));
            out.push(c);
        }
        out
    }
}

/// Reusable buffers for repeated exact steps.
#[derive(Debug, Clone)]
struct Kernel {
    modulus: Modulus,
    increments: Vec<(u64, f64)>,
    scratch: Vec<f64>,
    out: Vec<f64>,
}

impl Kernel {
    fn new(params: &ProcessParams) -> Self {
        let p = params.modulus().p() as usize;
        Kernel {
            modulus: params.modulus(),
            increments: params.residue_increments(),
            scratch: vec![0.0; p],
            out: vec![0.0; p],
        }
    }

    /// `mass ← Σ_a w_a Σ_b w_b · law of (a·X + b)`.
    fn apply(&mut self, mass: &mut Vec<f64>, branches: &[(u64, f64)]) {
        let p = self.modulus.p() as usize;
        self.scratch.iter_mut().for_each(|v| *v = 0.0);
        for &(a, wa) in branches {
            let mut idx = 0u64;
            for &v in mass.iter() {
                self.scratch[idx as usize] += wa * v;
                idx = self.modulus.add(idx, a);
            }
        }
        self.out.iter_mut().for_each(|v| *v = 0.0);
        for &(b, wb) in &self.increments {
            let b = b as usize;
            let (head, tail) = self.out.split_at_mut(b);
            for (o, &s) in tail.iter_mut().zip(&self.scratch[..p - b]) {
                *o += wb * s;
            }
            for (o, &s) in head.iter_mut().zip(&self.scratch[p - b..]) {
                *o += wb * s;
            }
        }
        std::mem::swap(mass, &mut self.out);
    }
}

/// Stateful exact evolution of the annealed law from `X_0 = 0`.
#[derive(Debug, Clone)]
pub struct Evolver {
    params: ProcessParams,
    branches: Vec<(u64, f64)>,
    kernel: Kernel,
    mass: Vec<f64>,
    steps: u64,
}

impl Evolver {
    pub fn new(params: &ProcessParams) -> Self {
        let p = params.modulus().p() as usize;
        let mut mass = vec![0.0; p];
        mass[0] = 1.0;
        Evolver {
            params: params.clone(),
            branches: params.branches(),
            kernel: Kernel::new(params),
            mass,
            steps: 0,
        }
    }

    pub fn step(&mut self) {
        self.kernel.apply(&mut self.mass, &self.branches);
        self.steps += 1;
    }

    pub fn advance_to(&mut self, n: u64) {
        while self.steps < n {
            self.step();
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn tv(&self) -> f64 {
        let u = 1.0 / self.mass.len() as f64;
        0.5 * self.mass.iter().map(|&v| (v - u).abs()).sum::<f64>()
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn distribution(&self) -> DistributionModP {
        DistributionModP::from_raw(self.params.modulus(), self.mass.clone())
    }
}

/// One exact step of the annealed chain.
pub fn step_exact(d: &DistributionModP, params: &ProcessParams) -> Result<DistributionModP> {
    check_same(d.modulus(), params.modulus())?;
    let mut kernel = Kernel::new(params);
    let mut mass = d.mass().to_vec();
    kernel.apply(&mut mass, &params.branches());
    Ok(DistributionModP::from_raw(params.modulus(), mass))
}

/// Result of [`evolve_exact`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub curve: MixingCurve,
    pub distribution: DistributionModP,
}

/// Law of `X_n` from `X_0 = 0`, with the TV distance recorded at every
/// `n' = 0..=n`.
pub fn evolve_exact(params: &ProcessParams, n: u64) -> Evolution {
    let mut ev = Evolver::new(params);
    let mut curve = MixingCurve::new(params);
    curve.push(0, ev.tv());
    for _ in 0..n {
        ev.step();
        curve.push(ev.steps(), ev.tv());
    }
    Evolution {
        curve,
        distribution: ev.distribution(),
    }
}

/// Law of `X_n` given the multipliers `a_1, …, a_{n−1}`, with `n = seq.len() + 1`.
pub fn conditional_evolve(params: &ProcessParams, seq: &MultiplierSequence) -> DistributionModP {
    let modulus = params.modulus();
    let mut kernel = Kernel::new(params);
    let mut mass = vec![0.0; modulus.p() as usize];
    mass[0] = 1.0;
    // X_1 = b_0: the first multiplier acts on X_0 = 0.
    kernel.apply(&mut mass, &[(1, 1.0)]);
    for &choice in seq.choices() {
        kernel.apply(&mut mass, &[(params.multiplier_for(choice), 1.0)]);
    }
    DistributionModP::from_raw(modulus, mass)
}

/// Weighted average of the conditional laws over all `2^{n−1}` multiplier
/// sequences. Brute force; only for `n ≤ 12`.
pub fn mixture_reconstruct(params: &ProcessParams, n: u64) -> Result<DistributionModP> {
    if n > MIXTURE_MAX_STEPS {
        return Err(Error::TooLarge {
            what: "n",
            value: n,
            limit: MIXTURE_MAX_STEPS,
        });
    }
    let modulus = params.modulus();
    if n == 0 {
        return DistributionModP::point_mass(modulus, 0);
    }
    let len = (n - 1) as usize;
    let q = params.forward_prob();
    let mut acc = vec![0.0; modulus.p() as usize];
    for bits in 0..1u64 << len {
        let seq = MultiplierSequence::from_bits(len, bits);
        let fwd = seq.forward_count() as i32;
        let weight = q.powi(fwd) * (1.0 - q).powi(len as i32 - fwd);
        if weight == 0.0 {
            continue;
        }
        let d = conditional_evolve(params, &seq);
        for (a, v) in acc.iter_mut().zip(d.mass()) {
            *a += weight * v;
        }
    }
    Ok(DistributionModP::from_raw(modulus, acc))
}

/// Fast sampler over the joint step law. One `u32` per step selects an
/// outcome `(multiplier, increment)` by cumulative thresholds; a table on
/// the top byte resolves all but the few buckets that straddle a threshold.
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    modulus: Modulus,
    thresholds: Vec<u64>,
    outcomes: Vec<(MultiplierChoice, u64)>,
    multipliers: [u64; 2],
    /// Outcome index per top byte, or `AMBIGUOUS`.
    bucket: [u8; 256],
    /// `transitions[k·p + x]` = `a_k·x + b_k mod p`, for small `p`.
    transitions: Option<Vec<u32>>,
}

const TABLE_LIMIT: u64 = 1 << 20;
const AMBIGUOUS: u8 = u8::MAX;

impl TrajectorySampler {
    pub fn new(params: &ProcessParams) -> Self {
        let modulus = params.modulus();
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        for (choice, w) in [
            (MultiplierChoice::Forward, params.forward_prob()),
            (MultiplierChoice::Inverse, 1.0 - params.forward_prob()),
        ] {
            if w <= 0.0 {
                continue;
            }
            for inc in params.increments() {
                outcomes.push((choice, modulus.reduce(inc.value)));
                probs.push(w * inc.prob);
            }
        }
        // thresholds[k] = cumulative mass of outcomes 0..=k scaled to 2^32;
        // the outcome is the number of thresholds at or below the draw.
        let mut thresholds = Vec::with_capacity(probs.len() - 1);
        let mut cum = 0.0;
        for &pr in &probs[..probs.len() - 1] {
            cum += pr;
            thresholds.push(((cum * 4294967296.0).round() as u64).min(1 << 32));
        }
        let mut bucket = [AMBIGUOUS; 256];
        for (hi, slot) in bucket.iter_mut().enumerate() {
            let lo_draw = (hi as u64) << 24;
            let hi_draw = lo_draw + (1 << 24) - 1;
            let k_lo = outcome_index(&thresholds, lo_draw);
            if k_lo == outcome_index(&thresholds, hi_draw) && k_lo < AMBIGUOUS as usize {
                *slot = k_lo as u8;
            }
        }
        let multipliers = [params.multiplier(), params.multiplier_inverse()];
        let p = modulus.p();
        let transitions = (p * outcomes.len() as u64 <= TABLE_LIMIT).then(|| {
            outcomes
                .iter()
                .flat_map(|&(choice, b)| {
                    let a = multipliers[(choice == MultiplierChoice::Inverse) as usize];
                    (0..p).map(move |x| modulus.add(modulus.mul(a, x), b) as u32)
                })
                .collect()
        });
        TrajectorySampler {
            modulus,
            thresholds,
            outcomes,
            multipliers,
            bucket,
            transitions,
        }
    }

    #[inline]
    fn draw(&self, rng: &mut impl RngCore) -> usize {
        let r = rng.next_u32();
        match self.bucket[(r >> 24) as usize] {
            AMBIGUOUS => outcome_index(&self.thresholds, r as u64),
            k => k as usize,
        }
    }

    fn run(&self, n: u64, seed: u64, index: u64, mut record: impl FnMut(MultiplierChoice)) -> u64 {
        let mut rng = rng::stream(seed, index);
        if n == 0 {
            return 0;
        }
        // X_1 = b_0; the multiplier of the first step acts on X_0 = 0.
        let mut x = self.outcomes[self.draw(&mut rng)].1;
        for _ in 1..n {
            let k = self.draw(&mut rng);
            let (choice, b) = self.outcomes[k];
            record(choice);
            x = match &self.transitions {
                Some(t) => t[k * self.modulus.p() as usize + x as usize] as u64,
                None => {
                    let a = self.multipliers[(choice == MultiplierChoice::Inverse) as usize];
                    self.modulus.add(self.modulus.mul(a, x), b)
                }
            };
        }
        x
    }

    /// `X_n` for sample `index` of the run seeded by `seed`.
    pub fn sample_final(&self, n: u64, seed: u64, index: u64) -> u64 {
        self.run(n, seed, index, |_| {})
    }

    pub fn sample_trajectory(&self, n: u64, seed: u64, index: u64) -> (u64, MultiplierSequence) {
        let mut choices = Vec::with_capacity(n.saturating_sub(1) as usize);
        let x = self.run(n, seed, index, |c| choices.push(c));
        (x, MultiplierSequence::new(choices))
    }
}

#[inline]
fn outcome_index(thresholds: &[u64], draw: u64) -> usize {
    thresholds.iter().map(|&t| (draw >= t) as usize).sum()
}

/// `X_n` and the multipliers `a_1, …, a_{n−1}` used, from stream 0 of `seed`.
pub fn sample_trajectory(params: &ProcessParams, n: u64, seed: u64) -> (u64, MultiplierSequence) {
    TrajectorySampler::new(params).sample_trajectory(n, seed, 0)
}

const SAMPLE_CHUNK: u64 = 4096;

/// Histogram of `X_n` over `samples` independent trajectories. Sample `i`
/// uses stream `i` of `seed`, so counts do not depend on the thread count.
pub fn monte_carlo_counts(params: &ProcessParams, n: u64, samples: u64, seed: u64) -> Vec<u64> {
    let sampler = TrajectorySampler::new(params);
    let p = params.modulus().p() as usize;
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; p];
            let end = ((c + 1) * SAMPLE_CHUNK).min(samples);
            for i in c * SAMPLE_CHUNK..end {
                counts[sampler.sample_final(n, seed, i) as usize] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; p],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Empirical law against the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub p: u64,
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    pub empirical_tv_to_uniform: f64,
    pub exact_tv_to_uniform: f64,
    /// TV between the empirical and the exact law.
    pub sampling_tv: f64,
    /// `3·√(p/(4N))`, the multinomial sampling-error scale.
    pub error_bound: f64,
}

pub fn monte_carlo_check(
    params: &ProcessParams,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    let counts = monte_carlo_counts(params, n, samples, seed);
    let empirical = DistributionModP::from_counts(params.modulus(), &counts)?;
    let exact = evolve_exact(params, n).distribution;
    let p = params.modulus().p();
    Ok(MonteCarloReport {
        p,
        n,
        samples,
        seed,
        empirical_tv_to_uniform: empirical.tv_distance(),
        exact_tv_to_uniform: exact.tv_distance(),
        sampling_tv: empirical.tv_between(&exact)?,
        error_bound: 3.0 * (p as f64 / (4.0 * samples as f64)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(p: u64) -> Modulus {
        Modulus::new(p).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn params_validation() {
        let m = md(9);
        assert!(ProcessParams::symmetric(m).clone().with_multiplier(3).is_err());
        assert!(ProcessParams::symmetric(m).clone().with_multiplier(1).is_err());
        assert!(ProcessParams::symmetric(m).clone().with_multiplier(9).is_err());
        assert!(ProcessParams::symmetric(m).clone().with_forward_prob(1.5).is_err());
        let bad = vec![Increment { value: 1, prob: 0.6 }, Increment { value: -1, prob: 0.6 }];
        assert!(ProcessParams::symmetric(m).with_increments(bad).is_err());
        let p = ProcessParams::symmetric(md(7)).with_multiplier(3).unwrap();
        assert_eq!(p.multiplier_inverse(), 5);
    }

    #[test]
    fn one_step_from_origin() {
        let m = md(5);
        let d0 = DistributionModP::point_mass(m, 0).unwrap();
        let d1 = step_exact(&d0, &ProcessParams::symmetric(m)).unwrap();
        let t = 1.0 / 3.0;
        assert!(close(d1.mass(), &[t, t, 0.0, 0.0, t], 1e-15));
    }

    #[test]
    fn two_steps_p5() {
        let m = md(5);
        let e = evolve_exact(&ProcessParams::symmetric(m), 2);
        let expect = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0];
        assert!(close(e.distribution.mass(), &expect, 1e-15));
        assert!((e.curve.tv_at(2).unwrap() - 4.0 / 45.0).abs() < 1e-15);
        assert!((e.curve.tv_at(0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn p3_mixes_in_one_step() {
        let e = evolve_exact(&ProcessParams::symmetric(md(3)), 1);
        assert_eq!(e.curve.tv_at(1), Some(0.0));
    }

    #[test]
    fn uniform_is_fixed() {
        let m = md(11);
        let u = DistributionModP::uniform(m);
        let next = step_exact(&u, &ProcessParams::symmetric(m)).unwrap();
        assert!(next.tv_distance() < 1e-15);
    }

    #[test]
    fn modulus_mismatch() {
        let d = DistributionModP::uniform(md(7));
        assert!(matches!(
            step_exact(&d, &ProcessParams::symmetric(md(5))),
            Err(Error::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn conditional_examples() {
        let m = md(5);
        let params = ProcessParams::symmetric(m);
        let d = conditional_evolve(&params, &MultiplierSequence::default());
        let t = 1.0 / 3.0;
        assert!(close(d.mass(), &[t, t, 0.0, 0.0, t], 1e-15));

        // All-forward conditioning equals the fixed-multiplier chain.
        let m = md(31);
        let fixed = ProcessParams::fixed_doubling(m);
        let seq = MultiplierSequence::all_forward(9);
        let cond = conditional_evolve(&ProcessParams::symmetric(m), &seq);
        let annealed = evolve_exact(&fixed, 10).distribution;
        assert!(close(cond.mass(), annealed.mass(), 1e-15));
    }

    /// Law of `2·Σ_{even lags} b + Σ_{odd lags} b` built from two trinomial
    /// convolutions over the integers.
    fn alternating_oracle(p: u64, n: usize) -> Vec<f64> {
        fn trinomial(k: usize) -> Vec<f64> {
            let mut law = vec![1.0];
            for _ in 0..k {
                let mut next = vec![0.0; law.len() + 2];
                for (i, v) in law.iter().enumerate() {
                    for d in 0..3 {
                        next[i + d] += v / 3.0;
                    }
                }
                law = next;
            }
            law // index i is the value i − k
        }
        let ones = trinomial(n.div_ceil(2)); // b_{n−1}, b_{n−3}, …
        let twos = trinomial(n / 2); // b_{n−2}, b_{n−4}, …
        let (k1, k2) = (n.div_ceil(2) as i64, (n / 2) as i64);
        let mut out = vec![0.0; p as usize];
        for (i, u) in ones.iter().enumerate() {
            for (j, v) in twos.iter().enumerate() {
                let x = (i as i64 - k1) + 2 * (j as i64 - k2);
                out[x.rem_euclid(p as i64) as usize] += u * v;
            }
        }
        out
    }

    #[test]
    fn alternating_matches_trinomial_convolution() {
        for (p, n) in [(101u64, 7usize), (1009, 20), (13, 12)] {
            let params = ProcessParams::symmetric(md(p));
            let d = conditional_evolve(&params, &MultiplierSequence::alternating(n - 1));
            assert!(close(d.mass(), &alternating_oracle(p, n), 1e-13), "p={p} n={n}");
        }
    }

    #[test]
    fn alternating_support_is_small() {
        let p = 10007;
        let n = 60;
        let d = conditional_evolve(
            &ProcessParams::symmetric(md(p)),
            &MultiplierSequence::alternating(n - 1),
        );
        assert!(d.support_size(0.0) <= 3 * (n + 1));
        assert!(d.tv_distance() >= 1.0 - (3 * (n + 1)) as f64 / p as f64);
    }

    #[test]
    fn mixture_examples() {
        let m = md(5);
        let params = ProcessParams::symmetric(m);
        let one = mixture_reconstruct(&params, 1).unwrap();
        assert!(close(one.mass(), evolve_exact(&params, 1).distribution.mass(), 1e-15));
        let two = mixture_reconstruct(&params, 2).unwrap();
        let expect = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0];
        assert!(close(two.mass(), &expect, 1e-15));
        let three = mixture_reconstruct(&params, 3).unwrap();
        assert!(close(three.mass(), evolve_exact(&params, 3).distribution.mass(), 1e-10));
        assert!(mixture_reconstruct(&params, 13).is_err());
    }

    #[test]
    fn generalized_multiplier_one_step() {
        // a = 3, p = 7: enumerate (a, b) from a spread-out start.
        let m = md(7);
        let params = ProcessParams::symmetric(m).with_multiplier(3).unwrap();
        let start = DistributionModP::new(m, vec![0.4, 0.1, 0.0, 0.2, 0.0, 0.3, 0.0]).unwrap();
        let got = step_exact(&start, &params).unwrap();
        let mut expect = vec![0.0; 7];
        for x in 0..7u64 {
            for a in [3u64, 5] {
                for b in [-1i64, 0, 1] {
                    let y = (a * x) as i64 + b;
                    expect[y.rem_euclid(7) as usize] += start.get(x) / 6.0;
                }
            }
        }
        assert!(close(got.mass(), &expect, 1e-15));
    }

    #[test]
    fn sampler_determinism_and_layout() {
        let params = ProcessParams::symmetric(md(101));
        assert_eq!(sample_trajectory(&params, 0, 5), (0, MultiplierSequence::default()));
        let a = sample_trajectory(&params, 50, 9);
        let b = sample_trajectory(&params, 50, 9);
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 49);
        let sampler = TrajectorySampler::new(&params);
        assert_eq!(sampler.sample_final(50, 9, 0), a.0);
        // Replaying the recorded multipliers with the same increments agrees.
        let c = sampler.sample_trajectory(50, 9, 3);
        assert_eq!(c.0, sampler.sample_final(50, 9, 3));
    }

    #[test]
    fn sampler_thresholds_cover_all_outcomes() {
        let params = ProcessParams::symmetric(md(7));
        let s = TrajectorySampler::new(&params);
        assert_eq!(s.outcomes.len(), 6);
        assert_eq!(s.thresholds.len(), 5);
        assert!(s.thresholds.windows(2).all(|w| w[0] < w[1]));
        let fixed = TrajectorySampler::new(&ProcessParams::fixed_doubling(md(7)));
        assert_eq!(fixed.outcomes.len(), 3);
        // The byte table agrees with the threshold scan on every bucket edge.
        for hi in 0..256u64 {
            for draw in [hi << 24, (hi << 24) + (1 << 24) - 1] {
                let k = match s.bucket[(draw >> 24) as usize] {
                    AMBIGUOUS => outcome_index(&s.thresholds, draw),
                    k => k as usize,
                };
                assert_eq!(k, outcome_index(&s.thresholds, draw));
            }
        }
        assert!(s.bucket.iter().filter(|&&b| b == AMBIGUOUS).count() <= 5);
    }

    #[test]
    fn monte_carlo_small() {
        let params = ProcessParams::symmetric(md(11));
        let r = monte_carlo_check(&params, 6, 200_000, 1).unwrap();
        assert!(r.sampling_tv < r.error_bound, "{r:?}");
    }
}
