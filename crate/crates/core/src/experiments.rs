//! Experiment drivers: mixing times, scaling with `p`, the interval lower
//! bound, quenched runs for chosen multiplier sequences, and TV profiles.

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::MixingCurve;
use crate::error::{Error, Result};
use crate::fourier::{classification_census, conditional_ub_bound, ClassificationCensus, Thresholds};
use crate::group::Modulus;
use crate::process::{conditional_evolve, evolve_exact, Evolver, MultiplierSequence, ProcessParams};
use crate::walk::{occupation_counts, WalkExtremes};

/// Default TV threshold for mixing times.
pub const DEFAULT_EPSILON: f64 = 0.25;
/// Step cap for searches that wait for the chain to mix.
pub const MAX_STEPS: u64 = 1 << 22;
/// Odd primes used for scaling runs unless a grid is given.
pub const DEFAULT_GRID: [u64; 6] = [101, 401, 1009, 4001, 10007, 40009];

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParams(format!(
            "epsilon {epsilon} outside (0, 1)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingTime {
    pub n_star: u64,
    pub tv_at: f64,
    /// TV at `n_star − 1`; absent when `n_star = 0`.
    pub tv_before: Option<f64>,
}

/// Smallest `n` with `‖P_n − U‖ < ε`, by doubling then bisection on the
/// exact evolution. Valid because the TV curve is non-increasing.
pub fn mixing_time(params: &ProcessParams, epsilon: f64) -> Result<MixingTime> {
    check_epsilon(epsilon)?;
    let mut lo = Evolver::new(params);
    if lo.tv() < epsilon {
        return Ok(MixingTime {
            n_star: 0,
            tv_at: lo.tv(),
            tv_before: None,
        });
    }
    let mut hi_target = 1u64;
    let mut hi = loop {
        let mut probe = lo.clone();
        probe.advance_to(hi_target);
        if probe.tv() < epsilon {
            break probe;
        }
        if probe.tv() > lo.tv() + crate::curve::MONOTONE_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "TV rose from {} to {} between n={} and n={}",
                lo.tv(),
                probe.tv(),
                lo.steps(),
                probe.steps()
            )));
        }
        lo = probe;
        if hi_target >= MAX_STEPS {
            return Err(Error::InvariantViolation(format!(
                "TV still {} after {} steps",
                lo.tv(),
                lo.steps()
            )));
        }
        hi_target *= 2;
    };
    while hi.steps() - lo.steps() > 1 {
        let mid = lo.steps() + (hi.steps() - lo.steps()) / 2;
        let mut probe = lo.clone();
        probe.advance_to(mid);
        if probe.tv() < epsilon {
            hi = probe;
        } else {
            lo = probe;
        }
    }
    Ok(MixingTime {
        n_star: hi.steps(),
        tv_at: hi.tv(),
        tv_before: Some(lo.tv()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub p: u64,
    pub n_star: u64,
    pub log2p: f64,
    /// `n*/(log₂ p)²`.
    pub ratio_sq: f64,
    /// `n*/(log₂ p · log₂log₂ p)`.
    pub ratio_loglog: f64,
}

impl ScalingRow {
    pub fn new(p: u64, n_star: u64) -> Self {
        let log2p = (p as f64).log2();
        ScalingRow {
            p,
            n_star,
            log2p,
            ratio_sq: n_star as f64 / (log2p * log2p),
            ratio_loglog: n_star as f64 / (log2p * log2p.log2()),
        }
    }
}

/// Mixing time per modulus of `grid`, rows in grid order.
pub fn scaling_experiment<F>(grid: &[u64], epsilon: f64, make_params: F) -> Result<Vec<ScalingRow>>
where
    F: Fn(Modulus) -> Result<ProcessParams> + Sync,
{
    check_epsilon(epsilon)?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("grid must be strictly ascending".into()));
    }
    grid.par_iter()
        .map(|&p| {
            let params = make_params(Modulus::new(p)?)?;
            let t = mixing_time(&params, epsilon)?;
            Ok(ScalingRow::new(p, t.n_star))
        })
        .collect()
}

/// Outcome of the interval argument for the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub p: u64,
    pub n: u64,
    pub shift: i64,
    pub half_width: u64,
    /// Mass of `[−W, W]` under the law of `a^{shift}·X_n`.
    pub interval_mass: f64,
    /// `interval_mass − (2W + 1)/p`.
    pub tv_lower_bound: f64,
    pub exact_tv: f64,
}

/// Default `(n, shift, W)` for a modulus: `n = ⌊0.05·(log₂p)²⌋`,
/// `shift = ⌈0.25·log₂p⌉`, `W = ⌈0.05·√p·(log₂p)²⌉` kept below `p/4`.
pub fn lower_bound_defaults(modulus: Modulus) -> (u64, i64, u64) {
    let l = modulus.log2();
    let p = modulus.p();
    let n = (0.05 * l * l).floor() as u64;
    let shift = (0.25 * l).ceil() as i64;
    let w = (0.05 * (p as f64).sqrt() * l * l).ceil() as u64;
    let cap = (p - 1) / 4;
    (n, shift, w.min(cap.saturating_sub(1).max(0)))
}

/// Multiplies `X_n` by `a^{shift}` (negative shifts use `a⁻¹`) and measures
/// the mass near 0, which lower-bounds the TV distance of `X_n`.
pub fn lower_bound_check(
    params: &ProcessParams,
    n: u64,
    shift: i64,
    half_width: u64,
) -> Result<LowerBound> {
    let modulus = params.modulus();
    let p = modulus.p();
    if 2 * half_width >= p {
        return Err(Error::InvalidParams(format!(
            "half width {half_width} must be below p/2 = {}",
            p as f64 / 2.0
        )));
    }
    let law = evolve_exact(params, n).distribution;
    let factor = modulus
        .pow_signed(params.multiplier(), shift)
        .expect("multiplier is a unit");
    let interval_mass = law.scaled(factor).interval_mass(half_width);
    let tv_lower_bound = interval_mass - (2 * half_width + 1) as f64 / p as f64;
    let exact_tv = law.tv_distance();
    if tv_lower_bound > exact_tv + 1e-12 {
        return Err(Error::InvariantViolation(format!(
            "interval bound {tv_lower_bound} exceeds exact TV {exact_tv}"
        )));
    }
    Ok(LowerBound {
        p,
        n,
        shift,
        half_width,
        interval_mass,
        tv_lower_bound,
        exact_tv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SequenceKind {
    Alternating,
    AllForward,
    Random(u64),
}

impl SequenceKind {
    pub fn build(self, len: usize, forward_prob: f64) -> MultiplierSequence {
        match self {
            SequenceKind::Alternating => MultiplierSequence::alternating(len),
            SequenceKind::AllForward => MultiplierSequence::all_forward(len),
            SequenceKind::Random(seed) => MultiplierSequence::random(len, forward_prob, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalReport {
    pub p: u64,
    pub n: u64,
    pub kind: SequenceKind,
    pub tv: f64,
    pub ub_bound: f64,
    pub extremes: WalkExtremes,
    /// Frequency classification; only for multiplier 2, where exponent
    /// levels are binary positions.
    pub census: Option<ClassificationCensus>,
}

/// Quenched run: conditional law of `X_n`, its TV distance, the Fourier
/// bound, and the frequency census for the realized exponent walk.
pub fn conditional_experiment(
    params: &ProcessParams,
    n: u64,
    kind: SequenceKind,
    beta: f64,
) -> Result<ConditionalReport> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("n = {n} must be at least 2")));
    }
    let modulus = params.modulus();
    let seq = kind.build((n - 1) as usize, params.forward_prob());
    let law = conditional_evolve(params, &seq);
    let tv = law.tv_distance();
    let ub_bound = conditional_ub_bound(&seq, params);
    if tv * tv > ub_bound + 1e-12 {
        return Err(Error::InvariantViolation(format!(
            "TV² = {} exceeds the Fourier bound {ub_bound}",
            tv * tv
        )));
    }
    let path = seq.exponent_path();
    let extremes = path.extremes(path.len() - 1)?;
    let census = if params.multiplier() == 2 {
        let l = modulus.log2();
        let window = (l * l).floor().max(1.0) as usize;
        let occupation = occupation_counts(&path, window);
        let thresholds = Thresholds::with_beta(modulus, beta);
        Some(classification_census(modulus, &occupation, n, &thresholds)?)
    } else {
        None
    };
    Ok(ConditionalReport {
        p: modulus.p(),
        n,
        kind,
        tv,
        ub_bound,
        extremes,
        census,
    })
}

/// [`conditional_experiment`] over consecutive seeds, results in seed order.
pub fn conditional_sweep(
    params: &ProcessParams,
    n: u64,
    first_seed: u64,
    count: u64,
    beta: f64,
) -> Result<Vec<ConditionalReport>> {
    (first_seed..first_seed + count)
        .into_par_iter()
        .map(|seed| conditional_experiment(params, n, SequenceKind::Random(seed), beta))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub curve: MixingCurve,
    /// First `n` with TV below 0.9, 0.5 and 0.1.
    pub n_90: u64,
    pub n_50: u64,
    pub n_10: u64,
    /// `(n_10 − n_90)/n_50`.
    pub normalized_window: f64,
}

/// TV curve until it drops below `floor`, with threshold crossings.
pub fn cutoff_profile(params: &ProcessParams, floor: f64) -> Result<CutoffProfile> {
    check_epsilon(floor)?;
    let mut ev = Evolver::new(params);
    let mut curve = MixingCurve::new(params);
    curve.push(0, ev.tv());
    while ev.tv() >= floor {
        if ev.steps() >= MAX_STEPS {
            return Err(Error::InvariantViolation(format!(
                "TV still {} after {} steps",
                ev.tv(),
                ev.steps()
            )));
        }
        ev.step();
        curve.push(ev.steps(), ev.tv());
    }
    curve.check_monotone()?;
    let crossing = |x: f64| curve.first_below(x).expect("curve ends below the floor");
    let (n_90, n_50, n_10) = (crossing(0.9), crossing(0.5), crossing(0.1));
    let normalized_window = if n_50 == 0 {
        0.0
    } else {
        (n_10 - n_90) as f64 / n_50 as f64
    };
    Ok(CutoffProfile {
        curve,
        n_90,
        n_50,
        n_10,
        normalized_window,
    })
}
