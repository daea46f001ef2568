//! Exact and Monte Carlo analysis of the affine random process
//! `X_{n+1} = a_n·X_n + b_n (mod p)` with `a_n ∈ {a, a⁻¹}`.
//!
//! The crate evolves the law of `X_n` exactly on dense vectors, measures its
//! total variation distance to uniform, bounds it through the Fourier
//! transform, and provides the exponent-walk and binary-expansion tools used
//! to explain the `(log p)²` mixing time.

pub mod curve;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod group;
pub mod process;
pub mod rng;
pub mod table;
pub mod walk;

pub use curve::{CurvePoint, MixingCurve};
pub use error::{Error, Result};
pub use group::{DistributionModP, FourierValue, Modulus};
pub use process::{
    conditional_evolve, evolve_exact, mixture_reconstruct, sample_trajectory, step_exact,
    Increment, IncrementPreset, MultiplierChoice, MultiplierSequence, ProcessParams,
};
pub use walk::{
    max_law, occupation_counts, returns_law, simulate_walk, ExponentPath, OccupationTable,
    WalkExtremes,
};
