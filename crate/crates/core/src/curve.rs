use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::ProcessParams;

/// Tolerance for the non-increasing check on TV curves.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub tv: f64,
}

/// `(n, ‖P_n − U‖)` trajectory for one modulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingCurve {
    pub p: u64,
    pub params: ProcessParams,
    pub points: Vec<CurvePoint>,
}

impl MixingCurve {
    pub fn new(params: &ProcessParams) -> Self {
        MixingCurve {
            p: params.modulus().p(),
            params: params.clone(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, n: u64, tv: f64) {
        self.points.push(CurvePoint { n, tv });
    }

    pub fn tv_at(&self, n: u64) -> Option<f64> {
        self.points.iter().find(|pt| pt.n == n).map(|pt| pt.tv)
    }

    pub fn last(&self) -> Option<CurvePoint> {
        self.points.last().copied()
    }

    /// First recorded `n` with TV strictly below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<u64> {
        self.points.iter().find(|pt| pt.tv < threshold).map(|pt| pt.n)
    }

    pub fn check_monotone(&self) -> Result<()> {
        for pair in self.points.windows(2) {
            if pair[1].tv > pair[0].tv + MONOTONE_TOLERANCE {
                return Err(Error::InvariantViolation(format!(
                    "TV increased from {} at n={} to {} at n={}",
                    pair[0].tv, pair[0].n, pair[1].tv, pair[1].n
                )));
            }
        }
        Ok(())
    }
}
