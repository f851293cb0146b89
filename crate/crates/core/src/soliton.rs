//! Shared kernel for soliton-train sums `base + amp · Σ_k sech²(X_k)` with
//! phases `X_k = slope_k · log_scale + offset_k`.
//!
//! The KdV trailing edge and the conjectured exterior-point recurrence
//! asymptotics are both evaluated through [`sech2_train`].

use crate::error::{Error, Result};

/// Result of a train evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSum {
    pub value: f64,
    /// Number of terms summed before the cutoff.
    pub terms: usize,
}

/// `sech²` without overflow for large `|x|`.
pub fn sech2(x: f64) -> f64 {
    let a = x.abs();
    if a > 40.0 {
        4.0 * (-2.0 * a).exp()
    } else {
        let c = a.cosh();
        1.0 / (c * c)
    }
}

/// Sum terms `k = 0, 1, …` until `|X_k|` grows from one term to the next
/// and the current term is below `1e-16`, i.e. the phases have moved past
/// the soliton band and away from zero. `phase(k)` returns
/// `(slope_k, offset_k)`.
pub fn sech2_train(
    base: f64,
    amp: f64,
    log_scale: f64,
    phase: &dyn Fn(usize) -> (f64, f64),
    max_terms: usize,
) -> Result<TrainSum> {
    let mut acc = 0.0;
    let mut prev = f64::INFINITY;
    for k in 0..max_terms {
        let (slope, offset) = phase(k);
        let x = slope * log_scale + offset;
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite soliton phase at k = {k}")));
        }
        let term = sech2(x);
        acc += term;
        if x.abs() > prev.abs() && term < 1e-16 {
            return Ok(TrainSum { value: base + amp * acc, terms: k + 1 });
        }
        prev = x;
    }
    Err(Error::Accuracy(format!("soliton train did not reach its cutoff within {max_terms} terms")))
}
