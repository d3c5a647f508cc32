use serde::{Deserialize, Serialize};

use crate::error::{Result, StpError};
use crate::qstate::{OpTag, PairOutcome, StateVector, Transcript};
use crate::rng::StreamRng;

/// Lower bound check on the joint probability of forced outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub j: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub observed: f64,
    pub bound: f64,
    /// First prefix length whose nonzero probability fell below its bound.
    pub first_violation: Option<usize>,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

fn bound_for(j: usize, n: usize) -> f64 {
    4f64.powi(-(j as i32)) * 2f64.powi(-(n as i32 + 1))
}

/// Walks the forced s/t steps of `transcript`, multiplying their branch
/// weights, and checks every nonzero prefix against `4^-j 2^-(N+1)`.
pub fn verify_amplitude_bound(transcript: &Transcript, n: usize) -> BoundCheck {
    let mut p = 1.0;
    let mut j = 0;
    let mut first_violation = None;
    for s in &transcript.steps {
        if !s.forced || !matches!(s.op, OpTag::S | OpTag::T) {
            continue;
        }
        p *= s.w;
        j += 1;
        if p > 0.0 && p < bound_for(j, n) && first_violation.is_none() {
            first_violation = Some(j);
        }
    }
    BoundCheck { j, n, observed: p, bound: bound_for(j, n), first_violation }
}

/// A dimerized start followed by up to `len` random forced s/t outcomes on
/// random pairs. A draw whose branch has zero weight ends the transcript.
pub fn random_forced_transcript(n: usize, len: usize, rng: &mut StreamRng) -> Result<Transcript> {
    let mut s = StateVector::singlet_dimerization(n / 2)?;
    for _ in 0..len {
        let (a, b) = rng.distinct_pair(n);
        let o = if rng.coin() { PairOutcome::Singlet } else { PairOutcome::Triplet };
        match s.postselect_pair(a, b, o) {
            Ok(_) => {}
            Err(StpError::ZeroBranch { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(s.take_transcript())
}
