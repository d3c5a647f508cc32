use serde::{Deserialize, Serialize};

use super::{
    bell_measure, build_standards, cnot_via_teleport, prepare_magic, prepare_psi_cnot, BellState, StandardsVariant,
};
use crate::error::Result;
use crate::qstate::{Pauli, StateVector, Transcript};
use crate::rng::StreamRng;

/// Summary of a batch of protocol trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub protocol: String,
    pub trials: u64,
    pub success_rate: f64,
    pub mean_attempts: f64,
    pub fidelity_min: f64,
}

struct Acc {
    ok: u64,
    attempts: u64,
    fid_min: f64,
}

impl Acc {
    fn new() -> Self {
        Self { ok: 0, attempts: 0, fid_min: 1.0 }
    }

    fn finish(self, protocol: &str, trials: u64) -> DemoSummary {
        let t = trials.max(1) as f64;
        DemoSummary {
            protocol: protocol.into(),
            trials,
            success_rate: self.ok as f64 / t,
            mean_attempts: self.attempts as f64 / t,
            fidelity_min: self.fid_min,
        }
    }
}

/// Bell measurement on uniformly chosen Bell states.
pub fn demo_bell(seed: u64, trials: u64) -> Result<(DemoSummary, Transcript)> {
    let mut acc = Acc::new();
    let mut first = Transcript::new();
    for k in 0..trials {
        let mut rng = StreamRng::new(seed, k);
        let want = BellState::ALL[rng.below(4)];
        let mut s = want.state();
        let got = bell_measure(&mut s, 0, 1, &mut rng)?;
        acc.ok += u64::from(got == want);
        acc.attempts += 1;
        acc.fid_min = acc.fid_min.min(s.fidelity(&want.state()));
        if k == 0 {
            first = s.take_transcript();
        }
    }
    Ok((acc.finish("bell", trials), first))
}

/// Teleported CNOT on random two-qubit inputs, each through a freshly
/// prepared resource.
pub fn demo_cnot(seed: u64, trials: u64, forced: bool) -> Result<(DemoSummary, Transcript)> {
    let mut acc = Acc::new();
    let mut first = Transcript::new();
    for k in 0..trials {
        let mut rng = StreamRng::new(seed, k);
        let psi = prepare_psi_cnot(&mut rng, 1000, forced)?;
        let input = StateVector::random(2, &mut rng)?;
        let mut want = input.clone();
        want.apply_cnot_oracle(0, 1)?;
        let mut s = input;
        cnot_via_teleport(&mut s, 0, 1, &psi.state, &mut rng)?;
        let f = s.fidelity(&want);
        acc.ok += u64::from(f > 1.0 - 1e-9);
        acc.attempts += psi.attempts;
        acc.fid_min = acc.fid_min.min(f);
        if k == 0 {
            first = s.take_transcript();
        }
    }
    Ok((acc.finish("cnot", trials), first))
}

pub fn demo_magic(seed: u64, trials: u64) -> Result<(DemoSummary, Transcript)> {
    let mut acc = Acc::new();
    let want = super::rotation_state((1.0f64 / 3.0).atan());
    let mut first = Transcript::new();
    for k in 0..trials {
        let mut rng = StreamRng::new(seed, k);
        let mut r = prepare_magic(&mut rng, 1000)?;
        let f = r.state.fidelity(&want);
        acc.ok += u64::from(f > 1.0 - 1e-12);
        acc.attempts += r.attempts;
        acc.fid_min = acc.fid_min.min(f);
        if k == 0 {
            first = r.state.take_transcript();
        }
    }
    Ok((acc.finish("magic", trials), first))
}

/// Pool construction; "attempts" are hatted operations per pool and the
/// fidelity column is `1 - max |<P_a P_b> - 1|`.
pub fn demo_standards(seed: u64, trials: u64, target: usize, variant: StandardsVariant) -> Result<DemoSummary> {
    let mut acc = Acc::new();
    for k in 0..trials {
        let mut rng = StreamRng::new(seed, k);
        let pool = build_standards(Pauli::Z, target, &mut rng, variant, 1_000_000)?;
        let err = pool.invariant_error();
        acc.ok += u64::from(err < 1e-9);
        acc.attempts += pool.operations;
        acc.fid_min = acc.fid_min.min(1.0 - err);
    }
    let name = match variant {
        StandardsVariant::Quadratic => "standards-quadratic",
        StandardsVariant::Linear => "standards-linear",
    };
    Ok(acc.finish(name, trials))
}
