use serde::{Deserialize, Serialize};

use super::detangle::{detangle_sector, DEFAULT_MAX_MEAS};
use super::sector::SectorState;
use super::{check_spins, dimerization};
use crate::error::{precondition, Result, StpError};
use crate::qstate::{max_qubits, PairOutcome, StateVector};
use crate::rng::StreamRng;

/// Pairs in measurement order and the outcomes as `0` (s) / `1` (t).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StInstance {
    pub n: usize,
    pub pairs: Vec<[usize; 2]>,
    pub bits: String,
}

impl StInstance {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        check_spins(self.n, max_qubits())?;
        if self.pairs.len() != self.bits.len() || self.pairs.is_empty() {
            return Err(precondition("need one bit per pair and at least one pair"));
        }
        if !self.bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(precondition("bits must be 0 or 1"));
        }
        for &[a, b] in &self.pairs {
            if a >= self.n || b >= self.n || a == b {
                return Err(precondition(format!("bad pair ({a},{b})")));
            }
        }
        Ok(())
    }

    /// The instance without its last measurement.
    pub fn prefix(&self) -> (&[[usize; 2]], &str) {
        let k = self.pairs.len() - 1;
        (&self.pairs[..k], &self.bits[..k])
    }
}

fn bit(o: PairOutcome) -> char {
    if o.is_singlet() {
        '0'
    } else {
        '1'
    }
}

/// Random rounds, detangling down to four spins, then one last
/// measurement on a random pair of the survivors.
pub fn stsample_generate(n: usize, rounds: usize, seed: u64) -> Result<StInstance> {
    let pair_seed = StreamRng::derive_seed(seed, "stsample/pairs");
    let outcome_seed = StreamRng::derive_seed(seed, "stsample/outcomes");
    stsample_generate_streams(n, rounds, &mut StreamRng::new(pair_seed, 0), &mut StreamRng::new(outcome_seed, 0))
}

pub fn stsample_generate_streams(
    n: usize,
    rounds: usize,
    pair_rng: &mut StreamRng,
    outcome_rng: &mut StreamRng,
) -> Result<StInstance> {
    check_spins(n, max_qubits())?;
    if n < 4 {
        return Err(precondition("STSample needs at least 4 spins"));
    }
    let mut state = SectorState::dimerization(n)?;
    let mut pairs = Vec::new();
    let mut bits = String::new();
    for _ in 0..rounds {
        let (a, b) = pair_rng.distinct_pair(n);
        let (a, b) = (a.min(b), a.max(b));
        let o = state.measure_pair(a, b, outcome_rng)?;
        pairs.push([a, b]);
        bits.push(bit(o));
    }
    let (survivors, steps, mut last) = detangle_sector(&state, pair_rng, outcome_rng, DEFAULT_MAX_MEAS)?;
    for s in &steps {
        pairs.push([s.pair.0, s.pair.1]);
        bits.push(bit(s.outcome));
    }
    let (a, b) = pair_rng.distinct_pair(last.n_qubits());
    let (a, b) = (a.min(b), a.max(b));
    let o = last.measure_pair(a, b, outcome_rng)?;
    pairs.push([survivors[a], survivors[b]]);
    bits.push(bit(o));
    Ok(StInstance { n, pairs, bits })
}

/// Post-selects every prefix outcome on a fresh dimerization. Returns the
/// state and the prefix probability.
pub fn stsample_replay_prefix(inst: &StInstance) -> Result<(StateVector, f64)> {
    inst.validate()?;
    let (pairs, bits) = inst.prefix();
    let mut state = dimerization(inst.n)?;
    let mut prob = 1.0;
    for (&[a, b], c) in pairs.iter().zip(bits.chars()) {
        let o = if c == '0' { PairOutcome::Singlet } else { PairOutcome::Triplet };
        let w = state.pair_weight(a, b, o)?;
        if w <= 0.0 {
            return Err(StpError::ZeroBranch { weight: w, tol: 0.0 });
        }
        state.project_pair(a, b, o)?;
        state.normalize()?;
        prob *= w;
    }
    Ok((state, prob))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StConditional {
    pub prefix_probability: f64,
    pub p_last_s: f64,
    pub p_last_t: f64,
    /// Conditional probability of the recorded last bit.
    pub p_recorded: f64,
}

/// Exact distribution of the last bit given all earlier ones.
pub fn stsample_conditional(inst: &StInstance) -> Result<StConditional> {
    let (state, prefix_probability) = stsample_replay_prefix(inst)?;
    let [a, b] = *inst.pairs.last().expect("validated");
    let p_last_s = state.pair_weight(a, b, PairOutcome::Singlet)?;
    let p_last_t = state.pair_weight(a, b, PairOutcome::Triplet)?;
    let p_recorded = if inst.bits.ends_with('0') { p_last_s } else { p_last_t };
    Ok(StConditional { prefix_probability, p_last_s, p_last_t, p_recorded })
}
