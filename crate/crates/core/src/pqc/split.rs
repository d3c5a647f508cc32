//! The splitting primitive: divide a spin-`S` set into parts of size
//! `m` and `n - m` with spins `S'` and `S''`.
//!
//! Let `e = S' + S'' - S` (an integer). After canonical form, `2S' - e`
//! symmetric qubits go to the first part and `2S'' - e` to the second.
//! Each part also receives a block `R_i` of `e` qubits in singlets: `e/2`
//! whole singlets each, plus the two halves of one shared singlet when `e`
//! is odd. `R_1 u R_2` has spin 0, and symmetrizing each `R_i` lifts both
//! parts by `e/2`. The rest of each part is filled with whole singlets.

use serde::{Deserialize, Serialize};

use super::spin::{canonical_form, SpinMode};
use crate::error::{precondition, Result, StpError};
use crate::qstate::PairOutcome;
use crate::qstate::StateVector;
use crate::rng::StreamRng;

/// Budgets and measurement mode shared by the tree protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub mode: SpinMode,
    /// Spin estimates on `M` qubits use `n_meas_factor * M^2` measurements.
    pub n_meas_factor: usize,
    /// Step four uses `step4_factor * |part|` t-measurements per part.
    pub step4_factor: usize,
    pub max_restarts: u64,
    pub max_pair_attempts: u64,
    pub max_b_steps: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            mode: SpinMode::Protocol,
            n_meas_factor: 20,
            step4_factor: 64,
            max_restarts: 10_000,
            max_pair_attempts: 10_000,
            max_b_steps: 100_000,
        }
    }
}

impl Caps {
    pub fn exact() -> Self {
        Self { mode: SpinMode::Exact, ..Self::default() }
    }
}

/// One symmetrization round of step three: exact `<S^2>` of `R_1` before
/// and after.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BStep {
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// The `m` qubits of spin `S'`.
    pub first: Vec<usize>,
    /// The remaining qubits, of spin `S''`.
    pub second: Vec<usize>,
    pub twice_s: usize,
    pub restarts: u64,
    pub b_steps: Vec<BStep>,
}

fn check_part(size: usize, twice: usize) -> Result<()> {
    if twice > size || !(size - twice).is_multiple_of(2) {
        return Err(precondition(format!("spin 2S={twice} is not admissible for {size} qubits")));
    }
    Ok(())
}

fn flatten(pairs: &[(usize, usize)]) -> impl Iterator<Item = usize> + '_ {
    pairs.iter().flat_map(|&(a, b)| [a, b])
}

pub fn split(
    state: &mut StateVector,
    subset: &[usize],
    m: usize,
    twice_s1: usize,
    twice_s2: usize,
    rng: &mut StreamRng,
    caps: &Caps,
) -> Result<SplitReport> {
    let n = subset.len();
    if m == 0 || m >= n {
        return Err(precondition(format!("split size {m} must lie in 1..{n}")));
    }
    check_part(m, twice_s1)?;
    check_part(n - m, twice_s2)?;
    let mut b_steps = Vec::new();
    for restart in 0..caps.max_restarts {
        // step one
        let cf = canonical_form(state, subset, rng, caps.mode, caps.n_meas_factor, caps.max_pair_attempts)?;
        let ts = cf.twice_s;
        if ts < twice_s1.abs_diff(twice_s2) || ts > twice_s1 + twice_s2 {
            return Err(precondition(format!("spin 2S={ts} cannot split into {twice_s1} and {twice_s2}")));
        }
        // step two
        let e = (twice_s1 + twice_s2 - ts) / 2;
        let (c1, c2) = cf.symmetric.split_at(twice_s1 - e);
        let mut pairs = cf.pairs.iter().copied();
        let mut take = |k: usize| -> Vec<(usize, usize)> { pairs.by_ref().take(k).collect() };
        let mut r1: Vec<usize> = flatten(&take(e / 2)).collect();
        let mut r2: Vec<usize> = flatten(&take(e / 2)).collect();
        if e % 2 == 1 {
            let (a, b) = take(1)[0];
            r1.push(a);
            r2.push(b);
        }
        let a1 = take((m - twice_s1) / 2);
        let a2 = take((n - m - twice_s2) / 2);
        debug_assert!(take(1).is_empty());

        // step three
        if e >= 2 {
            symmetrize_blocks(state, &r1, &r2, rng, caps, &mut b_steps)?;
        }

        // step four
        let p1: Vec<usize> = r1.iter().chain(c1).copied().collect();
        let p2: Vec<usize> = r2.iter().chain(c2).copied().collect();
        if all_triplet(state, &p1, caps.step4_factor * m, rng)?
            && all_triplet(state, &p2, caps.step4_factor * (n - m), rng)?
        {
            let first = flatten(&a1).chain(p1).collect();
            let second = flatten(&a2).chain(p2).collect();
            return Ok(SplitReport { first, second, twice_s: ts, restarts: restart, b_steps });
        }
    }
    Err(StpError::RetryExhausted { what: "split", attempts: caps.max_restarts })
}

/// Step three: alternate canonical form (A) with a cross measurement and a
/// re-measurement of the broken singlet (B) until both blocks are
/// totally symmetric.
fn symmetrize_blocks(
    state: &mut StateVector,
    r1: &[usize],
    r2: &[usize],
    rng: &mut StreamRng,
    caps: &Caps,
    log: &mut Vec<BStep>,
) -> Result<()> {
    let mut steps = 0u64;
    loop {
        let f1 = canonical_form(state, r1, rng, caps.mode, caps.n_meas_factor, caps.max_pair_attempts)?;
        let f2 = canonical_form(state, r2, rng, caps.mode, caps.n_meas_factor, caps.max_pair_attempts)?;
        if f1.pairs.is_empty() && f2.pairs.is_empty() {
            return Ok(());
        }
        steps += 1;
        if steps > caps.max_b_steps {
            return Err(StpError::RetryExhausted { what: "split step three", attempts: caps.max_b_steps });
        }
        // a misestimated spin can leave only one side with a singlet; redo A
        let (Some(&(q1, q1b)), Some(&(q2, _))) = (f1.pairs.first(), f2.pairs.first()) else {
            continue;
        };
        let before = state.total_spin_sq_expect(r1)?;
        let mut rounds = 0u64;
        loop {
            state.measure_pair(q1, q2, rng)?;
            if state.measure_pair(q1, q1b, rng)? == PairOutcome::Triplet {
                break;
            }
            rounds += 1;
            if rounds > caps.max_pair_attempts {
                return Err(StpError::RetryExhausted { what: "split step B", attempts: caps.max_pair_attempts });
            }
        }
        let after = state.total_spin_sq_expect(r1)?;
        log.push(BStep { before, after });
    }
}

/// `count` random-pair measurements on `part`; false at the first singlet.
fn all_triplet(state: &mut StateVector, part: &[usize], count: usize, rng: &mut StreamRng) -> Result<bool> {
    if part.len() < 2 {
        return Ok(true);
    }
    for _ in 0..count {
        let (a, b) = rng.distinct_pair(part.len());
        if state.measure_pair(part[a], part[b], rng)?.is_singlet() {
            return Ok(false);
        }
    }
    Ok(true)
}
