//! Spin-`S` qudits as blocks of `2S` qubits in a totally symmetric state.

use super::spin::{measure_total_spin, SpinEstimate};
use super::split::{split, Caps};
use crate::error::{precondition, Result};
use crate::qstate::StateVector;
use crate::rng::StreamRng;

/// The qudit `|S, S_z = S>` as `2S` qubits all in `|0>`.
pub fn encode_qudit(twice_s: usize) -> Result<StateVector> {
    if twice_s == 0 {
        return Err(precondition("a qudit block needs spin > 0"));
    }
    StateVector::zeros(twice_s)
}

fn check_blocks(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    if a.is_empty() || b.is_empty() || a.iter().any(|q| b.contains(q)) {
        return Err(precondition("qudit blocks must be nonempty and disjoint"));
    }
    Ok(a.iter().chain(b).copied().collect())
}

/// Total spin of two blocks together. Two single-qubit blocks reduce to
/// one s/t measurement.
pub fn qudit_pair_spin_measure(
    state: &mut StateVector,
    a: &[usize],
    b: &[usize],
    rng: &mut StreamRng,
    caps: &Caps,
) -> Result<SpinEstimate> {
    let all = check_blocks(a, b)?;
    if all.len() == 2 {
        let o = state.measure_pair(all[0], all[1], rng)?;
        let twice_s = if o.is_singlet() { 0 } else { 2 };
        return Ok(SpinEstimate { twice_s, n_meas: 1, triplet_frequency: f64::from(u8::from(!o.is_singlet())) });
    }
    let m = all.len();
    measure_total_spin(state, &all, caps.mode, Some(caps.n_meas_factor * m * m), rng)
}

/// Splits the union back into totally symmetric blocks on the original
/// qubit positions of `a` and `b`.
pub fn qudit_pair_resplit(
    state: &mut StateVector,
    a: &[usize],
    b: &[usize],
    rng: &mut StreamRng,
    caps: &Caps,
) -> Result<()> {
    let all = check_blocks(a, b)?;
    let rep = split(state, &all, a.len(), a.len(), b.len(), rng, caps)?;
    let mut perm: Vec<usize> = (0..state.n_qubits()).collect();
    for (&from, &to) in rep.first.iter().chain(&rep.second).zip(a.iter().chain(b)) {
        perm[from] = to;
    }
    state.permute_qubits(&perm)
}
