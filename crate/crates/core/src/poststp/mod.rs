//! Post-selected s/t computation: teleported Heisenberg factors, the
//! epsilon recursion, composition plans and imaginary-time evolution.
//!
//! Throughout, `1 + eps S_a.S_b` has eigenvalue `1 + eps/4` on the triplet
//! and `1 - 3 eps/4` on the singlet of the pair.

mod bound;
mod plan;
mod trotter;

#[cfg(test)]
mod tests;

pub use bound::{random_forced_transcript, verify_amplitude_bound, BoundCheck};
pub use plan::{
    approx_epsilon_plan, eps_from_log_ratio, execute_plan, log_ratio, EpsEntry, EpsilonPlan, EpsilonSchedule,
    ResourceFactory,
};
pub use trotter::{
    dominant_eigenvector, exact_imaginary_evolve, heisenberg_matrix, trotter_imaginary_evolve, Evolution,
    EvolveReport, HeisenbergSchedule, ScheduleStep, TrotterMode,
};

use crate::error::{precondition, Result};
use crate::qstate::{PairOutcome, StateVector, Transcript};
use crate::rng::StreamRng;

/// Resource qubits in [`resource_state`] order.
pub const C: usize = 0;
pub const D: usize = 1;
pub const E: usize = 2;
pub const F: usize = 3;

fn double_singlet() -> Result<StateVector> {
    StateVector::singlet_pairs(4, &[(C, E), (D, F)])
}

/// Singlets on `(C,E)` and `(D,F)`, then `1 + eps S_E.S_F`, normalized.
pub fn resource_state(eps: f64) -> Result<StateVector> {
    let mut s = double_singlet()?;
    s.apply_heisenberg_raw(E, F, eps)?;
    s.normalize()?;
    s.clear_history();
    Ok(s)
}

/// `psi_resource(4/3)`: triplet post-selection on `(E,F)`.
pub fn resource_by_projection() -> Result<StateVector> {
    let mut s = double_singlet()?;
    s.postselect_pair(E, F, PairOutcome::Triplet)?;
    Ok(s)
}

/// `psi_resource(-4/3)`: triplet post-selection on the crossed pair `(C,F)`.
pub fn negative_resource_by_projection() -> Result<StateVector> {
    let mut s = double_singlet()?;
    s.postselect_pair(C, F, PairOutcome::Triplet)?;
    Ok(s)
}

fn steps_since(state: &StateVector, start: usize) -> Transcript {
    Transcript { steps: state.transcript().steps[start..].to_vec() }
}

/// Applies `1 + eps S_a.S_b` by teleporting through `resource_state(eps)`.
pub fn apply_heis_via_resource(
    state: &mut StateVector,
    a: usize,
    b: usize,
    eps: f64,
    rng: &mut StreamRng,
    forced: bool,
) -> Result<Transcript> {
    let res = resource_state(eps)?;
    apply_heis_with(state, a, b, &res, rng, forced)
}

/// Teleportation through an arbitrary prepared resource. The resource is
/// appended as qubits `n..n+4`; `(a,C)` and `(b,D)` are post-selected
/// (or measured when `forced` is false) onto the singlet, then `E,F` take
/// over the positions of `a,b` and the four spent qubits are dropped.
///
/// An unforced attempt that sees a triplet leaves the state on `n + 4`
/// qubits; the transcript shows which outcome failed.
pub fn apply_heis_with(
    state: &mut StateVector,
    a: usize,
    b: usize,
    resource: &StateVector,
    rng: &mut StreamRng,
    forced: bool,
) -> Result<Transcript> {
    let n = state.n_qubits();
    if a >= n || b >= n || a == b {
        return Err(precondition(format!("bad target pair ({a},{b}) on {n} qubits")));
    }
    if resource.n_qubits() != 4 {
        return Err(precondition("resource must have four qubits"));
    }
    let mut full = state.tensor(resource)?;
    let start = full.transcript().len();
    let (c, d, e, f) = (n + C, n + D, n + E, n + F);
    for (x, y) in [(a, c), (b, d)] {
        if forced {
            full.postselect_pair(x, y, PairOutcome::Singlet)?;
        } else if full.measure_pair(x, y, rng)? == PairOutcome::Triplet {
            let t = steps_since(&full, start);
            *state = full;
            return Ok(t);
        }
    }
    let t = steps_since(&full, start);
    let mut perm: Vec<usize> = (0..n + 4).collect();
    perm.swap(a, e);
    perm.swap(b, f);
    full.permute_qubits(&perm)?;
    let keep: Vec<usize> = (0..n).collect();
    let (kept, _) = full.factor_out(&keep)?;
    *state = kept;
    Ok(t)
}

/// One level of the recursion with two copies of `resource_state(eps)`.
/// The net operation on `(a,b)` is `1 - (eps^2/4) S_a.S_b`, since the
/// singlet on `(c,d)` has `<S_c^x S_d^y> = -delta_xy / 4`.
pub fn reduce_epsilon_once(
    state: &mut StateVector,
    a: usize,
    b: usize,
    eps: f64,
    rng: &mut StreamRng,
) -> Result<Transcript> {
    let res = resource_state(eps)?;
    reduce_epsilon_with(state, a, b, &res, &res, rng)
}

/// Fresh singlet `(c,d)`, then `(1 + e1 S_a.S_c)(1 + e2 S_b.S_d)` through
/// the two resources, then singlet post-selection on `(c,d)`. The result is
/// `1 - (e1 e2 / 4) S_a.S_b`.
pub fn reduce_epsilon_with(
    state: &mut StateVector,
    a: usize,
    b: usize,
    res_a: &StateVector,
    res_b: &StateVector,
    rng: &mut StreamRng,
) -> Result<Transcript> {
    let n = state.n_qubits();
    if a >= n || b >= n || a == b {
        return Err(precondition(format!("bad target pair ({a},{b}) on {n} qubits")));
    }
    let pair = StateVector::singlet_pairs(2, &[(0, 1)])?;
    let mut full = state.tensor(&pair)?;
    let start = full.transcript().len();
    let (c, d) = (n, n + 1);
    apply_heis_with(&mut full, a, c, res_a, rng, true)?;
    apply_heis_with(&mut full, b, d, res_b, rng, true)?;
    full.postselect_pair(c, d, PairOutcome::Singlet)?;
    let t = steps_since(&full, start);
    let keep: Vec<usize> = (0..n).collect();
    let (kept, _) = full.factor_out(&keep)?;
    *state = kept;
    Ok(t)
}
