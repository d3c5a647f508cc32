//! Pools of qubits with `P_a P_b = +1` for every pair, used to turn the
//! hatted double-Pauli measurement into a single-qubit measurement.
//!
//! A finished pool is an incoherent mixture of "all +1" and "all -1"
//! eigenstates of `P`. We sample one branch at creation and keep it hidden,
//! which is observationally the same.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::hat_o_pp;
use crate::error::{precondition, Result, StpError};
use crate::qstate::{Pauli, StateVector};
use crate::rng::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StandardsVariant {
    /// Grow one qubit at a time: an unbiased walk in the pool size.
    Quadratic,
    /// Merge two-qubit helper sets: a walk with positive drift.
    Linear,
}

#[derive(Clone, Debug)]
pub struct StandardsPool {
    pub kind: Pauli,
    pub members: Vec<StateVector>,
    pub size_history: Vec<usize>,
    /// hatted double-Pauli operations spent building the pool
    pub operations: u64,
    flipped: bool,
}

/// Eigenstate of `p` with eigenvalue `-1` if `flipped`, else `+1`.
fn eigenstate(p: Pauli, flipped: bool) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if flipped { -1.0 } else { 1.0 };
    let (a0, a1) = match (p, flipped) {
        (Pauli::Z, false) => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        (Pauli::Z, true) => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (Pauli::X, _) => (C64::new(h, 0.0), C64::new(s * h, 0.0)),
        (Pauli::Y, _) => (C64::new(h, 0.0), C64::new(0.0, s * h)),
    };
    StateVector::qubit(a0, a1)
}

/// Pauli that anticommutes with `p`, used to fix a -1 result.
fn fixer(p: Pauli) -> Pauli {
    match p {
        Pauli::Z | Pauli::Y => Pauli::X,
        Pauli::X => Pauli::Z,
    }
}

fn expect_1q(s: &StateVector, p: Pauli) -> f64 {
    let plus = s.pauli1_prob(0, p, 1).unwrap_or(0.5);
    2.0 * plus - 1.0
}

impl StandardsPool {
    fn seeded(kind: Pauli, rng: &mut StreamRng) -> Self {
        // a fresh qubit from a singlet is maximally mixed; sample its branch
        let flipped = rng.coin();
        Self { kind, members: vec![eigenstate(kind, flipped)], size_history: vec![1], operations: 0, flipped }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The hidden branch: `true` when every member has `P = -1`. Protocols
    /// never read this; it exists for checking results against an oracle.
    pub fn orientation(&self) -> bool {
        self.flipped
    }

    /// Largest deviation of `<P_a P_b>` from +1 over member pairs.
    pub fn invariant_error(&self) -> f64 {
        let ev: Vec<f64> = self.members.iter().map(|m| expect_1q(m, self.kind)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..ev.len() {
            for j in i + 1..ev.len() {
                worst = worst.max((1.0 - ev[i] * ev[j]).abs());
            }
        }
        worst
    }

    /// Applies `X` to every member, the relabelling `|0> <-> |1>`.
    pub fn conjugate_by_x(&mut self) -> Result<()> {
        for m in &mut self.members {
            m.apply_pauli(0, Pauli::X)?;
        }
        if let Some(first) = self.members.first() {
            self.flipped = expect_1q(first, self.kind) < 0.0;
        }
        Ok(())
    }

    fn record(&mut self) {
        self.size_history.push(self.members.len());
    }

    /// One growth step: hatted measurement between the last member and a
    /// fresh qubit drawn from a new singlet. Returns whether it succeeded.
    fn grow_once(&mut self, rng: &mut StreamRng) -> Result<bool> {
        let r = self.members.pop().ok_or(StpError::EmptyPool)?;
        let fresh = StateVector::singlet_dimerization(1)?;
        // qubits: r = 0, q = 1, partner = 2
        let mut s = r.tensor(&fresh)?;
        let rep = hat_o_pp(&mut s, 1, 0, self.kind, rng)?;
        self.operations += 1;
        if rep.succeeded {
            if rep.primary() < 0 {
                s.apply_pauli(1, fixer(self.kind))?;
            }
            let (r_new, _) = s.factor_out(&[0])?;
            let (q_new, _) = s.factor_out(&[1])?;
            self.members.push(r_new);
            self.members.push(q_new);
        }
        Ok(rep.succeeded)
    }

    fn reseed_if_empty(&mut self, rng: &mut StreamRng) {
        if self.members.is_empty() {
            let seed = Self::seeded(self.kind, rng);
            self.members = seed.members;
            self.flipped = seed.flipped;
        }
    }
}

/// Builds a pool of `target_size` standards. Pools that die out are
/// re-seeded from a fresh qubit.
pub fn build_standards(
    kind: Pauli,
    target_size: usize,
    rng: &mut StreamRng,
    variant: StandardsVariant,
    max_operations: u64,
) -> Result<StandardsPool> {
    if target_size == 0 {
        return Err(precondition("standards pool needs target_size >= 1"));
    }
    let mut pool = StandardsPool::seeded(kind, rng);
    while pool.len() < target_size {
        if pool.operations >= max_operations {
            return Err(StpError::RetryExhausted { what: "build_standards", attempts: max_operations });
        }
        match variant {
            StandardsVariant::Quadratic => {
                pool.grow_once(rng)?;
            }
            StandardsVariant::Linear => merge_helper(&mut pool, rng)?,
        }
        pool.reseed_if_empty(rng);
        pool.record();
    }
    Ok(pool)
}

/// Builds a two-member helper set `T` by single-qubit growth, then joins it
/// to the pool with one hatted measurement between a member of each.
fn merge_helper(pool: &mut StandardsPool, rng: &mut StreamRng) -> Result<()> {
    let mut t = StandardsPool::seeded(pool.kind, rng);
    while t.len() < 2 {
        t.grow_once(rng)?;
        t.reseed_if_empty(rng);
    }
    pool.operations += t.operations;
    let s = pool.members.pop().ok_or(StpError::EmptyPool)?;
    let t0 = t.members.pop().expect("helper has two members");
    let mut pair = s.tensor(&t0)?;
    let rep = hat_o_pp(&mut pair, 1, 0, pool.kind, rng)?;
    pool.operations += 1;
    if !rep.succeeded {
        return Ok(());
    }
    let (s_new, _) = pair.factor_out(&[0])?;
    let (t_new, _) = pair.factor_out(&[1])?;
    pool.members.push(s_new);
    t.members.push(t_new);
    if rep.primary() < 0 {
        for m in &mut t.members {
            m.apply_pauli(0, fixer(pool.kind))?;
        }
    }
    pool.members.extend(t.members);
    Ok(())
}

/// Measures `P` on qubit `q` with a hatted double-Pauli measurement against
/// one standard. On success the standard goes back to the pool; otherwise it
/// stays in `state` as one extra, spent qubit (Bell-paired with `q`). The
/// result is `P_q` times the pool's hidden sign.
pub fn measure_via_standard(
    state: &mut StateVector,
    q: usize,
    kind: Pauli,
    pool: &mut StandardsPool,
    rng: &mut StreamRng,
) -> Result<i8> {
    if kind != pool.kind {
        return Err(precondition("standard kind does not match the requested measurement"));
    }
    let r = pool.members.pop().ok_or(StpError::EmptyPool)?;
    let n = state.n_qubits();
    let mut full = state.tensor(&r)?;
    let rep = hat_o_pp(&mut full, q, n, kind, rng)?;
    if rep.succeeded {
        let keep: Vec<usize> = (0..n).collect();
        let (kept, r_back) = full.factor_out(&keep)?;
        pool.members.push(r_back);
        *state = kept;
    } else {
        *state = full;
    }
    pool.record();
    Ok(rep.primary())
}
