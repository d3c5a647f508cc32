//! Constructions built from s/t measurements and single-qubit operations:
//! Bell measurement, the `O_PP` double-Pauli measurements, teleportation,
//! CNOT, magic states and injection, and Pauli-measurement standards.

mod cnot;
mod demo;
mod magic;
mod standards;

pub use cnot::{
    apply_cnot, cnot_measurement_circuit, cnot_via_teleport, prepare_psi_cnot, psi_cnot_oracle, CnotCircuitReport,
    CnotMode, CnotTeleportReport, PsiCnot,
};
pub use demo::{demo_bell, demo_cnot, demo_magic, demo_standards, DemoSummary};
pub use magic::{
    hsh_injection, inject_rotation, prepare_magic, prepare_y_plus, random_walk_to_angle, rotation_state,
    s_gate_injection, AngleResource, WalkMode, WalkOptions, WalkResult,
};
pub use standards::{build_standards, measure_via_standard, StandardsPool, StandardsVariant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qstate::{PairOutcome, Pauli, StateVector};
use crate::rng::StreamRng;

/// The four Bell states, numbered as the measurement reports them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    /// `(|01> - |10>)/sqrt 2`
    PsiMinus,
    /// `(|01> + |10>)/sqrt 2`
    PsiPlus,
    /// `(|00> + |11>)/sqrt 2`
    PhiPlus,
    /// `(|00> - |11>)/sqrt 2`
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::PsiMinus, BellState::PsiPlus, BellState::PhiPlus, BellState::PhiMinus];

    pub fn index(self) -> u8 {
        match self {
            BellState::PsiMinus => 1,
            BellState::PsiPlus => 2,
            BellState::PhiPlus => 3,
            BellState::PhiMinus => 4,
        }
    }

    /// The Pauli `sigma` with `|B> ∝ (sigma (x) I) |Phi+>`, the Pauli acting
    /// on the first qubit of the pair.
    pub fn frame(self) -> PauliFrame {
        match self {
            BellState::PsiMinus => PauliFrame { x: true, z: true },
            BellState::PsiPlus => PauliFrame { x: true, z: false },
            BellState::PhiPlus => PauliFrame { x: false, z: false },
            BellState::PhiMinus => PauliFrame { x: false, z: true },
        }
    }

    /// Eigenvalue of `P_A P_B`.
    pub fn value(self, p: Pauli) -> i8 {
        use BellState::*;
        match (self, p) {
            (PsiMinus, _) => -1,
            (PsiPlus, Pauli::Z) => -1,
            (PsiPlus, _) => 1,
            (PhiPlus, Pauli::Y) => -1,
            (PhiPlus, _) => 1,
            (PhiMinus, Pauli::X) => -1,
            (PhiMinus, _) => 1,
        }
    }

    /// Two-qubit state with `first` as qubit 0 and `second` as qubit 1.
    pub fn state(self) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| num_complex::Complex64::new(x, 0.0);
        let z = c(0.0);
        let amps = match self {
            BellState::PsiMinus => vec![z, c(h), c(-h), z],
            BellState::PsiPlus => vec![z, c(h), c(h), z],
            BellState::PhiPlus => vec![c(h), z, z, c(h)],
            BellState::PhiMinus => vec![c(h), z, z, c(-h)],
        };
        StateVector::from_amps(amps).expect("four amplitudes")
    }
}

/// A Pauli up to phase, `X^x Z^z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliFrame {
    pub x: bool,
    pub z: bool,
}

impl PauliFrame {
    pub const I: PauliFrame = PauliFrame { x: false, z: false };

    pub fn compose(self, other: PauliFrame) -> PauliFrame {
        PauliFrame { x: self.x ^ other.x, z: self.z ^ other.z }
    }

    pub fn is_identity(self) -> bool {
        !self.x && !self.z
    }

    pub fn apply(self, state: &mut StateVector, q: usize) -> Result<()> {
        if self.z {
            state.apply_pauli(q, Pauli::Z)?;
        }
        if self.x {
            state.apply_pauli(q, Pauli::X)?;
        }
        Ok(())
    }

    pub fn label(self) -> &'static str {
        match (self.x, self.z) {
            (false, false) => "I",
            (true, false) => "X",
            (false, true) => "Z",
            (true, true) => "Y",
        }
    }
}

/// Applies `P` on qubit `q` using only X and Z for `Y` (equal up to phase).
fn apply_xz(state: &mut StateVector, q: usize, p: Pauli) -> Result<()> {
    match p {
        Pauli::X => state.apply_pauli(q, Pauli::X),
        Pauli::Z => state.apply_pauli(q, Pauli::Z),
        Pauli::Y => {
            state.apply_pauli(q, Pauli::Z)?;
            state.apply_pauli(q, Pauli::X)
        }
    }
}

/// Four-outcome Bell measurement from up to three s/t measurements. The
/// applied Paulis are undone, so the pair is left in the reported state.
pub fn bell_measure(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<BellState> {
    if state.measure_pair(a, b, rng)?.is_singlet() {
        return Ok(BellState::PsiMinus);
    }
    state.apply_pauli(a, Pauli::Z)?;
    if state.measure_pair(a, b, rng)?.is_singlet() {
        state.apply_pauli(a, Pauli::Z)?;
        return Ok(BellState::PsiPlus);
    }
    state.apply_pauli(a, Pauli::X)?;
    let third = state.measure_pair(a, b, rng)?;
    state.apply_pauli(a, Pauli::X)?;
    state.apply_pauli(a, Pauli::Z)?;
    Ok(if third.is_singlet() { BellState::PhiPlus } else { BellState::PhiMinus })
}

/// What an `O_PP` (or hatted) operation learned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoQubitOpReport {
    /// `(P, value of P_A P_B)`, the intended product first.
    pub measured: Vec<(Pauli, i8)>,
    pub succeeded: bool,
}

impl TwoQubitOpReport {
    pub fn value(&self, p: Pauli) -> Option<i8> {
        self.measured.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    pub fn primary(&self) -> i8 {
        self.measured[0].1
    }
}

/// The product measured alongside `P_A P_B` on failure.
pub fn secondary(p: Pauli) -> Pauli {
    match p {
        Pauli::Z => Pauli::X,
        Pauli::X | Pauli::Y => Pauli::Z,
    }
}

/// Bell state reached on the `t, s` path of `O_PP`.
fn second_singlet_bell(p: Pauli) -> BellState {
    match p {
        Pauli::Z => BellState::PsiPlus,
        Pauli::X => BellState::PhiMinus,
        Pauli::Y => BellState::PhiPlus,
    }
}

fn failure_report(p: Pauli, bell: BellState) -> TwoQubitOpReport {
    let s = secondary(p);
    TwoQubitOpReport { measured: vec![(p, bell.value(p)), (s, bell.value(s))], succeeded: false }
}

/// Measures `P_A P_B`; when it equals -1 the secondary product is learned too.
pub fn o_pp(state: &mut StateVector, a: usize, b: usize, p: Pauli, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    if state.measure_pair(a, b, rng)?.is_singlet() {
        return Ok(failure_report(p, BellState::PsiMinus));
    }
    apply_xz(state, a, p)?;
    let second = state.measure_pair(a, b, rng)?;
    apply_xz(state, a, p)?;
    if second.is_singlet() {
        Ok(failure_report(p, second_singlet_bell(p)))
    } else {
        Ok(TwoQubitOpReport { measured: vec![(p, 1)], succeeded: true })
    }
}

/// The `t, t` branch of [`o_pp`] taken by post-selection. Returns its weight.
pub fn o_pp_forced(state: &mut StateVector, a: usize, b: usize, p: Pauli) -> Result<f64> {
    let w1 = state.postselect_pair(a, b, PairOutcome::Triplet)?;
    apply_xz(state, a, p)?;
    let w2 = state.postselect_pair(a, b, PairOutcome::Triplet)?;
    apply_xz(state, a, p)?;
    Ok(w1 * w2)
}

pub fn o_zz(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    o_pp(state, a, b, Pauli::Z, rng)
}

pub fn o_xx(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    o_pp(state, a, b, Pauli::X, rng)
}

pub fn o_yy(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    o_pp(state, a, b, Pauli::Y, rng)
}

/// Pauli on A that anticommutes with `P`, used to flip the sign of `P_A P_B`.
fn flipper(p: Pauli) -> Pauli {
    match p {
        Pauli::Z | Pauli::Y => Pauli::X,
        Pauli::X => Pauli::Z,
    }
}

/// On a coin flip, runs `O_PP` conjugated by a Pauli on A that flips
/// `P_A P_B`. Success then happens with probability 1/2 for any input.
pub fn hat_o_pp(state: &mut StateVector, a: usize, b: usize, p: Pauli, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    if rng.coin() {
        return o_pp(state, a, b, p, rng);
    }
    let c = flipper(p);
    state.apply_pauli(a, c)?;
    let mut r = o_pp(state, a, b, p, rng)?;
    state.apply_pauli(a, c)?;
    for (q, v) in r.measured.iter_mut() {
        if *q != c {
            *v = -*v;
        }
    }
    Ok(r)
}

pub fn hat_o_zz(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    hat_o_pp(state, a, b, Pauli::Z, rng)
}

pub fn hat_o_xx(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    hat_o_pp(state, a, b, Pauli::X, rng)
}

pub fn hat_o_yy(state: &mut StateVector, a: usize, b: usize, rng: &mut StreamRng) -> Result<TwoQubitOpReport> {
    hat_o_pp(state, a, b, Pauli::Y, rng)
}

/// Weight of the pair `(b, c)` on the given Bell state.
pub fn bell_overlap(state: &StateVector, b: usize, c: usize, bell: BellState) -> Result<f64> {
    let mut probe = state.clone();
    // (sigma (x) I)Phi+ -> Phi+ -> Psi-
    bell.frame().apply(&mut probe, b)?;
    BellState::PsiMinus.frame().apply(&mut probe, b)?;
    probe.pair_weight(b, c, PairOutcome::Singlet)
}

/// Teleports qubit `a` onto `c` through the Bell pair `(b, c)` and applies
/// the Pauli correction, which is returned.
pub fn teleport(
    state: &mut StateVector,
    a: usize,
    b: usize,
    c: usize,
    resource: BellState,
    rng: &mut StreamRng,
) -> Result<PauliFrame> {
    debug_assert!(
        bell_overlap(state, b, c, resource).map(|w| w > 1.0 - 1e-9).unwrap_or(false),
        "teleport resource is not the declared Bell state"
    );
    let k = bell_measure(state, a, b, rng)?;
    let corr = k.frame().compose(resource.frame());
    corr.apply(state, c)?;
    Ok(corr)
}
