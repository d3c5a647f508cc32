use serde::{Deserialize, Serialize};

use super::{bell_measure, o_pp, o_pp_forced, BellState, PauliFrame};
use crate::error::{precondition, Result, StpError};
use crate::qstate::{Pauli, StateVector, Transcript};
use crate::rng::StreamRng;

pub const DEFAULT_MAX_ATTEMPTS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnotCircuitReport {
    pub succeeded: bool,
    /// Eigenvalues of `Z_c Z_a`, `X_a X_t` and `Z_a` (absent after a failure).
    pub m: Vec<i8>,
    pub corrections: Vec<(usize, Pauli)>,
    pub transcript: Transcript,
}

fn new_steps(state: &StateVector, from: usize) -> Transcript {
    Transcript { steps: state.transcript().steps[from..].to_vec() }
}

/// CNOT from `src` to `tgt` through `ancilla`: prepare `|+>`, measure
/// `Z_c Z_a`, then `X_a X_t`, then `Z_a`, then correct. The double-Pauli
/// measurements use `O_ZZ`/`O_XX`; without `forced` the circuit fails
/// whenever either one also measures the secondary product, and the state
/// is then spoiled. With `forced` both take the succeeding branch.
pub fn cnot_measurement_circuit(
    state: &mut StateVector,
    src: usize,
    tgt: usize,
    ancilla: usize,
    rng: &mut StreamRng,
    forced: bool,
) -> Result<CnotCircuitReport> {
    if src == tgt || src == ancilla || tgt == ancilla {
        return Err(precondition("CNOT circuit needs three distinct qubits"));
    }
    let start = state.transcript().len();
    if state.measure_pauli1(ancilla, Pauli::X, rng)? < 0 {
        state.apply_pauli(ancilla, Pauli::Z)?;
    }
    let fail = |state: &StateVector| CnotCircuitReport {
        succeeded: false,
        m: vec![],
        corrections: vec![],
        transcript: new_steps(state, start),
    };
    let m1 = if forced {
        o_pp_forced(state, src, ancilla, Pauli::Z)?;
        1
    } else {
        let r = o_pp(state, src, ancilla, Pauli::Z, rng)?;
        if !r.succeeded {
            return Ok(fail(state));
        }
        r.primary()
    };
    let m2 = if forced {
        o_pp_forced(state, ancilla, tgt, Pauli::X)?;
        1
    } else {
        let r = o_pp(state, ancilla, tgt, Pauli::X, rng)?;
        if !r.succeeded {
            return Ok(fail(state));
        }
        r.primary()
    };
    let m3 = state.measure_pauli1(ancilla, Pauli::Z, rng)?;
    let mut corrections = Vec::new();
    if (m1 < 0) != (m3 < 0) {
        state.apply_pauli(tgt, Pauli::X)?;
        corrections.push((tgt, Pauli::X));
    }
    if m2 < 0 {
        state.apply_pauli(src, Pauli::Z)?;
        corrections.push((src, Pauli::Z));
    }
    Ok(CnotCircuitReport { succeeded: true, m: vec![m1, m2, m3], corrections, transcript: new_steps(state, start) })
}

/// The four-qubit resource `CNOT_{E->F}` on singlets `(C,E)`, `(D,F)`, with
/// qubit order `C, D, E, F`.
#[derive(Clone, Debug)]
pub struct PsiCnot {
    pub state: StateVector,
    pub attempts: u64,
}

pub fn psi_cnot_oracle() -> StateVector {
    let mut s = StateVector::singlet_pairs(4, &[(0, 2), (1, 3)]).expect("4 qubits");
    s.apply_cnot_oracle(2, 3).expect("valid qubits");
    s
}

/// Offline preparation of [`PsiCnot`], repeating the measurement circuit on
/// fresh qubits until both double-Pauli measurements succeed.
pub fn prepare_psi_cnot(rng: &mut StreamRng, max_attempts: u64, forced: bool) -> Result<PsiCnot> {
    for attempt in 1..=max_attempts {
        let mut s = StateVector::singlet_pairs(5, &[(0, 2), (1, 3)])?;
        let r = cnot_measurement_circuit(&mut s, 2, 3, 4, rng, forced)?;
        if r.succeeded {
            let (state, _anc) = s.factor_out(&[0, 1, 2, 3])?;
            return Ok(PsiCnot { state, attempts: attempt });
        }
    }
    Err(StpError::RetryExhausted { what: "prepare_psi_cnot", attempts: max_attempts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnotTeleportReport {
    pub bell: [BellState; 2],
    /// Corrections applied to the new source and target.
    pub corrections: [PauliFrame; 2],
    pub transcript: Transcript,
}

/// CNOT on `(src, tgt)` by Bell-measuring each into the `C`/`D` legs of a
/// [`PsiCnot`] resource. The outputs land on `E`/`F`, are corrected, and
/// are swapped back into `src`/`tgt`; the spent resource qubits are dropped.
pub fn cnot_via_teleport(
    state: &mut StateVector,
    src: usize,
    tgt: usize,
    psi_cnot: &StateVector,
    rng: &mut StreamRng,
) -> Result<CnotTeleportReport> {
    if src == tgt || src >= state.n_qubits() || tgt >= state.n_qubits() {
        return Err(precondition("bad CNOT qubits"));
    }
    if psi_cnot.n_qubits() != 4 {
        return Err(precondition("psi_cnot must have 4 qubits"));
    }
    let n = state.n_qubits();
    let start = state.transcript().len();
    let mut full = state.tensor(psi_cnot)?;
    let (c, d, e, f) = (n, n + 1, n + 2, n + 3);
    let k1 = bell_measure(&mut full, src, c, rng)?;
    let k2 = bell_measure(&mut full, tgt, d, rng)?;
    // The legs (C,E), (D,F) are singlets, so E carries sigma_m sigma_k1 on the
    // source and F likewise; push both through the CNOT.
    let m = BellState::PsiMinus.frame();
    let pe = k1.frame().compose(m);
    let pf = k2.frame().compose(m);
    let fe = PauliFrame { x: pe.x, z: pe.z ^ pf.z };
    let ff = PauliFrame { x: pf.x ^ pe.x, z: pf.z };
    fe.apply(&mut full, e)?;
    ff.apply(&mut full, f)?;
    full.apply_swap(src, e)?;
    full.apply_swap(tgt, f)?;
    let keep: Vec<usize> = (0..n).collect();
    let (kept, _spent) = full.factor_out(&keep)?;
    *state = kept;
    Ok(CnotTeleportReport { bell: [k1, k2], corrections: [fe, ff], transcript: new_steps(state, start) })
}

/// How CNOTs inside larger protocols are realized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CnotMode {
    /// Exact gate, to isolate errors from other stages.
    #[default]
    Oracle,
    /// Teleportation through a freshly prepared resource.
    Protocol,
}

pub fn apply_cnot(state: &mut StateVector, ctrl: usize, tgt: usize, mode: CnotMode, rng: &mut StreamRng) -> Result<()> {
    match mode {
        CnotMode::Oracle => state.apply_cnot_oracle(ctrl, tgt),
        CnotMode::Protocol => {
            let psi = prepare_psi_cnot(rng, DEFAULT_MAX_ATTEMPTS, false)?;
            cnot_via_teleport(state, ctrl, tgt, &psi.state, rng).map(|_| ())
        }
    }
}
