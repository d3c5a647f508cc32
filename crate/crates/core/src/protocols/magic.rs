use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::cnot::{apply_cnot, CnotMode};
use crate::angles::{circle_distance, magic_theta, reduce_multiple};
use crate::error::{Result, StpError};
use crate::qstate::{PairOutcome, Pauli, StateVector};
use crate::rng::StreamRng;

pub const DEFAULT_MAGIC_ATTEMPTS: u64 = 1000;
pub const DEFAULT_WALK_STEPS: u64 = 10_000_000;

/// `cos(a)|0> + sin(a)|1>`.
pub fn rotation_state(angle: f64) -> StateVector {
    StateVector::qubit(C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0))
}

/// A single-qubit resource `cos(angle)|0> + sin(angle)|1>`.
#[derive(Clone, Debug)]
pub struct AngleResource {
    pub angle: f64,
    /// The resource angle is `multiple * arctan(1/3)` mod 2π.
    pub multiple: i64,
    pub qubit: usize,
    pub step_count: u64,
    /// Preparation attempts used (for magic states).
    pub attempts: u64,
    pub state: StateVector,
}

/// `|0>|+>`, project onto the triplet, measure the second qubit in X and
/// keep the `+` branch, leaving `(3|0> + |1>)/sqrt 10` on the first.
pub fn prepare_magic(rng: &mut StreamRng, max_attempts: u64) -> Result<AngleResource> {
    for attempt in 1..=max_attempts {
        let mut s = StateVector::zeros(2)?;
        if s.measure_pauli1(0, Pauli::Z, rng)? < 0 {
            s.apply_pauli(0, Pauli::X)?;
        }
        if s.measure_pauli1(1, Pauli::X, rng)? < 0 {
            s.apply_pauli(1, Pauli::Z)?;
        }
        if s.measure_pair(0, 1, rng)? == PairOutcome::Singlet {
            continue;
        }
        // the - branch leaves |+>, which is useless here; start over
        if s.measure_pauli1(1, Pauli::X, rng)? < 0 {
            continue;
        }
        let (state, _) = s.factor_out(&[0])?;
        return Ok(AngleResource { angle: magic_theta(), multiple: 1, qubit: 0, step_count: 0, attempts: attempt, state });
    }
    Err(StpError::RetryExhausted { what: "prepare_magic", attempts: max_attempts })
}

/// Consumes `resource` to rotate qubit `q` by `exp(∓ i angle Y)`; returns
/// +1 when the angle was added and -1 when it was subtracted.
///
/// The resource is mapped to `|0> + e^{2i angle}|1>` by `XHS`; the usual
/// `CNOT`, `MZ` injection then applies `diag(1, e^{±2i angle})`, and the
/// frame change `SH` turns that Z rotation into a Y rotation.
pub fn inject_rotation(
    state: &mut StateVector,
    q: usize,
    resource: &AngleResource,
    rng: &mut StreamRng,
    mode: CnotMode,
) -> Result<i8> {
    let mut r = resource.state.clone();
    r.apply_s(0)?;
    r.apply_h(0)?;
    r.apply_pauli(0, Pauli::X)?;
    let n = state.n_qubits();
    let mut full = state.tensor(&r)?;
    full.apply_sdg(q)?;
    full.apply_h(q)?;
    apply_cnot(&mut full, q, n, mode, rng)?;
    let sign = full.measure_pauli1(n, Pauli::Z, rng)?;
    full.apply_h(q)?;
    full.apply_s(q)?;
    let keep: Vec<usize> = (0..n).collect();
    let (kept, _) = full.factor_out(&keep)?;
    *state = kept;
    Ok(sign)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkMode {
    /// Track only the multiple `m`, with fair coin signs.
    Bookkeeping,
    /// Prepare magic states and inject them into a real qubit.
    Simulated(CnotMode),
}

#[derive(Clone, Debug)]
pub struct WalkOptions {
    pub max_steps: u64,
    pub mode: WalkMode,
    pub record_trace: bool,
}

impl Default for WalkOptions {
    fn default() -> Self {
        Self { max_steps: DEFAULT_WALK_STEPS, mode: WalkMode::Bookkeeping, record_trace: false }
    }
}

#[derive(Clone, Debug)]
pub struct WalkResult {
    pub resource: AngleResource,
    /// Multiple after each step, when recorded.
    pub trace: Vec<i64>,
}

/// Injects `±arctan(1/3)` into `|0>` until the angle is within `eps` of
/// `target` (at least one step is always taken).
pub fn random_walk_to_angle(target: f64, eps: f64, rng: &mut StreamRng, opts: &WalkOptions) -> Result<WalkResult> {
    let theta = magic_theta();
    let mut m: i64 = 0;
    let mut trace = Vec::new();
    let mut qubit = match opts.mode {
        WalkMode::Simulated(_) => Some(StateVector::zeros(1)?),
        WalkMode::Bookkeeping => None,
    };
    let mut attempts = 0;
    for step in 1..=opts.max_steps {
        let sign = match (&mut qubit, opts.mode) {
            (Some(s), WalkMode::Simulated(cnot)) => {
                let res = prepare_magic(rng, DEFAULT_MAGIC_ATTEMPTS)?;
                attempts += res.attempts;
                inject_rotation(s, 0, &res, rng, cnot)?
            }
            _ => {
                if rng.coin() {
                    1
                } else {
                    -1
                }
            }
        };
        m += i64::from(sign);
        if opts.record_trace {
            trace.push(m);
        }
        let phi = reduce_multiple(theta, m);
        if circle_distance(phi, target) <= eps {
            let state = qubit.unwrap_or_else(|| rotation_state(phi));
            let resource = AngleResource { angle: phi, multiple: m, qubit: 0, step_count: step, attempts, state };
            return Ok(WalkResult { resource, trace });
        }
    }
    Err(StpError::RetryExhausted { what: "random_walk_to_angle", attempts: opts.max_steps })
}

/// Measures Y on `q` and fixes the `-` outcome with Z, leaving `|Y=+1>`.
pub fn prepare_y_plus(state: &mut StateVector, q: usize, rng: &mut StreamRng) -> Result<()> {
    if state.measure_pauli1(q, Pauli::Y, rng)? < 0 {
        state.apply_pauli(q, Pauli::Z)?;
    }
    Ok(())
}

/// `CNOT(q -> y)` then `MZ_y` applies `S` (+1) or `S^dagger` (-1) to `q`;
/// the latter is fixed with `Z`, so the net effect is always `S`. Returns
/// the raw measurement sign.
pub fn s_gate_injection(state: &mut StateVector, q: usize, y: usize, rng: &mut StreamRng, mode: CnotMode) -> Result<i8> {
    apply_cnot(state, q, y, mode, rng)?;
    let sign = state.measure_pauli1(y, Pauli::Z, rng)?;
    if sign < 0 {
        state.apply_pauli(q, Pauli::Z)?;
    }
    Ok(sign)
}

/// `CNOT(y -> q)` then `MX_y` applies `H S^dagger H` (+1) or `H S H` (-1)
/// to `q`; the former is fixed with `X`, so the net effect is `H S H`.
pub fn hsh_injection(state: &mut StateVector, q: usize, y: usize, rng: &mut StreamRng, mode: CnotMode) -> Result<i8> {
    apply_cnot(state, y, q, mode, rng)?;
    let sign = state.measure_pauli1(y, Pauli::X, rng)?;
    if sign > 0 {
        state.apply_pauli(q, Pauli::X)?;
    }
    Ok(sign)
}
