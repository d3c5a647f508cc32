//! Imaginary-time evolution `d psi/dt = H psi`, `H = sum J_ij S_i.S_j`,
//! evolved as `exp(+tH)` with renormalization. Antiferromagnetic ground
//! states therefore need `J < 0`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::plan::{approx_epsilon_plan, execute_plan, EpsilonPlan, ResourceFactory};
use crate::error::{precondition, Result};
use crate::qstate::StateVector;
use crate::rng::StreamRng;

pub const DEFAULT_J_BOUND: f64 = 100.0;
/// Largest register the dense reference handles.
pub const ORACLE_MAX_QUBITS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    /// Duration of this piece in imaginary time.
    pub dt: f64,
    #[serde(rename = "J")]
    pub couplings: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeisenbergSchedule {
    pub steps: Vec<ScheduleStep>,
}

impl HeisenbergSchedule {
    pub fn constant(couplings: Vec<(usize, usize, f64)>, duration: f64) -> Self {
        Self { steps: vec![ScheduleStep { dt: duration, couplings }] }
    }

    /// Nearest-neighbour ring `0-1-...-(n-1)-0` with uniform `j`.
    pub fn ring(n: usize, j: f64, duration: f64) -> Self {
        let couplings = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n), j)).collect();
        Self::constant(couplings, duration)
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().map(|s| s.dt).sum()
    }

    pub fn validate(&self, n: usize, j_bound: f64) -> Result<()> {
        for (k, s) in self.steps.iter().enumerate() {
            if !(s.dt > 0.0) {
                return Err(precondition(format!("step {k}: duration must be positive")));
            }
            for &(i, j, v) in &s.couplings {
                if i >= n || j >= n || i == j {
                    return Err(precondition(format!("step {k}: bad coupling pair ({i},{j})")));
                }
                if !v.is_finite() || v.abs() > j_bound {
                    return Err(precondition(format!("step {k}: |J| = {} exceeds bound {j_bound}", v.abs())));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrotterMode {
    /// `1 + h J S.S` applied exactly.
    Direct,
    /// The composed plan factor for each `h J`, applied directly.
    Planned { delta: f64 },
    /// The same plan executed by resource teleportation.
    Protocol { delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub steps: usize,
    pub final_norm_product: f64,
    pub fidelity_vs_oracle: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: StateVector,
    pub report: EvolveReport,
}

/// First-order Trotter evolution. Each schedule piece is cut into
/// `ceil(duration/dt)` equal substeps.
pub fn trotter_imaginary_evolve(
    state: &StateVector,
    schedule: &HeisenbergSchedule,
    dt: f64,
    mode: TrotterMode,
    rng: &mut StreamRng,
) -> Result<Evolution> {
    if !(dt > 0.0) {
        return Err(precondition("dt must be positive"));
    }
    let n = state.n_qubits();
    schedule.validate(n, DEFAULT_J_BOUND)?;
    let mut psi = state.clone();
    psi.normalize()?;
    psi.clear_history();
    let mut plans: BTreeMap<u64, EpsilonPlan> = BTreeMap::new();
    let mut factory = ResourceFactory::new();
    let mut norm_product = 1.0;
    let mut steps = 0;
    for piece in &schedule.steps {
        let subs = (piece.dt / dt).ceil().max(1.0) as usize;
        let h = piece.dt / subs as f64;
        for &(_, _, v) in &piece.couplings {
            if (h * v).abs() > 1.0 {
                return Err(precondition(format!("|dt J| = {} exceeds 1", (h * v).abs())));
            }
        }
        for _ in 0..subs {
            for &(i, j, v) in &piece.couplings {
                let eps = h * v;
                match mode {
                    TrotterMode::Direct => norm_product *= psi.apply_heisenberg(i, j, eps)?,
                    TrotterMode::Planned { delta } | TrotterMode::Protocol { delta } => {
                        let plan = match plans.get(&eps.to_bits()) {
                            Some(p) => p.clone(),
                            None => {
                                let p = approx_epsilon_plan(eps, delta)?;
                                plans.insert(eps.to_bits(), p.clone());
                                p
                            }
                        };
                        let fac = matches!(mode, TrotterMode::Protocol { .. }).then_some(&mut factory);
                        let before = psi.branch_weight();
                        execute_plan(&mut psi, i, j, &plan, fac, rng)?;
                        norm_product *= psi.branch_weight() / before;
                    }
                }
            }
            steps += 1;
        }
    }
    let fidelity_vs_oracle = if n <= ORACLE_MAX_QUBITS {
        Some(psi.fidelity(&exact_imaginary_evolve(state, schedule)?))
    } else {
        None
    };
    Ok(Evolution { state: psi, report: EvolveReport { steps, final_norm_product: norm_product, fidelity_vs_oracle } })
}

/// Dense `H = sum J (SWAP/2 - 1/4)` in the computational basis.
pub fn heisenberg_matrix(n: usize, couplings: &[(usize, usize, f64)]) -> Result<DMatrix<f64>> {
    if n > ORACLE_MAX_QUBITS + 2 {
        return Err(precondition(format!("dense Hamiltonian limited to {} qubits", ORACLE_MAX_QUBITS + 2)));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for &(i, j, v) in couplings {
        if i >= n || j >= n || i == j {
            return Err(precondition(format!("bad coupling pair ({i},{j})")));
        }
        for idx in 0..dim {
            let (bi, bj) = (idx >> i & 1, idx >> j & 1);
            h[(idx, idx)] -= v / 4.0;
            let sw = if bi == bj { idx } else { idx ^ (1 << i) ^ (1 << j) };
            h[(sw, idx)] += v / 2.0;
        }
    }
    Ok(h)
}

fn split_re_im(s: &StateVector) -> (DVector<f64>, DVector<f64>) {
    let re = DVector::from_iterator(s.dim(), s.amps().iter().map(|a| a.re));
    let im = DVector::from_iterator(s.dim(), s.amps().iter().map(|a| a.im));
    (re, im)
}

/// Normalized `prod exp(duration H_k) psi` from eigendecompositions.
pub fn exact_imaginary_evolve(state: &StateVector, schedule: &HeisenbergSchedule) -> Result<StateVector> {
    let n = state.n_qubits();
    let (mut re, mut im) = split_re_im(state);
    for piece in &schedule.steps {
        let eig = SymmetricEigen::new(heisenberg_matrix(n, &piece.couplings)?);
        let top = eig.eigenvalues.max();
        let growth = eig.eigenvalues.map(|l| ((l - top) * piece.dt).exp());
        let vt = eig.eigenvectors.transpose();
        re = &eig.eigenvectors * (vt.clone() * &re).component_mul(&growth);
        im = &eig.eigenvectors * (vt * &im).component_mul(&growth);
    }
    let mut out = StateVector::from_amps(re.iter().zip(im.iter()).map(|(&r, &i)| C64::new(r, i)).collect())?;
    out.normalize()?;
    Ok(out)
}

/// Largest eigenvalue of `H` and its eigenvector, the fixed point of
/// `exp(+tH)` for generic inputs.
pub fn dominant_eigenvector(n: usize, couplings: &[(usize, usize, f64)]) -> Result<(f64, StateVector)> {
    let eig = SymmetricEigen::new(heisenberg_matrix(n, couplings)?);
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k);
    let mut s = StateVector::from_amps(v.iter().map(|&x| C64::new(x, 0.0)).collect())?;
    s.normalize()?;
    Ok((eig.eigenvalues[k], s))
}
