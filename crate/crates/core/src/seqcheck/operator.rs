use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::basis::SubspaceBasis;
use super::{ProjectorSequence, Step};
use crate::error::{precondition, Result, StpError};
use crate::qstate::StateVector;

#[derive(Clone, Debug)]
pub struct SequenceOperator {
    pub matrix: DMatrix<f64>,
    pub det_normalized: bool,
    /// Factor divided out by the normalization (1 otherwise).
    pub scale: f64,
}

impl SequenceOperator {
    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }
}

pub(crate) fn apply_steps(state: &mut StateVector, steps: &[Step]) -> Result<()> {
    for step in steps {
        for &(a, b, o) in step {
            state.project_pair(a, b, o)?;
        }
    }
    Ok(())
}

/// Basis vector `j` tensored with the ancilla dimerization.
pub(crate) fn embedded(seq: &ProjectorSequence, basis: &SubspaceBasis) -> Result<Vec<StateVector>> {
    if basis.n_spins != seq.n_comp {
        return Err(precondition("basis and sequence disagree on the spin count"));
    }
    let anc = ancilla_dimer(seq)?;
    basis.vectors.iter().map(|b| b.tensor(&anc)).collect()
}

fn ancilla_dimer(seq: &ProjectorSequence) -> Result<StateVector> {
    if seq.n_anc == 0 {
        return StateVector::from_amps(vec![C64::new(1.0, 0.0)]);
    }
    StateVector::singlet_dimerization(seq.n_anc / 2)
}

/// `<anc dimer| w>` as a vector on the computational spins.
fn contract_ancillas(seq: &ProjectorSequence, w: &StateVector) -> Result<StateVector> {
    let anc = ancilla_dimer(seq)?;
    let nc = seq.n_comp;
    let mut out = vec![C64::new(0.0, 0.0); 1 << nc];
    for (y, ay) in anc.amps().iter().enumerate() {
        if ay.norm_sqr() == 0.0 {
            continue;
        }
        for (x, o) in out.iter_mut().enumerate() {
            *o += ay.conj() * w.amp(x | y << nc);
        }
    }
    StateVector::from_amps(out)
}

/// The operator `<anc| P_k ... P_1 |anc>` on `spin_0(2N)` in `basis`.
pub fn sequence_to_operator(
    seq: &ProjectorSequence,
    basis: &SubspaceBasis,
    det_normalize: bool,
) -> Result<SequenceOperator> {
    seq.validate()?;
    let steps = seq.steps();
    let d = basis.dim();
    let mut m = DMatrix::zeros(d, d);
    for (j, mut v) in embedded(seq, basis)?.into_iter().enumerate() {
        apply_steps(&mut v, &steps)?;
        let w = contract_ancillas(seq, &v)?;
        for i in 0..d {
            m[(i, j)] = basis.vectors[i].inner(&w).re;
        }
    }
    let mut scale = 1.0;
    if det_normalize {
        let det: f64 = m.determinant();
        if det.abs() < 1e-14 {
            return Err(StpError::Numerical(format!("cannot normalize a singular operator (det {det:e})")));
        }
        scale = det.abs().powf(1.0 / d as f64);
        m /= scale;
    }
    Ok(SequenceOperator { matrix: m, det_normalized: det_normalize, scale })
}

/// Smallest `k <= max_order` with `|op^k - I|_F <= tol`.
pub fn order_of(op: &DMatrix<f64>, tol: f64, max_order: usize) -> Option<usize> {
    let id = DMatrix::<f64>::identity(op.nrows(), op.ncols());
    let mut p = op.clone();
    for k in 1..=max_order {
        if (&p - &id).norm() <= tol {
            return Some(k);
        }
        p = &p * op;
    }
    None
}
