use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::basis::{permutation_rep, SubspaceBasis};
use super::operator::{apply_steps, embedded};
use super::{ProjectorSequence, Step};
use crate::error::{precondition, Result, StpError};
use crate::qstate::StateVector;
use crate::rng::StreamRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquiangularPair {
    pub equiangular: bool,
    pub alpha: Option<f64>,
    pub residual: f64,
    /// `alpha` for `(1 - Q, P)`, which is `sqrt(1 - alpha^2)` when positive.
    pub complement_alpha: Option<f64>,
}

/// Tests `PQP = alpha^2 P` with `alpha^2 = tr(PQP) / tr(P)`.
pub fn is_equiangular_pair(q: &DMatrix<f64>, p: &DMatrix<f64>, tol: f64) -> EquiangularPair {
    let pqp = p * q * p;
    let tr_p = p.trace();
    let a2 = if tr_p > 0.0 { pqp.trace() / tr_p } else { 0.0 };
    let residual = (&pqp - p * a2).norm();
    let fits = residual <= tol && tr_p > 0.0;
    let alpha = (fits && a2 > tol).then(|| a2.sqrt());
    let complement_alpha = (fits && 1.0 - a2 > tol).then(|| (1.0 - a2).sqrt());
    EquiangularPair { equiangular: alpha.is_some(), alpha, residual, complement_alpha }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub equiangular: bool,
    /// `alpha_{i,i+1}` for each consecutive pair of steps, `None` where it fails.
    pub alphas: Vec<Option<f64>>,
    pub residuals: Vec<f64>,
    pub first_failure: Option<usize>,
}

fn gram(a: &[StateVector], b: &[StateVector]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i].inner(&b[j]).re)
}

fn apply_all(cols: &[StateVector], step: &Step) -> Result<Vec<StateVector>> {
    cols.iter()
        .map(|c| {
            let mut v = c.clone();
            apply_steps(&mut v, std::slice::from_ref(step))?;
            Ok(v)
        })
        .collect()
}

/// Checks `P_i P_{i+1} P_i ... P_1 = alpha^2 P_i ... P_1` on the embedded
/// computational space, for every consecutive pair of steps.
pub fn is_equiangular_sequence(seq: &ProjectorSequence, basis: &SubspaceBasis, tol: f64) -> Result<SequenceReport> {
    let steps = seq.steps();
    let mut b = embedded(seq, basis)?;
    let mut alphas = Vec::new();
    let mut residuals = Vec::new();
    let mut first_failure = None;
    for i in 0..steps.len().saturating_sub(1) {
        b = apply_all(&b, &steps[i])?;
        let c = apply_all(&apply_all(&b, &steps[i + 1])?, &steps[i])?;
        let bb = gram(&b, &b).trace();
        let (a2, resid) = if bb > 0.0 {
            let a2 = gram(&b, &c).trace() / bb;
            let mut r = 0.0;
            for (x, y) in b.iter().zip(&c) {
                r += x.amps().iter().zip(y.amps()).map(|(u, v)| (v - u * a2).norm_sqr()).sum::<f64>();
            }
            (a2, (r / bb).sqrt())
        } else {
            (0.0, f64::INFINITY)
        };
        let ok = resid <= tol && a2 > tol;
        alphas.push(ok.then(|| a2.sqrt()));
        residuals.push(resid);
        if !ok && first_failure.is_none() {
            first_failure = Some(i + 1);
        }
    }
    Ok(SequenceReport { equiangular: first_failure.is_none(), alphas, residuals, first_failure })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub no_leakage: bool,
    pub labels: Vec<String>,
    /// Singular values of each step restricted to the image so far.
    pub singular_values: Vec<Vec<f64>>,
    /// 1-based index of the first leaking step.
    pub first_leak: Option<usize>,
    pub first_leak_label: Option<String>,
}

/// Orthonormal-coordinates map `W` with `B W` orthonormal.
fn whitening(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let top = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-12 * top.max(1e-300)).collect();
    DMatrix::from_fn(g.nrows(), keep.len(), |i, j| {
        let k = keep[j];
        eig.eigenvectors[(i, k)] / eig.eigenvalues[k].sqrt()
    })
}

/// Each step must act on the image of the previous ones as a nonzero
/// multiple of an isometry: all singular values equal within `tol`
/// (relative).
pub fn is_no_leakage(seq: &ProjectorSequence, basis: &SubspaceBasis, tol: f64) -> Result<LeakageReport> {
    let steps = seq.labelled_steps();
    let mut b = embedded(seq, basis)?;
    let d = b.len();
    let mut labels = Vec::new();
    let mut singular_values = Vec::new();
    let mut first_leak = None;
    for (k, (label, step)) in steps.iter().enumerate() {
        let pb = apply_all(&b, step)?;
        let w = whitening(&gram(&b, &b));
        let mut sv: Vec<f64> = if w.ncols() == 0 {
            Vec::new()
        } else {
            let h = w.transpose() * gram(&b, &pb) * &w;
            let h = (&h + h.transpose()) * 0.5;
            SymmetricEigen::new(h).eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect()
        };
        // lost dimensions count as zero singular values
        sv.resize(d, 0.0);
        sv.sort_by(|a, b| b.total_cmp(a));
        let (hi, lo) = (sv[0], sv[d - 1]);
        let ok = hi > 1e-12 && hi - lo <= tol * hi;
        if !ok && first_leak.is_none() {
            first_leak = Some(k + 1);
        }
        labels.push(label.clone());
        singular_values.push(sv);
        b = pb;
    }
    let first_leak_label = first_leak.map(|k| labels[k - 1].clone());
    Ok(LeakageReport { no_leakage: first_leak.is_none(), labels, singular_values, first_leak, first_leak_label })
}

fn measure(state: &mut DVector<f64>, proj: &DMatrix<f64>, rng: &mut StreamRng) -> Result<bool> {
    let total = state.norm_squared();
    let inside = proj * &*state;
    let p = inside.norm_squared() / total;
    let hit = rng.uniform() < p;
    let next = if hit { inside } else { &*state - inside };
    let n = next.norm();
    if n == 0.0 {
        return Err(StpError::Numerical("measurement branch vanished".into()));
    }
    *state = next / n;
    Ok(hit)
}

/// Forces the `Q` outcome on a state in `P` by alternating `{Q, 1-Q}` and
/// `{P, 1-P}` measurements. Returns the number of `Q` measurements.
pub fn recovery_force(
    state: &DVector<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
    rng: &mut StreamRng,
    max_rounds: u64,
) -> Result<u64> {
    if state.norm() == 0.0 {
        return Err(precondition("zero state"));
    }
    let mut s = state.clone();
    for round in 1..=max_rounds {
        if measure(&mut s, q, rng)? {
            return Ok(round);
        }
        measure(&mut s, p, rng)?;
    }
    Err(StpError::RetryExhausted { what: "recovery_force", attempts: max_rounds })
}

/// Probability that [`recovery_force`] needs exactly `k` rounds when
/// `PQP = alpha^2 P`: `alpha^2` at once, then a geometric law with
/// per-round success `2 alpha^2 (1 - alpha^2)`.
pub fn recovery_round_law(alpha_sq: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k == 1 {
        return alpha_sq;
    }
    let s = 2.0 * alpha_sq * (1.0 - alpha_sq);
    (1.0 - alpha_sq) * (1.0 - s).powi((k - 2) as i32) * s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedPermutation {
    /// Qubit `q` goes to `perm[q]`.
    pub perm: Vec<usize>,
    pub sign: i8,
}

const BRUTE_FORCE_MAX_SPINS: usize = 8;

pub(crate) fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    permute_rec(&mut cur, 0, &mut out);
    out.sort();
    out
}

fn permute_rec(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permute_rec(cur, k + 1, out);
        cur.swap(k, i);
    }
}

/// Compares `op`, rescaled to Frobenius norm `sqrt(d)`, with `+-R(pi)` for
/// every qubit permutation `pi` of the computational spins.
pub fn signed_permutation_test(
    op: &DMatrix<f64>,
    basis: &SubspaceBasis,
    tol: f64,
) -> Result<Option<SignedPermutation>> {
    if basis.n_spins > BRUTE_FORCE_MAX_SPINS {
        return Err(precondition(format!("brute-force search is limited to {BRUTE_FORCE_MAX_SPINS} spins")));
    }
    let d = basis.dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(precondition("operator does not match the basis"));
    }
    let norm = op.norm();
    if norm == 0.0 {
        return Ok(None);
    }
    let scaled = op * ((d as f64).sqrt() / norm);
    for perm in all_permutations(basis.n_spins) {
        let r = permutation_rep(basis, &perm)?;
        for sign in [1i8, -1] {
            if (&scaled - &r * f64::from(sign)).norm() <= tol * (d as f64).sqrt() {
                return Ok(Some(SignedPermutation { perm, sign }));
            }
        }
    }
    Ok(None)
}
