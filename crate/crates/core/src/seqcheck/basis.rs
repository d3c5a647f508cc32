use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result, StpError};
use crate::qstate::StateVector;

/// Orthonormal basis of `spin_0(2N)` inside the `2^{2N}` ambient space.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub n_spins: usize,
    pub vectors: Vec<StateVector>,
    pub tag: String,
}

#[derive(Serialize, Deserialize)]
struct BasisDump {
    n_spins: usize,
    tag: String,
    vectors: Vec<Vec<f64>>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Basis `b'_j = sum_i r[i][j] b_i` for an orthogonal `r`.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<SubspaceBasis> {
        let d = self.dim();
        if r.nrows() != d || r.ncols() != d {
            return Err(precondition("rotation has the wrong size"));
        }
        let mut vectors = Vec::with_capacity(d);
        for j in 0..d {
            let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1 << self.n_spins];
            for i in 0..d {
                for (a, b) in amps.iter_mut().zip(self.vectors[i].amps()) {
                    *a += b * r[(i, j)];
                }
            }
            vectors.push(StateVector::from_amps(amps)?);
        }
        Ok(SubspaceBasis { n_spins: self.n_spins, vectors, tag: format!("{}-rotated", self.tag) })
    }

    pub fn to_json(&self) -> Result<String> {
        let dump = BasisDump {
            n_spins: self.n_spins,
            tag: self.tag.clone(),
            vectors: self.vectors.iter().map(|v| v.amps().iter().map(|a| a.re).collect()).collect(),
        };
        Ok(serde_json::to_string(&dump)?)
    }
}

/// Non-crossing perfect matchings of `points`, each as sorted pairs,
/// sorted lexicographically.
pub fn noncrossing_matchings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
    let mut out = matchings_rec(points);
    for m in &mut out {
        m.sort_unstable();
    }
    out.sort();
    out
}

fn matchings_rec(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if points.is_empty() {
        return vec![Vec::new()];
    }
    let first = points[0];
    let mut out = Vec::new();
    for k in (1..points.len()).step_by(2) {
        let inside = matchings_rec(&points[1..k]);
        let outside = matchings_rec(&points[k + 1..]);
        for i in &inside {
            for o in &outside {
                let mut m = vec![(first, points[k])];
                m.extend(i);
                m.extend(o);
                out.push(m);
            }
        }
    }
    out
}

/// Gram-Schmidt over the non-crossing singlet dimerizations.
pub fn spin0_basis(n_spins: usize) -> Result<SubspaceBasis> {
    if n_spins == 0 || !n_spins.is_multiple_of(2) {
        return Err(StpError::Invalid(format!("spin_0 needs a positive even spin count, got {n_spins}")));
    }
    let points: Vec<usize> = (0..n_spins).collect();
    let mut vectors: Vec<StateVector> = Vec::new();
    for m in noncrossing_matchings(&points) {
        let v = StateVector::singlet_pairs(n_spins, &m)?;
        let mut amps: Vec<_> = v.amps().to_vec();
        for b in &vectors {
            let c = b.inner(&v);
            for (a, x) in amps.iter_mut().zip(b.amps()) {
                *a -= x * c;
            }
        }
        let mut w = StateVector::from_amps(amps)?;
        if w.norm_sq() < 1e-20 {
            return Err(StpError::Numerical("dimerization states are linearly dependent".into()));
        }
        w.normalize()?;
        vectors.push(w);
    }
    Ok(SubspaceBasis { n_spins, vectors, tag: "noncrossing-gram-schmidt".into() })
}

/// Matrix of the qubit permutation `q -> perm[q]` on the basis.
pub fn permutation_rep(basis: &SubspaceBasis, perm: &[usize]) -> Result<DMatrix<f64>> {
    let d = basis.dim();
    let mut r = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut v = basis.vectors[j].clone();
        v.permute_qubits(perm)?;
        for i in 0..d {
            r[(i, j)] = basis.vectors[i].inner(&v).re;
        }
    }
    Ok(r)
}
