//! Dense state vectors and the s/t measurement primitives.
//!
//! Qubit `q` is bit `q` of the basis-state index (bit 0 least significant).
//! Kets are written `|q_{n-1} ... q_1 q_0>`. The singlet on `(i, j)` with
//! `i < j` is `(|0_j 1_i> - |1_j 0_i>)/sqrt 2`, which for one pair gives
//! amplitudes `[0, 1/sqrt 2, -1/sqrt 2, 0]`.

mod transcript;

pub use transcript::{OpTag, Outcome, Step, Transcript};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};

use crate::error::{precondition, Result, StpError};
use crate::rng::StreamRng;

/// Default threshold below which a forced branch counts as empty.
pub const ZERO_TOL: f64 = 1e-12;
/// Both branches below this means the state itself is broken.
pub const CORRUPT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Visits the amplitude groups `(x_hi x_lo) = 00, 01, 10, 11` of a qubit pair.
#[inline(always)]
fn for_pair_groups(amps: &[C64], i: usize, j: usize, mut f: impl FnMut(C64, C64, C64, C64)) {
    let (r, h) = (1usize << i.min(j), 1usize << i.max(j));
    for block in amps.chunks_exact(2 * h) {
        let (l, u) = block.split_at(h);
        for (lc, uc) in l.chunks_exact(2 * r).zip(u.chunks_exact(2 * r)) {
            let (l0, l1) = lc.split_at(r);
            let (u0, u1) = uc.split_at(r);
            for (((a, b), c), d) in l0.iter().zip(l1).zip(u0).zip(u1) {
                f(*a, *b, *c, *d);
            }
        }
    }
}

#[inline(always)]
fn for_pair_groups_mut(amps: &mut [C64], i: usize, j: usize, mut f: impl FnMut(&mut C64, &mut C64, &mut C64, &mut C64)) {
    let (r, h) = (1usize << i.min(j), 1usize << i.max(j));
    for block in amps.chunks_exact_mut(2 * h) {
        let (l, u) = block.split_at_mut(h);
        for (lc, uc) in l.chunks_exact_mut(2 * r).zip(u.chunks_exact_mut(2 * r)) {
            let (l0, l1) = lc.split_at_mut(r);
            let (u0, u1) = uc.split_at_mut(r);
            for (((a, b), c), d) in l0.iter_mut().zip(l1).zip(u0).zip(u1) {
                f(a, b, c, d);
            }
        }
    }
}

/// Qubit cap, `STPLAB_MAX_QUBITS` overrides the default of 24.
pub fn max_qubits() -> usize {
    std::env::var("STPLAB_MAX_QUBITS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

fn check_capacity(n: usize) -> Result<()> {
    let max = max_qubits();
    if n > max {
        Err(StpError::Capacity { requested: n, max })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairOutcome {
    Singlet,
    Triplet,
}

impl PairOutcome {
    pub fn is_singlet(self) -> bool {
        self == PairOutcome::Singlet
    }

    pub fn other(self) -> Self {
        match self {
            PairOutcome::Singlet => PairOutcome::Triplet,
            PairOutcome::Triplet => PairOutcome::Singlet,
        }
    }

    fn tag(self) -> OpTag {
        match self {
            PairOutcome::Singlet => OpTag::S,
            PairOutcome::Triplet => OpTag::T,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PairOutcome::Singlet => 's',
            PairOutcome::Triplet => 't',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn tag(self) -> OpTag {
        match self {
            Pauli::X => OpTag::Px,
            Pauli::Y => OpTag::Py,
            Pauli::Z => OpTag::Pz,
        }
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

pub type Mat2 = [[C64; 2]; 2];

pub fn hadamard() -> Mat2 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn phase_s() -> Mat2 {
    [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, 1.0)]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            c[r][k] = a[r][0] * b[0][k] + a[r][1] * b[1][k];
        }
    }
    c
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Haar-random element of SU(2) from a uniformly random unit quaternion.
pub fn haar_su2(rng: &mut StreamRng) -> Mat2 {
    let v: [f64; 4] = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = C64::new(v[0] / n, v[1] / n);
    let b = C64::new(v[2] / n, v[3] / n);
    [[a, -b.conj()], [b, a.conj()]]
}

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
    norm_sq: f64,
    branch_weight: f64,
    transcript: Transcript,
}

fn sum_norm(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

impl StateVector {
    /// |0...0> on `n` qubits.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_capacity(n)?;
        if index >= 1usize << n {
            return Err(precondition(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self::from_parts(n, amps))
    }

    fn from_parts(n: usize, amps: Vec<C64>) -> Self {
        let norm_sq = sum_norm(&amps);
        Self { n, amps, norm_sq, branch_weight: 1.0, transcript: Transcript::new() }
    }

    /// Wraps raw amplitudes; the length must be a power of two. Not normalized.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(StpError::Invalid(format!("amplitude count {len} is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        check_capacity(n)?;
        Ok(Self::from_parts(n, amps))
    }

    pub fn singlet_dimerization(n_pairs: usize) -> Result<Self> {
        if n_pairs == 0 {
            return Err(precondition("singlet_dimerization needs at least one pair"));
        }
        check_capacity(2 * n_pairs)?;
        let pairs: Vec<(usize, usize)> = (0..n_pairs).map(|k| (2 * k, 2 * k + 1)).collect();
        Self::singlet_pairs(2 * n_pairs, &pairs)
    }

    /// Product of singlets on the listed disjoint pairs; uncovered qubits are |0>.
    pub fn singlet_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        check_capacity(n)?;
        let mut used = vec![false; n];
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b || used[a] || used[b] {
                return Err(precondition(format!("bad singlet pair ({a},{b}) on {n} qubits")));
            }
            used[a] = true;
            used[b] = true;
        }
        // Enumerate the 2^k nonzero terms directly.
        let k = pairs.len();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        let amp = FRAC_1_SQRT_2.powi(k as i32);
        for mask in 0..(1usize << k) {
            let mut idx = 0usize;
            let mut sign = 1.0;
            for (t, &(a, b)) in pairs.iter().enumerate() {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                // bit set => |0_lo 1_hi>, which carries the minus sign
                if mask >> t & 1 == 1 {
                    idx |= 1 << hi;
                    sign = -sign;
                } else {
                    idx |= 1 << lo;
                }
            }
            amps[idx] = C64::new(sign * amp, 0.0);
        }
        Ok(Self::from_parts(n, amps))
    }

    /// Single-qubit state from two amplitudes.
    pub fn qubit(a0: C64, a1: C64) -> Self {
        Self::from_parts(1, vec![a0, a1])
    }

    /// Normalized Gaussian-random state.
    pub fn random(n: usize, rng: &mut StreamRng) -> Result<Self> {
        check_capacity(n)?;
        let amps: Vec<C64> = (0..1usize << n).map(|_| C64::new(rng.normal(), rng.normal())).collect();
        let mut s = Self::from_parts(n, amps);
        s.normalize()?;
        Ok(s)
    }

    /// `self` on the low qubits, `other` on the following ones.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        let n = self.n + other.n;
        check_capacity(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        let mut s = Self::from_parts(n, amps);
        s.branch_weight = self.branch_weight * other.branch_weight;
        s.transcript = self.transcript.clone();
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn set_amps(&mut self, amps: Vec<C64>) -> Result<()> {
        if amps.len() != self.amps.len() {
            return Err(precondition("amplitude count mismatch"));
        }
        self.amps = amps;
        self.norm_sq = sum_norm(&self.amps);
        Ok(())
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    /// Squared norm of the stored vector.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Product of the weights of every branch taken so far.
    pub fn branch_weight(&self) -> f64 {
        self.branch_weight
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Transcript {
        std::mem::take(&mut self.transcript)
    }

    pub fn clear_history(&mut self) {
        self.transcript = Transcript::new();
        self.branch_weight = 1.0;
    }

    pub fn recompute_norm(&mut self) -> f64 {
        self.norm_sq = sum_norm(&self.amps);
        self.norm_sq
    }

    pub fn normalize(&mut self) -> Result<()> {
        let ns = self.recompute_norm();
        if ns <= CORRUPT_TOL {
            return Err(StpError::ZeroBranch { weight: ns, tol: CORRUPT_TOL });
        }
        let f = 1.0 / ns.sqrt();
        for a in &mut self.amps {
            *a *= f;
        }
        self.norm_sq = 1.0;
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            Err(precondition(format!("qubit {q} out of range for {} qubits", self.n)))
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_qubit(i)?;
        self.check_qubit(j)?;
        if i == j {
            return Err(precondition(format!("pair operation on identical qubits ({i},{i})")));
        }
        Ok(())
    }

    // ---- pair operators -------------------------------------------------

    /// Applies `c0 I + c1 SWAP_ij` in place, then scales by `f`.
    fn apply_id_swap_scaled(&mut self, i: usize, j: usize, c0: f64, c1: f64, f: f64) {
        let (c0, c1, diag) = (c0 * f, c1 * f, (c0 + c1) * f);
        for_pair_groups_mut(&mut self.amps, i, j, |a00, a01, a10, a11| {
            let (x, y) = (*a01, *a10);
            *a00 *= diag;
            *a11 *= diag;
            *a01 = x * c0 + y * c1;
            *a10 = y * c0 + x * c1;
        });
    }

    fn apply_id_swap(&mut self, i: usize, j: usize, c0: f64, c1: f64) {
        self.apply_id_swap_scaled(i, j, c0, c1, 1.0);
    }

    fn projector_coeffs(outcome: PairOutcome) -> (f64, f64) {
        match outcome {
            PairOutcome::Singlet => (0.5, -0.5),
            PairOutcome::Triplet => (0.5, 0.5),
        }
    }

    /// Applies `Pi_s` or `Pi_t` without renormalizing. Returns
    /// `|Pi psi|^2 / |psi|^2` (0 for a zero input).
    pub fn project_pair(&mut self, i: usize, j: usize, outcome: PairOutcome) -> Result<f64> {
        self.check_pair(i, j)?;
        let before = self.norm_sq;
        let (c0, c1) = Self::projector_coeffs(outcome);
        self.apply_id_swap(i, j, c0, c1);
        let after = self.recompute_norm();
        let w = if before > 0.0 { after / before } else { 0.0 };
        self.branch_weight *= w;
        Ok(w)
    }

    /// Born probability of `outcome` on `(i, j)` without touching the state.
    pub fn pair_weight(&self, i: usize, j: usize, outcome: PairOutcome) -> Result<f64> {
        self.check_pair(i, j)?;
        let mut sym = 0.0;
        let mut anti = 0.0;
        for_pair_groups(&self.amps, i, j, |a00, x, y, a11| {
            sym += a00.norm_sqr() + a11.norm_sqr() + (x + y).norm_sqr() * 0.5;
            anti += (x - y).norm_sqr() * 0.5;
        });
        let total = sym + anti;
        if total <= 0.0 {
            return Ok(0.0);
        }
        Ok(match outcome {
            PairOutcome::Triplet => sym / total,
            PairOutcome::Singlet => anti / total,
        })
    }

    /// Born-rule s/t measurement with renormalization.
    pub fn measure_pair(&mut self, i: usize, j: usize, rng: &mut StreamRng) -> Result<PairOutcome> {
        let ws = self.pair_weight(i, j, PairOutcome::Singlet)?;
        let wt = 1.0 - ws;
        if self.norm_sq < CORRUPT_TOL || (ws < CORRUPT_TOL && wt < CORRUPT_TOL) {
            return Err(StpError::Numerical(format!(
                "both branches of pair ({i},{j}) vanish (norm {:e})",
                self.norm_sq
            )));
        }
        let outcome = if rng.uniform() < ws { PairOutcome::Singlet } else { PairOutcome::Triplet };
        let w = if outcome.is_singlet() { ws } else { wt };
        self.commit_pair(i, j, outcome, w, false)?;
        Ok(outcome)
    }

    fn commit_pair(&mut self, i: usize, j: usize, o: PairOutcome, w: f64, forced: bool) -> Result<()> {
        let (c0, c1) = Self::projector_coeffs(o);
        let expected = w * self.norm_sq;
        if expected > CORRUPT_TOL {
            // project and rescale in one pass; normalize() only touches up rounding
            self.apply_id_swap_scaled(i, j, c0, c1, 1.0 / expected.sqrt());
            let ns = self.recompute_norm();
            if (ns - 1.0).abs() > 1e-10 {
                self.normalize()?;
            }
        } else {
            self.apply_id_swap(i, j, c0, c1);
            self.normalize()?;
        }
        self.branch_weight *= w;
        self.transcript.push(o.tag(), [i, j], o.into(), w, forced);
        Ok(())
    }

    pub fn postselect_pair(&mut self, i: usize, j: usize, outcome: PairOutcome) -> Result<f64> {
        self.postselect_pair_tol(i, j, outcome, ZERO_TOL)
    }

    pub fn postselect_pair_tol(&mut self, i: usize, j: usize, outcome: PairOutcome, tol: f64) -> Result<f64> {
        let w = self.pair_weight(i, j, outcome)?;
        if w <= tol {
            return Err(StpError::ZeroBranch { weight: w, tol });
        }
        self.commit_pair(i, j, outcome, w, true)?;
        Ok(w)
    }

    /// `1 + eps S_i.S_j = (1 - eps/4) I + (eps/2) SWAP`, then renormalize.
    /// Returns the squared norm ratio.
    pub fn apply_heisenberg(&mut self, i: usize, j: usize, eps: f64) -> Result<f64> {
        self.check_pair(i, j)?;
        let c0 = 1.0 - eps / 4.0;
        let c1 = eps / 2.0;
        if c0.abs() + c1.abs() == 0.0 {
            return Err(precondition("Heisenberg operator is zero"));
        }
        let before = self.norm_sq;
        self.apply_id_swap(i, j, c0, c1);
        let after = self.recompute_norm();
        if after < CORRUPT_TOL {
            return Err(StpError::ZeroBranch { weight: after, tol: CORRUPT_TOL });
        }
        let ratio = after / before;
        self.normalize()?;
        self.branch_weight *= ratio;
        self.transcript.push(OpTag::Heis, [i, j], Outcome::Plus, ratio, false);
        Ok(ratio)
    }

    /// Same operator as [`apply_heisenberg`](Self::apply_heisenberg) but
    /// without renormalizing or recording.
    pub fn apply_heisenberg_raw(&mut self, i: usize, j: usize, eps: f64) -> Result<()> {
        self.check_pair(i, j)?;
        self.apply_id_swap(i, j, 1.0 - eps / 4.0, eps / 2.0);
        self.recompute_norm();
        Ok(())
    }

    pub fn apply_swap(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        let (bi, bj) = (1usize << i, 1usize << j);
        for idx in 0..self.amps.len() {
            if idx & bi == 0 && idx & bj != 0 {
                self.amps.swap(idx, idx ^ bi ^ bj);
            }
        }
        Ok(())
    }

    // ---- single-qubit gates --------------------------------------------

    pub fn apply_1q(&mut self, q: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(q)?;
        let b = 1usize << q;
        for idx in 0..self.amps.len() {
            if idx & b == 0 {
                let (x, y) = (self.amps[idx], self.amps[idx | b]);
                self.amps[idx] = m[0][0] * x + m[0][1] * y;
                self.amps[idx | b] = m[1][0] * x + m[1][1] * y;
            }
        }
        self.recompute_norm();
        Ok(())
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) -> Result<()> {
        self.check_qubit(q)?;
        let b = 1usize << q;
        let i = C64::new(0.0, 1.0);
        for idx in 0..self.amps.len() {
            if idx & b == 0 {
                let (x, y) = (self.amps[idx], self.amps[idx | b]);
                let (nx, ny) = match p {
                    Pauli::X => (y, x),
                    Pauli::Y => (-i * y, i * x),
                    Pauli::Z => (x, -y),
                };
                self.amps[idx] = nx;
                self.amps[idx | b] = ny;
            }
        }
        Ok(())
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        self.apply_1q(q, &hadamard())
    }

    pub fn apply_s(&mut self, q: usize) -> Result<()> {
        self.apply_1q(q, &phase_s())
    }

    pub fn apply_sdg(&mut self, q: usize) -> Result<()> {
        self.apply_1q(q, &mat2_adjoint(&phase_s()))
    }

    /// `U` on every qubit.
    pub fn apply_1q_all(&mut self, m: &Mat2) -> Result<()> {
        for q in 0..self.n {
            self.apply_1q(q, m)?;
        }
        Ok(())
    }

    /// Exact CNOT, used only as a reference.
    pub fn apply_cnot_oracle(&mut self, ctrl: usize, tgt: usize) -> Result<()> {
        self.check_pair(ctrl, tgt)?;
        let (bc, bt) = (1usize << ctrl, 1usize << tgt);
        for idx in 0..self.amps.len() {
            if idx & bc != 0 && idx & bt == 0 {
                self.amps.swap(idx, idx | bt);
            }
        }
        Ok(())
    }

    // ---- single-qubit measurements ---------------------------------------

    /// Probability of eigenvalue `sign` of `P` on qubit `q`.
    pub fn pauli1_prob(&self, q: usize, p: Pauli, sign: i8) -> Result<f64> {
        self.check_qubit(q)?;
        let b = 1usize << q;
        let s = if sign >= 0 { 1.0 } else { -1.0 };
        let mut ev = 0.0;
        let mut tot = 0.0;
        for idx in 0..self.amps.len() {
            if idx & b == 0 {
                let (x, y) = (self.amps[idx], self.amps[idx | b]);
                tot += x.norm_sqr() + y.norm_sqr();
                ev += match p {
                    Pauli::Z => x.norm_sqr() - y.norm_sqr(),
                    Pauli::X => 2.0 * (x.conj() * y).re,
                    Pauli::Y => 2.0 * (x.conj() * y).im,
                };
            }
        }
        if tot <= 0.0 {
            return Ok(0.0);
        }
        Ok(((1.0 + s * ev / tot) * 0.5).clamp(0.0, 1.0))
    }

    fn project_pauli1(&mut self, q: usize, p: Pauli, sign: i8) {
        // (I + s P)/2
        let b = 1usize << q;
        let s = if sign >= 0 { 1.0 } else { -1.0 };
        let i = C64::new(0.0, 1.0);
        for idx in 0..self.amps.len() {
            if idx & b == 0 {
                let (x, y) = (self.amps[idx], self.amps[idx | b]);
                let (px, py) = match p {
                    Pauli::X => (y, x),
                    Pauli::Y => (-i * y, i * x),
                    Pauli::Z => (x, -y),
                };
                self.amps[idx] = (x + px * s) * 0.5;
                self.amps[idx | b] = (y + py * s) * 0.5;
            }
        }
    }

    fn commit_pauli1(&mut self, q: usize, p: Pauli, sign: i8, w: f64, forced: bool) -> Result<()> {
        self.project_pauli1(q, p, sign);
        self.normalize()?;
        self.branch_weight *= w;
        self.transcript.push(p.tag(), [q, q], Outcome::from_sign(sign), w, forced);
        Ok(())
    }

    pub fn measure_pauli1(&mut self, q: usize, p: Pauli, rng: &mut StreamRng) -> Result<i8> {
        let wp = self.pauli1_prob(q, p, 1)?;
        if self.norm_sq < CORRUPT_TOL {
            return Err(StpError::Numerical("measuring a zero state".into()));
        }
        let sign = if rng.uniform() < wp { 1 } else { -1 };
        let w = if sign > 0 { wp } else { 1.0 - wp };
        self.commit_pauli1(q, p, sign, w, false)?;
        Ok(sign)
    }

    pub fn postselect_pauli1(&mut self, q: usize, p: Pauli, sign: i8) -> Result<f64> {
        let w = self.pauli1_prob(q, p, sign)?;
        if w <= ZERO_TOL {
            return Err(StpError::ZeroBranch { weight: w, tol: ZERO_TOL });
        }
        self.commit_pauli1(q, p, sign, w, true)?;
        Ok(w)
    }

    /// Projects qubits of `subset` onto total Hamming weight `ones`
    /// (an S_z eigenspace), renormalizing. Returns the branch weight.
    pub fn project_hamming(&mut self, subset: &[usize], ones: usize) -> Result<f64> {
        let mask = self.subset_mask(subset)?;
        let before = self.norm_sq;
        for (idx, a) in self.amps.iter_mut().enumerate() {
            if (idx & mask).count_ones() as usize != ones {
                *a = C64::new(0.0, 0.0);
            }
        }
        let after = self.recompute_norm();
        let w = if before > 0.0 { after / before } else { 0.0 };
        if w <= ZERO_TOL {
            return Err(StpError::ZeroBranch { weight: w, tol: ZERO_TOL });
        }
        self.normalize()?;
        self.branch_weight *= w;
        Ok(w)
    }

    /// Distribution of Hamming weight over `subset`.
    pub fn hamming_distribution(&self, subset: &[usize]) -> Result<Vec<f64>> {
        let mask = self.subset_mask(subset)?;
        let mut d = vec![0.0; subset.len() + 1];
        for (idx, a) in self.amps.iter().enumerate() {
            d[(idx & mask).count_ones() as usize] += a.norm_sqr();
        }
        let tot: f64 = d.iter().sum();
        if tot > 0.0 {
            d.iter_mut().for_each(|x| *x /= tot);
        }
        Ok(d)
    }

    fn subset_mask(&self, subset: &[usize]) -> Result<usize> {
        let mut mask = 0usize;
        for &q in subset {
            self.check_qubit(q)?;
            if mask & (1 << q) != 0 {
                return Err(precondition(format!("qubit {q} repeated in subset")));
            }
            mask |= 1 << q;
        }
        Ok(mask)
    }

    // ---- spin oracles -----------------------------------------------------

    /// `S^2 psi` restricted to `subset`, unnormalized.
    pub fn total_spin_sq_apply(&self, subset: &[usize]) -> Result<Vec<C64>> {
        self.subset_mask(subset)?;
        let m = subset.len() as f64;
        let c = 0.75 * m - m * (m - 1.0) / 4.0;
        let mut out: Vec<C64> = self.amps.iter().map(|a| a * c).collect();
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                let (bi, bj) = (1usize << i, 1usize << j);
                for (idx, amp) in self.amps.iter().enumerate() {
                    let src = if (idx & bi != 0) != (idx & bj != 0) { idx ^ bi ^ bj } else { idx };
                    out[src] += amp;
                }
            }
        }
        Ok(out)
    }

    /// `<psi|S^2|psi> / <psi|psi>` on `subset`.
    pub fn total_spin_sq_expect(&self, subset: &[usize]) -> Result<f64> {
        let v = self.total_spin_sq_apply(subset)?;
        let num: f64 = self.amps.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum();
        Ok(num / self.norm_sq)
    }

    /// Projector onto total spin `twice_s / 2` of `subset`, applied without
    /// renormalizing via the Lagrange polynomial in `S^2`.
    fn spin_sector_vector(&self, subset: &[usize], twice_s: usize) -> Result<Vec<C64>> {
        let m = subset.len();
        if twice_s > m || !(m - twice_s).is_multiple_of(2) {
            return Err(precondition(format!("spin sector 2S={twice_s} impossible for {m} qubits")));
        }
        let eig = |ts: usize| {
            let s = ts as f64 / 2.0;
            s * (s + 1.0)
        };
        let target = eig(twice_s);
        let mut cur = self.clone();
        for ts in (m % 2..=m).step_by(2) {
            if ts == twice_s {
                continue;
            }
            let lam = eig(ts);
            let v = cur.total_spin_sq_apply(subset)?;
            let d = target - lam;
            let amps: Vec<C64> = v.iter().zip(&cur.amps).map(|(x, a)| (x - a * lam) / d).collect();
            cur.amps = amps;
        }
        Ok(cur.amps)
    }

    pub fn spin_sector_weight(&self, subset: &[usize], twice_s: usize) -> Result<f64> {
        let v = self.spin_sector_vector(subset, twice_s)?;
        Ok(sum_norm(&v) / self.norm_sq)
    }

    pub fn project_spin_sector(&mut self, subset: &[usize], twice_s: usize) -> Result<f64> {
        let v = self.spin_sector_vector(subset, twice_s)?;
        let w = sum_norm(&v) / self.norm_sq;
        if w <= CORRUPT_TOL {
            return Err(StpError::ZeroBranch { weight: w, tol: CORRUPT_TOL });
        }
        self.amps = v;
        self.normalize()?;
        self.branch_weight *= w;
        Ok(w)
    }

    // ---- comparisons ------------------------------------------------------

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<a|b>|^2 / (|a|^2 |b|^2)`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        if self.n != other.n {
            return 0.0;
        }
        let ov = self.inner(other).norm_sqr();
        (ov / (self.norm_sq * other.norm_sq)).clamp(0.0, 1.0)
    }

    // ---- qubit bookkeeping ------------------------------------------------

    /// Qubit `q` of `self` becomes qubit `perm[q]`.
    pub fn permute_qubits(&mut self, perm: &[usize]) -> Result<()> {
        if perm.len() != self.n {
            return Err(precondition("permutation length mismatch"));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(precondition("not a permutation"));
            }
            seen[p] = true;
        }
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            let mut nidx = 0usize;
            for (q, &p) in perm.iter().enumerate() {
                nidx |= (idx >> q & 1) << p;
            }
            out[nidx] = *a;
        }
        self.amps = out;
        Ok(())
    }

    /// Splits `self = kept (x) rest` where `kept` is on `keep` (in the
    /// given order) and `rest` on the remaining qubits in ascending order.
    /// Fails if the state is not a product across that cut.
    pub fn factor_out(&self, keep: &[usize]) -> Result<(StateVector, StateVector)> {
        let keep_mask = self.subset_mask(keep)?;
        let rest: Vec<usize> = (0..self.n).filter(|q| keep_mask & (1 << q) == 0).collect();
        let (nk, nr) = (keep.len(), rest.len());
        let gather = |idx: usize, qs: &[usize]| -> usize {
            qs.iter().enumerate().fold(0, |acc, (k, &q)| acc | (idx >> q & 1) << k)
        };
        // M[k][r] as columns indexed by r
        let mut m = vec![vec![C64::new(0.0, 0.0); 1 << nk]; 1 << nr];
        for (idx, a) in self.amps.iter().enumerate() {
            m[gather(idx, &rest)][gather(idx, keep)] = *a;
        }
        let (best, _) = m
            .iter()
            .enumerate()
            .map(|(r, col)| (r, sum_norm(col)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let u_norm = sum_norm(&m[best]).sqrt();
        if u_norm <= 0.0 {
            return Err(StpError::Numerical("factor_out on a zero state".into()));
        }
        let u: Vec<C64> = m[best].iter().map(|x| x / u_norm).collect();
        let mut resid = 0.0;
        let mut rvec = Vec::with_capacity(1 << nr);
        for col in &m {
            let c: C64 = u.iter().zip(col).map(|(a, b)| a.conj() * b).sum();
            for (a, b) in u.iter().zip(col) {
                resid += (b - a * c).norm_sqr();
            }
            rvec.push(c);
        }
        let tol = 1e-9 * self.norm_sq.max(1e-300);
        if resid > tol {
            return Err(precondition(format!("state is not a product across the cut (residual {resid:e})")));
        }
        let mut kept = StateVector::from_parts(nk, u);
        kept.branch_weight = self.branch_weight;
        kept.transcript = self.transcript.clone();
        let rest_state = StateVector::from_parts(nr, rvec);
        Ok((kept, rest_state))
    }

    // ---- debug dump -------------------------------------------------------

    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        check_capacity(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut b8 = [0u8; 8];
        for _ in 0..1usize << n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            amps.push(C64::new(re, im));
        }
        Ok(Self::from_parts(n, amps))
    }
}

/// `|<a|b>|^2` for normalized inputs.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.fidelity(b)
}
